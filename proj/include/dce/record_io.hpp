#ifndef DCE_RECORD_IO_HPP
#define DCE_RECORD_IO_HPP

// VoltageRecord files.
//
// Binary layout (version 1, all integers and floats little-endian):
//   offset  size  field
//   0       8     magic "DCEVREC\0"
//   8       4     u32 format version (1)
//   12      4     u32 channel count (4)
//   16      8     u64 samples per channel
//   24      8     u64 rng seed
//   32      4     u32 provenance length P
//   36      P     provenance, UTF-8 JSON
//   36+P    ...   channels i_plus, q_plus, i_minus, q_minus, each
//                 `samples` IEEE-754 float64 values (columnar)
//
// CSV fallback: one header line "i_plus,q_plus,i_minus,q_minus", then one
// row per sample, values printed with 17 significant digits. The CSV carries
// no provenance.

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "json.hpp"

#include "dce/measurement.hpp"

namespace dce {

inline constexpr std::array<char, 8> kRecordMagic{'D', 'C', 'E', 'V', 'R', 'E', 'C', '\0'};
inline constexpr std::uint32_t kRecordFormatVersion = 1;

inline nlohmann::ordered_json to_json(const DigitizerConfig& c) {
  return {{"analysis_bandwidth_hz", c.analysis_bandwidth},
          {"samples_per_channel", c.samples_per_channel},
          {"max_lag", c.max_lag},
          {"antialias_taps", c.antialias_taps},
          {"rng_seed", c.rng_seed},
          {"chop_period_s", c.chop_period}};
}

inline DigitizerConfig digitizer_from_json(const nlohmann::json& j) {
  DigitizerConfig c;
  c.analysis_bandwidth = j.at("analysis_bandwidth_hz").get<double>();
  c.samples_per_channel = j.at("samples_per_channel").get<std::size_t>();
  c.max_lag = j.at("max_lag").get<std::size_t>();
  c.antialias_taps = j.at("antialias_taps").get<std::size_t>();
  c.rng_seed = j.at("rng_seed").get<std::uint64_t>();
  c.chop_period = j.at("chop_period_s").get<double>();
  return c;
}

inline nlohmann::ordered_json to_json(const RecordProvenance& p) {
  return {{"seed", p.seed},
          {"digitizer", to_json(p.config)},
          {"source_id", p.source_id},
          {"center_frequency_rad_s", p.center_frequency},
          {"added_quanta", p.added_quanta}};
}

namespace detail {

template <typename T>
void put_le(std::ostream& os, T value) {
  auto bits = std::bit_cast<std::array<unsigned char, sizeof(T)>>(value);
  if constexpr (std::endian::native == std::endian::big) std::reverse(bits.begin(), bits.end());
  os.write(reinterpret_cast<const char*>(bits.data()), bits.size());
}

template <typename T>
T get_le(std::istream& is) {
  std::array<unsigned char, sizeof(T)> bits;
  if (!is.read(reinterpret_cast<char*>(bits.data()), bits.size()))
    throw FormatError("record file truncated");
  if constexpr (std::endian::native == std::endian::big) std::reverse(bits.begin(), bits.end());
  return std::bit_cast<T>(bits);
}

}  // namespace detail

inline void write_record_binary(std::ostream& os, const VoltageRecord& rec) {
  rec.validate();
  const std::string prov = to_json(rec.provenance).dump();
  os.write(kRecordMagic.data(), kRecordMagic.size());
  detail::put_le<std::uint32_t>(os, kRecordFormatVersion);
  detail::put_le<std::uint32_t>(os, 4);
  detail::put_le<std::uint64_t>(os, rec.size());
  detail::put_le<std::uint64_t>(os, rec.provenance.seed);
  detail::put_le<std::uint32_t>(os, std::uint32_t(prov.size()));
  os.write(prov.data(), std::streamsize(prov.size()));
  for (const auto& ch : rec.channels)
    for (double x : ch) detail::put_le<double>(os, x);
  if (!os) throw FormatError("failed writing record");
}

inline VoltageRecord read_record_binary(std::istream& is) {
  std::array<char, 8> magic{};
  if (!is.read(magic.data(), magic.size()) || magic != kRecordMagic)
    throw FormatError("not a voltage record (bad magic)");
  const auto version = detail::get_le<std::uint32_t>(is);
  if (version != kRecordFormatVersion)
    throw FormatError("unsupported record format version " + std::to_string(version));
  const auto channels = detail::get_le<std::uint32_t>(is);
  if (channels != 4) throw FormatError("expected 4 channels, found " + std::to_string(channels));
  const auto samples = detail::get_le<std::uint64_t>(is);
  const auto seed = detail::get_le<std::uint64_t>(is);
  const auto prov_len = detail::get_le<std::uint32_t>(is);
  std::string prov(prov_len, '\0');
  if (!is.read(prov.data(), prov_len)) throw FormatError("record file truncated in provenance");

  VoltageRecord rec;
  try {
    const auto j = nlohmann::json::parse(prov);
    rec.provenance.seed = seed;
    rec.provenance.config = digitizer_from_json(j.at("digitizer"));
    rec.provenance.source_id = j.at("source_id").get<std::string>();
    rec.provenance.center_frequency = j.at("center_frequency_rad_s").get<double>();
    rec.provenance.added_quanta = j.at("added_quanta").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("bad record provenance: ") + e.what());
  }
  for (auto& ch : rec.channels) {
    ch.resize(samples);
    for (auto& x : ch) x = detail::get_le<double>(is);
  }
  rec.validate();
  return rec;
}

inline void write_record_csv(std::ostream& os, const VoltageRecord& rec) {
  rec.validate();
  os << "i_plus,q_plus,i_minus,q_minus\n";
  char buf[32];
  for (std::size_t n = 0; n < rec.size(); ++n) {
    for (int c = 0; c < 4; ++c) {
      auto res = std::to_chars(buf, buf + sizeof buf, rec[c][n], std::chars_format::general, 17);
      os.write(buf, res.ptr - buf);
      os.put(c == 3 ? '\n' : ',');
    }
  }
}

/// Reads the CSV fallback; provenance is left default except the config's
/// sample count, which is set from the data.
inline VoltageRecord read_record_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != "i_plus,q_plus,i_minus,q_minus")
    throw FormatError("CSV record must start with header i_plus,q_plus,i_minus,q_minus");
  VoltageRecord rec;
  std::size_t row = 1;
  while (std::getline(is, line)) {
    ++row;
    if (line.empty()) continue;
    const char* p = line.data();
    const char* end = p + line.size();
    for (int c = 0; c < 4; ++c) {
      double v = 0.0;
      auto res = std::from_chars(p, end, v);
      if (res.ec != std::errc{}) throw FormatError("CSV row " + std::to_string(row) + ": bad number");
      rec.channels[std::size_t(c)].push_back(v);
      p = res.ptr;
      if (c < 3) {
        if (p == end || *p != ',') throw FormatError("CSV row " + std::to_string(row) + ": expected 4 columns");
        ++p;
      }
    }
    if (p != end) throw FormatError("CSV row " + std::to_string(row) + ": trailing data");
  }
  rec.provenance.config.samples_per_channel = rec.size();
  rec.validate();
  return rec;
}

inline void save_record(const std::string& path, const VoltageRecord& rec) {
  const bool csv = path.size() >= 4 && path.substr(path.size() - 4) == ".csv";
  std::ofstream os(path, csv ? std::ios::out : std::ios::binary);
  if (!os) throw FormatError("cannot open " + path + " for writing");
  csv ? write_record_csv(os, rec) : write_record_binary(os, rec);
}

inline VoltageRecord load_record(const std::string& path) {
  const bool csv = path.size() >= 4 && path.substr(path.size() - 4) == ".csv";
  std::ifstream is(path, csv ? std::ios::in : std::ios::binary);
  if (!is) throw FormatError("cannot open " + path);
  return csv ? read_record_csv(is) : read_record_binary(is);
}

// --- CorrelationResult JSON ---------------------------------------------------------

inline nlohmann::ordered_json to_json(const Estimate& e, const char* unit) {
  return {{"value", e.value}, {"se", e.se}, {"unit", unit}};
}

inline nlohmann::ordered_json to_json(const PsiEstimate& e, const char* unit) {
  return {{"re", e.value.real()}, {"im", e.value.imag()}, {"se_re", e.se_re},
          {"se_im", e.se_im},     {"cov_re_im", e.cov_re_im}, {"unit", unit}};
}

/// Version-1 JSON export. Raw moments are in filtered quadrature-variance
/// units ("quanta*gain"); normalized statistics are dimensionless.
inline nlohmann::ordered_json to_json(const CorrelationResult& r) {
  nlohmann::ordered_json lags = nlohmann::ordered_json::object();
  for (const auto& p : r.lags.pairs)
    lags[p.name] = {{"value", p.value}, {"se", p.se}, {"unit", "quanta*gain"}};
  return {{"format", "dce-correlation-result"},
          {"version", 1},
          {"samples", r.samples},
          {"filter_power_gain", r.filter_gain},
          {"amplifier_added_quanta", r.added_quanta},
          {"max_lag", r.lags.max_lag},
          {"lag_unit", "samples"},
          {"cross_correlations", lags},
          {"p_avg_total", {{"value", r.p_avg_total}, {"unit", "quanta*gain"}}},
          {"p_avg_subtracted", {{"value", r.p_avg_subtracted}, {"unit", "quanta*gain"}}},
          {"sigma2_total", to_json(r.sigma2_total, "dimensionless")},
          {"sigma2_subtracted", to_json(r.sigma2_subtracted, "dimensionless")},
          {"sigma1_plus", to_json(r.sigma1_plus, "dimensionless")},
          {"sigma1_minus", to_json(r.sigma1_minus, "dimensionless")},
          {"psi", to_json(r.psi, "quanta*gain")},
          {"psi_normalized", to_json(r.psi_normalized, "dimensionless")}};
}

}  // namespace dce

#endif  // DCE_RECORD_IO_HPP
