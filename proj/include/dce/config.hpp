#ifndef DCE_CONFIG_HPP
#define DCE_CONFIG_HPP

// Run configuration: one JSON document per run, schema version 1.
//
// Physical values are SI numbers or strings with a unit suffix and optional
// SI prefix ("0.23nH", "50mK", "11.3GHz", "460nH/m"). Flux also accepts
// "Phi0" and angles accept "deg" or "pi" ("0.25pi"). Grids are a list or
// {"start", "stop", "count"}. parse_config resolves every default, so
// render_config emits plain SI numbers and parse(render(c)) == c.

#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "dce/errors.hpp"
#include "dce/experiments.hpp"
#include "dce/version.hpp"

namespace dce {

struct RunConfig {
  SweepPlan plan;
  std::string output_dir = "dce_output";
  std::string name;      // output file stem; defaults to the protocol name
  unsigned workers = 0;  // 0 = available parallelism

  unsigned resolved_workers() const { return workers == 0 ? default_workers() : workers; }

  /// The plan ready to run: worker count resolved, output stem attached.
  SweepPlan resolved_plan() const {
    SweepPlan p = plan;
    p.workers = resolved_workers();
    p.output = output_dir + "/" + name;
    return p;
  }

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

inline constexpr const char* kOutputDirEnv = "DCE_OUTPUT_DIR";

// --- schema ----------------------------------------------------------------------------

struct SchemaField {
  const char* path;
  const char* unit;
  const char* fallback;
  const char* description;
};

inline constexpr std::array<SchemaField, 40> kSchema{{
    {"version", "", "1", "schema version, must be 1"},
    {"protocol", "", "squeezing_vs_power", "cw_map | spectral_scan | squeezing_vs_power | phase_map"},
    {"mode", "", "theory", "theory | montecarlo | both"},
    {"seed", "", "1", "master seed (unsigned 64-bit)"},
    {"workers", "", "0", "worker threads, 0 = available parallelism"},
    {"output_dir", "", "$DCE_OUTPUT_DIR or dce_output", "directory for result files"},
    {"name", "", "<protocol>", "output file stem"},
    {"device.L_J0", "H", "0.23nH", "SQUID Josephson inductance at zero flux"},
    {"device.L_0", "H/m", "460nH/m", "line inductance per length"},
    {"device.C_0", "F/m", "L_0/2500 (50 ohm)", "line capacitance per length"},
    {"device.flux_bias", "Wb", "0", "static flux bias (accepts Phi0)"},
    {"drive.f_d", "Hz", "10.3GHz", "drive frequency"},
    {"drive.delta_len", "m", "from velocity_ratio", "electrical-length modulation amplitude"},
    {"drive.velocity_ratio", "", "0.05", "v_e/c_0, alternative to delta_len"},
    {"drive.theta_d", "rad", "0", "drive phase"},
    {"environment.kind", "", "flat", "flat | resonant"},
    {"environment.resonances[].center", "Hz", "", "resonance center"},
    {"environment.resonances[].q", "", "", "quality factor in [1, 1e6]"},
    {"environment.resonances[].peak", "", "q^2", "|A|^2 at the center"},
    {"thermal.temperature", "K", "50mK", "input field temperature"},
    {"amplifier.noise_temperature", "K", "6K", "amplifier noise temperature"},
    {"amplifier.gain", "", "1", "amplifier power gain (metadata)"},
    {"digitizer.analysis_bandwidth", "Hz", "10MHz", "analysis bandwidth per sideband"},
    {"digitizer.samples_per_channel", "", "1000000", "samples per quadrature channel"},
    {"digitizer.max_lag", "", "32", "largest correlation lag in samples"},
    {"digitizer.antialias_taps", "", "31", "odd FIR length"},
    {"digitizer.chop_period", "s", "50ms", "drive on/off half period"},
    {"analysis.epsilon", "Hz", "20MHz", "sideband offset from f_d/2"},
    {"sweep.drive_frequencies", "Hz", "8.4GHz..12GHz x 10", "cw_map drive axis"},
    {"sweep.delta_lens", "m", "0..drive.delta_len x 6", "drive-strength axis"},
    {"sweep.velocity_ratios", "", "", "drive-strength axis as v_e/c_0 at drive.f_d"},
    {"sweep.drive_powers_db", "dB", "", "drive-strength axis in dB, power ~ delta_len^2"},
    {"sweep.power_reference_db", "dB", "0", "dB value mapped to power_reference_delta_len"},
    {"sweep.power_reference_delta_len", "m", "drive.delta_len", "delta_len at power_reference_db"},
    {"sweep.analysis_frequencies", "Hz", "4GHz..6GHz x 41", "spectral_scan axis"},
    {"sweep.drive_phases", "rad", "0..pi x 9", "phase_map drive phase axis"},
    {"sweep.rotation_phases", "rad", "0..pi x 9", "phase_map digital rotation axis"},
    {"sweep.<grid>.start", "", "", "range form: first value"},
    {"sweep.<grid>.stop", "", "", "range form: last value"},
    {"sweep.<grid>.count", "", "", "range form: number of points (>= 1)"},
}};

inline nlohmann::ordered_json config_schema() {
  nlohmann::ordered_json fields = nlohmann::ordered_json::array();
  for (const auto& f : kSchema)
    fields.push_back({{"path", f.path}, {"unit", f.unit}, {"default", f.fallback}, {"description", f.description}});
  return {{"format", "dce-run-config-schema"},
          {"version", kConfigSchemaVersion},
          {"environment_variables", {{kOutputDirEnv, "default output directory"}}},
          {"fields", fields}};
}

// --- parsing helpers -------------------------------------------------------------------

namespace detail {

inline std::size_t edit_distance(std::string_view a, std::string_view b) {
  std::vector<std::size_t> row(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) row[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t up = row[j];
      row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (a[i - 1] == b[j - 1] ? 0 : 1)});
      diag = up;
    }
  }
  return row[b.size()];
}

inline std::string join_path(const std::string& parent, std::string_view key) {
  return parent.empty() ? std::string(key) : parent + "." + std::string(key);
}

inline void check_keys(const nlohmann::json& obj, const std::string& path,
                       std::initializer_list<std::string_view> allowed) {
  if (!obj.is_object()) throw SchemaError(path.empty() ? "<document>" : path, "expected an object");
  for (const auto& [key, _] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) != allowed.end()) continue;
    std::string_view best;
    std::size_t best_d = std::string::npos;
    for (auto a : allowed) {
      const auto d = edit_distance(key, a);
      if (d < best_d) best_d = d, best = a;
    }
    std::string reason = "unknown key";
    if (best_d <= std::max<std::size_t>(2, key.size() / 3))
      reason += "; did you mean '" + join_path(path, best) + "'?";
    throw SchemaError(join_path(path, key), reason);
  }
}

inline double prefix_scale(std::string_view p) {
  if (p.empty()) return 1.0;
  if (p == "p") return 1e-12;
  if (p == "n") return 1e-9;
  if (p == "u" || p == "\xC2\xB5" || p == "\xCE\xBC") return 1e-6;
  if (p == "m") return 1e-3;
  if (p == "k") return 1e3;
  if (p == "M") return 1e6;
  if (p == "G") return 1e9;
  if (p == "T") return 1e12;
  return 0.0;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

/// SI value of a number or "<number><prefix><unit>" string.
inline double parse_quantity(const nlohmann::json& v, std::string_view unit, const std::string& path,
                             double flux_quantum = constants::flux_quantum) {
  if (v.is_number()) return v.get<double>();
  if (!v.is_string()) throw SchemaError(path, "expected a number or a string with units");
  const std::string text = v.get<std::string>();
  std::string_view s = trim(text);
  double x = 0.0;
  const char* begin = s.data();
  if (!s.empty() && s.front() == '+') ++begin;
  auto [ptr, ec] = std::from_chars(begin, s.data() + s.size(), x);
  if (ec != std::errc{}) throw SchemaError(path, "cannot read a number from '" + text + "'");
  const std::string_view suffix = trim(std::string_view(ptr, std::size_t(s.data() + s.size() - ptr)));
  if (suffix.empty()) return x;
  if (unit == "rad") {
    if (suffix == "rad") return x;
    if (suffix == "mrad") return x * 1e-3;
    if (suffix == "deg") return x * constants::pi / 180.0;
    if (suffix == "pi") return x * constants::pi;
  }
  if (unit == "Wb" && suffix == "Phi0") return x * flux_quantum;
  if (!unit.empty() && suffix.size() >= unit.size() && suffix.substr(suffix.size() - unit.size()) == unit) {
    const double scale = prefix_scale(suffix.substr(0, suffix.size() - unit.size()));
    if (scale != 0.0) return x * scale;
  }
  throw SchemaError(path, "unit '" + std::string(suffix) + "' is not valid here (expected " +
                              (unit.empty() ? std::string("a plain number") : std::string(unit)) + ")");
}

template <typename T>
T parse_integer(const nlohmann::json& v, const std::string& path) {
  if (!v.is_number_integer()) throw SchemaError(path, "expected an integer");
  if (v.is_number_unsigned()) return T(v.get<std::uint64_t>());
  const auto i = v.get<std::int64_t>();
  if (i < 0) throw SchemaError(path, "must be >= 0");
  return T(i);
}

inline std::string parse_string(const nlohmann::json& v, const std::string& path) {
  if (!v.is_string()) throw SchemaError(path, "expected a string");
  return v.get<std::string>();
}

inline std::vector<double> linspace(double a, double b, std::size_t n) {
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = n == 1 ? a : a + (b - a) * double(i) / double(n - 1);
  return out;
}

inline std::vector<double> parse_grid(const nlohmann::json& v, std::string_view unit, const std::string& path) {
  std::vector<double> g;
  if (v.is_array()) {
    for (std::size_t i = 0; i < v.size(); ++i)
      g.push_back(parse_quantity(v[i], unit, path + "[" + std::to_string(i) + "]"));
  } else if (v.is_object()) {
    check_keys(v, path, {"start", "stop", "count"});
    for (auto k : {"start", "stop", "count"})
      if (!v.contains(k)) throw SchemaError(path + "." + k, "missing in range form");
    const auto n = parse_integer<std::size_t>(v["count"], path + ".count");
    if (n == 0) throw SchemaError(path + ".count", "must be >= 1");
    g = linspace(parse_quantity(v["start"], unit, path + ".start"), parse_quantity(v["stop"], unit, path + ".stop"), n);
  } else {
    throw SchemaError(path, "expected a list or {start, stop, count}");
  }
  if (g.empty()) throw SchemaError(path, "grid is empty");
  for (std::size_t i = 1; i < g.size(); ++i)
    if ((g[1] > g[0]) ? !(g[i] > g[i - 1]) : !(g[i] < g[i - 1]))
      throw SchemaError(path, "grid must be strictly monotone");
  return g;
}

inline const nlohmann::json& section(const nlohmann::json& doc, const char* key) {
  static const nlohmann::json empty = nlohmann::json::object();
  return doc.contains(key) ? doc[key] : empty;
}

/// Wraps an invalid_argument from a module-level validator as a schema error.
template <typename Fn>
void validated(const std::string& path, Fn&& fn) {
  try {
    fn();
  } catch (const std::invalid_argument& e) {
    throw SchemaError(path, e.what());
  }
}

}  // namespace detail

// --- parse -------------------------------------------------------------------------------

inline RunConfig parse_config_json(const nlohmann::json& doc) {
  using detail::parse_quantity;
  detail::check_keys(doc, "",
                     {"version", "protocol", "mode", "seed", "workers", "output_dir", "name", "device", "drive",
                      "environment", "thermal", "amplifier", "digitizer", "analysis", "sweep"});
  if (!doc.contains("version")) throw VersionError("config has no \"version\" field (current version is 1)");
  if (!doc["version"].is_number_integer() || doc["version"].get<std::int64_t>() != kConfigSchemaVersion)
    throw VersionError("unsupported config version " + doc["version"].dump() + " (supported: 1)");

  RunConfig cfg;
  SweepPlan& p = cfg.plan;

  if (doc.contains("protocol")) {
    const auto s = detail::parse_string(doc["protocol"], "protocol");
    auto v = protocol_from_string(s);
    if (!v) throw SchemaError("protocol", "unknown protocol '" + s + "'");
    p.protocol = *v;
  }
  if (doc.contains("mode")) {
    const auto s = detail::parse_string(doc["mode"], "mode");
    auto v = mode_from_string(s);
    if (!v) throw SchemaError("mode", "unknown mode '" + s + "' (theory | montecarlo | both)");
    p.mode = *v;
  }
  if (doc.contains("seed")) p.seed = detail::parse_integer<std::uint64_t>(doc["seed"], "seed");
  if (doc.contains("workers")) cfg.workers = detail::parse_integer<unsigned>(doc["workers"], "workers");
  if (doc.contains("output_dir")) {
    cfg.output_dir = detail::parse_string(doc["output_dir"], "output_dir");
  } else if (const char* env = std::getenv(kOutputDirEnv); env && *env) {
    cfg.output_dir = env;
  }
  cfg.name = doc.contains("name") ? detail::parse_string(doc["name"], "name") : std::string(to_string(p.protocol));
  if (cfg.name.empty() || cfg.name.find('/') != std::string::npos)
    throw SchemaError("name", "must be a non-empty file stem without '/'");

  {
    const auto& s = detail::section(doc, "device");
    detail::check_keys(s, "device", {"L_J0", "L_0", "C_0", "flux_bias"});
    const auto def = DeviceParams::reference_device();
    const double lj = s.contains("L_J0") ? parse_quantity(s["L_J0"], "H", "device.L_J0") : def.L_J0();
    const double l0 = s.contains("L_0") ? parse_quantity(s["L_0"], "H/m", "device.L_0") : def.L_0();
    const double c0 = s.contains("C_0") ? parse_quantity(s["C_0"], "F/m", "device.C_0") : l0 / 2500.0;
    const double flux = s.contains("flux_bias") ? parse_quantity(s["flux_bias"], "Wb", "device.flux_bias") : 0.0;
    if (!(lj > 0.0)) throw SchemaError("device.L_J0", "must be > 0");
    if (!(l0 > 0.0)) throw SchemaError("device.L_0", "must be > 0");
    if (!(c0 > 0.0)) throw SchemaError("device.C_0", "must be > 0");
    detail::validated("device", [&] { p.device = DeviceParams(lj, l0, c0, flux); });
    try {
      electrical_length(flux, p.device);
    } catch (const DegenerateFlux& e) {
      throw SchemaError("device.flux_bias", e.what());
    }
  }
  {
    const auto& s = detail::section(doc, "drive");
    detail::check_keys(s, "drive", {"f_d", "delta_len", "velocity_ratio", "theta_d"});
    const double fd = s.contains("f_d") ? parse_quantity(s["f_d"], "Hz", "drive.f_d") : 10.3e9;
    if (!(fd > 0.0)) throw SchemaError("drive.f_d", "must be > 0");
    p.drive.omega_d = constants::two_pi * fd;
    if (s.contains("delta_len") && s.contains("velocity_ratio"))
      throw SchemaError("drive.velocity_ratio", "give either delta_len or velocity_ratio, not both");
    if (s.contains("delta_len")) {
      p.drive.delta_len = parse_quantity(s["delta_len"], "m", "drive.delta_len");
    } else {
      const double ratio = s.contains("velocity_ratio") ? parse_quantity(s["velocity_ratio"], "", "drive.velocity_ratio") : 0.05;
      if (!(ratio >= 0.0 && ratio < 1.0)) throw SchemaError("drive.velocity_ratio", "must lie in [0, 1)");
      p.drive.delta_len = ratio * p.device.c_0() / p.drive.omega_d;
    }
    if (!(p.drive.delta_len >= 0.0)) throw SchemaError("drive.delta_len", "must be >= 0");
    p.drive.theta_d = s.contains("theta_d") ? parse_quantity(s["theta_d"], "rad", "drive.theta_d") : 0.0;
    detail::validated("drive", [&] { check_drive(p.drive, p.device); });
  }
  {
    const auto& s = detail::section(doc, "environment");
    detail::check_keys(s, "environment", {"kind", "resonances"});
    const std::string kind = s.contains("kind") ? detail::parse_string(s["kind"], "environment.kind") : "flat";
    if (kind == "flat") {
      p.environment = SpectralEnvironment::flat();
      if (s.contains("resonances") && !s["resonances"].empty())
        throw SchemaError("environment.resonances", "only allowed with kind \"resonant\"");
    } else if (kind == "resonant") {
      p.environment.kind = SpectralEnvironment::Kind::resonant;
      if (!s.contains("resonances") || !s["resonances"].is_array() || s["resonances"].empty())
        throw SchemaError("environment.resonances", "a resonant environment needs a nonempty list");
      const auto& list = s["resonances"];
      for (std::size_t i = 0; i < list.size(); ++i) {
        const std::string path = "environment.resonances[" + std::to_string(i) + "]";
        detail::check_keys(list[i], path, {"center", "q", "peak"});
        if (!list[i].contains("center")) throw SchemaError(path + ".center", "required");
        if (!list[i].contains("q")) throw SchemaError(path + ".q", "required");
        Resonance r;
        r.center = constants::two_pi * parse_quantity(list[i]["center"], "Hz", path + ".center");
        r.quality_factor = parse_quantity(list[i]["q"], "", path + ".q");
        r.peak = list[i].contains("peak") ? parse_quantity(list[i]["peak"], "", path + ".peak")
                                          : r.quality_factor * r.quality_factor;
        p.environment.resonances.push_back(r);
      }
      detail::validated("environment.resonances", [&] { p.environment.validate(); });
    } else {
      throw SchemaError("environment.kind", "must be \"flat\" or \"resonant\"");
    }
  }
  {
    const auto& s = detail::section(doc, "thermal");
    detail::check_keys(s, "thermal", {"temperature"});
    p.temperature = s.contains("temperature") ? parse_quantity(s["temperature"], "K", "thermal.temperature") : 0.05;
    if (!(p.temperature >= 0.0)) throw SchemaError("thermal.temperature", "must be >= 0 K");
  }
  {
    const auto& s = detail::section(doc, "amplifier");
    detail::check_keys(s, "amplifier", {"noise_temperature", "gain"});
    p.amplifier.noise_temperature =
        s.contains("noise_temperature") ? parse_quantity(s["noise_temperature"], "K", "amplifier.noise_temperature") : 6.0;
    p.amplifier.gain = s.contains("gain") ? parse_quantity(s["gain"], "", "amplifier.gain") : 1.0;
    if (!(p.amplifier.noise_temperature >= 0.0)) throw SchemaError("amplifier.noise_temperature", "must be >= 0 K");
    if (!(p.amplifier.gain > 0.0)) throw SchemaError("amplifier.gain", "must be > 0");
  }
  {
    const auto& s = detail::section(doc, "digitizer");
    detail::check_keys(s, "digitizer",
                       {"analysis_bandwidth", "samples_per_channel", "max_lag", "antialias_taps", "chop_period"});
    auto& d = p.digitizer;
    if (s.contains("analysis_bandwidth"))
      d.analysis_bandwidth = parse_quantity(s["analysis_bandwidth"], "Hz", "digitizer.analysis_bandwidth");
    if (s.contains("samples_per_channel"))
      d.samples_per_channel = detail::parse_integer<std::size_t>(s["samples_per_channel"], "digitizer.samples_per_channel");
    if (s.contains("max_lag")) d.max_lag = detail::parse_integer<std::size_t>(s["max_lag"], "digitizer.max_lag");
    if (s.contains("antialias_taps"))
      d.antialias_taps = detail::parse_integer<std::size_t>(s["antialias_taps"], "digitizer.antialias_taps");
    if (s.contains("chop_period")) d.chop_period = parse_quantity(s["chop_period"], "s", "digitizer.chop_period");
    d.rng_seed = p.seed;
    detail::validated("digitizer", [&] { d.validate(); });
  }
  {
    const auto& s = detail::section(doc, "analysis");
    detail::check_keys(s, "analysis", {"epsilon"});
    const double eps_hz = s.contains("epsilon") ? parse_quantity(s["epsilon"], "Hz", "analysis.epsilon") : 20e6;
    p.epsilon = constants::two_pi * eps_hz;
    if (!(p.epsilon > 0.0 && p.epsilon < p.drive.omega_d / 2.0))
      throw SchemaError("analysis.epsilon", "must lie in (0, f_d/2)");
  }
  {
    const auto& s = detail::section(doc, "sweep");
    detail::check_keys(s, "sweep",
                       {"drive_frequencies", "delta_lens", "velocity_ratios", "drive_powers_db", "power_reference_db",
                        "power_reference_delta_len", "analysis_frequencies", "drive_phases", "rotation_phases"});
    using detail::linspace;
    using detail::parse_grid;
    p.drive_frequencies = s.contains("drive_frequencies") ? parse_grid(s["drive_frequencies"], "Hz", "sweep.drive_frequencies")
                                                          : linspace(8.4e9, 12e9, 10);
    const int strength_axes = int(s.contains("delta_lens")) + int(s.contains("velocity_ratios")) +
                              int(s.contains("drive_powers_db"));
    if (strength_axes > 1)
      throw SchemaError("sweep.delta_lens", "give only one of delta_lens, velocity_ratios, drive_powers_db");
    if (s.contains("delta_lens")) {
      p.delta_lens = parse_grid(s["delta_lens"], "m", "sweep.delta_lens");
    } else if (s.contains("velocity_ratios")) {
      for (double r : parse_grid(s["velocity_ratios"], "", "sweep.velocity_ratios"))
        p.delta_lens.push_back(r * p.device.c_0() / p.drive.omega_d);
    } else if (s.contains("drive_powers_db")) {
      const double ref_db =
          s.contains("power_reference_db") ? parse_quantity(s["power_reference_db"], "dB", "sweep.power_reference_db") : 0.0;
      const double ref_len = s.contains("power_reference_delta_len")
                                 ? parse_quantity(s["power_reference_delta_len"], "m", "sweep.power_reference_delta_len")
                                 : p.drive.delta_len;
      for (double db : parse_grid(s["drive_powers_db"], "dB", "sweep.drive_powers_db"))
        p.delta_lens.push_back(delta_len_from_power_db(db, ref_db, ref_len));
    } else {
      p.delta_lens = linspace(0.0, p.drive.delta_len, 6);
      if (p.drive.delta_len == 0.0) p.delta_lens = {0.0};
    }
    if (!s.contains("drive_powers_db") && (s.contains("power_reference_db") || s.contains("power_reference_delta_len")))
      throw SchemaError("sweep.power_reference_db", "only meaningful together with drive_powers_db");
    for (std::size_t i = 0; i < p.delta_lens.size(); ++i)
      if (!(p.delta_lens[i] >= 0.0))
        throw SchemaError("sweep.delta_lens[" + std::to_string(i) + "]", "must be >= 0");
    p.analysis_frequencies = s.contains("analysis_frequencies")
                                 ? parse_grid(s["analysis_frequencies"], "Hz", "sweep.analysis_frequencies")
                                 : linspace(4e9, 6e9, 41);
    p.drive_phases = s.contains("drive_phases") ? parse_grid(s["drive_phases"], "rad", "sweep.drive_phases")
                                                : linspace(0.0, constants::pi, 9);
    p.rotation_phases = s.contains("rotation_phases") ? parse_grid(s["rotation_phases"], "rad", "sweep.rotation_phases")
                                                      : linspace(0.0, constants::pi, 9);
  }
  detail::validated("sweep", [&] { p.validate(); });
  return cfg;
}

inline RunConfig parse_config(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    // Convert the byte offset into a line number for the diagnostic.
    std::size_t line = 1;
    for (std::size_t i = 0; i < std::min<std::size_t>(e.byte, text.size()); ++i) line += text[i] == '\n';
    throw SchemaError("<document>", "line " + std::to_string(line) + ": " + e.what());
  }
  return parse_config_json(doc);
}

// --- render ----------------------------------------------------------------------------

namespace detail {

/// Frequency in Hz that parses back to exactly `omega` (= 2 pi f).
inline double hz_for(double omega) {
  const double f = omega / constants::two_pi;
  double lo = f, hi = f;
  for (int i = 0; i < 8; ++i) {
    if (constants::two_pi * lo == omega) return lo;
    if (constants::two_pi * hi == omega) return hi;
    lo = std::nextafter(lo, -INFINITY);
    hi = std::nextafter(hi, INFINITY);
  }
  return f;
}

}  // namespace detail

/// Fully resolved document in plain SI numbers.
inline nlohmann::ordered_json render_config_json(const RunConfig& c) {
  const auto& p = c.plan;
  nlohmann::ordered_json res = nlohmann::ordered_json::array();
  for (const auto& r : p.environment.resonances)
    res.push_back({{"center", detail::hz_for(r.center)}, {"q", r.quality_factor}, {"peak", r.peak}});
  nlohmann::ordered_json env = {{"kind", p.environment.kind == SpectralEnvironment::Kind::flat ? "flat" : "resonant"}};
  if (!res.empty()) env["resonances"] = res;
  return {
      {"version", kConfigSchemaVersion},
      {"protocol", to_string(p.protocol)},
      {"mode", to_string(p.mode)},
      {"seed", p.seed},
      {"workers", c.workers},
      {"output_dir", c.output_dir},
      {"name", c.name},
      {"device",
       {{"L_J0", p.device.L_J0()}, {"L_0", p.device.L_0()}, {"C_0", p.device.C_0()}, {"flux_bias", p.device.flux_bias()}}},
      {"drive",
       {{"f_d", detail::hz_for(p.drive.omega_d)}, {"delta_len", p.drive.delta_len}, {"theta_d", p.drive.theta_d}}},
      {"environment", env},
      {"thermal", {{"temperature", p.temperature}}},
      {"amplifier", {{"noise_temperature", p.amplifier.noise_temperature}, {"gain", p.amplifier.gain}}},
      {"digitizer",
       {{"analysis_bandwidth", p.digitizer.analysis_bandwidth},
        {"samples_per_channel", p.digitizer.samples_per_channel},
        {"max_lag", p.digitizer.max_lag},
        {"antialias_taps", p.digitizer.antialias_taps},
        {"chop_period", p.digitizer.chop_period}}},
      {"analysis", {{"epsilon", detail::hz_for(p.epsilon)}}},
      {"sweep",
       {{"drive_frequencies", p.drive_frequencies},
        {"delta_lens", p.delta_lens},
        {"analysis_frequencies", p.analysis_frequencies},
        {"drive_phases", p.drive_phases},
        {"rotation_phases", p.rotation_phases}}}};
}

inline std::string render_config(const RunConfig& c) { return render_config_json(c).dump(2) + "\n"; }

// --- overrides ----------------------------------------------------------------------------

/// Applies "a.b.c=value" to a config document. The value is read as JSON
/// when it parses as JSON and as a plain string otherwise, so both
/// drive.f_d=11.3e9 and drive.f_d=11.3GHz work.
inline void apply_override(nlohmann::json& doc, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0)
    throw SchemaError(std::string(assignment), "override must look like path.to.key=value");
  const std::string path(detail::trim(assignment.substr(0, eq)));
  const std::string raw(detail::trim(assignment.substr(eq + 1)));
  nlohmann::json value;
  try {
    value = nlohmann::json::parse(raw);
  } catch (const nlohmann::json::parse_error&) {
    value = raw;
  }
  nlohmann::json* node = &doc;
  std::size_t start = 0;
  while (true) {
    const auto dot = path.find('.', start);
    const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (key.empty()) throw SchemaError(path, "empty path component");
    if (!node->is_object()) throw SchemaError(path, "cannot descend into a non-object");
    if (dot == std::string::npos) {
      (*node)[key] = value;
      return;
    }
    node = &(*node)[key];
    if (node->is_null()) *node = nlohmann::json::object();
    start = dot + 1;
  }
}

inline RunConfig parse_config(std::string_view text, const std::vector<std::string>& overrides) {
  if (overrides.empty()) return parse_config(text);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error&) {
    return parse_config(text);  // reports the located parse error
  }
  for (const auto& o : overrides) apply_override(doc, o);
  return parse_config_json(doc);
}

}  // namespace dce

#endif  // DCE_CONFIG_HPP
