#ifndef DCE_EXPERIMENTS_HPP
#define DCE_EXPERIMENTS_HPP

// Sweep protocols: cw power map, chopped spectral scan, squeezing vs drive
// strength, and the (drive phase, digital rotation) map of Psi.
//
// Every grid point gets its own seed derive_seed(plan.seed, index); the two
// records a point may need (drive on / drive off) use derive_seed(point, 0)
// and derive_seed(point, 1). Nothing here depends on the worker count.

#include <algorithm>
#include <chrono>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "dce/gaussian_state.hpp"
#include "dce/measurement.hpp"
#include "dce/parallel.hpp"
#include "dce/physics.hpp"
#include "dce/record_io.hpp"
#include "dce/version.hpp"

namespace dce {

enum class Protocol { cw_map, spectral_scan, squeezing_vs_power, phase_map };
enum class Mode { theory, montecarlo, both };

inline constexpr std::array<std::string_view, 4> kProtocolNames{"cw_map", "spectral_scan",
                                                               "squeezing_vs_power", "phase_map"};
inline constexpr std::array<std::string_view, 3> kModeNames{"theory", "montecarlo", "both"};

inline std::string_view to_string(Protocol p) { return kProtocolNames[std::size_t(p)]; }
inline std::string_view to_string(Mode m) { return kModeNames[std::size_t(m)]; }

inline std::optional<Protocol> protocol_from_string(std::string_view s) {
  for (std::size_t i = 0; i < kProtocolNames.size(); ++i)
    if (kProtocolNames[i] == s) return Protocol(i);
  return std::nullopt;
}
inline std::optional<Mode> mode_from_string(std::string_view s) {
  for (std::size_t i = 0; i < kModeNames.size(); ++i)
    if (kModeNames[i] == s) return Mode(i);
  return std::nullopt;
}

struct SweepPlan {
  Protocol protocol = Protocol::squeezing_vs_power;
  Mode mode = Mode::theory;

  DeviceParams device = DeviceParams::reference_device();
  DriveParams drive;  // fixed values for axes a protocol does not sweep
  SpectralEnvironment environment;
  double temperature = 0.05;  // K
  AmplifierModel amplifier{6.0, 1.0};
  DigitizerConfig digitizer;
  double epsilon = constants::two_pi * 20e6;  // sideband offset, rad/s

  std::vector<double> drive_frequencies;     // Hz (cw_map)
  std::vector<double> delta_lens;            // m (cw_map, squeezing_vs_power)
  std::vector<double> analysis_frequencies;  // Hz (spectral_scan)
  std::vector<double> drive_phases;          // rad (phase_map)
  std::vector<double> rotation_phases;       // rad (phase_map)

  std::uint64_t seed = 1;
  unsigned workers = 1;
  std::string output;  // path stem; empty = do not write

  friend bool operator==(const SweepPlan&, const SweepPlan&) = default;

  bool wants_theory() const { return mode != Mode::montecarlo; }
  bool wants_montecarlo() const { return mode != Mode::theory; }

  void validate() const {
    auto grid = [](const std::vector<double>& g, const char* name) {
      if (g.empty()) throw std::invalid_argument(std::string("sweep grid ") + name + " is empty");
      for (double x : g)
        if (!std::isfinite(x)) throw std::invalid_argument(std::string("sweep grid ") + name + " has a non-finite value");
      if (g.size() > 1) {
        const bool up = g[1] > g[0];
        for (std::size_t i = 1; i < g.size(); ++i)
          if (up ? !(g[i] > g[i - 1]) : !(g[i] < g[i - 1]))
            throw std::invalid_argument(std::string("sweep grid ") + name + " must be strictly monotone");
      }
    };
    switch (protocol) {
      case Protocol::cw_map:
        grid(drive_frequencies, "drive_frequencies");
        grid(delta_lens, "delta_lens");
        break;
      case Protocol::spectral_scan: grid(analysis_frequencies, "analysis_frequencies"); break;
      case Protocol::squeezing_vs_power: grid(delta_lens, "delta_lens"); break;
      case Protocol::phase_map:
        grid(drive_phases, "drive_phases");
        grid(rotation_phases, "rotation_phases");
        break;
    }
    for (double d : delta_lens)
      if (d < 0.0) throw std::invalid_argument("sweep grid delta_lens must be >= 0");
    for (double f : drive_frequencies)
      if (!(f > 0.0)) throw std::invalid_argument("sweep grid drive_frequencies must be > 0");
    for (double f : analysis_frequencies)
      if (!(f > 0.0)) throw std::invalid_argument("sweep grid analysis_frequencies must be > 0");
    if (!(temperature >= 0.0)) throw std::invalid_argument("temperature must be >= 0");
    if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be > 0");
    environment.validate();
    digitizer.validate();
    amplifier.added_quanta(1.0);
  }
};

struct SweepRow {
  std::vector<double> coords;
  std::vector<double> values;  // NaN = not computed (mode) or failed point
  std::string error;           // empty on success

  bool ok() const { return error.empty(); }
};

struct SweepResult {
  Protocol protocol = Protocol::cw_map;
  std::vector<std::string> coord_names;
  std::vector<std::string> value_names;
  std::vector<SweepRow> rows;
  std::uint64_t seed = 0;
  std::string version = kVersion;
  double wall_time = 0.0;  // s; reported, never written to files
  std::vector<std::string> warnings;

  std::size_t value_index(std::string_view name) const {
    for (std::size_t i = 0; i < value_names.size(); ++i)
      if (value_names[i] == name) return i;
    throw std::out_of_range("no sweep column " + std::string(name));
  }
  double value(std::size_t row, std::string_view name) const { return rows.at(row).values[value_index(name)]; }
  std::size_t failures() const {
    return std::size_t(std::count_if(rows.begin(), rows.end(), [](const SweepRow& r) { return !r.ok(); }));
  }
};

namespace detail {

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// Splits `workers` between concurrent grid points and record sampling,
/// keeping concurrent Monte Carlo records under ~1.5 GB.
inline std::pair<unsigned, unsigned> split_workers(const SweepPlan& plan, std::size_t points) {
  const unsigned w = std::max(1u, plan.workers);
  unsigned outer = unsigned(std::min<std::size_t>(w, std::max<std::size_t>(points, 1)));
  if (plan.wants_montecarlo()) {
    const double per_point = 2.0 * 4.0 * 8.0 * double(plan.digitizer.samples_per_channel);
    outer = std::max(1u, std::min(outer, unsigned(1.5e9 / per_point)));
  }
  return {outer, std::max(1u, w / outer)};
}

inline DigitizerConfig record_config(const DigitizerConfig& base, std::uint64_t point_seed, std::uint64_t k) {
  DigitizerConfig c = base;
  c.rng_seed = derive_seed(point_seed, k);
  return c;
}

inline MomentStatistics record_moments(const TwoModeState& state, const SweepPlan& plan,
                                       std::uint64_t point_seed, std::uint64_t k, double center,
                                       unsigned workers) {
  const auto rec = sample_record(covariance_matrix(state), plan.amplifier,
                                 record_config(plan.digitizer, point_seed, k), center, workers);
  return MomentStatistics::compute(rec, workers);
}

template <typename Fn>
SweepResult run_grid(const SweepPlan& plan, std::vector<std::vector<double>> coords,
                     std::vector<std::string> coord_names, std::vector<std::string> value_names, Fn&& fn) {
  const auto t0 = std::chrono::steady_clock::now();
  SweepResult out;
  out.protocol = plan.protocol;
  out.seed = plan.seed;
  out.coord_names = std::move(coord_names);
  out.value_names = std::move(value_names);
  out.rows.resize(coords.size());
  const auto [outer, inner] = split_workers(plan, coords.size());
  parallel_for(coords.size(), outer, [&, inner = inner](std::size_t i) {
    auto& row = out.rows[i];
    row.coords = coords[i];
    row.values.assign(out.value_names.size(), kNaN);
    try {
      fn(i, row.coords, row.values, derive_seed(plan.seed, i), inner);
    } catch (const std::exception& e) {
      row.values.assign(out.value_names.size(), kNaN);
      row.error = e.what();
    }
  });
  out.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

inline void require_protocol(const SweepPlan& plan, Protocol p) {
  if (plan.protocol != p)
    throw std::invalid_argument("plan protocol is " + std::string(to_string(plan.protocol)) + ", expected " +
                                std::string(to_string(p)));
  plan.validate();
}

inline void drive_warning(SweepResult& out, const SweepPlan& plan, const DriveParams& d) {
  if (auto w = check_drive(d, plan.device)) out.warnings.push_back(*w);
}

}  // namespace detail

/// Drive frequency x drive strength. Analysis at omega_d/2 in the digitizer
/// bandwidth B: n_out, photon flux n_out*B, power hbar(omega_d/2) n_out B.
/// Monte Carlo: chopped on/off records of the pair omega_d/2 +- 2 pi B; the
/// reported excess is the per-mode average occupation increase.
inline SweepResult run_cw_map(const SweepPlan& plan) {
  detail::require_protocol(plan, Protocol::cw_map);
  std::vector<std::vector<double>> coords;
  for (double f : plan.drive_frequencies)
    for (double d : plan.delta_lens) coords.push_back({f, d});
  const double bw = plan.digitizer.analysis_bandwidth;

  auto out = detail::run_grid(
      plan, std::move(coords), {"f_d_hz", "delta_len_m"},
      {"velocity_ratio", "n_out", "photon_flux_per_s", "power_w", "excess_theory", "excess_mc", "excess_mc_se"},
      [&](std::size_t, const std::vector<double>& c, std::vector<double>& v, std::uint64_t seed, unsigned workers) {
        DriveParams drive = plan.drive;
        drive.omega_d = constants::two_pi * c[0];
        drive.delta_len = c[1];
        const double half = drive.omega_d / 2.0;
        v[0] = drive.v_e() / plan.device.c_0();
        const double sep = constants::two_pi * bw;
        if (plan.wants_theory()) {
          const double n = output_flux_density(half, drive, plan.environment, plan.device, plan.temperature);
          v[1] = n;
          v[2] = n * bw;
          v[3] = constants::hbar * half * n * bw;
          const auto on = state_from_drive(half + sep, drive, plan.environment, plan.device, plan.temperature);
          v[4] = (on.n_plus - thermal_occupation(on.omega_plus, plan.temperature) + on.n_minus -
                  thermal_occupation(on.omega_minus, plan.temperature)) / 2.0;
        }
        if (plan.wants_montecarlo()) {
          DriveParams off_drive = drive;
          off_drive.delta_len = 0.0;
          const auto on = state_from_drive(half + sep, drive, plan.environment, plan.device, plan.temperature);
          const auto off = state_from_drive(half + sep, off_drive, plan.environment, plan.device, plan.temperature);
          const auto m_on = detail::record_moments(on, plan, seed, 0, half, workers);
          const auto m_off = detail::record_moments(off, plan, seed, 1, half, workers);
          const auto diff = chopped_power_difference(m_on, m_off, PowerChannels::both);
          // P_avg difference is (dn+ + dn-) * gain; report per mode.
          v[5] = diff.value / (2.0 * m_on.filter_gain());
          v[6] = diff.se / (2.0 * m_on.filter_gain());
        }
      });
  DriveParams strongest = plan.drive;
  strongest.omega_d = constants::two_pi * *std::max_element(plan.drive_frequencies.begin(), plan.drive_frequencies.end());
  strongest.delta_len = *std::max_element(plan.delta_lens.begin(), plan.delta_lens.end());
  detail::drive_warning(out, plan, strongest);
  return out;
}

/// Fixed drive, scanned analysis frequency. n_out from the scattering
/// relation; the excess over the thermal input both from that relation and
/// from the sideband pair state; Monte Carlo uses the chopped single-sideband
/// power. Points within pi B of omega_d/2 pair with omega_d/2 +- pi B.
inline SweepResult run_spectral_scan(const SweepPlan& plan) {
  detail::require_protocol(plan, Protocol::spectral_scan);
  std::vector<std::vector<double>> coords;
  for (double f : plan.analysis_frequencies) coords.push_back({f});
  const DriveParams drive = plan.drive;
  const double half = drive.omega_d / 2.0;
  const double min_sep = constants::pi * plan.digitizer.analysis_bandwidth;

  auto out = detail::run_grid(
      plan, std::move(coords), {"f_analysis_hz"},
      {"n_out", "excess_theory", "excess_state", "excess_mc", "excess_mc_se"},
      [&](std::size_t, const std::vector<double>& c, std::vector<double>& v, std::uint64_t seed, unsigned workers) {
        const double w = constants::two_pi * c[0];
        require_in_band(w, drive, "spectral_scan");
        const double sep = std::max(std::abs(w - half), min_sep);
        const bool upper = w >= half;
        const double w_eff = upper ? half + sep : half - sep;
        if (plan.wants_theory()) {
          v[0] = output_flux_density(w, drive, plan.environment, plan.device, plan.temperature);
          v[1] = v[0] - thermal_occupation(w, plan.temperature);
          const auto st = state_from_drive(half + sep, drive, plan.environment, plan.device, plan.temperature);
          v[2] = upper ? st.n_plus - thermal_occupation(st.omega_plus, plan.temperature)
                       : st.n_minus - thermal_occupation(st.omega_minus, plan.temperature);
        }
        if (plan.wants_montecarlo()) {
          DriveParams off_drive = drive;
          off_drive.delta_len = 0.0;
          const auto on = state_from_drive(half + sep, drive, plan.environment, plan.device, plan.temperature);
          const auto off = state_from_drive(half + sep, off_drive, plan.environment, plan.device, plan.temperature);
          const auto m_on = detail::record_moments(on, plan, seed, 0, w_eff, workers);
          const auto m_off = detail::record_moments(off, plan, seed, 1, w_eff, workers);
          const auto diff = chopped_power_difference(m_on, m_off, upper ? PowerChannels::plus : PowerChannels::minus);
          v[3] = diff.value / m_on.filter_gain();
          v[4] = diff.se / m_on.filter_gain();
        }
      });
  detail::drive_warning(out, plan, drive);
  return out;
}

/// sigma2 and sigma1 of the phase-aligned sideband pair omega_d/2 +- epsilon
/// against drive strength. Theory columns: photon-unit and voltage-weighted
/// sigma2 of the state, the closed-form small-drive value, and the value
/// expected with amplifier noise left in P_avg.
inline SweepResult run_squeezing_vs_power(const SweepPlan& plan) {
  detail::require_protocol(plan, Protocol::squeezing_vs_power);
  std::vector<std::vector<double>> coords;
  for (double d : plan.delta_lens) coords.push_back({d});
  const double half = plan.drive.omega_d / 2.0;

  auto out = detail::run_grid(
      plan, std::move(coords), {"delta_len_m"},
      {"velocity_ratio", "s_abs", "sigma2_theory", "sigma2_theory_voltage", "sigma2_analytic",
       "sigma2_theory_diluted", "sigma2_mc", "sigma2_mc_se", "sigma2_mc_total", "sigma2_mc_total_se",
       "sigma1_plus_mc", "sigma1_plus_mc_se", "sigma1_minus_mc", "sigma1_minus_mc_se"},
      [&](std::size_t, const std::vector<double>& c, std::vector<double>& v, std::uint64_t seed, unsigned workers) {
        DriveParams drive = plan.drive;
        drive.delta_len = c[0];
        const double wp = half + plan.epsilon;
        v[0] = drive.v_e() / plan.device.c_0();
        v[1] = std::abs(scattering_amplitude(wp, drive, plan.environment, plan.device));
        auto st = state_from_drive(wp, drive, plan.environment, plan.device, plan.temperature);
        st = rotate_phase(st, alignment_angle(st));
        const auto cov = covariance_matrix(st);
        if (plan.wants_theory()) {
          v[2] = sigma2_quadrature(cov, QuadratureUnits::photon);
          v[3] = sigma2_quadrature(cov, QuadratureUnits::voltage);
          v[4] = analytic_sigma2(plan.epsilon, drive, plan.device);
          const double n_amp = plan.amplifier.added_quanta(half);
          v[5] = 2.0 * std::abs(st.psi) / (st.n_plus + st.n_minus + 1.0 + 2.0 * n_amp);
        }
        if (plan.wants_montecarlo()) {
          const auto rec = sample_record(cov, plan.amplifier, detail::record_config(plan.digitizer, seed, 0), half,
                                         workers);
          const auto m = MomentStatistics::compute(rec, workers);
          const double n_amp = rec.provenance.added_quanta;
          const auto sub = estimate_sigma2(m, n_amp, true);
          const auto tot = estimate_sigma2(m, n_amp, false);
          const auto s1p = estimate_sigma1(m, Sideband::plus);
          const auto s1m = estimate_sigma1(m, Sideband::minus);
          v[6] = sub.value, v[7] = sub.se, v[8] = tot.value, v[9] = tot.se;
          v[10] = s1p.value, v[11] = s1p.se, v[12] = s1m.value, v[13] = s1m.se;
        }
      });
  DriveParams strongest = plan.drive;
  strongest.delta_len = *std::max_element(plan.delta_lens.begin(), plan.delta_lens.end());
  detail::drive_warning(out, plan, strongest);
  return out;
}

/// Re[e^{-2i theta_r} Psi(theta_d)] in quanta. The reference frame is fixed
/// once: the rotation that makes Psi real and positive at theta_d = 0.
/// Monte Carlo draws one record per drive phase and rotates its estimate.
inline SweepResult run_phase_map(const SweepPlan& plan) {
  detail::require_protocol(plan, Protocol::phase_map);
  const double half = plan.drive.omega_d / 2.0;
  const double wp = half + plan.epsilon;
  DriveParams ref_drive = plan.drive;
  ref_drive.theta_d = 0.0;
  const double reference =
      alignment_angle(state_from_drive(wp, ref_drive, plan.environment, plan.device, plan.temperature));

  auto state_at = [&](double theta_d) {
    DriveParams d = plan.drive;
    d.theta_d = theta_d;
    return rotate_phase(state_from_drive(wp, d, plan.environment, plan.device, plan.temperature), reference);
  };

  // One work item per drive phase so each record serves its whole row.
  const std::size_t nd = plan.drive_phases.size(), nr = plan.rotation_phases.size();
  std::vector<std::vector<double>> outer_coords;
  for (double td : plan.drive_phases) outer_coords.push_back({td});
  std::vector<std::vector<double>> cells(nd * nr, std::vector<double>(3, detail::kNaN));
  std::vector<std::string> errors(nd * nr);

  SweepPlan inner_plan = plan;
  auto rows = detail::run_grid(
      inner_plan, std::move(outer_coords), {"theta_d_rad"}, {"unused"},
      [&](std::size_t i, const std::vector<double>& c, std::vector<double>&, std::uint64_t seed, unsigned workers) {
        const std::size_t base = i * nr;
        try {
          const auto st = state_at(c[0]);
          const complex psi = 2.0 * st.psi;
          if (plan.wants_theory())
            for (std::size_t j = 0; j < nr; ++j)
              cells[base + j][0] = rotate_correlator(psi, plan.rotation_phases[j]).real();
          if (plan.wants_montecarlo()) {
            const auto m = detail::record_moments(st, plan, seed, 0, half, workers);
            const auto est = estimate_psi(m);
            for (std::size_t j = 0; j < nr; ++j) {
              const auto r = est.rotated(plan.rotation_phases[j]);
              cells[base + j][1] = r.value.real() / m.filter_gain();
              cells[base + j][2] = r.se_re / m.filter_gain();
            }
          }
        } catch (const std::exception& e) {
          for (std::size_t j = 0; j < nr; ++j) {
            cells[base + j].assign(3, detail::kNaN);
            errors[base + j] = e.what();
          }
        }
      });

  SweepResult out;
  out.protocol = Protocol::phase_map;
  out.seed = plan.seed;
  out.wall_time = rows.wall_time;
  out.coord_names = {"theta_d_rad", "theta_r_rad"};
  out.value_names = {"re_psi_theory", "re_psi_mc", "re_psi_mc_se"};
  for (std::size_t i = 0; i < nd; ++i)
    for (std::size_t j = 0; j < nr; ++j)
      out.rows.push_back({{plan.drive_phases[i], plan.rotation_phases[j]}, cells[i * nr + j], errors[i * nr + j]});
  detail::drive_warning(out, plan, plan.drive);
  return out;
}

inline SweepResult run_sweep(const SweepPlan& plan) {
  switch (plan.protocol) {
    case Protocol::cw_map: return run_cw_map(plan);
    case Protocol::spectral_scan: return run_spectral_scan(plan);
    case Protocol::squeezing_vs_power: return run_squeezing_vs_power(plan);
    case Protocol::phase_map: return run_phase_map(plan);
  }
  throw std::invalid_argument("unknown protocol");
}

// --- serialization -------------------------------------------------------------------

inline nlohmann::ordered_json to_json(const SweepPlan& p) {
  nlohmann::ordered_json res = nlohmann::ordered_json::array();
  for (const auto& r : p.environment.resonances)
    res.push_back({{"center_hz", r.center / constants::two_pi}, {"q", r.quality_factor}, {"peak", r.peak}});
  return {
      {"format", "dce-sweep-plan"},
      {"version", kSweepFormatVersion},
      {"software_version", kVersion},
      {"protocol", to_string(p.protocol)},
      {"mode", to_string(p.mode)},
      {"seed", p.seed},
      {"device",
       {{"L_J0_h", p.device.L_J0()},
        {"L_0_h_per_m", p.device.L_0()},
        {"C_0_f_per_m", p.device.C_0()},
        {"flux_bias_wb", p.device.flux_bias()},
        {"flux_quantum_wb", p.device.flux_quantum()},
        {"c_0_m_per_s", p.device.c_0()},
        {"Z_0_ohm", p.device.Z_0()}}},
      {"drive",
       {{"f_d_hz", p.drive.omega_d / constants::two_pi}, {"delta_len_m", p.drive.delta_len}, {"theta_d_rad", p.drive.theta_d}}},
      {"environment",
       {{"kind", p.environment.kind == SpectralEnvironment::Kind::flat ? "flat" : "resonant"}, {"resonances", res}}},
      {"temperature_k", p.temperature},
      {"amplifier", {{"noise_temperature_k", p.amplifier.noise_temperature}, {"gain", p.amplifier.gain}}},
      {"digitizer", to_json(p.digitizer)},
      {"epsilon_hz", p.epsilon / constants::two_pi},
      {"grids",
       {{"drive_frequencies_hz", p.drive_frequencies},
        {"delta_lens_m", p.delta_lens},
        {"analysis_frequencies_hz", p.analysis_frequencies},
        {"drive_phases_rad", p.drive_phases},
        {"rotation_phases_rad", p.rotation_phases}}}};
}

namespace detail {

inline nlohmann::ordered_json number_or_null(double x) {
  return std::isfinite(x) ? nlohmann::ordered_json(x) : nlohmann::ordered_json(nullptr);
}

inline std::string csv_number(double x) {
  if (!std::isfinite(x)) return {};
  char buf[32];
  auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

inline std::string csv_text(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char ch : s) q += ch == '"' ? std::string("\"\"") : std::string(1, ch == '\n' ? ' ' : ch);
  return q + "\"";
}

}  // namespace detail

/// One JSON object per grid point; missing values are null.
inline void write_jsonl(std::ostream& os, const SweepResult& r) {
  for (std::size_t i = 0; i < r.rows.size(); ++i) {
    const auto& row = r.rows[i];
    nlohmann::ordered_json j;
    j["index"] = i;
    for (std::size_t k = 0; k < r.coord_names.size(); ++k) j[r.coord_names[k]] = row.coords[k];
    for (std::size_t k = 0; k < r.value_names.size(); ++k) j[r.value_names[k]] = detail::number_or_null(row.values[k]);
    j["error"] = row.ok() ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(row.error);
    os << j.dump() << '\n';
  }
}

inline void write_csv(std::ostream& os, const SweepResult& r) {
  os << "index";
  for (const auto& n : r.coord_names) os << ',' << n;
  for (const auto& n : r.value_names) os << ',' << n;
  os << ",error\n";
  for (std::size_t i = 0; i < r.rows.size(); ++i) {
    const auto& row = r.rows[i];
    os << i;
    for (double x : row.coords) os << ',' << detail::csv_number(x);
    for (double x : row.values) os << ',' << detail::csv_number(x);
    os << ',' << detail::csv_text(row.error) << '\n';
  }
}

struct SweepFiles {
  std::string jsonl, csv, plan;
};

/// Writes <stem>.jsonl, <stem>.csv and the resolved plan <stem>.plan.json.
/// Contents depend only on (plan, seed); no timestamps.
inline SweepFiles write_sweep(const std::string& stem, const SweepPlan& plan, const SweepResult& r) {
  SweepFiles f{stem + ".jsonl", stem + ".csv", stem + ".plan.json"};
  auto open = [](const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw FormatError("cannot open " + path + " for writing");
    return os;
  };
  {
    auto os = open(f.jsonl);
    write_jsonl(os, r);
  }
  {
    auto os = open(f.csv);
    write_csv(os, r);
  }
  {
    auto os = open(f.plan);
    auto j = to_json(plan);
    j["result"] = {{"format", "dce-sweep-result"},
                   {"version", kSweepFormatVersion},
                   {"rows", r.rows.size()},
                   {"failed_rows", r.failures()},
                   {"columns", r.value_names},
                   {"coordinates", r.coord_names},
                   {"warnings", r.warnings}};
    os << j.dump(2) << '\n';
  }
  return f;
}

}  // namespace dce

#endif  // DCE_EXPERIMENTS_HPP
