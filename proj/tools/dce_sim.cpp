// dce-sim: command-line front end.
//
// Exit codes:
//   0  success
//   1  usage error (bad flags, unreadable config file)
//   2  config schema or version error
//   3  runtime failure (physics/measurement error, I/O failure)

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "dce/config.hpp"
#include "dce/experiments.hpp"
#include "dce/gaussian_state.hpp"
#include "dce/measurement.hpp"
#include "dce/physics.hpp"
#include "dce/record_io.hpp"
#include "dce/version.hpp"

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kSchema = 2, kRuntime = 3 };

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw UsageError("cannot read config file " + path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

dce::RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides) {
  const std::string text = path.empty() ? std::string(R"({"version": 1})") : read_file(path);
  return dce::parse_config(text, overrides);
}

std::string fmt(double x, int digits = 6) {
  std::ostringstream ss;
  ss.precision(digits);
  ss << x;
  return ss.str();
}

std::string fmt(dce::complex z) {
  return fmt(z.real(), 10) + (z.imag() < 0 ? " - " : " + ") + fmt(std::abs(z.imag()), 10) + "i";
}

double parse_cli_quantity(const std::string& text, const char* unit, const char* what) {
  return dce::detail::parse_quantity(nlohmann::json(text), unit, what);
}

// --- eval ---------------------------------------------------------------------------------

struct EvalArgs {
  std::string quantity;
  std::string freq, flux, epsilon, length;
  bool json = false;
};

int cmd_eval(const dce::RunConfig& cfg, const EvalArgs& a) {
  using namespace dce;
  const auto& p = cfg.plan;
  const double omega = a.freq.empty() ? p.drive.omega_d / 2.0
                                      : constants::two_pi * parse_cli_quantity(a.freq, "Hz", "--freq");
  const double flux = a.flux.empty() ? p.device.flux_bias() : parse_cli_quantity(a.flux, "Wb", "--flux");
  const double eps = a.epsilon.empty() ? p.epsilon : constants::two_pi * parse_cli_quantity(a.epsilon, "Hz", "--epsilon");

  nlohmann::ordered_json out{{"quantity", a.quantity}};
  std::string text;
  auto real = [&](double v, const char* unit) {
    out["value"] = v;
    out["unit"] = unit;
    text = a.quantity + " = " + fmt(v, 10) + (*unit ? std::string(" ") + unit : std::string());
  };
  auto cplx = [&](complex z) {
    out["re"] = z.real();
    out["im"] = z.imag();
    out["abs"] = std::abs(z);
    out["arg"] = std::arg(z);
    out["unit"] = "";
    text = a.quantity + " = " + fmt(z) + "  (|.| = " + fmt(std::abs(z), 10) + ", arg = " + fmt(std::arg(z), 10) +
           " rad)";
  };

  const std::string& q = a.quantity;
  if (q == "LJ") {
    real(josephson_inductance(flux, p.device), "H");
  } else if (q == "ell_e") {
    real(electrical_length(flux, p.device), "m");
  } else if (q == "R") {
    const double len = a.length.empty() ? electrical_length(flux, p.device) : parse_cli_quantity(a.length, "m", "--length");
    cplx(reflection_for_length(omega, len, p.device.c_0()));
  } else if (q == "S") {
    cplx(scattering_amplitude(omega, p.drive, p.environment, p.device));
  } else if (q == "n_out") {
    real(output_flux_density(omega, p.drive, p.environment, p.device, p.temperature), "photons/s/Hz");
  } else if (q == "dce_flux") {
    real(dce_flux_density(omega, p.drive, p.device), "photons/s/Hz");
  } else if (q == "gamma_dce") {
    real(integrated_dce_flux(p.drive, p.device), "photons/s");
  } else if (q == "sigma2_analytic") {
    real(analytic_sigma2(eps, p.drive, p.device), "");
  } else {
    throw UsageError("unknown quantity '" + q + "' (LJ, ell_e, R, S, n_out, dce_flux, gamma_dce, sigma2_analytic)");
  }
  out["omega_rad_s"] = omega;
  if (auto w = check_drive(p.drive, p.device)) std::cerr << "warning: " << *w << "\n";
  std::cout << (a.json ? out.dump() : text) << "\n";
  return kOk;
}

// --- run ------------------------------------------------------------------------------------

std::string pm(double v, double se) { return fmt(v) + " +- " + fmt(se, 2); }

std::string summary(const dce::SweepResult& r, const dce::SweepPlan& plan) {
  using namespace dce;
  const auto n = r.rows.size();
  auto finite = [](double x) { return std::isfinite(x); };
  std::ostringstream s;
  s << to_string(r.protocol) << ": ";
  switch (r.protocol) {
    case Protocol::cw_map: {
      std::size_t best = 0;
      const bool th = plan.wants_theory();
      const auto col = r.value_index(th ? "n_out" : "excess_mc");
      for (std::size_t i = 0; i < n; ++i)
        if (finite(r.rows[i].values[col]) && !(r.rows[i].values[col] <= r.rows[best].values[col])) best = i;
      s << "max " << (th ? "n_out" : "excess") << " = " << fmt(r.rows[best].values[col]) << " at f_d = "
        << fmt(r.rows[best].coords[0]) << " Hz, delta_len = " << fmt(r.rows[best].coords[1]) << " m";
      if (plan.wants_montecarlo())
        s << "; excess (MC) = " << pm(r.value(best, "excess_mc"), r.value(best, "excess_mc_se"));
      break;
    }
    case Protocol::spectral_scan: {
      const bool th = plan.wants_theory();
      const auto col = r.value_index(th ? "excess_theory" : "excess_mc");
      std::size_t best = 0;
      for (std::size_t i = 0; i < n; ++i)
        if (finite(r.rows[i].values[col]) && !(r.rows[i].values[col] <= r.rows[best].values[col])) best = i;
      s << "peak excess = " << fmt(r.rows[best].values[col]) << " quanta at " << fmt(r.rows[best].coords[0]) << " Hz";
      if (plan.wants_montecarlo())
        s << "; MC = " << pm(r.value(best, "excess_mc"), r.value(best, "excess_mc_se"));
      break;
    }
    case Protocol::squeezing_vs_power: {
      std::size_t top = 0;
      for (std::size_t i = 0; i < n; ++i)
        if (r.rows[i].coords[0] > r.rows[top].coords[0]) top = i;
      const double expected = std::tanh(2.0 * std::asinh(r.value(top, "s_abs")));
      s << "sigma2 at max drive (v_e/c_0 = " << fmt(r.value(top, "velocity_ratio")) << ") = ";
      if (plan.wants_montecarlo())
        s << pm(r.value(top, "sigma2_mc"), r.value(top, "sigma2_mc_se")) << " (amplifier-subtracted); sigma1+ = "
          << pm(r.value(top, "sigma1_plus_mc"), r.value(top, "sigma1_plus_mc_se"));
      else
        s << fmt(r.value(top, "sigma2_theory"));
      s << "; tanh(2 asinh|S|) = " << fmt(expected);
      break;
    }
    case Protocol::phase_map: {
      s << "Re Psi(0, 0) = ";
      if (plan.wants_montecarlo())
        s << pm(r.value(0, "re_psi_mc"), r.value(0, "re_psi_mc_se")) << " quanta";
      else
        s << fmt(r.value(0, "re_psi_theory")) << " quanta";
      if (plan.wants_theory()) s << "; theory " << fmt(r.value(0, "re_psi_theory"));
      break;
    }
  }
  s << "; " << n << " points, " << r.failures() << " failed";
  return s.str();
}

int cmd_run(const dce::RunConfig& cfg, bool print_config) {
  if (print_config) {
    std::cout << dce::render_config(cfg);
    return kOk;
  }
  const auto plan = cfg.resolved_plan();
  std::filesystem::create_directories(cfg.output_dir);
  const auto result = dce::run_sweep(plan);
  const auto files = dce::write_sweep(plan.output, plan, result);
  {
    std::ofstream os(cfg.output_dir + "/" + cfg.name + ".config.json", std::ios::binary);
    if (!os) throw dce::FormatError("cannot write resolved config");
    os << dce::render_config(cfg);
  }
  for (const auto& w : result.warnings) std::cerr << "warning: " << w << "\n";
  for (std::size_t i = 0; i < result.rows.size(); ++i)
    if (!result.rows[i].ok()) std::cerr << "point " << i << " failed: " << result.rows[i].error << "\n";
  std::cout << summary(result, plan) << "\n";
  std::cerr << "wrote " << files.jsonl << ", " << files.csv << ", " << files.plan << " (" << fmt(result.wall_time, 3)
            << " s, " << plan.workers << " workers)\n";
  return kOk;
}

// --- sample ---------------------------------------------------------------------------------

int cmd_sample(const dce::RunConfig& cfg, const std::string& record_path, const std::string& result_path) {
  using namespace dce;
  const auto& p = cfg.plan;
  const double half = p.drive.omega_d / 2.0;
  auto st = state_from_drive(half + p.epsilon, p.drive, p.environment, p.device, p.temperature);
  st = rotate_phase(st, alignment_angle(st));
  auto dig = p.digitizer;
  dig.rng_seed = p.seed;
  const auto rec = sample_record(covariance_matrix(st), p.amplifier, dig, half, cfg.resolved_workers(), "sample");
  if (!record_path.empty()) save_record(record_path, rec);
  const auto res = correlate(rec, p.amplifier, dig.max_lag, cfg.resolved_workers());
  const std::string doc = to_json(res).dump(2);
  if (!result_path.empty()) {
    std::ofstream os(result_path, std::ios::binary);
    if (!os) throw FormatError("cannot write " + result_path);
    os << doc << "\n";
  }
  if (std::isnan(res.sigma2_subtracted.value))
    std::cerr << "warning: amplifier-subtracted P_avg is not positive; record too short for subtraction\n";
  std::cout << "sigma2 = " << pm(res.sigma2_subtracted.value, res.sigma2_subtracted.se)
            << " (amplifier-subtracted), " << pm(res.sigma2_total.value, res.sigma2_total.se) << " (total); theory "
            << fmt(sigma2_quadrature(covariance_matrix(st), QuadratureUnits::photon)) << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dce-sim: dynamical Casimir effect simulator"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("-c,--config", config_path, "JSON config file (defaults apply when omitted)");
    sub->add_option("--set", overrides, "override a config field, e.g. --set drive.f_d=11.3GHz")->take_all();
  };

  EvalArgs eval_args;
  auto* eval = app.add_subcommand("eval", "evaluate a single formula at the configured point");
  add_common(eval);
  eval->add_option("quantity", eval_args.quantity, "LJ | ell_e | R | S | n_out | dce_flux | gamma_dce | sigma2_analytic")
      ->required();
  eval->add_option("--freq", eval_args.freq, "analysis frequency (default f_d/2), e.g. 5GHz");
  eval->add_option("--flux", eval_args.flux, "flux bias, e.g. 0.1Phi0");
  eval->add_option("--epsilon", eval_args.epsilon, "sideband offset, e.g. 20MHz");
  eval->add_option("--length", eval_args.length, "line length for R (default ell_e)");
  eval->add_flag("--json", eval_args.json, "print JSON");

  auto* run = app.add_subcommand("run", "run the configured sweep protocol and write result files");
  add_common(run);
  unsigned workers = 0;
  std::string output_dir, mode;
  bool print_config = false;
  run->add_option("-j,--workers", workers, "worker threads (default: available parallelism)");
  run->add_option("-o,--output-dir", output_dir, "output directory (default: $DCE_OUTPUT_DIR or dce_output)");
  run->add_option("--mode", mode, "theory | montecarlo | both");
  run->add_flag("--print-config", print_config, "print the resolved config and exit");

  auto* sample = app.add_subcommand("sample", "draw one voltage record at drive.delta_len and correlate it");
  add_common(sample);
  std::string record_path, result_path;
  sample->add_option("--record", record_path, "write the record (.csv for text, binary otherwise)");
  sample->add_option("--result", result_path, "write the correlation result JSON");

  auto* schema = app.add_subcommand("schema", "print the config schema");
  auto* version = app.add_subcommand("version", "print version information");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kUsage;
  }

  try {
    if (*schema) {
      std::cout << dce::config_schema().dump(2) << "\n";
      return kOk;
    }
    if (*version) {
      std::cout << "dce-sim " << dce::kVersion << " (config schema " << dce::kConfigSchemaVersion
                << ", sweep format " << dce::kSweepFormatVersion << ", record format " << dce::kRecordFormatVersion
                << ")\n";
      return kOk;
    }
    if (*run) {
      if (workers) overrides.push_back("workers=" + std::to_string(workers));
      if (!output_dir.empty()) overrides.push_back("output_dir=" + nlohmann::json(output_dir).dump());
      if (!mode.empty()) overrides.push_back("mode=" + nlohmann::json(mode).dump());
    }
    const auto cfg = load_config(config_path, overrides);
    if (*eval) return cmd_eval(cfg, eval_args);
    if (*run) return cmd_run(cfg, print_config);
    if (*sample) return cmd_sample(cfg, record_path, result_path);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const dce::SchemaError& e) {
    std::cerr << "config error at " << e.field() << ": " << e.what() << "\n";
    return kSchema;
  } catch (const dce::VersionError& e) {
    std::cerr << "config version error: " << e.what() << "\n";
    return kSchema;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntime;
  }
  return kUsage;
}
