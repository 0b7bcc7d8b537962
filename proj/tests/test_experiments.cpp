#include <cmath>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "dce/experiments.hpp"

using namespace dce;

namespace {

SweepPlan base_plan(Protocol p, Mode m = Mode::theory) {
  SweepPlan plan;
  plan.protocol = p;
  plan.mode = m;
  plan.drive.omega_d = constants::two_pi * 10e9;
  plan.drive.delta_len = 0.05 * plan.device.c_0() / plan.drive.omega_d;
  plan.drive_frequencies = {8.4e9, 9.6e9, 10.8e9, 12e9};
  plan.delta_lens = {0.0, 0.25 * plan.drive.delta_len, 0.5 * plan.drive.delta_len, plan.drive.delta_len};
  plan.analysis_frequencies = {4.0e9, 4.5e9, 5.0e9, 5.5e9, 6.0e9};
  plan.drive_phases = {0.0, 0.5, 1.0, 1.5};
  plan.rotation_phases = {0.0, 0.5, 1.0, 1.5};
  plan.digitizer.samples_per_channel = 100'000;
  return plan;
}

SpectralEnvironment resonant_env() {
  SpectralEnvironment env;
  env.kind = SpectralEnvironment::Kind::resonant;
  env.resonances = {{constants::two_pi * 4.6e9, 100.0, 100.0}, {constants::two_pi * 5.4e9, 100.0, 100.0}};
  return env;
}

std::string jsonl(const SweepResult& r) {
  std::ostringstream os;
  write_jsonl(os, r);
  return os.str();
}

double z(double a, double b, double se) { return std::abs(a - b) / se; }

}  // namespace

TEST(CwMap, NoDriveNoPowerAtZeroTemperature) {
  auto plan = base_plan(Protocol::cw_map);
  plan.temperature = 0.0;
  const auto r = run_cw_map(plan);
  ASSERT_EQ(r.rows.size(), 16u);
  EXPECT_EQ(r.failures(), 0u);
  for (std::size_t i = 0; i < r.rows.size(); i += 4) {
    EXPECT_EQ(r.value(i, "power_w"), 0.0);
    EXPECT_EQ(r.value(i, "n_out"), 0.0);
  }
}

TEST(CwMap, PowerScalesAsDeltaLenSquared) {
  auto plan = base_plan(Protocol::cw_map);
  plan.temperature = 0.0;
  const auto r = run_cw_map(plan);
  for (std::size_t f = 0; f < 4; ++f) {
    const double p_full = r.value(4 * f + 3, "power_w");
    ASSERT_GT(p_full, 0.0);
    for (std::size_t k = 1; k < 3; ++k) {
      const double ratio = r.rows[4 * f + k].coords[1] / r.rows[4 * f + 3].coords[1];
      EXPECT_NEAR(r.value(4 * f + k, "power_w") / p_full, ratio * ratio, 1e-9 * ratio * ratio);
    }
  }
}

TEST(CwMap, MonotoneInDriveStrengthAndUnits) {
  auto plan = base_plan(Protocol::cw_map);
  const auto r = run_cw_map(plan);
  for (std::size_t f = 0; f < 4; ++f) {
    for (std::size_t k = 1; k < 4; ++k)
      EXPECT_GE(r.value(4 * f + k, "power_w"), r.value(4 * f + k - 1, "power_w"));
    const std::size_t i = 4 * f + 3;
    const double fd = r.rows[i].coords[0];
    EXPECT_NEAR(r.value(i, "photon_flux_per_s"), r.value(i, "n_out") * 10e6, 1e-9 * r.value(i, "photon_flux_per_s"));
    EXPECT_NEAR(r.value(i, "power_w"), constants::planck * fd / 2 * r.value(i, "photon_flux_per_s"),
                1e-9 * r.value(i, "power_w"));
    EXPECT_NEAR(r.value(i, "velocity_ratio"), 0.05 * fd / 10e9, 1e-12);
  }
  EXPECT_TRUE(std::isnan(r.value(0, "excess_mc")));
}

TEST(CwMap, ResonantBandsStayAtFixedAnalysisFrequency) {
  // Drive frequencies chosen so f_d/2 lands on, then between, the resonances.
  auto plan = base_plan(Protocol::cw_map);
  plan.temperature = 0.0;
  plan.environment = resonant_env();
  plan.drive_frequencies = {9.0e9, 9.2e9, 10.0e9, 10.8e9, 11.0e9};
  plan.delta_lens = {1e-6};
  const auto on = run_cw_map(plan);
  plan.environment = SpectralEnvironment::flat();
  const auto flat = run_cw_map(plan);
  std::vector<double> gain;
  for (std::size_t i = 0; i < 5; ++i) gain.push_back(on.value(i, "n_out") / flat.value(i, "n_out"));
  EXPECT_GT(gain[1], 10.0 * gain[0]);  // f_d/2 = 4.6 GHz
  EXPECT_GT(gain[3], 10.0 * gain[2]);  // f_d/2 = 5.4 GHz
  EXPECT_GT(gain[3], 10.0 * gain[4]);
  EXPECT_NEAR(gain[1] / gain[3], 1.0, 0.5);
}

TEST(CwMap, MonteCarloMatchesTheory) {
  auto plan = base_plan(Protocol::cw_map, Mode::both);
  plan.drive_frequencies = {10e9};
  plan.delta_lens = {plan.drive.delta_len * 4};
  plan.amplifier.noise_temperature = 0.0;
  plan.digitizer.samples_per_channel = 1'000'000;
  const auto r = run_cw_map(plan);
  ASSERT_EQ(r.failures(), 0u);
  EXPECT_LT(z(r.value(0, "excess_mc"), r.value(0, "excess_theory"), r.value(0, "excess_mc_se")), 4.0);
  EXPECT_GT(r.value(0, "excess_theory"), 3.0 * r.value(0, "excess_mc_se"));
}

TEST(SpectralScan, FlatParabolaPeaksAtHalfDrive) {
  auto plan = base_plan(Protocol::spectral_scan);
  plan.temperature = 0.0;
  plan.analysis_frequencies.clear();
  for (int i = 0; i <= 40; ++i) plan.analysis_frequencies.push_back(4e9 + 0.05e9 * i);
  const auto r = run_spectral_scan(plan);
  ASSERT_EQ(r.failures(), 0u);
  std::size_t best = 0;
  for (std::size_t i = 0; i < r.rows.size(); ++i) {
    if (r.value(i, "n_out") > r.value(best, "n_out")) best = i;
    const double f = r.rows[i].coords[0];
    const double shape = f * (10e9 - f) / (5e9 * 5e9);
    EXPECT_NEAR(r.value(i, "n_out") / r.value(20, "n_out"), shape, 1e-12);
  }
  EXPECT_EQ(r.rows[best].coords[0], 5e9);
}

TEST(SpectralScan, FeaturesIndependentOfDriveFrequency) {
  auto plan = base_plan(Protocol::spectral_scan);
  plan.temperature = 0.0;
  plan.environment = resonant_env();
  plan.analysis_frequencies.clear();
  for (int i = 0; i <= 80; ++i) plan.analysis_frequencies.push_back(4e9 + 0.025e9 * i);
  std::vector<std::vector<double>> enhancement;
  for (double fd : {8.70e9, 11.30e9}) {
    plan.drive.omega_d = constants::two_pi * fd;
    plan.environment = resonant_env();
    const auto res = run_spectral_scan(plan);
    plan.environment = SpectralEnvironment::flat();
    const auto flat = run_spectral_scan(plan);
    std::vector<double> e;
    for (std::size_t i = 0; i < res.rows.size(); ++i)
      e.push_back(res.rows[i].ok() && flat.value(i, "n_out") > 0 ? res.value(i, "n_out") / flat.value(i, "n_out") : 0.0);
    enhancement.push_back(e);
  }
  // Both scans peak at the resonance centers. Mirror features at f_d - center
  // move with the drive and are not checked.
  auto is_peak = [&](const std::vector<double>& e, double f) {
    for (std::size_t i = 1; i + 1 < e.size(); ++i)
      if (std::abs(plan.analysis_frequencies[i] - f) < 1e6) return e[i] > e[i - 1] && e[i] > e[i + 1] && e[i] > 10.0;
    return false;
  };
  for (const auto& e : enhancement) {
    EXPECT_TRUE(is_peak(e, 4.6e9));
    EXPECT_TRUE(is_peak(e, 5.4e9));
  }
}

TEST(SpectralScan, MonteCarloAgreesWithTheoryAtMillionSamples) {
  auto plan = base_plan(Protocol::spectral_scan, Mode::both);
  plan.drive.delta_len *= 4;
  plan.analysis_frequencies = {4.3e9, 4.999e9, 5.7e9};
  plan.digitizer.samples_per_channel = 1'000'000;
  plan.amplifier.noise_temperature = 0.0;
  const auto r = run_spectral_scan(plan);
  ASSERT_EQ(r.failures(), 0u);
  for (std::size_t i = 0; i < r.rows.size(); ++i) {
    EXPECT_LT(z(r.value(i, "excess_mc"), r.value(i, "excess_state"), r.value(i, "excess_mc_se")), 4.0) << i;
  }
  // Away from the center the exact pair state exceeds the first-order
  // scattering relation by |S|^2 n_th(omega).
  for (std::size_t i : {0u, 2u}) {
    const double w = constants::two_pi * r.rows[i].coords[0];
    const double s2 = std::norm(scattering_amplitude(w, plan.drive, plan.environment, plan.device));
    EXPECT_NEAR(r.value(i, "excess_state") - r.value(i, "excess_theory"), s2 * thermal_occupation(w, plan.temperature),
                1e-15);
  }
  EXPECT_LT(z(r.value(0, "excess_mc"), r.value(0, "excess_theory"), r.value(0, "excess_mc_se")), 4.0);
}

TEST(SpectralScan, OutOfBandPointIsRecordedNotFatal) {
  auto plan = base_plan(Protocol::spectral_scan);
  plan.analysis_frequencies = {4e9, 5e9, 10.5e9};
  const auto r = run_spectral_scan(plan);
  ASSERT_EQ(r.rows.size(), 3u);
  EXPECT_EQ(r.failures(), 1u);
  EXPECT_TRUE(r.rows[0].ok());
  EXPECT_FALSE(r.rows[2].ok());
  EXPECT_TRUE(std::isnan(r.value(2, "n_out")));
  const auto text = jsonl(r);
  EXPECT_NE(text.find("\"n_out\":null"), std::string::npos);
  EXPECT_NE(text.find("\"error\":\"") , std::string::npos);
}

TEST(Squeezing, NoDriveGivesNullStatistics) {
  auto plan = base_plan(Protocol::squeezing_vs_power, Mode::both);
  plan.delta_lens = {0.0};
  plan.digitizer.samples_per_channel = 1'000'000;
  const auto r = run_squeezing_vs_power(plan);
  ASSERT_EQ(r.failures(), 0u);
  EXPECT_EQ(r.value(0, "sigma2_theory"), 0.0);
  for (const char* name : {"sigma2_mc", "sigma1_plus_mc", "sigma1_minus_mc"})
    EXPECT_LT(std::abs(r.value(0, name)) / r.value(0, std::string(name) + "_se"), 4.0) << name;
}

TEST(Squeezing, Sigma2GrowsWhileMarginalsStayThermal) {
  auto plan = base_plan(Protocol::squeezing_vs_power, Mode::both);
  plan.amplifier.noise_temperature = 0.0;
  plan.digitizer.samples_per_channel = 1'000'000;
  const auto r = run_squeezing_vs_power(plan);
  ASSERT_EQ(r.failures(), 0u);
  for (std::size_t i = 1; i < r.rows.size(); ++i) {
    EXPECT_GT(r.value(i, "sigma2_theory"), r.value(i - 1, "sigma2_theory"));
    EXPECT_GT(r.value(i, "sigma2_analytic"), r.value(i - 1, "sigma2_analytic"));
  }
  for (std::size_t i = 0; i < r.rows.size(); ++i) {
    EXPECT_LT(std::abs(r.value(i, "sigma1_plus_mc")) / r.value(i, "sigma1_plus_mc_se"), 4.0);
    EXPECT_LT(std::abs(r.value(i, "sigma1_minus_mc")) / r.value(i, "sigma1_minus_mc_se"), 4.0);
    EXPECT_LT(z(r.value(i, "sigma2_mc"), r.value(i, "sigma2_theory"), r.value(i, "sigma2_mc_se")), 4.0);
  }
  const std::size_t last = r.rows.size() - 1;
  EXPECT_NEAR(r.value(last, "sigma2_theory"), std::tanh(2 * std::asinh(r.value(last, "s_abs"))), 1e-12);
  EXPECT_GT(r.value(last, "sigma2_mc") / r.value(last, "sigma2_mc_se"), 10.0);
}

TEST(Squeezing, AnalyticSmallDriveSlopeIsOneHalf) {
  auto plan = base_plan(Protocol::squeezing_vs_power);
  const double per_ratio = plan.device.c_0() / plan.drive.omega_d;
  plan.delta_lens = {0.0, 1e-3 * per_ratio, 2e-3 * per_ratio};
  const auto r = run_squeezing_vs_power(plan);
  const double slope = (r.value(1, "sigma2_analytic") - r.value(0, "sigma2_analytic")) /
                       (r.value(1, "velocity_ratio") - r.value(0, "velocity_ratio"));
  EXPECT_NEAR(slope, 0.5, 0.05);
  // The exact Gaussian state gives twice that.
  const double gslope = r.value(1, "sigma2_theory") / r.value(1, "velocity_ratio");
  EXPECT_NEAR(gslope, 1.0, 0.1);
}

TEST(Squeezing, DilutedTheoryMatchesUnsubtractedMonteCarlo) {
  auto plan = base_plan(Protocol::squeezing_vs_power, Mode::both);
  plan.delta_lens = {4 * plan.drive.delta_len};
  plan.digitizer.samples_per_channel = 1'000'000;
  const auto r = run_squeezing_vs_power(plan);
  EXPECT_LT(z(r.value(0, "sigma2_mc_total"), r.value(0, "sigma2_theory_diluted"), r.value(0, "sigma2_mc_total_se")),
            4.0);
}

TEST(PhaseMap, OriginIsModulus) {
  auto plan = base_plan(Protocol::phase_map);
  const auto r = run_phase_map(plan);
  ASSERT_EQ(r.rows.size(), 16u);
  const double wp = plan.drive.omega_d / 2 + plan.epsilon;
  const auto st = state_from_drive(wp, plan.drive, plan.environment, plan.device, plan.temperature);
  EXPECT_NEAR(r.value(0, "re_psi_theory"), 2.0 * std::abs(st.psi), 1e-15);
}

TEST(PhaseMap, DiagonalInvarianceAndPeriod) {
  auto plan = base_plan(Protocol::phase_map);
  plan.drive_phases.clear();
  plan.rotation_phases.clear();
  for (int i = 0; i < 13; ++i) {
    plan.drive_phases.push_back(constants::pi / 6 * i);
    plan.rotation_phases.push_back(constants::pi / 6 * i);
  }
  const auto r = run_phase_map(plan);
  const std::size_t n = 13;
  auto at = [&](std::size_t d, std::size_t q) { return r.value(d * n + q, "re_psi_theory"); };
  const double scale = at(0, 0);
  for (std::size_t d = 0; d + 1 < n; ++d)
    for (std::size_t q = 1; q < n; ++q) EXPECT_NEAR(at(d + 1, q - 1), at(d, q), 1e-12 * scale);
  double worst = 0.0;
  for (std::size_t d = 0; d + 6 < n; ++d)
    for (std::size_t q = 0; q + 6 < n; ++q) {
      worst = std::max(worst, std::abs(at(d + 6, q) - at(d, q)));
      worst = std::max(worst, std::abs(at(d, q + 6) - at(d, q)));
    }
  EXPECT_LT(worst, 1e-10);
  EXPECT_NEAR(at(0, 3), -scale, 1e-12 * scale);  // theta_r = pi/2
}

TEST(PhaseMap, MonteCarloStripes) {
  auto plan = base_plan(Protocol::phase_map, Mode::both);
  plan.drive.delta_len *= 4;
  plan.amplifier.noise_temperature = 0.0;
  plan.digitizer.samples_per_channel = 500'000;
  const auto r = run_phase_map(plan);
  ASSERT_EQ(r.failures(), 0u);
  for (std::size_t i = 0; i < r.rows.size(); ++i)
    EXPECT_LT(z(r.value(i, "re_psi_mc"), r.value(i, "re_psi_theory"), r.value(i, "re_psi_mc_se")), 4.0) << i;
}

TEST(Sweep, GridValidation) {
  auto plan = base_plan(Protocol::cw_map);
  plan.drive_frequencies = {};
  EXPECT_THROW(run_sweep(plan), std::invalid_argument);
  plan = base_plan(Protocol::squeezing_vs_power);
  plan.delta_lens = {0.0, 2e-6, 1e-6};
  EXPECT_THROW(run_sweep(plan), std::invalid_argument);
  plan = base_plan(Protocol::phase_map);
  plan.rotation_phases = {0.0, NAN};
  EXPECT_THROW(run_sweep(plan), std::invalid_argument);
  plan = base_plan(Protocol::phase_map);
  EXPECT_THROW(run_cw_map(plan), std::invalid_argument);
}

TEST(Sweep, StrongDriveWarns) {
  auto plan = base_plan(Protocol::squeezing_vs_power);
  plan.delta_lens = {0.0, 0.5 * plan.device.c_0() / plan.drive.omega_d};
  EXPECT_FALSE(run_sweep(plan).warnings.empty());
  EXPECT_TRUE(run_sweep(base_plan(Protocol::squeezing_vs_power)).warnings.empty());
}

TEST(Sweep, MonteCarloIndependentOfWorkers) {
  for (auto p : {Protocol::cw_map, Protocol::spectral_scan, Protocol::squeezing_vs_power, Protocol::phase_map}) {
    auto plan = base_plan(p, Mode::both);
    plan.digitizer.samples_per_channel = 20'000;
    plan.workers = 1;
    const auto a = jsonl(run_sweep(plan));
    plan.workers = 4;
    const auto b = jsonl(run_sweep(plan));
    EXPECT_EQ(a, b) << to_string(p);
    plan.seed = 2;
    EXPECT_NE(jsonl(run_sweep(plan)), a) << to_string(p);
  }
}

TEST(Sweep, TheoryModeIgnoresSeed) {
  auto plan = base_plan(Protocol::squeezing_vs_power);
  const auto a = jsonl(run_sweep(plan));
  plan.seed = 12345;
  EXPECT_EQ(jsonl(run_sweep(plan)), a);
  EXPECT_EQ(a.find("\"sigma2_mc\":0"), std::string::npos);
  EXPECT_NE(a.find("\"sigma2_mc\":null"), std::string::npos);
}

TEST(Sweep, FilesWritten) {
  auto plan = base_plan(Protocol::squeezing_vs_power);
  const auto r = run_sweep(plan);
  const std::string stem = testing::TempDir() + "sweep_files";
  const auto f = write_sweep(stem, plan, r);
  std::ifstream csv(f.csv);
  std::string header;
  std::getline(csv, header);
  EXPECT_EQ(header.rfind("index,delta_len_m,velocity_ratio,", 0), 0u);
  std::size_t lines = 0;
  for (std::string l; std::getline(csv, l);) ++lines;
  EXPECT_EQ(lines, plan.delta_lens.size());
  std::ifstream pj(f.plan);
  const auto j = nlohmann::json::parse(pj);
  EXPECT_EQ(j["format"], "dce-sweep-plan");
  EXPECT_EQ(j["result"]["rows"], plan.delta_lens.size());
  EXPECT_EQ(j["grids"]["delta_lens_m"].size(), plan.delta_lens.size());
  std::ifstream jl(f.jsonl);
  std::size_t n = 0;
  for (std::string l; std::getline(jl, l); ++n) EXPECT_EQ(nlohmann::json::parse(l)["index"], n);
  EXPECT_EQ(n, plan.delta_lens.size());
}
