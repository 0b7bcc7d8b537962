#ifndef DCE_GAUSSIAN_STATE_HPP
#define DCE_GAUSSIAN_STATE_HPP

// Exact Gaussian state of a sideband pair (w+, w-), w+ + w- = w_d, and the
// squeezing statistics built from it.
//
// Quadratures are dimensionless, I = (a + a^dag)/sqrt(2), Q = -i(a - a^dag)/sqrt(2),
// so the vacuum variance is 1/2. Covariance ordering is (I+, Q+, I-, Q-).

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>

#include <Eigen/Dense>

#include "dce/physics.hpp"

namespace dce {

enum class Sideband { plus, minus };

/// Indices into the 4x4 quadrature covariance.
enum Quadrature : int { kIPlus = 0, kQPlus = 1, kIMinus = 2, kQMinus = 3 };

struct TwoModeState {
  double n_plus = 0.0;
  double n_minus = 0.0;
  complex psi{0.0, 0.0};  // <a+ a->
  double omega_plus = 0.0;
  double omega_minus = 0.0;
  double omega_d = 0.0;

  static TwoModeState vacuum(double omega_plus, double omega_minus) {
    return {0.0, 0.0, {}, omega_plus, omega_minus, omega_plus + omega_minus};
  }
};

struct QuadratureCovariance {
  Eigen::Matrix4d matrix = 0.5 * Eigen::Matrix4d::Identity();
  // Sideband frequencies when known (0 otherwise). They carry the volt-scale
  // prefactor sqrt(hbar w Z_0 / 8 pi) of each sideband; never folded in.
  double omega_plus = 0.0;
  double omega_minus = 0.0;

  double operator()(int i, int j) const { return matrix(i, j); }

  /// sqrt(hbar w Z_0 / 8 pi) volts per unit dimensionless quadrature.
  double volt_scale(Sideband s, double Z_0) const {
    const double w = s == Sideband::plus ? omega_plus : omega_minus;
    return std::sqrt(constants::hbar * w * Z_0 / (8.0 * constants::pi));
  }
};

/// Two-mode symplectic eigenvalues (ascending) of a covariance in the
/// (I+, Q+, I-, Q-) ordering: moduli of the eigenvalues of Omega V. The
/// invariant closed form loses half the digits when the two coincide (pure
/// symmetric states), the eigensolver does not.
inline std::array<double, 2> symplectic_eigenvalues(const Eigen::Matrix4d& v) {
  Eigen::Matrix4d omega = Eigen::Matrix4d::Zero();
  omega(0, 1) = omega(2, 3) = 1.0;
  omega(1, 0) = omega(3, 2) = -1.0;
  Eigen::EigenSolver<Eigen::Matrix4d> es(omega * v, false);
  std::array<double, 4> ev{};
  for (int i = 0; i < 4; ++i) ev[std::size_t(i)] = std::abs(es.eigenvalues()(i));
  std::sort(ev.begin(), ev.end());
  return {ev[0], ev[2]};
}

// --- Bogoliubov lift ------------------------------------------------------------

/// Exact two-mode squeezing map
///   a+ -> e^{i chi+} (cosh r a+ + e^{i phi} sinh r a-^dag)
///   a- -> e^{i chi-} (cosh r a- + e^{i phi} sinh r a+^dag)
/// whose first-order expansion matches a_out = R a + S a_partner^dag.
struct BogoliubovTransform {
  double r = 0.0;
  double phase_plus = 0.0;     // chi+
  double phase_minus = 0.0;    // chi-
  double squeeze_phase = 0.0;  // phi
  // Per-sideband parameters asinh|S_pm|; equal to r unless the scattering
  // was asymmetric (then r is their geometric-mean match).
  double r_plus = 0.0;
  double r_minus = 0.0;

  complex mu(Sideband s) const {
    return std::polar(std::cosh(r), s == Sideband::plus ? phase_plus : phase_minus);
  }
  complex nu(Sideband s) const {
    return std::polar(std::sinh(r), (s == Sideband::plus ? phase_plus : phase_minus) + squeeze_phase);
  }
  /// Phase of the generated pair correlator <a+ a->.
  double pair_phase() const { return phase_plus + phase_minus + squeeze_phase; }
};

class AsymmetricScattering : public Error {
 public:
  AsymmetricScattering(const std::string& what, BogoliubovTransform fallback)
      : Error(what), fallback_(fallback) {}
  /// Two-parameter form (independent r+, r-, matched in the geometric mean).
  const BogoliubovTransform& fallback() const noexcept { return fallback_; }

 private:
  BogoliubovTransform fallback_;
};

inline constexpr double kAsymmetryThreshold = 0.10;

namespace detail {
inline double wrap_angle(double a) { return std::remainder(a, constants::two_pi); }
}  // namespace detail

inline BogoliubovTransform bogoliubov_from_scattering(complex r_plus, complex s_plus,
                                                      complex r_minus, complex s_minus) {
  BogoliubovTransform t;
  const double sp = std::abs(s_plus);
  const double sm = std::abs(s_minus);
  t.r_plus = std::asinh(sp);
  t.r_minus = std::asinh(sm);
  t.r = std::asinh(std::sqrt(sp * sm));
  t.phase_plus = std::arg(r_plus);
  t.phase_minus = std::arg(r_minus);
  if (sp > 0.0 && sm > 0.0) {
    const double a = std::arg(s_plus / r_plus);
    const double b = std::arg(s_minus / r_minus);
    t.squeeze_phase = a + detail::wrap_angle(b - a) / 2.0;
  } else if (sp > 0.0 || sm > 0.0) {
    t.squeeze_phase = sp > 0.0 ? std::arg(s_plus / r_plus) : std::arg(s_minus / r_minus);
  }
  const double larger = std::max(sp, sm);
  if (larger > 0.0 && std::abs(sp - sm) / larger > kAsymmetryThreshold)
    throw AsymmetricScattering("|S+| and |S-| differ by more than 10%; single-r model invalid", t);
  return t;
}

// --- state construction ------------------------------------------------------------

/// Output state of the sideband pair omega_plus, omega_d - omega_plus for a
/// thermal input at `temperature`, through the exact Bogoliubov lift of the
/// first-order scattering relation.
inline TwoModeState state_from_drive(double omega_plus, const DriveParams& drive,
                                     const SpectralEnvironment& env, const DeviceParams& dev,
                                     double temperature) {
  if (!(omega_plus > drive.omega_d / 2.0 && omega_plus < drive.omega_d))
    throw OutOfBand("state_from_drive: omega_plus must lie in (omega_d/2, omega_d)");
  const double omega_minus = drive.omega_d - omega_plus;
  const double flux = dev.flux_bias();
  const auto t = bogoliubov_from_scattering(
      reflection_coefficient(omega_plus, flux, dev), scattering_amplitude(omega_plus, drive, env, dev),
      reflection_coefficient(omega_minus, flux, dev), scattering_amplitude(omega_minus, drive, env, dev));

  const double np_in = thermal_occupation(omega_plus, temperature);
  const double nm_in = thermal_occupation(omega_minus, temperature);
  const double c2 = std::cosh(t.r) * std::cosh(t.r);
  const double s2 = std::sinh(t.r) * std::sinh(t.r);

  TwoModeState st;
  st.omega_plus = omega_plus;
  st.omega_minus = omega_minus;
  st.omega_d = drive.omega_d;
  st.n_plus = c2 * np_in + s2 * (nm_in + 1.0);
  st.n_minus = c2 * nm_in + s2 * (np_in + 1.0);
  st.psi = std::polar(std::cosh(t.r) * std::sinh(t.r) * (1.0 + np_in + nm_in), t.pair_phase());
  return st;
}

/// Field phase rotation a -> a e^{-i theta} on both sidebands.
inline TwoModeState rotate_phase(TwoModeState state, double theta) {
  state.psi *= std::polar(1.0, -2.0 * theta);
  return state;
}

/// Rotation angle that makes psi real and non-negative.
inline double alignment_angle(const TwoModeState& state) { return std::arg(state.psi) / 2.0; }

// --- covariance and statistics --------------------------------------------------------

inline constexpr double kPhysicalityTolerance = 1e-9;

inline QuadratureCovariance covariance_matrix(const TwoModeState& s) {
  if (s.n_plus < 0.0 || s.n_minus < 0.0) throw UnphysicalState("negative occupation");
  QuadratureCovariance cov;
  cov.omega_plus = s.omega_plus;
  cov.omega_minus = s.omega_minus;
  auto& m = cov.matrix;
  m.setZero();
  m(kIPlus, kIPlus) = m(kQPlus, kQPlus) = s.n_plus + 0.5;
  m(kIMinus, kIMinus) = m(kQMinus, kQMinus) = s.n_minus + 0.5;
  m(kIPlus, kIMinus) = m(kIMinus, kIPlus) = s.psi.real();
  m(kQPlus, kQMinus) = m(kQMinus, kQPlus) = -s.psi.real();
  m(kIPlus, kQMinus) = m(kQMinus, kIPlus) = s.psi.imag();
  m(kIMinus, kQPlus) = m(kQPlus, kIMinus) = s.psi.imag();
  const auto nu = symplectic_eigenvalues(m);
  if (nu[0] < 0.5 - kPhysicalityTolerance)
    throw UnphysicalState("symplectic eigenvalue " + std::to_string(nu[0]) + " < 1/2");
  return cov;
}

/// lambda_pm = (2 w_pm / w_d)^{1/2}: rescales quanta at w_pm to quanta at w_d/2.
struct ModulationBasis {
  double epsilon = 0.0;
  double omega_d = 0.0;
  double lambda_plus = 1.0;
  double lambda_minus = 1.0;

  static ModulationBasis make(double omega_d, double epsilon) {
    return {epsilon, omega_d, std::sqrt(2.0 * (omega_d / 2.0 + epsilon) / omega_d),
            std::sqrt(2.0 * (omega_d / 2.0 - epsilon) / omega_d)};
  }
  static ModulationBasis for_state(const TwoModeState& s) {
    return make(s.omega_d, (s.omega_plus - s.omega_minus) / 2.0);
  }
  double omega_plus() const { return omega_d / 2.0 + epsilon; }
  double omega_minus() const { return omega_d / 2.0 - epsilon; }
};

/// (Sigma11 - Sigma22)/(Sigma11 + Sigma22) for the modulation operators
/// alpha1 = (l+ a+ + l- a-^dag)/sqrt2, alpha2 = (-i l+ a+ + i l- a-^dag)/sqrt2.
inline double sigma2_modulation(const TwoModeState& s, const ModulationBasis& basis) {
  const double scale = std::max(s.omega_d, basis.omega_d);
  if (std::abs(basis.omega_plus() - s.omega_plus) > 1e-9 * scale ||
      std::abs(basis.omega_minus() - s.omega_minus) > 1e-9 * scale)
    throw std::invalid_argument("sigma2_modulation: basis frequencies do not match the state");
  const double lp2 = basis.lambda_plus * basis.lambda_plus;
  const double lm2 = basis.lambda_minus * basis.lambda_minus;
  const double common = 0.25 * (lp2 * (2.0 * s.n_plus + 1.0) + lm2 * (2.0 * s.n_minus + 1.0));
  const double cross = basis.lambda_plus * basis.lambda_minus * s.psi.real();
  const double sigma11 = common + cross;
  const double sigma22 = common - cross;
  return (sigma11 - sigma22) / (sigma11 + sigma22);
}

/// Which quadrature scale the sigma statistics are evaluated in. `voltage`
/// weights each sideband by its hbar*omega prefactor (needs the sideband
/// frequencies in the covariance; falls back to `photon` without them).
enum class QuadratureUnits { photon, voltage };

inline std::array<double, 2> sideband_weights(const QuadratureCovariance& cov, QuadratureUnits u) {
  if (u == QuadratureUnits::photon || cov.omega_plus <= 0.0 || cov.omega_minus <= 0.0)
    return {1.0, 1.0};
  const double mid = (cov.omega_plus + cov.omega_minus) / 2.0;
  return {cov.omega_plus / mid, cov.omega_minus / mid};
}

inline double average_power(const QuadratureCovariance& cov, QuadratureUnits u = QuadratureUnits::photon) {
  const auto w = sideband_weights(cov, u);
  const auto& m = cov.matrix;
  return (w[0] * (m(kIPlus, kIPlus) + m(kQPlus, kQPlus)) +
          w[1] * (m(kIMinus, kIMinus) + m(kQMinus, kQMinus))) / 2.0;
}

/// (<I+I-> - <Q+Q->) / P_avg.
inline double sigma2_quadrature(const QuadratureCovariance& cov,
                                QuadratureUnits u = QuadratureUnits::voltage) {
  const auto w = sideband_weights(cov, u);
  const auto& m = cov.matrix;
  return std::sqrt(w[0] * w[1]) * (m(kIPlus, kIMinus) - m(kQPlus, kQMinus)) / average_power(cov, u);
}

/// (<I^2> - <Q^2>) / (<I^2> + <Q^2>) on one sideband.
inline double sigma1(const QuadratureCovariance& cov, Sideband s) {
  const int i = s == Sideband::plus ? kIPlus : kIMinus;
  const int q = s == Sideband::plus ? kQPlus : kQMinus;
  const double ii = cov(i, i), qq = cov(q, q);
  return (ii - qq) / (ii + qq);
}

/// Psi = (<I+I-> - <Q+Q->) + i(<I+Q-> + <I-Q+>).
inline complex psi_correlator(const QuadratureCovariance& cov) {
  return {cov(kIPlus, kIMinus) - cov(kQPlus, kQMinus), cov(kIPlus, kQMinus) + cov(kIMinus, kQPlus)};
}

/// Digital rotation of a measured Psi by theta.
inline complex rotate_correlator(complex psi, double theta) {
  return psi * std::polar(1.0, -2.0 * theta);
}

}  // namespace dce

#endif  // DCE_GAUSSIAN_STATE_HPP
