#ifndef DCE_PHYSICS_HPP
#define DCE_PHYSICS_HPP

// Closed-form device physics of a SQUID-terminated transmission line:
// flux-tuned inductance, electrical length, reflection, the first-order
// parametric scattering amplitude and the photon-flux spectra built on it.
//
// Units are SI throughout; frequencies are angular (rad/s) unless a name
// says otherwise. Spectral densities are dimensionless occupations
// (photons per second per hertz of bandwidth).

#include <algorithm>
#include <cmath>
#include <complex>
#include <optional>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "dce/constants.hpp"
#include "dce/errors.hpp"

namespace dce {

using complex = std::complex<double>;

/// Line and SQUID constants. The line speed and impedance are always
/// derived from the per-length inductance and capacitance.
class DeviceParams {
 public:
  DeviceParams() = default;
  DeviceParams(double josephson_inductance0, double inductance_per_length,
               double capacitance_per_length, double flux_bias = 0.0,
               double flux_quantum = constants::flux_quantum)
      : L_J0_(josephson_inductance0),
        L_0_(inductance_per_length),
        C_0_(capacitance_per_length),
        flux_bias_(flux_bias),
        flux_quantum_(flux_quantum) {
    if (!(L_J0_ > 0.0)) throw std::invalid_argument("DeviceParams: L_J0 must be > 0");
    if (!(L_0_ > 0.0)) throw std::invalid_argument("DeviceParams: L_0 must be > 0");
    if (!(C_0_ > 0.0)) throw std::invalid_argument("DeviceParams: C_0 must be > 0");
    if (!(flux_quantum_ > 0.0)) throw std::invalid_argument("DeviceParams: flux quantum must be > 0");
    if (!std::isfinite(flux_bias_)) throw std::invalid_argument("DeviceParams: flux bias must be finite");
  }

  /// A 50 ohm line with L_0 = 4.6e-7 H/m and L_J(0) = 0.23 nH.
  static DeviceParams reference_device() {
    constexpr double L0 = 4.6e-7;
    constexpr double Z0 = 50.0;
    return DeviceParams(0.23e-9, L0, L0 / (Z0 * Z0));
  }

  double L_J0() const noexcept { return L_J0_; }
  double L_0() const noexcept { return L_0_; }
  double C_0() const noexcept { return C_0_; }
  double flux_bias() const noexcept { return flux_bias_; }
  double flux_quantum() const noexcept { return flux_quantum_; }
  double c_0() const noexcept { return 1.0 / std::sqrt(L_0_ * C_0_); }
  double Z_0() const noexcept { return std::sqrt(L_0_ / C_0_); }

  DeviceParams with_flux_bias(double flux) const {
    return DeviceParams(L_J0_, L_0_, C_0_, flux, flux_quantum_);
  }

  friend bool operator==(const DeviceParams&, const DeviceParams&) = default;

 private:
  double L_J0_ = 0.23e-9;
  double L_0_ = 4.6e-7;
  double C_0_ = 4.6e-7 / 2500.0;
  double flux_bias_ = 0.0;
  double flux_quantum_ = constants::flux_quantum;
};

/// Sinusoidal modulation of the boundary: delta_len is the amplitude of the
/// electrical-length swing. theta_d is the drive phase referred to the
/// sideband field: shifting it by t multiplies the pair correlator by e^{-2it}.
struct DriveParams {
  double omega_d = constants::two_pi * 10.3e9;
  double delta_len = 0.0;
  double theta_d = 0.0;

  double v_e() const noexcept { return delta_len * omega_d; }

  friend bool operator==(const DriveParams&, const DriveParams&) = default;
};

/// Drive whose peak boundary velocity is `velocity_ratio` * c_0.
inline DriveParams drive_for_velocity_ratio(double omega_d, double velocity_ratio,
                                            const DeviceParams& dev, double theta_d = 0.0) {
  return DriveParams{omega_d, velocity_ratio * dev.c_0() / omega_d, theta_d};
}

/// Maps an uncalibrated drive power in dB onto delta_len assuming
/// power ∝ delta_len^2, anchored at (reference_db, reference_delta_len).
inline double delta_len_from_power_db(double power_db, double reference_db,
                                      double reference_delta_len) {
  return reference_delta_len * std::pow(10.0, (power_db - reference_db) / 20.0);
}

struct Resonance {
  double center = 0.0;          // rad/s
  double quality_factor = 1.0;  // Q in [1, 1e6]
  double peak = 1.0;            // |A|^2 at the center

  friend bool operator==(const Resonance&, const Resonance&) = default;
};

struct SpectralEnvironment {
  enum class Kind { flat, resonant };

  Kind kind = Kind::flat;
  std::vector<Resonance> resonances;

  static SpectralEnvironment flat() { return {}; }

  /// Single resonance; peak defaults to Q^2.
  static SpectralEnvironment single(double center, double q, std::optional<double> peak = {}) {
    SpectralEnvironment env{Kind::resonant, {Resonance{center, q, peak.value_or(q * q)}}};
    env.validate();
    return env;
  }

  void validate() const {
    for (const auto& r : resonances) {
      if (!(r.center > 0.0)) throw std::invalid_argument("resonance center must be > 0");
      if (!(r.quality_factor >= 1.0 && r.quality_factor <= 1e6))
        throw std::invalid_argument("resonance Q must lie in [1, 1e6]");
      if (!(r.peak > 0.0)) throw std::invalid_argument("resonance peak amplitude must be > 0");
    }
  }

  friend bool operator==(const SpectralEnvironment&, const SpectralEnvironment&) = default;
};

struct ThermalEnvironment {
  double temperature = 0.0;  // K
};

/// Warning text when the first-order scattering relation is being pushed
/// past where it can be trusted; throws if the boundary outruns the line.
inline std::optional<std::string> check_drive(const DriveParams& drive, const DeviceParams& dev) {
  if (!(drive.omega_d > 0.0)) throw std::invalid_argument("drive: omega_d must be > 0");
  if (!(drive.delta_len >= 0.0)) throw std::invalid_argument("drive: delta_len must be >= 0");
  const double beta = drive.v_e() / dev.c_0();
  if (!(beta < 1.0)) throw std::invalid_argument("drive: v_e/c_0 must be < 1");
  if (beta > 0.25)
    return "perturbative: v_e/c_0 = " + std::to_string(beta) +
           " > 0.25, first-order scattering formulas degrade";
  return std::nullopt;
}

// --- SQUID ------------------------------------------------------------------

inline constexpr double kDegenerateCosine = 1e-9;

/// L_J(flux) = L_J0 / |cos(pi flux / flux_quantum)| (symmetric SQUID).
inline double josephson_inductance(double flux, const DeviceParams& dev) {
  const double c = std::abs(std::cos(constants::pi * flux / dev.flux_quantum()));
  if (c < kDegenerateCosine)
    throw DegenerateFlux("flux " + std::to_string(flux / dev.flux_quantum()) +
                         " Phi0 is at a half-integer flux quantum; L_J diverges");
  return dev.L_J0() / c;
}

inline double electrical_length(double flux, const DeviceParams& dev) {
  return josephson_inductance(flux, dev) / dev.L_0();
}

/// Reflection off an ideal line stub of the given electrical length.
inline complex reflection_for_length(double omega, double length, double c_0) {
  if (!(omega > 0.0)) throw OutOfBand("reflection: omega must be > 0");
  return -std::polar(1.0, 2.0 * (omega / c_0) * length);
}

inline complex reflection_coefficient(double omega, double flux, const DeviceParams& dev) {
  return reflection_for_length(omega, electrical_length(flux, dev), dev.c_0());
}

// --- environment --------------------------------------------------------------

/// A(omega): 1 for a flat line; otherwise a product of complex Lorentzian
/// factors (sqrt(p) - i x)/(1 - i x) with x = 2Q(omega - center)/center, so
/// |A|^2 = (p + x^2)/(1 + x^2): peak p at the center, excess over the unit
/// background falls to half at full width center/Q.
inline complex spectral_amplitude(double omega, const SpectralEnvironment& env) {
  if (!(omega > 0.0)) throw OutOfBand("spectral_amplitude: omega must be > 0");
  complex a{1.0, 0.0};
  if (env.kind == SpectralEnvironment::Kind::flat) return a;
  for (const auto& r : env.resonances) {
    const double x = 2.0 * r.quality_factor * (omega - r.center) / r.center;
    a *= complex(std::sqrt(r.peak), -x) / complex(1.0, -x);
  }
  return a;
}

// --- parametric scattering -----------------------------------------------------

inline void require_in_band(double omega, const DriveParams& drive, const char* who) {
  if (!(omega > 0.0 && omega < drive.omega_d))
    throw OutOfBand(std::string(who) + ": omega must lie in (0, omega_d)");
}

/// S(omega) = -i (delta_len/c_0) sqrt(omega (omega_d - omega)) A(omega) A*(omega_d - omega),
/// times the drive phase factor e^{-2i theta_d}.
inline complex scattering_amplitude(double omega, const DriveParams& drive,
                                    const SpectralEnvironment& env, const DeviceParams& dev) {
  require_in_band(omega, drive, "scattering_amplitude");
  const double partner = drive.omega_d - omega;
  const double magnitude = (drive.delta_len / dev.c_0()) * std::sqrt(omega * partner);
  const complex dos = spectral_amplitude(omega, env) * std::conj(spectral_amplitude(partner, env));
  return complex(0.0, -magnitude) * dos * std::polar(1.0, -2.0 * drive.theta_d);
}

/// Bose-Einstein occupation; exactly 0 at T = 0.
inline double thermal_occupation(double omega, double temperature) {
  if (!(omega > 0.0)) throw OutOfBand("thermal_occupation: omega must be > 0");
  if (temperature < 0.0) throw std::invalid_argument("thermal_occupation: T must be >= 0");
  if (temperature == 0.0) return 0.0;
  return 1.0 / std::expm1(constants::hbar * omega / (constants::boltzmann * temperature));
}

/// n_out = n_in(omega) + |S|^2 n_in(omega_d - omega) + |S|^2.
inline double output_flux_density(double omega, const DriveParams& drive,
                                  const SpectralEnvironment& env, const DeviceParams& dev,
                                  double temperature) {
  const double s2 = std::norm(scattering_amplitude(omega, drive, env, dev));
  const double n_in = thermal_occupation(omega, temperature);
  const double n_partner = thermal_occupation(drive.omega_d - omega, temperature);
  return n_in + s2 * n_partner + s2;
}

/// Vacuum-driven output of an ideal (flat) line: (delta_len/c_0)^2 omega (omega_d - omega).
inline double dce_flux_density(double omega, const DriveParams& drive, const DeviceParams& dev) {
  require_in_band(omega, drive, "dce_flux_density");
  const double k = drive.delta_len / dev.c_0();
  return k * k * omega * (drive.omega_d - omega);
}

// --- integrated flux -------------------------------------------------------------

struct QuadratureOptions {
  double relative_tolerance = 1e-9;
  double absolute_floor = 1e-30;
  unsigned max_depth = 20;
};

/// Adaptive Gauss-Kronrod over [lo, hi], split at `breaks` (sorted, inside the
/// interval). Throws QuadratureFailure if the error estimate misses the target.
template <typename F>
double integrate_band(F&& f, double lo, double hi, std::vector<double> breaks = {},
                      const QuadratureOptions& opt = {}) {
  using boost::math::quadrature::gauss_kronrod;
  std::vector<double> edges{lo};
  std::sort(breaks.begin(), breaks.end());
  for (double b : breaks)
    if (b > edges.back() && b < hi) edges.push_back(b);
  edges.push_back(hi);

  double total = 0.0;
  double total_error = 0.0;
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
    double err = 0.0;
    total += gauss_kronrod<double, 31>::integrate(f, edges[i], edges[i + 1], opt.max_depth,
                                                  opt.relative_tolerance, &err);
    total_error += err;
  }
  if (!std::isfinite(total) ||
      total_error > std::max(opt.relative_tolerance * std::abs(total), opt.absolute_floor))
    throw QuadratureFailure("integration over [" + std::to_string(lo) + ", " +
                            std::to_string(hi) + "] reached error " +
                            std::to_string(total_error));
  return total;
}

enum class IntegrationMethod { closed_form, numeric };

/// Photons per second radiated by an ideal line: (omega_d / 12 pi)(v_e/c_0)^2,
/// or the same by quadrature of dce_flux_density / 2pi over (0, omega_d).
inline double integrated_dce_flux(const DriveParams& drive, const DeviceParams& dev,
                                  IntegrationMethod method = IntegrationMethod::closed_form) {
  check_drive(drive, dev);
  if (method == IntegrationMethod::closed_form) {
    const double beta = drive.v_e() / dev.c_0();
    return drive.omega_d / (12.0 * constants::pi) * beta * beta;
  }
  if (drive.delta_len == 0.0) return 0.0;
  auto density = [&](double w) { return dce_flux_density(w, drive, dev) / constants::two_pi; };
  return integrate_band(density, 0.0, drive.omega_d);
}

/// Photons per second from vacuum in [lo, hi] for an arbitrary environment:
/// integral of |S(omega)|^2 / 2pi. Resonance centers and their pump partners
/// are used as quadrature breakpoints.
inline double integrated_flux(const DriveParams& drive, const SpectralEnvironment& env,
                              const DeviceParams& dev, double lo, double hi) {
  require_in_band(lo, drive, "integrated_flux");
  require_in_band(hi, drive, "integrated_flux");
  std::vector<double> breaks;
  for (const auto& r : env.resonances) {
    for (double w : {r.center, drive.omega_d - r.center}) {
      const double half_width = w / (2.0 * r.quality_factor);
      breaks.insert(breaks.end(), {w - half_width, w, w + half_width});
    }
  }
  auto density = [&](double w) {
    return std::norm(scattering_amplitude(w, drive, env, dev)) / constants::two_pi;
  };
  return integrate_band(density, lo, hi, breaks);
}

// --- analytic squeezing ------------------------------------------------------------

/// sigma2 = 2 (w+ w- / w_d)(delta_len/c_0) / (1 + w+ w- (delta_len/c_0)^2),
/// w_pm = w_d/2 ± epsilon.
inline double analytic_sigma2(double epsilon, const DriveParams& drive, const DeviceParams& dev) {
  if (!(epsilon >= 0.0 && epsilon < drive.omega_d / 2.0))
    throw OutOfBand("analytic_sigma2: epsilon must lie in [0, omega_d/2)");
  const double wp = drive.omega_d / 2.0 + epsilon;
  const double wm = drive.omega_d / 2.0 - epsilon;
  const double k = drive.delta_len / dev.c_0();
  return 2.0 * (wp * wm / drive.omega_d) * k / (1.0 + wp * wm * k * k);
}

}  // namespace dce

#endif  // DCE_PHYSICS_HPP
