#ifndef DCE_FOCK_ORACLE_HPP
#define DCE_FOCK_ORACLE_HPP

// Brute-force check of the Gaussian construction: the two-mode squeezed
// vacuum exp[r (e^{i phi} a+^dag a-^dag - h.c.)] |0,0> built by exponentiating
// the generator in a truncated number basis, with quadrature moments taken
// from explicit operator actions. Shares no code with gaussian_state.hpp
// beyond the QuadratureCovariance container.

#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "dce/gaussian_state.hpp"

namespace dce {

struct FockOracleResult {
  QuadratureCovariance covariance;
  double mean_n_plus = 0.0;
  double mean_n_minus = 0.0;
  double top_population = 0.0;  // weight on |cutoff, *> and |*, cutoff>
};

namespace detail {

class TwoModeFockSpace {
 public:
  explicit TwoModeFockSpace(int cutoff) : levels_(cutoff + 1) {}

  int levels() const { return levels_; }
  Eigen::Index dim() const { return Eigen::Index(levels_) * levels_; }
  Eigen::Index index(int n_plus, int n_minus) const { return Eigen::Index(n_plus) * levels_ + n_minus; }

  Eigen::SparseMatrix<complex> squeeze_generator(double r, double phase) const {
    std::vector<Eigen::Triplet<complex>> trip;
    const complex up = r * std::polar(1.0, phase);
    for (int p = 0; p < levels_; ++p) {
      for (int m = 0; m < levels_; ++m) {
        if (p + 1 < levels_ && m + 1 < levels_) {
          const double amp = std::sqrt(double(p + 1) * double(m + 1));
          trip.emplace_back(index(p + 1, m + 1), index(p, m), up * amp);
          trip.emplace_back(index(p, m), index(p + 1, m + 1), -std::conj(up) * amp);
        }
      }
    }
    Eigen::SparseMatrix<complex> g(dim(), dim());
    g.setFromTriplets(trip.begin(), trip.end());
    return g;
  }

  // Quadrature operator q in {I+, Q+, I-, Q-} applied to a state vector.
  Eigen::VectorXcd apply_quadrature(int q, const Eigen::VectorXcd& v) const {
    const bool plus = q == kIPlus || q == kQPlus;
    const bool is_i = q == kIPlus || q == kIMinus;
    Eigen::VectorXcd out = Eigen::VectorXcd::Zero(dim());
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    // I = (a + a^dag)/sqrt2, Q = -i (a - a^dag)/sqrt2
    const complex c_lower = is_i ? complex(inv_sqrt2, 0.0) : complex(0.0, -inv_sqrt2);
    const complex c_raise = is_i ? complex(inv_sqrt2, 0.0) : complex(0.0, inv_sqrt2);
    for (int p = 0; p < levels_; ++p) {
      for (int m = 0; m < levels_; ++m) {
        const complex x = v(index(p, m));
        if (x == complex{}) continue;
        const int n = plus ? p : m;
        if (n > 0) {
          const auto target = plus ? index(p - 1, m) : index(p, m - 1);
          out(target) += c_lower * std::sqrt(double(n)) * x;
        }
        if (n + 1 < levels_) {
          const auto target = plus ? index(p + 1, m) : index(p, m + 1);
          out(target) += c_raise * std::sqrt(double(n + 1)) * x;
        }
      }
    }
    return out;
  }

 private:
  int levels_;
};

// exp(G) v by Taylor series in `steps` sub-steps of G/steps.
inline Eigen::VectorXcd expm_action(const Eigen::SparseMatrix<complex>& g, Eigen::VectorXcd v) {
  double norm1 = 0.0;
  for (int k = 0; k < g.outerSize(); ++k) {
    double col = 0.0;
    for (Eigen::SparseMatrix<complex>::InnerIterator it(g, k); it; ++it) col += std::abs(it.value());
    norm1 = std::max(norm1, col);
  }
  const int steps = std::max(1, int(std::ceil(norm1)));
  const Eigen::SparseMatrix<complex> h = g / double(steps);
  for (int s = 0; s < steps; ++s) {
    Eigen::VectorXcd term = v;
    Eigen::VectorXcd sum = v;
    for (int k = 1; k < 200; ++k) {
      term = (h * term) / double(k);
      sum += term;
      if (term.norm() < 1e-18 * sum.norm()) break;
    }
    v = sum;
  }
  return v;
}

}  // namespace detail

inline constexpr double kMaxTopPopulation = 1e-12;

inline FockOracleResult fock_oracle(double r, double phase, int cutoff) {
  if (!(r >= 0.0 && r <= 0.3)) throw std::invalid_argument("fock_oracle: r must lie in [0, 0.3]");
  if (cutoff < 20) throw std::invalid_argument("fock_oracle: cutoff must be >= 20");

  const detail::TwoModeFockSpace space(cutoff);
  Eigen::VectorXcd vac = Eigen::VectorXcd::Zero(space.dim());
  vac(space.index(0, 0)) = 1.0;
  const Eigen::VectorXcd psi = detail::expm_action(space.squeeze_generator(r, phase), vac);

  FockOracleResult out;
  for (int p = 0; p < space.levels(); ++p) {
    for (int m = 0; m < space.levels(); ++m) {
      const double w = std::norm(psi(space.index(p, m)));
      out.mean_n_plus += p * w;
      out.mean_n_minus += m * w;
      if (p == cutoff || m == cutoff) out.top_population += w;
    }
  }
  if (out.top_population > kMaxTopPopulation)
    throw CutoffTooSmall("top Fock level holds population " + std::to_string(out.top_population));

  std::array<Eigen::VectorXcd, 4> applied;
  for (int q = 0; q < 4; ++q) applied[q] = space.apply_quadrature(q, psi);
  // For hermitian X, Y: <(XY + YX)/2> = Re <X psi | Y psi>.
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) out.covariance.matrix(i, j) = applied[i].dot(applied[j]).real();
  return out;
}

inline QuadratureCovariance fock_oracle_covariance(double r, double phase, int cutoff = 30) {
  return fock_oracle(r, phase, cutoff).covariance;
}

}  // namespace dce

#endif  // DCE_FOCK_ORACLE_HPP
