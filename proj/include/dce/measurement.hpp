#ifndef DCE_MEASUREMENT_HPP
#define DCE_MEASUREMENT_HPP

// Synthetic heterodyne records of the four sideband quadratures and the
// zero-lag / lag-domain estimators run on them.
//
// Record model: one independent Gaussian 4-vector per inverse analysis
// bandwidth, drawn from (source covariance + amplifier noise), then passed
// per channel through a symmetric raised-cosine antialias FIR. All lag
// structure comes from that filter. Records stay in dimensionless
// quadrature units (vacuum variance 1/2 before filtering).

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <tuple>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "dce/gaussian_state.hpp"
#include "dce/parallel.hpp"

namespace dce {

struct AmplifierModel {
  double noise_temperature = 0.0;  // K
  double gain = 1.0;               // metadata; estimators are gain-invariant

  /// Added variance per quadrature, k_B T_N / (hbar omega).
  double added_quanta(double omega) const {
    if (!(noise_temperature >= 0.0)) throw std::invalid_argument("amplifier: T_N must be >= 0");
    if (!(omega > 0.0)) throw std::invalid_argument("amplifier: omega must be > 0");
    return constants::boltzmann * noise_temperature / (constants::hbar * omega);
  }

  friend bool operator==(const AmplifierModel&, const AmplifierModel&) = default;
};

struct DigitizerConfig {
  double analysis_bandwidth = 10e6;  // Hz
  std::size_t samples_per_channel = 1'000'000;
  std::size_t max_lag = 32;
  std::size_t antialias_taps = 31;
  std::uint64_t rng_seed = 1;
  double chop_period = 50e-3;  // s

  void validate() const {
    if (!(analysis_bandwidth > 0.0)) throw std::invalid_argument("digitizer: analysis_bandwidth must be > 0");
    if (antialias_taps < 1 || antialias_taps % 2 == 0 || antialias_taps > 1025)
      throw std::invalid_argument("digitizer: antialias_taps must be odd in [1, 1025]");
    if (samples_per_channel < 10 * max_lag)
      throw std::invalid_argument("digitizer: samples_per_channel must be >= 10 * max_lag");
    if (samples_per_channel == 0) throw std::invalid_argument("digitizer: samples_per_channel must be > 0");
    if (!(chop_period > 0.0)) throw std::invalid_argument("digitizer: chop_period must be > 0");
  }

  /// Equal in everything except the RNG seed.
  bool compatible_with(const DigitizerConfig& o) const {
    return analysis_bandwidth == o.analysis_bandwidth && samples_per_channel == o.samples_per_channel &&
           max_lag == o.max_lag && antialias_taps == o.antialias_taps && chop_period == o.chop_period;
  }

  friend bool operator==(const DigitizerConfig&, const DigitizerConfig&) = default;
};

/// Symmetric raised-cosine FIR, h[k] ∝ 1 - cos(2 pi (k+1)/(T+1)), unit DC gain.
class AntialiasFilter {
 public:
  explicit AntialiasFilter(std::size_t taps) : taps_(taps) {
    double sum = 0.0;
    for (std::size_t k = 0; k < taps; ++k) {
      taps_[k] = 0.5 * (1.0 - std::cos(constants::two_pi * double(k + 1) / double(taps + 1)));
      sum += taps_[k];
    }
    for (auto& h : taps_) h /= sum;
  }

  const std::vector<double>& taps() const { return taps_; }
  std::size_t size() const { return taps_.size(); }

  /// rho(lag) = sum_k h[k] h[k + |lag|]; rho(0) is the power gain.
  double autocorrelation(std::ptrdiff_t lag) const {
    const std::size_t l = std::size_t(lag < 0 ? -lag : lag);
    if (l >= taps_.size()) return 0.0;
    double acc = 0.0;
    for (std::size_t k = 0; k < taps_.size() - l; ++k) acc += taps_[k] * taps_[k + l];
    return acc;
  }
  double power_gain() const { return autocorrelation(0); }

  /// sum_lag (rho(lag)/rho(0))^2: samples per effectively independent sample.
  double correlation_length() const {
    const double r0 = power_gain();
    double acc = 0.0;
    const auto t = std::ptrdiff_t(taps_.size());
    for (std::ptrdiff_t lag = -t + 1; lag < t; ++lag) acc += std::pow(autocorrelation(lag) / r0, 2);
    return acc;
  }

 private:
  std::vector<double> taps_;
};

enum Channel : int { kChIPlus = 0, kChQPlus = 1, kChIMinus = 2, kChQMinus = 3 };
inline constexpr std::array<const char*, 4> kChannelNames{"i_plus", "q_plus", "i_minus", "q_minus"};

struct RecordProvenance {
  std::uint64_t seed = 0;
  DigitizerConfig config;
  std::string source_id;
  double center_frequency = 0.0;  // rad/s; sets the amplifier's added quanta
  double added_quanta = 0.0;

  friend bool operator==(const RecordProvenance&, const RecordProvenance&) = default;
};

struct VoltageRecord {
  std::array<std::vector<double>, 4> channels;
  RecordProvenance provenance;

  std::size_t size() const { return channels[0].size(); }
  const std::vector<double>& operator[](int c) const { return channels[std::size_t(c)]; }

  void validate() const {
    for (const auto& ch : channels) {
      if (ch.size() != channels[0].size()) throw FormatError("record channels differ in length");
      for (double x : ch)
        if (!std::isfinite(x)) throw FormatError("record holds a non-finite sample");
    }
  }
};

inline constexpr std::size_t kRecordBlock = 1u << 16;

namespace detail {

// Raw (pre-filter) samples [0, count) of block `block`: 4 standard normals
// per sample in channel order, mixed by the Cholesky factor.
inline void draw_block(std::uint64_t seed, std::size_t block, std::size_t count,
                       const Eigen::Matrix4d& factor, std::array<std::vector<double>, 4>& out,
                       std::size_t offset) {
  std::mt19937_64 rng(derive_seed(seed, block));
  std::normal_distribution<double> normal;
  for (std::size_t n = 0; n < count; ++n) {
    Eigen::Vector4d z;
    for (int c = 0; c < 4; ++c) z[c] = normal(rng);
    const Eigen::Vector4d x = factor.triangularView<Eigen::Lower>() * z;
    for (int c = 0; c < 4; ++c) out[std::size_t(c)][offset + n] = x[c];
  }
}

inline Eigen::Matrix4d factorize(const Eigen::Matrix4d& v) {
  Eigen::LLT<Eigen::Matrix4d> llt(v);
  if (llt.info() != Eigen::Success) {
    llt.compute(v + 1e-12 * Eigen::Matrix4d::Identity());
    if (llt.info() != Eigen::Success)
      throw FactorizationFailure("record covariance is not positive definite");
  }
  return llt.matrixL();
}

}  // namespace detail

/// Draws a record of cov + n_amp * I, n_amp = k_B T_N / (hbar center_freq),
/// filtered by the antialias FIR. Raw samples come in blocks of kRecordBlock,
/// block j seeded with derive_seed(cfg.rng_seed, j), so the output does not
/// depend on `workers`.
inline VoltageRecord sample_record(const QuadratureCovariance& cov, const AmplifierModel& amp,
                                   const DigitizerConfig& cfg, double center_freq,
                                   unsigned workers = 1, std::string source_id = {}) {
  cfg.validate();
  const double n_amp = amp.added_quanta(center_freq);
  const Eigen::Matrix4d factor =
      detail::factorize(cov.matrix + n_amp * Eigen::Matrix4d::Identity());
  const AntialiasFilter filter(cfg.antialias_taps);
  const auto& h = filter.taps();
  const std::size_t taps = h.size();
  const std::size_t n = cfg.samples_per_channel;

  VoltageRecord rec;
  for (auto& ch : rec.channels) ch.assign(n, 0.0);
  rec.provenance = {cfg.rng_seed, cfg, std::move(source_id), center_freq, n_amp};

  const std::size_t blocks = (n + kRecordBlock - 1) / kRecordBlock;
  parallel_for(blocks, workers, [&](std::size_t b) {
    const std::size_t begin = b * kRecordBlock;
    const std::size_t len = std::min(kRecordBlock, n - begin);
    std::array<std::vector<double>, 4> raw;
    for (auto& ch : raw) ch.resize(kRecordBlock + taps - 1);
    detail::draw_block(cfg.rng_seed, b, kRecordBlock, factor, raw, 0);
    if (taps > 1) detail::draw_block(cfg.rng_seed, b + 1, taps - 1, factor, raw, kRecordBlock);
    for (int c = 0; c < 4; ++c) {
      const double* x = raw[std::size_t(c)].data();
      double* y = rec.channels[std::size_t(c)].data() + begin;
      for (std::size_t i = 0; i < len; ++i) {
        double acc = 0.0;
        for (std::size_t k = 0; k < taps; ++k) acc += h[k] * x[i + k];
        y[i] = acc;
      }
    }
  });
  return rec;
}

// --- zero-lag moment statistics ---------------------------------------------------

struct Estimate {
  double value = 0.0;
  double se = 0.0;
};

struct PsiEstimate {
  complex value;
  double se_re = 0.0;
  double se_im = 0.0;
  double cov_re_im = 0.0;  // covariance of the real and imaginary estimates

  /// Digital rotation value * e^{-2i theta}, errors rotated with it.
  PsiEstimate rotated(double theta) const {
    const double c = std::cos(2.0 * theta), s = std::sin(2.0 * theta);
    // (re', im') = [[c, s], [-s, c]] (re, im)
    const double vrr = se_re * se_re, vii = se_im * se_im, vri = cov_re_im;
    PsiEstimate out;
    out.value = rotate_correlator(value, theta);
    out.se_re = std::sqrt(std::max(0.0, c * c * vrr + s * s * vii + 2.0 * c * s * vri));
    out.se_im = std::sqrt(std::max(0.0, s * s * vrr + c * c * vii - 2.0 * c * s * vri));
    out.cov_re_im = -c * s * vrr + c * s * vii + (c * c - s * s) * vri;
    return out;
  }
};

/// Means and covariance of the ten per-sample quadrature products x_i x_j
/// (i <= j), plus the effective-sample-size correction of the filter.
class MomentStatistics {
 public:
  using Vec = Eigen::Matrix<double, 10, 1>;
  using Mat = Eigen::Matrix<double, 10, 10>;

  static constexpr int pair(int i, int j) {
    if (i > j) std::swap(i, j);
    return i * 4 - i * (i - 1) / 2 + (j - i);
  }

  static MomentStatistics compute(const VoltageRecord& rec, unsigned workers = 1) {
    const std::size_t n = rec.size();
    if (n < kMinimumSamples) throw RecordTooShort("record has " + std::to_string(n) + " samples");
    const std::size_t blocks = (n + kRecordBlock - 1) / kRecordBlock;
    std::vector<Vec> sums(blocks, Vec::Zero());
    std::vector<Mat> sq(blocks, Mat::Zero());
    parallel_for(blocks, workers, [&](std::size_t b) {
      const std::size_t begin = b * kRecordBlock;
      const std::size_t end = std::min(n, begin + kRecordBlock);
      Vec s = Vec::Zero();
      Mat m = Mat::Zero();
      Vec p;
      for (std::size_t t = begin; t < end; ++t) {
        const double x[4] = {rec.channels[0][t], rec.channels[1][t], rec.channels[2][t], rec.channels[3][t]};
        int k = 0;
        for (int i = 0; i < 4; ++i)
          for (int j = i; j < 4; ++j) p[k++] = x[i] * x[j];
        s += p;
        m.selfadjointView<Eigen::Upper>().rankUpdate(p);
      }
      sums[b] = s;
      sq[b] = m.selfadjointView<Eigen::Upper>();
    });
    Vec total = Vec::Zero();
    Mat total_sq = Mat::Zero();
    for (std::size_t b = 0; b < blocks; ++b) {
      total += sums[b];
      total_sq += sq[b];
    }
    MomentStatistics st;
    st.count_ = n;
    st.mean_ = total / double(n);
    st.cov_ = total_sq / double(n) - st.mean_ * st.mean_.transpose();
    st.correlation_length_ = AntialiasFilter(rec.provenance.config.antialias_taps).correlation_length();
    st.filter_gain_ = AntialiasFilter(rec.provenance.config.antialias_taps).power_gain();
    return st;
  }

  double moment(int i, int j) const { return mean_[pair(i, j)]; }
  const Vec& mean() const { return mean_; }
  std::size_t count() const { return count_; }
  double filter_gain() const { return filter_gain_; }
  double effective_samples() const { return double(count_) / correlation_length_; }

  /// Variance of the estimate of c . mean.
  double variance_of(const Vec& c) const { return c.dot(cov_ * c) / effective_samples(); }
  double covariance_of(const Vec& a, const Vec& b) const { return a.dot(cov_ * b) / effective_samples(); }

  /// num/den estimate (den shifted by `offset`) with delta-method error.
  Estimate ratio(const Vec& num, const Vec& den, double offset = 0.0) const {
    const double d = den.dot(mean_) - offset;
    if (!(d > 0.0)) throw NegativeDenominator("normalizing power " + std::to_string(d) + " <= 0");
    const double value = num.dot(mean_) / d;
    const Vec grad = (num - value * den) / d;
    return {value, std::sqrt(variance_of(grad))};
  }

  static constexpr std::size_t kMinimumSamples = 64;

 private:
  std::size_t count_ = 0;
  Vec mean_ = Vec::Zero();
  Mat cov_ = Mat::Zero();
  double correlation_length_ = 1.0;
  double filter_gain_ = 1.0;
};

namespace detail {
inline MomentStatistics::Vec unit(int i, int j, double w = 1.0) {
  MomentStatistics::Vec v = MomentStatistics::Vec::Zero();
  v[MomentStatistics::pair(i, j)] = w;
  return v;
}
inline MomentStatistics::Vec sigma2_numerator() {
  return unit(kChIPlus, kChIMinus) - unit(kChQPlus, kChQMinus);
}
inline MomentStatistics::Vec psi_imaginary() {
  return unit(kChIPlus, kChQMinus) + unit(kChIMinus, kChQPlus);
}
inline MomentStatistics::Vec sideband_power(Sideband s) {
  const int i = s == Sideband::plus ? kChIPlus : kChIMinus;
  const int q = s == Sideband::plus ? kChQPlus : kChQMinus;
  return unit(i, i, 0.5) + unit(q, q, 0.5);
}
inline MomentStatistics::Vec average_power() {
  return sideband_power(Sideband::plus) + sideband_power(Sideband::minus);
}
}  // namespace detail

/// Zero-lag sample moment <x_i x_j> with its standard error.
inline Estimate estimate_moment(const MomentStatistics& st, int i, int j) {
  const auto c = detail::unit(i, j);
  return {st.moment(i, j), std::sqrt(st.variance_of(c))};
}

/// (<I+I-> - <Q+Q->)/P_avg. With `subtract_amplifier`, the known amplifier
/// contribution (n_amp times filter gain per quadrature) is removed from P_avg.
inline Estimate estimate_sigma2(const MomentStatistics& st, double added_quanta, bool subtract_amplifier) {
  const double offset = subtract_amplifier ? 2.0 * added_quanta * st.filter_gain() : 0.0;
  return st.ratio(detail::sigma2_numerator(), detail::average_power(), offset);
}

inline Estimate estimate_sigma2(const VoltageRecord& rec, const AmplifierModel& amp,
                                bool subtract_amplifier, unsigned workers = 1) {
  const double n_amp = subtract_amplifier ? amp.added_quanta(rec.provenance.center_frequency) : 0.0;
  return estimate_sigma2(MomentStatistics::compute(rec, workers), n_amp, subtract_amplifier);
}

inline Estimate estimate_sigma1(const MomentStatistics& st, Sideband s) {
  const int i = s == Sideband::plus ? kChIPlus : kChIMinus;
  const int q = s == Sideband::plus ? kChQPlus : kChQMinus;
  return st.ratio(detail::unit(i, i) - detail::unit(q, q), detail::unit(i, i) + detail::unit(q, q));
}

inline Estimate estimate_sigma1(const VoltageRecord& rec, Sideband s, unsigned workers = 1) {
  return estimate_sigma1(MomentStatistics::compute(rec, workers), s);
}

/// Zero-lag (<I+I-> - <Q+Q->) + i(<I+Q-> + <I-Q+>), raw units (includes filter gain).
inline PsiEstimate estimate_psi(const MomentStatistics& st) {
  const auto re = detail::sigma2_numerator();
  const auto im = detail::psi_imaginary();
  PsiEstimate out;
  out.value = {re.dot(st.mean()), im.dot(st.mean())};
  out.se_re = std::sqrt(st.variance_of(re));
  out.se_im = std::sqrt(st.variance_of(im));
  out.cov_re_im = st.covariance_of(re, im);
  return out;
}

inline PsiEstimate estimate_psi(const VoltageRecord& rec, unsigned workers = 1) {
  return estimate_psi(MomentStatistics::compute(rec, workers));
}

enum class PowerChannels { both, plus, minus };

/// Mean power of `on` minus `off`. `both` is the P_avg convention
/// (I+^2 + Q+^2 + I-^2 + Q-^2)/2; a single sideband uses (I^2 + Q^2)/2.
inline Estimate chopped_power_difference(const MomentStatistics& on, const MomentStatistics& off,
                                         PowerChannels which = PowerChannels::both) {
  const auto c = which == PowerChannels::both   ? detail::average_power()
                 : which == PowerChannels::plus ? detail::sideband_power(Sideband::plus)
                                                : detail::sideband_power(Sideband::minus);
  return {c.dot(on.mean()) - c.dot(off.mean()), std::sqrt(on.variance_of(c) + off.variance_of(c))};
}

inline Estimate chopped_power_difference(const VoltageRecord& on, const VoltageRecord& off,
                                         PowerChannels which = PowerChannels::both,
                                         unsigned workers = 1) {
  if (!on.provenance.config.compatible_with(off.provenance.config) ||
      on.provenance.center_frequency != off.provenance.center_frequency || on.size() != off.size())
    throw ConfigMismatch("on/off records were taken with different digitizer settings");
  return chopped_power_difference(MomentStatistics::compute(on, workers),
                                  MomentStatistics::compute(off, workers), which);
}

// --- lag domain --------------------------------------------------------------------

struct LagCorrelation {
  std::string name;
  int first = 0;
  int second = 0;
  std::vector<double> value;  // lags -max_lag .. +max_lag
  std::vector<double> se;
};

struct CrossCorrelations {
  std::size_t max_lag = 0;
  std::vector<LagCorrelation> pairs;  // I+I-, Q+Q-, I+Q-, I-Q+

  const LagCorrelation& pair(const std::string& name) const {
    for (const auto& p : pairs)
      if (p.name == name) return p;
    throw std::out_of_range("no correlation pair " + name);
  }
  double at(const std::string& name, std::ptrdiff_t lag) const {
    return pair(name).value[std::size_t(lag + std::ptrdiff_t(max_lag))];
  }
};

/// Biased sample cross-correlation c_ab(lag) = (1/N) sum_n a[n] b[n + lag].
/// Per-lag error: sample std of the products over sqrt(N / correlation length).
inline CrossCorrelations cross_correlations(const VoltageRecord& rec, std::size_t max_lag,
                                            unsigned workers = 1) {
  const std::size_t n = rec.size();
  if (n < MomentStatistics::kMinimumSamples || max_lag > n / 10)
    throw RecordTooShort("max_lag " + std::to_string(max_lag) + " needs at least " +
                         std::to_string(10 * max_lag) + " samples, record has " + std::to_string(n));
  const double corr_len = AntialiasFilter(rec.provenance.config.antialias_taps).correlation_length();
  CrossCorrelations out;
  out.max_lag = max_lag;
  const std::array<std::tuple<const char*, int, int>, 4> defs{{{"IpIm", kChIPlus, kChIMinus},
                                                               {"QpQm", kChQPlus, kChQMinus},
                                                               {"IpQm", kChIPlus, kChQMinus},
                                                               {"ImQp", kChIMinus, kChQPlus}}};
  const std::size_t width = 2 * max_lag + 1;
  for (const auto& [name, a, b] : defs)
    out.pairs.push_back({name, a, b, std::vector<double>(width), std::vector<double>(width)});

  parallel_for(out.pairs.size() * width, workers, [&](std::size_t item) {
    auto& p = out.pairs[item / width];
    const std::size_t slot = item % width;
    const std::ptrdiff_t lag = std::ptrdiff_t(slot) - std::ptrdiff_t(max_lag);
    const double* a = rec[p.first].data();
    const double* b = rec[p.second].data();
    const std::size_t shift = std::size_t(lag < 0 ? -lag : lag);
    const std::size_t valid = n - shift;
    double s = 0.0, s2 = 0.0;
    for (std::size_t t = 0; t < valid; ++t) {
      const double prod = lag >= 0 ? a[t] * b[t + shift] : a[t + shift] * b[t];
      s += prod;
      s2 += prod * prod;
    }
    const double mean = s / double(valid);
    const double var = std::max(0.0, s2 / double(valid) - mean * mean);
    p.value[slot] = s / double(n);
    p.se[slot] = std::sqrt(var * corr_len / double(valid));
  });
  return out;
}

// --- bundled result -----------------------------------------------------------------

struct CorrelationResult {
  CrossCorrelations lags;
  Estimate sigma2_total;       // P_avg including amplifier noise
  Estimate sigma2_subtracted;  // amplifier contribution removed from P_avg; NaN if that leaves P_avg <= 0
  Estimate sigma1_plus;
  Estimate sigma1_minus;
  PsiEstimate psi;             // raw units (filter gain included)
  PsiEstimate psi_normalized;  // psi / P_avg (total)
  double p_avg_total = 0.0;
  double p_avg_subtracted = 0.0;
  double filter_gain = 1.0;
  double added_quanta = 0.0;
  std::size_t samples = 0;
};

inline CorrelationResult correlate(const VoltageRecord& rec, const AmplifierModel& amp,
                                   std::size_t max_lag, unsigned workers = 1) {
  const auto st = MomentStatistics::compute(rec, workers);
  const double n_amp = amp.added_quanta(rec.provenance.center_frequency);
  CorrelationResult r;
  r.lags = cross_correlations(rec, max_lag, workers);
  r.sigma2_total = estimate_sigma2(st, n_amp, false);
  try {
    r.sigma2_subtracted = estimate_sigma2(st, n_amp, true);
  } catch (const NegativeDenominator&) {
    // Too few samples to resolve the signal under the amplifier noise.
    r.sigma2_subtracted = {std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()};
  }
  r.sigma1_plus = estimate_sigma1(st, Sideband::plus);
  r.sigma1_minus = estimate_sigma1(st, Sideband::minus);
  r.psi = estimate_psi(st);
  r.p_avg_total = detail::average_power().dot(st.mean());
  r.p_avg_subtracted = r.p_avg_total - 2.0 * n_amp * st.filter_gain();
  const auto re = st.ratio(detail::sigma2_numerator(), detail::average_power());
  const auto im = st.ratio(detail::psi_imaginary(), detail::average_power());
  r.psi_normalized.value = {re.value, im.value};
  r.psi_normalized.se_re = re.se;
  r.psi_normalized.se_im = im.se;
  r.filter_gain = st.filter_gain();
  r.added_quanta = n_amp;
  r.samples = st.count();
  return r;
}

}  // namespace dce

#endif  // DCE_MEASUREMENT_HPP
