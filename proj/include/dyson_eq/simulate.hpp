#ifndef DYSON_EQ_SIMULATE_HPP
#define DYSON_EQ_SIMULATE_HPP

#include <Eigen/QR>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <functional>
#include <mutex>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <type_traits>
#include <variant>
#include <vector>

#include "dyson_eq/denoise.hpp"
#include "dyson_eq/dyson.hpp"
#include "dyson_eq/equalizer.hpp"
#include "dyson_eq/errors.hpp"
#include "dyson_eq/linalg.hpp"

namespace dyson_eq {

// splitmix64 finalizer.
inline std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Seed of the (trial, stream) substream of a base seed.
inline std::uint64_t mix64(std::uint64_t seed, std::uint64_t trial, std::uint64_t tag) {
  return splitmix64(splitmix64(splitmix64(seed) ^ trial) ^ (tag * 0xd1b54a32d192ed03ULL));
}

enum class Stream : std::uint64_t { Signal = 1, Variance = 2, Noise = 3 };

using Rng = std::mt19937_64;

// ---- signal ---------------------------------------------------------------------------

struct Delocalized {};

// ceil(row_fraction * m) rows and ceil(col_fraction * n) columns, chosen at random.
struct SparseSupport {
  double row_fraction = 1.0;
  double col_fraction = 1.0;
};

// ceil(coef * m^exponent) rows and ceil(coef * n^exponent) columns.
struct PowerSupport {
  double coef = 1.0;
  double exponent = 0.5;
};

using Localization = std::variant<Delocalized, SparseSupport, PowerSupport>;

struct SignalSpec {
  Index m = 1;
  Index n = 1;
  Index r = 0;
  Eigen::VectorXd singular_values;  // length r
  Localization localization = Delocalized{};

  void validate() const {
    if (m < 1 || n < 1) throw InvalidInput("signal: m and n must be positive");
    if (m > n) throw InvalidInput("signal: requires m <= n");
    if (r < 0 || r > m) throw RankOutOfRange("signal: rank must lie in [0, m]");
    if (singular_values.size() != r) throw ShapeMismatch("signal: need exactly r singular values");
    if (!(singular_values.array() > 0.0).all() || !singular_values.allFinite())
      throw InvalidInput("signal: singular values must be positive");
    std::visit(
        [](const auto& loc) {
          using T = std::decay_t<decltype(loc)>;
          if constexpr (std::is_same_v<T, SparseSupport>) {
            if (!(loc.row_fraction > 0.0 && loc.row_fraction <= 1.0) ||
                !(loc.col_fraction > 0.0 && loc.col_fraction <= 1.0))
              throw InvalidInput("signal: support fractions must lie in (0, 1]");
          } else if constexpr (std::is_same_v<T, PowerSupport>) {
            if (!(loc.exponent > 0.0 && loc.exponent <= 1.0)) throw InvalidInput("signal: exponent must lie in (0, 1]");
            if (!(loc.coef > 0.0)) throw InvalidInput("signal: support coefficient must be positive");
          }
        },
        localization);
  }
};

// r equal singular values with s^2 / n = strength.
inline Eigen::VectorXd equal_singular_values(Index r, Index n, double strength) {
  return Eigen::VectorXd::Constant(r, std::sqrt(strength * static_cast<double>(n)));
}

namespace detail {

inline std::pair<Index, Index> support_sizes(const Localization& loc, Index m, Index n) {
  auto clip = [](double v, Index dim) { return std::clamp<Index>(static_cast<Index>(std::ceil(v - 1e-9)), 1, dim); };
  return std::visit(
      [&](const auto& l) -> std::pair<Index, Index> {
        using T = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<T, SparseSupport>)
          return {clip(l.row_fraction * static_cast<double>(m), m), clip(l.col_fraction * static_cast<double>(n), n)};
        else if constexpr (std::is_same_v<T, PowerSupport>)
          return {clip(l.coef * std::pow(static_cast<double>(m), l.exponent), m),
                  clip(l.coef * std::pow(static_cast<double>(n), l.exponent), n)};
        else
          return {m, n};
      },
      loc);
}

inline Eigen::MatrixXd gaussian_matrix(Index rows, Index cols, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd g(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) g(i, j) = normal(rng);
  return g;
}

// dim x r matrix with orthonormal columns supported on `support` random rows.
inline Eigen::MatrixXd localized_orthonormal(Index dim, Index support, Index r, Rng& rng) {
  std::vector<Index> idx(static_cast<std::size_t>(dim));
  std::iota(idx.begin(), idx.end(), Index{0});
  if (support < dim) {
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(static_cast<std::size_t>(support));
    std::sort(idx.begin(), idx.end());
  }
  const Eigen::MatrixXd g = gaussian_matrix(support, r, rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(support, r);
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(dim, r);
  for (Index k = 0; k < support; ++k) out.row(idx[static_cast<std::size_t>(k)]) = q.row(k);
  return out;
}

}  // namespace detail

// X = U diag(s) V^T with orthonormalized Gaussian singular vectors on the requested support.
inline DenseMatrix gen_signal(const SignalSpec& spec, std::uint64_t seed) {
  spec.validate();
  if (spec.r == 0) return DenseMatrix(spec.m, spec.n);
  const auto [rows, cols] = detail::support_sizes(spec.localization, spec.m, spec.n);
  if (rows < spec.r || cols < spec.r)
    throw InfeasibleSupport("signal: support of " + std::to_string(rows) + "x" + std::to_string(cols) +
                            " cannot hold rank " + std::to_string(spec.r));
  Rng rng(seed);
  const Eigen::MatrixXd u = detail::localized_orthonormal(spec.m, rows, spec.r, rng);
  const Eigen::MatrixXd v = detail::localized_orthonormal(spec.n, cols, spec.r, rng);
  return DenseMatrix(Eigen::MatrixXd(u * spec.singular_values.asDiagonal() * v.transpose()));
}

// ---- variance ---------------------------------------------------------------------------

// S = x y^T with x, y uniform on [lo, hi].
struct RankOneUniform {
  double lo = 1.0;
  double hi = 10.0;
};

// Unit variance except the last k_rows rows (times row_amp) and last k_cols columns (times col_amp).
struct OutlierRowsCols {
  Index k_rows = 5;
  Index k_cols = 5;
  double row_amp = 10.0;
  double col_amp = 100.0;
};

// S = A B, A m x inner_rank, B inner_rank x n, entries exp(N(0, t^2)).
struct LogNormalLowRank {
  Index inner_rank = 10;
  double t = 2.0;
};

// S = diag(x) S~ diag(y), S~ = double-centered 1 + z with z = scale * (Bernoulli(p) - p);
// x, y uniform on [lo, hi]. Draws with a nonpositive S~ entry are rejected.
struct BernoulliDR {
  double p = 0.1;
  double scale = 5.0;
  double lo = 1.0;
  double hi = 10.0;
};

// Block version of BernoulliDR: S~ and the factors are constant on a near-equal
// partition of rows into row_blocks and columns into col_blocks.
struct BlockDR {
  Index row_blocks = 10;
  Index col_blocks = 10;
  double p = 0.1;
  double scale = 5.0;
  double lo = 1.0;
  double hi = 10.0;
};

using VarianceModel = std::variant<RankOneUniform, OutlierRowsCols, LogNormalLowRank, BernoulliDR, BlockDR>;

struct VarianceSpec {
  VarianceModel model = RankOneUniform{};
  std::optional<double> normalize_mean_to;  // mean entry after rescaling; 1/n when unset
  bool rescale = true;                      // false keeps the raw model scale
};

struct GeneratedVariance {
  VarianceMatrix s{Eigen::MatrixXd::Ones(1, 1)};
  ScalingFactors truth;   // SinkhornGeoMean
  double dr_residual = 0.0;
  long rejections = 0;
};

namespace detail {

inline Eigen::VectorXd uniform_vector(Index k, double lo, double hi, Rng& rng) {
  if (!(lo > 0.0 && hi >= lo)) throw InvalidInput("variance: need 0 < lo <= hi");
  std::uniform_real_distribution<double> unif(lo, hi);
  Eigen::VectorXd v(k);
  for (Index i = 0; i < k; ++i) v(i) = unif(rng);
  return v;
}

inline Eigen::MatrixXd bernoulli_z(Index rows, Index cols, double p, double scale, Rng& rng) {
  std::bernoulli_distribution bern(p);
  Eigen::MatrixXd z(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) z(i, j) = scale * ((bern(rng) ? 1.0 : 0.0) - p);
  return z;
}

// 1 + z - weighted row means - weighted column means + weighted grand mean.
inline Eigen::MatrixXd double_center(const Eigen::MatrixXd& z, const Eigen::VectorXd& row_w,
                                     const Eigen::VectorXd& col_w) {
  const Eigen::VectorXd row_mean = z * col_w;               // per row, averaged over columns
  const Eigen::RowVectorXd col_mean = row_w.transpose() * z;  // per column, averaged over rows
  const double grand = row_w.dot(row_mean);
  Eigen::MatrixXd out = z;
  out.colwise() -= row_mean;
  out.rowwise() -= col_mean;
  out.array() += 1.0 + grand;
  return out;
}

inline std::vector<Index> block_of(Index dim, Index blocks) {
  std::vector<Index> b(static_cast<std::size_t>(dim));
  for (Index i = 0; i < dim; ++i) b[static_cast<std::size_t>(i)] = i * blocks / dim;
  return b;
}

inline Eigen::MatrixXd bernoulli_dr_tilde(Index m, Index n, const BernoulliDR& spec, Rng& rng, long& rejections) {
  if (!(spec.p > 0.0 && spec.p < 1.0)) throw InvalidInput("variance: Bernoulli p must lie in (0, 1)");
  const Eigen::VectorXd rw = Eigen::VectorXd::Constant(m, 1.0 / static_cast<double>(m));
  const Eigen::VectorXd cw = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
  for (long attempt = 0; attempt < 1000; ++attempt) {
    Eigen::MatrixXd st = double_center(bernoulli_z(m, n, spec.p, spec.scale, rng), rw, cw);
    if ((st.array() > 0.0).all()) return st;
    ++rejections;
  }
  throw InvalidInput("variance: Bernoulli construction kept producing nonpositive entries");
}

inline Eigen::MatrixXd block_dr(Index m, Index n, const BlockDR& spec, Rng& rng, long& rejections) {
  if (spec.row_blocks < 1 || spec.row_blocks > m || spec.col_blocks < 1 || spec.col_blocks > n)
    throw InvalidInput("variance: block counts must lie in [1, m] and [1, n]");
  if (!(spec.p > 0.0 && spec.p < 1.0)) throw InvalidInput("variance: Bernoulli p must lie in (0, 1)");
  const auto rb = block_of(m, spec.row_blocks);
  const auto cb = block_of(n, spec.col_blocks);
  Eigen::VectorXd rw = Eigen::VectorXd::Zero(spec.row_blocks);
  Eigen::VectorXd cw = Eigen::VectorXd::Zero(spec.col_blocks);
  for (Index b : rb) rw(b) += 1.0 / static_cast<double>(m);
  for (Index b : cb) cw(b) += 1.0 / static_cast<double>(n);

  Eigen::MatrixXd bar;
  for (long attempt = 0;; ++attempt) {
    if (attempt == 1000) throw InvalidInput("variance: block construction kept producing nonpositive entries");
    bar = double_center(bernoulli_z(spec.row_blocks, spec.col_blocks, spec.p, spec.scale, rng), rw, cw);
    if ((bar.array() > 0.0).all()) break;
    ++rejections;
  }
  const Eigen::VectorXd xb = uniform_vector(spec.row_blocks, spec.lo, spec.hi, rng);
  const Eigen::VectorXd yb = uniform_vector(spec.col_blocks, spec.lo, spec.hi, rng);
  Eigen::MatrixXd s(m, n);
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i < m; ++i) {
      const Index k = rb[static_cast<std::size_t>(i)];
      const Index l = cb[static_cast<std::size_t>(j)];
      s(i, j) = xb(k) * bar(k, l) * yb(l);
    }
  return s;
}

}  // namespace detail

// Draws S from the model, rescales it, and attaches its Sinkhorn factors.
inline GeneratedVariance gen_variance(const VarianceSpec& spec, Index m, Index n, std::uint64_t seed) {
  if (m < 1 || n < 1) throw InvalidInput("variance: m and n must be positive");
  Rng rng(seed);
  long rejections = 0;
  Eigen::MatrixXd s = std::visit(
      [&](const auto& model) -> Eigen::MatrixXd {
        using T = std::decay_t<decltype(model)>;
        if constexpr (std::is_same_v<T, RankOneUniform>) {
          const Eigen::VectorXd x = detail::uniform_vector(m, model.lo, model.hi, rng);
          const Eigen::VectorXd y = detail::uniform_vector(n, model.lo, model.hi, rng);
          return x * y.transpose();
        } else if constexpr (std::is_same_v<T, OutlierRowsCols>) {
          if (model.k_rows < 0 || model.k_rows > m || model.k_cols < 0 || model.k_cols > n)
            throw InvalidInput("variance: outlier counts exceed the matrix size");
          if (!(model.row_amp > 0.0 && model.col_amp > 0.0)) throw InvalidInput("variance: amplitudes must be positive");
          Eigen::VectorXd x = Eigen::VectorXd::Ones(m);
          Eigen::VectorXd y = Eigen::VectorXd::Ones(n);
          x.tail(model.k_rows).setConstant(model.row_amp);
          y.tail(model.k_cols).setConstant(model.col_amp);
          return x * y.transpose();
        } else if constexpr (std::is_same_v<T, LogNormalLowRank>) {
          if (model.inner_rank < 1) throw InvalidInput("variance: inner rank must be positive");
          if (!(model.t >= 0.0)) throw InvalidInput("variance: t must be nonnegative");
          const Eigen::MatrixXd a = (model.t * detail::gaussian_matrix(m, model.inner_rank, rng)).array().exp().matrix();
          const Eigen::MatrixXd b = (model.t * detail::gaussian_matrix(model.inner_rank, n, rng)).array().exp().matrix();
          return a * b;
        } else if constexpr (std::is_same_v<T, BernoulliDR>) {
          const Eigen::MatrixXd st = detail::bernoulli_dr_tilde(m, n, model, rng, rejections);
          const Eigen::VectorXd x = detail::uniform_vector(m, model.lo, model.hi, rng);
          const Eigen::VectorXd y = detail::uniform_vector(n, model.lo, model.hi, rng);
          return x.asDiagonal() * st * y.asDiagonal();
        } else {
          return detail::block_dr(m, n, model, rng, rejections);
        }
      },
      spec.model);

  if (spec.rescale) {
    const double target = spec.normalize_mean_to.value_or(1.0 / static_cast<double>(n));
    if (!(target > 0.0) || !std::isfinite(target)) throw InvalidInput("variance: mean target must be positive");
    s *= target / s.mean();
  }

  GeneratedVariance out;
  out.s = VarianceMatrix(std::move(s));
  const DoublyRegularScaling dr = sinkhorn(out.s);
  out.truth = ScalingFactors{dr.x0, dr.y0, FactorConvention::SinkhornGeoMean};
  out.dr_residual = dr.dr_residual;
  out.rejections = rejections;
  return out;
}

// ---- noise ------------------------------------------------------------------------------

enum class NoiseDist { Gaussian };

// Independent N(0, S_ij) entries, drawn in column-major order.
inline DenseMatrix gen_noise(const VarianceMatrix& s, std::uint64_t seed, NoiseDist = NoiseDist::Gaussian) {
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd e(s.rows(), s.cols());
  const Eigen::MatrixXd& sv = s.values();
  for (Index j = 0; j < s.cols(); ++j)
    for (Index i = 0; i < s.rows(); ++i) e(i, j) = std::sqrt(sv(i, j)) * normal(rng);
  return DenseMatrix(std::move(e));
}

// ---- instances --------------------------------------------------------------------------

struct Instance {
  DenseMatrix y{1, 1};
  DenseMatrix x_signal{1, 1};
  VarianceMatrix s{Eigen::MatrixXd::Ones(1, 1)};
  ScalingFactors truth;      // DysonNormalized at truth_eta
  ScalingFactors geo_factors;  // SinkhornGeoMean
  double truth_eta = 0.0;
  double dr_residual = 0.0;
  long rejections = 0;
  std::uint64_t seed = 0;
  std::uint64_t trial = 0;
};

// Truth factors under the normalization the estimator targets at a given eta.
inline ScalingFactors truth_factors(const Instance& inst, double eta) {
  return normalize_factor_pair(inst.geo_factors.x, inst.geo_factors.y, eta);
}

// Y = X + E. Truth factors are normalized at the eta the policy selects on this Y.
inline Instance make_instance(const SignalSpec& signal, const VarianceSpec& variance, std::uint64_t seed,
                              std::uint64_t trial = 0, const EtaPolicy& policy = EtaPolicy::quantile()) {
  Instance inst;
  inst.seed = seed;
  inst.trial = trial;
  inst.x_signal = gen_signal(signal, mix64(seed, trial, static_cast<std::uint64_t>(Stream::Signal)));
  GeneratedVariance gv =
      gen_variance(variance, signal.m, signal.n, mix64(seed, trial, static_cast<std::uint64_t>(Stream::Variance)));
  const DenseMatrix e = gen_noise(gv.s, mix64(seed, trial, static_cast<std::uint64_t>(Stream::Noise)));
  inst.y = DenseMatrix(Eigen::MatrixXd(inst.x_signal.values() + e.values()));
  inst.s = std::move(gv.s);
  inst.geo_factors = std::move(gv.truth);
  inst.dr_residual = gv.dr_residual;
  inst.rejections = gv.rejections;
  inst.truth_eta = policy.select(singular_values(inst.y));
  if (!(inst.truth_eta > 0.0)) throw DegenerateMatrix("make_instance: selected eta is zero");
  inst.truth = truth_factors(inst, inst.truth_eta);
  return inst;
}

// ---- sweeps -----------------------------------------------------------------------------

// Worker count: hardware concurrency, capped by DYSON_EQ_THREADS when set.
inline unsigned worker_count() {
  unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("DYSON_EQ_THREADS")) {
    const long cap = std::strtol(env, nullptr, 10);
    if (cap >= 1) hw = std::min(hw, static_cast<unsigned>(cap));
  }
  return hw;
}

// Runs job(k) for k in [0, count); results must be stored by index.
inline void parallel_for(std::size_t count, const std::function<void(std::size_t)>& job) {
  const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(worker_count(), count));
  if (workers <= 1) {
    for (std::size_t k = 0; k < count; ++k) job(k);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t k; (k = next.fetch_add(1)) < count;) {
        try {
          job(k);
        } catch (...) {
          std::lock_guard<std::mutex> lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

inline double median(std::vector<double> v) {
  if (v.empty()) throw EmptyInput("median of an empty set");
  std::sort(v.begin(), v.end());
  const std::size_t k = v.size() / 2;
  return v.size() % 2 ? v[k] : 0.5 * (v[k - 1] + v[k]);
}

inline double max_relative_error(const Eigen::VectorXd& estimate, const Eigen::VectorXd& truth) {
  return ((estimate - truth).array() / truth.array()).abs().maxCoeff();
}

// m = ceil(m_coef * n^m_exponent), s^2/n = strength * n^strength_exponent.
struct ConvergenceConfig {
  VarianceSpec variance;
  double m_coef = 0.5;
  double m_exponent = 1.0;
  Index r = 10;
  double strength = 10.0;
  double strength_exponent = 0.0;
  Localization localization = Delocalized{};
  std::vector<Index> n_values{500, 1000, 2000};
  int trials = 10;
  std::uint64_t seed = 0;
  EtaPolicy eta = EtaPolicy::quantile();

  SignalSpec signal_for(Index n) const {
    SignalSpec s;
    s.n = n;
    s.m = std::clamp<Index>(static_cast<Index>(std::ceil(m_coef * std::pow(static_cast<double>(n), m_exponent) - 1e-9)),
                            1, n);
    s.r = r;
    s.singular_values = equal_singular_values(r, n, strength * std::pow(static_cast<double>(n), strength_exponent));
    s.localization = localization;
    return s;
  }
};

struct ConvergenceTrial {
  Index n = 0;
  Index m = 0;
  int trial = 0;
  double eta = 0.0;
  double err_x = 0.0;
  double err_y = 0.0;
};

struct ConvergenceRow {
  Index n = 0;
  Index m = 0;
  double median_err_x = 0.0;
  double median_err_y = 0.0;
};

struct ConvergenceTable {
  std::vector<ConvergenceRow> rows;
  std::vector<ConvergenceTrial> trials;
};

// Median over trials of |(x_hat - x)/x|_inf and |(y_hat - y)/y|_inf for each n.
inline ConvergenceTable run_convergence_sweep(const ConvergenceConfig& cfg) {
  if (cfg.trials < 1) throw InvalidInput("sweep: trials must be positive");
  if (cfg.n_values.empty()) throw EmptyInput("sweep: no n values");
  const std::size_t per_n = static_cast<std::size_t>(cfg.trials);
  ConvergenceTable out;
  out.trials.resize(cfg.n_values.size() * per_n);
  parallel_for(out.trials.size(), [&](std::size_t k) {
    const Index n = cfg.n_values[k / per_n];
    const int trial = static_cast<int>(k % per_n);
    const SignalSpec sig = cfg.signal_for(n);
    const std::uint64_t seed = mix64(cfg.seed, static_cast<std::uint64_t>(n), 0);
    const Instance inst = make_instance(sig, cfg.variance, seed, static_cast<std::uint64_t>(trial), cfg.eta);
    const EqualizeResult eq = equalize(inst.y, cfg.eta);
    const ScalingFactors truth = eq.eta == inst.truth_eta ? inst.truth : truth_factors(inst, eq.eta);
    out.trials[k] = ConvergenceTrial{n, sig.m, trial, eq.eta, max_relative_error(eq.factors.x, truth.x),
                                     max_relative_error(eq.factors.y, truth.y)};
  });
  for (std::size_t b = 0; b < cfg.n_values.size(); ++b) {
    std::vector<double> ex, ey;
    for (std::size_t t = 0; t < per_n; ++t) {
      ex.push_back(out.trials[b * per_n + t].err_x);
      ey.push_back(out.trials[b * per_n + t].err_y);
    }
    out.rows.push_back(ConvergenceRow{cfg.n_values[b], out.trials[b * per_n].m, median(ex), median(ey)});
  }
  return out;
}

struct MsePoint {
  double control = 0.0;
  SignalSpec signal;
  VarianceSpec variance;
};

struct MseConfig {
  std::vector<MsePoint> points;
  std::vector<DenoiseMethod> methods{DenoiseMethod::EqualizedSvt, DenoiseMethod::OracleSvt,
                                     DenoiseMethod::OracleShrinkage};
  int trials = 10;
  std::uint64_t seed = 0;
  EtaPolicy eta = EtaPolicy::quantile();
};

struct MseTrial {
  double control = 0.0;
  DenoiseMethod method = DenoiseMethod::EqualizedSvt;
  int trial = 0;
  long r_used = 0;
  double relative_mse = 0.0;
};

struct MseRow {
  double control = 0.0;
  DenoiseMethod method = DenoiseMethod::EqualizedSvt;
  double mean_relative_mse = 0.0;
  double median_relative_mse = 0.0;
};

struct MseTable {
  std::vector<MseRow> rows;
  std::vector<MseTrial> trials;
};

inline DenoiseResult run_method(DenoiseMethod method, const Instance& inst, const EtaPolicy& eta) {
  switch (method) {
    case DenoiseMethod::EqualizedSvt: return denoise_equalized(inst.y, eta);
    case DenoiseMethod::OracleSvt: return oracle_svt(inst.y, inst.x_signal);
    case DenoiseMethod::OracleShrinkage:
      return oracle_shrinkage(inst.y, inst.x_signal, std::min(inst.y.rows(), inst.y.cols()));
    case DenoiseMethod::RawSvt: {
      // Raw Y truncated at the true rank.
      DenoiseResult out;
      out.method = DenoiseMethod::RawSvt;
      out.r_used = static_cast<long>(Eigen::FullPivLU<Eigen::MatrixXd>(inst.x_signal.values()).rank());
      out.x_bar = truncate_svd(inst.y, out.r_used);
      return out;
    }
  }
  throw InvalidInput("unknown denoising method");
}

// Relative MSE |X_bar - X|_F^2 / |X|_F^2 per (control point, method), averaged over trials.
inline MseTable run_mse_sweep(const MseConfig& cfg) {
  if (cfg.trials < 1) throw InvalidInput("sweep: trials must be positive");
  if (cfg.points.empty() || cfg.methods.empty()) throw EmptyInput("sweep: no points or methods");
  const std::size_t per_point = static_cast<std::size_t>(cfg.trials);
  const std::size_t nm = cfg.methods.size();
  MseTable out;
  out.trials.resize(cfg.points.size() * per_point * nm);
  parallel_for(cfg.points.size() * per_point, [&](std::size_t k) {
    const MsePoint& pt = cfg.points[k / per_point];
    const int trial = static_cast<int>(k % per_point);
    const std::uint64_t seed = mix64(cfg.seed, k / per_point, 0);
    const Instance inst = make_instance(pt.signal, pt.variance, seed, static_cast<std::uint64_t>(trial), cfg.eta);
    for (std::size_t q = 0; q < nm; ++q) {
      const DenoiseResult res = run_method(cfg.methods[q], inst, cfg.eta);
      out.trials[k * nm + q] = MseTrial{pt.control, cfg.methods[q], trial, res.r_used,
                                        relative_mse(res.x_bar.values(), inst.x_signal.values())};
    }
  });
  for (std::size_t p = 0; p < cfg.points.size(); ++p)
    for (std::size_t q = 0; q < nm; ++q) {
      std::vector<double> v;
      for (std::size_t t = 0; t < per_point; ++t) v.push_back(out.trials[(p * per_point + t) * nm + q].relative_mse);
      const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
      out.rows.push_back(MseRow{cfg.points[p].control, cfg.methods[q], mean, median(v)});
    }
  return out;
}

}  // namespace dyson_eq

#endif  // DYSON_EQ_SIMULATE_HPP
