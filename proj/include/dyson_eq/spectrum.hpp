#ifndef DYSON_EQ_SPECTRUM_HPP
#define DYSON_EQ_SPECTRUM_HPP

#include <algorithm>
#include <cmath>
#include <numbers>
#include <utility>
#include <vector>

#include "dyson_eq/errors.hpp"
#include "dyson_eq/linalg.hpp"

namespace dyson_eq {

// Marchenko-Pastur law with aspect ratio gamma = m/n in (0, 1] and variance sigma2.
struct MpParams {
  double gamma;
  double sigma2;

  explicit MpParams(double gamma_, double sigma2_ = 1.0) : gamma(gamma_), sigma2(sigma2_) {
    if (!(gamma > 0.0 && gamma <= 1.0)) throw InvalidInput("MP gamma must lie in (0, 1]");
    if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) throw InvalidInput("MP sigma2 must be positive");
  }
};

inline std::pair<double, double> mp_edges(const MpParams& p) {
  const double sg = std::sqrt(p.gamma);
  return {p.sigma2 * (1.0 - sg) * (1.0 - sg), p.sigma2 * (1.0 + sg) * (1.0 + sg)};
}

inline double mp_density(const MpParams& p, double tau) {
  const auto [lo, hi] = mp_edges(p);
  if (tau <= lo || tau >= hi || tau <= 0.0) return 0.0;
  return std::sqrt((hi - tau) * (tau - lo)) / (2.0 * std::numbers::pi * p.sigma2 * p.gamma * tau);
}

namespace detail {

template <class F>
double adaptive_simpson(const F& f, double a, double b, double fa, double fm, double fb, double whole, double tol,
                        int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return adaptive_simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         adaptive_simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

template <class F>
double integrate(const F& f, double a, double b, double tol) {
  const double fa = f(a);
  const double fb = f(b);
  const double fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return adaptive_simpson(f, a, b, fa, fm, fb, whole, tol, 48);
}

}  // namespace detail

// CDF of the MP law. Integrates the density in the angle variable
// tau = c - r cos(theta), which removes the square-root edge singularities.
inline double mp_cdf(const MpParams& p, double tau) {
  const auto [lo, hi] = mp_edges(p);
  if (tau <= lo) return 0.0;
  if (tau >= hi) return 1.0;
  const double c = 0.5 * (hi + lo);
  const double r = 0.5 * (hi - lo);
  const double norm = 2.0 * std::numbers::pi * p.sigma2 * p.gamma;
  auto integrand = [&](double theta) {
    const double sh = std::sin(0.5 * theta);
    const double ch = std::cos(0.5 * theta);
    if (lo == 0.0) return 2.0 * r * ch * ch / norm;
    return 4.0 * r * r * sh * sh * ch * ch / ((lo + 2.0 * r * sh * sh) * norm);
  };
  const double theta = std::acos(std::clamp((c - tau) / r, -1.0, 1.0));
  return std::clamp(detail::integrate(integrand, 0.0, theta, 1e-10), 0.0, 1.0);
}

// Inverse CDF by bisection on the support.
inline double mp_quantile(const MpParams& p, double q) {
  if (!(q > 0.0 && q < 1.0)) throw InvalidInput("MP quantile level must lie in (0, 1)");
  auto [lo, hi] = mp_edges(p);
  for (int it = 0; it < 200 && hi - lo > 1e-14 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (mp_cdf(p, mid) < q ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// Empirical spectral distribution of a covariance-type matrix.
class Esd {
 public:
  explicit Esd(std::vector<double> eigenvalues) : eigs_(std::move(eigenvalues)) {
    if (eigs_.empty()) throw EmptyInput("ESD needs at least one eigenvalue");
    for (double v : eigs_)
      if (!(v >= 0.0) || !std::isfinite(v)) throw InvalidInput("ESD eigenvalues must be finite and nonnegative");
    std::sort(eigs_.begin(), eigs_.end());
  }

  const std::vector<double>& eigenvalues() const { return eigs_; }
  std::size_t size() const { return eigs_.size(); }

  // F(tau) = #{lambda <= tau} / m
  double cdf(double tau) const {
    return static_cast<double>(std::upper_bound(eigs_.begin(), eigs_.end(), tau) - eigs_.begin()) /
           static_cast<double>(eigs_.size());
  }

  // F(tau-) = #{lambda < tau} / m
  double cdf_left(double tau) const {
    return static_cast<double>(std::lower_bound(eigs_.begin(), eigs_.end(), tau) - eigs_.begin()) /
           static_cast<double>(eigs_.size());
  }

 private:
  std::vector<double> eigs_;
};

inline Esd esd(std::vector<double> eigs) { return Esd(std::move(eigs)); }

// Eigenvalues of Y Y^T / n (n the long side), ascending.
inline std::vector<double> covariance_eigenvalues(const Eigen::VectorXd& sigma, Index long_dim) {
  std::vector<double> out(static_cast<std::size_t>(sigma.size()));
  for (Index k = 0; k < sigma.size(); ++k) out[static_cast<std::size_t>(k)] = sigma(k) * sigma(k) / static_cast<double>(long_dim);
  std::sort(out.begin(), out.end());
  return out;
}

inline std::vector<double> covariance_eigenvalues(const DenseMatrix& y) {
  return covariance_eigenvalues(singular_values(y), std::max(y.rows(), y.cols()));
}

// sup |F_esd - F_MP| over the eigenvalues (both sides of each jump) and a 512-point
// uniform mesh on the MP support.
inline double ks_distance(const Esd& e, const MpParams& p) {
  const auto [lo, hi] = mp_edges(p);
  double ks = 0.0;
  const auto& eigs = e.eigenvalues();
  for (std::size_t k = 0; k < eigs.size(); ++k) {
    if (k > 0 && eigs[k] == eigs[k - 1]) continue;
    const double f = mp_cdf(p, eigs[k]);
    ks = std::max({ks, std::abs(e.cdf(eigs[k]) - f), std::abs(e.cdf_left(eigs[k]) - f)});
  }
  constexpr int mesh = 512;
  for (int k = 0; k < mesh; ++k) {
    const double tau = lo + (hi - lo) * static_cast<double>(k) / (mesh - 1);
    ks = std::max(ks, std::abs(e.cdf(tau) - mp_cdf(p, tau)));
  }
  return ks;
}

// MP variance that puts the MP median at the ESD median; insensitive to a few spikes.
inline double fit_mp_scale(const Esd& e, double gamma) {
  const auto& v = e.eigenvalues();
  const std::size_t k = v.size() / 2;
  const double med = v.size() % 2 ? v[k] : 0.5 * (v[k - 1] + v[k]);
  if (!(med > 0.0)) throw DegenerateMatrix("fit_mp_scale: median eigenvalue is zero");
  return med / mp_quantile(MpParams(gamma), 0.5);
}

struct RankEstimate {
  long r_hat = 0;
  double threshold = 0.0;               // in singular-value units
  std::vector<double> exceed_margins;   // sigma_i - threshold, descending sigma
  double epsilon = 0.0;
};

// Counts singular values strictly above sqrt(n((1 + sqrt(m/n))^2 + epsilon)), which is
// sqrt(m) + sqrt(n) for epsilon = 0. m, n are the short and long sides.
inline RankEstimate estimate_rank_from_singular_values(const Eigen::VectorXd& sigma, Index rows, Index cols,
                                                       double epsilon = 0.0) {
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) throw InvalidInput("epsilon must be nonnegative");
  const double m = static_cast<double>(std::min(rows, cols));
  const double n = static_cast<double>(std::max(rows, cols));
  RankEstimate out;
  out.epsilon = epsilon;
  out.threshold = epsilon == 0.0 ? std::sqrt(m) + std::sqrt(n)
                                 : std::sqrt(n * (std::pow(1.0 + std::sqrt(m / n), 2) + epsilon));
  std::vector<double> s(sigma.data(), sigma.data() + sigma.size());
  std::sort(s.begin(), s.end(), std::greater<>());
  out.exceed_margins.reserve(s.size());
  for (double v : s) {
    out.exceed_margins.push_back(v - out.threshold);
    if (v > out.threshold) ++out.r_hat;
  }
  return out;
}

inline RankEstimate estimate_rank(const DenseMatrix& y_hat, double epsilon = 0.0) {
  return estimate_rank_from_singular_values(singular_values(y_hat), y_hat.rows(), y_hat.cols(), epsilon);
}

// Spectral SNR gain of normalization: mean(x) mean(1/x) mean(y) mean(1/y) >= 1.
inline double snr_gain_tau(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  if (x.size() == 0 || y.size() == 0) throw EmptyInput("snr_gain_tau: empty vector");
  if (!(x.array() > 0.0).all() || !(y.array() > 0.0).all()) throw InvalidInput("snr_gain_tau: vectors must be positive");
  return x.mean() * (1.0 / x.array()).mean() * y.mean() * (1.0 / y.array()).mean();
}

}  // namespace dyson_eq

#endif  // DYSON_EQ_SPECTRUM_HPP
