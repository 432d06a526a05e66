#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "dyson_eq.hpp"

using namespace dyson_eq;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

Eigen::MatrixXd gaussian(Index m, Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> d;
  Eigen::MatrixXd a(m, n);
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i < m; ++i) a(i, j) = d(rng);
  return a;
}

Eigen::VectorXd uniform(Index k, double lo, double hi, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> d(lo, hi);
  Eigen::VectorXd v(k);
  for (Index i = 0; i < k; ++i) v(i) = d(rng);
  return v;
}

Index uniform_index(Index lo, Index hi, std::mt19937_64& rng) {
  return std::uniform_int_distribution<Index>(lo, hi)(rng);
}

// Heteroskedastic noise plus a rank-2 signal, m <= n.
Eigen::MatrixXd random_instance(Index m, Index n, std::mt19937_64& rng) {
  const Eigen::VectorXd x = uniform(m, 0.5, 3.0, rng), y = uniform(n, 0.5, 3.0, rng);
  Eigen::MatrixXd e = gaussian(m, n, rng);
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i < m; ++i) e(i, j) *= std::sqrt(x(i) * y(j));
  return e + 2.0 * gaussian(m, 2, rng) * gaussian(2, n, rng);
}

Outcome c1_oracle() {
  std::mt19937_64 rng(101);
  const auto start = Clock::now();
  double worst = 0.0;
  const double etas[] = {0.5, 1.0, 3.0};
  for (int k = 0; k < 50; ++k) {
    const Index m = uniform_index(3, 40, rng);
    const Index n = uniform_index(m, 60, rng);
    const DenseMatrix y(gaussian(m, n, rng));
    const double eta = etas[k % 3];
    const ResolventDiagonal fast = resolvent_diagonal(thin_svd(y), eta);
    const ResolventDiagonal slow = naive_resolvent_diagonal(y, eta);
    worst = std::max({worst, (fast.g1 - slow.g1).lpNorm<Eigen::Infinity>(), (fast.g2 - slow.g2).lpNorm<Eigen::Infinity>()});
  }
  const double secs = std::chrono::duration<double>(Clock::now() - start).count();
  return {worst < 1e-10 && secs < 30.0, fmt("max diff %.3g", worst) + fmt(", %.2f s", secs)};
}

Outcome c2_scale_invariance() {
  std::mt19937_64 rng(202);
  double worst = 0.0;
  for (int k = 0; k < 20; ++k) {
    const Index m = uniform_index(10, 60, rng);
    const Index n = uniform_index(m, 100, rng);
    const Eigen::MatrixXd y = random_instance(m, n, rng);
    const Eigen::MatrixXd ref = equalize(DenseMatrix(y)).y_hat.values();
    for (double c : {1e-3, 1.0, 1e4}) {
      const Eigen::MatrixXd scaled = equalize(DenseMatrix(Eigen::MatrixXd(c * y))).y_hat.values();
      worst = std::max(worst, (scaled - ref).cwiseAbs().maxCoeff());
    }
  }
  return {worst < 1e-10, fmt("max entry diff %.3g", worst)};
}

Outcome c3_residuals() {
  std::mt19937_64 rng(303);
  double worst_dyson = 0.0, worst_dr = 0.0, worst_r1 = 0.0;
  bool bounds = true;
  for (int k = 0; k < 50; ++k) {
    const Index m = uniform_index(2, 60, rng);
    const Index n = uniform_index(2, 80, rng);
    Eigen::MatrixXd s(m, n);
    std::uniform_real_distribution<double> u(0.01, 5.0);
    for (Index j = 0; j < n; ++j)
      for (Index i = 0; i < m; ++i) s(i, j) = u(rng) / static_cast<double>(n);
    const VarianceMatrix sv(s);
    const double eta = std::exp(std::uniform_real_distribution<double>(std::log(0.1), std::log(5.0))(rng));
    const DysonSolution g = solve_dyson(sv, eta);
    worst_dyson = std::max(worst_dyson, dyson_residual(s, g.g1, g.g2, eta));
    const double c = static_cast<double>(std::max(m, n)) * s.maxCoeff();
    const double lower = 1.0 / (eta + c / eta);
    bounds = bounds && g.g1.minCoeff() > lower && g.g2.minCoeff() > lower && g.g1.maxCoeff() < 1.0 / eta &&
             g.g2.maxCoeff() < 1.0 / eta;
    worst_dr = std::max(worst_dr, sinkhorn(sv).dr_residual);

    const Eigen::VectorXd x = uniform(m, 0.1, 10.0, rng);
    const Eigen::VectorXd y = uniform(n, 0.1, 10.0, rng) / static_cast<double>(n);
    const DysonSolution a = solve_dyson(VarianceMatrix(Eigen::MatrixXd(x * y.transpose())), eta);
    const DysonSolution b = solve_dyson_rank_one(x, y, eta);
    worst_r1 = std::max({worst_r1, (a.g1 - b.g1).lpNorm<Eigen::Infinity>(), (a.g2 - b.g2).lpNorm<Eigen::Infinity>()});
  }
  const bool pass = worst_dyson < 1e-10 && bounds && worst_dr < 1e-10 && worst_r1 < 1e-10;
  return {pass, fmt("dyson %.3g", worst_dyson) + fmt(", sinkhorn %.3g", worst_dr) + fmt(", rank-one gap %.3g", worst_r1) +
                    (bounds ? ", bounds hold" : ", bounds violated")};
}

struct SweepErrors {
  double x500, y500, x2000, y2000;
};

SweepErrors convergence(VarianceModel model, double strength_exponent, std::uint64_t seed) {
  ConvergenceConfig cfg;
  cfg.variance.model = model;
  cfg.variance.normalize_mean_to = 1.0;
  cfg.strength_exponent = strength_exponent;
  cfg.n_values = {500, 2000};
  cfg.trials = 10;
  cfg.seed = seed;
  const ConvergenceTable t = run_convergence_sweep(cfg);
  return {t.rows[0].median_err_x, t.rows[0].median_err_y, t.rows[1].median_err_x, t.rows[1].median_err_y};
}

Outcome convergence_outcome(const SweepErrors& e) {
  const double rx = e.x2000 / e.x500, ry = e.y2000 / e.y500;
  const bool pass = e.x2000 < 0.15 && e.y2000 < 0.15 && rx <= 0.67 && ry <= 0.67;
  return {pass, fmt("x: %.3f", e.x500) + fmt(" -> %.3f", e.x2000) + fmt(" (ratio %.2f)", rx) + fmt(", y: %.3f", e.y500) +
                    fmt(" -> %.3f", e.y2000) + fmt(" (ratio %.2f)", ry)};
}

SweepErrors c4_errors;

Outcome c4_rank_one() {
  const auto start = Clock::now();
  c4_errors = convergence(RankOneUniform{}, 0.0, 404);
  Outcome o = convergence_outcome(c4_errors);
  const double secs = std::chrono::duration<double>(Clock::now() - start).count();
  o.pass = o.pass && secs < 600.0;
  o.detail += fmt(", %.0f s", secs);
  return o;
}

Outcome c5_strong_signal() {
  const SweepErrors e = convergence(RankOneUniform{}, 1.0, 505);
  Outcome o = convergence_outcome(e);
  const bool within = e.x2000 <= 2.0 * c4_errors.x2000 && e.y2000 <= 2.0 * c4_errors.y2000 &&
                      e.x500 <= 2.0 * c4_errors.x500 && e.y500 <= 2.0 * c4_errors.y500;
  o.pass = o.pass && within;
  o.detail += within ? ", within 2x of rank-one run" : ", not within 2x of rank-one run";
  return o;
}

Outcome c6_general() { return convergence_outcome(convergence(BernoulliDR{}, 0.0, 606)); }

Outcome c7_mp_law() {
  SignalSpec sig;
  sig.m = 1000;
  sig.n = 2000;
  VarianceSpec var;
  var.model = LogNormalLowRank{10, 2.0};
  var.normalize_mean_to = 1.0;
  const MpParams mp(0.5);
  const double edge = mp_edges(mp).second;
  std::vector<double> ks_after(5), ks_before(5), lam(5);
  parallel_for(5, [&](std::size_t k) {
    const Instance inst = make_instance(sig, var, 707, k);
    const EqualizeResult eq = equalize(inst.y);
    const std::vector<double> after = covariance_eigenvalues(eq.y_hat);
    ks_after[k] = ks_distance(esd(after), mp);
    ks_before[k] = ks_distance(esd(covariance_eigenvalues(eq.sigma, 2000)), mp);
    lam[k] = after.back();
  });
  bool pass = true;
  double worst_after = 0.0, worst_gap = 0.0, min_before = 1.0;
  for (int k = 0; k < 5; ++k) {
    worst_after = std::max(worst_after, ks_after[k]);
    worst_gap = std::max(worst_gap, std::abs(lam[k] - edge));
    min_before = std::min(min_before, ks_before[k]);
  }
  pass = worst_after < 0.03 && worst_gap < 0.1 && min_before > 0.15;
  return {pass, fmt("KS after <= %.4f", worst_after) + fmt(", |lambda_1 - edge| <= %.4f", worst_gap) +
                    fmt(", KS before >= %.3f", min_before)};
}

Outcome c8_rank() {
  SignalSpec sig;
  sig.m = 1000;
  sig.n = 2000;
  VarianceSpec var;
  var.model = LogNormalLowRank{30, 2.0};
  var.normalize_mean_to = 1.0;
  std::vector<long> with(10), without(10);
  parallel_for(20, [&](std::size_t k) {
    SignalSpec s = sig;
    s.r = k < 10 ? 10 : 0;
    s.singular_values = equal_singular_values(s.r, s.n, 10.0);
    const Instance inst = make_instance(s, var, 808, k % 10);
    const long r = estimate_rank(equalize(inst.y).y_hat).r_hat;
    (k < 10 ? with : without)[k % 10] = r;
  });
  int hits = 0, zeros = 0;
  std::string seen;
  for (int k = 0; k < 10; ++k) {
    hits += with[k] == 10;
    zeros += without[k] == 0;
    seen += (k ? "," : "") + std::to_string(with[k]);
  }
  return {hits >= 8 && zeros >= 9,
          std::to_string(hits) + "/10 exact (r_hat " + seen + "), pure noise r_hat = 0 in " + std::to_string(zeros) + "/10"};
}

Outcome c9_outliers() {
  SignalSpec sig;
  sig.m = 1000;
  sig.n = 2000;
  sig.r = 20;
  sig.singular_values.resize(20);
  sig.singular_values.head(10).setConstant(std::sqrt(1e3 * 2000.0));
  sig.singular_values.tail(10).setConstant(std::sqrt(3.0 * 2000.0));
  VarianceSpec var;
  var.model = OutlierRowsCols{};
  var.rescale = false;
  const double edge = mp_edges(MpParams(0.5)).second;
  std::vector<long> above(10), r_hat(10);
  parallel_for(10, [&](std::size_t k) {
    const Instance inst = make_instance(sig, var, 909, k);
    const EqualizeResult eq = equalize(inst.y);
    const std::vector<double> before = covariance_eigenvalues(eq.sigma, 2000);
    above[k] = std::count_if(before.begin(), before.end(), [&](double v) { return v > edge; });
    r_hat[k] = estimate_rank(eq.y_hat).r_hat;
  });
  int good = 0;
  std::string seen;
  for (int k = 0; k < 10; ++k) {
    good += above[k] == 30 && r_hat[k] == 20;
    seen += (k ? " " : "") + std::to_string(above[k]) + "/" + std::to_string(r_hat[k]);
  }
  return {good >= 8, std::to_string(good) + "/10 seeds (before/after: " + seen + ")"};
}

Outcome c10_denoising() {
  MseConfig cfg;
  for (double t : {0.0, 2.0}) {
    MsePoint p;
    p.control = t;
    p.signal.m = 1000;
    p.signal.n = 2000;
    p.signal.r = 20;
    p.signal.singular_values = Eigen::VectorXd::Constant(20, 3.0 * std::sqrt(2000.0));
    p.signal.localization = SparseSupport{0.5, 0.5};
    p.variance.model = LogNormalLowRank{30, t};
    p.variance.normalize_mean_to = 1.0;
    cfg.points.push_back(p);
  }
  cfg.methods = {DenoiseMethod::EqualizedSvt, DenoiseMethod::OracleSvt};
  cfg.trials = 5;
  cfg.seed = 1010;
  const MseTable t = run_mse_sweep(cfg);
  const double eq0 = t.rows[0].mean_relative_mse, or0 = t.rows[1].mean_relative_mse;
  const double eq2 = t.rows[2].mean_relative_mse, or2 = t.rows[3].mean_relative_mse;
  const double rel0 = std::abs(eq0 - or0) / or0;
  return {eq2 < or2 && rel0 <= 0.10, fmt("t=2: %.4f", eq2) + fmt(" vs oracle %.4f", or2) + fmt("; t=0: %.4f", eq0) +
                                          fmt(" vs %.4f", or0) + fmt(" (%.1f%% apart)", 100.0 * rel0)};
}

Outcome c11_weighted_loss() {
  std::mt19937_64 rng(1111);
  int violations = 0, checks = 0;
  for (int k = 0; k < 20; ++k) {
    const Index m = uniform_index(5, 40, rng);
    const Index n = uniform_index(5, 40, rng);
    const Eigen::VectorXd x = uniform(m, 0.2, 5.0, rng), y = uniform(n, 0.2, 5.0, rng);
    const VarianceMatrix s(Eigen::MatrixXd(x * y.transpose()));
    Eigen::MatrixXd obs = gaussian(m, n, rng);
    for (Index j = 0; j < n; ++j)
      for (Index i = 0; i < m; ++i) obs(i, j) *= std::sqrt(s.values()(i, j));
    obs += gaussian(m, 3, rng) * gaussian(3, n, rng);
    const DenseMatrix yd(obs);
    for (Index r = 1; r <= std::min<Index>(5, std::min(m, n)); ++r) {
      const Eigen::MatrixXd est = unscale_rows_cols(truncate_svd(scale_rows_cols(obs, x, y), r), x, y);
      const double best = weighted_loss(DenseMatrix(est), yd, s);
      const double tol = 1e-10 * std::max(1.0, best);
      ++checks;
      if (weighted_loss(truncate_svd(yd, r), yd, s) < best - tol) ++violations;
      Eigen::BDCSVD<Eigen::MatrixXd> svd(est, Eigen::ComputeThinU | Eigen::ComputeThinV);
      const Eigen::MatrixXd a = svd.matrixU().leftCols(r) * svd.singularValues().head(r).asDiagonal();
      const Eigen::MatrixXd b = svd.matrixV().leftCols(r);
      for (int c = 0; c < 100; ++c) {
        // Half near the estimate, half unrelated.
        const Eigen::MatrixXd cand = c % 2 ? Eigen::MatrixXd((a + 0.05 * gaussian(m, r, rng)) * (b + 0.05 * gaussian(n, r, rng)).transpose())
                                           : Eigen::MatrixXd(gaussian(m, r, rng) * gaussian(r, n, rng));
        ++checks;
        if (weighted_loss(DenseMatrix(cand), yd, s) < best - tol) ++violations;
      }
    }
  }
  return {violations == 0, std::to_string(violations) + " violations in " + std::to_string(checks) + " comparisons"};
}

Outcome c12_monotonicity() {
  std::mt19937_64 rng(1212);
  int violations = 0, tau_bad = 0;
  for (int k = 0; k < 1000; ++k) {
    const Index m = uniform_index(2, 20, rng);
    const Index n = uniform_index(m, 30, rng);
    const bool constant = k % 10 == 0;
    Eigen::VectorXd x0 = constant ? Eigen::VectorXd::Constant(m, uniform(1, 0.1, 10.0, rng)(0)) : uniform(m, 0.1, 10.0, rng);
    Eigen::VectorXd y0 = constant ? Eigen::VectorXd::Constant(n, uniform(1, 0.1, 10.0, rng)(0)) : uniform(n, 0.1, 10.0, rng);
    y0 /= static_cast<double>(n);
    const double eta = uniform(1, 0.2, 3.0, rng)(0);
    const ScalingFactors f = normalize_factor_pair(x0, y0, eta);
    const DysonSolution h = solve_dyson_rank_one(f.x, f.y, eta);
    const Eigen::VectorXd w1 = f.x.cwiseProduct(h.g1), w2 = f.y.cwiseProduct(h.g2);
    auto check = [&](const Eigen::VectorXd& v, const Eigen::VectorXd& w) {
      for (Index i = 0; i < v.size(); ++i)
        for (Index j = 0; j < v.size(); ++j) {
          if (v(i) == v(j)) continue;
          if ((w(i) > w(j)) != (v(i) > v(j))) ++violations;
          if (std::abs(w(i) - w(j)) / w(j) > std::abs(v(i) - v(j)) / v(j) * (1 + 1e-12) + 1e-15) ++violations;
        }
    };
    check(f.x, w1);
    check(f.y, w2);
    const double tau = snr_gain_tau(x0, y0);
    if (tau < 1.0 - 1e-12) ++tau_bad;
    if (constant != (std::abs(tau - 1.0) <= 1e-12)) ++tau_bad;
  }
  return {violations == 0 && tau_bad == 0,
          std::to_string(violations) + " ordering violations, " + std::to_string(tau_bad) + " tau violations"};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"oracle resolvent equivalence", c1_oracle},
      {"scale invariance", c2_scale_invariance},
      {"fixed-point and balancing residuals", c3_residuals},
      {"factor convergence, rank-one variance", c4_rank_one},
      {"factor convergence, strong signal", c5_strong_signal},
      {"factor convergence, general variance", c6_general},
      {"MP law after equalization", c7_mp_law},
      {"rank estimation", c8_rank},
      {"outlier rows and columns", c9_outliers},
      {"denoising dominance", c10_denoising},
      {"weighted-loss optimality", c11_weighted_loss},
      {"monotone weights and SNR gain", c12_monotonicity},
  };
  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const auto start = Clock::now();
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(Clock::now() - start).count();
    std::printf("%s %2zu %s: %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", k + 1, criteria[k].first.c_str(),
                o.detail.c_str(), secs);
    std::fflush(stdout);
    failed += !o.pass;
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
