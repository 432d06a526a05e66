#ifndef DYSON_EQ_CLI_HPP
#define DYSON_EQ_CLI_HPP

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dyson_eq/denoise.hpp"
#include "dyson_eq/equalizer.hpp"
#include "dyson_eq/errors.hpp"
#include "dyson_eq/io.hpp"
#include "dyson_eq/simulate.hpp"
#include "dyson_eq/spectrum.hpp"
#include "dyson_eq/version.hpp"

namespace dyson_eq::cli {

using json = nlohmann::ordered_json;

inline json report(const std::string& command, json inputs, json outputs,
                   std::optional<std::uint64_t> seed = std::nullopt) {
  json r;
  r["command"] = command;
  r["version"] = kVersion;
  r["seed"] = seed ? json(*seed) : json(nullptr);
  r["inputs"] = std::move(inputs);
  r["outputs"] = std::move(outputs);
  return r;
}

inline json to_json(const Eigen::VectorXd& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

inline std::vector<double> descending(std::vector<double> v) {
  std::sort(v.begin(), v.end(), std::greater<>());
  return v;
}

inline double aspect_ratio(const DenseMatrix& y) {
  return static_cast<double>(std::min(y.rows(), y.cols())) / static_cast<double>(std::max(y.rows(), y.cols()));
}

// KS distance to MP with the variance fitted at the median (raw data of unknown scale).
inline double ks_fitted(const std::vector<double>& eigs, double gamma) {
  const Esd e(eigs);
  return ks_distance(e, MpParams(gamma, fit_mp_scale(e, gamma)));
}

inline double ks_unit(const std::vector<double>& eigs, double gamma) { return ks_distance(Esd(eigs), MpParams(gamma)); }

inline std::string join_path(const std::string& prefix, const std::string& suffix) { return prefix + suffix; }

struct EtaArgs {
  std::optional<double> quantile;
  std::optional<double> fixed;

  EtaPolicy policy() const {
    if (quantile && fixed) throw InvalidInput("--eta-quantile and --eta are mutually exclusive");
    if (fixed) return EtaPolicy::fixed(*fixed);
    return EtaPolicy::quantile(quantile.value_or(0.5));
  }

  json describe() const {
    json j;
    if (fixed)
      j["eta"] = *fixed;
    else
      j["eta_quantile"] = quantile.value_or(0.5);
    return j;
  }
};

inline void add_eta_options(CLI::App* cmd, EtaArgs& eta) {
  cmd->add_option("--eta-quantile", eta.quantile, "quantile of the singular values used as eta (default 0.5)");
  cmd->add_option("--eta", eta.fixed, "fixed positive eta");
}

inline DenseMatrix load_matrix(const std::string& path, std::ostream& err) {
  CsvMatrix csv = read_csv_file(path);
  if (csv.skipped_header) err << "warning: " << path << ": first line is not numeric, skipped as a header\n";
  return std::move(csv.matrix);
}

// ---- equalize ----------------------------------------------------------------------------

struct EqualizeArgs {
  std::string input;
  EtaArgs eta;
  bool drop_empty = false;
  std::string out;
};

inline json cmd_equalize(const EqualizeArgs& a, std::ostream& err) {
  DenseMatrix y = load_matrix(a.input, err);
  json outputs;
  auto [zero_rows, zero_cols] = zero_rows_cols(y.values());
  if (!zero_rows.empty() || !zero_cols.empty()) {
    if (!a.drop_empty) throw ZeroRowOrColumn(zero_rows, zero_cols);
    std::vector<Index> keep_r, keep_c;
    std::size_t p = 0;
    for (Index i = 0; i < y.rows(); ++i)
      if (p < zero_rows.size() && zero_rows[p] == static_cast<std::size_t>(i))
        ++p;
      else
        keep_r.push_back(i);
    p = 0;
    for (Index j = 0; j < y.cols(); ++j)
      if (p < zero_cols.size() && zero_cols[p] == static_cast<std::size_t>(j))
        ++p;
      else
        keep_c.push_back(j);
    if (keep_r.empty() || keep_c.empty()) throw EmptyInput("every row or every column is zero");
    y = DenseMatrix(Eigen::MatrixXd(y.values()(keep_r, keep_c)));
  }
  outputs["dropped_rows"] = zero_rows;
  outputs["dropped_cols"] = zero_cols;

  const EqualizeResult eq = equalize(y, a.eta.policy());
  const double gamma = aspect_ratio(y);
  outputs["rows"] = y.rows();
  outputs["cols"] = y.cols();
  outputs["eta"] = eq.eta;
  outputs["denominator_rows"] = eq.denom1;
  outputs["denominator_cols"] = eq.denom2;
  outputs["gamma"] = gamma;
  outputs["ks_before"] = ks_fitted(covariance_eigenvalues(eq.sigma, std::max(y.rows(), y.cols())), gamma);
  outputs["ks_after"] = ks_unit(covariance_eigenvalues(eq.y_hat), gamma);
  outputs["x_hat"] = to_json(eq.factors.x);
  outputs["y_hat"] = to_json(eq.factors.y);

  if (!a.out.empty()) {
    json files;
    files["y_hat"] = join_path(a.out, "_yhat.csv");
    files["x_factor"] = join_path(a.out, "_x.csv");
    files["y_factor"] = join_path(a.out, "_y.csv");
    write_csv_file(files["y_hat"], eq.y_hat.values());
    write_csv_file(files["x_factor"], eq.factors.x);
    write_csv_file(files["y_factor"], eq.factors.y);
    outputs["files"] = files;
  }
  json inputs = {{"input", a.input}, {"drop_empty", a.drop_empty}, {"out", a.out}};
  inputs.update(a.eta.describe());
  return report("equalize", inputs, outputs);
}

// ---- rank --------------------------------------------------------------------------------

struct RankArgs {
  std::string input;
  EtaArgs eta;
  double epsilon = 0.0;
};

inline json cmd_rank(const RankArgs& a, std::ostream& err) {
  const DenseMatrix y = load_matrix(a.input, err);
  const EqualizeResult eq = equalize(y, a.eta.policy());
  const RankEstimate r = estimate_rank(eq.y_hat, a.epsilon);
  const std::size_t shown = std::min<std::size_t>(r.exceed_margins.size(), static_cast<std::size_t>(r.r_hat) + 5);
  json outputs;
  outputs["r_hat"] = r.r_hat;
  outputs["threshold"] = r.threshold;
  outputs["eta"] = eq.eta;
  outputs["margins"] = std::vector<double>(r.exceed_margins.begin(), r.exceed_margins.begin() + static_cast<long>(shown));
  json inputs = {{"input", a.input}, {"epsilon", a.epsilon}};
  inputs.update(a.eta.describe());
  return report("rank", inputs, outputs);
}

// ---- denoise -----------------------------------------------------------------------------

struct DenoiseArgs {
  std::string input;
  EtaArgs eta;
  std::string rank = "auto";
  double epsilon = 0.0;
  std::string out;
  std::string truth;
};

inline std::optional<Index> parse_rank(const std::string& s, Index k) {
  if (s == "auto") return std::nullopt;
  if (s == "full") return k;
  double v = 0.0;
  if (!detail::parse_double(s, v) || v != std::floor(v)) throw InvalidInput("--rank must be auto, full, or an integer");
  if (v < 0.0 || v > static_cast<double>(k)) throw RankOutOfRange("--rank must lie in [0, min(m, n)]");
  return static_cast<Index>(v);
}

inline json cmd_denoise(const DenoiseArgs& a, std::ostream& err) {
  const DenseMatrix y = load_matrix(a.input, err);
  const std::optional<Index> rank = parse_rank(a.rank, std::min(y.rows(), y.cols()));
  const DenoiseResult res = denoise_equalized(y, a.eta.policy(), rank, a.epsilon);
  json outputs;
  outputs["method"] = to_string(res.method);
  outputs["r_used"] = res.r_used;
  if (!a.truth.empty()) {
    const DenseMatrix truth = load_matrix(a.truth, err);
    detail::check_same_shape(truth, y, "truth");
    outputs["relative_mse"] = relative_mse(res.x_bar.values(), truth.values());
  }
  if (!a.out.empty()) {
    const std::string path = join_path(a.out, "_xbar.csv");
    write_csv_file(path, res.x_bar.values());
    outputs["files"] = {{"x_bar", path}};
  }
  json inputs = {{"input", a.input}, {"rank", a.rank}, {"epsilon", a.epsilon}, {"out", a.out}};
  if (!a.truth.empty()) inputs["truth"] = a.truth;
  inputs.update(a.eta.describe());
  return report("denoise", inputs, outputs);
}

// ---- mpfit -------------------------------------------------------------------------------

struct MpfitArgs {
  std::string input;
  bool already_normalized = false;
  int bins = 50;
  int density_points = 200;
};

inline json cmd_mpfit(const MpfitArgs& a, std::ostream& err) {
  if (a.bins < 1 || a.density_points < 2) throw InvalidInput("--bins must be >= 1 and --density-points >= 2");
  const DenseMatrix y = load_matrix(a.input, err);
  const double gamma = aspect_ratio(y);
  const std::vector<double> eigs = covariance_eigenvalues(y);
  const Esd e(eigs);
  const double sigma2 = a.already_normalized ? 1.0 : fit_mp_scale(e, gamma);
  const MpParams mp(gamma, sigma2);
  const auto [lo, hi] = mp_edges(mp);

  const double top = std::max(eigs.back(), hi) * 1.05;
  std::vector<double> edges(static_cast<std::size_t>(a.bins) + 1);
  std::vector<long> counts(static_cast<std::size_t>(a.bins), 0);
  for (std::size_t k = 0; k < edges.size(); ++k) edges[k] = top * static_cast<double>(k) / a.bins;
  for (double v : eigs) {
    auto b = static_cast<std::size_t>(v / top * a.bins);
    counts[std::min(b, counts.size() - 1)] += 1;
  }
  std::vector<double> taus, dens;
  for (int k = 0; k < a.density_points; ++k) {
    const double tau = lo + (hi - lo) * k / (a.density_points - 1);
    taus.push_back(tau);
    dens.push_back(mp_density(mp, tau));
  }

  json outputs;
  outputs["gamma"] = gamma;
  outputs["sigma2"] = sigma2;
  outputs["ks"] = ks_distance(e, mp);
  outputs["lambda_max"] = eigs.back();
  outputs["beta_minus"] = lo;
  outputs["beta_plus"] = hi;
  outputs["lambda_max_gap"] = eigs.back() - hi;
  outputs["histogram"] = {{"edges", edges}, {"counts", counts}};
  outputs["mp_density"] = {{"tau", taus}, {"density", dens}};
  return report("mpfit", {{"input", a.input}, {"already_normalized", a.already_normalized}, {"bins", a.bins}},
                outputs);
}

// ---- simulate ----------------------------------------------------------------------------

struct SimulateArgs {
  std::string preset;
  std::string config;
  std::uint64_t seed = 0;
  int trials = 10;
  bool trials_set = false;
  std::optional<Index> n;
  std::string out = ".";
};

inline const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names{"fig1-outliers", "fig2-lognormal", "fig3-rankone",
                                              "fig4-bernoulli", "fig5-ranksweep", "fig7-mse"};
  return names;
}

class UnknownPreset : public InvalidInput {
 public:
  explicit UnknownPreset(const std::string& name) : InvalidInput(describe(name)) {}

 private:
  static std::string describe(const std::string& name) {
    std::string s = "unknown preset '" + name + "'; available:";
    for (const auto& p : preset_names()) s += " " + p;
    return s;
  }
};

// Settings read from --config. Keys not used by the chosen preset are ignored.
struct SimConfig {
  json raw = json::object();

  template <class T>
  T get(const char* key, T fallback) const {
    if (!raw.contains(key)) return fallback;
    try {
      return raw.at(key).get<T>();
    } catch (const json::exception& e) {
      throw InvalidInput(std::string("config key '") + key + "': " + e.what());
    }
  }
};

inline SimConfig load_config(const std::string& path) {
  SimConfig c;
  if (path.empty()) return c;
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  try {
    c.raw = json::parse(in);
  } catch (const json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
  if (!c.raw.is_object()) throw ParseError(path + ": expected a JSON object");
  static const std::vector<std::string> known{"preset", "n", "trials", "n_values", "t", "t_values", "scenario",
                                              "s_values", "control", "inner_rank", "rank", "strength"};
  for (const auto& [key, _] : c.raw.items())
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw InvalidInput("config: unknown key '" + key + "'");
  return c;
}

inline std::string file_in(const SimulateArgs& a, const std::string& preset, const std::string& what) {
  return (std::filesystem::path(a.out) / (preset + "_" + what + ".csv")).string();
}

// Rank-20 signal with 10 strong (s^2/n = 1000) and 10 weak (s^2/n = 3) components.
inline SignalSpec two_level_signal(Index m, Index n) {
  SignalSpec s;
  s.m = m;
  s.n = n;
  s.r = 20;
  s.singular_values.resize(20);
  s.singular_values.head(10).setConstant(std::sqrt(1e3 * static_cast<double>(n)));
  s.singular_values.tail(10).setConstant(std::sqrt(3.0 * static_cast<double>(n)));
  return s;
}

inline json sim_spectrum(const SimulateArgs& a, const SimConfig& cfg, const std::string& preset, int trials) {
  const Index n = a.n.value_or(cfg.get<Index>("n", 2000));
  const Index m = (n + 1) / 2;
  const SignalSpec sig = two_level_signal(m, n);
  VarianceSpec var;
  if (preset == "fig1-outliers") {
    var.model = OutlierRowsCols{};
    var.rescale = false;
  } else {
    var.model = LogNormalLowRank{cfg.get<Index>("inner_rank", 10), cfg.get<double>("t", 2.0)};
    var.normalize_mean_to = 1.0;
  }
  const double gamma = static_cast<double>(m) / static_cast<double>(n);
  const MpParams mp(gamma);
  const double beta_plus = mp_edges(mp).second;

  std::vector<std::vector<std::string>> rows;
  json per_trial = json::array();
  for (int t = 0; t < trials; ++t) {
    const Instance inst = make_instance(sig, var, a.seed, static_cast<std::uint64_t>(t));
    const EqualizeResult eq = equalize(inst.y);
    const std::vector<double> before = descending(covariance_eigenvalues(eq.sigma, n));
    const std::vector<double> after = descending(covariance_eigenvalues(eq.y_hat));
    const long above = std::count_if(before.begin(), before.end(), [&](double v) { return v > beta_plus; });
    const RankEstimate r = estimate_rank(eq.y_hat);
    json jt = {{"trial", t}, {"eta", eq.eta}, {"above_beta_plus_before", above}, {"r_hat_after", r.r_hat}};
    if (preset == "fig2-lognormal") {
      jt["ks_before"] = ks_unit(before, gamma);
      jt["ks_after"] = ks_unit(after, gamma);
      jt["lambda_max_after"] = after.front();
    }
    per_trial.push_back(jt);
    if (t == 0)
      for (std::size_t k = 0; k < before.size(); ++k)
        rows.push_back({std::to_string(k + 1), format_double(before[k]), format_double(after[k])});
  }
  const std::string table = file_in(a, preset, "eigenvalues");
  write_table_file(table, {"index", "before", "after"}, rows);

  std::vector<std::vector<std::string>> dens;
  const auto [lo, hi] = mp_edges(mp);
  for (int k = 0; k < 200; ++k) {
    const double tau = lo + (hi - lo) * k / 199.0;
    dens.push_back({format_double(tau), format_double(mp_density(mp, tau))});
  }
  const std::string density = file_in(a, preset, "mp_density");
  write_table_file(density, {"tau", "density"}, dens);

  return {{"m", m},
          {"n", n},
          {"beta_plus", beta_plus},
          {"rank_threshold", std::sqrt(static_cast<double>(m)) + std::sqrt(static_cast<double>(n))},
          {"trials", per_trial},
          {"files", {{"eigenvalues", table}, {"mp_density", density}}}};
}

inline json sim_convergence(const SimulateArgs& a, const SimConfig& cfg, const std::string& preset, int trials) {
  ConvergenceConfig c;
  c.seed = a.seed;
  c.trials = trials;
  c.variance.normalize_mean_to = 1.0;
  c.variance.model = preset == "fig4-bernoulli" ? VarianceModel{BernoulliDR{}} : VarianceModel{RankOneUniform{}};
  const std::string scenario = cfg.get<std::string>("scenario", "a");
  if (scenario == "b") {
    c.strength_exponent = 1.0;
  } else if (scenario == "c") {
    c.m_coef = 3.0;
    c.m_exponent = 0.75;
  } else if (scenario == "d") {
    c.localization = PowerSupport{5.0, 2.0 / 3.0};
  } else if (scenario != "a") {
    throw InvalidInput("config: scenario must be one of a, b, c, d");
  }
  c.n_values = a.n ? std::vector<Index>{*a.n} : cfg.get<std::vector<Index>>("n_values", {250, 500, 1000, 2000});
  const ConvergenceTable t = run_convergence_sweep(c);

  std::vector<std::vector<std::string>> rows, raw;
  for (const auto& r : t.rows)
    rows.push_back({std::to_string(r.n), std::to_string(r.m), format_double(r.median_err_x),
                    format_double(r.median_err_y)});
  for (const auto& r : t.trials)
    raw.push_back({std::to_string(r.n), std::to_string(r.m), std::to_string(r.trial), format_double(r.eta),
                   format_double(r.err_x), format_double(r.err_y)});
  const std::string table = file_in(a, preset, "errors");
  const std::string trials_file = file_in(a, preset, "trials");
  write_table_file(table, {"n", "m", "median_err_x", "median_err_y"}, rows);
  write_table_file(trials_file, {"n", "m", "trial", "eta", "err_x", "err_y"}, raw);

  json summary = json::array();
  for (const auto& r : t.rows)
    summary.push_back({{"n", r.n}, {"m", r.m}, {"median_err_x", r.median_err_x}, {"median_err_y", r.median_err_y}});
  return {{"scenario", scenario}, {"table", summary}, {"files", {{"errors", table}, {"trials", trials_file}}}};
}

inline json sim_ranksweep(const SimulateArgs& a, const SimConfig& cfg, int trials) {
  const Index n = a.n.value_or(cfg.get<Index>("n", 2000));
  SignalSpec sig;
  sig.n = n;
  sig.m = (n + 1) / 2;
  sig.r = cfg.get<Index>("rank", 10);
  sig.singular_values = equal_singular_values(sig.r, n, cfg.get<double>("strength", 10.0));
  VarianceSpec var;
  var.model = LogNormalLowRank{cfg.get<Index>("inner_rank", 30), cfg.get<double>("t", 2.0)};
  var.normalize_mean_to = 1.0;

  std::vector<long> r_hat(static_cast<std::size_t>(trials));
  std::vector<std::vector<double>> margins(static_cast<std::size_t>(trials));
  Eigen::VectorXd sv_before, sv_after;
  parallel_for(static_cast<std::size_t>(trials), [&](std::size_t t) {
    const Instance inst = make_instance(sig, var, a.seed, t);
    const EqualizeResult eq = equalize(inst.y);
    const Eigen::VectorXd after = singular_values(eq.y_hat);
    const RankEstimate r = estimate_rank_from_singular_values(after, sig.m, sig.n);
    r_hat[t] = r.r_hat;
    margins[t] = r.exceed_margins;
    if (t == 0) {
      sv_before = eq.sigma;
      sv_after = after;
    }
  });

  std::vector<std::vector<std::string>> rows, sv;
  for (int t = 0; t < trials; ++t) {
    const auto& mg = margins[static_cast<std::size_t>(t)];
    const auto r = static_cast<std::size_t>(sig.r);
    rows.push_back({std::to_string(t), std::to_string(r_hat[static_cast<std::size_t>(t)]),
                    r > 0 ? format_double(mg[r - 1]) : "nan", r < mg.size() ? format_double(mg[r]) : "nan"});
  }
  for (Index k = 0; k < sv_before.size(); ++k)
    sv.push_back({std::to_string(k + 1), format_double(sv_before(k)), format_double(sv_after(k))});
  const std::string table = file_in(a, "fig5-ranksweep", "rank");
  const std::string sv_file = file_in(a, "fig5-ranksweep", "singular_values");
  write_table_file(table, {"trial", "r_hat", "margin_at_r", "margin_after_r"}, rows);
  write_table_file(sv_file, {"index", "before", "after"}, sv);
  return {{"m", sig.m},
          {"n", n},
          {"rank", sig.r},
          {"r_hat", r_hat},
          {"threshold", std::sqrt(static_cast<double>(sig.m)) + std::sqrt(static_cast<double>(n))},
          {"files", {{"rank", table}, {"singular_values", sv_file}}}};
}

inline json sim_mse(const SimulateArgs& a, const SimConfig& cfg, int trials) {
  const Index n = a.n.value_or(cfg.get<Index>("n", 2000));
  const Index m = (n + 1) / 2;
  const std::string control = cfg.get<std::string>("control", "t");
  MseConfig c;
  c.seed = a.seed;
  c.trials = trials;
  auto point = [&](double ctl, double s_over_sqrt_n, double t) {
    MsePoint p;
    p.control = ctl;
    p.signal.m = m;
    p.signal.n = n;
    p.signal.r = std::min<Index>(20, m);
    p.signal.singular_values =
        Eigen::VectorXd::Constant(p.signal.r, s_over_sqrt_n * std::sqrt(static_cast<double>(n)));
    p.signal.localization = SparseSupport{0.5, 0.5};
    p.variance.model = LogNormalLowRank{cfg.get<Index>("inner_rank", 30), t};
    p.variance.normalize_mean_to = 1.0;
    return p;
  };
  if (control == "t") {
    for (double t : cfg.get<std::vector<double>>("t_values", {0.0, 0.5, 1.0, 1.5, 2.0})) c.points.push_back(point(t, 3.0, t));
  } else if (control == "s") {
    for (double s : cfg.get<std::vector<double>>("s_values", {1.5, 2.0, 3.0, 4.0, 5.0}))
      c.points.push_back(point(s, s, cfg.get<double>("t", 2.0)));
  } else {
    throw InvalidInput("config: control must be 't' or 's'");
  }
  const MseTable t = run_mse_sweep(c);
  std::vector<std::vector<std::string>> rows, raw;
  json summary = json::array();
  for (const auto& r : t.rows) {
    rows.push_back({format_double(r.control), to_string(r.method), format_double(r.mean_relative_mse),
                    format_double(r.median_relative_mse)});
    summary.push_back({{"control", r.control}, {"method", to_string(r.method)}, {"mean_relative_mse", r.mean_relative_mse}});
  }
  for (const auto& r : t.trials)
    raw.push_back({format_double(r.control), to_string(r.method), std::to_string(r.trial), std::to_string(r.r_used),
                   format_double(r.relative_mse)});
  const std::string table = file_in(a, "fig7-mse", "mse");
  const std::string trials_file = file_in(a, "fig7-mse", "trials");
  write_table_file(table, {control, "method", "mean_relative_mse", "median_relative_mse"}, rows);
  write_table_file(trials_file, {control, "method", "trial", "r_used", "relative_mse"}, raw);
  return {{"m", m}, {"n", n}, {"control", control}, {"table", summary},
          {"files", {{"mse", table}, {"trials", trials_file}}}};
}

inline json cmd_simulate(SimulateArgs a) {
  const SimConfig cfg = load_config(a.config);
  if (a.preset.empty()) a.preset = cfg.get<std::string>("preset", "");
  if (a.preset.empty()) throw InvalidInput("simulate needs --preset or a config with a \"preset\" key");
  if (std::find(preset_names().begin(), preset_names().end(), a.preset) == preset_names().end())
    throw UnknownPreset(a.preset);
  const int trials = a.trials_set ? a.trials : cfg.get<int>("trials", a.trials);
  if (trials < 1) throw InvalidInput("--trials must be positive");
  if (a.n && *a.n < 2) throw InvalidInput("--n must be at least 2");
  std::filesystem::create_directories(a.out);

  json outputs;
  if (a.preset == "fig1-outliers" || a.preset == "fig2-lognormal")
    outputs = sim_spectrum(a, cfg, a.preset, trials);
  else if (a.preset == "fig3-rankone" || a.preset == "fig4-bernoulli")
    outputs = sim_convergence(a, cfg, a.preset, trials);
  else if (a.preset == "fig5-ranksweep")
    outputs = sim_ranksweep(a, cfg, trials);
  else
    outputs = sim_mse(a, cfg, trials);

  json inputs = {{"preset", a.preset}, {"config", a.config}, {"trials", trials}, {"out", a.out}, {"config_values", cfg.raw}};
  if (a.n) inputs["n"] = *a.n;
  return report("simulate", inputs, outputs, a.seed);
}

// ---- entry point -------------------------------------------------------------------------

// Exit codes: 0 success, 2 usage or precondition failure, 3 numerical failure.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Dyson equalizer: normalize heteroskedastic noise, estimate rank, denoise", "dyson-eq"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);
  app.fallthrough();
  std::string report_path;
  app.add_option("--report", report_path, "also write the JSON report to this file");

  EqualizeArgs eq;
  auto* c_eq = app.add_subcommand("equalize", "estimate scaling factors and write the normalized matrix");
  c_eq->add_option("input", eq.input, "CSV matrix")->required();
  add_eta_options(c_eq, eq.eta);
  c_eq->add_flag("--drop-empty", eq.drop_empty, "drop all-zero rows and columns instead of failing");
  c_eq->add_option("--out", eq.out, "prefix for <prefix>_yhat.csv, <prefix>_x.csv, <prefix>_y.csv");

  RankArgs rk;
  auto* c_rank = app.add_subcommand("rank", "estimate the signal rank after equalization");
  c_rank->add_option("input", rk.input, "CSV matrix")->required();
  add_eta_options(c_rank, rk.eta);
  c_rank->add_option("--epsilon", rk.epsilon, "threshold slack");

  DenoiseArgs dn;
  auto* c_dn = app.add_subcommand("denoise", "low-rank recovery after equalization");
  c_dn->add_option("input", dn.input, "CSV matrix")->required();
  add_eta_options(c_dn, dn.eta);
  c_dn->add_option("--rank", dn.rank, "auto, full, or an integer");
  c_dn->add_option("--epsilon", dn.epsilon, "threshold slack for --rank=auto");
  c_dn->add_option("--out", dn.out, "prefix for <prefix>_xbar.csv");
  c_dn->add_option("--truth", dn.truth)->group("");

  MpfitArgs mf;
  auto* c_mf = app.add_subcommand("mpfit", "compare the spectrum with the Marchenko-Pastur law");
  c_mf->add_option("input", mf.input, "CSV matrix")->required();
  c_mf->add_flag("--already-normalized", mf.already_normalized, "use unit noise variance instead of fitting it");
  c_mf->add_option("--bins", mf.bins, "histogram bins");
  c_mf->add_option("--density-points", mf.density_points, "MP density samples");

  SimulateArgs sm;
  auto* c_sim = app.add_subcommand("simulate", "run a seeded synthetic experiment");
  c_sim->add_option("--preset", sm.preset, "experiment name");
  c_sim->add_option("--config", sm.config, "JSON settings");
  c_sim->add_option("--seed", sm.seed, "base seed")->required();
  auto* trials_opt = c_sim->add_option("--trials", sm.trials, "number of trials");
  c_sim->add_option("--n", sm.n, "long dimension");
  c_sim->add_option("--out", sm.out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    json r;
    if (*c_eq)
      r = cmd_equalize(eq, err);
    else if (*c_rank)
      r = cmd_rank(rk, err);
    else if (*c_dn)
      r = cmd_denoise(dn, err);
    else if (*c_mf)
      r = cmd_mpfit(mf, err);
    else {
      sm.trials_set = trials_opt->count() > 0;
      r = cmd_simulate(sm);
    }
    const std::string text = r.dump(2);
    out << text << '\n';
    if (!report_path.empty()) {
      std::ofstream f(report_path);
      if (!f) throw InvalidInput("cannot write " + report_path);
      f << text << '\n';
    }
    return 0;
  } catch (const InvalidInput& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << '\n';
    return 3;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace dyson_eq::cli

#endif  // DYSON_EQ_CLI_HPP
