#include "awsde/experiments.hpp"

#include <omp.h>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "awsde/error.hpp"

#ifndef AWSDE_VERSION
#define AWSDE_VERSION "0.0.0"
#endif

namespace awsde {

namespace fs = std::filesystem;

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  if (v == std::trunc(v) && std::abs(v) < 1e15) {
    const auto r = std::to_chars(buf, buf + sizeof buf, static_cast<long long>(v));
    return {buf, r.ptr};
  }
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, r.ptr};
}

namespace {

std::string join(const std::vector<std::string>& cells) {
  std::string line;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) line += ',';
    line += cells[i];
  }
  line += '\n';
  return line;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::configuration, "cannot write " + path.string());
  out << content;
}

std::int64_t pow2(int k) { return std::int64_t{1} << k; }

}  // namespace

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::string s = "k_or_delta,estimate,stderr,paths,h,seed\n";
  for (const SweepRow& r : rows) {
    s += join({format_number(r.k_or_delta), format_number(r.estimate),
               format_number(r.stderr_estimate), std::to_string(r.paths), format_number(r.h),
               std::to_string(r.seed)});
  }
  return s;
}

std::string rate_curve_csv(const RateCurve& curve) {
  std::string s = "h,err_sup,err_int,stderr\n";
  for (const RatePoint& r : curve.points) {
    s += join({format_number(r.h), format_number(r.err_sup), format_number(r.err_int),
               format_number(r.stderr_sup)});
  }
  return s;
}

std::string moments_csv(const std::vector<MomentRow>& rows) {
  std::string s = "h,p,sup_moment\n";
  for (const MomentRow& r : rows) {
    s += join({format_number(r.h), format_number(r.p), format_number(r.sup_moment)});
  }
  return s;
}

std::vector<SweepRow> discontinuous_drift_sweep(std::int64_t steps, std::int64_t paths,
                                                std::uint64_t seed, const ExecutionPolicy& policy,
                                                SchemeKind scheme) {
  const TimeGrid grid(1.0, steps);
  const StepperConfig mu = make_stepper(builtin_model("brownian"), scheme);
  std::vector<SweepRow> rows;
  for (int k = 0; k <= 10; ++k) {
    const StepperConfig nu =
        make_stepper(builtin_model("perturbed_sign", {{"k", static_cast<double>(k)}}), scheme);
    const EstimateResult r = estimate_aw(mu, nu, 2.0, grid, paths, seed, policy);
    rows.push_back({static_cast<double>(k), r.estimate, r.stderr_estimate, paths, grid.step(), seed});
  }
  return rows;
}

CirSweep cir_perturbation_sweep(std::int64_t steps, std::int64_t paths, std::uint64_t seed,
                                const ExecutionPolicy& policy) {
  const TimeGrid grid(1.0, steps);
  const StepperConfig mu = make_stepper(builtin_model("cir"), SchemeKind::sym_em);
  CirSweep sweep;
  const auto family = [&](const char* param, std::vector<SweepRow>& rows) {
    for (double delta : cir_perturbations) {
      ModelParameters params{{"kappa", 1.0}, {"eta", 1.0}, {"gamma", 1.0}};
      params[param] += delta;
      const StepperConfig nu = make_stepper(builtin_model("cir", params), SchemeKind::sym_em);
      const EstimateResult r = estimate_aw(mu, nu, 2.0, grid, paths, seed, policy);
      rows.push_back({delta, r.estimate, r.stderr_estimate, paths, grid.step(), seed});
    }
  };
  family("kappa", sweep.kappa);
  family("eta", sweep.eta);
  family("gamma", sweep.gamma);
  return sweep;
}

double log_linear_r2(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = std::min(x.size(), y.size());
  if (n < 3) return std::nan("");
  std::vector<double> ly(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(y[i] > 0.0)) return std::nan("");
    ly[i] = std::log(y[i]);
  }
  const double mx = std::accumulate(x.begin(), x.begin() + static_cast<long>(n), 0.0) / n;
  const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (ly[i] - my);
    syy += (ly[i] - my) * (ly[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return std::nan("");
  return sxy * sxy / (sxx * syy);
}

std::pair<FiniteAdaptedProcess, FiniteAdaptedProcess> second_order_counterexample() {
  const Rational half(1, 2);
  FiniteAdaptedProcess x(2), y(2);
  const int xl = x.add(0, -0.5, half), xh = x.add(0, 0.5, half);
  x.add(xl, -2.0, half);
  x.add(xl, 2.0, half);
  x.add(xh, 0.0, Rational(1));
  const int yl = y.add(0, -0.5, half), yh = y.add(0, 0.5, half);
  y.add(yl, -2.0, half);
  y.add(yl, 0.0, half);
  y.add(yh, -2.0, half);
  y.add(yh, 2.0, half);
  x.validate();
  y.validate();
  return {std::move(x), std::move(y)};
}

BicausalPlan antitone_first_plan(const FiniteAdaptedProcess& mu, const FiniteAdaptedProcess& nu) {
  const auto sorted = [](const FiniteAdaptedProcess& p, bool descending) {
    std::vector<int> c = p.children(0);
    std::sort(c.begin(), c.end(), [&](int a, int b) {
      return descending ? p.node(a).value > p.node(b).value : p.node(a).value < p.node(b).value;
    });
    return c;
  };
  const std::vector<int> cu = sorted(mu, false);
  const std::vector<int> cv = sorted(nu, true);
  std::vector<Rational> mu_mass, nu_mass;
  for (int c : cu) mu_mass.push_back(mu.node(c).mass);
  for (int c : cv) nu_mass.push_back(nu.node(c).mass);
  BicausalPlan plan(mu.stages());
  for (const CouplingEntry& e : monotone_coupling(mu_mass, nu_mass)) {
    const int child = plan.add(0, cu[static_cast<std::size_t>(e.i)], cv[static_cast<std::size_t>(e.j)], e.mass);
    extend_knothe_rosenblatt(plan, child, mu, nu);
  }
  return plan;
}

std::pair<FiniteAdaptedProcess, FiniteAdaptedProcess> martingale_pair(double eps) {
  const Rational half(1, 2);
  FiniteAdaptedProcess x(2), xe(2);
  const int root = x.add(0, 0.0, Rational(1));
  x.add(root, -1.0, half);
  x.add(root, 1.0, half);
  const int lo = xe.add(0, -eps, half), hi = xe.add(0, eps, half);
  xe.add(lo, -1.0, Rational(1));
  xe.add(hi, 1.0, Rational(1));
  x.validate();
  xe.validate();
  return {std::move(x), std::move(xe)};
}

std::vector<StoppingInstance> stopping_sweep(int count, std::uint64_t seed, double p) {
  std::mt19937_64 rng(seed);
  const std::int64_t dens[] = {2, 3, 4, 6};
  std::vector<StoppingInstance> out;
  for (int i = 0; i < count; ++i) {
    RandomTreeOptions opt;
    opt.stages = 2 + static_cast<int>(rng() % 2);
    opt.max_children = 1 + static_cast<int>(rng() % 3);
    opt.denominator = dens[rng() % 4];
    opt.increasing = false;
    const FiniteAdaptedProcess mu = random_adapted_process(rng, opt);
    const FiniteAdaptedProcess nu = random_adapted_process(rng, opt);
    PathPayoff payoff;
    if (i % 2 == 0) {
      std::uniform_real_distribution<double> u(-1.0, 1.0);
      std::vector<double> a(static_cast<std::size_t>(opt.stages)), b(a.size());
      for (std::size_t k = 0; k < a.size(); ++k) {
        a[k] = u(rng);
        b[k] = 2.0 * u(rng);
      }
      payoff = {[a, b](int stage, std::span<const double> x) {
                  const auto k = static_cast<std::size_t>(stage - 1);
                  return a[k] * std::abs(x[k] - b[k]);
                },
                1.0, (i % 4 == 0) ? Objective::sup : Objective::inf, "separable"};
    } else {
      std::uniform_real_distribution<double> strike(-0.5, 0.5);
      payoff = builtin_payoff("asian", {{"strike", strike(rng)}, {"objective", (i % 4 == 1) ? 1.0 : 0.0}},
                              opt.stages, p);
    }
    const StabilityGap gap = stopping_stability_gap(mu, nu, payoff, p);
    out.push_back({opt.stages, payoff.name, gap.lhs, gap.rhs});
  }
  return out;
}

nlohmann::json ExperimentConfig::to_json() const {
  nlohmann::json doc{{"experiment", experiment}, {"preset", preset}, {"seed", seed},
                     {"out", out},               {"threads", threads}};
  if (steps) doc["steps"] = *steps;
  if (paths) doc["paths"] = *paths;
  if (model) doc["model"] = {{"name", *model}, {"params", model_params}};
  if (p) doc["p"] = *p;
  if (scheme) doc["scheme"] = *scheme;
  return doc;
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& doc) {
  static const std::vector<std::string> known{"experiment", "preset", "seed", "out",   "steps",
                                              "paths",      "model",  "p",    "scheme", "threads"};
  try {
    if (!doc.is_object()) fail(ErrorKind::usage, "config must be a JSON object");
    for (const auto& [key, value] : doc.items()) {
      if (std::find(known.begin(), known.end(), key) == known.end()) {
        fail(ErrorKind::usage, "unknown config field '" + key + "'");
      }
    }
    ExperimentConfig c;
    c.experiment = doc.value("experiment", std::string());
    c.preset = doc.value("preset", c.preset);
    c.seed = doc.value("seed", c.seed);
    c.out = doc.value("out", c.out);
    c.threads = doc.value("threads", c.threads);
    if (doc.contains("steps")) c.steps = doc["steps"].get<std::int64_t>();
    if (doc.contains("paths")) c.paths = doc["paths"].get<std::int64_t>();
    if (doc.contains("p")) c.p = doc["p"].get<double>();
    if (doc.contains("scheme")) c.scheme = doc["scheme"].get<std::string>();
    if (doc.contains("model")) {
      const auto& m = doc["model"];
      if (m.is_string()) {
        c.model = m.get<std::string>();
      } else {
        c.model = m.at("name").get<std::string>();
        if (m.contains("params")) c.model_params = m["params"].get<ModelParameters>();
      }
    }
    return c;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::usage, std::string("config: ") + e.what());
  }
}

std::vector<std::string> experiment_names() {
  return {"counterexamples", "fig_cir", "fig_disc", "rates", "stopping", "transform_dump"};
}

namespace {

struct Artifacts {
  fs::path dir;
  nlohmann::json list = nlohmann::json::array();

  void csv(const std::string& name, const std::string& content) {
    write_file(dir / name, content);
    const auto rows = std::count(content.begin(), content.end(), '\n') - 1;
    list.push_back({{"file", name}, {"rows", rows}});
  }
  void json(const std::string& name, const nlohmann::json& doc) {
    write_file(dir / name, doc.dump(2) + "\n");
    list.push_back({{"file", name}});
  }
};

bool paper_scale(const ExperimentConfig& c) {
  if (c.preset == "paper") return true;
  if (c.preset == "desk") return false;
  fail(ErrorKind::usage, "unknown preset '" + c.preset + "' (expected desk or paper)");
}

nlohmann::json sweep_json(const std::vector<SweepRow>& rows) {
  nlohmann::json a = nlohmann::json::array();
  for (const SweepRow& r : rows) {
    a.push_back({{"k_or_delta", r.k_or_delta}, {"estimate", r.estimate}, {"stderr", r.stderr_estimate}});
  }
  return a;
}

nlohmann::json fit_json(const RateFit& fit) {
  const auto one = [](const std::optional<SlopeFit>& f) -> nlohmann::json {
    if (!f) return nullptr;
    return {{"slope", f->slope}, {"intercept", f->intercept}, {"rms", f->rms}, {"points", f->points}};
  };
  nlohmann::json chosen = nullptr;
  if (fit.chosen()) chosen = fit.chosen()->slope;
  return {{"all", one(fit.all)}, {"trimmed", one(fit.trimmed)}, {"slope", chosen}};
}

CoefficientSpec config_model(const ExperimentConfig& c, const char* fallback) {
  return builtin_model(c.model.value_or(fallback), c.model_params);
}

nlohmann::json run_fig_disc(const ExperimentConfig& c, const ExecutionPolicy& policy, Artifacts& out) {
  const bool paper = paper_scale(c);
  const std::int64_t steps = c.steps.value_or(paper ? pow2(12) : pow2(9));
  const std::int64_t paths = c.paths.value_or(paper ? pow2(12) : pow2(10));
  const SchemeKind scheme = parse_scheme(c.scheme.value_or("em"));
  const auto rows = discontinuous_drift_sweep(steps, paths, c.seed, policy, scheme);
  out.csv("aw_estimates.csv", sweep_csv(rows));
  bool increasing = rows.front().estimate == 0.0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (!(rows[i].estimate + rows[i].stderr_estimate > rows[i - 1].estimate)) increasing = false;
  }
  return {{"steps", steps}, {"paths", paths}, {"scheme", to_string(scheme)},
          {"estimates", sweep_json(rows)}, {"zero_at_k0_and_increasing", increasing}};
}

nlohmann::json run_fig_cir(const ExperimentConfig& c, const ExecutionPolicy& policy, Artifacts& out) {
  const bool paper = paper_scale(c);
  const std::int64_t steps = c.steps.value_or(paper ? pow2(12) : pow2(9));
  const std::int64_t paths = c.paths.value_or(paper ? pow2(12) : pow2(10));
  const CirSweep s = cir_perturbation_sweep(steps, paths, c.seed, policy);
  out.csv("aw_estimates_kappa.csv", sweep_csv(s.kappa));
  out.csv("aw_estimates_eta.csv", sweep_csv(s.eta));
  out.csv("aw_estimates_gamma.csv", sweep_csv(s.gamma));
  const auto r2 = [](const std::vector<SweepRow>& rows) {
    std::vector<double> x, y;
    for (const SweepRow& r : rows) {
      x.push_back(r.k_or_delta);
      y.push_back(r.estimate);
    }
    return log_linear_r2(x, y);
  };
  return {{"steps", steps},
          {"paths", paths},
          {"scheme", "sym-em"},
          {"kappa", sweep_json(s.kappa)},
          {"eta", sweep_json(s.eta)},
          {"gamma", sweep_json(s.gamma)},
          {"log_linear_r2", {{"kappa", r2(s.kappa)}, {"eta", r2(s.eta)}, {"gamma", r2(s.gamma)}}}};
}

nlohmann::json run_rates(const ExperimentConfig& c, const ExecutionPolicy& policy, Artifacts& out) {
  const bool paper = paper_scale(c);
  const CoefficientSpec spec = config_model(c, "cubic");
  const SchemeKind scheme = parse_scheme(c.scheme.value_or("tiem-mono"));
  const double p = c.p.value_or(2.0);
  const std::int64_t ref_steps = c.steps.value_or(pow2(14));
  const std::int64_t paths = c.paths.value_or(paper ? pow2(12) : pow2(10));
  std::vector<double> hs;
  for (int k = 6; k <= 11; ++k) hs.push_back(1.0 / static_cast<double>(pow2(k)));
  const StepperConfig config = make_stepper(spec, scheme);
  const RateCurve curve =
      strong_error_curve(config, p, hs, 1.0 / static_cast<double>(ref_steps), 1.0, paths, c.seed, policy);
  out.csv("rate_curve.csv", rate_curve_csv(curve));
  const auto moments = moment_diagnostic(config, p, hs, 1.0, paths, c.seed, policy);
  out.csv("moments.csv", moments_csv(moments));
  return {{"model", spec.name},      {"scheme", to_string(scheme)}, {"p", p},
          {"h_ref", curve.h_ref},    {"paths", paths},
          {"fit_sup", fit_json(curve.fit_sup)}, {"fit_int", fit_json(curve.fit_int)}};
}

nlohmann::json run_counterexamples(const ExperimentConfig& c, Artifacts& out) {
  nlohmann::json report;
  {
    const auto [x, y] = second_order_counterexample();
    const CostFunctional cost = power_cost(2.0);
    const BicausalSolution opt = exact_bicausal_value(x, y, cost);
    const MonotoneReport first = check_stochastic_monotone(x, DominanceOrder::first);
    const MonotoneReport second = check_stochastic_monotone(x, DominanceOrder::second);
    report["second_order_dominance"] = {
        {"kr_cost", plan_cost(knothe_rosenblatt(x, y), x, y, cost)},
        {"alt_cost", plan_cost(antitone_first_plan(x, y), x, y, cost)},
        {"optimal", opt.value},
        {"optimal_plan", opt.plan.to_json(x, y)},
        {"first_order", {{"increasing", first.increasing}, {"decreasing", first.decreasing}}},
        {"second_order", {{"increasing", second.increasing}, {"decreasing", second.decreasing}}}};
  }
  nlohmann::json product = nlohmann::json::array();
  for (double eps : {0.1, 0.5}) {
    for (double p : {1.0, 2.0}) {
      const auto [x, xe] = martingale_pair(eps);
      const double v = exact_bicausal_value(x, xe, power_cost(p)).value;
      product.push_back({{"eps", eps}, {"p", p}, {"aw_pp", v},
                         {"expected", std::pow(eps, p) + std::pow(2.0, p - 1.0)}});
    }
  }
  report["product_coupling"] = product;
  {
    const double h = 1.0 / 16.0;
    const auto w = monotonicity_witness(
        [](double x) { return 1.0 + std::min(std::sqrt(std::abs(x)), 1.0); }, h, 0.0, 1.0, 1001);
    if (w) {
      report["holder_witness"] = {{"h", h},           {"z", w->z},
                                  {"z_bar", w->z_bar}, {"a_sub", w->a_sub},
                                  {"a_sup", w->a_sup}, {"cdf_z_sub", w->cdf_z_sub},
                                  {"cdf_zbar_sub", w->cdf_zbar_sub}, {"cdf_z_sup", w->cdf_z_sup},
                                  {"cdf_zbar_sup", w->cdf_zbar_sup}, {"verified", w->verified}};
    } else {
      report["holder_witness"] = "inconclusive";
    }
  }
  (void)c;
  out.json("counterexamples.json", report);
  return report;
}

nlohmann::json run_stopping(const ExperimentConfig& c, Artifacts& out) {
  const double p = c.p.value_or(2.0);
  const int count = static_cast<int>(c.paths.value_or(paper_scale(c) ? 1000 : 100));
  nlohmann::json report;
  nlohmann::json snell = nlohmann::json::array();
  for (double eps : {0.1, 0.3}) {
    const auto [x, xe] = martingale_pair(eps);
    const PathPayoff payoff = builtin_payoff("coordinate", {}, 2, p);
    const StabilityGap gap = stopping_stability_gap(x, xe, payoff, p);
    snell.push_back({{"eps", eps}, {"v", snell_value(x, payoff)}, {"v_eps", snell_value(xe, payoff)},
                     {"lhs", gap.lhs}, {"rhs", gap.rhs}});
  }
  report["martingale_pair"] = snell;
  const auto rows = stopping_sweep(count, c.seed, p);
  std::string csv = "instance,stages,payoff,lhs,rhs,holds\n";
  int violations = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const bool holds = rows[i].lhs <= rows[i].rhs + 1e-9;
    violations += holds ? 0 : 1;
    csv += join({std::to_string(i), std::to_string(rows[i].stages), rows[i].payoff,
                 format_number(rows[i].lhs), format_number(rows[i].rhs), holds ? "1" : "0"});
  }
  out.csv("stopping.csv", csv);
  report["instances"] = count;
  report["violations"] = violations;
  return report;
}

nlohmann::json run_transform_dump(const ExperimentConfig& c, Artifacts& out) {
  const CoefficientSpec spec = config_model(c, "sign_drift");
  const PiecewiseTransform t = build_transform(spec);
  const std::int64_t points = c.steps.value_or(1001);
  if (points < 2) fail(ErrorKind::usage, "transform_dump needs at least two points");
  double lo = -1.0, hi = 1.0;
  if (!t.is_identity()) {
    lo = t.breakpoints().front() - 2.0 * t.c0();
    hi = t.breakpoints().back() + 2.0 * t.c0();
  }
  std::string csv = "x,G,G_prime,G_second,G_inverse\n";
  for (std::int64_t i = 0; i < points; ++i) {
    const double x = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
    csv += join({format_number(x), format_number(t.forward(x)), format_number(t.first_derivative(x)),
                 format_number(t.second_derivative(x)), format_number(t.inverse(x))});
  }
  out.csv("transform.csv", csv);
  return {{"model", spec.name}, {"breakpoints", t.breakpoints()}, {"alphas", t.alphas()}, {"c0", t.c0()}};
}

}  // namespace

nlohmann::json run_experiment(const ExperimentConfig& config) {
  const auto names = experiment_names();
  if (std::find(names.begin(), names.end(), config.experiment) == names.end()) {
    fail(ErrorKind::usage, "unknown experiment '" + config.experiment + "'");
  }
  if (config.paths && *config.paths < 1) fail(ErrorKind::usage, "paths must be positive");
  if (config.steps && *config.steps < 1) fail(ErrorKind::usage, "steps must be positive");
  paper_scale(config);
  const auto start = std::chrono::steady_clock::now();
  ExecutionPolicy policy;
  policy.threads = config.threads;
  Artifacts out{fs::path(config.out), nlohmann::json::array()};
  fs::create_directories(out.dir);

  nlohmann::json results;
  if (config.experiment == "fig_disc") {
    results = run_fig_disc(config, policy, out);
  } else if (config.experiment == "fig_cir") {
    results = run_fig_cir(config, policy, out);
  } else if (config.experiment == "rates") {
    results = run_rates(config, policy, out);
  } else if (config.experiment == "counterexamples") {
    results = run_counterexamples(config, out);
  } else if (config.experiment == "stopping") {
    results = run_stopping(config, out);
  } else {
    results = run_transform_dump(config, out);
  }
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  nlohmann::json manifest{
      {"tool", "awsde"},
      {"version", AWSDE_VERSION},
      {"experiment", config.experiment},
      {"preset", config.preset},
      {"seed", config.seed},
      {"config", config.to_json()},
      {"versions",
       {{"awsde", AWSDE_VERSION}, {"compiler", __VERSION__}, {"openmp", _OPENMP},
        {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                              std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                              std::to_string(NLOHMANN_JSON_VERSION_PATCH)}}},
      {"threads", worker_count(policy)},
      {"wall_time_seconds", wall},
      {"artifacts", out.list},
      {"results", results}};
  write_file(out.dir / "manifest.json", manifest.dump(2) + "\n");
  return manifest;
}

}  // namespace awsde
