#include "awsde/models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include "awsde/error.hpp"

namespace awsde {

std::string_view to_string(RegularityClass c) noexcept {
  switch (c) {
    case RegularityClass::lipschitz: return "lipschitz";
    case RegularityClass::growth_disc: return "growth_disc";
    case RegularityClass::regular: return "regular";
    case RegularityClass::zvonkin: return "zvonkin";
    case RegularityClass::unclassified: return "unclassified";
  }
  return "unclassified";
}

std::string_view to_string(Verdict v) noexcept {
  switch (v) {
    case Verdict::pass: return "pass";
    case Verdict::fail: return "fail";
    case Verdict::inconclusive: return "inconclusive";
  }
  return "inconclusive";
}

double sign(double x) noexcept { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

void check_spec(const CoefficientSpec& spec) {
  if (!spec.drift || !spec.diffusion) {
    fail(ErrorKind::configuration, "model '" + spec.name + "': drift and diffusion are required");
  }
  for (std::size_t k = 1; k < spec.breakpoints.size(); ++k) {
    if (!(spec.breakpoints[k - 1] < spec.breakpoints[k])) {
      fail(ErrorKind::configuration,
           "model '" + spec.name + "': breakpoints must be strictly increasing");
    }
  }
  if (spec.regularity_class == RegularityClass::growth_disc && !spec.time_homogeneous) {
    fail(ErrorKind::configuration,
         "model '" + spec.name + "': class growth_disc requires time-homogeneous coefficients");
  }
}

const ConditionResult* AssumptionReport::find(std::string_view condition) const {
  for (const auto& r : results) {
    if (r.condition == condition) return &r;
  }
  return nullptr;
}

bool AssumptionReport::any_failed() const {
  return std::any_of(results.begin(), results.end(),
                     [](const ConditionResult& r) { return r.verdict == Verdict::fail; });
}

double probe_tolerance(double lhs, double rhs) noexcept {
  return 1e-9 * (1.0 + std::abs(lhs) + std::abs(rhs));
}

namespace {

std::vector<double> probe_points(const ProbeGrid& probe) {
  if (probe.points < 2 || !(probe.hi > probe.lo)) {
    fail(ErrorKind::configuration, "probe grid needs at least two points on a nonempty interval");
  }
  std::vector<double> xs(static_cast<std::size_t>(probe.points));
  const double dx = (probe.hi - probe.lo) / (probe.points - 1);
  for (int i = 0; i < probe.points; ++i) xs[static_cast<std::size_t>(i)] = probe.lo + i * dx;
  return xs;
}

// Index of the open interval (xi_k, xi_{k+1}) containing x, or -1 when x is
// a breakpoint.
int interval_of(const std::vector<double>& breakpoints, double x) {
  int k = 0;
  for (double xi : breakpoints) {
    if (x == xi) return -1;
    if (x > xi) ++k;
  }
  return k;
}

std::string describe(const Witness& w) {
  std::ostringstream os;
  os.precision(17);
  os << "violated at x=" << w.x << ", y=" << w.y << ": " << w.lhs << " > " << w.rhs;
  return os.str();
}

// Checks lhs(x, y) <= rhs(x, y) over all probe pairs accepted by `pair_ok`.
// Returns the first pair with the largest excess as witness.
template <class Lhs, class Rhs, class PairOk>
ConditionResult check_pairs(std::string name, const std::vector<double>& xs, Lhs lhs, Rhs rhs,
                            PairOk pair_ok) {
  std::optional<Witness> worst;
  double worst_excess = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    for (std::size_t j = i + 1; j < xs.size(); ++j) {
      if (!pair_ok(i, j)) continue;
      const double l = lhs(i, j);
      const double r = rhs(i, j);
      const double excess = l - r;
      if (excess > probe_tolerance(l, r) && (!worst || excess > worst_excess)) {
        worst = Witness{xs[i], xs[j], l, r};
        worst_excess = excess;
      }
    }
  }
  if (worst) return {std::move(name), Verdict::fail, describe(*worst), worst};
  return {std::move(name), Verdict::pass, "no violation on probe grid", std::nullopt};
}

void require(const std::optional<double>& value, const CoefficientSpec& spec, const char* what) {
  if (!value) {
    fail(ErrorKind::configuration, "model '" + spec.name + "' (class " +
                                       std::string(to_string(spec.regularity_class)) +
                                       ") needs a declared " + what);
  }
}

}  // namespace

AssumptionReport validate_assumptions(const CoefficientSpec& spec, const ProbeGrid& probe) {
  check_spec(spec);
  AssumptionReport report{spec.regularity_class, {}};
  const std::vector<double> xs = probe_points(probe);
  std::vector<double> bx(xs.size()), sx(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    bx[i] = spec.b(xs[i]);
    sx[i] = spec.sigma(xs[i]);
  }
  const auto all_pairs = [](std::size_t, std::size_t) { return true; };

  {
    ConditionResult nonneg{"diffusion_nonnegative", Verdict::pass, "sigma >= 0 on probe grid",
                           std::nullopt};
    for (std::size_t i = 0; i < xs.size(); ++i) {
      if (sx[i] < 0.0) {
        nonneg.verdict = Verdict::fail;
        nonneg.witness = Witness{xs[i], xs[i], 0.0, sx[i]};
        nonneg.detail = describe(*nonneg.witness);
        break;
      }
    }
    report.results.push_back(std::move(nonneg));
  }

  switch (spec.regularity_class) {
    case RegularityClass::growth_disc: {
      require(spec.one_sided_lipschitz_bound, spec, "one-sided Lipschitz bound L_b");
      require(spec.diffusion_lipschitz_bound, spec, "diffusion Lipschitz bound L_sigma");
      if (!spec.growth_constants) {
        fail(ErrorKind::configuration,
             "model '" + spec.name + "' (class growth_disc) needs growth constants (K_b, gamma, eta)");
      }
      const double lb = *spec.one_sided_lipschitz_bound;
      const double ls = *spec.diffusion_lipschitz_bound;
      const GrowthConstants g = *spec.growth_constants;

      {
        ConditionResult homog{"time_homogeneous", Verdict::pass, "b and sigma agree at t=0 and t=T",
                              std::nullopt};
        for (std::size_t i = 0; i < xs.size(); ++i) {
          const double db = std::abs(spec.b(xs[i], probe.horizon) - bx[i]);
          const double ds = std::abs(spec.sigma(xs[i], probe.horizon) - sx[i]);
          if (db > probe_tolerance(bx[i], 0.0) || ds > probe_tolerance(sx[i], 0.0)) {
            homog.verdict = Verdict::fail;
            homog.witness = Witness{xs[i], xs[i], std::max(db, ds), 0.0};
            homog.detail = describe(*homog.witness);
            break;
          }
        }
        report.results.push_back(std::move(homog));
      }

      std::vector<int> interval(xs.size());
      for (std::size_t i = 0; i < xs.size(); ++i) interval[i] = interval_of(spec.breakpoints, xs[i]);
      const auto same_interval = [&](std::size_t i, std::size_t j) {
        return interval[i] >= 0 && interval[i] == interval[j];
      };

      report.results.push_back(
          {"A1i_absolute_continuity", Verdict::inconclusive,
           "absolute continuity cannot be certified by sampling", std::nullopt});
      report.results.push_back(check_pairs(
          "A1ii_one_sided_lipschitz", xs,
          [&](std::size_t i, std::size_t j) { return (xs[i] - xs[j]) * (bx[i] - bx[j]); },
          [&](std::size_t i, std::size_t j) {
            const double d = xs[i] - xs[j];
            return lb * d * d;
          },
          same_interval));
      std::vector<double> ex(xs.size());
      for (std::size_t i = 0; i < xs.size(); ++i) {
        ex[i] = std::exp(g.gamma * std::pow(std::abs(xs[i]), g.eta));
      }
      report.results.push_back(check_pairs(
          "A1iii_exponential_growth", xs,
          [&](std::size_t i, std::size_t j) { return std::abs(bx[i] - bx[j]); },
          [&](std::size_t i, std::size_t j) {
            return g.k_b * (ex[i] + ex[j]) * std::abs(xs[i] - xs[j]);
          },
          same_interval));
      report.results.push_back(check_pairs(
          "A2_diffusion_lipschitz", xs,
          [&](std::size_t i, std::size_t j) { return std::abs(sx[i] - sx[j]); },
          [&](std::size_t i, std::size_t j) { return ls * std::abs(xs[i] - xs[j]); }, all_pairs));

      ConditionResult a3{"A3_nondegenerate_at_breakpoints", Verdict::pass,
                         "sigma(xi_k) != 0 at every breakpoint", std::nullopt};
      for (double xi : spec.breakpoints) {
        const double s = spec.sigma(xi);
        if (s == 0.0) {
          a3.verdict = Verdict::fail;
          a3.witness = Witness{xi, xi, 0.0, s};
          std::ostringstream os;
          os.precision(17);
          os << "sigma(" << xi << ") = 0";
          a3.detail = os.str();
          break;
        }
      }
      report.results.push_back(std::move(a3));
      break;
    }
    case RegularityClass::lipschitz: {
      require(spec.one_sided_lipschitz_bound, spec, "drift Lipschitz bound L_b");
      require(spec.diffusion_lipschitz_bound, spec, "diffusion Lipschitz bound L_sigma");
      const double lb = *spec.one_sided_lipschitz_bound;
      const double ls = *spec.diffusion_lipschitz_bound;
      report.results.push_back(check_pairs(
          "drift_lipschitz", xs,
          [&](std::size_t i, std::size_t j) { return std::abs(bx[i] - bx[j]); },
          [&](std::size_t i, std::size_t j) { return lb * std::abs(xs[i] - xs[j]); }, all_pairs));
      report.results.push_back(check_pairs(
          "diffusion_lipschitz", xs,
          [&](std::size_t i, std::size_t j) { return std::abs(sx[i] - sx[j]); },
          [&](std::size_t i, std::size_t j) { return ls * std::abs(xs[i] - xs[j]); }, all_pairs));
      break;
    }
    case RegularityClass::regular: {
      double growth = 0.0;
      bool finite = true;
      for (std::size_t i = 0; i < xs.size(); ++i) {
        if (!std::isfinite(bx[i]) || !std::isfinite(sx[i])) finite = false;
        growth = std::max(growth, (std::abs(bx[i]) + std::abs(sx[i])) / (1.0 + std::abs(xs[i])));
      }
      std::ostringstream os;
      os << "observed (|b|+|sigma|)/(1+|x|) <= " << growth << " on probe grid";
      report.results.push_back({"linear_growth", finite ? Verdict::pass : Verdict::fail, os.str(),
                                std::nullopt});
      report.results.push_back({"continuity", Verdict::inconclusive,
                                "continuity cannot be certified by sampling", std::nullopt});
      report.results.push_back({"pathwise_uniqueness", Verdict::inconclusive,
                                "pathwise uniqueness is not checkable numerically", std::nullopt});
      break;
    }
    case RegularityClass::zvonkin: {
      double bmax = 0.0, smax = 0.0, s2min = std::numeric_limits<double>::infinity();
      std::size_t argmin = 0;
      for (std::size_t i = 0; i < xs.size(); ++i) {
        bmax = std::max(bmax, std::abs(bx[i]));
        smax = std::max(smax, std::abs(sx[i]));
        if (sx[i] * sx[i] < s2min) {
          s2min = sx[i] * sx[i];
          argmin = i;
        }
      }
      std::ostringstream ob, os, on;
      ob << "sup |b| = " << bmax << " on probe grid";
      os << "sup |sigma| = " << smax << " on probe grid";
      on << "inf sigma^2 = " << s2min << " on probe grid";
      report.results.push_back({"drift_bounded", std::isfinite(bmax) ? Verdict::pass : Verdict::fail,
                                ob.str(), std::nullopt});
      report.results.push_back({"diffusion_bounded",
                                std::isfinite(smax) ? Verdict::pass : Verdict::fail, os.str(),
                                std::nullopt});
      ConditionResult nd{"diffusion_nondegenerate", s2min > 0.0 ? Verdict::pass : Verdict::fail,
                         on.str(), std::nullopt};
      if (nd.verdict == Verdict::fail) nd.witness = Witness{xs[argmin], xs[argmin], 0.0, s2min};
      report.results.push_back(std::move(nd));
      report.results.push_back({"diffusion_holder", Verdict::inconclusive,
                                "Hoelder regularity cannot be certified by sampling", std::nullopt});
      break;
    }
    case RegularityClass::unclassified:
      report.results.push_back({"class", Verdict::inconclusive,
                                "no regularity class declared", std::nullopt});
      break;
  }
  return report;
}

namespace {

double param(const ModelParameters& params, const std::string& key, double fallback) {
  const auto it = params.find(key);
  return it == params.end() ? fallback : it->second;
}

void reject_unknown(std::string_view model, const ModelParameters& params,
                    std::initializer_list<const char*> allowed) {
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, value] : params) {
    if (!ok.count(key)) {
      fail(ErrorKind::configuration,
           "model '" + std::string(model) + "' has no parameter '" + key + "'");
    }
  }
}

}  // namespace

std::vector<std::string> builtin_model_names() {
  return {"brownian", "cir", "cubic", "perturbed_sign", "sign_drift", "sign_sin_holder"};
}

CoefficientSpec builtin_model(std::string_view name, const ModelParameters& params) {
  CoefficientSpec spec;
  spec.name = std::string(name);

  if (name == "cubic") {
    // dX = -X^3 dt + dW
    reject_unknown(name, params, {"x0"});
    spec.drift = [](double, double x) { return -x * x * x; };
    spec.diffusion = [](double, double) { return 1.0; };
    spec.initial_value = param(params, "x0", 1.0);
    spec.regularity_class = RegularityClass::growth_disc;
    spec.one_sided_lipschitz_bound = 0.0;
    spec.diffusion_lipschitz_bound = 0.0;
    // |x^3 - y^3| <= 1.5 (x^2 + y^2) |x - y| <= 1.5 (e^{x^2} + e^{y^2}) |x - y|
    spec.growth_constants = GrowthConstants{1.5, 1.0, 2.0};
    spec.transformed_drift_bound = 0.0;
    spec.transformed_diffusion_bound = 0.0;
  } else if (name == "sign_drift") {
    // dX = (1/2 - 2 sign(X - 1)) dt + |X| dW, optionally with sigma = 1.
    reject_unknown(name, params, {"x0", "additive"});
    const bool additive = param(params, "additive", 0.0) != 0.0;
    spec.drift = [](double, double x) { return 0.5 - 2.0 * sign(x - 1.0); };
    if (additive) {
      spec.diffusion = [](double, double) { return 1.0; };
    } else {
      spec.diffusion = [](double, double x) { return std::abs(x); };
    }
    spec.initial_value = param(params, "x0", 1.0);
    spec.breakpoints = {1.0};
    spec.regularity_class = RegularityClass::growth_disc;
    spec.one_sided_lipschitz_bound = 0.0;
    spec.diffusion_lipschitz_bound = additive ? 0.0 : 1.0;
    spec.growth_constants = GrowthConstants{1.0, 1.0, 1.0};
    // Sampled sup over the bump (c0 = 1/24): 477.2 / 5.47 (|x| noise),
    // 448.0 / 4.54 (additive noise).
    spec.transformed_drift_bound = additive ? 470.0 : 500.0;
    spec.transformed_diffusion_bound = additive ? 4.8 : 5.75;
    if (additive) spec.name = "sign_drift_additive";
  } else if (name == "brownian") {
    reject_unknown(name, params, {"x0"});
    spec.drift = [](double, double) { return 0.0; };
    spec.diffusion = [](double, double) { return 1.0; };
    spec.initial_value = param(params, "x0", 0.0);
    spec.regularity_class = RegularityClass::lipschitz;
    spec.one_sided_lipschitz_bound = 0.0;
    spec.diffusion_lipschitz_bound = 0.0;
    spec.transformed_drift_bound = 0.0;
    spec.transformed_diffusion_bound = 0.0;
  } else if (name == "perturbed_sign") {
    // dX = (k/10) sign(X) dt + dW
    reject_unknown(name, params, {"x0", "k"});
    const double k = param(params, "k", 1.0);
    const double scale = k / 10.0;
    spec.drift = [scale](double, double x) { return scale * sign(x); };
    spec.diffusion = [](double, double) { return 1.0; };
    spec.initial_value = param(params, "x0", 0.0);
    spec.regularity_class = RegularityClass::growth_disc;
    spec.one_sided_lipschitz_bound = 0.0;
    spec.diffusion_lipschitz_bound = 0.0;
    spec.growth_constants = GrowthConstants{1.0, 1.0, 1.0};
    if (k != 0.0) {
      spec.breakpoints = {0.0};
      // alpha = -k/10 and c0 = 5/(6|k|) make G' independent of k, so the
      // transformed bounds scale exactly as k^2 and |k| (sampled 2.880, 0.2256).
      spec.transformed_drift_bound = 3.0 * k * k;
      spec.transformed_diffusion_bound = 0.24 * std::abs(k);
    } else {
      spec.transformed_drift_bound = 0.0;
      spec.transformed_diffusion_bound = 0.0;
    }
  } else if (name == "cir") {
    // dX = kappa (eta - X) dt + gamma sqrt(X) dW
    reject_unknown(name, params, {"x0", "kappa", "eta", "gamma"});
    const CirParameters cir{param(params, "kappa", 1.0), param(params, "eta", 1.0),
                            param(params, "gamma", 1.0)};
    if (!(cir.eta >= 0.0) || !(cir.gamma > 0.0)) {
      fail(ErrorKind::configuration, "cir: need eta >= 0 and gamma > 0");
    }
    spec.drift = [cir](double, double x) { return cir.kappa * (cir.eta - x); };
    spec.diffusion = [cir](double, double x) { return cir.gamma * std::sqrt(std::max(x, 0.0)); };
    spec.initial_value = param(params, "x0", 1.0);
    if (!(spec.initial_value > 0.0)) fail(ErrorKind::configuration, "cir: x0 must be positive");
    spec.regularity_class = RegularityClass::regular;
    spec.one_sided_lipschitz_bound = std::max(0.0, -cir.kappa);
    spec.cir = cir;
    if (!cir.feller()) {
      spec.warnings.push_back(
          "Feller condition 2*kappa*eta >= gamma^2 fails; the symmetrised scheme's rate 1/2 is "
          "not guaranteed");
    }
  } else if (name == "sign_sin_holder") {
    // dX = sign(sin X) dt + (1 + sqrt|X| 1{|X|<=4} + 2 1{|X|>4}) dW
    reject_unknown(name, params, {"x0"});
    spec.drift = [](double, double x) { return sign(std::sin(x)); };
    spec.diffusion = [](double, double x) {
      const double a = std::abs(x);
      return a <= 4.0 ? 1.0 + std::sqrt(a) : 3.0;
    };
    spec.initial_value = param(params, "x0", 1.0);
    spec.regularity_class = RegularityClass::zvonkin;
  } else {
    fail(ErrorKind::configuration, "unknown model '" + std::string(name) + "'");
  }
  check_spec(spec);
  return spec;
}

}  // namespace awsde
