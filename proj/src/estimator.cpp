#include "awsde/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "awsde/error.hpp"

namespace awsde {

namespace {

double pow_abs(double d, double p) {
  d = std::abs(d);
  if (p == 2.0) return d * d;
  if (p == 1.0) return d;
  return std::pow(d, p);
}

// Running mean and variance (Welford), updated in path order.
struct Moments {
  std::int64_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) {
    ++n;
    if (std::isinf(x) || std::isinf(mean)) {
      // A blown-up sample makes the mean infinite; keep it that way instead of NaN.
      mean = m2 = std::numeric_limits<double>::infinity();
      return;
    }
    const double d = x - mean;
    mean += d / static_cast<double>(n);
    m2 += d * (x - mean);
  }
  double stderr_mean() const {
    if (n < 2) return 0.0;
    return std::sqrt(m2 / static_cast<double>(n - 1) / static_cast<double>(n));
  }
};

// Standard error of m^{1/p} from that of m (delta method).
double root_stderr(double mean, double se, double p) {
  if (!(mean > 0.0)) return 0.0;
  return se * std::pow(mean, 1.0 / p - 1.0) / p;
}

std::int64_t exact_ratio(double num, double den, const char* what) {
  const double r = num / den;
  const double k = std::round(r);
  if (!(k >= 1.0) || std::abs(r - k) > 1e-9 * k) {
    std::ostringstream os;
    os.precision(17);
    os << what << ": " << num << " is not an integer multiple of " << den;
    fail(ErrorKind::configuration, os.str());
  }
  return static_cast<std::int64_t>(k);
}

bool certified(const CoefficientSpec& spec) {
  return spec.regularity_class != RegularityClass::unclassified;
}

}  // namespace

PathCost power_path_cost(double p) {
  if (!(p >= 1.0)) fail(ErrorKind::configuration, "power cost needs p >= 1");
  return [p](double, double x, double y) { return pow_abs(x - y, p); };
}

double synchronous_path_value(const StepperConfig& mu, const StepperConfig& nu,
                              const PathCost& cost, const TimeGrid& grid, std::uint64_t seed,
                              std::int64_t path_index) {
  const auto n = static_cast<std::size_t>(grid.steps());
  std::vector<double> dw(n), x(n + 1), y(n + 1);
  fill_increments(grid, seed, path_index, dw);
  simulate_into(mu, grid, dw, x);
  simulate_into(nu, grid, dw, y);
  double sum = 0.0;
  for (std::size_t j = 0; j <= n; ++j) sum += cost(grid.time(static_cast<std::int64_t>(j)), x[j], y[j]);
  return grid.horizon() / static_cast<double>(n + 1) * sum;
}

EstimateResult estimate_vc(const StepperConfig& mu, const StepperConfig& nu, const PathCost& cost,
                           const TimeGrid& grid, std::int64_t paths, std::uint64_t seed,
                           const ExecutionPolicy& policy) {
  if (paths < 1) fail(ErrorKind::configuration, "estimator needs at least one path");
  check_step_size(mu, grid.step());
  check_step_size(nu, grid.step());
  EstimateResult result{0.0, 0.0, paths, grid, seed, std::string(to_string(mu.kind)),
                        std::string(to_string(nu.kind)), certified(mu.spec) && certified(nu.spec),
                        {}, std::nullopt};
  for (const auto* s : {&mu.spec, &nu.spec}) {
    for (const auto& w : s->warnings) result.warnings.push_back(s->name + ": " + w);
  }
  if (!result.optimality_certified) {
    result.warnings.push_back(
        "optimality not certified: a model has no regularity class covering the synchronous "
        "coupling");
  }
  Moments acc;
  for_each_path<double>(
      paths, policy,
      [&](std::int64_t i, double& out) {
        out = synchronous_path_value(mu, nu, cost, grid, seed, i);
      },
      [&](std::int64_t, double v) { acc.add(v); });
  result.estimate = acc.mean;
  result.stderr_estimate = acc.stderr_mean();
  return result;
}

EstimateResult estimate_aw(const StepperConfig& mu, const StepperConfig& nu, double p,
                           const TimeGrid& grid, std::int64_t paths, std::uint64_t seed,
                           const ExecutionPolicy& policy) {
  EstimateResult r = estimate_vc(mu, nu, power_path_cost(p), grid, paths, seed, policy);
  r.aw = std::pow(std::max(r.estimate, 0.0), 1.0 / p);
  return r;
}

std::optional<SlopeFit> fit_slope(const std::vector<double>& h, const std::vector<double>& err) {
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < h.size() && i < err.size(); ++i) {
    if (err[i] > 0.0 && std::isfinite(err[i]) && h[i] > 0.0) {
      lx.push_back(std::log(h[i]));
      ly.push_back(std::log(err[i]));
    }
  }
  if (lx.size() < 2) return std::nullopt;
  const double n = static_cast<double>(lx.size());
  const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / n;
  const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  if (sxx == 0.0) return std::nullopt;
  const double slope = sxy / sxx;
  const double intercept = my - slope * mx;
  double ss = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    const double r = ly[i] - (intercept + slope * lx[i]);
    ss += r * r;
  }
  return SlopeFit{slope, intercept, std::sqrt(ss / n), lx.size()};
}

RateFit fit_rate(const std::vector<double>& h, const std::vector<double>& err) {
  RateFit fit{fit_slope(h, err), std::nullopt};
  if (!fit.all || h.size() < 4) return fit;
  const auto largest = static_cast<std::size_t>(std::max_element(h.begin(), h.end()) - h.begin());
  if (!(err[largest] > 0.0) || !std::isfinite(err[largest])) return fit;
  // Judge the largest h against a fit of the other points: in a joint fit its
  // own leverage would hide the outlier.
  std::vector<double> h2, e2;
  for (std::size_t i = 0; i < h.size(); ++i) {
    if (i == largest) continue;
    h2.push_back(h[i]);
    e2.push_back(err[i]);
  }
  const auto rest = fit_slope(h2, e2);
  if (!rest || rest->points < 3) return fit;
  const double resid =
      std::abs(std::log(err[largest]) - (rest->intercept + rest->slope * std::log(h[largest])));
  if (resid > std::max(3.0 * rest->rms, 1e-12)) fit.trimmed = rest;
  return fit;
}

RateCurve strong_error_curve(const StepperConfig& config, double p, std::vector<double> h_list,
                             double h_ref, double horizon, std::int64_t paths, std::uint64_t seed,
                             const ExecutionPolicy& policy) {
  if (!(p >= 1.0)) fail(ErrorKind::configuration, "strong error needs p >= 1");
  if (h_list.empty()) fail(ErrorKind::configuration, "strong error needs at least one step size");
  if (paths < 1) fail(ErrorKind::configuration, "strong error needs at least one path");
  std::sort(h_list.begin(), h_list.end(), std::greater<>());
  if (std::adjacent_find(h_list.begin(), h_list.end()) != h_list.end()) {
    fail(ErrorKind::configuration, "strong error: step sizes must be distinct");
  }
  const TimeGrid fine(horizon, exact_ratio(horizon, h_ref, "reference grid"));
  std::vector<std::int64_t> factors{1};
  std::vector<std::size_t> offset;  // start of each h's block in the sup accumulators
  std::size_t total = 0;
  for (double h : h_list) {
    const std::int64_t f = exact_ratio(h, h_ref, "step size");
    if (f == 1) fail(ErrorKind::configuration, "strong error: h must be coarser than h_ref");
    factors.push_back(f);
    offset.push_back(total);
    total += static_cast<std::size_t>(fine.coarsen(f).steps()) + 1;
  }
  check_step_size(config, h_ref);
  for (double h : h_list) check_step_size(config, h);

  struct PathErrors {
    std::vector<double> sup_terms;
    std::vector<double> int_terms;
  };
  std::vector<Moments> sup_acc(total), int_acc(h_list.size());
  for_each_path<PathErrors>(
      paths, policy,
      [&](std::int64_t path, PathErrors& out) {
        const auto sims = simulate_coupled(config, fine, factors, seed, path);
        const std::vector<double>& ref = sims.at(1).values;
        out.sup_terms.assign(total, 0.0);
        out.int_terms.assign(h_list.size(), 0.0);
        for (std::size_t i = 0; i < h_list.size(); ++i) {
          const std::int64_t f = factors[i + 1];
          const std::vector<double>& x = sims.at(f).values;
          double integral = 0.0;
          for (std::size_t k = 0; k < x.size(); ++k) {
            out.sup_terms[offset[i] + k] = pow_abs(ref[k * static_cast<std::size_t>(f)] - x[k], p);
            if (k + 1 == x.size()) break;
            for (std::int64_t j = 0; j < f; ++j) {
              integral += pow_abs(ref[k * static_cast<std::size_t>(f) + static_cast<std::size_t>(j)] - x[k], p);
            }
          }
          out.int_terms[i] = h_ref * integral;
        }
      },
      [&](std::int64_t, const PathErrors& e) {
        for (std::size_t j = 0; j < total; ++j) sup_acc[j].add(e.sup_terms[j]);
        for (std::size_t i = 0; i < h_list.size(); ++i) int_acc[i].add(e.int_terms[i]);
      });

  RateCurve curve{p, h_ref, paths, {}, {}, {}};
  std::vector<double> hs, esup, eint;
  for (std::size_t i = 0; i < h_list.size(); ++i) {
    const std::size_t end = i + 1 < h_list.size() ? offset[i + 1] : total;
    std::size_t best = offset[i];
    for (std::size_t j = offset[i]; j < end; ++j) {
      if (!(sup_acc[j].mean <= sup_acc[best].mean)) best = j;
    }
    const double msup = sup_acc[best].mean;
    const double mint = int_acc[i].mean;
    curve.points.push_back({h_list[i], std::pow(msup, 1.0 / p), std::pow(mint, 1.0 / p),
                            root_stderr(msup, sup_acc[best].stderr_mean(), p),
                            root_stderr(mint, int_acc[i].stderr_mean(), p)});
    hs.push_back(h_list[i]);
    esup.push_back(curve.points.back().err_sup);
    eint.push_back(curve.points.back().err_int);
  }
  curve.fit_sup = fit_rate(hs, esup);
  curve.fit_int = fit_rate(hs, eint);
  return curve;
}

std::vector<MomentRow> moment_diagnostic(const StepperConfig& config, double p,
                                         std::vector<double> h_list, double horizon,
                                         std::int64_t paths, std::uint64_t seed,
                                         const ExecutionPolicy& policy) {
  if (h_list.empty()) fail(ErrorKind::configuration, "moment diagnostic needs a step size");
  if (paths < 1) fail(ErrorKind::configuration, "moment diagnostic needs at least one path");
  std::sort(h_list.begin(), h_list.end(), std::greater<>());
  const double h_min = h_list.back();
  const TimeGrid fine(horizon, exact_ratio(horizon, h_min, "finest grid"));
  std::vector<std::int64_t> factors;
  for (double h : h_list) {
    factors.push_back(exact_ratio(h, h_min, "step size"));
    check_step_size(config, h);
  }
  std::vector<Moments> acc(h_list.size()), terminal(h_list.size());
  const std::size_t n = h_list.size();
  for_each_path<std::vector<double>>(
      paths, policy,
      [&](std::int64_t path, std::vector<double>& out) {
        const auto sims = simulate_coupled(config, fine, factors, seed, path);
        out.assign(2 * n, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
          const auto& values = sims.at(factors[i]).values;
          double m = 0.0;
          for (double v : values) {
            const double a = pow_abs(v, p);
            // NaN marks a blown-up path; keep it visible as infinity.
            m = std::isnan(a) ? std::numeric_limits<double>::infinity() : std::max(m, a);
          }
          out[i] = m;
          const double last = pow_abs(values.back(), p);
          out[n + i] = std::isnan(last) ? std::numeric_limits<double>::infinity() : last;
        }
      },
      [&](std::int64_t, const std::vector<double>& v) {
        for (std::size_t i = 0; i < n; ++i) {
          acc[i].add(v[i]);
          terminal[i].add(v[n + i]);
        }
      });
  std::vector<MomentRow> rows;
  for (std::size_t i = 0; i < h_list.size(); ++i) {
    rows.push_back({h_list[i], p, acc[i].mean, acc[i].stderr_mean(), terminal[i].mean});
  }
  return rows;
}

double clipped_increment_cdf(double s, double h) {
  const double a = truncation_level(h).a_h;
  if (s < -a) return 0.0;
  if (s >= a) return 1.0;
  return 0.5 * std::erfc(-s / std::sqrt(2.0 * h));
}

std::optional<MonotonicityWitness> monotonicity_witness(const std::function<double(double)>& sigma,
                                                        double h, double lo, double hi,
                                                        int points) {
  if (points < 2 || !(hi > lo)) {
    fail(ErrorKind::configuration, "monotonicity witness needs a nonempty search grid");
  }
  const double a = truncation_level(h).a_h;
  std::vector<double> xs(static_cast<std::size_t>(points)), s(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    xs[i] = lo + (hi - lo) * static_cast<double>(i) / (points - 1);
    s[i] = sigma(xs[i]);
    if (!(s[i] > 0.0) || !std::isfinite(s[i])) {
      fail(ErrorKind::domain, "monotonicity witness needs sigma bounded away from zero");
    }
  }
  // Pick the pair with the largest margin so that both crossings are well
  // separated from rounding noise.
  std::size_t bi = 0, bj = 0;
  double margin = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    for (std::size_t j = i + 1; j < xs.size(); ++j) {
      const double m = std::abs(s[j] - s[i]) - (xs[j] - xs[i]) / a;
      if (m > margin) {
        margin = m;
        bi = i;
        bj = j;
      }
    }
  }
  if (!(margin > 0.0)) return std::nullopt;
  const double z = xs[bi], zb = xs[bj], sz = s[bi], szb = s[bj];
  double a_sub, a_sup;
  if (szb >= sz) {
    // zb - A sigma(zb) < z - A sigma(z): Y has no mass left of the gap.
    const double left = zb - a * szb, right = z - a * sz;
    a_sup = left + 0.95 * (right - left);
    a_sub = z + a * sz;
  } else {
    const double left = zb + a * szb, right = z + a * sz;
    a_sup = left + 0.05 * (right - left);
    const double lower = z - a * sz, upper = zb - a * szb;
    a_sub = lower + 0.05 * (upper - lower);
  }
  const auto cdf = [&](double at, double from, double sig) {
    return clipped_increment_cdf((at - from) / sig, h);
  };
  MonotonicityWitness w{z, zb, a_sub, a_sup, cdf(a_sub, z, sz), cdf(a_sub, zb, szb),
                        cdf(a_sup, z, sz), cdf(a_sup, zb, szb), false};
  const double d_sub = w.cdf_z_sub - w.cdf_zbar_sub;
  const double d_sup = w.cdf_z_sup - w.cdf_zbar_sup;
  w.verified = (d_sub > 0.0 && d_sup < 0.0) || (d_sub < 0.0 && d_sup > 0.0);
  return w;
}

}  // namespace awsde
