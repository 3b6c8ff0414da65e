#include "awsde/schemes.hpp"

#include <boost/math/tools/roots.hpp>
#include <cmath>
#include <limits>
#include <sstream>

#include "awsde/error.hpp"

namespace awsde {

std::string_view to_string(SchemeKind kind) noexcept {
  switch (kind) {
    case SchemeKind::em: return "em";
    case SchemeKind::iem: return "iem";
    case SchemeKind::tiem: return "tiem";
    case SchemeKind::tiem_mono: return "tiem-mono";
    case SchemeKind::sym_em: return "sym-em";
  }
  return "em";
}

SchemeKind parse_scheme(std::string_view name) {
  for (SchemeKind k : {SchemeKind::em, SchemeKind::iem, SchemeKind::tiem, SchemeKind::tiem_mono,
                       SchemeKind::sym_em}) {
    if (to_string(k) == name) return k;
  }
  fail(ErrorKind::configuration,
       "unknown scheme '" + std::string(name) + "' (expected em, iem, tiem, tiem-mono, sym-em)");
}

StepperConfig make_stepper(const CoefficientSpec& spec, SchemeKind kind) {
  check_spec(spec);
  StepperConfig config{kind, spec, std::nullopt, 0.0, 0.0};
  switch (kind) {
    case SchemeKind::em:
      break;
    case SchemeKind::iem:
      if (!spec.one_sided_lipschitz_bound) {
        fail(ErrorKind::configuration, "scheme iem on model '" + spec.name +
                                           "' needs a declared one-sided Lipschitz bound L_b");
      }
      config.drift_bound = *spec.one_sided_lipschitz_bound;
      break;
    case SchemeKind::tiem:
    case SchemeKind::tiem_mono: {
      if (!spec.time_homogeneous) {
        fail(ErrorKind::configuration,
             "transformed schemes need time-homogeneous coefficients (model '" + spec.name + "')");
      }
      config.tcoeffs.emplace(transformed_coefficients(spec, build_transform(spec)));
      config.drift_bound = config.tcoeffs->drift_bound();
      config.diffusion_bound = config.tcoeffs->diffusion_bound();
      if (kind == SchemeKind::tiem_mono && !std::isfinite(config.diffusion_bound)) {
        fail(ErrorKind::configuration, "scheme tiem-mono on model '" + spec.name +
                                           "' needs a declared bound L_sigma~");
      }
      break;
    }
    case SchemeKind::sym_em:
      if (!spec.cir) {
        fail(ErrorKind::configuration,
             "scheme sym-em is restricted to the CIR family (model '" + spec.name + "')");
      }
      break;
  }
  return config;
}

namespace {

std::string step_guard_violation(const StepperConfig& config, double h) {
  std::ostringstream os;
  os.precision(17);
  const bool implicit = config.kind == SchemeKind::iem || config.kind == SchemeKind::tiem ||
                        config.kind == SchemeKind::tiem_mono;
  if (implicit && config.drift_bound > 0.0 && !(h * config.drift_bound < 1.0)) {
    os << "step size h = " << h << " violates h < 1/L = " << 1.0 / config.drift_bound
       << " (L = " << config.drift_bound << ", scheme " << to_string(config.kind) << ", model '"
       << config.spec.name << "')";
    return os.str();
  }
  if (config.kind == SchemeKind::tiem_mono) {
    const double a_h = truncation_level(h).a_h;
    if (!(1.0 - config.diffusion_bound * a_h > 0.0)) {
      os << "step size h = " << h << " violates 1 - L_sigma~ * a_h > 0 (L_sigma~ = "
         << config.diffusion_bound << ", a_h = " << a_h << ", model '" << config.spec.name
         << "')";
      return os.str();
    }
  }
  return {};
}

}  // namespace

bool step_size_admissible(const StepperConfig& config, double h) {
  return step_guard_violation(config, h).empty();
}

void check_step_size(const StepperConfig& config, double h) {
  const std::string msg = step_guard_violation(config, h);
  if (!msg.empty()) fail(ErrorKind::step_size, msg);
}

double em_step(double x, double t, const CoefficientSpec& spec, double h, double dw) {
  return x + spec.b(x, t) * h + spec.sigma(x, t) * dw;
}

double implicit_solve(double y, const std::function<double(double)>& drift, double h,
                      double lipschitz_bound) {
  if (lipschitz_bound > 0.0 && !(h * lipschitz_bound < 1.0)) {
    std::ostringstream os;
    os.precision(17);
    os << "implicit step: h = " << h << " violates h < 1/L = " << 1.0 / lipschitz_bound;
    fail(ErrorKind::step_size, os.str());
  }
  if (!std::isfinite(y)) fail(ErrorKind::numerical, "implicit step: non-finite right-hand side");
  const auto f = [&](double z) { return z - h * drift(z) - y; };
  const double fy = f(y);
  if (fy == 0.0) return y;

  const double spread = std::abs(h * drift(y)) + 1.0;
  double lo = y - spread;
  double hi = y + spread;
  double flo = f(lo);
  double fhi = f(hi);
  double width = spread;
  for (int i = 0; i < 200 && !(flo <= 0.0 && fhi >= 0.0); ++i) {
    width *= 2.0;
    if (flo > 0.0) {
      lo = y - width;
      flo = f(lo);
    }
    if (fhi < 0.0) {
      hi = y + width;
      fhi = f(hi);
    }
  }
  if (!(flo <= 0.0 && fhi >= 0.0)) {
    std::ostringstream os;
    os.precision(17);
    os << "implicit step: no bracketing interval found around y = " << y;
    fail(ErrorKind::numerical, os.str());
  }
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;

  const auto tol = [](double a, double b) {
    return std::abs(b - a) <= 4.0 * std::numeric_limits<double>::epsilon() *
                                  std::max(1.0, std::min(std::abs(a), std::abs(b)));
  };
  std::uintmax_t iters = 200;
  const auto [a, b] = boost::math::tools::toms748_solve(f, lo, hi, flo, fhi, tol, iters);
  const double fa = f(a);
  const double fb = f(b);
  const double z = std::abs(fa) <= std::abs(fb) ? a : b;
  if (!std::isfinite(z)) fail(ErrorKind::numerical, "implicit step: root finder diverged");
  return z;
}

double semi_implicit_em_step(double x, double t, const CoefficientSpec& spec, double h, double dw,
                             double lipschitz_bound) {
  const double y = x + spec.sigma(x, t) * dw;
  return implicit_solve(y, [&](double z) { return spec.b(z, t); }, h, lipschitz_bound);
}

double transformed_step(double x, const TransformedCoefficients& tc, double h, double dw) {
  const PiecewiseTransform& g = tc.transform();
  const double z = g.forward(x);
  // sigma~(G(x)) = sigma(x) G'(x); evaluating at x avoids a round trip through G^-1.
  const double y = z + tc.diffusion_at_preimage(x) * dw;
  const double w = implicit_solve(y, [&](double v) { return tc.drift(v); }, h, tc.drift_bound());
  return g.inverse(w);
}

double symmetrised_em_step(double x, const CirParameters& cir, double h, double dw) {
  if (x < 0.0) fail(ErrorKind::domain, "symmetrised step needs x >= 0");
  return std::abs(x + cir.kappa * (cir.eta - x) * h + cir.gamma * std::sqrt(x) * dw);
}

double scheme_step(const StepperConfig& config, double x, double t, double h, double dw) {
  switch (config.kind) {
    case SchemeKind::em: return em_step(x, t, config.spec, h, dw);
    case SchemeKind::iem:
      return semi_implicit_em_step(x, t, config.spec, h, dw, config.drift_bound);
    case SchemeKind::tiem:
    case SchemeKind::tiem_mono: return transformed_step(x, *config.tcoeffs, h, dw);
    case SchemeKind::sym_em: return symmetrised_em_step(x, *config.spec.cir, h, dw);
  }
  return x;
}

void simulate_into(const StepperConfig& config, const TimeGrid& grid, std::span<const double> dw,
                   std::span<double> out) {
  const double h = grid.step();
  const TruncationLevel level =
      config.truncated() ? truncation_level(h) : TruncationLevel{std::numeric_limits<double>::infinity()};
  out[0] = config.spec.initial_value;
  for (std::size_t k = 0; k < dw.size(); ++k) {
    const double inc = config.truncated() ? truncate_increment(dw[k], level) : dw[k];
    try {
      out[k + 1] = scheme_step(config, out[k], grid.time(static_cast<std::int64_t>(k)), h, inc);
    } catch (const Error& e) {
      fail(e.kind(), "step " + std::to_string(k) + ": " + e.what());
    }
  }
}

DiscretePath simulate_path(const StepperConfig& config, const IncrementBatch& increments) {
  check_step_size(config, increments.grid.step());
  DiscretePath path{increments.grid, std::vector<double>(increments.values.size() + 1), config.kind,
                    increments.path_index};
  // Clipping is idempotent, so pre-truncated batches pass through unchanged.
  simulate_into(config, increments.grid, increments.values, path.values);
  return path;
}

void coarsen_increments(std::span<const double> fine, std::int64_t factor, std::span<double> out) {
  const std::size_t f = static_cast<std::size_t>(factor);
  for (std::size_t k = 0; k < out.size(); ++k) {
    double s = 0.0;
    for (std::size_t j = 0; j < f; ++j) s += fine[k * f + j];
    out[k] = s;
  }
}

std::map<std::int64_t, DiscretePath> simulate_coupled(const StepperConfig& config,
                                                      const TimeGrid& fine_grid,
                                                      const std::vector<std::int64_t>& factors,
                                                      std::uint64_t seed,
                                                      std::int64_t path_index) {
  std::vector<TimeGrid> grids;
  for (std::int64_t f : factors) {
    grids.push_back(fine_grid.coarsen(f));
    check_step_size(config, grids.back().step());
  }
  std::vector<double> fine(static_cast<std::size_t>(fine_grid.steps()));
  fill_increments(fine_grid, seed, path_index, fine);
  std::map<std::int64_t, DiscretePath> out;
  for (std::size_t i = 0; i < factors.size(); ++i) {
    const TimeGrid& g = grids[i];
    std::vector<double> dw(static_cast<std::size_t>(g.steps()));
    coarsen_increments(fine, factors[i], dw);
    DiscretePath path{g, std::vector<double>(dw.size() + 1), config.kind, path_index};
    simulate_into(config, g, dw, path.values);
    out.emplace(factors[i], std::move(path));
  }
  return out;
}

}  // namespace awsde
