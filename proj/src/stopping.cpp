#include "awsde/stopping.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "awsde/bicausal.hpp"
#include "awsde/error.hpp"

namespace awsde {

PathPayoff builtin_payoff(std::string_view name, const ModelParameters& params, int stages,
                          double p) {
  const auto get = [&](const char* key, double fallback) {
    const auto it = params.find(key);
    return it == params.end() ? fallback : it->second;
  };
  const Objective objective = get("objective", 1.0) != 0.0 ? Objective::sup : Objective::inf;
  if (name == "coordinate") {
    return {[](int stage, std::span<const double> x) { return x[static_cast<std::size_t>(stage - 1)]; },
            1.0, objective, "coordinate"};
  }
  if (name == "asian") {
    if (!(p >= 1.0)) fail(ErrorKind::configuration, "asian payoff needs p >= 1");
    const double h = get("h", 1.0 / stages);
    const double strike = get("strike", 0.0);
    const double c = h * std::pow(static_cast<double>(stages), 1.0 - 1.0 / p);
    return {[h, strike](int stage, std::span<const double> x) {
              double s = 0.0;
              for (int j = 0; j < stage; ++j) s += x[static_cast<std::size_t>(j)];
              return std::max(h * s - strike, 0.0);
            },
            c, objective, "asian"};
  }
  fail(ErrorKind::configuration, "unknown payoff '" + std::string(name) + "'");
}

namespace {

double better(Objective o, double a, double b) {
  return o == Objective::sup ? std::max(a, b) : std::min(a, b);
}

double envelope(const FiniteAdaptedProcess& proc, const PathPayoff& payoff, int node,
                std::vector<double>& prefix) {
  const auto& n = proc.node(node);
  if (node != 0) prefix.push_back(n.value);
  double value;
  if (n.children.empty()) {
    value = payoff.evaluate(n.stage, prefix);
  } else {
    double cont = 0.0;
    for (int c : n.children) cont += to_double(proc.node(c).mass) * envelope(proc, payoff, c, prefix);
    // No decision at the virtual root: the first observation is x_1.
    value = node == 0 ? cont : better(payoff.objective, payoff.evaluate(n.stage, prefix), cont);
  }
  if (node != 0) prefix.pop_back();
  return value;
}

}  // namespace

double snell_value(const FiniteAdaptedProcess& proc, const PathPayoff& payoff) {
  proc.validate();
  std::vector<double> prefix;
  prefix.reserve(static_cast<std::size_t>(proc.stages()));
  return envelope(proc, payoff, 0, prefix);
}

double snell_value_by_enumeration(const FiniteAdaptedProcess& proc, const PathPayoff& payoff) {
  proc.validate();
  const std::size_t count = proc.size() - 1;
  if (count > 8) {
    fail(ErrorKind::instance_too_large, "stopping-rule enumeration is limited to 8 nodes");
  }
  const std::vector<int> leaves = proc.leaves();
  double best = payoff.objective == Objective::sup ? -std::numeric_limits<double>::infinity()
                                                   : std::numeric_limits<double>::infinity();
  // Bit i-1 set: stop at node i if not stopped earlier. Leaves always stop.
  for (std::uint32_t rule = 0; rule < (1u << count); ++rule) {
    double expectation = 0.0;
    for (int leaf : leaves) {
      std::vector<int> path;
      for (int j = leaf; j > 0; j = proc.node(j).parent) path.push_back(j);
      std::reverse(path.begin(), path.end());
      int stop = path.back();
      for (int j : path) {
        if (rule & (1u << (j - 1))) {
          stop = j;
          break;
        }
      }
      const std::vector<double> prefix = proc.history(stop);
      expectation += to_double(proc.path_probability(leaf)) *
                     payoff.evaluate(proc.node(stop).stage, prefix);
    }
    best = better(payoff.objective, best, expectation);
  }
  return best;
}

StabilityGap stopping_stability_gap(const FiniteAdaptedProcess& mu,
                                    const FiniteAdaptedProcess& nu, const PathPayoff& payoff,
                                    double p) {
  const double lhs = std::abs(snell_value(mu, payoff) - snell_value(nu, payoff));
  const double aw_pp = exact_bicausal_value(mu, nu, power_cost(p)).value;
  return {lhs, payoff.lipschitz * std::pow(std::max(aw_pp, 0.0), 1.0 / p)};
}

void falsify_payoff_lipschitz(const PathPayoff& payoff, int stages, double p, int samples,
                              std::uint64_t seed, double radius) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(-radius, radius);
  std::vector<double> x(static_cast<std::size_t>(stages)), y(x.size());
  for (int s = 0; s < samples; ++s) {
    for (std::size_t j = 0; j < x.size(); ++j) {
      x[j] = unif(rng);
      // Half the samples probe nearby pairs, where local slopes show up.
      y[j] = (s % 2 == 0) ? unif(rng) : x[j] + 1e-3 * unif(rng);
    }
    double norm = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) norm += std::pow(std::abs(x[j] - y[j]), p);
    norm = std::pow(norm, 1.0 / p);
    for (int k = 1; k <= stages; ++k) {
      const double diff = std::abs(payoff.evaluate(k, std::span<const double>(x.data(), k)) -
                                   payoff.evaluate(k, std::span<const double>(y.data(), k)));
      if (diff > 1.01 * payoff.lipschitz * norm + 1e-12) {
        std::ostringstream os;
        os.precision(17);
        os << "payoff '" << payoff.name << "': declared C_L = " << payoff.lipschitz
           << " violated at stage " << k << " (|dL| = " << diff << ", |dx|_p = " << norm << ")";
        fail(ErrorKind::configuration, os.str());
      }
    }
  }
}

}  // namespace awsde
