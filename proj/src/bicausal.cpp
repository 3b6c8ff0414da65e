#include "awsde/bicausal.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

#include "awsde/error.hpp"

namespace awsde {

BicausalPlan::BicausalPlan(int stages) : stages_(stages) {
  nodes_.push_back(Node{0, 0, -1, Rational(1), 0, {}});
}

int BicausalPlan::add(int parent, int mu, int nu, Rational mass) {
  const int index = static_cast<int>(nodes_.size());
  const int stage = nodes_.at(static_cast<std::size_t>(parent)).stage + 1;
  nodes_.push_back(Node{mu, nu, parent, mass, stage, {}});
  nodes_[static_cast<std::size_t>(parent)].children.push_back(index);
  return index;
}

nlohmann::json BicausalPlan::to_json(const FiniteAdaptedProcess& mu,
                                     const FiniteAdaptedProcess& nu) const {
  nlohmann::json nodes = nlohmann::json::array();
  for (std::size_t i = 1; i < nodes_.size(); ++i) {
    const Node& n = nodes_[i];
    nlohmann::json parent = nullptr;
    if (n.parent > 0) parent = n.parent;
    nodes.push_back({{"id", i},
                     {"mu_id", mu.node(n.mu).id},
                     {"nu_id", nu.node(n.nu).id},
                     {"parent", parent},
                     {"mass_num", n.mass.numerator()},
                     {"mass_den", n.mass.denominator()}});
  }
  return {{"stages", stages_}, {"nodes", nodes}};
}

std::optional<std::string> marginal_mismatch(const BicausalPlan& plan,
                                             const FiniteAdaptedProcess& mu,
                                             const FiniteAdaptedProcess& nu) {
  for (std::size_t i = 0; i < plan.nodes().size(); ++i) {
    const auto& n = plan.node(static_cast<int>(i));
    if (n.stage == plan.stages()) continue;
    std::map<int, Rational> by_mu, by_nu;
    for (int c : n.children) {
      const auto& child = plan.node(c);
      if (mu.node(child.mu).parent != n.mu || nu.node(child.nu).parent != n.nu) {
        return "plan node " + std::to_string(c) + " does not extend its parent's histories";
      }
      by_mu[child.mu] += child.mass;
      by_nu[child.nu] += child.mass;
    }
    const auto compare = [&](const std::map<int, Rational>& got, const FiniteAdaptedProcess& proc,
                             int parent, const char* side) -> std::optional<std::string> {
      std::map<int, Rational> want;
      for (int c : proc.children(parent)) want[c] = proc.node(c).mass;
      if (got != want) {
        std::ostringstream os;
        os << side << "-marginal of plan node " << i << " differs from the conditional law of "
           << side << " node " << proc.node(parent).id;
        return os.str();
      }
      return std::nullopt;
    };
    if (auto m = compare(by_mu, mu, n.mu, "mu")) return m;
    if (auto m = compare(by_nu, nu, n.nu, "nu")) return m;
  }
  return std::nullopt;
}

std::vector<CouplingEntry> monotone_coupling(const std::vector<Rational>& left,
                                             const std::vector<Rational>& right) {
  std::vector<CouplingEntry> out;
  std::size_t i = 0, j = 0;
  Rational a = left.empty() ? Rational(0) : left[0];
  Rational b = right.empty() ? Rational(0) : right[0];
  while (i < left.size() && j < right.size()) {
    const Rational m = std::min(a, b);
    if (m > Rational(0)) out.push_back({static_cast<int>(i), static_cast<int>(j), m});
    a -= m;
    b -= m;
    if (a == Rational(0) && ++i < left.size()) a = left[i];
    if (b == Rational(0) && ++j < right.size()) b = right[j];
  }
  return out;
}

namespace {

void check_stages(const FiniteAdaptedProcess& mu, const FiniteAdaptedProcess& nu) {
  if (mu.stages() != nu.stages()) {
    fail(ErrorKind::configuration, "bicausal: stage counts differ (" +
                                       std::to_string(mu.stages()) + " vs " +
                                       std::to_string(nu.stages()) + ")");
  }
}

std::vector<int> sorted_children(const FiniteAdaptedProcess& proc, int node) {
  std::vector<int> c = proc.children(node);
  std::sort(c.begin(), c.end(),
            [&](int a, int b) { return proc.node(a).value < proc.node(b).value; });
  return c;
}

std::vector<Rational> masses(const FiniteAdaptedProcess& proc, const std::vector<int>& nodes) {
  std::vector<Rational> out;
  for (int n : nodes) out.push_back(proc.node(n).mass);
  return out;
}

void kr_extend(BicausalPlan& plan, int plan_node, const FiniteAdaptedProcess& mu,
               const FiniteAdaptedProcess& nu) {
  const auto& n = plan.node(plan_node);
  if (n.stage == plan.stages()) return;
  const std::vector<int> cu = sorted_children(mu, n.mu);
  const std::vector<int> cv = sorted_children(nu, n.nu);
  for (const CouplingEntry& e : monotone_coupling(masses(mu, cu), masses(nu, cv))) {
    const int child = plan.add(plan_node, cu[static_cast<std::size_t>(e.i)],
                               cv[static_cast<std::size_t>(e.j)], e.mass);
    kr_extend(plan, child, mu, nu);
  }
}

double cost_below(const BicausalPlan& plan, int i, const FiniteAdaptedProcess& mu,
                  const FiniteAdaptedProcess& nu, const CostFunctional& cost) {
  double total = 0.0;
  for (int c : plan.node(i).children) {
    const auto& child = plan.node(c);
    const double stage_cost = cost(child.stage, mu.node(child.mu).value, nu.node(child.nu).value);
    total += to_double(child.mass) * (stage_cost + cost_below(plan, c, mu, nu, cost));
  }
  return total;
}

struct PairSolution {
  double value;
  std::vector<CouplingEntry> coupling;  // indices into the value-sorted child lists
};

class BicausalSolver {
 public:
  BicausalSolver(const FiniteAdaptedProcess& mu, const FiniteAdaptedProcess& nu,
                 const CostFunctional& cost)
      : mu_(mu), nu_(nu), cost_(cost) {}

  const PairSolution& solve(int u, int v) {
    const auto key = std::make_pair(u, v);
    if (const auto it = memo_.find(key); it != memo_.end()) return it->second;
    PairSolution sol{0.0, {}};
    const int stage = mu_.node(u).stage;
    if (stage < mu_.stages()) sol = solve_inner(u, v, stage + 1);
    return memo_.emplace(key, std::move(sol)).first->second;
  }

  void build(BicausalPlan& plan, int plan_node) {
    const auto& n = plan.node(plan_node);
    const int mu_node = n.mu, nu_node = n.nu;
    const PairSolution& sol = solve(mu_node, nu_node);
    const std::vector<int> cu = sorted_children(mu_, mu_node);
    const std::vector<int> cv = sorted_children(nu_, nu_node);
    for (const CouplingEntry& e : sol.coupling) {
      const int child = plan.add(plan_node, cu[static_cast<std::size_t>(e.i)],
                                 cv[static_cast<std::size_t>(e.j)], e.mass);
      build(plan, child);
    }
  }

 private:
  PairSolution solve_inner(int u, int v, int child_stage) {
    const std::vector<int> cu = sorted_children(mu_, u);
    const std::vector<int> cv = sorted_children(nu_, v);
    std::int64_t den = 1;
    for (int c : cu) den = std::lcm(den, mu_.node(c).mass.denominator());
    for (int c : cv) den = std::lcm(den, nu_.node(c).mass.denominator());
    if (den > max_atoms) {
      std::ostringstream os;
      os << "bicausal: conditional marginals at mu node " << mu_.node(u).id << " / nu node "
         << nu_.node(v).id << " need " << den << " equal-mass atoms (limit " << max_atoms << ")";
      fail(ErrorKind::instance_too_large, os.str());
    }
    const auto atoms = [&](const FiniteAdaptedProcess& proc, const std::vector<int>& nodes) {
      std::vector<int> out;
      for (std::size_t i = 0; i < nodes.size(); ++i) {
        const Rational m = proc.node(nodes[i]).mass * den;
        for (std::int64_t a = 0; a < m.numerator(); ++a) out.push_back(static_cast<int>(i));
      }
      return out;
    };
    const std::vector<int> row_atoms = atoms(mu_, cu);
    const std::vector<int> col_atoms = atoms(nu_, cv);

    std::vector<double> pair_cost(cu.size() * cv.size());
    for (std::size_t i = 0; i < cu.size(); ++i) {
      for (std::size_t j = 0; j < cv.size(); ++j) {
        const double c = cost_(child_stage, mu_.node(cu[i]).value, nu_.node(cv[j]).value);
        pair_cost[i * cv.size() + j] = c + solve(cu[i], cv[j]).value;
      }
    }
    const int n = static_cast<int>(den);
    std::vector<double> matrix(static_cast<std::size_t>(n * n));
    for (int a = 0; a < n; ++a) {
      for (int b = 0; b < n; ++b) {
        matrix[static_cast<std::size_t>(a * n + b)] =
            pair_cost[static_cast<std::size_t>(row_atoms[static_cast<std::size_t>(a)]) * cv.size() +
                      static_cast<std::size_t>(col_atoms[static_cast<std::size_t>(b)])];
      }
    }
    std::vector<int> assignment;
    solve_assignment(matrix, n, assignment);
    std::vector<std::int64_t> counts(cu.size() * cv.size(), 0);
    for (int a = 0; a < n; ++a) {
      const auto i = static_cast<std::size_t>(row_atoms[static_cast<std::size_t>(a)]);
      const auto j = static_cast<std::size_t>(
          col_atoms[static_cast<std::size_t>(assignment[static_cast<std::size_t>(a)])]);
      ++counts[i * cv.size() + j];
    }
    PairSolution sol{0.0, {}};
    for (std::size_t i = 0; i < cu.size(); ++i) {
      for (std::size_t j = 0; j < cv.size(); ++j) {
        const std::int64_t k = counts[i * cv.size() + j];
        if (k == 0) continue;
        const Rational m(k, den);
        sol.coupling.push_back({static_cast<int>(i), static_cast<int>(j), m});
        sol.value += to_double(m) * pair_cost[i * cv.size() + j];
      }
    }
    return sol;
  }

  const FiniteAdaptedProcess& mu_;
  const FiniteAdaptedProcess& nu_;
  const CostFunctional& cost_;
  std::map<std::pair<int, int>, PairSolution> memo_;
};

}  // namespace

void extend_knothe_rosenblatt(BicausalPlan& plan, int node, const FiniteAdaptedProcess& mu,
                              const FiniteAdaptedProcess& nu) {
  kr_extend(plan, node, mu, nu);
}

BicausalPlan knothe_rosenblatt(const FiniteAdaptedProcess& mu, const FiniteAdaptedProcess& nu) {
  check_stages(mu, nu);
  BicausalPlan plan(mu.stages());
  kr_extend(plan, 0, mu, nu);
  return plan;
}

double plan_cost(const BicausalPlan& plan, const FiniteAdaptedProcess& mu,
                 const FiniteAdaptedProcess& nu, const CostFunctional& cost) {
  check_stages(mu, nu);
  if (plan.stages() != mu.stages()) {
    fail(ErrorKind::configuration, "plan_cost: plan and trees have different stage counts");
  }
  return cost_below(plan, 0, mu, nu, cost);
}

double solve_assignment(const std::vector<double>& cost, int n, std::vector<int>& assignment) {
  if (n < 1 || n > max_atoms || cost.size() != static_cast<std::size_t>(n * n)) {
    fail(ErrorKind::instance_too_large, "assignment size outside [1, 8]");
  }
  // best[mask]: cheapest way to match rows 0..popcount(mask)-1 to the columns in mask.
  const std::size_t full = (std::size_t{1} << n) - 1;
  std::vector<double> best(full + 1, std::numeric_limits<double>::infinity());
  std::vector<int> last(full + 1, -1);
  best[0] = 0.0;
  for (std::size_t mask = 0; mask < full; ++mask) {
    if (std::isinf(best[mask])) continue;
    const int row = std::popcount(mask);
    for (int col = 0; col < n; ++col) {
      const std::size_t bit = std::size_t{1} << col;
      if (mask & bit) continue;
      const double c = best[mask] + cost[static_cast<std::size_t>(row * n + col)];
      if (c < best[mask | bit]) {
        best[mask | bit] = c;
        last[mask | bit] = col;
      }
    }
  }
  assignment.assign(static_cast<std::size_t>(n), -1);
  std::size_t mask = full;
  for (int row = n - 1; row >= 0; --row) {
    const int col = last[mask];
    assignment[static_cast<std::size_t>(row)] = col;
    mask &= ~(std::size_t{1} << col);
  }
  return best[full];
}

BicausalSolution exact_bicausal_value(const FiniteAdaptedProcess& mu,
                                      const FiniteAdaptedProcess& nu, const CostFunctional& cost) {
  check_stages(mu, nu);
  BicausalSolver solver(mu, nu, cost);
  const double value = solver.solve(0, 0).value;
  BicausalPlan plan(mu.stages());
  solver.build(plan, 0);
  return {value, std::move(plan)};
}

MonotoneReport check_stochastic_monotone(const FiniteAdaptedProcess& proc, DominanceOrder order) {
  MonotoneReport report{true, true, std::nullopt, std::nullopt};
  const auto cdf = [&](int node, double t) {
    if (order == DominanceOrder::first) {
      Rational f(0);
      for (int c : proc.children(node)) {
        if (proc.node(c).value <= t) f += proc.node(c).mass;
      }
      return to_double(f);
    }
    double f = 0.0;
    for (int c : proc.children(node)) {
      f += to_double(proc.node(c).mass) * std::max(0.0, t - proc.node(c).value);
    }
    return f;
  };
  for (int stage = 1; stage < proc.stages(); ++stage) {
    std::vector<int> nodes = proc.nodes_at_stage(stage);
    std::sort(nodes.begin(), nodes.end(),
              [&](int a, int b) { return proc.node(a).value < proc.node(b).value; });
    for (std::size_t a = 0; a < nodes.size(); ++a) {
      for (std::size_t b = a + 1; b < nodes.size(); ++b) {
        const int lo = nodes[a], hi = nodes[b];
        if (proc.node(lo).value == proc.node(hi).value) continue;
        std::vector<double> points;
        for (int n : {lo, hi}) {
          for (int c : proc.children(n)) points.push_back(proc.node(c).value);
        }
        std::sort(points.begin(), points.end());
        points.erase(std::unique(points.begin(), points.end()), points.end());
        for (double t : points) {
          const double fl = cdf(lo, t);
          const double fh = cdf(hi, t);
          const double tol = order == DominanceOrder::first ? 0.0 : 1e-12 * (1.0 + std::abs(t));
          // Increasing: the upper node's kernel dominates, F_hi <= F_lo.
          if (fh > fl + tol && report.increasing) {
            report.increasing = false;
            report.increasing_violation = MonotoneWitness{stage, lo, hi, t, fl, fh};
          }
          if (fl > fh + tol && report.decreasing) {
            report.decreasing = false;
            report.decreasing_violation = MonotoneWitness{stage, lo, hi, t, fl, fh};
          }
        }
      }
    }
  }
  return report;
}

QuasiMonotoneReport check_quasi_monotone(const CostFunctional& cost, int stage,
                                         const std::vector<double>& xs,
                                         const std::vector<double>& ys) {
  std::vector<double> sx = xs, sy = ys;
  std::sort(sx.begin(), sx.end());
  std::sort(sy.begin(), sy.end());
  QuasiMonotoneReport report{true, std::nullopt};
  double worst = 0.0;
  for (std::size_t i = 0; i < sx.size(); ++i) {
    for (std::size_t i2 = i + 1; i2 < sx.size(); ++i2) {
      for (std::size_t j = 0; j < sy.size(); ++j) {
        for (std::size_t j2 = j + 1; j2 < sy.size(); ++j2) {
          const double a = cost(stage, sx[i], sy[j]);
          const double b = cost(stage, sx[i2], sy[j2]);
          const double c = cost(stage, sx[i], sy[j2]);
          const double d = cost(stage, sx[i2], sy[j]);
          // Min-cost orientation: matching in order must not cost more than crossing.
          const double gap = c + d - a - b;
          const double tol = 1e-12 * (1.0 + std::abs(a) + std::abs(b) + std::abs(c) + std::abs(d));
          if (gap < -tol && gap < worst) {
            worst = gap;
            report.pass = false;
            report.witness = RectangleWitness{sx[i], sx[i2], sy[j], sy[j2], gap};
          }
        }
      }
    }
  }
  return report;
}

}  // namespace awsde
