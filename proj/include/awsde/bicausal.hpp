#pragma once

#include <optional>
#include <string>
#include <vector>

#include "awsde/tree.hpp"

namespace awsde {

// Joint tree over pairs of histories. Index 0 pairs the two virtual roots;
// each child carries the conditional mass of its (mu node, nu node) pair.
class BicausalPlan {
 public:
  struct Node {
    int mu;      // internal index into the mu tree
    int nu;      // internal index into the nu tree
    int parent;  // -1 for the root pair
    Rational mass;
    int stage;
    std::vector<int> children;
  };

  explicit BicausalPlan(int stages);

  int add(int parent, int mu, int nu, Rational mass);

  int stages() const noexcept { return stages_; }
  const Node& node(int i) const { return nodes_.at(static_cast<std::size_t>(i)); }
  const std::vector<Node>& nodes() const noexcept { return nodes_; }

  nlohmann::json to_json(const FiniteAdaptedProcess& mu, const FiniteAdaptedProcess& nu) const;

 private:
  int stages_;
  std::vector<Node> nodes_;
};

// Empty when every plan node's children project exactly (rational equality)
// onto the children of its mu node and of its nu node; otherwise a
// description of the first mismatch. Stagewise consistency of the
// conditional masses is exactly bicausality on finite trees.
std::optional<std::string> marginal_mismatch(const BicausalPlan& plan,
                                             const FiniteAdaptedProcess& mu,
                                             const FiniteAdaptedProcess& nu);

// Monotone (quantile) coupling of the stage-1 marginals, then of each pair of
// conditional marginals, recursively.
BicausalPlan knothe_rosenblatt(const FiniteAdaptedProcess& mu, const FiniteAdaptedProcess& nu);

// Extends plan node `node` below with the Knothe-Rosenblatt construction.
void extend_knothe_rosenblatt(BicausalPlan& plan, int node, const FiniteAdaptedProcess& mu,
                              const FiniteAdaptedProcess& nu);

// E^pi[sum_k c_k(x_k, y_k)], accumulated by backward recursion over the plan.
double plan_cost(const BicausalPlan& plan, const FiniteAdaptedProcess& mu,
                 const FiniteAdaptedProcess& nu, const CostFunctional& cost);

struct BicausalSolution {
  double value;
  BicausalPlan plan;
};

inline constexpr int max_atoms = 8;

// Backward dynamic programming over node pairs. The inner one-stage transport
// is solved exactly by splitting both conditional marginals into equal-mass
// atoms over the common denominator and solving the resulting assignment
// problem. Throws instance_too_large when more than max_atoms atoms are needed.
BicausalSolution exact_bicausal_value(const FiniteAdaptedProcess& mu,
                                      const FiniteAdaptedProcess& nu, const CostFunctional& cost);

// Minimum-cost perfect matching of an n x n matrix (row-major), n <= max_atoms;
// `assignment[i]` is the column matched to row i.
double solve_assignment(const std::vector<double>& cost, int n, std::vector<int>& assignment);

// Monotone coupling of two discrete marginals given as sorted (value, mass)
// lists: returns (i, j, mass) triples by the north-west corner rule.
struct CouplingEntry {
  int i;
  int j;
  Rational mass;
};
std::vector<CouplingEntry> monotone_coupling(const std::vector<Rational>& left,
                                             const std::vector<Rational>& right);

enum class DominanceOrder { first, second };

struct MonotoneWitness {
  int stage;        // stage of the two conditioning nodes
  int lower_node;   // node with the smaller value
  int upper_node;
  double point;     // evaluation point of the (integrated) CDFs
  double lower_cdf;
  double upper_cdf;
};

struct MonotoneReport {
  bool increasing;
  bool decreasing;
  std::optional<MonotoneWitness> increasing_violation;
  std::optional<MonotoneWitness> decreasing_violation;
};

// Compares conditional kernels of every pair of same-stage nodes (ordered by
// value) in first-order (CDFs) or second-order (integrated CDFs) dominance.
MonotoneReport check_stochastic_monotone(const FiniteAdaptedProcess& proc, DominanceOrder order);

struct RectangleWitness {
  double x;
  double x_prime;
  double y;
  double y_prime;
  double gap;  // c(x,y') + c(x',y) - c(x,y) - c(x',y'), negative on failure
};

struct QuasiMonotoneReport {
  bool pass;
  std::optional<RectangleWitness> witness;
};

QuasiMonotoneReport check_quasi_monotone(const CostFunctional& cost, int stage,
                                         const std::vector<double>& xs,
                                         const std::vector<double>& ys);

}  // namespace awsde
