#pragma once

#include <boost/rational.hpp>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"

namespace awsde {

using Rational = boost::rational<std::int64_t>;

double to_double(const Rational& r) noexcept;

// Rooted probability tree for a discrete-time law on R^n. Index 0 is a
// virtual root at stage 0; real nodes live at stages 1..n and carry the
// conditional mass of their value given the parent history.
class FiniteAdaptedProcess {
 public:
  struct Node {
    std::int64_t id;  // external id (JSON); -1 for the virtual root
    double value;
    int parent;       // internal index, -1 for the root
    Rational mass;
    int stage;
    std::vector<int> children;
  };

  explicit FiniteAdaptedProcess(int stages);

  // Appends a node under `parent` (0 = root, i.e. a stage-1 node) and returns
  // its internal index. The external id defaults to the internal index.
  int add(int parent, double value, Rational mass, std::int64_t id = -1);

  int stages() const noexcept { return stages_; }
  std::size_t size() const noexcept { return nodes_.size(); }
  const Node& node(int i) const { return nodes_.at(static_cast<std::size_t>(i)); }
  const std::vector<Node>& nodes() const noexcept { return nodes_; }
  const std::vector<int>& children(int i) const { return node(i).children; }

  // Values (x_1, ..., x_k) along the path to node i.
  std::vector<double> history(int i) const;
  Rational path_probability(int i) const;
  std::vector<int> nodes_at_stage(int stage) const;
  std::vector<int> leaves() const;

  // Throws configuration error unless every internal node's child masses sum
  // to exactly 1, child values are pairwise distinct, masses are positive and
  // every leaf sits at the last stage.
  void validate() const;

  nlohmann::json to_json() const;
  static FiniteAdaptedProcess from_json(const nlohmann::json& doc);

 private:
  int stages_;
  std::vector<Node> nodes_;
};

struct RandomTreeOptions {
  int stages = 2;
  int max_children = 3;
  std::int64_t denominator = 4;  // every conditional mass is a multiple of 1/denominator
  bool increasing = false;       // Markov and stochastically increasing by construction
  double spread = 2.0;           // support values are multiples of 1/4 in [-spread, spread]
};

// Random tree whose stage-k kernel depends only on the current value. With
// `increasing`, kernel CDFs are sorted pointwise across values so that larger
// values carry first-order larger kernels.
FiniteAdaptedProcess random_adapted_process(std::mt19937_64& rng, const RandomTreeOptions& options);

// Stagewise cost sum_k weight_k c_k(x_k, y_k).
struct CostFunctional {
  std::function<double(int stage, double x, double y)> stage_cost;
  double p = 1.0;  // growth power
  double k = 1.0;  // growth constant
  bool quasi_monotone = false;
  std::string name;

  double operator()(int stage, double x, double y) const { return stage_cost(stage, x, y); }
};

// |x - y|^p at every stage with unit weight (or weight h when given).
CostFunctional power_cost(double p, double weight = 1.0);

}  // namespace awsde
