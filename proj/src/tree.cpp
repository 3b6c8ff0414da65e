#include "awsde/tree.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "awsde/error.hpp"

namespace awsde {

double to_double(const Rational& r) noexcept {
  return static_cast<double>(r.numerator()) / static_cast<double>(r.denominator());
}

FiniteAdaptedProcess::FiniteAdaptedProcess(int stages) : stages_(stages) {
  if (stages < 1) fail(ErrorKind::configuration, "tree needs at least one stage");
  nodes_.push_back(Node{-1, 0.0, -1, Rational(1), 0, {}});
}

int FiniteAdaptedProcess::add(int parent, double value, Rational mass, std::int64_t id) {
  if (parent < 0 || static_cast<std::size_t>(parent) >= nodes_.size()) {
    fail(ErrorKind::configuration, "tree: unknown parent node");
  }
  const int stage = nodes_[static_cast<std::size_t>(parent)].stage + 1;
  if (stage > stages_) fail(ErrorKind::configuration, "tree: node deeper than the stage count");
  const int index = static_cast<int>(nodes_.size());
  nodes_.push_back(Node{id < 0 ? index : id, value, parent, mass, stage, {}});
  nodes_[static_cast<std::size_t>(parent)].children.push_back(index);
  return index;
}

std::vector<double> FiniteAdaptedProcess::history(int i) const {
  std::vector<double> out;
  for (int j = i; j > 0; j = node(j).parent) out.push_back(node(j).value);
  std::reverse(out.begin(), out.end());
  return out;
}

Rational FiniteAdaptedProcess::path_probability(int i) const {
  Rational p(1);
  for (int j = i; j > 0; j = node(j).parent) p *= node(j).mass;
  return p;
}

std::vector<int> FiniteAdaptedProcess::nodes_at_stage(int stage) const {
  std::vector<int> out;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].stage == stage) out.push_back(static_cast<int>(i));
  }
  return out;
}

std::vector<int> FiniteAdaptedProcess::leaves() const { return nodes_at_stage(stages_); }

void FiniteAdaptedProcess::validate() const {
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const Node& n = nodes_[i];
    if (n.stage < stages_ && n.children.empty()) {
      fail(ErrorKind::configuration,
           "tree: node " + std::to_string(n.id) + " at stage " + std::to_string(n.stage) +
               " has no children but the tree has " + std::to_string(stages_) + " stages");
    }
    if (n.children.empty()) continue;
    Rational total(0);
    std::set<double> values;
    for (int c : n.children) {
      const Node& child = node(c);
      if (child.mass <= Rational(0)) {
        fail(ErrorKind::configuration, "tree: node " + std::to_string(child.id) +
                                           " has nonpositive mass");
      }
      if (!std::isfinite(child.value)) {
        fail(ErrorKind::configuration, "tree: node " + std::to_string(child.id) +
                                           " has a non-finite value");
      }
      total += child.mass;
      if (!values.insert(child.value).second) {
        fail(ErrorKind::configuration, "tree: repeated value among the children of node " +
                                           std::to_string(n.id));
      }
    }
    if (total != Rational(1)) {
      std::ostringstream os;
      os << "tree: child masses of node " << n.id << " sum to " << total << ", not 1";
      fail(ErrorKind::configuration, os.str());
    }
  }
}

nlohmann::json FiniteAdaptedProcess::to_json() const {
  nlohmann::json nodes = nlohmann::json::array();
  for (std::size_t i = 1; i < nodes_.size(); ++i) {
    const Node& n = nodes_[i];
    nlohmann::json parent = nullptr;
    if (n.parent > 0) parent = node(n.parent).id;
    nodes.push_back({{"id", n.id},
                     {"value", n.value},
                     {"parent", parent},
                     {"mass_num", n.mass.numerator()},
                     {"mass_den", n.mass.denominator()}});
  }
  return {{"stages", stages_}, {"nodes", nodes}};
}

FiniteAdaptedProcess FiniteAdaptedProcess::from_json(const nlohmann::json& doc) {
  try {
    FiniteAdaptedProcess proc(doc.at("stages").get<int>());
    std::map<std::int64_t, int> index;
    // Parents may be listed after their children; resolve in passes.
    std::vector<const nlohmann::json*> pending;
    for (const auto& n : doc.at("nodes")) pending.push_back(&n);
    while (!pending.empty()) {
      std::vector<const nlohmann::json*> next;
      for (const nlohmann::json* n : pending) {
        const auto& parent = n->at("parent");
        int parent_index = 0;
        if (!parent.is_null()) {
          const auto it = index.find(parent.get<std::int64_t>());
          if (it == index.end()) {
            next.push_back(n);
            continue;
          }
          parent_index = it->second;
        }
        const std::int64_t id = n->at("id").get<std::int64_t>();
        if (id < 0 || index.count(id)) {
          fail(ErrorKind::configuration, "tree: node ids must be distinct and nonnegative");
        }
        const std::int64_t den = n->at("mass_den").get<std::int64_t>();
        if (den <= 0) fail(ErrorKind::configuration, "tree: mass_den must be positive");
        index[id] = proc.add(parent_index, n->at("value").get<double>(),
                             Rational(n->at("mass_num").get<std::int64_t>(), den), id);
      }
      if (next.size() == pending.size()) {
        fail(ErrorKind::configuration, "tree: unresolvable parent references");
      }
      pending = std::move(next);
    }
    proc.validate();
    return proc;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::configuration, std::string("tree JSON: ") + e.what());
  }
}

namespace {

std::vector<double> random_support(std::mt19937_64& rng, int count, double spread) {
  const int half = std::max(count, static_cast<int>(std::floor(4.0 * spread)));
  std::uniform_int_distribution<int> pick(-half, half);
  std::set<int> chosen;
  while (static_cast<int>(chosen.size()) < count) chosen.insert(pick(rng));
  std::vector<double> out;
  for (int q : chosen) out.push_back(0.25 * q);
  return out;
}

// Nondecreasing integer CDF on `points` support points ending at `den`.
std::vector<std::int64_t> random_cdf(std::mt19937_64& rng, int points, std::int64_t den) {
  std::uniform_int_distribution<std::int64_t> pick(0, den);
  std::vector<std::int64_t> cdf(static_cast<std::size_t>(points));
  for (auto& c : cdf) c = pick(rng);
  cdf.back() = den;
  std::sort(cdf.begin(), cdf.end());
  return cdf;
}

}  // namespace

FiniteAdaptedProcess random_adapted_process(std::mt19937_64& rng, const RandomTreeOptions& options) {
  if (options.stages < 1 || options.max_children < 1 || options.denominator < 1) {
    fail(ErrorKind::configuration, "random tree: invalid options");
  }
  FiniteAdaptedProcess proc(options.stages);
  std::vector<int> frontier{0};
  for (int stage = 1; stage <= options.stages; ++stage) {
    const std::vector<double> support = random_support(rng, options.max_children, options.spread);
    std::map<double, std::vector<int>> by_value;
    for (int n : frontier) by_value[proc.node(n).value].push_back(n);
    std::vector<std::vector<std::int64_t>> cdfs;
    for (std::size_t i = 0; i < by_value.size(); ++i) {
      cdfs.push_back(random_cdf(rng, options.max_children, options.denominator));
    }
    if (options.increasing) {
      // Larger conditioning values get pointwise smaller CDFs.
      for (std::size_t j = 0; j < support.size(); ++j) {
        std::vector<std::int64_t> column;
        for (const auto& c : cdfs) column.push_back(c[j]);
        std::sort(column.begin(), column.end(), std::greater<>());
        for (std::size_t i = 0; i < cdfs.size(); ++i) cdfs[i][j] = column[i];
      }
    }
    std::vector<int> next;
    std::size_t kernel = 0;
    for (const auto& [value, nodes] : by_value) {
      const auto& cdf = cdfs[kernel++];
      for (int n : nodes) {
        std::int64_t prev = 0;
        for (std::size_t j = 0; j < support.size(); ++j) {
          const std::int64_t m = cdf[j] - prev;
          prev = cdf[j];
          if (m > 0) next.push_back(proc.add(n, support[j], Rational(m, options.denominator)));
        }
      }
    }
    frontier = std::move(next);
  }
  proc.validate();
  return proc;
}

CostFunctional power_cost(double p, double weight) {
  if (!(p >= 1.0)) fail(ErrorKind::configuration, "power cost needs p >= 1");
  CostFunctional c;
  c.stage_cost = [p, weight](int, double x, double y) {
    const double d = std::abs(x - y);
    const double v = p == 1.0 ? d : (p == 2.0 ? d * d : std::pow(d, p));
    return weight == 1.0 ? v : weight * v;
  };
  c.p = p;
  c.k = weight;
  c.quasi_monotone = true;
  std::ostringstream os;
  os << "|x-y|^" << p;
  c.name = os.str();
  return c;
}

}  // namespace awsde
