#include "gazesa/shap.hpp"

#include <algorithm>
#include <bit>
#include <string>
#include <cstdint>
#include <vector>

#include "gazesa/error.hpp"
#include "gazesa/kernels.hpp"

namespace gazesa::shap {

using gbdt::Tree;
using gbdt::TreeEnsemble;
using gbdt::TreeNode;

namespace {

void check_cover(const TreeNode& node, std::size_t tree, std::size_t index) {
  if (!(node.cover > 0.0)) {
    throw Error(Error::Kind::kModel, "tree " + std::to_string(tree) + " node " +
                                         std::to_string(index) +
                                         " has zero cover; the model file is corrupt");
  }
}

void check_covers(const TreeEnsemble& model) {
  for (std::size_t t = 0; t < model.trees.size(); ++t) {
    const auto& nodes = model.trees[t].nodes;
    for (std::size_t i = 0; i < nodes.size(); ++i) check_cover(nodes[i], t, i);
  }
}

void check_width(const TreeEnsemble& model, std::span<const double> values,
                 std::span<const std::uint8_t> present) {
  if (values.size() != model.feature_names.size() || present.size() != values.size()) {
    throw Error(Error::Kind::kInvalidArgument,
                "instance has " + std::to_string(values.size()) + " values; model expects " +
                    std::to_string(model.feature_names.size()));
  }
}

bool goes_left(const TreeNode& n, std::span<const double> values,
               std::span<const std::uint8_t> present) {
  const auto f = static_cast<std::size_t>(n.feature);
  return present[f] ? values[f] <= n.threshold : n.default_left;
}

double expected_node(const Tree& tree, int node, double scale) {
  const TreeNode& n = tree.nodes[node];
  if (n.is_leaf()) return scale * n.value;
  const double l = expected_node(tree, n.left, scale);
  const double r = expected_node(tree, n.right, scale);
  return (tree.nodes[n.left].cover * l + tree.nodes[n.right].cover * r) / n.cover;
}

// ---- TreeSHAP ---------------------------------------------------------------------

struct PathElement {
  int feature = -1;
  double zero = 0.0;  // fraction of cover flowing this way when the feature is unknown
  double one = 0.0;   // 1 if the instance follows this way, else 0
  double weight = 0.0;
};

void extend(PathElement* path, int depth, double zero, double one, int feature) {
  path[depth] = {feature, zero, one, depth == 0 ? 1.0 : 0.0};
  for (int i = depth - 1; i >= 0; --i) {
    path[i + 1].weight += one * path[i].weight * (i + 1) / static_cast<double>(depth + 1);
    path[i].weight = zero * path[i].weight * (depth - i) / static_cast<double>(depth + 1);
  }
}

void unwind(PathElement* path, int depth, int index) {
  const double one = path[index].one;
  const double zero = path[index].zero;
  double next = path[depth].weight;
  for (int i = depth - 1; i >= 0; --i) {
    if (one != 0.0) {
      const double tmp = path[i].weight;
      path[i].weight = next * (depth + 1) / ((i + 1) * one);
      next = tmp - path[i].weight * zero * (depth - i) / static_cast<double>(depth + 1);
    } else {
      path[i].weight = path[i].weight * (depth + 1) / (zero * (depth - i));
    }
  }
  for (int i = index; i < depth; ++i) {
    path[i].feature = path[i + 1].feature;
    path[i].zero = path[i + 1].zero;
    path[i].one = path[i + 1].one;
  }
}

// Total weight of the path with element `index` removed, without modifying it.
double unwound_sum(const PathElement* path, int depth, int index) {
  const double one = path[index].one;
  const double zero = path[index].zero;
  double next = path[depth].weight;
  double total = 0.0;
  for (int i = depth - 1; i >= 0; --i) {
    if (one != 0.0) {
      const double tmp = next * (depth + 1) / ((i + 1) * one);
      total += tmp;
      next = path[i].weight - tmp * zero * ((depth - i) / static_cast<double>(depth + 1));
    } else if (zero != 0.0) {
      total += (path[i].weight / zero) / ((depth - i) / static_cast<double>(depth + 1));
    }
  }
  return total;
}

struct TreeShap {
  const Tree& tree;
  std::span<const double> values;
  std::span<const std::uint8_t> present;
  double scale;
  std::span<double> phi;

  void recurse(int node, PathElement* parent_path, int depth, double parent_zero,
               double parent_one, int parent_feature) {
    PathElement* path = parent_path + depth + 1;
    std::copy(parent_path, parent_path + depth + 1, path);
    extend(path, depth, parent_zero, parent_one, parent_feature);

    const TreeNode& n = tree.nodes[node];
    if (n.is_leaf()) {
      const double v = scale * n.value;
      for (int i = 1; i <= depth; ++i) {
        const double w = unwound_sum(path, depth, i);
        phi[path[i].feature] += w * (path[i].one - path[i].zero) * v;
      }
      return;
    }

    const bool left = goes_left(n, values, present);
    const int hot = left ? n.left : n.right;
    const int cold = left ? n.right : n.left;
    const double hot_zero = tree.nodes[hot].cover / n.cover;
    const double cold_zero = tree.nodes[cold].cover / n.cover;
    double incoming_zero = 1.0;
    double incoming_one = 1.0;

    // A feature already on the path is folded back into a single element.
    int k = 0;
    for (; k <= depth; ++k) {
      if (path[k].feature == n.feature) break;
    }
    if (k != depth + 1) {
      incoming_zero = path[k].zero;
      incoming_one = path[k].one;
      unwind(path, depth, k);
      --depth;
    }

    recurse(hot, path, depth + 1, hot_zero * incoming_zero, incoming_one, n.feature);
    recurse(cold, path, depth + 1, cold_zero * incoming_zero, 0.0, n.feature);
  }
};

}  // namespace

double expected_value(const TreeEnsemble& model) {
  double acc = model.base_score;
  for (const Tree& tree : model.trees) {
    if (!tree.nodes.empty()) acc += expected_node(tree, 0, model.learning_rate);
  }
  return acc;
}

Explanation shap_values(const TreeEnsemble& model, std::span<const double> values,
                        std::span<const std::uint8_t> present) {
  check_width(model, values, present);
  check_covers(model);
  Explanation out;
  out.contributions.assign(values.size(), 0.0);
  out.base_value = expected_value(model);
  out.prediction = model.predict(values, present);

  std::vector<PathElement> buffer;
  for (const Tree& tree : model.trees) {
    if (tree.nodes.empty()) continue;
    const auto d = static_cast<std::size_t>(tree.depth()) + 2;
    buffer.assign(d * (d + 1) / 2, PathElement{});
    TreeShap walk{tree, values, present, model.learning_rate, out.contributions};
    walk.recurse(0, buffer.data(), 0, 1.0, 1.0, -1);
  }
  return out;
}

namespace {

double conditional_node(const Tree& tree, int node, std::span<const double> values,
                        std::span<const std::uint8_t> present,
                        std::span<const std::uint8_t> known, double scale) {
  const TreeNode& n = tree.nodes[node];
  if (n.is_leaf()) return scale * n.value;
  if (known[static_cast<std::size_t>(n.feature)]) {
    return conditional_node(tree, goes_left(n, values, present) ? n.left : n.right, values,
                            present, known, scale);
  }
  const double l = conditional_node(tree, n.left, values, present, known, scale);
  const double r = conditional_node(tree, n.right, values, present, known, scale);
  return (tree.nodes[n.left].cover * l + tree.nodes[n.right].cover * r) / n.cover;
}

}  // namespace

double conditional_expectation(const TreeEnsemble& model, std::span<const double> values,
                               std::span<const std::uint8_t> present,
                               std::span<const std::uint8_t> known) {
  double acc = model.base_score;
  for (const Tree& tree : model.trees) {
    if (!tree.nodes.empty())
      acc += conditional_node(tree, 0, values, present, known, model.learning_rate);
  }
  return acc;
}

Explanation brute_force_shap(const TreeEnsemble& model, std::span<const double> values,
                             std::span<const std::uint8_t> present) {
  check_width(model, values, present);
  const std::size_t p = values.size();
  if (p > kMaxBruteForceFeatures) {
    throw Error(Error::Kind::kInvalidArgument,
                "brute-force Shapley values need 2^P model walks; P=" + std::to_string(p) +
                    " exceeds 20. Use shap_values or select fewer features");
  }
  check_covers(model);

  const std::size_t subsets = std::size_t{1} << p;
  std::vector<double> f(subsets);
  std::vector<std::uint8_t> known(p);
  for (std::size_t s = 0; s < subsets; ++s) {
    for (std::size_t j = 0; j < p; ++j) known[j] = static_cast<std::uint8_t>((s >> j) & 1U);
    f[s] = conditional_expectation(model, values, present, known);
  }

  // |S|!(P-|S|-1)!/P! = 1 / (P * C(P-1, |S|))
  std::vector<double> weight(p == 0 ? 0 : p);
  for (std::size_t s = 0; s < weight.size(); ++s) {
    double c = 1.0;
    for (std::size_t i = 1; i <= s; ++i) c = c * static_cast<double>(p - i) / static_cast<double>(i);
    weight[s] = 1.0 / (static_cast<double>(p) * c);
  }

  Explanation out;
  out.base_value = f[0];
  out.prediction = model.predict(values, present);
  out.contributions.assign(p, 0.0);
  for (std::size_t j = 0; j < p; ++j) {
    const std::size_t bit = std::size_t{1} << j;
    double phi = 0.0;
    for (std::size_t s = 0; s < subsets; ++s) {
      if (s & bit) continue;
      phi += weight[static_cast<std::size_t>(std::popcount(s))] * (f[s | bit] - f[s]);
    }
    out.contributions[j] = phi;
  }
  return out;
}

namespace {

struct RowGather {
  std::vector<std::size_t> columns;

  void operator()(const Dataset& data, std::size_t row, std::vector<double>& v,
                  std::vector<std::uint8_t>& m) const {
    v.resize(columns.size());
    m.resize(columns.size());
    for (std::size_t j = 0; j < columns.size(); ++j) {
      m[j] = data.present(row, columns[j]) ? 1 : 0;
      v[j] = m[j] ? data.value(row, columns[j]) : 0.0;
    }
  }
};

}  // namespace

std::vector<Explanation> explain_dataset_serial(const TreeEnsemble& model, const Dataset& data) {
  const RowGather gather{model.column_map(data)};
  std::vector<Explanation> out(data.rows());
  std::vector<double> v;
  std::vector<std::uint8_t> m;
  for (std::size_t i = 0; i < data.rows(); ++i) {
    gather(data, i, v, m);
    out[i] = shap_values(model, v, m);
  }
  return out;
}

std::vector<Explanation> explain_dataset(const TreeEnsemble& model, const Dataset& data) {
  const RowGather gather{model.column_map(data)};
  check_covers(model);
  std::vector<Explanation> out(data.rows());
  kernels::parallel_for(data.rows(), [&](std::size_t i) {
    std::vector<double> v;
    std::vector<std::uint8_t> m;
    gather(data, i, v, m);
    out[i] = shap_values(model, v, m);
  });
  return out;
}

}  // namespace gazesa::shap
