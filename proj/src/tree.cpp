#include <algorithm>
#include <limits>

#include "gazesa/gbdt.hpp"

namespace gazesa::gbdt {

int Tree::leaf_index(std::span<const double> values, std::span<const std::uint8_t> present) const {
  int node = 0;
  while (!nodes[node].is_leaf()) {
    const TreeNode& n = nodes[node];
    const auto f = static_cast<std::size_t>(n.feature);
    bool go_left = n.default_left;
    if (present[f]) go_left = values[f] <= n.threshold;
    node = go_left ? n.left : n.right;
  }
  return node;
}

std::size_t Tree::num_leaves() const {
  return static_cast<std::size_t>(
      std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) { return n.is_leaf(); }));
}

int Tree::depth() const {
  if (nodes.empty()) return 0;
  std::vector<int> d(nodes.size(), 0);
  int deepest = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].is_leaf()) continue;
    d[nodes[i].left] = d[i] + 1;
    d[nodes[i].right] = d[i] + 1;
    deepest = std::max(deepest, d[i] + 1);
  }
  return deepest;
}

int GrownTree::leaf_of(const BinnedMatrix& data, std::size_t row) const {
  int node = 0;
  while (!tree.nodes[node].is_leaf()) {
    const TreeNode& n = tree.nodes[node];
    const auto f = static_cast<std::size_t>(n.feature);
    const std::uint16_t b = data.bin(row, f);
    const bool go_left = b == data.feature(f).missing_bin() ? n.default_left : b <= split_bin[node];
    node = go_left ? n.left : n.right;
  }
  return node;
}

namespace {

struct Split {
  double gain = 0.0;
  int feature = -1;
  int bin = -1;
  bool default_left = true;

  bool valid() const { return feature >= 0; }
};

struct Leaf {
  int node = 0;
  int depth = 0;
  std::vector<std::uint32_t> rows;
  double grad = 0.0;
  double hess = 0.0;
  Split best;
};

double leaf_output(double g, double h, double lambda) { return -g / (h + lambda); }

Split find_best_split(const BinnedMatrix& data, std::span<const kernels::HistogramBin> hist,
                      const Leaf& leaf, const TrainConfig& cfg) {
  Split best;
  const double lambda = cfg.lambda_l2;
  const auto min_count = static_cast<std::size_t>(std::max(cfg.min_data_in_leaf, 1));
  const std::size_t count = leaf.rows.size();
  if (count < 2 * min_count) return best;
  const double parent = leaf.grad * leaf.grad / (leaf.hess + lambda);

  for (std::size_t f = 0; f < data.features(); ++f) {
    const FeatureBins& fb = data.feature(f);
    const std::size_t nb = fb.num_bins;
    const kernels::HistogramBin* h = hist.data() + data.offset(f);
    const kernels::HistogramBin& miss = h[nb];
    double gl = 0.0, hl = 0.0;
    std::size_t cl = 0;

    auto consider = [&](double g_left, double h_left, std::size_t c_left, int bin,
                        bool default_left) {
      const std::size_t c_right = count - c_left;
      if (c_left < min_count || c_right < min_count) return;
      const double g_right = leaf.grad - g_left;
      const double h_right = leaf.hess - h_left;
      const double gain = 0.5 * (g_left * g_left / (h_left + lambda) +
                                 g_right * g_right / (h_right + lambda) - parent);
      if (gain > best.gain) {
        best = {gain, static_cast<int>(f), bin, default_left};
      }
    };

    for (std::size_t b = 0; b < nb; ++b) {
      gl += h[b].grad;
      hl += h[b].hess;
      cl += h[b].count;
      const int bin = static_cast<int>(b);
      if (b + 1 < nb) {
        if (miss.count == 0) {
          consider(gl, hl, cl, bin, true);
        } else {
          consider(gl + miss.grad, hl + miss.hess, cl + miss.count, bin, true);
          consider(gl, hl, cl, bin, false);
        }
      } else if (miss.count > 0 && cl > 0) {
        consider(gl, hl, cl, bin, false);
      }
    }
  }
  return best;
}

}  // namespace

GrownTree grow_tree(const BinnedMatrix& data, const GossSample& sample,
                    std::span<const double> grad, std::span<const double> hess,
                    const TrainConfig& config) {
  const std::size_t n = data.rows();
  std::vector<double> wg(n, 0.0), wh(n, 0.0);
  for (std::size_t i = 0; i < sample.indices.size(); ++i) {
    const std::uint32_t r = sample.indices[i];
    wg[r] = grad[r] * sample.weights[i];
    wh[r] = hess[r] * sample.weights[i];
  }

  GrownTree out;
  std::vector<kernels::HistogramBin> hist(data.histogram_size());
  const kernels::BinnedView view = data.view();

  auto prepare = [&](Leaf& leaf) {
    leaf.grad = 0.0;
    leaf.hess = 0.0;
    for (std::uint32_t r : leaf.rows) {
      leaf.grad += wg[r];
      leaf.hess += wh[r];
    }
    TreeNode& node = out.tree.nodes[leaf.node];
    node.value = leaf_output(leaf.grad, leaf.hess, config.lambda_l2);
    node.cover = static_cast<double>(leaf.rows.size());
    const bool depth_ok = config.max_depth <= 0 || leaf.depth < config.max_depth;
    if (depth_ok && leaf.rows.size() >= 2) {
      kernels::node_histogram_parallel(view, leaf.rows, wg, wh, hist);
      leaf.best = find_best_split(data, hist, leaf, config);
    }
  };

  out.tree.nodes.emplace_back();
  out.split_bin.push_back(-1);
  std::vector<Leaf> leaves(1);
  leaves[0].rows = sample.indices;
  prepare(leaves[0]);

  const auto max_leaves = static_cast<std::size_t>(std::max(config.num_leaves, 1));
  while (leaves.size() < max_leaves) {
    std::size_t pick = leaves.size();
    for (std::size_t i = 0; i < leaves.size(); ++i) {
      if (!leaves[i].best.valid()) continue;
      if (pick == leaves.size() || leaves[i].best.gain > leaves[pick].best.gain) pick = i;
    }
    if (pick == leaves.size()) break;

    Leaf parent = std::move(leaves[pick]);
    const Split s = parent.best;
    const auto f = static_cast<std::size_t>(s.feature);
    const FeatureBins& fb = data.feature(f);

    Leaf left, right;
    left.depth = right.depth = parent.depth + 1;
    for (std::uint32_t r : parent.rows) {
      const std::uint16_t b = data.bin(r, f);
      const bool go_left = b == fb.missing_bin() ? s.default_left : b <= s.bin;
      (go_left ? left.rows : right.rows).push_back(r);
    }

    left.node = static_cast<int>(out.tree.nodes.size());
    right.node = left.node + 1;
    out.tree.nodes.emplace_back();
    out.tree.nodes.emplace_back();
    out.split_bin.push_back(-1);
    out.split_bin.push_back(-1);

    TreeNode& node = out.tree.nodes[parent.node];
    node.feature = s.feature;
    node.threshold = static_cast<std::size_t>(s.bin) + 1 < fb.num_bins
                         ? fb.thresholds[static_cast<std::size_t>(s.bin)]
                         : std::numeric_limits<double>::max();
    node.default_left = s.default_left;
    node.left = left.node;
    node.right = right.node;
    out.split_bin[parent.node] = s.bin;

    prepare(left);
    prepare(right);
    leaves[pick] = std::move(left);
    leaves.push_back(std::move(right));
  }
  return out;
}

}  // namespace gazesa::gbdt
