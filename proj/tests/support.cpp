#include "support.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>

#include <unistd.h>

namespace gazesa::testing {

std::size_t samples_for_ms(double ms) { return static_cast<std::size_t>(std::llround(ms * 2.0)); }

void Trace::push(double x, double y, bool valid) {
  GazeSample s;
  s.t = static_cast<double>(samples_.size()) / 2000.0;
  s.x = x;
  s.y = y;
  s.valid = valid;
  s.pupil_area = valid ? area_ : 0.0;
  samples_.push_back(s);
}

Trace& Trace::hold(double ms, double x, double y) {
  x_ = x;
  y_ = y;
  for (std::size_t i = 0; i < samples_for_ms(ms); ++i) push(x, y, true);
  return *this;
}

Trace& Trace::move(double ms, double x, double y) {
  const std::size_t n = samples_for_ms(ms);
  const double x0 = x_, y0 = y_;
  for (std::size_t j = 1; j <= n; ++j) {
    const double f = static_cast<double>(j) / static_cast<double>(n);
    push(j == n ? x : x0 + f * (x - x0), j == n ? y : y0 + f * (y - y0), true);
  }
  x_ = x;
  y_ = y;
  return *this;
}

Trace& Trace::lost(double ms) {
  for (std::size_t i = 0; i < samples_for_ms(ms); ++i) push(x_, y_, false);
  return *this;
}

gbdt::Tree random_tree(Rng& rng, int num_features, int max_depth) {
  gbdt::Tree tree;
  std::function<int(int, double)> build = [&](int depth, double cover) -> int {
    const int index = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    tree.nodes[index].cover = cover;
    const bool leaf = depth >= max_depth || cover < 2.0 || (depth > 0 && rng.bernoulli(0.3));
    if (leaf) {
      tree.nodes[index].value = rng.uniform(-1.0, 1.0);
      return index;
    }
    const double left_cover = static_cast<double>(rng.range(1, static_cast<long long>(cover) - 1));
    tree.nodes[index].feature = static_cast<int>(rng.below(static_cast<std::uint64_t>(num_features)));
    tree.nodes[index].threshold = rng.uniform(0.1, 0.9);
    tree.nodes[index].default_left = rng.bernoulli(0.5);
    const int l = build(depth + 1, left_cover);
    const int r = build(depth + 1, cover - left_cover);
    tree.nodes[index].left = l;
    tree.nodes[index].right = r;
    return index;
  };
  build(0, static_cast<double>(rng.range(20, 400)));
  return tree;
}

gbdt::TreeEnsemble random_ensemble(Rng& rng, int num_features, int max_trees, int max_depth) {
  gbdt::TreeEnsemble model;
  for (int j = 0; j < num_features; ++j) model.feature_names.push_back("f" + std::to_string(j));
  model.base_score = rng.uniform(0.0, 1.0);
  model.learning_rate = rng.uniform(0.05, 1.0);
  const int trees = static_cast<int>(rng.range(1, max_trees));
  for (int t = 0; t < trees; ++t) model.trees.push_back(random_tree(rng, num_features, max_depth));
  return model;
}

Instance random_instance(Rng& rng, int num_features, double present_rate) {
  Instance in;
  for (int j = 0; j < num_features; ++j) {
    const bool p = rng.bernoulli(present_rate);
    in.present.push_back(p ? 1 : 0);
    in.values.push_back(p ? rng.uniform() : 0.0);
  }
  return in;
}

TempDir::TempDir() {
  static int counter = 0;
  const auto base = std::filesystem::temp_directory_path() /
                    ("gazesa_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
  std::filesystem::remove_all(base);
  std::filesystem::create_directories(base);
  path_ = base.string();
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace gazesa::testing
