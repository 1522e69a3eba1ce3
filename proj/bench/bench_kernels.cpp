// Serial reference vs OpenMP kernels. Usage: gazesa_bench [repeats]

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <string>
#include <vector>

#include "gazesa/gbdt.hpp"
#include "gazesa/kernels.hpp"
#include "gazesa/rng.hpp"
#include "gazesa/shap.hpp"

using namespace gazesa;

namespace {

double best_ms(int repeats, const std::function<void()>& fn) {
  double best = 1e300;
  for (int r = 0; r < repeats; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    if (ms < best) best = ms;
  }
  return best;
}

void report(const char* name, double serial, double parallel, bool same) {
  std::printf("%-26s %10.3f %10.3f %8.2fx  %s\n", name, serial, parallel, serial / parallel,
              same ? "identical" : "DIFFERENT");
}

}  // namespace

int main(int argc, char** argv) {
  const int repeats = argc > 1 ? std::atoi(argv[1]) : 5;
  std::printf("threads: %d\n", kernels::max_threads());
  std::printf("%-26s %10s %10s %9s\n", "kernel", "serial ms", "omp ms", "speedup");

  Rng rng(1);
  const std::size_t n = 40000;  // 20 s trial at 2 kHz
  std::vector<double> values(n);
  std::vector<std::uint8_t> mask(n);
  for (std::size_t i = 0; i < n; ++i) {
    values[i] = 12.0 + rng.normal();
    mask[i] = rng.bernoulli(0.97) ? 1 : 0;
  }
  std::vector<double> a(n), b(n);
  const double mm_s = best_ms(repeats, [&] { kernels::moving_mean_serial(values, mask, 100, a); });
  const double mm_p = best_ms(repeats, [&] { kernels::moving_mean_parallel(values, mask, 100, b); });
  report("moving mean (40k, w=100)", mm_s, mm_p, a == b);
  const double md_s = best_ms(repeats, [&] { kernels::moving_median_serial(values, mask, 100, a); });
  const double md_p = best_ms(repeats, [&] { kernels::moving_median_parallel(values, mask, 100, b); });
  report("moving median (40k, w=100)", md_s, md_p, a == b);

  const std::size_t rows = 20000, features = 28;
  std::vector<std::size_t> offsets = {0};
  std::vector<std::uint16_t> bins(rows * features);
  for (std::size_t f = 0; f < features; ++f) {
    offsets.push_back(offsets.back() + 256);
    for (std::size_t r = 0; r < rows; ++r) bins[f * rows + r] = static_cast<std::uint16_t>(rng.below(256));
  }
  std::vector<double> grad(rows), hess(rows, 1.0);
  for (double& g : grad) g = rng.normal();
  std::vector<std::uint32_t> subset;
  for (std::uint32_t r = 0; r < rows; r += 2) subset.push_back(r);
  const kernels::BinnedView view{bins, rows, offsets};
  std::vector<kernels::HistogramBin> ha(offsets.back()), hb(offsets.back());
  const double h_s = best_ms(repeats, [&] { kernels::node_histogram_serial(view, subset, grad, hess, ha); });
  const double h_p = best_ms(repeats, [&] { kernels::node_histogram_parallel(view, subset, grad, hess, hb); });
  bool same = true;
  for (std::size_t i = 0; i < ha.size(); ++i) same = same && ha[i].grad == hb[i].grad && ha[i].count == hb[i].count;
  report("histogram (10k x 28)", h_s, h_p, same);

  std::vector<std::string> names;
  for (int j = 0; j < 16; ++j) names.push_back("x" + std::to_string(j));
  Dataset data(names);
  for (int i = 0; i < 1056; ++i) {
    std::vector<std::optional<double>> v(16);
    double y = 0.0;
    for (int j = 0; j < 16; ++j) {
      v[j] = rng.uniform();
      y += (j % 3 == 0 ? 0.1 : -0.05) * *v[j];
    }
    data.add_row({"p", std::to_string(i)}, v, y);
  }
  gbdt::TrainConfig cfg;
  cfg.num_boost_round = 300;
  const auto model = gbdt::fit(data, cfg).model;
  std::vector<shap::Explanation> ea, eb;
  const double s_s = best_ms(repeats, [&] { ea = shap::explain_dataset_serial(model, data); });
  const double s_p = best_ms(repeats, [&] { eb = shap::explain_dataset(model, data); });
  same = ea.size() == eb.size();
  for (std::size_t i = 0; same && i < ea.size(); ++i) same = ea[i].contributions == eb[i].contributions;
  report("TreeSHAP (1056 rows)", s_s, s_p, same);
  return 0;
}
