#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace gazesa::stats {

double mean(std::span<const double> values);

// Sample (n-1) standard deviation; nullopt when fewer than two values.
std::optional<double> sample_sd(std::span<const double> values);

// Mean computed as first + sum(x - first) / n, which returns the input exactly
// whenever all values are equal.
double anchored_mean(std::span<const double> values);

// Linear-interpolation quantile (R type 7) of already sorted values.
double sorted_quantile(std::span<const double> sorted, double q);

struct FiveNumber {
  double min = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double max = 0.0;
};
FiveNumber five_number(std::vector<double> values);

struct Correlation {
  double r = 0.0;
  double p_value = 1.0;
  bool degenerate = true;  // either side had zero variance (r reported as 0)
};

Correlation pearson(std::span<const double> x, std::span<const double> y);
// Pearson correlation of average ranks.
Correlation spearman(std::span<const double> x, std::span<const double> y);

// Average ranks (1-based), ties share the mean of their positions.
std::vector<double> average_ranks(std::span<const double> values);

// Two-sided p-value of r under H0: rho = 0, via the t approximation with n-2 dof.
double correlation_p_value(double r, std::size_t n);

}  // namespace gazesa::stats
