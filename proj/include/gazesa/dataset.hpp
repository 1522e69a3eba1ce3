#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gazesa/features.hpp"

namespace gazesa {

struct RowKey {
  std::string participant_id;
  std::string trial_id;
  auto operator<=>(const RowKey&) const = default;
};

// Row-major feature matrix with an explicit presence mask. Masked cells hold
// 0.0 in the value array and are never read as numbers.
class Dataset {
 public:
  Dataset() = default;
  explicit Dataset(std::vector<std::string> feature_names);

  static Dataset from_records(std::span<const TrialRecord> records);

  // Throws Error(kValidation) on a duplicate key or a width mismatch.
  void add_row(RowKey key, std::span<const std::optional<double>> values,
               std::optional<double> label);

  std::size_t rows() const { return keys_.size(); }
  std::size_t features() const { return names_.size(); }
  const std::vector<std::string>& feature_names() const { return names_; }
  std::optional<std::size_t> feature_index(std::string_view name) const;

  const RowKey& key(std::size_t row) const { return keys_[row]; }
  double value(std::size_t row, std::size_t f) const { return values_[row * names_.size() + f]; }
  bool present(std::size_t row, std::size_t f) const { return mask_[row * names_.size() + f] != 0; }
  std::optional<double> cell(std::size_t row, std::size_t f) const;
  std::span<const double> row_values(std::size_t row) const;
  std::span<const std::uint8_t> row_mask(std::size_t row) const;
  std::optional<double> label(std::size_t row) const { return labels_[row]; }
  void set_label(std::size_t row, std::optional<double> label) { labels_[row] = label; }

  bool fully_labeled() const;
  // Throws Error(kValidation) if any row is unlabeled.
  std::vector<double> label_vector() const;
  std::vector<double> column(std::size_t f) const;  // masked cells as 0.0

  Dataset select_features(std::span<const std::string> names) const;
  Dataset select_rows(std::span<const std::size_t> rows) const;
  // Copy with labels replaced.
  Dataset with_labels(std::span<const double> labels) const;

  friend bool operator==(const Dataset&, const Dataset&) = default;

 private:
  std::vector<std::string> names_;
  std::vector<RowKey> keys_;
  std::vector<double> values_;
  std::vector<std::uint8_t> mask_;
  std::vector<std::optional<double>> labels_;
  std::set<RowKey> seen_;
};

// The 16 eye-tracking columns, in table order. Idempotent.
Dataset eye_only_view(const Dataset& data);

// CSV: participant_id, trial_id, the table names, sa. Empty field = masked.
// The header must carry either all 28 table names or exactly the 16
// eye-tracking ones, in any order.
Dataset read_dataset(std::istream& in, const std::string& name = "<stream>");
Dataset load_dataset(const std::string& path);
void write_dataset(std::ostream& out, const Dataset& data);
void save_dataset(const std::string& path, const Dataset& data);

}  // namespace gazesa
