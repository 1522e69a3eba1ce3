#include "gazesa/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include "gazesa/csv.hpp"
#include "gazesa/error.hpp"

namespace gazesa {

Dataset::Dataset(std::vector<std::string> feature_names) : names_(std::move(feature_names)) {}

Dataset Dataset::from_records(std::span<const TrialRecord> records) {
  Dataset data(predictor_names());
  for (const auto& r : records) data.add_row({r.participant_id, r.trial_id}, r.values, r.sa);
  return data;
}

void Dataset::add_row(RowKey key, std::span<const std::optional<double>> values,
                      std::optional<double> label) {
  if (values.size() != names_.size()) {
    throw Error(Error::Kind::kValidation, "row width does not match the feature registry");
  }
  if (!seen_.insert(key).second) {
    throw Error(Error::Kind::kValidation, "duplicate (participant_id, trial_id) = (" +
                                              key.participant_id + ", " + key.trial_id + ")");
  }
  keys_.push_back(std::move(key));
  for (const auto& v : values) {
    values_.push_back(v.value_or(0.0));
    mask_.push_back(v.has_value() ? 1 : 0);
  }
  labels_.push_back(label);
}

std::optional<std::size_t> Dataset::feature_index(std::string_view name) const {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (names_[i] == name) return i;
  }
  return std::nullopt;
}

std::optional<double> Dataset::cell(std::size_t row, std::size_t f) const {
  if (!present(row, f)) return std::nullopt;
  return value(row, f);
}

std::span<const double> Dataset::row_values(std::size_t row) const {
  return std::span<const double>(values_).subspan(row * names_.size(), names_.size());
}

std::span<const std::uint8_t> Dataset::row_mask(std::size_t row) const {
  return std::span<const std::uint8_t>(mask_).subspan(row * names_.size(), names_.size());
}

bool Dataset::fully_labeled() const {
  return std::all_of(labels_.begin(), labels_.end(), [](const auto& l) { return l.has_value(); });
}

std::vector<double> Dataset::label_vector() const {
  std::vector<double> out;
  out.reserve(labels_.size());
  for (std::size_t r = 0; r < labels_.size(); ++r) {
    if (!labels_[r]) throw Error(Error::Kind::kValidation, "row has no sa label", {}, r + 1, "sa");
    out.push_back(*labels_[r]);
  }
  return out;
}

std::vector<double> Dataset::column(std::size_t f) const {
  std::vector<double> out(rows());
  for (std::size_t r = 0; r < rows(); ++r) out[r] = value(r, f);
  return out;
}

Dataset Dataset::select_features(std::span<const std::string> names) const {
  std::vector<std::size_t> idx;
  for (const auto& n : names) {
    const auto i = feature_index(n);
    if (!i) throw Error(Error::Kind::kRegistry, "unknown feature '" + n + "'");
    idx.push_back(*i);
  }
  Dataset out(std::vector<std::string>(names.begin(), names.end()));
  std::vector<std::optional<double>> row(idx.size());
  for (std::size_t r = 0; r < rows(); ++r) {
    for (std::size_t j = 0; j < idx.size(); ++j) row[j] = cell(r, idx[j]);
    out.add_row(keys_[r], row, labels_[r]);
  }
  return out;
}

Dataset Dataset::select_rows(std::span<const std::size_t> rows_to_keep) const {
  Dataset out(names_);
  std::vector<std::optional<double>> row(names_.size());
  for (std::size_t r : rows_to_keep) {
    for (std::size_t f = 0; f < names_.size(); ++f) row[f] = cell(r, f);
    out.add_row(keys_[r], row, labels_[r]);
  }
  return out;
}

Dataset Dataset::with_labels(std::span<const double> labels) const {
  if (labels.size() != rows()) throw Error(Error::Kind::kInvalidArgument, "label count mismatch");
  Dataset out = *this;
  for (std::size_t r = 0; r < rows(); ++r) out.labels_[r] = labels[r];
  return out;
}

Dataset eye_only_view(const Dataset& data) {
  const auto eye = eye_feature_names();
  if (data.feature_names() == eye) return data;
  return data.select_features(eye);
}

Dataset read_dataset(std::istream& in, const std::string& name) {
  std::string line;
  if (!csv::next_line(in, line)) throw Error(Error::Kind::kParse, "empty dataset file", name, 1);
  const auto header = csv::split(line);

  std::optional<std::size_t> pid_col, tid_col, sa_col;
  std::vector<std::pair<std::size_t, std::size_t>> feature_cols;  // (csv column, table index)
  std::vector<std::string> seen;
  for (std::size_t c = 0; c < header.size(); ++c) {
    const std::string h(header[c]);
    if (std::find(seen.begin(), seen.end(), h) != seen.end()) {
      throw Error(Error::Kind::kParse, "duplicate column", name, 1, h);
    }
    seen.push_back(h);
    if (h == "participant_id") {
      pid_col = c;
    } else if (h == "trial_id") {
      tid_col = c;
    } else if (h == "sa") {
      sa_col = c;
    } else if (const auto idx = predictor_index(h)) {
      feature_cols.emplace_back(c, *idx);
    } else {
      throw Error(Error::Kind::kParse, "unknown column", name, 1, h);
    }
  }
  if (!pid_col) throw Error(Error::Kind::kParse, "missing column", name, 1, "participant_id");
  if (!tid_col) throw Error(Error::Kind::kParse, "missing column", name, 1, "trial_id");
  if (!sa_col) throw Error(Error::Kind::kParse, "missing column", name, 1, "sa");

  std::vector<bool> have(kNumPredictors, false);
  for (const auto& fc : feature_cols) have[fc.second] = true;
  const bool any_context = std::any_of(feature_cols.begin(), feature_cols.end(), [](const auto& fc) {
    return !predictor_table()[fc.second].eye_tracking;
  });
  for (std::size_t i = 0; i < kNumPredictors; ++i) {
    if (!have[i] && (any_context || predictor_table()[i].eye_tracking)) {
      throw Error(Error::Kind::kParse, "missing column", name, 1,
                  std::string(predictor_table()[i].name));
    }
  }
  std::sort(feature_cols.begin(), feature_cols.end(),
            [](const auto& a, const auto& b) { return a.second < b.second; });
  std::vector<std::string> names;
  for (const auto& fc : feature_cols) names.emplace_back(predictor_table()[fc.second].name);

  Dataset data(names);
  std::vector<std::optional<double>> row(names.size());
  std::size_t line_no = 1;
  while (csv::next_line(in, line)) {
    ++line_no;
    const auto fields = csv::split(line);
    if (fields.size() != header.size()) {
      throw Error(Error::Kind::kParse,
                  "expected " + std::to_string(header.size()) + " fields, got " +
                      std::to_string(fields.size()),
                  name, line_no);
    }
    for (std::size_t j = 0; j < feature_cols.size(); ++j) {
      const auto field = fields[feature_cols[j].first];
      if (field.empty()) {
        row[j].reset();
        continue;
      }
      const auto v = csv::parse_double(field);
      if (!v || !std::isfinite(*v)) {
        throw Error(Error::Kind::kParse, "non-numeric cell", name, line_no, names[j]);
      }
      row[j] = *v;
    }
    std::optional<double> label;
    if (!fields[*sa_col].empty()) {
      label = csv::parse_double(fields[*sa_col]);
      if (!label || !std::isfinite(*label)) {
        throw Error(Error::Kind::kParse, "non-numeric cell", name, line_no, "sa");
      }
    }
    RowKey key{std::string(fields[*pid_col]), std::string(fields[*tid_col])};
    if (key.participant_id.empty() || key.trial_id.empty()) {
      throw Error(Error::Kind::kParse, "empty row key", name, line_no,
                  key.participant_id.empty() ? "participant_id" : "trial_id");
    }
    try {
      data.add_row(std::move(key), row, label);
    } catch (const Error& e) {
      throw Error(Error::Kind::kValidation, e.message(), name, line_no, "trial_id");
    }
  }
  return data;
}

Dataset load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Error::Kind::kIo, "cannot open dataset", path);
  return read_dataset(in, path);
}

void write_dataset(std::ostream& out, const Dataset& data) {
  out << "participant_id,trial_id";
  for (const auto& n : data.feature_names()) out << ',' << n;
  out << ",sa\n";
  for (std::size_t r = 0; r < data.rows(); ++r) {
    out << data.key(r).participant_id << ',' << data.key(r).trial_id;
    for (std::size_t f = 0; f < data.features(); ++f) {
      out << ',';
      if (data.present(r, f)) csv::write_double(out, data.value(r, f));
    }
    out << ',';
    if (data.label(r)) csv::write_double(out, *data.label(r));
    out << '\n';
  }
}

void save_dataset(const std::string& path, const Dataset& data) {
  std::ofstream out(path);
  if (!out) throw Error(Error::Kind::kIo, "cannot write dataset", path);
  write_dataset(out, data);
}

}  // namespace gazesa
