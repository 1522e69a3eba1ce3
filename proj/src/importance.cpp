#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <set>

#include "gazesa/csv.hpp"
#include "gazesa/error.hpp"
#include "gazesa/features.hpp"
#include "gazesa/shap.hpp"

namespace gazesa::shap {

using csv::format_double;
using csv::write_double;

namespace {

std::vector<std::size_t> data_columns(const Dataset& data, std::span<const std::string> features) {
  std::vector<std::size_t> cols;
  cols.reserve(features.size());
  for (const auto& name : features) {
    const auto idx = data.feature_index(name);
    if (!idx) throw Error(Error::Kind::kRegistry, "dataset has no column '" + name + "'");
    cols.push_back(*idx);
  }
  return cols;
}

void check_aligned(std::span<const Explanation> explanations, const Dataset& data,
                   std::span<const std::string> features) {
  if (explanations.size() != data.rows()) {
    throw Error(Error::Kind::kInvalidArgument,
                std::to_string(explanations.size()) + " explanations for " +
                    std::to_string(data.rows()) + " rows");
  }
  for (const auto& e : explanations) {
    if (e.contributions.size() != features.size())
      throw Error(Error::Kind::kInvalidArgument, "explanation width does not match features");
  }
}

void write_optional(std::ostream& out, const std::optional<double>& v) {
  if (v) write_double(out, *v);
}

}  // namespace

std::vector<std::string> ImportanceTable::ranking() const {
  std::vector<std::string> names(entries.size());
  for (const auto& e : entries) names[static_cast<std::size_t>(e.rank - 1)] = e.feature;
  return names;
}

ImportanceTable global_importance(std::span<const Explanation> explanations, const Dataset& data,
                                  std::span<const std::string> features) {
  check_aligned(explanations, data, features);
  const auto cols = data_columns(data, features);
  ImportanceTable table;
  table.entries.resize(features.size());
  for (std::size_t p = 0; p < features.size(); ++p) {
    auto& e = table.entries[p];
    e.feature = features[p];
    e.scatter.reserve(explanations.size());
    for (std::size_t i = 0; i < explanations.size(); ++i) {
      const double phi = explanations[i].contributions[p];
      e.impact += std::abs(phi);
      e.scatter.push_back({data.cell(i, cols[p]), phi});
    }
  }
  std::vector<std::size_t> order(features.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return table.entries[a].impact > table.entries[b].impact;
  });
  for (std::size_t r = 0; r < order.size(); ++r) table.entries[order[r]].rank = static_cast<int>(r + 1);
  return table;
}

ImportanceTable global_importance(const gbdt::TreeEnsemble& model, const Dataset& data) {
  const auto explanations = explain_dataset(model, data);
  return global_importance(explanations, data, model.feature_names);
}

std::vector<MainEffect> main_effects(std::span<const Explanation> explanations,
                                     const Dataset& data, std::span<const std::string> features,
                                     const EffectOptions& options) {
  check_aligned(explanations, data, features);
  const auto cols = data_columns(data, features);
  std::vector<MainEffect> effects(features.size());

  for (std::size_t p = 0; p < features.size(); ++p) {
    MainEffect& me = effects[p];
    me.feature = features[p];
    me.kind = feature_kind(features[p]);

    std::vector<double> x, phi, missing_phi;
    for (std::size_t i = 0; i < data.rows(); ++i) {
      const double s = explanations[i].contributions[p];
      if (data.present(i, cols[p])) {
        x.push_back(data.value(i, cols[p]));
        phi.push_back(s);
      } else {
        missing_phi.push_back(s);
      }
    }

    if (!x.empty()) {
      std::vector<std::size_t> bin_of(x.size());
      std::size_t nbins = 0;
      if (me.kind == FeatureKind::kNominal) {
        const std::set<double> levels(x.begin(), x.end());
        const std::vector<double> lv(levels.begin(), levels.end());
        nbins = lv.size();
        for (std::size_t i = 0; i < x.size(); ++i)
          bin_of[i] = static_cast<std::size_t>(std::lower_bound(lv.begin(), lv.end(), x[i]) - lv.begin());
      } else {
        int bins = options.continuous_bins;
        if (auto it = options.bins_by_feature.find(me.feature); it != options.bins_by_feature.end())
          bins = it->second;
        if (bins < 1) throw Error(Error::Kind::kInvalidArgument, "bin count must be positive");
        const auto fb = gbdt::make_bins(x, bins);
        nbins = fb.num_bins;
        for (std::size_t i = 0; i < x.size(); ++i) bin_of[i] = fb.bin_of(x[i]);
      }
      std::vector<std::vector<double>> members(nbins), values(nbins);
      for (std::size_t i = 0; i < x.size(); ++i) {
        members[bin_of[i]].push_back(phi[i]);
        values[bin_of[i]].push_back(x[i]);
      }
      for (std::size_t b = 0; b < nbins; ++b) {
        if (members[b].empty()) continue;
        EffectBin bin;
        const auto [lo, hi] = std::minmax_element(values[b].begin(), values[b].end());
        bin.lo = *lo;
        bin.hi = *hi;
        bin.count = members[b].size();
        bin.shap = stats::five_number(std::move(members[b]));
        me.bins.push_back(bin);
      }
      me.correlation =
          me.kind == FeatureKind::kNominal ? stats::spearman(x, phi) : stats::pearson(x, phi);
    } else {
      me.empty = true;
    }

    if (!missing_phi.empty()) {
      EffectBin bin;
      bin.missing = true;
      bin.count = missing_phi.size();
      bin.shap = stats::five_number(std::move(missing_phi));
      me.bins.push_back(bin);
    }
  }
  return effects;
}

InstanceReport make_report(const Explanation& e, std::span<const std::string> features,
                           std::span<const double> values, std::span<const std::uint8_t> present) {
  InstanceReport report;
  report.base_value = e.base_value;
  report.prediction = e.prediction;
  std::vector<std::size_t> order;
  for (std::size_t p = 0; p < e.contributions.size(); ++p) {
    if (e.contributions[p] != 0.0) order.push_back(p);
  }
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::abs(e.contributions[a]) > std::abs(e.contributions[b]);
  });
  for (const std::size_t p : order) {
    report.contributions.push_back(
        {features[p], present[p] ? std::optional<double>(values[p]) : std::nullopt,
         e.contributions[p]});
  }
  for (const double c : e.contributions) report.contribution_sum += c;
  return report;
}

InstanceReport explain_instance(const gbdt::TreeEnsemble& model, std::span<const double> values,
                                std::span<const std::uint8_t> present) {
  return make_report(shap_values(model, values, present), model.feature_names, values, present);
}

InstanceReport explain_instance(const gbdt::TreeEnsemble& model, const Dataset& data,
                                std::size_t row) {
  const auto cols = model.column_map(data);
  std::vector<double> v(cols.size());
  std::vector<std::uint8_t> m(cols.size());
  for (std::size_t j = 0; j < cols.size(); ++j) {
    m[j] = data.present(row, cols[j]) ? 1 : 0;
    v[j] = m[j] ? data.value(row, cols[j]) : 0.0;
  }
  return explain_instance(model, v, m);
}

void print_report(std::ostream& out, const InstanceReport& report) {
  out << "base value  " << format_double(report.base_value) << '\n';
  for (const auto& c : report.contributions) {
    out << (c.shap > 0 ? "  + " : "  - ") << c.feature << " = "
        << (c.value ? format_double(*c.value) : std::string("NA")) << "  "
        << format_double(c.shap) << '\n';
  }
  out << "prediction  " << format_double(report.prediction) << '\n';
  const double diff = report.base_value + report.contribution_sum - report.prediction;
  out << "sum check   base + sum(shap) - prediction = " << format_double(diff) << '\n';
}

void write_report_csv(std::ostream& out, const InstanceReport& report) {
  out << "feature,value,shap\n";
  out << "(base),,";
  write_double(out, report.base_value);
  out << '\n';
  for (const auto& c : report.contributions) {
    out << c.feature << ',';
    write_optional(out, c.value);
    out << ',';
    write_double(out, c.shap);
    out << '\n';
  }
  out << "(prediction),,";
  write_double(out, report.prediction);
  out << '\n';
}

void write_shap_csv(std::ostream& out, std::span<const Explanation> explanations,
                    const Dataset& data, std::span<const std::string> features) {
  check_aligned(explanations, data, features);
  const auto cols = data_columns(data, features);
  out << "instance,participant_id,trial_id,feature,value,shap\n";
  for (std::size_t i = 0; i < explanations.size(); ++i) {
    const auto& key = data.key(i);
    for (std::size_t p = 0; p < features.size(); ++p) {
      out << i << ',' << key.participant_id << ',' << key.trial_id << ',' << features[p] << ',';
      write_optional(out, data.cell(i, cols[p]));
      out << ',';
      write_double(out, explanations[i].contributions[p]);
      out << '\n';
    }
  }
}

void write_importance_csv(std::ostream& out, const ImportanceTable& table) {
  std::vector<const ImportanceEntry*> sorted;
  for (const auto& e : table.entries) sorted.push_back(&e);
  std::sort(sorted.begin(), sorted.end(),
            [](const ImportanceEntry* a, const ImportanceEntry* b) { return a->rank < b->rank; });
  out << "feature,impact,rank\n";
  for (const auto* e : sorted) {
    out << e->feature << ',';
    write_double(out, e->impact);
    out << ',' << e->rank << '\n';
  }
}

void write_main_effects_csv(std::ostream& out, std::span<const MainEffect> effects) {
  out << "feature,bin,lo,hi,count,min,q1,median,q3,max,method,r,p,degenerate,empty\n";
  for (const auto& me : effects) {
    const char* method = me.kind == FeatureKind::kNominal ? "spearman" : "pearson";
    std::size_t index = 0;
    for (const auto& b : me.bins) {
      out << me.feature << ',';
      if (b.missing) {
        out << "missing,,";
      } else {
        out << index++ << ',';
        write_double(out, b.lo);
        out << ',';
        write_double(out, b.hi);
      }
      out << ',' << b.count;
      for (const double v : {b.shap.min, b.shap.q1, b.shap.median, b.shap.q3, b.shap.max}) {
        out << ',';
        write_double(out, v);
      }
      out << ',' << method << ',';
      write_double(out, me.correlation.r);
      out << ',';
      write_double(out, me.correlation.p_value);
      out << ',' << (me.correlation.degenerate ? 1 : 0) << ',' << (me.empty ? 1 : 0) << '\n';
    }
  }
}

void write_importance_svg(std::ostream& out, const ImportanceTable& table) {
  const auto names = table.ranking();
  double top = 0.0;
  for (const auto& e : table.entries) top = std::max(top, e.impact);
  const int row_h = 22, label_w = 200, bar_w = 420, pad = 10;
  const int height = pad * 2 + row_h * static_cast<int>(names.size());
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << label_w + bar_w + 120
      << "\" height=\"" << height << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  for (std::size_t r = 0; r < names.size(); ++r) {
    const auto it = std::find_if(table.entries.begin(), table.entries.end(),
                                 [&](const ImportanceEntry& e) { return e.feature == names[r]; });
    const double w = top > 0 ? bar_w * it->impact / top : 0.0;
    const int y = pad + row_h * static_cast<int>(r);
    out << "  <text x=\"" << label_w - 6 << "\" y=\"" << y + 15 << "\" text-anchor=\"end\">"
        << names[r] << "</text>\n";
    out << "  <rect x=\"" << label_w << "\" y=\"" << y + 3 << "\" width=\"" << w
        << "\" height=\"" << row_h - 6 << "\" fill=\"#3b75af\"/>\n";
    out << "  <text x=\"" << label_w + w + 4 << "\" y=\"" << y + 15 << "\">"
        << format_double(std::round(it->impact * 1000) / 1000) << "</text>\n";
  }
  out << "</svg>\n";
}

}  // namespace gazesa::shap
