#include "gazesa/model_io.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "gazesa/error.hpp"

namespace gazesa::gbdt {

nlohmann::ordered_json config_to_json(const TrainConfig& c) {
  nlohmann::ordered_json j;
  j["num_leaves"] = c.num_leaves;
  j["learning_rate"] = c.learning_rate;
  j["num_boost_round"] = c.num_boost_round;
  j["early_stopping_rounds"] = c.early_stopping_rounds;
  j["top_rate"] = c.top_rate;
  j["other_rate"] = c.other_rate;
  j["max_bin"] = c.max_bin;
  j["lambda_l2"] = c.lambda_l2;
  j["min_data_in_leaf"] = c.min_data_in_leaf;
  j["max_depth"] = c.max_depth;
  j["validation_fraction"] = c.validation_fraction;
  j["seed"] = c.seed;
  return j;
}

TrainConfig config_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw Error(Error::Kind::kParse, "config must be a JSON object");
  TrainConfig c;
  static const std::set<std::string> kKeys = {
      "num_leaves", "learning_rate",    "num_boost_round", "early_stopping_rounds",
      "top_rate",   "other_rate",       "max_bin",         "lambda_l2",
      "min_data_in_leaf", "max_depth",  "validation_fraction", "seed"};
  for (const auto& [key, _] : doc.items()) {
    if (!kKeys.count(key)) throw Error(Error::Kind::kParse, "unknown config key", {}, {}, key);
  }
  try {
    auto get = [&](const char* key, auto& target) {
      if (doc.contains(key)) doc.at(key).get_to(target);
    };
    get("num_leaves", c.num_leaves);
    get("learning_rate", c.learning_rate);
    get("num_boost_round", c.num_boost_round);
    get("early_stopping_rounds", c.early_stopping_rounds);
    get("top_rate", c.top_rate);
    get("other_rate", c.other_rate);
    get("max_bin", c.max_bin);
    get("lambda_l2", c.lambda_l2);
    get("min_data_in_leaf", c.min_data_in_leaf);
    get("max_depth", c.max_depth);
    get("validation_fraction", c.validation_fraction);
    get("seed", c.seed);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Error::Kind::kParse, std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

TrainConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Error::Kind::kIo, "cannot open config", path);
  try {
    return config_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw Error(Error::Kind::kParse, e.what(), path);
  } catch (const Error& e) {
    throw e.with_file(path);
  }
}

nlohmann::ordered_json model_to_json(const TreeEnsemble& model) {
  nlohmann::ordered_json j;
  j["format"] = "gazesa-gbdt";
  j["version"] = kModelFormatVersion;
  j["config"] = config_to_json(model.config);
  j["features"] = model.feature_names;
  j["base_score"] = model.base_score;
  j["learning_rate"] = model.learning_rate;
  j["trees"] = nlohmann::ordered_json::array();
  for (const Tree& t : model.trees) {
    nlohmann::ordered_json tj;
    std::vector<int> feature, left, right;
    std::vector<double> threshold, value, cover;
    std::vector<bool> default_left;
    for (const TreeNode& n : t.nodes) {
      feature.push_back(n.feature);
      threshold.push_back(n.threshold);
      default_left.push_back(n.default_left);
      left.push_back(n.left);
      right.push_back(n.right);
      value.push_back(n.value);
      cover.push_back(n.cover);
    }
    tj["feature"] = feature;
    tj["threshold"] = threshold;
    tj["default_left"] = default_left;
    tj["left"] = left;
    tj["right"] = right;
    tj["value"] = value;
    tj["cover"] = cover;
    j["trees"].push_back(std::move(tj));
  }
  return j;
}

TreeEnsemble model_from_json(const nlohmann::json& doc) {
  TreeEnsemble m;
  try {
    if (doc.at("format").get<std::string>() != "gazesa-gbdt") {
      throw Error(Error::Kind::kModel, "not a gazesa-gbdt model file");
    }
    const int version = doc.at("version").get<int>();
    if (version != kModelFormatVersion) {
      throw Error(Error::Kind::kModel, "unsupported model version " + std::to_string(version));
    }
    m.config = config_from_json(doc.at("config"));
    m.feature_names = doc.at("features").get<std::vector<std::string>>();
    m.base_score = doc.at("base_score").get<double>();
    m.learning_rate = doc.at("learning_rate").get<double>();
    const auto nf = static_cast<int>(m.feature_names.size());
    for (const auto& tj : doc.at("trees")) {
      const auto feature = tj.at("feature").get<std::vector<int>>();
      const auto threshold = tj.at("threshold").get<std::vector<double>>();
      const auto default_left = tj.at("default_left").get<std::vector<bool>>();
      const auto left = tj.at("left").get<std::vector<int>>();
      const auto right = tj.at("right").get<std::vector<int>>();
      const auto value = tj.at("value").get<std::vector<double>>();
      const auto cover = tj.at("cover").get<std::vector<double>>();
      const std::size_t n = feature.size();
      if (n == 0 || threshold.size() != n || default_left.size() != n || left.size() != n ||
          right.size() != n || value.size() != n || cover.size() != n) {
        throw Error(Error::Kind::kModel, "tree node arrays are empty or of unequal length");
      }
      Tree t;
      t.nodes.resize(n);
      for (std::size_t i = 0; i < n; ++i) {
        TreeNode& node = t.nodes[i];
        node.feature = feature[i];
        node.threshold = threshold[i];
        node.default_left = default_left[i];
        node.left = left[i];
        node.right = right[i];
        node.value = value[i];
        node.cover = cover[i];
        if (!(node.cover > 0.0)) throw Error(Error::Kind::kModel, "tree node with zero cover");
        if (node.is_leaf()) continue;
        const auto self = static_cast<int>(i);
        const auto size = static_cast<int>(n);
        if (node.feature >= nf || node.left <= self || node.right <= self || node.left >= size ||
            node.right >= size || node.left == node.right) {
          throw Error(Error::Kind::kModel, "malformed tree node " + std::to_string(i));
        }
      }
      m.trees.push_back(std::move(t));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Error::Kind::kModel, std::string("model: ") + e.what());
  }
  return m;
}

void save_model(const std::string& path, const TreeEnsemble& model) {
  std::ofstream out(path);
  if (!out) throw Error(Error::Kind::kIo, "cannot write model", path);
  out << model_to_json(model).dump(1) << '\n';
}

TreeEnsemble load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Error::Kind::kIo, "cannot open model", path);
  try {
    return model_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw Error(Error::Kind::kModel, e.what(), path);
  } catch (const Error& e) {
    throw e.with_file(path);
  }
}

}  // namespace gazesa::gbdt
