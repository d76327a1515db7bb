#include "noisy/model_file.hpp"

#include <stdexcept>

#include "json.hpp"

namespace noisy {
namespace {

using nlohmann::json;

int label_int(Label y) { return y == Label::kNoisy ? 1 : -1; }

Label label_from(const json& j) {
  const int v = j.get<int>();
  if (v == 1) return Label::kNoisy;
  if (v == -1) return Label::kQuiet;
  throw std::runtime_error("label must be -1 or 1");
}

json matrix_json(const FeatureMatrix& m) {
  json rows = json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    rows.push_back(std::vector<double>(m.row(i).begin(), m.row(i).end()));
  }
  return rows;
}

FeatureMatrix matrix_from(const json& j, std::size_t cols) {
  FeatureMatrix m(0, cols);
  for (const auto& row : j) m.push_back(row.get<std::vector<double>>());
  return m;
}

json svm_json(const SvmModel& m) {
  json labels = json::array();
  for (Label y : m.labels) labels.push_back(label_int(y));
  return {{"c", m.c},
          {"gamma", m.gamma},
          {"bias", m.bias},
          {"dimension", m.support_vectors.cols()},
          {"support_vectors", matrix_json(m.support_vectors)},
          {"alphas", m.alphas},
          {"labels", labels}};
}

SvmModel svm_from(const json& j) {
  SvmModel m;
  m.c = j.at("c").get<double>();
  m.gamma = j.at("gamma").get<double>();
  m.bias = j.at("bias").get<double>();
  m.support_vectors =
      matrix_from(j.at("support_vectors"), j.at("dimension").get<std::size_t>());
  m.alphas = j.at("alphas").get<std::vector<double>>();
  for (const auto& y : j.at("labels")) m.labels.push_back(label_from(y));
  if (m.alphas.size() != m.size() || m.labels.size() != m.size() ||
      m.support_vectors.rows() != m.size()) {
    throw std::runtime_error("svm payload arrays differ in length");
  }
  return m;
}

// Nodes in pre-order as [feature, threshold, left, right, quiet, noisy, label].
json forest_json(const ForestModel& m) {
  json trees = json::array();
  for (const auto& tree : m.trees) {
    json nodes = json::array();
    for (const auto& n : tree.nodes) {
      nodes.push_back(json::array({n.feature, n.threshold, n.left, n.right,
                                   n.counts[0], n.counts[1],
                                   label_int(n.label)}));
    }
    trees.push_back({{"dimension", tree.dimension}, {"nodes", nodes}});
  }
  return {{"seed", m.seed}, {"tie_break", label_int(m.tie_break)},
          {"trees", trees}};
}

ForestModel forest_from(const json& j) {
  ForestModel m;
  m.seed = j.at("seed").get<std::uint64_t>();
  m.tie_break = label_from(j.at("tie_break"));
  for (const auto& t : j.at("trees")) {
    DecisionTree tree;
    tree.dimension = t.at("dimension").get<std::size_t>();
    for (const auto& n : t.at("nodes")) {
      if (n.size() != 7) throw std::runtime_error("tree node needs 7 fields");
      TreeNode node;
      node.feature = n[0].get<std::int32_t>();
      node.threshold = n[1].get<double>();
      node.left = n[2].get<std::int32_t>();
      node.right = n[3].get<std::int32_t>();
      node.counts = {n[4].get<std::size_t>(), n[5].get<std::size_t>()};
      node.label = label_from(n[6]);
      tree.nodes.push_back(node);
    }
    const auto count = static_cast<std::int32_t>(tree.nodes.size());
    for (const auto& node : tree.nodes) {
      if (node.is_leaf()) continue;
      if (node.left <= 0 || node.left >= count || node.right <= 0 ||
          node.right >= count ||
          node.feature >= static_cast<std::int32_t>(tree.dimension)) {
        throw std::runtime_error("tree node references are out of range");
      }
    }
    if (tree.nodes.empty()) throw std::runtime_error("tree without nodes");
    m.trees.push_back(std::move(tree));
  }
  if (m.trees.empty()) throw std::runtime_error("forest without trees");
  return m;
}

json counts_json(const ConfusionCounts& c) {
  return {{"tp", c.tp}, {"fp", c.fp}, {"tn", c.tn}, {"fn", c.fn}};
}

ConfusionCounts counts_from(const json& j) {
  return {j.at("tp").get<std::size_t>(), j.at("fp").get<std::size_t>(),
          j.at("tn").get<std::size_t>(), j.at("fn").get<std::size_t>()};
}

}  // namespace

Label ModelFile::predict(std::span<const double> raw_features) const {
  const auto x = preprocessor.transform(raw_features);
  if (const auto* svm = std::get_if<SvmModel>(&payload)) {
    return noisy::predict(*svm, x);
  }
  return predict_forest(std::get<ForestModel>(payload), x);
}

std::string serialize_model(const ModelFile& model) {
  const auto& p = model.preprocessor;
  json j;
  j["format_version"] = model.format_version;
  j["model_kind"] = model.is_svm() ? "svm" : "forest";
  j["expansion"] = p.expansion == Expansion::kQuadratic ? "quadratic" : "none";
  j["pipeline_order"] = p.order == PipelineOrder::kStandardizeThenExpand
                            ? "standardize-then-expand"
                            : "expand-then-standardize";
  j["standardizer"] = {{"means", p.standardizer.means},
                       {"stds", p.standardizer.stds}};
  if (const auto* svm = std::get_if<SvmModel>(&model.payload)) {
    j["svm"] = svm_json(*svm);
  } else {
    j["forest"] = forest_json(std::get<ForestModel>(model.payload));
  }
  return j.dump(1) + "\n";
}

ModelFile parse_model(std::string_view text) {
  try {
    const json j = json::parse(text);
    ModelFile m;
    m.format_version = j.at("format_version").get<int>();
    if (m.format_version != kModelFormatVersion) {
      throw std::runtime_error("unsupported format_version " +
                               std::to_string(m.format_version));
    }
    const auto expansion = j.at("expansion").get<std::string>();
    if (expansion == "quadratic") {
      m.preprocessor.expansion = Expansion::kQuadratic;
    } else if (expansion == "none") {
      m.preprocessor.expansion = Expansion::kNone;
    } else {
      throw std::runtime_error("unknown expansion '" + expansion + "'");
    }
    const auto order = j.at("pipeline_order").get<std::string>();
    if (order == "standardize-then-expand") {
      m.preprocessor.order = PipelineOrder::kStandardizeThenExpand;
    } else if (order == "expand-then-standardize") {
      m.preprocessor.order = PipelineOrder::kExpandThenStandardize;
    } else {
      throw std::runtime_error("unknown pipeline_order '" + order + "'");
    }
    const auto& s = j.at("standardizer");
    m.preprocessor.standardizer.means = s.at("means").get<std::vector<double>>();
    m.preprocessor.standardizer.stds = s.at("stds").get<std::vector<double>>();
    if (m.preprocessor.standardizer.means.size() !=
        m.preprocessor.standardizer.stds.size()) {
      throw std::runtime_error("standardizer arrays differ in length");
    }
    const auto kind = j.at("model_kind").get<std::string>();
    if (kind == "svm") {
      if (!j.contains("svm")) throw std::runtime_error("missing svm payload");
      m.payload = svm_from(j.at("svm"));
    } else if (kind == "forest") {
      if (!j.contains("forest")) throw std::runtime_error("missing forest payload");
      m.payload = forest_from(j.at("forest"));
    } else {
      throw std::runtime_error("unknown model_kind '" + kind + "'");
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("malformed model file: ") + e.what());
  }
}

std::string serialize_report(const EvalReport& r) {
  json folds = json::array();
  for (const auto& c : r.per_fold) folds.push_back(counts_json(c));
  json j = {{"model", r.model_descriptor},
            {"per_fold", folds},
            {"pooled", counts_json(r.pooled)},
            {"precision", r.precision},
            {"recall", r.recall},
            {"f1", r.f1}};
  return j.dump(2) + "\n";
}

EvalReport parse_report(std::string_view text) {
  try {
    const json j = json::parse(text);
    EvalReport r;
    r.model_descriptor = j.at("model").get<std::string>();
    for (const auto& c : j.at("per_fold")) r.per_fold.push_back(counts_from(c));
    r.pooled = counts_from(j.at("pooled"));
    r.precision = j.at("precision").get<double>();
    r.recall = j.at("recall").get<double>();
    r.f1 = j.at("f1").get<double>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("malformed report: ") + e.what());
  }
}

}  // namespace noisy
