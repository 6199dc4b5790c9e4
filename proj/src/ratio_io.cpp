#include "sdre/density_ratio.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace sdre {

namespace {

using nlohmann::json;

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& rows) {
  const auto n = static_cast<Eigen::Index>(rows.size());
  const auto k = n ? static_cast<Eigen::Index>(rows.at(0).size()) : 0;
  Eigen::MatrixXd m(n, k);
  for (Eigen::Index i = 0; i < n; ++i) {
    const json& row = rows.at(static_cast<std::size_t>(i));
    if (static_cast<Eigen::Index>(row.size()) != k) throw std::runtime_error("ragged matrix");
    for (Eigen::Index j = 0; j < k; ++j) m(i, j) = row.at(static_cast<std::size_t>(j)).get<double>();
  }
  return m;
}

json vector_to_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Eigen::VectorXd vector_from_json(const json& arr) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(arr.size()));
  for (std::size_t i = 0; i < arr.size(); ++i) v(static_cast<Eigen::Index>(i)) = arr[i].get<double>();
  return v;
}

}  // namespace

std::string ratio_model_to_json(const RatioModel& model) {
  json features;
  features["kind"] = to_string(model.features.kind());
  features["n_states"] = model.features.num_states();
  features["dim"] = model.features.dim();
  if (model.features.kind() == FeatureKind::kRandomFourier) {
    features["bandwidth"] = model.features.bandwidth();
    features["seed"] = model.features.seed();
    features["omega"] = matrix_to_json(model.features.omega());
    features["phase"] = vector_to_json(model.features.phase());
    features["embedding"] = matrix_to_json(model.features.embedding());
  }
  json doc;
  doc["format"] = "sdre-ratio-model";
  doc["version"] = 1;
  doc["link"] = to_string(model.link);
  doc["clip_floor"] = model.clip_floor;
  doc["normalization"] = model.normalization;
  doc["theta"] = vector_to_json(model.theta);
  doc["features"] = std::move(features);
  return doc.dump(2) + "\n";
}

RatioModel ratio_model_from_json(const std::string& text) {
  try {
    const json doc = json::parse(text);
    if (doc.at("format").get<std::string>() != "sdre-ratio-model" ||
        doc.at("version").get<int>() != 1) {
      throw std::runtime_error("not an sdre-ratio-model version 1 document");
    }
    const json& f = doc.at("features");
    RatioModel model;
    const std::string kind = f.at("kind").get<std::string>();
    if (kind == "one_hot") {
      model.features = FeatureMap::one_hot(f.at("n_states").get<std::size_t>());
    } else if (kind == "random_fourier") {
      model.features = FeatureMap::random_fourier_from(
          matrix_from_json(f.at("embedding")), matrix_from_json(f.at("omega")),
          vector_from_json(f.at("phase")), f.at("bandwidth").get<double>(),
          f.at("seed").get<std::uint64_t>());
    } else {
      throw std::runtime_error("unknown feature kind '" + kind + "'");
    }
    model.link = parse_link(doc.at("link").get<std::string>());
    model.clip_floor = doc.at("clip_floor").get<double>();
    model.normalization = doc.at("normalization").get<double>();
    model.theta = vector_from_json(doc.at("theta"));
    if (static_cast<std::size_t>(model.theta.size()) != model.features.dim()) {
      throw std::runtime_error("theta length does not match the feature dimension");
    }
    if (!model.theta.allFinite() || !(model.normalization > 0.0)) {
      throw std::runtime_error("non-finite parameters or non-positive normalization");
    }
    return model;
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("malformed ratio model: ") + e.what());
  }
}

void save_ratio_model(const std::string& path, const RatioModel& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << ratio_model_to_json(model);
  if (!out) throw std::runtime_error("failed writing " + path);
}

RatioModel load_ratio_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return ratio_model_from_json(buf.str());
}

}  // namespace sdre
