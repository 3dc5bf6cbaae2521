#include "ecg/baselines.hpp"

namespace ecg::baselines {
namespace {

template <typename F>
auto guarded(const char* what, F&& f) {
  try {
    return f();
  } catch (const nlohmann::json::exception& e) {
    throw BaselineError(Errc::InvalidModel, std::string(what) + ": " + e.what());
  }
}

}  // namespace

nlohmann::ordered_json to_json(const LogRegModel& m) {
  return {{"kind", "logreg"},
          {"scaler", {{"mean", m.scaler.mean}, {"scale", m.scaler.scale}}},
          {"weights", m.weights},
          {"bias", m.bias}};
}

nlohmann::ordered_json to_json(const Tree& t) {
  auto nodes = nlohmann::ordered_json::array();
  for (const auto& n : t.nodes) nodes.push_back({n.feature, n.threshold, n.left, n.right, n.value});
  return {{"nodes", nodes}};
}

nlohmann::ordered_json to_json(const Forest& f) {
  auto trees = nlohmann::ordered_json::array();
  for (const auto& t : f.trees) trees.push_back(to_json(t));
  return {{"kind", "random_forest"}, {"trees", trees}};
}

nlohmann::ordered_json to_json(const Gbm& g) {
  auto trees = nlohmann::ordered_json::array();
  for (const auto& t : g.trees) trees.push_back(to_json(t));
  return {{"kind", "gbm"}, {"prior_log_odds", g.prior_log_odds}, {"trees", trees}};
}

LogRegModel logreg_from_json(const nlohmann::json& j) {
  return guarded("logreg model", [&] {
    LogRegModel m;
    m.scaler.mean = j.at("scaler").at("mean").get<std::vector<double>>();
    m.scaler.scale = j.at("scaler").at("scale").get<std::vector<double>>();
    m.weights = j.at("weights").get<std::vector<double>>();
    m.bias = j.at("bias").get<double>();
    if (m.weights.size() != m.scaler.mean.size() || m.scaler.scale.size() != m.scaler.mean.size()) {
      throw BaselineError(Errc::InvalidModel, "logreg model: inconsistent widths");
    }
    return m;
  });
}

Tree tree_from_json(const nlohmann::json& j) {
  return guarded("tree", [&] {
    Tree t;
    for (const auto& n : j.at("nodes")) {
      t.nodes.push_back({n.at(0).get<int>(), n.at(1).get<double>(), n.at(2).get<int>(), n.at(3).get<int>(),
                         n.at(4).get<double>()});
    }
    const auto count = static_cast<int>(t.nodes.size());
    if (count == 0) throw BaselineError(Errc::InvalidModel, "tree has no nodes");
    for (int i = 0; i < count; ++i) {
      const auto& n = t.nodes[static_cast<std::size_t>(i)];
      if (n.feature >= 0 && (n.left <= i || n.right <= i || n.left >= count || n.right >= count)) {
        throw BaselineError(Errc::InvalidModel, "tree child index out of range");
      }
    }
    return t;
  });
}

Forest forest_from_json(const nlohmann::json& j) {
  return guarded("forest", [&] {
    Forest f;
    for (const auto& t : j.at("trees")) f.trees.push_back(tree_from_json(t));
    return f;
  });
}

Gbm gbm_from_json(const nlohmann::json& j) {
  return guarded("gbm", [&] {
    Gbm g;
    g.prior_log_odds = j.at("prior_log_odds").get<double>();
    for (const auto& t : j.at("trees")) g.trees.push_back(tree_from_json(t));
    return g;
  });
}

}  // namespace ecg::baselines
