#include "fldlt3/nn/checkpoint.hpp"

#include "fldlt3/errors.hpp"

namespace fldlt3::nn {

namespace {

nlohmann::ordered_json matrix_json(const std::string& name, const Matrix& m) {
  nlohmann::ordered_json j;
  j["name"] = name;
  j["shape"] = {m.rows(), m.cols()};
  std::vector<double> data;
  data.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
  }
  j["data"] = std::move(data);
  return j;
}

void read_matrix(const nlohmann::ordered_json& j, Matrix& m, const std::string& expected_name) {
  if (j.at("name").get<std::string>() != expected_name) {
    throw ShapeMismatch("checkpoint: expected " + expected_name + ", found " +
                        j.at("name").get<std::string>());
  }
  const auto rows = j.at("shape").at(0).get<Eigen::Index>();
  const auto cols = j.at("shape").at(1).get<Eigen::Index>();
  const auto& data = j.at("data");
  if (rows != m.rows() || cols != m.cols() ||
      data.size() != static_cast<std::size_t>(rows * cols)) {
    throw ShapeMismatch("checkpoint: shape mismatch at " + expected_name);
  }
  std::size_t i = 0;
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = data[i++].get<double>();
  }
}

}  // namespace

nlohmann::ordered_json to_json(const ConstParamList& params) {
  auto arr = nlohmann::ordered_json::array();
  for (const Param* p : params) arr.push_back(matrix_json(p->name, p->value));
  return arr;
}

void from_json(const nlohmann::ordered_json& j, const ParamList& params) {
  if (!j.is_array() || j.size() != params.size()) {
    throw ShapeMismatch("checkpoint: parameter count mismatch");
  }
  for (std::size_t i = 0; i < params.size(); ++i) read_matrix(j[i], params[i]->value, params[i]->name);
}

nlohmann::ordered_json to_json(const AdamState& state) {
  nlohmann::ordered_json j;
  j["learning_rate"] = state.learning_rate;
  j["beta1"] = state.beta1;
  j["beta2"] = state.beta2;
  j["epsilon"] = state.epsilon;
  j["step"] = state.step;
  auto m = nlohmann::ordered_json::array();
  auto v = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < state.first_moment.size(); ++i) {
    m.push_back(matrix_json("m" + std::to_string(i), state.first_moment[i]));
    v.push_back(matrix_json("v" + std::to_string(i), state.second_moment[i]));
  }
  j["first_moment"] = std::move(m);
  j["second_moment"] = std::move(v);
  return j;
}

AdamState adam_from_json(const nlohmann::ordered_json& j) {
  AdamState s;
  s.learning_rate = j.at("learning_rate").get<double>();
  s.beta1 = j.at("beta1").get<double>();
  s.beta2 = j.at("beta2").get<double>();
  s.epsilon = j.at("epsilon").get<double>();
  s.step = j.at("step").get<long long>();
  for (const char* key : {"first_moment", "second_moment"}) {
    auto& dst = std::string(key) == "first_moment" ? s.first_moment : s.second_moment;
    for (const auto& item : j.at(key)) {
      Matrix m(item.at("shape").at(0).get<Eigen::Index>(), item.at("shape").at(1).get<Eigen::Index>());
      read_matrix(item, m, item.at("name").get<std::string>());
      dst.push_back(std::move(m));
    }
  }
  return s;
}

}  // namespace fldlt3::nn
