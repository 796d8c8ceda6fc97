#include "mirror_bounds/json_io.hpp"

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <system_error>

namespace mirror_bounds {

namespace {

template <class T>
T required(const Json& j, const char* key) {
  if (!j.contains(key)) throw ConfigurationError(std::string("missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigurationError(std::string("field '") + key + "' has the wrong type");
  }
}

template <class T>
T optional_field(const Json& j, const char* key, T fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigurationError(std::string("field '") + key + "' has the wrong type");
  }
}

Json optional_double(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

Json doubles(const std::vector<double>& v) { return Json(v); }

}  // namespace

Json matrix_to_json(const Matrix& m) {
  Json data = Json::array();
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) data.push_back(m(i, j));
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
}

Matrix matrix_from_json(const Json& j) {
  const auto rows = required<Index>(j, "rows");
  const auto cols = required<Index>(j, "cols");
  const auto data = required<std::vector<double>>(j, "data");
  if (rows < 0 || cols < 0 || static_cast<Index>(data.size()) != rows * cols)
    throw ConfigurationError("matrix: data length differs from rows x cols");
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index k = 0; k < cols; ++k) m(i, k) = data[static_cast<std::size_t>(i * cols + k)];
  return m;
}

Json vector_to_json(const Vector& v) { return Json(std::vector<double>(v.data(), v.data() + v.size())); }

Vector vector_from_json(const Json& j) {
  if (!j.is_array()) throw ConfigurationError("vector: expected an array");
  const auto data = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(data.data(), static_cast<Index>(data.size()));
}

Json to_json(const ConstantSheet& c) {
  return {{"L", c.L},       {"M1", c.M1},     {"M2", c.M2},
          {"Mstar", optional_double(c.Mstar)}, {"D_X", c.D_X},
          {"rho", optional_double(c.rho)},     {"mu_f", optional_double(c.mu_f)}};
}

Json to_json(const EprmModel& m) {
  return {{"A1", matrix_to_json(m.A1)},   {"a1", vector_to_json(m.a1)},   {"A2", matrix_to_json(m.A2)},
          {"a2", vector_to_json(m.a2)},   {"B20", matrix_to_json(m.B20)}, {"B21", matrix_to_json(m.B21)},
          {"c1", vector_to_json(m.c1)},   {"c2", vector_to_json(m.c2)},   {"k2", vector_to_json(m.k2)},
          {"kt2", vector_to_json(m.kt2)}};
}

EprmModel eprm_from_json(const Json& j) {
  if (j.contains("kind")) {
    const auto kind = j.at("kind").get<std::string>();
    const double r = optional_field<double>(j, "r", 1.0);
    if (kind == "cvar") return cvar_as_eprm(required<double>(j, "epsilon"), r);
    if (kind == "mean-cvar")
      return mean_cvar_as_eprm(required<double>(j, "alpha0"), required<double>(j, "alpha1"),
                               required<double>(j, "epsilon"), r);
    if (kind == "expectation") return expectation_as_eprm();
    throw ConfigurationError("eprm: unknown kind '" + kind + "'");
  }
  auto mat = [&](const char* k) {
    if (!j.contains(k)) throw ConfigurationError(std::string("eprm: missing matrix '") + k + "'");
    return matrix_from_json(j.at(k));
  };
  auto vec = [&](const char* k) {
    if (!j.contains(k)) throw ConfigurationError(std::string("eprm: missing vector '") + k + "'");
    return vector_from_json(j.at(k));
  };
  EprmModel m;
  m.A1 = mat("A1");
  m.a1 = vec("a1");
  m.A2 = mat("A2");
  m.a2 = vec("a2");
  m.B20 = mat("B20");
  m.B21 = mat("B21");
  m.c1 = vec("c1");
  m.c2 = vec("c2");
  m.k2 = vec("k2");
  m.kt2 = vec("kt2");
  return m;
}

Json to_json(const ConfidenceInterval& ci) {
  return {{"method", to_string(ci.method)},
          {"low", ci.low},
          {"high", ci.high},
          {"width", ci.width()},
          {"level", ci.level},
          {"theta1", optional_double(ci.theta1)},
          {"theta2", optional_double(ci.theta2)},
          {"theta3", optional_double(ci.theta3)},
          {"K1", optional_double(ci.K1)},
          {"K2", optional_double(ci.K2)},
          {"model_lower", optional_double(ci.model_lower)},
          {"step_theta", optional_double(ci.step_theta)},
          {"degenerate", ci.degenerate}};
}

Json to_json(const MultistepSchedule& s) {
  return {{"kind", s.kind},          {"N", s.N},     {"gamma", doubles(s.gamma)},
          {"radius", doubles(s.radius)}, {"D_X", s.D_X}, {"rho", s.rho}};
}

Json to_json(const RunRecord& r) {
  Json j = {{"algorithm", to_string(r.algorithm)},
            {"setup", r.setup},
            {"seed", r.seed},
            {"N", r.N},
            {"step_rule", to_string(r.step_rule)},
            {"theta", optional_double(r.theta)},
            {"start_overridden", r.start_overridden},
            {"start", vector_to_json(r.start)},
            {"radius", r.radius},
            {"mu_omega", r.mu_omega},
            {"steps", doubles(r.steps)},
            {"values", doubles(r.values)},
            {"x_avg", vector_to_json(r.x_avg)},
            {"g_avg", r.g_avg},
            {"gamma_sum", r.gamma_sum},
            {"oracle_calls", r.oracle_calls},
            {"wall_seconds", r.wall_seconds},
            {"warnings", r.warnings}};
  Json iterates = Json::array();
  for (std::size_t i = 0; i < r.iterates.size(); ++i)
    iterates.push_back({{"t", r.iterate_index[i]}, {"x", vector_to_json(r.iterates[i])}});
  j["iterates"] = iterates;
  if (r.schedule) {
    j["schedule"] = to_json(*r.schedule);
    j["steps_completed"] = r.steps_completed;
    Json stages = Json::array();
    for (const auto& s : r.stages) stages.push_back(to_json(s));
    j["stages"] = stages;
  }
  if (r.A) j["A"] = *r.A;
  if (r.beta) j["beta"] = *r.beta;
  if (r.budget_condition_holds) j["budget_condition_holds"] = *r.budget_condition_holds;
  return j;
}

Json to_json(const Instance1Spec& s) {
  Json d = {{"family", "instance1"}, {"n", s.n},         {"alpha0", s.alpha0}, {"alpha1", s.alpha1},
            {"lambda0", s.lambda0},  {"a", s.a},         {"b", s.b},           {"norm", to_string(s.norm)},
            {"seed", s.seed}};
  if (s.mu_f_override) d["mu_f"] = *s.mu_f_override;
  if (s.psi.size() > 0) d["psi"] = vector_to_json(s.psi);
  return d;
}

Json to_json(const Instance2Spec& s) {
  Json d = {{"family", "instance2"},  {"n", s.n},           {"alpha0", s.alpha0},       {"alpha1", s.alpha1},
            {"epsilon", s.epsilon},   {"lambda0", s.lambda0}, {"pool_size", s.pool_size}, {"seed", s.seed}};
  if (s.mu_f_override) d["mu_f"] = *s.mu_f_override;
  return d;
}

Instance1Spec instance1_from_json(const Json& j) {
  Instance1Spec s;
  s.n = required<Index>(j, "n");
  s.alpha0 = optional_field<double>(j, "alpha0", s.alpha0);
  s.alpha1 = optional_field<double>(j, "alpha1", s.alpha1);
  s.lambda0 = optional_field<double>(j, "lambda0", s.lambda0);
  s.a = optional_field<double>(j, "a", s.a);
  s.b = optional_field<double>(j, "b", s.b);
  s.norm = norm_from_string(optional_field<std::string>(j, "norm", "l1"));
  s.seed = optional_field<std::uint64_t>(j, "seed", 0);
  if (j.contains("mu_f") && !j.at("mu_f").is_null()) s.mu_f_override = j.at("mu_f").get<double>();
  // A number means the same probability in every coordinate.
  if (j.contains("psi") && !j.at("psi").is_null()) {
    const Json& psi = j.at("psi");
    s.psi = psi.is_number() ? Vector::Constant(s.n, psi.get<double>()) : vector_from_json(psi);
  }
  return s;
}

Instance2Spec instance2_from_json(const Json& j) {
  Instance2Spec s;
  s.n = required<Index>(j, "n");
  s.alpha0 = optional_field<double>(j, "alpha0", s.alpha0);
  s.alpha1 = optional_field<double>(j, "alpha1", s.alpha1);
  s.epsilon = optional_field<double>(j, "epsilon", s.epsilon);
  s.lambda0 = optional_field<double>(j, "lambda0", s.lambda0);
  s.pool_size = optional_field<long>(j, "pool_size", s.pool_size);
  s.seed = optional_field<std::uint64_t>(j, "seed", 0);
  if (j.contains("mu_f") && !j.at("mu_f").is_null()) s.mu_f_override = j.at("mu_f").get<double>();
  return s;
}

ProblemSpec problem_from_json(const Json& j) {
  const auto family = required<std::string>(j, "family");
  if (family == "instance1") return gen_instance1(instance1_from_json(j));
  if (family == "instance2") return gen_instance2(instance2_from_json(j));
  if (family == "linear-loss") return gen_linear_loss(instance2_from_json(j));
  if (family.rfind("eprm-", 0) == 0) {
    if (!j.contains("model") || !j.contains("inner")) throw ConfigurationError("eprm problem needs 'model' and 'inner'");
    return eprm_reformulate(eprm_from_json(j.at("model")), problem_from_json(j.at("inner")));
  }
  throw ConfigurationError("unknown problem family '" + family + "'");
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  if (res.ec != std::errc()) throw NumericalError("format_double failed");
  return std::string(buf, res.ptr);
}

void write_file_atomic(const std::string& path, const std::string& contents) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    out << contents;
    out.flush();
    if (!out) throw std::runtime_error("write to " + tmp.string() + " failed");
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp);
    throw std::runtime_error("cannot rename onto " + path + ": " + ec.message());
  }
}

}  // namespace mirror_bounds
