#pragma once

#include "mirror_bounds/bounds.hpp"
#include "mirror_bounds/eprm.hpp"
#include "mirror_bounds/problems.hpp"
#include "mirror_bounds/solvers.hpp"

#include <json.hpp>

#include <string>

namespace mirror_bounds {

using Json = nlohmann::json;

// Matrices: {"rows": r, "cols": c, "data": [row-major]}.
Json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const Json& j);
Json vector_to_json(const Vector& v);
Vector vector_from_json(const Json& j);

Json to_json(const ConstantSheet& c);
Json to_json(const EprmModel& m);
EprmModel eprm_from_json(const Json& j);
Json to_json(const ConfidenceInterval& ci);
Json to_json(const MultistepSchedule& s);
Json to_json(const RunRecord& r);

Json to_json(const Instance1Spec& s);
Json to_json(const Instance2Spec& s);
Instance1Spec instance1_from_json(const Json& j);
Instance2Spec instance2_from_json(const Json& j);

// Rebuilds a problem from its descriptor: families instance1, instance2, linear-loss, eprm-*.
ProblemSpec problem_from_json(const Json& j);

// Shortest round-trip decimal text.
std::string format_double(double v);

// Writes to a sibling temporary file, then renames over the target.
void write_file_atomic(const std::string& path, const std::string& contents);

}  // namespace mirror_bounds
