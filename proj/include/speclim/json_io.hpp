#pragma once

#include <optional>
#include <string>

#include "json.hpp"

#include "speclim/bounds.hpp"
#include "speclim/checks.hpp"
#include "speclim/family.hpp"
#include "speclim/moment_params.hpp"
#include "speclim/verify.hpp"

namespace speclim {

inline constexpr int kSchemaVersion = 1;

// Family documents: {"kind": "...", "params": {...}, "seed": uint64}.
// Kinds and their params:
//   fixed            {"probs": [..], "allow_point_mass": bool?}
//   uniform          {"vocab": V}
//   dirichlet        {"alpha": a, "vocab": V}
//   empirical        {"trace": "path"}
//   paired-empirical {"trace": "path"}
//   paired-noisy     {"base": <family document sans seed>, "q_temperature": t,
//                     "q_zero_rate": z}
FamilySpec family_from_json(const nlohmann::json& doc);
nlohmann::json family_to_json(const FamilySpec& family);

nlohmann::json to_json(const MomentParams& params);
MomentParams moment_params_from_json(const nlohmann::json& doc);

nlohmann::json to_json(const BoundReport& report);
nlohmann::json to_json(const RunReport& report);
nlohmann::json to_json(const checks::CheckResult& result);

}  // namespace speclim
