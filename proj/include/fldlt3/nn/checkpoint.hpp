#pragma once

// Structured-text (JSON) dumps of named parameter arrays. Arrays are written
// in parameter order with their shapes and row-major data so dumps diff
// cleanly.

#include "json.hpp"

#include "fldlt3/nn/adam.hpp"
#include "fldlt3/nn/two_branch.hpp"

namespace fldlt3::nn {

nlohmann::ordered_json to_json(const ConstParamList& params);
void from_json(const nlohmann::ordered_json& j, const ParamList& params);

nlohmann::ordered_json to_json(const AdamState& state);
AdamState adam_from_json(const nlohmann::ordered_json& j);

}  // namespace fldlt3::nn
