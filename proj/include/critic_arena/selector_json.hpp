// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "json.hpp"

#include "critic_arena/selector.hpp"

namespace critic_arena {

nlohmann::json to_json(const MatchRecord& rec);
MatchRecord match_record_from_json(const nlohmann::json& j);

nlohmann::json to_json(const SelectionResult& result);
SelectionResult selection_result_from_json(const nlohmann::json& j);

}  // namespace critic_arena
