#pragma once

#include <json.hpp>  // vendored nlohmann/json

namespace dvp {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

}  // namespace dvp
