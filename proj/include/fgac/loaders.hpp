#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "fgac/model.hpp"
#include "fgac/ocl2sql.hpp"
#include "fgac/optimizer.hpp"
#include "fgac/policy.hpp"

namespace fgac::loaders {

/// Whole file as text. Throws InvalidInput.
std::string read_file(const std::string& path);

/// {name, classes:[{name, attributes:[{name,type}]}], associations:[{name,
/// end1:{name,class}, end2:{name,class}}]}. Throws InvalidModel,
/// UnsupportedFeature (generalisations).
DataModel parse_model(std::string_view json);

/// {objects:{class:{id:{attr:value}}}, links:{assoc:[[id,id]]}}; values are
/// integers, strings or null. Throws InvalidScenario. The result is normalized.
Scenario parse_scenario(std::string_view json, const DataModel& dm);

/// {name, dataModel, userClass, roles, rules:[{role, resource:{kind:"attribute",
/// class, attribute} | {kind:"association", association}, constraint}]}.
/// Throws InvalidPolicy.
SecurityModel parse_policy(std::string_view json, const DataModel& dm);

/// {"<OCL constraint>": "<SQL expression>", ...}. Throws InvalidInput.
ocl2sql::Registry parse_registry(std::string_view json);

/// [{description, ocl, sqlGuard, checks?}]. sqlGuard is required. Throws
/// InvalidInput.
std::vector<optimizer::ContextFact> parse_facts(std::string_view json);

DataModel load_model(const std::string& path);
Scenario load_scenario(const std::string& path, const DataModel& dm);
SecurityModel load_policy(const std::string& path, const DataModel& dm);
ocl2sql::Registry load_registry(const std::string& path);
std::vector<optimizer::ContextFact> load_facts(const std::string& path);

}  // namespace fgac::loaders
