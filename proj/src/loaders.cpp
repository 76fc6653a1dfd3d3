#include "fgac/loaders.hpp"

#include <fstream>
#include <sstream>

#include "fgac/error.hpp"
#include "json.hpp"

namespace fgac::loaders {

using nlohmann::json;

namespace {

json parse_json(std::string_view text, ErrorCode code, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(code, std::string(what) + ": " + e.what());
  }
}

// Reads a required string member.
std::string str(const json& j, const char* key, ErrorCode code, const std::string& where) {
  if (!j.is_object() || !j.contains(key) || !j.at(key).is_string())
    throw Error(code, where + ": missing string '" + key + "'");
  return j.at(key).get<std::string>();
}

const json& arr(const json& j, const char* key, ErrorCode code, const std::string& where) {
  static const json empty = json::array();
  if (!j.contains(key)) return empty;
  if (!j.at(key).is_array()) throw Error(code, where + ": '" + key + "' must be a list");
  return j.at(key);
}

}  // namespace

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::InvalidInput, "cannot read '" + path + "'");
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

DataModel parse_model(std::string_view text) {
  constexpr auto code = ErrorCode::InvalidModel;
  auto j = parse_json(text, code, "model");
  if (!j.is_object()) throw Error(code, "model must be an object");
  for (const char* key : {"generalizations", "generalisations", "superclass", "parent"})
    if (j.contains(key)) throw Error(ErrorCode::UnsupportedFeature, std::string("class generalisation ('") + key + "')");

  DataModel dm;
  dm.name = j.contains("name") ? str(j, "name", code, "model") : "";
  for (const auto& c : arr(j, "classes", code, "model")) {
    ClassDef cls;
    cls.name = str(c, "name", code, "class");
    for (const char* key : {"superclass", "parent", "generalization", "generalisation", "extends"})
      if (c.contains(key))
        throw Error(ErrorCode::UnsupportedFeature, "class generalisation on '" + cls.name + "'");
    for (const auto& a : arr(c, "attributes", code, cls.name)) {
      Attribute attr;
      attr.name = str(a, "name", code, cls.name);
      auto type = str(a, "type", code, cls.name + "." + attr.name);
      if (type == "Int" || type == "Integer") attr.type = AttrType::Int;
      else if (type == "String") attr.type = AttrType::String;
      else throw Error(code, cls.name + "." + attr.name + ": unsupported type '" + type + "'");
      cls.attributes.push_back(attr);
    }
    dm.classes.push_back(std::move(cls));
  }
  for (const auto& a : arr(j, "associations", code, "model")) {
    AssociationDef assoc;
    assoc.name = str(a, "name", code, "association");
    for (auto [key, end] : {std::pair{"end1", &assoc.end1}, std::pair{"end2", &assoc.end2}}) {
      if (!a.contains(key)) throw Error(code, assoc.name + ": missing '" + key + "'");
      end->name = str(a.at(key), "name", code, assoc.name + "." + key);
      end->class_name = str(a.at(key), "class", code, assoc.name + "." + key);
    }
    dm.associations.push_back(std::move(assoc));
  }
  auto report = validate_data_model(dm);
  if (!report.empty()) throw Error(code, report.front().element + ": " + report.front().message);
  return dm;
}

Scenario parse_scenario(std::string_view text, const DataModel& dm) {
  constexpr auto code = ErrorCode::InvalidScenario;
  auto j = parse_json(text, code, "scenario");
  if (!j.is_object()) throw Error(code, "scenario must be an object");
  Scenario sc;
  if (j.contains("objects")) {
    const auto& objects = j.at("objects");
    if (!objects.is_object()) throw Error(code, "'objects' must be an object");
    for (const auto& [cls, ids] : objects.items()) {
      if (!ids.is_object()) throw Error(code, cls + ": objects must be an object keyed by id");
      auto& out = sc.objects[cls];
      for (const auto& [id, rec] : ids.items()) {
        if (!rec.is_object()) throw Error(code, id + ": attribute record must be an object");
        auto& r = out[id];
        for (const auto& [attr, v] : rec.items()) {
          if (v.is_null()) r[attr] = NullValue{};
          else if (v.is_number_integer()) r[attr] = v.get<std::int64_t>();
          else if (v.is_string()) r[attr] = v.get<std::string>();
          else throw Error(code, id + "." + attr + ": values are integers, strings or null");
        }
      }
    }
  }
  if (j.contains("links")) {
    const auto& links = j.at("links");
    if (!links.is_object()) throw Error(code, "'links' must be an object");
    for (const auto& [assoc, pairs] : links.items()) {
      if (!pairs.is_array()) throw Error(code, assoc + ": links must be a list");
      auto& out = sc.links[assoc];
      for (const auto& p : pairs) {
        if (!p.is_array() || p.size() != 2 || !p[0].is_string() || !p[1].is_string())
          throw Error(code, assoc + ": a link is a pair of object ids");
        if (!out.emplace(p[0].get<std::string>(), p[1].get<std::string>()).second)
          throw Error(code, assoc + ": duplicate link (" + p[0].get<std::string>() + ", " +
                                p[1].get<std::string>() + ")");
      }
    }
  }
  auto report = validate_scenario(dm, sc);
  if (!report.empty()) throw Error(code, report.front().element + ": " + report.front().message);
  return normalized(dm, sc);
}

SecurityModel parse_policy(std::string_view text, const DataModel& dm) {
  constexpr auto code = ErrorCode::InvalidPolicy;
  auto j = parse_json(text, code, "policy");
  if (!j.is_object()) throw Error(code, "policy must be an object");
  auto name = str(j, "name", code, "policy");
  if (j.contains("dataModel")) {
    auto model = str(j, "dataModel", code, name);
    if (!dm.name.empty() && model != dm.name)
      throw Error(code, name + ": written for data model '" + model + "', not '" + dm.name + "'");
  }
  auto user_class = str(j, "userClass", code, name);
  std::set<std::string> roles;
  for (const auto& r : arr(j, "roles", code, name)) {
    if (!r.is_string()) throw Error(code, name + ": roles are strings");
    roles.insert(r.get<std::string>());
  }
  std::vector<RuleSource> rules;
  for (const auto& r : arr(j, "rules", code, name)) {
    RuleSource rule;
    rule.role = str(r, "role", code, name + " rule");
    if (!r.contains("resource") || !r.at("resource").is_object()) throw Error(code, name + ": rule without resource");
    const auto& res = r.at("resource");
    auto kind = str(res, "kind", code, name + " resource");
    if (kind == "attribute") {
      rule.resource = AttributeRes{str(res, "class", code, name + " resource"), str(res, "attribute", code, name + " resource")};
    } else if (kind == "association") {
      rule.resource = AssociationRes{str(res, "association", code, name + " resource")};
    } else {
      throw Error(code, name + ": unknown resource kind '" + kind + "'");
    }
    rule.constraint = str(r, "constraint", code, name + " rule");
    rules.push_back(std::move(rule));
  }
  return make_security_model(name, dm, user_class, roles, rules);
}

ocl2sql::Registry parse_registry(std::string_view text) {
  constexpr auto code = ErrorCode::InvalidInput;
  auto j = parse_json(text, code, "registry");
  if (!j.is_object()) throw Error(code, "registry must map constraint text to SQL text");
  ocl2sql::Registry reg;
  for (const auto& [ocl, sql] : j.items()) {
    if (!sql.is_string()) throw Error(code, "registry entry for '" + ocl + "' must be a string");
    try {
      reg.add(ocl, sql.get<std::string>());
    } catch (const Error& e) {
      throw Error(code, "registry entry '" + ocl + "': " + e.what());
    }
  }
  return reg;
}

std::vector<optimizer::ContextFact> parse_facts(std::string_view text) {
  constexpr auto code = ErrorCode::InvalidInput;
  auto j = parse_json(text, code, "facts");
  if (!j.is_array()) throw Error(code, "facts must be a list");
  std::vector<optimizer::ContextFact> out;
  for (const auto& f : j) {
    optimizer::ContextFact fact;
    fact.description = f.is_object() && f.contains("description") ? str(f, "description", code, "fact") : "";
    fact.ocl = str(f, "ocl", code, "fact '" + fact.description + "'");
    if (!f.contains("sqlGuard") || !f.at("sqlGuard").is_string() || f.at("sqlGuard").get<std::string>().empty())
      throw Error(code, "fact '" + fact.description + "' has no sqlGuard; a runtime guard is required");
    fact.sql_guard = f.at("sqlGuard").get<std::string>();
    for (const auto& c : arr(f, "checks", code, "fact '" + fact.description + "'")) {
      if (!c.is_string()) throw Error(code, "fact '" + fact.description + "': checks are strings");
      fact.checks.push_back(c.get<std::string>());
    }
    out.push_back(std::move(fact));
  }
  return out;
}

DataModel load_model(const std::string& path) { return parse_model(read_file(path)); }
Scenario load_scenario(const std::string& path, const DataModel& dm) { return parse_scenario(read_file(path), dm); }
SecurityModel load_policy(const std::string& path, const DataModel& dm) { return parse_policy(read_file(path), dm); }
ocl2sql::Registry load_registry(const std::string& path) { return parse_registry(read_file(path)); }
std::vector<optimizer::ContextFact> load_facts(const std::string& path) { return parse_facts(read_file(path)); }

}  // namespace fgac::loaders
