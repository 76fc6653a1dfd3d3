#pragma once

#include <map>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "fgac/model.hpp"
#include "fgac/ocl.hpp"

namespace fgac {

struct AttributeRes {
  std::string class_name;
  std::string attribute;
  friend auto operator<=>(const AttributeRes&, const AttributeRes&) = default;
};

struct AssociationRes {
  std::string association;
  friend auto operator<=>(const AssociationRes&, const AssociationRes&) = default;
};

using Resource = std::variant<AttributeRes, AssociationRes>;

/// "Student:age" or "Enrolment".
std::string to_string(const Resource& res);

struct Rule {
  std::string role;
  Resource resource;
  std::string source;        // constraint text as written
  ocl::ExprPtr constraint;   // typed
};

struct SecurityModel {
  std::string name;
  const DataModel* data_model = nullptr;
  std::string user_class;
  std::set<std::string> roles;
  std::vector<Rule> rules;

  bool has_role(const std::string& role) const { return roles.count(role) > 0; }
  const Rule* find_rule(const std::string& role, const Resource& res) const;
};

/// Keywords available in a constraint guarding `res`: caller plus self, or
/// the two association-end names.
ocl::KeywordTypes keyword_types(const DataModel& dm, const std::string& user_class, const Resource& res);

/// Keyword names in argument order (self, or end1 then end2).
std::vector<std::string> target_keywords(const DataModel& dm, const Resource& res);

/// Checks that the resource exists in the model. Throws InvalidPolicy.
void validate_resource(const DataModel& dm, const Resource& res);

/// Builds a policy, type-checking every rule. Throws InvalidPolicy (with the
/// underlying parse/type error in the message).
struct RuleSource {
  std::string role;
  Resource resource;
  std::string constraint;
};
SecurityModel make_security_model(std::string name, const DataModel& dm, std::string user_class,
                                  std::set<std::string> roles, const std::vector<RuleSource>& rules);

/// The rule's constraint, or the constant `false` when the role has no rule.
ocl::ExprPtr lookup_auth(const SecurityModel& s, const std::string& role, const Resource& res);

/// True iff the constraint evaluates to literal true under caller + targets.
bool auth_decision(const SecurityModel& s, const Scenario& sc, const ocl::ObjectRef& caller,
                   const std::string& role, const Resource& res, const ocl::Binding& targets);

}  // namespace fgac
