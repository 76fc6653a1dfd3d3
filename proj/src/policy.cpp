#include "fgac/policy.hpp"

#include "fgac/error.hpp"

namespace fgac {

std::string to_string(const Resource& res) {
  if (const auto* a = std::get_if<AttributeRes>(&res)) return a->class_name + ":" + a->attribute;
  return std::get<AssociationRes>(res).association;
}

const Rule* SecurityModel::find_rule(const std::string& role, const Resource& res) const {
  for (const auto& r : rules)
    if (r.role == role && r.resource == res) return &r;
  return nullptr;
}

void validate_resource(const DataModel& dm, const Resource& res) {
  if (const auto* a = std::get_if<AttributeRes>(&res)) {
    const auto* cls = dm.find_class(a->class_name);
    if (!cls) throw Error(ErrorCode::InvalidPolicy, "unknown class '" + a->class_name + "'");
    if (!cls->find_attribute(a->attribute))
      throw Error(ErrorCode::InvalidPolicy, "unknown attribute '" + to_string(res) + "'");
  } else if (!dm.find_association(std::get<AssociationRes>(res).association)) {
    throw Error(ErrorCode::InvalidPolicy, "unknown association '" + to_string(res) + "'");
  }
}

std::vector<std::string> target_keywords(const DataModel& dm, const Resource& res) {
  if (std::holds_alternative<AttributeRes>(res)) return {"self"};
  const auto* a = dm.find_association(std::get<AssociationRes>(res).association);
  if (!a) throw Error(ErrorCode::InvalidPolicy, "unknown association '" + to_string(res) + "'");
  return {a->end1.name, a->end2.name};
}

ocl::KeywordTypes keyword_types(const DataModel& dm, const std::string& user_class, const Resource& res) {
  validate_resource(dm, res);
  ocl::KeywordTypes kw{{"caller", user_class}};
  if (const auto* a = std::get_if<AttributeRes>(&res)) {
    kw["self"] = a->class_name;
  } else {
    const auto* assoc = dm.find_association(std::get<AssociationRes>(res).association);
    kw[assoc->end1.name] = assoc->end1.class_name;
    kw[assoc->end2.name] = assoc->end2.class_name;
  }
  return kw;
}

SecurityModel make_security_model(std::string name, const DataModel& dm, std::string user_class,
                                  std::set<std::string> roles, const std::vector<RuleSource>& rules) {
  if (!dm.find_class(user_class))
    throw Error(ErrorCode::InvalidPolicy, "user class '" + user_class + "' is not declared");
  SecurityModel s{std::move(name), &dm, std::move(user_class), std::move(roles), {}};
  for (const auto& r : rules) {
    if (!s.has_role(r.role)) throw Error(ErrorCode::InvalidPolicy, "rule for undeclared role '" + r.role + "'");
    if (s.find_rule(r.role, r.resource))
      throw Error(ErrorCode::InvalidPolicy, "duplicate rule for (" + r.role + ", " + to_string(r.resource) + ")");
    auto kw = keyword_types(dm, s.user_class, r.resource);
    ocl::ExprPtr typed;
    try {
      typed = ocl::parse_ocl(r.constraint, dm, kw);
    } catch (const Error& e) {
      throw Error(ErrorCode::InvalidPolicy,
                  "constraint for (" + r.role + ", " + to_string(r.resource) + "): " + e.what());
    }
    if (typed->type.kind != ocl::Type::Kind::Bool)
      throw Error(ErrorCode::InvalidPolicy, "constraint for (" + r.role + ", " + to_string(r.resource) +
                                                ") is not Boolean");
    s.rules.push_back({r.role, r.resource, r.constraint, typed});
  }
  return s;
}

ocl::ExprPtr lookup_auth(const SecurityModel& s, const std::string& role, const Resource& res) {
  if (!s.has_role(role)) throw Error(ErrorCode::UnknownRole, "role '" + role + "' is not declared by " + s.name);
  if (const auto* r = s.find_rule(role, res)) return r->constraint;
  auto deny = ocl::bool_lit(false);
  return ocl::type_check(deny, *s.data_model, {});
}

bool auth_decision(const SecurityModel& s, const Scenario& sc, const ocl::ObjectRef& caller,
                   const std::string& role, const Resource& res, const ocl::Binding& targets) {
  auto constraint = lookup_auth(s, role, res);
  ocl::Binding b = targets;
  b["caller"] = caller;
  for (const auto& kw : target_keywords(*s.data_model, res))
    if (!b.count(kw)) throw Error(ErrorCode::UnboundKeyword, "keyword '" + kw + "' is not bound");
  return ocl::is_true(ocl::eval_ocl(*s.data_model, sc, *constraint, b));
}

}  // namespace fgac
