#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "fgac/model.hpp"

namespace fgac::ocl {

enum class CompareOp { Eq, Ne, Lt, Gt, Le, Ge };

std::string_view to_string(CompareOp op);

struct Type {
  enum class Kind { Unknown, Bool, Int, String, Null, Object, Collection };
  Kind kind = Kind::Unknown;
  std::string class_name;  // Object and Collection (element class)

  static Type boolean() { return {Kind::Bool, {}}; }
  static Type integer() { return {Kind::Int, {}}; }
  static Type string() { return {Kind::String, {}}; }
  static Type null() { return {Kind::Null, {}}; }
  static Type object(std::string cls) { return {Kind::Object, std::move(cls)}; }
  static Type collection(std::string cls) { return {Kind::Collection, std::move(cls)}; }

  friend bool operator==(const Type&, const Type&) = default;
};

std::string to_string(const Type& t);

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct Expr {
  enum class Kind {
    Keyword,       // caller, self, association-end keywords
    Variable,      // iterator variable
    ObjectLit,     // a concrete object (after substitution)
    IntLit,
    StringLit,
    BoolLit,
    NullLit,
    Attribute,     // source.name
    Navigation,    // source.endName (collection-valued)
    AllInstances,  // name.allInstances()
    Select,
    Exists,
    ForAll,
    Includes,
    IsEmpty,
    Compare,
    And,
    Or,
    Not,
  };

  Kind kind;
  // Keyword/Variable: identifier; ObjectLit: object id; Attribute: attribute;
  // Navigation: end name; AllInstances: class; iterators: bound variable.
  std::string name;
  // ObjectLit: class of the object.
  std::string class_name;
  std::int64_t int_value = 0;
  std::string string_value;
  bool bool_value = false;
  CompareOp op = CompareOp::Eq;
  // Children: unary/postfix source first, then iterator body / argument / rhs.
  std::vector<ExprPtr> args;
  // Filled by type_check.
  Type type;
};

// Construction helpers.
ExprPtr keyword(std::string name);
ExprPtr variable(std::string name);
ExprPtr object_lit(std::string id, std::string cls);
ExprPtr int_lit(std::int64_t v);
ExprPtr string_lit(std::string v);
ExprPtr bool_lit(bool v);
ExprPtr null_lit();
ExprPtr attribute(ExprPtr source, std::string attr);
ExprPtr navigation(ExprPtr source, std::string end);
ExprPtr all_instances(std::string cls);
ExprPtr iterate(Expr::Kind kind, ExprPtr source, std::string var, ExprPtr body);
ExprPtr includes(ExprPtr source, ExprPtr element);
ExprPtr is_empty(ExprPtr source);
ExprPtr compare(CompareOp op, ExprPtr lhs, ExprPtr rhs);
ExprPtr logical_and(ExprPtr lhs, ExprPtr rhs);
ExprPtr logical_or(ExprPtr lhs, ExprPtr rhs);
ExprPtr logical_not(ExprPtr operand);

/// Structural equality (ignores type annotations).
bool same_structure(const Expr& a, const Expr& b);

/// Keyword name -> class of the object it denotes.
using KeywordTypes = std::map<std::string, std::string>;

/// Syntax-only parse. Identifiers bound by an enclosing iterator become
/// Variable nodes; all other bare identifiers become Keyword nodes.
ExprPtr parse_syntax(std::string_view text);

/// Resolves features against the model and annotates every node with its
/// type. Distinguishes attributes from association ends.
ExprPtr type_check(const ExprPtr& e, const DataModel& dm, const KeywordTypes& keywords);

/// parse_syntax followed by type_check.
ExprPtr parse_ocl(std::string_view text, const DataModel& dm, const KeywordTypes& keywords);

/// Canonical concrete syntax; parse_syntax(render_ocl(e)) is structurally e.
std::string render_ocl(const Expr& e);

/// Alpha-renames iterator variables to v0, v1, ... in traversal order.
ExprPtr normalize_variables(const ExprPtr& e);

std::set<std::string> free_keywords(const Expr& e);

/// Collects Int and String literals occurring in the expression.
void collect_literals(const Expr& e, std::set<std::int64_t>& ints, std::set<std::string>& strings);

// ---- values ---------------------------------------------------------------

struct ObjectRef {
  std::string id;
  std::string class_name;
  friend bool operator==(const ObjectRef&, const ObjectRef&) = default;
  friend auto operator<=>(const ObjectRef&, const ObjectRef&) = default;
};

struct NullVal {
  friend bool operator==(NullVal, NullVal) { return true; }
};
struct InvalidVal {
  friend bool operator==(InvalidVal, InvalidVal) { return true; }
};
struct BoolVal {
  bool value;
  friend bool operator==(BoolVal, BoolVal) = default;
};
struct IntVal {
  std::int64_t value;
  friend bool operator==(IntVal, IntVal) = default;
};
struct StringVal {
  std::string value;
  friend bool operator==(const StringVal&, const StringVal&) = default;
};
struct Collection {
  std::vector<ObjectRef> elements;  // duplicate-free, in enumeration order
  friend bool operator==(const Collection&, const Collection&) = default;
};

using Value = std::variant<NullVal, InvalidVal, BoolVal, IntVal, StringVal, ObjectRef, Collection>;

std::string to_string(const Value& v);
bool is_true(const Value& v);

using Binding = std::map<std::string, ObjectRef>;

/// Evaluates `e` in scenario `sc`. Keywords are looked up in `binding`
/// (UnboundKeyword if missing). Null and invalid follow the semantics
/// documented in docs/ocl.md.
Value eval_ocl(const DataModel& dm, const Scenario& sc, const Expr& e, const Binding& binding);

/// Replaces bound keywords with object literals.
ExprPtr substitute(const ExprPtr& e, const Binding& binding);

}  // namespace fgac::ocl
