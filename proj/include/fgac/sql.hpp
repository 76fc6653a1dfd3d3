#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "fgac/model.hpp"

namespace fgac::sql {

struct Query;
using QueryPtr = std::shared_ptr<const Query>;

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

enum class CheckStyle {
  WhenOne,   // CASE f(...) WHEN 1 THEN value ELSE throw_error() END
  WhenTrue,  // CASE f(...) WHEN TRUE THEN TRUE ELSE throw_error() END
};

struct Expr {
  enum class Kind {
    Column,     // [qualifier.]name; also parameters such as caller
    Star,       // * or qualifier.* (select lists and COUNT(*))
    IntLit,
    StringLit,
    BoolLit,
    NullLit,
    Binary,     // op in = <> < > <= >= AND OR
    Not,
    IsNull,     // negated: IS NOT NULL
    Exists,
    Subquery,   // scalar subquery
    Call,       // name(args)
    Case,       // searched or simple CASE
    Checked,    // authorization check wrapper, rendered as a CASE
  };

  Kind kind;
  std::string qualifier;
  std::string name;  // column / function / AuthFunc name
  std::int64_t int_value = 0;
  std::string string_value;
  bool flag = false;  // BoolLit value; IsNull negation
  std::string op;
  std::vector<ExprPtr> args;  // Binary: lhs, rhs; Not/IsNull: operand; Call/Checked: arguments
  QueryPtr query;             // Exists, Subquery

  // Case
  ExprPtr operand;  // simple CASE operand, may be null
  std::vector<std::pair<ExprPtr, ExprPtr>> whens;
  ExprPtr otherwise;  // may be null

  // Checked
  ExprPtr value;
  CheckStyle style = CheckStyle::WhenOne;
  std::string resource;  // for diagnostics, e.g. "Student:age"
};

struct SelectItem {
  ExprPtr expr;
  std::string alias;  // empty when absent
};

struct FromItem {
  std::string table;  // base or temporary table; empty for a subquery
  QueryPtr subquery;
  std::string alias;  // empty when absent

  /// Name by which columns of this item are qualified.
  const std::string& exposed_name() const { return alias.empty() ? table : alias; }
};

struct Join {
  FromItem item;
  ExprPtr on;
};

struct Query {
  bool distinct = false;
  std::vector<SelectItem> items;
  std::vector<FromItem> from;  // comma-separated items
  std::vector<Join> joins;     // JOIN ... ON chain following the comma list
  ExprPtr where;               // may be null
};

// Construction helpers.
ExprPtr column(std::string name, std::string qualifier = {});
ExprPtr star(std::string qualifier = {});
ExprPtr int_lit(std::int64_t v);
ExprPtr string_lit(std::string v);
ExprPtr bool_lit(bool v);
ExprPtr null_lit();
ExprPtr binary(std::string op, ExprPtr lhs, ExprPtr rhs);
ExprPtr logical_not(ExprPtr e);
ExprPtr call(std::string name, std::vector<ExprPtr> args);
ExprPtr checked(std::string func, std::vector<ExprPtr> args, ExprPtr value, CheckStyle style,
                std::string resource);

/// Parses one SELECT statement (a trailing ';' is allowed).
/// Throws SyntaxError or Error(UnsupportedFeature).
QueryPtr parse_select(std::string_view text);

/// Parses a standalone boolean/scalar SQL expression.
ExprPtr parse_expression(std::string_view text);

std::string render_sql(const Query& q);
std::string render_expr(const Expr& e);

bool same_structure(const Query& a, const Query& b);
bool same_structure(const Expr& a, const Expr& b);

/// Rebuilds an expression bottom-up; `f` may return a replacement for a node
/// (receiving the node with already-rewritten children) or null to keep it.
ExprPtr rewrite(const ExprPtr& e, const std::function<ExprPtr(const ExprPtr&)>& f);

/// Replaces every Checked node by its guarded value.
ExprPtr strip_checks(const ExprPtr& e);
QueryPtr strip_checks(const Query& q);
bool has_checks(const Query& q);
bool has_checks(const Expr& e);

/// Applies `f` (as in rewrite) to every expression of the query, including
/// nested subqueries.
QueryPtr rewrite_query(const Query& q, const std::function<ExprPtr(const ExprPtr&)>& f);

using TableLookup = std::function<std::optional<std::vector<std::string>>(std::string_view)>;

/// Output column names of `q`: alias, else column name, else rendered text.
/// Stars are expanded through `lookup` (and recursively for subqueries).
std::vector<std::string> output_columns(const Query& q, const TableLookup& lookup);

// ---- DDL / DML used for loading scenarios --------------------------------

struct CreateTable {
  std::string name;
  std::vector<std::string> columns;
};

struct Insert {
  std::string table;
  std::vector<std::string> columns;
  std::vector<Value> values;
};

using Statement = std::variant<CreateTable, Insert>;

/// Parses the scripts produced by sql_schema / scenario_to_inserts.
std::vector<Statement> parse_script(std::string_view text);

// ---- resource analysis ----------------------------------------------------

struct AttrAccess {
  std::string class_name;
  std::string attribute;
  std::string row_source;  // FROM item whose rows instantiate self
  friend bool operator==(const AttrAccess&, const AttrAccess&) = default;
};

struct AssocAccess {
  std::string association;
  std::string end1_source;  // class enumerated for end1 in the candidate set
  std::string end2_source;
  friend bool operator==(const AssocAccess&, const AssocAccess&) = default;
};

using ResourceAccess = std::variant<AttrAccess, AssocAccess>;

/// Columns of a base table of the model's schema, or nullopt.
std::optional<std::vector<std::string>> table_columns(const DataModel& dm, std::string_view table);

/// Protected resources read by `q`, in evaluation order: FROM items (depth
/// first), ON, WHERE, then the select list. Attribute accesses are reported
/// once per (class, attribute). Throws UnknownTable / UnknownColumn.
std::vector<ResourceAccess> resource_accesses(const Query& q, const DataModel& dm);

}  // namespace fgac::sql
