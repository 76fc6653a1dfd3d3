#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace fgac {

enum class AttrType { Int, String };

std::string_view to_string(AttrType type);

struct Attribute {
  std::string name;
  AttrType type = AttrType::Int;
};

struct ClassDef {
  std::string name;
  std::vector<Attribute> attributes;

  /// Name of the identifier column of the class table.
  std::string id_column() const { return name + "_id"; }
  const Attribute* find_attribute(std::string_view attr) const;
};

struct AssociationEnd {
  std::string name;
  std::string class_name;
};

struct AssociationDef {
  std::string name;
  AssociationEnd end1;
  AssociationEnd end2;
};

/// Result of resolving `obj.endName` from an object of some class: the
/// association that carries the end and which side is being navigated to.
struct EndNavigation {
  const AssociationDef* association = nullptr;
  bool target_is_end1 = false;

  const AssociationEnd& target() const { return target_is_end1 ? association->end1 : association->end2; }
  const AssociationEnd& source() const { return target_is_end1 ? association->end2 : association->end1; }
};

struct DataModel {
  std::string name;
  std::vector<ClassDef> classes;
  std::vector<AssociationDef> associations;

  const ClassDef* find_class(std::string_view name) const;
  const AssociationDef* find_association(std::string_view name) const;
  /// Looks up an association end reachable from `from_class` by its name.
  std::optional<EndNavigation> find_end(std::string_view from_class, std::string_view end_name) const;
};

struct Violation {
  std::string element;
  std::string message;
};

using ValidationReport = std::vector<Violation>;

ValidationReport validate_data_model(const DataModel& dm);

bool is_identifier(std::string_view text);

// Attribute values. Null is the distinguished absent value.
struct NullValue {
  friend bool operator==(NullValue, NullValue) { return true; }
  friend auto operator<=>(NullValue, NullValue) = default;
};

using Value = std::variant<NullValue, std::int64_t, std::string>;

bool is_null(const Value& v);
std::string to_display(const Value& v);

using ObjectId = std::string;
using AttributeRecord = std::map<std::string, Value>;
using Link = std::pair<ObjectId, ObjectId>;

struct Scenario {
  // class -> id -> attribute values; attributes missing from a record are null.
  std::map<std::string, std::map<ObjectId, AttributeRecord>> objects;
  // association -> set of (end1 id, end2 id)
  std::map<std::string, std::set<Link>> links;

  std::optional<std::string> class_of(std::string_view id) const;
  const AttributeRecord* find_object(std::string_view cls, std::string_view id) const;
  Value attribute(std::string_view cls, std::string_view id, std::string_view attr) const;
  std::vector<ObjectId> ids_of(std::string_view cls) const;

  friend bool operator==(const Scenario&, const Scenario&) = default;
};

/// Normalizes a scenario against its model: every declared attribute gets an
/// explicit entry (null when absent), every declared class and association
/// gets an entry. Two scenarios denoting the same instance normalize equal.
Scenario normalized(const DataModel& dm, const Scenario& sc);

ValidationReport validate_scenario(const DataModel& dm, const Scenario& sc);

std::string sql_quote(std::string_view text);
std::string sql_literal(const Value& v);
std::string sql_type(AttrType type);

/// DDL for the data model: one table per class (id column plus attributes)
/// and one table per association (one column per end).
std::string sql_schema(const DataModel& dm);

/// INSERT statements that populate `sql_schema(dm)` with `sc`.
std::string scenario_to_inserts(const DataModel& dm, const Scenario& sc);

}  // namespace fgac
