#include "fgac/model.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

#include "fgac/error.hpp"

namespace fgac {

std::string_view to_string(AttrType type) {
  return type == AttrType::Int ? "Int" : "String";
}

const Attribute* ClassDef::find_attribute(std::string_view attr) const {
  auto it = std::find_if(attributes.begin(), attributes.end(),
                         [&](const Attribute& a) { return a.name == attr; });
  return it == attributes.end() ? nullptr : &*it;
}

const ClassDef* DataModel::find_class(std::string_view cls) const {
  auto it = std::find_if(classes.begin(), classes.end(),
                         [&](const ClassDef& c) { return c.name == cls; });
  return it == classes.end() ? nullptr : &*it;
}

const AssociationDef* DataModel::find_association(std::string_view assoc) const {
  auto it = std::find_if(associations.begin(), associations.end(),
                         [&](const AssociationDef& a) { return a.name == assoc; });
  return it == associations.end() ? nullptr : &*it;
}

std::optional<EndNavigation> DataModel::find_end(std::string_view from_class,
                                                 std::string_view end_name) const {
  for (const auto& a : associations) {
    if (a.end1.name == end_name && a.end2.class_name == from_class) return EndNavigation{&a, true};
    if (a.end2.name == end_name && a.end1.class_name == from_class) return EndNavigation{&a, false};
  }
  return std::nullopt;
}

bool is_identifier(std::string_view text) {
  if (text.empty()) return false;
  if (!(std::isalpha(static_cast<unsigned char>(text[0])) || text[0] == '_')) return false;
  return std::all_of(text.begin(), text.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
  });
}

ValidationReport validate_data_model(const DataModel& dm) {
  ValidationReport report;
  auto violation = [&](const std::string& element, const std::string& message) {
    report.push_back({element, message});
  };

  std::set<std::string> class_names;
  for (const auto& c : dm.classes) {
    if (!is_identifier(c.name)) violation(c.name, "class name is not an identifier");
    if (!class_names.insert(c.name).second) violation(c.name, "duplicate class name");
    std::set<std::string> attr_names;
    for (const auto& a : c.attributes) {
      if (!is_identifier(a.name)) violation(c.name, "attribute '" + a.name + "' is not an identifier");
      if (!attr_names.insert(a.name).second) violation(c.name, "duplicate attribute '" + a.name + "'");
      if (a.name == c.id_column()) violation(c.name, "attribute '" + a.name + "' collides with the id column");
    }
  }

  std::set<std::string> assoc_names;
  for (const auto& a : dm.associations) {
    if (!is_identifier(a.name)) violation(a.name, "association name is not an identifier");
    if (!assoc_names.insert(a.name).second) violation(a.name, "duplicate association name");
    if (class_names.count(a.name)) violation(a.name, "association name collides with a class name");
    for (const auto* end : {&a.end1, &a.end2}) {
      if (!is_identifier(end->name)) violation(a.name, "end name '" + end->name + "' is not an identifier");
      if (!class_names.count(end->class_name))
        violation(a.name, "end '" + end->name + "' references undeclared class '" + end->class_name + "'");
    }
    if (a.end1.name == a.end2.name) violation(a.name, "both ends are named '" + a.end1.name + "'");
    // obj.endName must resolve uniquely from the opposite class.
    for (const auto& [end, opposite] : {std::pair{&a.end1, &a.end2}, std::pair{&a.end2, &a.end1}}) {
      if (const auto* owner = dm.find_class(opposite->class_name)) {
        if (owner->find_attribute(end->name))
          violation(a.name, "end '" + end->name + "' collides with an attribute of '" + owner->name + "'");
      }
    }
  }

  for (std::size_t i = 0; i < dm.associations.size(); ++i) {
    for (std::size_t j = i + 1; j < dm.associations.size(); ++j) {
      const auto& a = dm.associations[i];
      const auto& b = dm.associations[j];
      for (const auto& [ea, oa] : {std::pair{&a.end1, &a.end2}, std::pair{&a.end2, &a.end1}})
        for (const auto& [eb, ob] : {std::pair{&b.end1, &b.end2}, std::pair{&b.end2, &b.end1}})
          if (ea->name == eb->name && oa->class_name == ob->class_name)
            violation(b.name, "end '" + eb->name + "' is ambiguous from class '" + ob->class_name + "'");
    }
  }
  return report;
}

bool is_null(const Value& v) { return std::holds_alternative<NullValue>(v); }

std::string to_display(const Value& v) {
  if (is_null(v)) return "null";
  if (const auto* i = std::get_if<std::int64_t>(&v)) return std::to_string(*i);
  return std::get<std::string>(v);
}

std::optional<std::string> Scenario::class_of(std::string_view id) const {
  for (const auto& [cls, objs] : objects)
    if (objs.count(std::string(id))) return cls;
  return std::nullopt;
}

const AttributeRecord* Scenario::find_object(std::string_view cls, std::string_view id) const {
  auto c = objects.find(std::string(cls));
  if (c == objects.end()) return nullptr;
  auto o = c->second.find(std::string(id));
  return o == c->second.end() ? nullptr : &o->second;
}

Value Scenario::attribute(std::string_view cls, std::string_view id, std::string_view attr) const {
  const auto* rec = find_object(cls, id);
  if (!rec) return NullValue{};
  auto it = rec->find(std::string(attr));
  return it == rec->end() ? Value{NullValue{}} : it->second;
}

std::vector<ObjectId> Scenario::ids_of(std::string_view cls) const {
  std::vector<ObjectId> ids;
  auto c = objects.find(std::string(cls));
  if (c != objects.end())
    for (const auto& [id, rec] : c->second) ids.push_back(id);
  return ids;
}

Scenario normalized(const DataModel& dm, const Scenario& sc) {
  Scenario out;
  for (const auto& c : dm.classes) {
    auto& objs = out.objects[c.name];
    auto it = sc.objects.find(c.name);
    if (it == sc.objects.end()) continue;
    for (const auto& [id, rec] : it->second) {
      auto& dst = objs[id];
      for (const auto& a : c.attributes) {
        auto v = rec.find(a.name);
        dst[a.name] = v == rec.end() ? Value{NullValue{}} : v->second;
      }
    }
  }
  for (const auto& a : dm.associations) {
    auto& links = out.links[a.name];
    auto it = sc.links.find(a.name);
    if (it != sc.links.end()) links = it->second;
  }
  return out;
}

ValidationReport validate_scenario(const DataModel& dm, const Scenario& sc) {
  ValidationReport report;
  std::map<std::string, std::string> owner;
  for (const auto& [cls, objs] : sc.objects) {
    const auto* c = dm.find_class(cls);
    if (!c) {
      report.push_back({cls, "objects of undeclared class"});
      continue;
    }
    for (const auto& [id, rec] : objs) {
      if (id.empty()) report.push_back({cls, "empty object id"});
      auto [it, fresh] = owner.emplace(id, cls);
      if (!fresh) report.push_back({id, "object id used by classes '" + it->second + "' and '" + cls + "'"});
      for (const auto& [attr, value] : rec) {
        const auto* a = c->find_attribute(attr);
        if (!a) {
          report.push_back({id, "undeclared attribute '" + attr + "' of class '" + cls + "'"});
          continue;
        }
        bool ok = is_null(value) || (a->type == AttrType::Int ? std::holds_alternative<std::int64_t>(value)
                                                              : std::holds_alternative<std::string>(value));
        if (!ok) report.push_back({id, "attribute '" + attr + "' has a value of the wrong type"});
      }
    }
  }
  for (const auto& [assoc, links] : sc.links) {
    const auto* a = dm.find_association(assoc);
    if (!a) {
      report.push_back({assoc, "links of undeclared association"});
      continue;
    }
    for (const auto& [x, y] : links) {
      if (!sc.find_object(a->end1.class_name, x))
        report.push_back({assoc, "link end '" + x + "' is not an object of '" + a->end1.class_name + "'"});
      if (!sc.find_object(a->end2.class_name, y))
        report.push_back({assoc, "link end '" + y + "' is not an object of '" + a->end2.class_name + "'"});
    }
  }
  return report;
}

std::string sql_quote(std::string_view text) {
  std::string out = "'";
  for (char c : text) {
    if (c == '\'') out += '\'';
    out += c;
  }
  out += '\'';
  return out;
}

std::string sql_literal(const Value& v) {
  if (is_null(v)) return "NULL";
  if (const auto* i = std::get_if<std::int64_t>(&v)) return std::to_string(*i);
  return sql_quote(std::get<std::string>(v));
}

std::string sql_type(AttrType type) { return type == AttrType::Int ? "int" : "varchar(250)"; }

namespace {

void require_valid(const DataModel& dm) {
  auto report = validate_data_model(dm);
  if (!report.empty())
    throw Error(ErrorCode::InvalidModel, report.front().element + ": " + report.front().message);
}

}  // namespace

std::string sql_schema(const DataModel& dm) {
  require_valid(dm);
  std::ostringstream out;
  for (const auto& c : dm.classes) {
    out << "CREATE TABLE " << c.name << " (\n";
    out << "  " << c.id_column() << " varchar(250) NOT NULL,\n";
    for (const auto& a : c.attributes) out << "  " << a.name << ' ' << sql_type(a.type) << ",\n";
    out << "  PRIMARY KEY (" << c.id_column() << ")\n);\n";
  }
  for (const auto& a : dm.associations) {
    const auto* c1 = dm.find_class(a.end1.class_name);
    const auto* c2 = dm.find_class(a.end2.class_name);
    out << "CREATE TABLE " << a.name << " (\n";
    out << "  " << a.end1.name << " varchar(250) NOT NULL,\n";
    out << "  " << a.end2.name << " varchar(250) NOT NULL,\n";
    out << "  PRIMARY KEY (" << a.end1.name << ", " << a.end2.name << "),\n";
    out << "  FOREIGN KEY (" << a.end1.name << ") REFERENCES " << c1->name << '(' << c1->id_column() << "),\n";
    out << "  FOREIGN KEY (" << a.end2.name << ") REFERENCES " << c2->name << '(' << c2->id_column() << ")\n);\n";
  }
  return out.str();
}

std::string scenario_to_inserts(const DataModel& dm, const Scenario& sc) {
  require_valid(dm);
  auto report = validate_scenario(dm, sc);
  if (!report.empty())
    throw Error(ErrorCode::InvalidScenario, report.front().element + ": " + report.front().message);

  std::ostringstream out;
  for (const auto& c : dm.classes) {
    auto objs = sc.objects.find(c.name);
    if (objs == sc.objects.end()) continue;
    for (const auto& [id, rec] : objs->second) {
      out << "INSERT INTO " << c.name << " (" << c.id_column();
      for (const auto& a : c.attributes) out << ", " << a.name;
      out << ") VALUES (" << sql_quote(id);
      for (const auto& a : c.attributes) {
        auto v = rec.find(a.name);
        out << ", " << (v == rec.end() ? "NULL" : sql_literal(v->second));
      }
      out << ");\n";
    }
  }
  for (const auto& a : dm.associations) {
    auto links = sc.links.find(a.name);
    if (links == sc.links.end()) continue;
    for (const auto& [x, y] : links->second)
      out << "INSERT INTO " << a.name << " (" << a.end1.name << ", " << a.end2.name << ") VALUES ("
          << sql_quote(x) << ", " << sql_quote(y) << ");\n";
  }
  return out.str();
}

}  // namespace fgac
