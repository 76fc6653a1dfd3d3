#include "fgac/ocl2sql.hpp"

#include <vector>

#include "fgac/error.hpp"

namespace fgac::ocl2sql {

using ocl::Expr;

std::string Registry::key(const ocl::ExprPtr& constraint) {
  return ocl::render_ocl(*ocl::normalize_variables(constraint));
}

void Registry::add(const std::string& constraint, std::string sql) {
  entries_[key(ocl::parse_syntax(constraint))] = std::move(sql);
}

const std::string* Registry::find(const ocl::Expr& constraint) const {
  auto it = entries_.find(key(std::make_shared<const Expr>(constraint)));
  return it == entries_.end() ? nullptr : &it->second;
}

namespace {

// A collection compiled to the rows of one aliased table.
struct CompiledCollection {
  std::string from;   // "Student t0"
  std::string alias;  // "t0"
  std::string elem;   // "t0.Student_id"
  std::string element_class;
  bool class_table = false;  // rows are the class table itself
  std::vector<std::string> conds;
};

struct VarBinding {
  std::string name;
  std::string elem;
  std::string alias;  // set when rows come from the class table
};

std::string join_conds(const std::vector<std::string>& conds) {
  std::string out;
  for (std::size_t i = 0; i < conds.size(); ++i) {
    if (i) out += " AND ";
    out += conds[i];
  }
  return out;
}

class Compiler {
 public:
  explicit Compiler(const DataModel& dm) : dm_(dm) {}

  std::string boolean(const Expr& e) {
    switch (e.kind) {
      case Expr::Kind::BoolLit:
        return e.bool_value ? "TRUE" : "FALSE";
      case Expr::Kind::And:
        return "(" + boolean(*e.args[0]) + ") AND (" + boolean(*e.args[1]) + ")";
      case Expr::Kind::Or:
        return "(" + boolean(*e.args[0]) + ") OR (" + boolean(*e.args[1]) + ")";
      case Expr::Kind::Not:
        return "NOT (" + boolean(*e.args[0]) + ")";
      case Expr::Kind::Compare:
        return comparison(e);
      case Expr::Kind::IsEmpty: {
        auto c = collection(*e.args[0]);
        return "NOT EXISTS (" + select_one(c) + ")";
      }
      case Expr::Kind::Includes: {
        if (e.args[1]->kind == Expr::Kind::NullLit) return "FALSE";
        auto c = collection(*e.args[0]);
        c.conds.push_back(c.elem + " = " + object(*e.args[1]));
        return "EXISTS (" + select_one(c) + ")";
      }
      case Expr::Kind::Exists:
      case Expr::Kind::ForAll:
        return quantifier(e);
      default:
        throw Error(ErrorCode::Uncompilable, "'" + ocl::render_ocl(e) + "' is not a Boolean construct");
    }
  }

 private:
  std::string fresh_alias() { return "t" + std::to_string(counter_++); }

  static std::string select_one(const CompiledCollection& c) {
    std::string out = "SELECT 1 FROM " + c.from;
    if (!c.conds.empty()) out += " WHERE " + join_conds(c.conds);
    return out;
  }

  const VarBinding& lookup_var(const std::string& name) const {
    for (auto it = vars_.rbegin(); it != vars_.rend(); ++it)
      if (it->name == name) return *it;
    throw Error(ErrorCode::Uncompilable, "unbound variable '" + name + "'");
  }

  std::string object(const Expr& e) {
    switch (e.kind) {
      case Expr::Kind::Keyword: return e.name;
      case Expr::Kind::Variable: return lookup_var(e.name).elem;
      case Expr::Kind::ObjectLit: return sql_quote(e.name);
      case Expr::Kind::NullLit: return "NULL";
      default:
        throw Error(ErrorCode::Uncompilable, "'" + ocl::render_ocl(e) + "' is not an object expression");
    }
  }

  std::string scalar(const Expr& e) {
    switch (e.kind) {
      case Expr::Kind::IntLit: return std::to_string(e.int_value);
      case Expr::Kind::StringLit: return sql_quote(e.string_value);
      case Expr::Kind::NullLit: return "NULL";
      case Expr::Kind::Attribute: {
        const auto& src = *e.args[0];
        const auto& cls = src.type.class_name;
        if (src.kind == Expr::Kind::Variable) {
          const auto& v = lookup_var(src.name);
          if (!v.alias.empty()) return v.alias + "." + e.name;
        }
        auto alias = fresh_alias();
        return "(SELECT " + alias + "." + e.name + " FROM " + cls + " " + alias + " WHERE " + alias + "." + cls +
               "_id = " + object(src) + ")";
      }
      default:
        return object(e);
    }
  }

  static bool nullable(const Expr& e) {
    switch (e.kind) {
      case Expr::Kind::Attribute:
      case Expr::Kind::NullLit:
        return true;
      case Expr::Kind::Compare:
        if (e.op == ocl::CompareOp::Eq || e.op == ocl::CompareOp::Ne) return false;
        return nullable(*e.args[0]) || nullable(*e.args[1]);
      case Expr::Kind::And:
      case Expr::Kind::Or:
      case Expr::Kind::Not:
        for (const auto& a : e.args)
          if (nullable(*a)) return true;
        return false;
      case Expr::Kind::Exists:
      case Expr::Kind::ForAll:
        return nullable(*e.args[1]);
      default:
        return false;
    }
  }

  std::string comparison(const Expr& e) {
    const auto& lhs = *e.args[0];
    const auto& rhs = *e.args[1];
    if (e.op == ocl::CompareOp::Eq || e.op == ocl::CompareOp::Ne) {
      std::string eq;
      bool ln = lhs.kind == Expr::Kind::NullLit;
      bool rn = rhs.kind == Expr::Kind::NullLit;
      if (ln && rn) {
        eq = "TRUE";
      } else if (ln || rn) {
        eq = scalar(ln ? rhs : lhs) + " IS NULL";
      } else if (!nullable(lhs) && !nullable(rhs)) {
        auto a = scalar(lhs);
        auto b = scalar(rhs);
        return a + (e.op == ocl::CompareOp::Eq ? " = " : " <> ") + b;
      } else {
        auto a = scalar(lhs);
        auto b = scalar(rhs);
        eq = "((" + a + " IS NULL AND " + b + " IS NULL) OR (" + a + " IS NOT NULL AND " + b + " IS NOT NULL AND " +
             a + " = " + b + "))";
      }
      return e.op == ocl::CompareOp::Eq ? eq : "NOT (" + eq + ")";
    }
    return scalar(lhs) + " " + std::string(ocl::to_string(e.op)) + " " + scalar(rhs);
  }

  CompiledCollection collection(const Expr& e) {
    switch (e.kind) {
      case Expr::Kind::AllInstances: {
        CompiledCollection c;
        c.alias = fresh_alias();
        c.from = e.name + " " + c.alias;
        c.elem = c.alias + "." + e.name + "_id";
        c.element_class = e.name;
        c.class_table = true;
        return c;
      }
      case Expr::Kind::Navigation: {
        const auto& src = *e.args[0];
        auto nav = dm_.find_end(src.type.class_name, e.name);
        if (!nav) throw Error(ErrorCode::Uncompilable, "unknown association end '" + e.name + "'");
        CompiledCollection c;
        c.alias = fresh_alias();
        c.from = nav->association->name + " " + c.alias;
        c.elem = c.alias + "." + nav->target().name;
        c.element_class = nav->target().class_name;
        c.conds.push_back(c.alias + "." + nav->source().name + " = " + object(src));
        return c;
      }
      case Expr::Kind::Select: {
        auto c = collection(*e.args[0]);
        vars_.push_back({e.name, c.elem, c.class_table ? c.alias : std::string()});
        c.conds.push_back("(" + boolean(*e.args[1]) + ")");
        vars_.pop_back();
        return c;
      }
      default:
        throw Error(ErrorCode::Uncompilable, "'" + ocl::render_ocl(e) + "' is not a collection construct");
    }
  }

  std::string quantifier(const Expr& e) {
    auto c = collection(*e.args[0]);
    vars_.push_back({e.name, c.elem, c.class_table ? c.alias : std::string()});
    auto body = boolean(*e.args[1]);
    vars_.pop_back();
    bool exists = e.kind == Expr::Kind::Exists;
    auto with = [&](const std::string& extra) {
      auto copy = c;
      copy.conds.push_back(extra);
      return "EXISTS (" + select_one(copy) + ")";
    };
    if (!nullable(*e.args[1])) {
      if (exists) return with("(" + body + ")");
      return "NOT " + with("NOT (" + body + ")");
    }
    if (exists)
      return "CASE WHEN " + with("(" + body + ")") + " THEN TRUE WHEN " + with("(" + body + ") IS NULL") +
             " THEN NULL ELSE FALSE END";
    return "CASE WHEN " + with("NOT (" + body + ")") + " THEN FALSE WHEN " + with("(" + body + ") IS NULL") +
           " THEN NULL ELSE TRUE END";
  }

  const DataModel& dm_;
  int counter_ = 0;
  std::vector<VarBinding> vars_;
};

}  // namespace

std::string compile_fallback(const ocl::Expr& constraint, const DataModel& dm) {
  return Compiler(dm).boolean(constraint);
}

SqlConstraintImpl map_ocl_to_sql(const ocl::ExprPtr& constraint, const DataModel& dm, const Registry& registry) {
  if (const auto* sql = registry.find(*constraint)) return {constraint, *sql, Origin::Manual};
  return {constraint, compile_fallback(*constraint, dm), Origin::Generated};
}

}  // namespace fgac::ocl2sql
