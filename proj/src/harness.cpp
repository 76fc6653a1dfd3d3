#include "fgac/harness.hpp"

#include <algorithm>
#include <functional>
#include <memory>
#include <set>
#include <sstream>

#include "fgac/error.hpp"

namespace fgac::harness {

using sql::Expr;
using sql::Query;

std::size_t ExecStats::total_auth_calls() const {
  std::size_t n = 0;
  for (const auto& [name, count] : auth_calls) n += count;
  return n;
}

// ---- database -----------------------------------------------------------------

Database Database::from_scenario(const DataModel& dm, const Scenario& sc) {
  Database db;
  db.execute_script(sql_schema(dm));
  db.execute_script(scenario_to_inserts(dm, sc));
  return db;
}

void Database::execute_script(std::string_view script) {
  for (const auto& stmt : sql::parse_script(script)) {
    if (const auto* create = std::get_if<sql::CreateTable>(&stmt)) {
      if (tables_.count(create->name))
        throw Error(ErrorCode::InvalidInput, "table '" + create->name + "' already exists");
      tables_[create->name] = Table{create->columns, {}};
      continue;
    }
    const auto& ins = std::get<sql::Insert>(stmt);
    auto it = tables_.find(ins.table);
    if (it == tables_.end()) throw Error(ErrorCode::InvalidInput, "insert into unknown table '" + ins.table + "'");
    auto& table = it->second;
    if (ins.columns.size() != ins.values.size())
      throw Error(ErrorCode::InvalidInput, "insert into '" + ins.table + "' has mismatched value count");
    Row row(table.columns.size(), NullValue{});
    for (std::size_t i = 0; i < ins.columns.size(); ++i) {
      auto pos = std::find(table.columns.begin(), table.columns.end(), ins.columns[i]);
      if (pos == table.columns.end())
        throw Error(ErrorCode::InvalidInput, "unknown column '" + ins.columns[i] + "' in '" + ins.table + "'");
      row[pos - table.columns.begin()] = ins.values[i];
    }
    table.rows.push_back(std::move(row));
  }
}

const Table* Database::find(std::string_view name) const {
  auto it = tables_.find(std::string(name));
  return it == tables_.end() ? nullptr : &it->second;
}

Scenario Database::read_back(const DataModel& dm) const {
  Scenario sc;
  auto text = [](const Value& v) {
    if (const auto* s = std::get_if<std::string>(&v)) return *s;
    throw Error(ErrorCode::InvalidInput, "identifier column holds a non-text value");
  };
  for (const auto& c : dm.classes) {
    const auto* t = find(c.name);
    if (!t) continue;
    for (const auto& row : t->rows) {
      AttributeRecord rec;
      for (std::size_t i = 1; i < t->columns.size(); ++i) rec[t->columns[i]] = row[i];
      sc.objects[c.name][text(row[0])] = std::move(rec);
    }
  }
  for (const auto& a : dm.associations) {
    const auto* t = find(a.name);
    if (!t) continue;
    for (const auto& row : t->rows) sc.links[a.name].insert({text(row[0]), text(row[1])});
  }
  return normalized(dm, sc);
}

// ---- evaluation -----------------------------------------------------------------

namespace {

struct SecurityFault {
  std::string message;
};

struct SqlFault {
  std::string message;
};

// Decides a Checked node from its evaluated arguments; replaces the AuthFunc
// call when set.
using CheckHook = std::function<bool(const std::string& function, const std::vector<Value>& args)>;

struct Context {
  const Database* db = nullptr;
  const std::map<std::string, Table>* temps = nullptr;
  std::map<std::string, const secquery::AuthFuncDef*> functions;
  ExecStats* stats = nullptr;
  CheckHook hook;
};

struct Source {
  std::string name;
  std::vector<std::string> columns;
  std::size_t offset = 0;
};

struct Scope {
  std::vector<Source> sources;
};

struct Env {
  const Scope* scope = nullptr;
  const Row* row = nullptr;
  const Env* parent = nullptr;
};

std::optional<bool> truth(const Value& v) {
  if (is_null(v)) return std::nullopt;
  if (const auto* i = std::get_if<std::int64_t>(&v)) return *i != 0;
  throw SqlFault{"text value '" + std::get<std::string>(v) + "' used as a condition"};
}

Value from_truth(std::optional<bool> b) {
  if (!b) return NullValue{};
  return std::int64_t{*b ? 1 : 0};
}

Value compare(const std::string& op, const Value& a, const Value& b) {
  if (is_null(a) || is_null(b)) return NullValue{};
  if (a.index() != b.index())
    throw SqlFault{"cannot compare " + to_display(a) + " with " + to_display(b)};
  int c = a < b ? -1 : (b < a ? 1 : 0);
  bool r = false;
  if (op == "=") r = c == 0;
  else if (op == "<>") r = c != 0;
  else if (op == "<") r = c < 0;
  else if (op == ">") r = c > 0;
  else if (op == "<=") r = c <= 0;
  else if (op == ">=") r = c >= 0;
  else throw SqlFault{"unknown operator '" + op + "'"};
  return std::int64_t{r ? 1 : 0};
}

bool is_aggregate(const Expr& e) {
  return e.kind == Expr::Kind::Call &&
         (e.name == "COUNT" || e.name == "MAX" || e.name == "MIN" || e.name == "SUM" || e.name == "AVG");
}

class Executor {
 public:
  Executor(const Context& ctx, const Params& params) : ctx_(ctx), params_(params) {}

  Table run(const Query& q, const Env* outer) {
    std::vector<Table> owned;
    Scope scope;
    std::vector<const Table*> inputs;
    auto add = [&](const sql::FromItem& item) {
      const Table* t = nullptr;
      std::string name = item.exposed_name();
      if (item.subquery) {
        owned.push_back(run(*item.subquery, outer));
        t = &owned.back();
      } else {
        t = table(item.table);
      }
      std::size_t offset = scope.sources.empty() ? 0 : scope.sources.back().offset + scope.sources.back().columns.size();
      scope.sources.push_back({name, t->columns, offset});
      inputs.push_back(t);
    };
    // Subquery tables are kept in `owned`; reserve up front so pointers stay valid.
    owned.reserve(q.from.size() + q.joins.size());
    for (const auto& f : q.from) add(f);
    for (const auto& j : q.joins) add(j.item);
    std::size_t width = scope.sources.back().offset + scope.sources.back().columns.size();

    std::vector<Row> rows{Row(width, NullValue{})};
    auto product = [&](std::size_t index, const sql::ExprPtr& on) {
      std::vector<Row> next;
      const auto& src = scope.sources[index];
      for (const auto& left : rows)
        for (const auto& right : inputs[index]->rows) {
          Row r = left;
          std::copy(right.begin(), right.end(), r.begin() + static_cast<std::ptrdiff_t>(src.offset));
          if (on) {
            Env env{&scope, &r, outer};
            if (truth(eval(*on, &env)) != true) continue;
          }
          next.push_back(std::move(r));
        }
      rows = std::move(next);
    };
    for (std::size_t i = 0; i < q.from.size(); ++i) product(i, nullptr);
    for (std::size_t i = 0; i < q.joins.size(); ++i) product(q.from.size() + i, q.joins[i].on);

    if (q.where) {
      std::vector<Row> kept;
      for (auto& r : rows) {
        Env env{&scope, &r, outer};
        if (truth(eval(*q.where, &env)) == true) kept.push_back(std::move(r));
      }
      rows = std::move(kept);
    }

    Table out;
    out.columns = columns_of(q, scope);
    bool aggregate = std::any_of(q.items.begin(), q.items.end(), [](const auto& i) { return is_aggregate(*i.expr); });
    if (aggregate) {
      Row r;
      for (const auto& item : q.items) {
        if (is_aggregate(*item.expr)) {
          r.push_back(aggregate_value(*item.expr, rows, scope, outer));
        } else if (rows.empty()) {
          r.push_back(NullValue{});
        } else {
          Env env{&scope, &rows.front(), outer};
          r.push_back(eval(*item.expr, &env));
        }
      }
      out.rows.push_back(std::move(r));
    } else {
      for (const auto& row : rows) {
        Env env{&scope, &row, outer};
        Row r;
        for (const auto& item : q.items) {
          if (item.expr->kind == Expr::Kind::Star) {
            for (const auto& s : scope.sources) {
              if (!item.expr->qualifier.empty() && item.expr->qualifier != s.name) continue;
              for (std::size_t c = 0; c < s.columns.size(); ++c) r.push_back(row[s.offset + c]);
            }
          } else {
            r.push_back(eval(*item.expr, &env));
          }
        }
        out.rows.push_back(std::move(r));
      }
    }
    if (q.distinct) {
      std::vector<Row> unique;
      std::set<Row> seen;
      for (auto& r : out.rows)
        if (seen.insert(r).second) unique.push_back(std::move(r));
      out.rows = std::move(unique);
    }
    return out;
  }

  Value eval(const Expr& e, const Env* env) {
    switch (e.kind) {
      case Expr::Kind::Column:
        return column(e, env);
      case Expr::Kind::Star:
        throw SqlFault{"'*' outside a select list"};
      case Expr::Kind::IntLit:
        return e.int_value;
      case Expr::Kind::StringLit:
        return e.string_value;
      case Expr::Kind::BoolLit:
        return std::int64_t{e.flag ? 1 : 0};
      case Expr::Kind::NullLit:
        return NullValue{};
      case Expr::Kind::Binary: {
        auto a = eval(*e.args[0], env);
        auto b = eval(*e.args[1], env);
        if (e.op == "AND") {
          auto x = truth(a), y = truth(b);
          if (x == false || y == false) return from_truth(false);
          if (!x || !y) return NullValue{};
          return from_truth(true);
        }
        if (e.op == "OR") {
          auto x = truth(a), y = truth(b);
          if (x == true || y == true) return from_truth(true);
          if (!x || !y) return NullValue{};
          return from_truth(false);
        }
        return compare(e.op, a, b);
      }
      case Expr::Kind::Not: {
        auto t = truth(eval(*e.args[0], env));
        return t ? from_truth(!*t) : Value{NullValue{}};
      }
      case Expr::Kind::IsNull: {
        bool null = is_null(eval(*e.args[0], env));
        return from_truth(e.flag ? !null : null);
      }
      case Expr::Kind::Exists:
        return from_truth(!run(*e.query, env).rows.empty());
      case Expr::Kind::Subquery: {
        auto t = run(*e.query, env);
        if (t.columns.size() != 1) throw SqlFault{"scalar subquery returns " + std::to_string(t.columns.size()) + " columns"};
        if (t.rows.empty()) return NullValue{};
        if (t.rows.size() > 1) throw SqlFault{"scalar subquery returns more than one row"};
        return t.rows.front().front();
      }
      case Expr::Kind::Call:
        return call(e, env);
      case Expr::Kind::Case: {
        if (e.operand) {
          auto v = eval(*e.operand, env);
          for (const auto& [w, then] : e.whens)
            if (truth(compare("=", v, eval(*w, env))) == true) return eval(*then, env);
        } else {
          for (const auto& [w, then] : e.whens)
            if (truth(eval(*w, env)) == true) return eval(*then, env);
        }
        return e.otherwise ? eval(*e.otherwise, env) : Value{NullValue{}};
      }
      case Expr::Kind::Checked: {
        std::vector<Value> args;
        for (const auto& a : e.args) args.push_back(eval(*a, env));
        bool ok;
        if (ctx_.hook) {
          ok = ctx_.hook(e.name, args);
        } else {
          auto r = invoke(e.name, args);
          auto expected = compare("=", r, std::int64_t{1});
          ok = truth(expected) == true;
        }
        if (!ok) throw SecurityFault{"access denied by " + e.name + " (" + e.resource + ")"};
        return eval(*e.value, env);
      }
    }
    throw SqlFault{"unsupported expression"};
  }

 private:
  const Table* table(const std::string& name) const {
    if (ctx_.temps) {
      auto it = ctx_.temps->find(name);
      if (it != ctx_.temps->end()) return &it->second;
    }
    if (const auto* t = ctx_.db->find(name)) return t;
    throw SqlFault{"unknown table '" + name + "'"};
  }

  std::vector<std::string> columns_of(const Query& q, const Scope& scope) const {
    std::vector<std::string> out;
    for (const auto& item : q.items) {
      if (item.expr->kind == Expr::Kind::Star) {
        for (const auto& s : scope.sources)
          if (item.expr->qualifier.empty() || item.expr->qualifier == s.name)
            out.insert(out.end(), s.columns.begin(), s.columns.end());
      } else if (!item.alias.empty()) {
        out.push_back(item.alias);
      } else if (item.expr->kind == Expr::Kind::Column) {
        out.push_back(item.expr->name);
      } else {
        out.push_back(sql::render_expr(*item.expr));
      }
    }
    return out;
  }

  Value column(const Expr& e, const Env* env) const {
    if (e.qualifier.empty()) {
      auto p = params_.find(e.name);
      if (p != params_.end()) return p->second;
    }
    for (const Env* f = env; f; f = f->parent) {
      const Value* hit = nullptr;
      bool qualifier_known = false;
      for (const auto& s : f->scope->sources) {
        if (!e.qualifier.empty() && s.name != e.qualifier) continue;
        qualifier_known = true;
        auto pos = std::find(s.columns.begin(), s.columns.end(), e.name);
        if (pos == s.columns.end()) continue;
        if (hit) throw SqlFault{"column '" + e.name + "' is ambiguous"};
        hit = &(*f->row)[s.offset + static_cast<std::size_t>(pos - s.columns.begin())];
      }
      if (hit) return *hit;
      if (!e.qualifier.empty() && qualifier_known) break;
    }
    throw SqlFault{"unknown column '" + (e.qualifier.empty() ? "" : e.qualifier + ".") + e.name + "'"};
  }

  Value aggregate_value(const Expr& e, const std::vector<Row>& rows, const Scope& scope, const Env* outer) {
    if (e.args.size() != 1) throw SqlFault{e.name + " takes one argument"};
    if (e.args[0]->kind == Expr::Kind::Star) {
      if (e.name != "COUNT") throw SqlFault{e.name + "(*) is not supported"};
      return static_cast<std::int64_t>(rows.size());
    }
    std::vector<Value> values;
    for (const auto& r : rows) {
      Env env{&scope, &r, outer};
      auto v = eval(*e.args[0], &env);
      if (!is_null(v)) values.push_back(std::move(v));
    }
    if (e.name == "COUNT") return static_cast<std::int64_t>(values.size());
    if (values.empty()) return NullValue{};
    if (e.name == "MAX") return *std::max_element(values.begin(), values.end());
    if (e.name == "MIN") return *std::min_element(values.begin(), values.end());
    std::int64_t sum = 0;
    for (const auto& v : values) {
      const auto* i = std::get_if<std::int64_t>(&v);
      if (!i) throw SqlFault{e.name + " over text values"};
      sum += *i;
    }
    if (e.name == "SUM") return sum;
    return sum / static_cast<std::int64_t>(values.size());
  }

  Value call(const Expr& e, const Env* env) {
    if (is_aggregate(e)) throw SqlFault{"aggregate " + e.name + " outside a select list"};
    if (e.name == "throw_error") throw SecurityFault{"throw_error() called"};
    std::vector<Value> args;
    for (const auto& a : e.args) args.push_back(eval(*a, env));
    return invoke(e.name, args);
  }

  Value invoke(const std::string& name, const std::vector<Value>& args) {
    auto it = ctx_.functions.find(name);
    if (it == ctx_.functions.end()) throw SqlFault{"unknown function '" + name + "'"};
    const auto& f = *it->second;
    if (args.size() != f.keywords.size() + 2) throw SqlFault{"wrong argument count for " + name};
    Params p{{"caller", args[0]}, {"role", args[1]}};
    for (std::size_t i = 0; i < f.keywords.size(); ++i) p[f.keywords[i]] = args[i + 2];
    if (ctx_.stats) ++ctx_.stats->auth_calls[name];
    Context inner = ctx_;
    inner.temps = nullptr;  // functions read base tables only
    return Executor(inner, p).eval(*f.body, nullptr);
  }

  const Context& ctx_;
  const Params& params_;
};

template <typename F>
ExecResult guarded(F&& body) {
  try {
    return body();
  } catch (const SecurityFault& f) {
    return SecurityError{f.message};
  } catch (const SqlFault& f) {
    return SqlError{f.message};
  }
}

Rows to_rows(Table t) { return Rows{std::move(t.columns), std::move(t.rows)}; }

// Runs the steps and the epilogue of a procedure; shared by exec_procedure
// and the reference judgment.
Rows run_procedure(const Context& base, const std::vector<secquery::Step>& steps, const Query& epilogue,
                   const Params& params) {
  std::map<std::string, Table> temps;
  Context ctx = base;
  ctx.temps = &temps;
  Executor ex(ctx, params);
  for (const auto& step : steps) {
    if (const auto* t = std::get_if<secquery::TempStep>(&step)) {
      if (temps.count(t->name)) throw SqlFault{"temporary table '" + t->name + "' already exists"};
      auto table = ex.run(*t->body, nullptr);
      temps[t->name] = std::move(table);
      continue;
    }
    const auto& g = std::get<secquery::GuardedStep>(step);
    bool cond = truth(ex.eval(*g.condition, nullptr)) == true;
    auto table = ex.run(cond ? *g.unchecked : *g.checked, nullptr);
    temps[g.name] = std::move(table);
  }
  return to_rows(ex.run(epilogue, nullptr));
}

}  // namespace

ExecResult exec_query(const Database& db, const sql::Query& q, const Params& params) {
  return guarded([&]() -> ExecResult {
    Context ctx;
    ctx.db = &db;
    return to_rows(Executor(ctx, params).run(q, nullptr));
  });
}

ExecResult eval_expression(const Database& db, const sql::Expr& e, const Params& params) {
  return guarded([&]() -> ExecResult {
    Context ctx;
    ctx.db = &db;
    auto v = Executor(ctx, params).eval(e, nullptr);
    return Rows{{sql::render_expr(e)}, {{v}}};
  });
}

ExecResult exec_procedure(const Database& db, const secquery::StoredProcedure& proc,
                          const std::vector<secquery::AuthFuncDef>& functions, const std::string& caller,
                          const std::string& role, ExecStats* stats) {
  return guarded([&]() -> ExecResult {
    Context ctx;
    ctx.db = &db;
    ctx.stats = stats;
    for (const auto& f : functions) ctx.functions[f.name] = &f;
    Params params{{"caller", caller}, {"role", role}};
    return run_procedure(ctx, proc.steps, *proc.epilogue, params);
  });
}

bool auth_query_ref(const SecurityModel& s, const ocl::ObjectRef& caller, const std::string& role,
                    const sql::Query& q, const Database& db) {
  if (!s.has_role(role)) throw Error(ErrorCode::UnknownRole, "role '" + role + "' is not declared by " + s.name);
  const auto& dm = *s.data_model;
  auto plan = secquery::plan_query(s, q);
  auto sc = db.read_back(dm);

  auto object = [&](const Value& v, const std::string& cls) {
    const auto* id = std::get_if<std::string>(&v);
    if (!id) throw SqlFault{"check argument is not an identifier"};
    return ocl::ObjectRef{*id, cls};
  };

  Context ctx;
  ctx.db = &db;
  ctx.hook = [&](const std::string& function, const std::vector<Value>& args) {
    const auto& res = plan.functions.at(function);
    ocl::Binding targets;
    if (const auto* a = std::get_if<AttributeRes>(&res)) {
      targets["self"] = object(args.at(2), a->class_name);
    } else {
      const auto* assoc = dm.find_association(std::get<AssociationRes>(res).association);
      targets[assoc->end1.name] = object(args.at(2), assoc->end1.class_name);
      targets[assoc->end2.name] = object(args.at(3), assoc->end2.class_name);
    }
    return auth_decision(s, sc, caller, role, res, targets);
  };

  std::vector<secquery::Step> steps(plan.steps.begin(), plan.steps.end());
  Params params{{"caller", caller.id}, {"role", role}};
  try {
    run_procedure(ctx, steps, *plan.epilogue, params);
  } catch (const SecurityFault&) {
    return false;
  } catch (const SqlFault& f) {
    throw Error(ErrorCode::InvalidInput, "query fails on this database: " + f.message);
  }
  return true;
}

bool same_rows(const Rows& a, const Rows& b) {
  if (a.rows.size() != b.rows.size()) return false;
  auto x = a.rows;
  auto y = b.rows;
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  return x == y;
}

std::string to_string(const ExecResult& r) {
  if (const auto* e = std::get_if<SecurityError>(&r)) return "SecurityError: " + e->message + "\n";
  if (const auto* e = std::get_if<SqlError>(&r)) return "SqlError: " + e->message + "\n";
  const auto& rows = std::get<Rows>(r);
  std::ostringstream out;
  for (std::size_t i = 0; i < rows.columns.size(); ++i) out << (i ? "\t" : "") << rows.columns[i];
  out << '\n';
  for (const auto& row : rows.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "\t" : "") << to_display(row[i]);
    out << '\n';
  }
  return out.str();
}

}  // namespace fgac::harness
