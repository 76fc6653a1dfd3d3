#include "fgac/secquery.hpp"

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <cstdio>
#include <set>

#include "fgac/error.hpp"

namespace fgac::secquery {

using sql::Expr;
using sql::ExprPtr;
using sql::FromItem;
using sql::Query;
using sql::QueryPtr;

std::string CheckSite::id() const {
  return "TEMP" + std::to_string(step + 1) + ":" + to_string(resource);
}

std::string sanitize(const std::string& name) {
  std::string out = name;
  for (auto& c : out)
    if (!std::isalnum(static_cast<unsigned char>(c))) c = '_';
  return out;
}

std::string auth_func_name(const SecurityModel& s, const Resource& res) {
  std::string base = "AuthFunc_" + sanitize(s.name) + "_";
  if (const auto* a = std::get_if<AttributeRes>(&res)) return base + a->class_name + "_" + a->attribute;
  return base + std::get<AssociationRes>(res).association;
}

std::string procedure_name(const SecurityModel& s, const sql::Query& q) {
  std::uint32_t h = 2166136261u;
  for (unsigned char c : sql::render_sql(q)) {
    h ^= c;
    h *= 16777619u;
  }
  char hex[9];
  std::snprintf(hex, sizeof hex, "%08x", h);
  return "SecQuery_" + sanitize(s.name) + "_" + hex;
}

namespace {

ExprPtr with_qualifier(const Expr& col, std::string qualifier) {
  return sql::column(col.name, std::move(qualifier));
}

bool is_aggregate(const Expr& e) {
  if (e.kind != Expr::Kind::Call) return false;
  return e.name == "COUNT" || e.name == "MAX" || e.name == "MIN" || e.name == "SUM" || e.name == "AVG";
}

bool is_count_star(const Expr& e) {
  return e.kind == Expr::Kind::Call && e.name == "COUNT" && e.args.size() == 1 &&
         e.args[0]->kind == Expr::Kind::Star;
}

bool has_aggregate(const Query& q) {
  return std::any_of(q.items.begin(), q.items.end(), [](const auto& i) { return is_aggregate(*i.expr); });
}

std::vector<ExprPtr> conjuncts(const ExprPtr& e) {
  if (!e) return {};
  if (e->kind == Expr::Kind::Binary && e->op == "AND") {
    auto l = conjuncts(e->args[0]);
    auto r = conjuncts(e->args[1]);
    l.insert(l.end(), r.begin(), r.end());
    return l;
  }
  return {e};
}

ExprPtr conjoin(const std::vector<ExprPtr>& parts) {
  ExprPtr out;
  for (const auto& p : parts) out = out ? sql::binary("AND", out, p) : p;
  return out;
}

// One FROM/JOIN item of a level after its subqueries have been staged.
struct Source {
  std::string original;  // exposed name in the input query
  FromItem item;         // item as it appears in the staged query
  std::vector<std::string> columns;
  const ClassDef* cls = nullptr;  // set for class base tables
};

class Planner {
 public:
  Planner(const SecurityModel& s, const sql::Query& top) : s_(s), dm_(*s.data_model) {
    collect_mentioned(top);
  }

  StagingPlan run(const Query& q) {
    if (association_only(q)) {
      auto last = stage_assoc(q, true);
      plan_.epilogue = epilogue(q, last, top_names(q, *dm_.find_association(q.from[0].table)));
    } else {
      auto lvl = stage_level(q, true);
      plan_.epilogue = level_epilogue(q, lvl);
    }
    return std::move(plan_);
  }

 private:
  // ---- bookkeeping ----------------------------------------------------------

  std::optional<std::vector<std::string>> lookup(std::string_view t) const {
    auto it = temp_cols_.find(std::string(t));
    if (it != temp_cols_.end()) return it->second;
    return sql::table_columns(dm_, t);
  }

  std::string add_step(QueryPtr body) {
    std::string name = "TEMP" + std::to_string(plan_.steps.size() + 1);
    temp_cols_[name] = sql::output_columns(*body, [this](std::string_view t) { return lookup(t); });
    std::size_t index = plan_.steps.size();
    sql::rewrite_query(*body, [&](const ExprPtr& n) -> ExprPtr {
      if (n->kind != Expr::Kind::Checked) return nullptr;
      auto res = plan_.functions.at(n->name);
      bool seen = std::any_of(plan_.checks.begin(), plan_.checks.end(), [&](const CheckSite& c) {
        return c.step == index && c.function == n->name;
      });
      if (!seen) plan_.checks.push_back({index, res, n->name});
      return nullptr;
    });
    plan_.steps.push_back({name, std::move(body)});
    return name;
  }

  void collect_mentioned(const Query& q) {
    auto visit_item = [&](const FromItem& item) {
      if (item.subquery) {
        collect_mentioned(*item.subquery);
      } else if (dm_.find_class(item.table) &&
                 std::find(mentioned_.begin(), mentioned_.end(), item.table) == mentioned_.end()) {
        mentioned_.push_back(item.table);
      }
    };
    for (const auto& f : q.from) visit_item(f);
    for (const auto& j : q.joins) visit_item(j.item);
  }

  bool association_only(const Query& q) const {
    return q.from.size() == 1 && q.joins.empty() && !q.from[0].subquery && dm_.find_association(q.from[0].table);
  }

  // Nested EXISTS / scalar subqueries are kept verbatim, so they must not
  // read anything the policy protects.
  void check_unprotected(const Query& q, bool scalar) const {
    auto item_check = [&](const FromItem& item) {
      if (item.subquery) {
        check_unprotected(*item.subquery, true);
      } else if (dm_.find_association(item.table)) {
        throw Error(ErrorCode::UnsupportedQuery, "nested subquery reads association '" + item.table + "'");
      }
    };
    for (const auto& f : q.from) item_check(f);
    for (const auto& j : q.joins) item_check(j.item);
    auto check_expr = [&](const ExprPtr& e) {
      if (!e) return;
      sql::rewrite(e, [&](const ExprPtr& n) -> ExprPtr {
        if (n->kind == Expr::Kind::Column && is_attribute_name(n->name))
          throw Error(ErrorCode::UnsupportedQuery, "nested subquery reads protected column '" + n->name + "'");
        if (n->query) check_unprotected(*n->query, n->kind == Expr::Kind::Subquery);
        return nullptr;
      });
    };
    for (const auto& i : q.items) {
      if (scalar && i.expr->kind == Expr::Kind::Star)
        throw Error(ErrorCode::UnsupportedQuery, "nested subquery selects '*'");
      check_expr(i.expr);
    }
    for (const auto& j : q.joins) check_expr(j.on);
    check_expr(q.where);
  }

  void check_nested(const ExprPtr& e) const {
    if (!e) return;
    sql::rewrite(e, [&](const ExprPtr& n) -> ExprPtr {
      if (n->query) check_unprotected(*n->query, n->kind == Expr::Kind::Subquery);
      return nullptr;
    });
  }

  bool is_attribute_name(const std::string& name) const {
    for (const auto& c : dm_.classes)
      if (c.find_attribute(name)) return true;
    return false;
  }

  // ---- associations ---------------------------------------------------------

  // Stages an association-only query: candidate pairs, the checked pairs,
  // then the query itself. Returns the name of the last step.
  std::string stage_assoc(const Query& q, bool top) {
    for (const auto& i : q.items) check_nested(i.expr);
    check_nested(q.where);
    const auto& table = q.from[0];
    const auto* assoc = dm_.find_association(table.table);
    if (assoc->end1.class_name == assoc->end2.class_name)
      throw Error(ErrorCode::UnsupportedQuery, "association '" + assoc->name + "' relates a class to itself");

    std::vector<const AssociationEnd*> ends{&assoc->end1, &assoc->end2};
    auto rank = [&](const AssociationEnd* e) {
      auto it = std::find(mentioned_.begin(), mentioned_.end(), e->class_name);
      return it == mentioned_.end() ? mentioned_.size() : static_cast<std::size_t>(it - mentioned_.begin());
    };
    std::stable_sort(ends.begin(), ends.end(), [&](auto* a, auto* b) { return rank(a) < rank(b); });

    auto candidates = std::make_shared<Query>();
    for (const auto* e : ends) {
      std::string id = e->class_name + "_id";
      candidates->items.push_back({sql::column(id), e->name});
      candidates->from.push_back({e->class_name, nullptr, ""});
    }
    std::vector<ExprPtr> pushed;
    for (const auto& c : conjuncts(q.where)) {
      if (auto p = pushable(*c, *assoc, table.exposed_name())) pushed.push_back(p);
    }
    candidates->where = conjoin(pushed);
    add_step(candidates);

    std::string func = auth_func_name(s_, AssociationRes{assoc->name});
    plan_.functions[func] = AssociationRes{assoc->name};
    auto guarded = std::make_shared<Query>();
    guarded->items.push_back({sql::star(), ""});
    guarded->from.push_back({"TEMP" + std::to_string(plan_.steps.size()), nullptr, ""});
    guarded->where = sql::checked(func,
                                  {sql::column("caller"), sql::column("role"), sql::column(assoc->end1.name),
                                   sql::column(assoc->end2.name)},
                                  sql::bool_lit(true), sql::CheckStyle::WhenTrue, assoc->name);
    add_step(guarded);

    auto rows = std::make_shared<Query>(q);
    if (top) {
      rows->distinct = false;
      for (auto& item : rows->items) {
        if (is_count_star(*item.expr)) {
          item = {sql::column(assoc->end2.name), ""};
        } else if (is_aggregate(*item.expr)) {
          if (item.expr->args.size() != 1 || item.expr->args[0]->kind != Expr::Kind::Column)
            throw Error(ErrorCode::UnsupportedQuery, "unsupported aggregate '" + sql::render_expr(*item.expr) + "'");
          item = {item.expr->args[0], ""};
        } else if (item.expr->kind != Expr::Kind::Column && item.expr->kind != Expr::Kind::Star) {
          throw Error(ErrorCode::UnsupportedQuery, "unsupported select item '" + sql::render_expr(*item.expr) + "'");
        }
      }
    }
    return add_step(rows);
  }

  // `end = literal` or `end = caller` over the association becomes a
  // restriction of the candidate pairs.
  ExprPtr pushable(const Expr& c, const AssociationDef& assoc, const std::string& exposed) const {
    if (c.kind != Expr::Kind::Binary || c.op != "=") return nullptr;
    for (int side = 0; side < 2; ++side) {
      const auto& col = *c.args[side];
      const auto& val = *c.args[1 - side];
      if (col.kind != Expr::Kind::Column || (!col.qualifier.empty() && col.qualifier != exposed)) continue;
      bool value_ok = val.kind == Expr::Kind::StringLit || val.kind == Expr::Kind::IntLit ||
                      (val.kind == Expr::Kind::Column && val.qualifier.empty() && val.name == "caller");
      if (!value_ok) continue;
      for (const auto* end : {&assoc.end1, &assoc.end2})
        if (end->name == col.name)
          return sql::binary("=", sql::column(end->class_name + "_id"), c.args[1 - side]);
    }
    return nullptr;
  }

  // ---- mixed levels ---------------------------------------------------------

  struct Level {
    std::vector<Source> sources;
    std::size_t from_count = 0;  // leading sources that came from the comma list
    bool checks = false;
    std::string last;  // name of the last step (set after staging)
    std::vector<std::string> names;  // output column names of `last`
  };

  Source stage_item(const FromItem& item) {
    Source src;
    src.original = item.exposed_name();
    if (item.subquery) {
      if (item.alias.empty()) throw Error(ErrorCode::UnknownTable, "subquery in FROM needs an alias");
      std::string name = association_only(*item.subquery) ? stage_assoc(*item.subquery, false)
                                                           : stage_level(*item.subquery, false).last;
      src.item = {name, nullptr, ""};
      src.columns = temp_cols_.at(name);
      return src;
    }
    if (dm_.find_association(item.table)) {
      Query synthetic;
      synthetic.items.push_back({sql::star(), ""});
      synthetic.from.push_back({item.table, nullptr, ""});
      std::string name = stage_assoc(synthetic, false);
      src.item = {name, nullptr, ""};
      src.columns = temp_cols_.at(name);
      return src;
    }
    auto cols = lookup(item.table);
    if (!cols) throw Error(ErrorCode::UnknownTable, "unknown table '" + item.table + "'");
    src.item = item;
    src.columns = *cols;
    src.cls = dm_.find_class(item.table);
    return src;
  }

  struct Resolved {
    const Source* source = nullptr;
    bool ambiguous = false;  // the bare name would be ambiguous
  };

  Resolved resolve(const Expr& col, const std::vector<Source>& sources) const {
    auto has = [&](const Source& s) {
      return std::find(s.columns.begin(), s.columns.end(), col.name) != s.columns.end();
    };
    int count = 0;
    const Source* only = nullptr;
    for (const auto& s : sources)
      if (has(s)) {
        ++count;
        only = &s;
      }
    if (!col.qualifier.empty()) {
      for (const auto& s : sources)
        if (s.original == col.qualifier) {
          if (!has(s))
            throw Error(ErrorCode::UnknownColumn, "unknown column '" + col.qualifier + "." + col.name + "'");
          return {&s, count > 1};
        }
      throw Error(ErrorCode::UnknownColumn, "unknown column '" + col.qualifier + "." + col.name + "'");
    }
    if (count > 1) throw Error(ErrorCode::UnknownColumn, "column '" + col.name + "' is ambiguous");
    return {only, false};
  }

  // Rewrites a level expression: qualifiers follow the staged items, class
  // attribute reads get wrapped in checks. With `flat` every qualifier is
  // dropped (the expression then reads from the level's source step).
  ExprPtr rewrite_expr(const ExprPtr& e, const std::vector<Source>& sources, bool flat) {
    return sql::rewrite(e, [&](const ExprPtr& n) -> ExprPtr {
      if (n->kind == Expr::Kind::Exists || n->kind == Expr::Kind::Subquery) {
        if (flat) throw Error(ErrorCode::UnsupportedQuery, "subquery in the select list of a checked level");
        check_unprotected(*n->query, n->kind == Expr::Kind::Subquery);
        auto copy = std::make_shared<Expr>(*n);
        copy->query = rename_outer(*n->query, sources);
        return copy;
      }
      if (n->kind != Expr::Kind::Column) return nullptr;
      auto r = resolve(*n, sources);
      if (!r.source) {
        if (n->qualifier.empty() && (n->name == "caller" || n->name == "role")) return nullptr;
        throw Error(ErrorCode::UnknownColumn, "unknown column '" + n->name + "'");
      }
      std::string qual = (!flat && r.ambiguous) ? r.source->item.exposed_name() : std::string();
      auto col = with_qualifier(*n, qual);
      if (r.source->cls && r.source->cls->find_attribute(n->name)) {
        AttributeRes res{r.source->cls->name, n->name};
        std::string func = auth_func_name(s_, res);
        plan_.functions[func] = res;
        auto id = sql::column(r.source->cls->id_column(),
                              (!flat && id_ambiguous(*r.source, sources)) ? r.source->item.exposed_name() : "");
        return sql::checked(func, {sql::column("caller"), sql::column("role"), id}, col, sql::CheckStyle::WhenOne,
                            to_string(Resource{res}));
      }
      return col;
    });
  }

  static bool id_ambiguous(const Source& src, const std::vector<Source>& sources) {
    std::string id = src.cls->id_column();
    int count = 0;
    for (const auto& s : sources)
      if (std::find(s.columns.begin(), s.columns.end(), id) != s.columns.end()) ++count;
    return count > 1;
  }

  // Correlated references inside kept subqueries follow renamed items.
  QueryPtr rename_outer(const Query& q, const std::vector<Source>& sources) const {
    return sql::rewrite_query(q, [&](const ExprPtr& n) -> ExprPtr {
      if (n->kind != Expr::Kind::Column || n->qualifier.empty()) return nullptr;
      for (const auto& s : sources)
        if (s.original == n->qualifier && s.item.exposed_name() != s.original)
          return with_qualifier(*n, s.item.exposed_name());
      return nullptr;
    });
  }

  bool reads_attributes(const ExprPtr& e, const std::vector<Source>& sources) const {
    bool found = false;
    if (!e) return false;
    sql::rewrite(e, [&](const ExprPtr& n) -> ExprPtr {
      if (n->kind == Expr::Kind::Column) {
        auto r = resolve(*n, sources);
        if (r.source && r.source->cls && r.source->cls->find_attribute(n->name)) found = true;
      } else if (n->kind == Expr::Kind::Star) {
        for (const auto& s : sources)
          if ((n->qualifier.empty() || n->qualifier == s.original) && s.cls && !s.cls->attributes.empty())
            found = true;
      }
      return nullptr;
    });
    return found;
  }

  // ON conjuncts `right = left` are flipped so that the operand from the
  // items already joined comes first.
  ExprPtr orient_on(const ExprPtr& on, const std::vector<Source>& sources, std::size_t joined) const {
    std::vector<ExprPtr> parts;
    for (const auto& c : conjuncts(on)) {
      if (c->kind == Expr::Kind::Binary && c->op == "=" && c->args[0]->kind == Expr::Kind::Column &&
          c->args[1]->kind == Expr::Kind::Column) {
        auto l = resolve(*c->args[0], sources).source;
        auto r = resolve(*c->args[1], sources).source;
        auto index = [&](const Source* s) { return s ? static_cast<std::size_t>(s - sources.data()) : 0; };
        if (l && r && index(l) == joined && index(r) < joined) {
          parts.push_back(sql::binary("=", c->args[1], c->args[0]));
          continue;
        }
      }
      parts.push_back(c);
    }
    return conjoin(parts);
  }

  // Projection items of a level, with checks on attribute reads. At the top
  // level aggregates are deferred to the epilogue.
  std::vector<sql::SelectItem> project(const Query& q, const std::vector<Source>& sources, bool top, bool flat) {
    std::vector<sql::SelectItem> out;
    auto add_column = [&](const ExprPtr& col, const std::string& alias) {
      auto r = resolve(*col, sources);
      auto rewritten = rewrite_expr(col, sources, flat);
      if (rewritten->kind == Expr::Kind::Checked) {
        out.push_back({rewritten, alias.empty() ? col->name : alias});
      } else if (r.source && r.source->cls && col->name == r.source->cls->id_column()) {
        out.push_back({rewritten, alias.empty() ? col->name : alias});
      } else {
        out.push_back({rewritten, alias});
      }
    };
    for (const auto& item : q.items) {
      const auto& e = *item.expr;
      if (e.kind == Expr::Kind::Star) {
        for (const auto& s : sources) {
          if (!e.qualifier.empty() && e.qualifier != s.original) continue;
          for (const auto& c : s.columns) add_column(sql::column(c, s.original), "");
        }
      } else if (e.kind == Expr::Kind::Column) {
        add_column(item.expr, item.alias);
      } else if (top && is_count_star(e)) {
        const auto& first = sources.front();
        add_column(sql::column(first.columns.front(), first.original), "");
      } else if (top && is_aggregate(e)) {
        if (e.args.size() != 1 || e.args[0]->kind != Expr::Kind::Column)
          throw Error(ErrorCode::UnsupportedQuery, "unsupported aggregate '" + sql::render_expr(e) + "'");
        add_column(e.args[0], "");
      } else if (top || e.kind == Expr::Kind::IntLit || e.kind == Expr::Kind::StringLit ||
                 e.kind == Expr::Kind::BoolLit || e.kind == Expr::Kind::NullLit) {
        throw Error(ErrorCode::UnsupportedQuery, "unsupported select item '" + sql::render_expr(e) + "'");
      } else {
        out.push_back({rewrite_expr(item.expr, sources, flat), item.alias});
      }
    }
    return out;
  }

  Level stage_level(const Query& q, bool top) {
    Level lvl;
    for (const auto& f : q.from) lvl.sources.push_back(stage_item(f));
    lvl.from_count = lvl.sources.size();
    for (const auto& j : q.joins) lvl.sources.push_back(stage_item(j.item));
    const auto& srcs = lvl.sources;

    lvl.checks = reads_attributes(q.where, srcs);
    for (const auto& j : q.joins) lvl.checks = lvl.checks || reads_attributes(j.on, srcs);
    for (const auto& i : q.items) lvl.checks = lvl.checks || reads_attributes(i.expr, srcs);

    auto body = std::make_shared<Query>();
    for (std::size_t i = 0; i < lvl.from_count; ++i) body->from.push_back(srcs[i].item);
    for (std::size_t i = 0; i < q.joins.size(); ++i) {
      std::size_t idx = lvl.from_count + i;
      body->joins.push_back({srcs[idx].item, rewrite_expr(orient_on(q.joins[i].on, srcs, idx), srcs, false)});
    }
    if (q.where) body->where = rewrite_expr(q.where, srcs, false);

    bool filter = !q.joins.empty() || q.where || q.from.size() > 1;
    bool split = lvl.checks && filter && (top || !has_aggregate(q));
    if (split) {
      std::set<std::string> seen;
      for (const auto& s : srcs)
        for (const auto& c : s.columns)
          if (!seen.insert(c).second)
            throw Error(ErrorCode::UnsupportedQuery, "column '" + c + "' occurs twice in the joined rows");
      body->items.push_back({sql::star(), ""});
      std::string source_step = add_step(body);
      auto proj = std::make_shared<Query>();
      proj->distinct = !top && q.distinct;
      proj->items = project(q, srcs, top, true);
      proj->from.push_back({source_step, nullptr, ""});
      lvl.last = add_step(proj);
    } else {
      body->distinct = !top && q.distinct;
      body->items = project(q, srcs, top, false);
      lvl.last = add_step(body);
    }
    if (top) {
      std::set<std::string> seen;
      for (const auto& c : temp_cols_.at(lvl.last))
        if (!seen.insert(c).second)
          throw Error(ErrorCode::UnsupportedQuery, "column '" + c + "' occurs twice in the result");
    }
    return lvl;
  }

  // ---- epilogue -------------------------------------------------------------

  // Name under which each top-level select item is read back in the
  // epilogue, or the aggregate applied to it.
  std::vector<ExprPtr> top_names(const Query& q, const AssociationDef& assoc) const {
    std::vector<ExprPtr> out;
    for (const auto& item : q.items) {
      const auto& e = *item.expr;
      if (is_count_star(e)) {
        out.push_back(item.expr);
      } else if (is_aggregate(e)) {
        out.push_back(sql::call(e.name, {sql::column(e.args[0]->name)}));
      } else if (e.kind == Expr::Kind::Star) {
        out.push_back(sql::column(assoc.end1.name));
        out.push_back(sql::column(assoc.end2.name));
      } else {
        out.push_back(sql::column(item.alias.empty() ? e.name : item.alias));
      }
    }
    return out;
  }

  QueryPtr epilogue(const Query& q, const std::string& last, std::vector<ExprPtr> names) const {
    auto out = std::make_shared<Query>();
    out->distinct = q.distinct;
    for (auto& n : names) out->items.push_back({n, ""});
    out->from.push_back({last, nullptr, ""});
    return out;
  }

  QueryPtr level_epilogue(const Query& q, const Level& lvl) const {
    std::vector<ExprPtr> names;
    const auto& cols = temp_cols_.at(lvl.last);
    std::size_t col = 0;
    for (const auto& item : q.items) {
      const auto& e = *item.expr;
      if (e.kind == Expr::Kind::Star) {
        std::size_t n = 0;
        for (const auto& s : lvl.sources)
          if (e.qualifier.empty() || e.qualifier == s.original) n += s.columns.size();
        for (std::size_t i = 0; i < n; ++i) names.push_back(sql::column(cols[col++]));
      } else if (is_count_star(e)) {
        names.push_back(item.expr);
        ++col;
      } else if (is_aggregate(e)) {
        names.push_back(sql::call(e.name, {sql::column(cols[col++])}));
      } else {
        names.push_back(sql::column(cols[col++]));
      }
    }
    return epilogue(q, lvl.last, std::move(names));
  }

  const SecurityModel& s_;
  const DataModel& dm_;
  StagingPlan plan_;
  std::vector<std::string> mentioned_;
  std::map<std::string, std::vector<std::string>> temp_cols_;
};

const std::string kIndent = "  ";

std::string render_create(const std::string& name, const Query& body, const std::string& indent) {
  return indent + "CREATE TEMPORARY TABLE " + name + " AS (\n" + indent + "  " + sql::render_sql(body) + "\n" +
         indent + ");";
}

std::string render_epilogue(const Query& q) {
  auto text = sql::render_sql(q);
  auto pos = text.rfind(" FROM ");
  if (pos != std::string::npos) text.replace(pos, 6, " from ");
  return text;
}

}  // namespace

StagingPlan plan_query(const SecurityModel& s, const sql::Query& q) {
  if (!s.data_model) throw Error(ErrorCode::InvalidPolicy, "security model has no data model");
  // Surface unknown tables and columns with their own error codes first.
  sql::resource_accesses(q, *s.data_model);
  return Planner(s, q).run(q);
}

AuthFuncDef gen_auth_func(const SecurityModel& s, const Resource& res, const ocl2sql::Registry& registry) {
  const auto& dm = *s.data_model;
  validate_resource(dm, res);
  AuthFuncDef f;
  f.name = auth_func_name(s, res);
  f.resource = res;
  f.keywords = target_keywords(dm, res);
  std::string body;
  for (const auto& role : s.roles) {
    const auto* rule = s.find_rule(role, res);
    if (!rule) continue;
    auto impl = ocl2sql::map_ocl_to_sql(rule->constraint, dm, registry);
    f.branches.push_back({role, impl.sql, impl.origin});
    body += " WHEN role = " + sql_quote(role) + " THEN (" + impl.sql + ")";
  }
  f.body = sql::parse_expression(f.branches.empty() ? "FALSE" : "CASE" + body + " ELSE FALSE END");
  return f;
}

SecQuery gen_sec_query(const SecurityModel& s, const sql::Query& q, const ocl2sql::Registry& registry) {
  SecQuery out;
  out.plan = plan_query(s, q);
  out.procedure.name = procedure_name(s, q);
  for (const auto& step : out.plan.steps) out.procedure.steps.push_back(step);
  out.procedure.epilogue = out.plan.epilogue;
  for (const auto& [name, res] : out.plan.functions) out.functions.push_back(gen_auth_func(s, res, registry));
  return out;
}

std::string render_step(const Step& step) {
  if (const auto* t = std::get_if<TempStep>(&step)) return render_create(t->name, *t->body, kIndent);
  const auto& g = std::get<GuardedStep>(step);
  return kIndent + "IF " + g.condition_text + "\n" + kIndent + "THEN\n" +
         render_create(g.name, *g.unchecked, kIndent + kIndent) + "\n" + kIndent + "ELSE\n" +
         render_create(g.name, *g.checked, kIndent + kIndent) + "\n" + kIndent + "END IF;";
}

std::string render_procedure(const StoredProcedure& proc) {
  std::string out = "CREATE PROCEDURE " + proc.name +
                    "\n"
                    "  (in caller varchar(250), in role varchar(250))\n"
                    "BEGIN\n"
                    "  DECLARE _rollback int DEFAULT 0;\n"
                    "  DECLARE EXIT HANDLER FOR SQLEXCEPTION\n"
                    "  BEGIN\n"
                    "    SET _rollback = 1;\n"
                    "    GET STACKED DIAGNOSTICS CONDITION 1\n"
                    "      @p1 = RETURNED_SQLSTATE, @p2 = MESSAGE_TEXT;\n"
                    "    SELECT @p1, @p2;\n"
                    "    ROLLBACK;\n"
                    "  END;\n"
                    "  START TRANSACTION;\n";
  for (const auto& step : proc.steps) out += "\n" + render_step(step) + "\n";
  out += "\n  IF _rollback = 0\n    THEN " + render_epilogue(*proc.epilogue) + ";\n  END IF;\nEND\n";
  return out;
}

std::string render_auth_func(const AuthFuncDef& f) {
  std::string out = "CREATE FUNCTION " + f.name + "(caller varchar(250), role varchar(250)";
  for (const auto& k : f.keywords) out += ", " + k + " varchar(250)";
  out += ")\nRETURNS BOOLEAN DETERMINISTIC READS SQL DATA\nBEGIN\n  RETURN ";
  if (f.branches.empty()) {
    out += "FALSE";
  } else {
    out += "CASE";
    for (const auto& b : f.branches) out += "\n    WHEN role = " + sql_quote(b.role) + " THEN (" + b.sql + ")";
    out += "\n    ELSE FALSE\n  END";
  }
  out += ";\nEND\n";
  return out;
}

std::string render_throw_error() {
  return "CREATE FUNCTION throw_error()\n"
         "RETURNS INT DETERMINISTIC\n"
         "BEGIN\n"
         "  SIGNAL SQLSTATE '45000' SET MESSAGE_TEXT = 'access denied by policy';\n"
         "  RETURN 0;\n"
         "END\n";
}

std::string render_script(const StoredProcedure& proc, const std::vector<AuthFuncDef>& functions) {
  std::string out = "DELIMITER //\n\n" + render_throw_error() + "//\n\n";
  for (const auto& f : functions) out += render_auth_func(f) + "//\n\n";
  out += render_procedure(proc) + "//\n\nDELIMITER ;\n";
  return out;
}

}  // namespace fgac::secquery
