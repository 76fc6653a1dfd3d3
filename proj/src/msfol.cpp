#include "fgac/msfol.hpp"

#include <algorithm>
#include <cctype>
#include <functional>

#include "fgac/error.hpp"

namespace fgac::msfol {

using ocl::Expr;

Term atom(std::string symbol) { return Term{std::move(symbol), {}, false}; }

Term app(std::string head, std::vector<Term> args) { return Term{std::move(head), std::move(args), true}; }

Term eq(Term a, Term b) { return app("=", {std::move(a), std::move(b)}); }

Term neg(Term a) { return app("not", {std::move(a)}); }

Term conj(std::vector<Term> parts) {
  if (parts.empty()) return atom("true");
  if (parts.size() == 1) return std::move(parts.front());
  return app("and", std::move(parts));
}

Term disj(std::vector<Term> parts) {
  if (parts.empty()) return atom("false");
  if (parts.size() == 1) return std::move(parts.front());
  return app("or", std::move(parts));
}

Term forall(const std::string& var, Term body) {
  return app("forall", {atom("((" + var + " Classifier))"), std::move(body)});
}

Term exists(const std::string& var, Term body) {
  return app("exists", {atom("((" + var + " Classifier))"), std::move(body)});
}

namespace {

void render_into(const Term& t, std::string& out) {
  if (!t.application) {
    out += t.head;
    return;
  }
  out += '(';
  out += t.head;
  for (const auto& a : t.args) {
    out += ' ';
    render_into(a, out);
  }
  out += ')';
}

const std::string kNullObj = "nullClassifier";
const std::string kInvalObj = "invalClassifier";

std::string null_of(AttrType t) { return t == AttrType::Int ? "nullInt" : "nullString"; }
std::string inval_of(AttrType t) { return t == AttrType::Int ? "invalInt" : "invalString"; }
std::string smt_sort(AttrType t) { return t == AttrType::Int ? "Int" : "String"; }

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::string attr_function(const std::string& cls, const std::string& attr) { return attr + "_" + cls; }

Term int_term(std::int64_t v) {
  if (v < 0) return app("-", {atom(std::to_string(-v))});
  return atom(std::to_string(v));
}

Term string_term(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out += c;
  }
  return atom(out + "\"");
}

}  // namespace

std::string render(const Term& t) {
  std::string out;
  render_into(t, out);
  return out;
}

void Theory::append(const Theory& other) {
  commands.insert(commands.end(), other.commands.begin(), other.commands.end());
}

void Theory::add(std::string text, std::vector<std::string> comments) {
  commands.push_back({std::move(comments), std::move(text)});
}

void Theory::assert_term(const Term& t, std::vector<std::string> comments) {
  add("(assert " + render(t) + ")", std::move(comments));
}

// ---- data model -------------------------------------------------------------

Theory map_datamodel_theory(const DataModel& dm) {
  Theory t;
  t.add("(declare-sort Classifier 0)", {"sort declaration"});
  t.add("(declare-const nullClassifier Classifier)", {"null and invalid object and its axiom"});
  t.add("(declare-const invalClassifier Classifier)");
  t.add("(assert (distinct nullClassifier invalClassifier))");
  t.add("(declare-const nullInt Int)", {"null and invalid integer and its axiom"});
  t.add("(declare-const invalInt Int)");
  t.add("(assert (distinct nullInt invalInt))");
  t.add("(declare-const nullString String)", {"null and invalid string and its axiom"});
  t.add("(declare-const invalString String)");
  t.add("(assert (distinct nullString invalString))");

  for (const auto& c : dm.classes) {
    t.add("(declare-fun " + c.name + " (Classifier) Bool)", {"unary predicate " + c.name + "(x) and its axiom"});
    t.assert_term(neg(app(c.name, {atom(kNullObj)})));
    t.assert_term(neg(app(c.name, {atom(kInvalObj)})));
  }

  bool first = true;
  for (const auto& a : dm.classes)
    for (const auto& b : dm.classes) {
      if (a.name == b.name) continue;
      std::vector<std::string> comments;
      if (first) comments.push_back("axiom: disjoint set of objects of different classes");
      first = false;
      t.assert_term(forall("x", app("=>", {app(a.name, {atom("x")}), neg(app(b.name, {atom("x")}))})),
                    std::move(comments));
    }

  for (const auto& c : dm.classes)
    for (const auto& a : c.attributes) {
      auto f = attr_function(c.name, a.name);
      auto inval = atom(inval_of(a.type));
      t.add("(declare-fun " + f + " (Classifier) " + smt_sort(a.type) + ")",
            {"function get the " + a.name + " of " + lower(c.name) + " and its axiom"});
      t.assert_term(eq(app(f, {atom(kNullObj)}), inval));
      t.assert_term(eq(app(f, {atom(kInvalObj)}), inval));
      t.assert_term(forall("x", app("=>", {app(c.name, {atom("x")}), app("distinct", {app(f, {atom("x")}), inval})})));
    }

  for (const auto& a : dm.associations) {
    t.add("(declare-fun " + a.name + " (Classifier Classifier) Bool)",
          {"binary predicate of the " + a.name + " association and its axiom"});
    t.assert_term(forall(
        "x", forall("y", app("=>", {app(a.name, {atom("x"), atom("y")}),
                                    conj({app(a.end1.class_name, {atom("x")}), app(a.end2.class_name, {atom("y")})})}))));
  }
  return t;
}

Theory map_sigma(const DataModel& dm, const std::vector<SigmaDecl>& decls) {
  Theory t;
  for (const auto& [kw, cls] : decls) {
    if (!dm.find_class(cls)) throw Error(ErrorCode::Untranslatable, "unknown class '" + cls + "' for " + kw);
    t.add("(declare-const " + kw + " Classifier)", {"constant symbol of " + kw + " and its axiom"});
    t.assert_term(app(cls, {atom(kw)}));
  }
  return t;
}

// ---- constraints ----------------------------------------------------------------

namespace {

// A scalar or object operand: its term plus the null / invalid conditions
// it contributes.
struct Operand {
  Term term;
  std::vector<Term> null;   // at most one
  std::vector<Term> inval;  // at most one
};

struct Coll {
  std::function<Term(const Term&)> member;
  Term invalid;
};

class Translator {
 public:
  Translator(const DataModel& dm, DefinitionSet& defs, const ObjectNamer& objects)
      : dm_(dm), defs_(defs), objects_(objects) {
    for (const auto& [id, name] : objects_) reserved_.insert(name);
  }

  Term truth(const Expr& e, bool value) {
    switch (e.kind) {
      case Expr::Kind::BoolLit:
        return atom(e.bool_value == value ? "true" : "false");
      case Expr::Kind::And:
      case Expr::Kind::Or: {
        bool conjunctive = (e.kind == Expr::Kind::And) == value;
        auto a = truth(*e.args[0], value);
        auto b = truth(*e.args[1], value);
        return app(conjunctive ? "and" : "or", {a, b});
      }
      case Expr::Kind::Not:
        return truth(*e.args[0], !value);
      case Expr::Kind::Compare:
        return comparison(e, value);
      case Expr::Kind::IsEmpty: {
        auto c = collection(*e.args[0]);
        if (value) {
          auto x = fresh("x");
          return bind(x, [&] { return forall(x, conj({neg(c.member(atom(x))), neg(c.invalid)})); });
        }
        auto x = fresh("x");
        auto body = bind(x, [&] { return exists(x, c.member(atom(x))); });
        return conj({body, neg(c.invalid)});
      }
      case Expr::Kind::Includes:
        return includes(*e.args[0], *e.args[1], value);
      case Expr::Kind::Exists:
      case Expr::Kind::ForAll:
        return quantifier(e, value);
      default:
        throw Error(ErrorCode::Untranslatable, "'" + ocl::render_ocl(e) + "' is not a Boolean construct");
    }
  }

 private:
  template <typename F>
  Term bind(const std::string& name, F&& f) {
    bound_.push_back(name);
    auto t = f();
    bound_.pop_back();
    return t;
  }

  std::string fresh(const std::string& base) {
    auto taken = [&](const std::string& n) {
      return reserved_.count(n) || std::find(bound_.begin(), bound_.end(), n) != bound_.end() ||
             dm_.find_class(n) || dm_.find_association(n) || keywords_.count(n);
    };
    if (!taken(base)) return base;
    for (int i = 1;; ++i)
      if (!taken(base + std::to_string(i))) return base + std::to_string(i);
  }

  std::string var_name(const std::string& ocl_name) const {
    for (auto it = vars_.rbegin(); it != vars_.rend(); ++it)
      if (it->first == ocl_name) return it->second;
    throw Error(ErrorCode::Untranslatable, "unbound variable '" + ocl_name + "'");
  }

  Term object_term(const Expr& e) {
    switch (e.kind) {
      case Expr::Kind::Keyword:
        keywords_.insert(e.name);
        return atom(e.name);
      case Expr::Kind::Variable:
        return atom(var_name(e.name));
      case Expr::Kind::ObjectLit: {
        auto it = objects_.find(e.name);
        if (it == objects_.end()) throw Error(ErrorCode::Untranslatable, "object '" + e.name + "' has no constant");
        return atom(it->second);
      }
      case Expr::Kind::NullLit:
        return atom(kNullObj);
      default:
        throw Error(ErrorCode::Untranslatable, "'" + ocl::render_ocl(e) + "' is not an object expression");
    }
  }

  Operand operand(const Expr& e) {
    switch (e.kind) {
      case Expr::Kind::IntLit:
        return {int_term(e.int_value), {}, {}};
      case Expr::Kind::StringLit:
        return {string_term(e.string_value), {}, {}};
      case Expr::Kind::ObjectLit:
        return {object_term(e), {}, {}};
      case Expr::Kind::Keyword:
      case Expr::Kind::Variable: {
        auto t = object_term(e);
        return {t, {eq(t, atom(kNullObj))}, {eq(t, atom(kInvalObj))}};
      }
      case Expr::Kind::Attribute: {
        const auto& src = *e.args[0];
        const auto* cls = dm_.find_class(src.type.class_name);
        const auto* attr = cls ? cls->find_attribute(e.name) : nullptr;
        if (!attr) throw Error(ErrorCode::Untranslatable, "untyped attribute '" + ocl::render_ocl(e) + "'");
        auto x = object_term(src);
        auto t = app(attr_function(cls->name, e.name), {x});
        Term invalid = src.kind == Expr::Kind::ObjectLit
                           ? atom("false")
                           : disj({eq(x, atom(kNullObj)), eq(x, atom(kInvalObj))});
        std::vector<Term> inval;
        if (src.kind != Expr::Kind::ObjectLit) inval.push_back(invalid);
        return {t, {eq(t, atom(null_of(attr->type)))}, inval};
      }
      default:
        throw Error(ErrorCode::Untranslatable, "'" + ocl::render_ocl(e) + "' cannot be compared");
    }
  }

  static std::vector<Term> parts(const Operand& a, const Operand& b) {
    std::vector<Term> out;
    for (const auto* o : {&a, &b}) {
      out.insert(out.end(), o->null.begin(), o->null.end());
      out.insert(out.end(), o->inval.begin(), o->inval.end());
    }
    return out;
  }

  static Term none_of(const std::vector<Term>& ts) { return neg(disj(ts)); }

  Term equality(const Expr& lhs, const Expr& rhs, bool value) {
    bool ln = lhs.kind == Expr::Kind::NullLit;
    bool rn = rhs.kind == Expr::Kind::NullLit;
    if (ln && rn) return atom(value ? "true" : "false");
    if (ln || rn) {
      auto o = operand(ln ? rhs : lhs);
      if (value) return disj(o.null);
      std::vector<Term> both;
      for (const auto& t : o.null) both.push_back(neg(t));
      for (const auto& t : o.inval) both.push_back(neg(t));
      return conj(both);
    }
    auto a = operand(lhs);
    auto b = operand(rhs);
    auto all = parts(a, b);
    auto valid = [&](Term core) { return all.empty() ? core : conj({core, none_of(all)}); };
    if (value) {
      std::vector<Term> alts;
      if (!a.null.empty() && !b.null.empty()) alts.push_back(conj({a.null[0], b.null[0]}));
      alts.push_back(valid(eq(a.term, b.term)));
      return disj(alts);
    }
    std::vector<Term> alts;
    auto one_null = [&](const Operand& x, const Operand& y) {
      if (x.null.empty()) return;
      std::vector<Term> c{x.null[0]};
      for (const auto& t : y.null) c.push_back(neg(t));
      for (const auto& t : y.inval) c.push_back(neg(t));
      alts.push_back(conj(c));
    };
    one_null(a, b);
    one_null(b, a);
    alts.push_back(valid(neg(eq(a.term, b.term))));
    return disj(alts);
  }

  Term comparison(const Expr& e, bool value) {
    const auto& lhs = *e.args[0];
    const auto& rhs = *e.args[1];
    for (const auto* side : {&lhs, &rhs})
      if (side->type.kind == ocl::Type::Kind::Bool || side->type.kind == ocl::Type::Kind::Collection)
        throw Error(ErrorCode::Untranslatable, "comparison of '" + ocl::render_ocl(*side) + "'");
    if (e.op == ocl::CompareOp::Eq) return equality(lhs, rhs, value);
    if (e.op == ocl::CompareOp::Ne) return equality(lhs, rhs, !value);
    for (const auto* side : {&lhs, &rhs})
      if (side->type.kind != ocl::Type::Kind::Int && side->kind != Expr::Kind::IntLit)
        throw Error(ErrorCode::Untranslatable, "ordering over '" + ocl::render_ocl(*side) + "'");
    auto a = operand(lhs);
    auto b = operand(rhs);
    auto core = app(std::string(ocl::to_string(e.op)), {a.term, b.term});
    auto all = parts(a, b);
    if (!value) core = neg(core);
    return all.empty() ? core : conj({core, none_of(all)});
  }

  Coll collection(const Expr& e) {
    switch (e.kind) {
      case Expr::Kind::AllInstances: {
        std::string cls = e.name;
        return {[cls](const Term& x) { return app(cls, {x}); }, atom("false")};
      }
      case Expr::Kind::Navigation: {
        const auto& src = *e.args[0];
        auto nav = dm_.find_end(src.type.class_name, e.name);
        if (!nav) throw Error(ErrorCode::Untranslatable, "unknown association end '" + e.name + "'");
        auto v = object_term(src);
        std::string assoc = nav->association->name;
        bool to_end1 = nav->target_is_end1;
        Term invalid = src.kind == Expr::Kind::ObjectLit ? atom("false")
                                                         : disj({eq(v, atom(kNullObj)), eq(v, atom(kInvalObj))});
        return {[assoc, to_end1, v](const Term& x) { return to_end1 ? app(assoc, {x, v}) : app(assoc, {v, x}); },
                invalid};
      }
      case Expr::Kind::Select: {
        auto src = collection(*e.args[0]);
        std::string name = "TEMP" + std::to_string(defs_.next++);
        auto outer = bound_vars();
        auto w = fresh(e.name);
        vars_.emplace_back(e.name, w);
        auto body = bind(w, [&] { return truth(*e.args[1], true); });
        vars_.pop_back();

        std::string sig = "(declare-fun " + name + " (";
        for (std::size_t i = 0; i <= outer.size(); ++i) sig += i ? " Classifier" : "Classifier";
        sig += ") Bool)";
        std::vector<Term> head_args;
        for (const auto& o : outer) head_args.push_back(atom(o));
        auto head_with = [name, head_args](const Term& x) {
          auto args = head_args;
          args.push_back(x);
          return app(name, args);
        };
        Term def = forall(w, eq(head_with(atom(w)), conj({src.member(atom(w)), body})));
        for (auto it = outer.rbegin(); it != outer.rend(); ++it) def = forall(*it, def);
        defs_.theory.add(sig, {"this " + name + " function is the OCL expression", ocl::render_ocl(e)});
        defs_.theory.assert_term(def);
        return {head_with, src.invalid};
      }
      default:
        throw Error(ErrorCode::Untranslatable, "'" + ocl::render_ocl(e) + "' is not a collection construct");
    }
  }

  // Variables bound by enclosing iterators, outermost first.
  std::vector<std::string> bound_vars() const {
    std::vector<std::string> out;
    for (const auto& [ocl_name, smt] : vars_) out.push_back(smt);
    return out;
  }

  Term includes(const Expr& source, const Expr& element, bool value) {
    auto c = collection(source);
    auto x = object_term(element);
    bool object_like = element.kind == Expr::Kind::Keyword || element.kind == Expr::Kind::Variable;
    Term x_inval = object_like ? eq(x, atom(kInvalObj)) : atom("false");
    auto temp = fresh("temp");
    if (value) {
      return bind(temp, [&] {
        std::vector<Term> parts{c.member(atom(temp)), eq(atom(temp), x), neg(c.invalid)};
        if (object_like) parts.push_back(neg(x_inval));
        return exists(temp, conj(parts));
      });
    }
    auto found = bind(temp, [&] { return exists(temp, conj({c.member(atom(temp)), eq(atom(temp), x)})); });
    std::vector<Term> parts{neg(found), neg(c.invalid)};
    if (object_like) parts.push_back(neg(x_inval));
    return conj(parts);
  }

  Term quantifier(const Expr& e, bool value) {
    bool is_exists = e.kind == Expr::Kind::Exists;
    const auto& body = *e.args[1];
    // exists(s | s = X) is membership of X.
    if (is_exists && body.kind == Expr::Kind::Compare && body.op == ocl::CompareOp::Eq &&
        body.args[0]->kind == Expr::Kind::Variable && body.args[0]->name == e.name) {
      const auto& rhs = *body.args[1];
      bool simple = rhs.kind == Expr::Kind::Keyword || rhs.kind == Expr::Kind::ObjectLit ||
                    (rhs.kind == Expr::Kind::Variable && rhs.name != e.name);
      if (simple) return includes(*e.args[0], rhs, value);
    }
    auto c = collection(*e.args[0]);
    auto w = fresh(e.name);
    vars_.emplace_back(e.name, w);
    Term out = bind(w, [&] {
      auto m = c.member(atom(w));
      if (is_exists && value) return exists(w, conj({m, truth(body, true), neg(c.invalid)}));
      if (!is_exists && value) return forall(w, conj({app("=>", {m, truth(body, true)}), neg(c.invalid)}));
      if (is_exists) return forall(w, app("=>", {m, truth(body, false)}));
      return exists(w, conj({m, truth(body, false)}));
    });
    vars_.pop_back();
    if (!value) out = conj({out, neg(c.invalid)});
    return out;
  }

  const DataModel& dm_;
  DefinitionSet& defs_;
  const ObjectNamer& objects_;
  std::set<std::string> reserved_{"Classifier", "nullClassifier", "invalClassifier", "nullInt",
                                  "invalInt", "nullString", "invalString", "and", "or", "not", "forall",
                                  "exists", "true", "false", "distinct", "ite", "let"};
  std::set<std::string> keywords_;
  std::vector<std::string> bound_;
  std::vector<std::pair<std::string, std::string>> vars_;
};

}  // namespace

Term map_true(const ocl::Expr& e, const DataModel& dm, DefinitionSet& defs, const ObjectNamer& objects) {
  return Translator(dm, defs, objects).truth(e, true);
}

Term map_false(const ocl::Expr& e, const DataModel& dm, DefinitionSet& defs, const ObjectNamer& objects) {
  return Translator(dm, defs, objects).truth(e, false);
}

// ---- interpretations ----------------------------------------------------------

ObjectNamer object_names(const DataModel& dm, const Scenario& sc) {
  std::set<std::string> taken{"Classifier", "nullClassifier", "invalClassifier", "nullInt", "invalInt",
                              "nullString", "invalString", "x", "y", "temp", "true", "false"};
  for (const auto& c : dm.classes) {
    taken.insert(c.name);
    for (const auto& a : c.attributes) taken.insert(attr_function(c.name, a.name));
  }
  for (const auto& a : dm.associations) taken.insert(a.name);
  ObjectNamer out;
  for (const auto& [cls, objs] : sc.objects)
    for (const auto& [id, rec] : objs) {
      bool plain = is_identifier(id) && !taken.count(id) && id.rfind("TEMP", 0) != 0;
      if (plain) {
        out[id] = id;
      } else {
        std::string safe;
        for (char c : id) safe += (c == '|' || c == '\\') ? '_' : c;
        out[id] = "|obj:" + safe + "|";
      }
    }
  return out;
}

Theory map_interpretation(const DataModel& dm, const Scenario& sc, const std::set<std::int64_t>& ints,
                          const std::set<std::string>& strings) {
  Theory t;
  auto names = object_names(dm, sc);
  std::vector<Term> all;
  bool first = true;
  for (const auto& c : dm.classes)
    for (const auto& id : sc.ids_of(c.name)) {
      std::vector<std::string> comments;
      if (first) comments.push_back("objects of the scenario");
      first = false;
      t.add("(declare-const " + names.at(id) + " Classifier)", std::move(comments));
      all.push_back(atom(names.at(id)));
    }
  if (!all.empty()) {
    all.push_back(atom(kNullObj));
    all.push_back(atom(kInvalObj));
    t.assert_term(app("distinct", all));
  }

  std::set<std::int64_t> int_values = ints;
  std::set<std::string> string_values = strings;
  for (const auto& c : dm.classes) {
    auto ids = sc.ids_of(c.name);
    std::vector<Term> members;
    for (const auto& id : ids) {
      t.assert_term(app(c.name, {atom(names.at(id))}), members.empty() ? std::vector<std::string>{"class " + c.name}
                                                                       : std::vector<std::string>{});
      members.push_back(eq(atom("x"), atom(names.at(id))));
    }
    if (members.empty()) {
      t.assert_term(forall("x", neg(app(c.name, {atom("x")}))), {"class " + c.name + " is empty"});
    } else {
      t.assert_term(forall("x", app("=>", {app(c.name, {atom("x")}), disj(members)})));
    }
    for (const auto& id : ids)
      for (const auto& a : c.attributes) {
        auto v = sc.attribute(c.name, id, a.name);
        Term value = atom(null_of(a.type));
        if (const auto* i = std::get_if<std::int64_t>(&v)) {
          value = int_term(*i);
          int_values.insert(*i);
        } else if (const auto* s = std::get_if<std::string>(&v)) {
          value = string_term(*s);
          string_values.insert(*s);
        }
        t.assert_term(eq(app(attr_function(c.name, a.name), {atom(names.at(id))}), value));
      }
  }

  for (const auto& a : dm.associations) {
    std::vector<Term> pairs;
    auto it = sc.links.find(a.name);
    if (it != sc.links.end())
      for (const auto& [x, y] : it->second) {
        t.assert_term(app(a.name, {atom(names.at(x)), atom(names.at(y))}),
                      pairs.empty() ? std::vector<std::string>{"links of " + a.name} : std::vector<std::string>{});
        pairs.push_back(conj({eq(atom("x"), atom(names.at(x))), eq(atom("y"), atom(names.at(y)))}));
      }
    Term body = pairs.empty() ? neg(app(a.name, {atom("x"), atom("y")}))
                              : app("=>", {app(a.name, {atom("x"), atom("y")}), disj(pairs)});
    t.assert_term(forall("x", forall("y", body)));
  }

  std::vector<Term> ints_distinct{atom("nullInt"), atom("invalInt")};
  for (auto v : int_values) ints_distinct.push_back(int_term(v));
  t.assert_term(app("distinct", ints_distinct), {"values are distinct from the null and invalid sentinels"});
  std::vector<Term> strings_distinct{atom("nullString"), atom("invalString")};
  for (const auto& v : string_values) strings_distinct.push_back(string_term(v));
  t.assert_term(app("distinct", strings_distinct));
  return t;
}

Theory ground_check(const DataModel& dm, const Scenario& sc, const ocl::Expr& ground) {
  std::set<std::int64_t> ints;
  std::set<std::string> strings;
  ocl::collect_literals(ground, ints, strings);
  Theory t = map_datamodel_theory(dm);
  t.append(map_interpretation(dm, sc, ints, strings));
  DefinitionSet defs;
  auto names = object_names(dm, sc);
  auto goal = map_true(ground, dm, defs, names);
  t.append(defs.theory);
  t.assert_term(neg(goal), {"negation of the constraint", ocl::render_ocl(ground)});
  return t;
}

std::string emit_smtlib(const Theory& t) {
  std::string out = "(set-logic ALL)\n";
  for (const auto& c : t.commands) {
    if (!c.comments.empty()) {
      out += '\n';
      for (const auto& line : c.comments) out += "; " + line + "\n";
    }
    out += c.text + "\n";
  }
  out += "(check-sat)\n";
  return out;
}

}  // namespace fgac::msfol
