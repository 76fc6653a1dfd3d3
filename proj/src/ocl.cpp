#include "fgac/ocl.hpp"

#include <algorithm>
#include <cctype>
#include <functional>

#include "fgac/error.hpp"

namespace fgac::ocl {

std::string_view to_string(CompareOp op) {
  switch (op) {
    case CompareOp::Eq: return "=";
    case CompareOp::Ne: return "<>";
    case CompareOp::Lt: return "<";
    case CompareOp::Gt: return ">";
    case CompareOp::Le: return "<=";
    case CompareOp::Ge: return ">=";
  }
  return "?";
}

std::string to_string(const Type& t) {
  switch (t.kind) {
    case Type::Kind::Unknown: return "unknown";
    case Type::Kind::Bool: return "Boolean";
    case Type::Kind::Int: return "Integer";
    case Type::Kind::String: return "String";
    case Type::Kind::Null: return "null";
    case Type::Kind::Object: return t.class_name;
    case Type::Kind::Collection: return "Set(" + t.class_name + ")";
  }
  return "unknown";
}

namespace {

ExprPtr make(Expr e) { return std::make_shared<const Expr>(std::move(e)); }

Expr node(Expr::Kind kind) {
  Expr e{kind, {}, {}, 0, {}, false, CompareOp::Eq, {}, {}};
  return e;
}

}  // namespace

ExprPtr keyword(std::string name) {
  auto e = node(Expr::Kind::Keyword);
  e.name = std::move(name);
  return make(std::move(e));
}

ExprPtr variable(std::string name) {
  auto e = node(Expr::Kind::Variable);
  e.name = std::move(name);
  return make(std::move(e));
}

ExprPtr object_lit(std::string id, std::string cls) {
  auto e = node(Expr::Kind::ObjectLit);
  e.name = std::move(id);
  e.type = Type::object(cls);
  e.class_name = std::move(cls);
  return make(std::move(e));
}

ExprPtr int_lit(std::int64_t v) {
  auto e = node(Expr::Kind::IntLit);
  e.int_value = v;
  return make(std::move(e));
}

ExprPtr string_lit(std::string v) {
  auto e = node(Expr::Kind::StringLit);
  e.string_value = std::move(v);
  return make(std::move(e));
}

ExprPtr bool_lit(bool v) {
  auto e = node(Expr::Kind::BoolLit);
  e.bool_value = v;
  return make(std::move(e));
}

ExprPtr null_lit() { return make(node(Expr::Kind::NullLit)); }

ExprPtr attribute(ExprPtr source, std::string attr) {
  auto e = node(Expr::Kind::Attribute);
  e.name = std::move(attr);
  e.args = {std::move(source)};
  return make(std::move(e));
}

ExprPtr navigation(ExprPtr source, std::string end) {
  auto e = node(Expr::Kind::Navigation);
  e.name = std::move(end);
  e.args = {std::move(source)};
  return make(std::move(e));
}

ExprPtr all_instances(std::string cls) {
  auto e = node(Expr::Kind::AllInstances);
  e.name = std::move(cls);
  return make(std::move(e));
}

ExprPtr iterate(Expr::Kind kind, ExprPtr source, std::string var, ExprPtr body) {
  auto e = node(kind);
  e.name = std::move(var);
  e.args = {std::move(source), std::move(body)};
  return make(std::move(e));
}

ExprPtr includes(ExprPtr source, ExprPtr element) {
  auto e = node(Expr::Kind::Includes);
  e.args = {std::move(source), std::move(element)};
  return make(std::move(e));
}

ExprPtr is_empty(ExprPtr source) {
  auto e = node(Expr::Kind::IsEmpty);
  e.args = {std::move(source)};
  return make(std::move(e));
}

ExprPtr compare(CompareOp op, ExprPtr lhs, ExprPtr rhs) {
  auto e = node(Expr::Kind::Compare);
  e.op = op;
  e.args = {std::move(lhs), std::move(rhs)};
  return make(std::move(e));
}

ExprPtr logical_and(ExprPtr lhs, ExprPtr rhs) {
  auto e = node(Expr::Kind::And);
  e.args = {std::move(lhs), std::move(rhs)};
  return make(std::move(e));
}

ExprPtr logical_or(ExprPtr lhs, ExprPtr rhs) {
  auto e = node(Expr::Kind::Or);
  e.args = {std::move(lhs), std::move(rhs)};
  return make(std::move(e));
}

ExprPtr logical_not(ExprPtr operand) {
  auto e = node(Expr::Kind::Not);
  e.args = {std::move(operand)};
  return make(std::move(e));
}

bool same_structure(const Expr& a, const Expr& b) {
  if (a.kind != b.kind || a.name != b.name || a.args.size() != b.args.size()) return false;
  switch (a.kind) {
    case Expr::Kind::ObjectLit:
      if (a.class_name != b.class_name) return false;
      break;
    case Expr::Kind::IntLit:
      if (a.int_value != b.int_value) return false;
      break;
    case Expr::Kind::StringLit:
      if (a.string_value != b.string_value) return false;
      break;
    case Expr::Kind::BoolLit:
      if (a.bool_value != b.bool_value) return false;
      break;
    case Expr::Kind::Compare:
      if (a.op != b.op) return false;
      break;
    default:
      break;
  }
  for (std::size_t i = 0; i < a.args.size(); ++i)
    if (!same_structure(*a.args[i], *b.args[i])) return false;
  return true;
}

// ---- lexer & parser -------------------------------------------------------

namespace {

struct Token {
  enum class Kind { Ident, Int, String, Punct, End };
  Kind kind;
  std::string text;
  std::size_t pos;
};

std::vector<Token> lex(std::string_view src) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < src.size()) {
    char c = src[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    std::size_t start = i;
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      while (i < src.size() && (std::isalnum(static_cast<unsigned char>(src[i])) || src[i] == '_')) ++i;
      out.push_back({Token::Kind::Ident, std::string(src.substr(start, i - start)), start});
    } else if (std::isdigit(static_cast<unsigned char>(c))) {
      while (i < src.size() && std::isdigit(static_cast<unsigned char>(src[i]))) ++i;
      out.push_back({Token::Kind::Int, std::string(src.substr(start, i - start)), start});
    } else if (c == '\'') {
      std::string text;
      ++i;
      for (;;) {
        if (i >= src.size()) throw SyntaxError(start, "unterminated string literal");
        if (src[i] == '\'') {
          if (i + 1 < src.size() && src[i + 1] == '\'') {
            text += '\'';
            i += 2;
            continue;
          }
          ++i;
          break;
        }
        text += src[i++];
      }
      out.push_back({Token::Kind::String, text, start});
    } else {
      static const char* two[] = {"->", "<>", "<=", ">="};
      std::string punct;
      for (const char* t : two)
        if (src.substr(i, 2) == t) punct = t;
      if (punct.empty()) {
        if (std::string_view("().|=<>-,").find(c) == std::string_view::npos)
          throw SyntaxError(i, std::string("unexpected character '") + c + "'");
        punct = std::string(1, c);
      }
      i += punct.size();
      out.push_back({Token::Kind::Punct, punct, start});
    }
  }
  out.push_back({Token::Kind::End, "", src.size()});
  return out;
}

class Parser {
 public:
  explicit Parser(std::string_view src) : tokens_(lex(src)) {}

  ExprPtr parse() {
    auto e = parse_or();
    if (peek().kind != Token::Kind::End) fail("unexpected '" + peek().text + "'");
    return e;
  }

 private:
  const Token& peek(std::size_t ahead = 0) const {
    return tokens_[std::min(pos_ + ahead, tokens_.size() - 1)];
  }
  bool is_punct(std::string_view p, std::size_t ahead = 0) const {
    return peek(ahead).kind == Token::Kind::Punct && peek(ahead).text == p;
  }
  bool is_word(std::string_view w, std::size_t ahead = 0) const {
    return peek(ahead).kind == Token::Kind::Ident && peek(ahead).text == w;
  }
  [[noreturn]] void fail(const std::string& msg) const { throw SyntaxError(peek().pos, msg); }
  void expect_punct(std::string_view p) {
    if (!is_punct(p)) fail("expected '" + std::string(p) + "'");
    ++pos_;
  }
  std::string expect_ident() {
    if (peek().kind != Token::Kind::Ident) fail("expected identifier");
    return tokens_[pos_++].text;
  }

  ExprPtr parse_or() {
    auto lhs = parse_and();
    while (is_word("or")) {
      ++pos_;
      lhs = logical_or(lhs, parse_and());
    }
    return lhs;
  }

  ExprPtr parse_and() {
    auto lhs = parse_compare();
    while (is_word("and")) {
      ++pos_;
      lhs = logical_and(lhs, parse_compare());
    }
    return lhs;
  }

  ExprPtr parse_compare() {
    auto lhs = parse_unary();
    static const std::pair<const char*, CompareOp> ops[] = {
        {"=", CompareOp::Eq}, {"<>", CompareOp::Ne}, {"<=", CompareOp::Le},
        {">=", CompareOp::Ge}, {"<", CompareOp::Lt}, {">", CompareOp::Gt}};
    for (const auto& [text, op] : ops) {
      if (is_punct(text)) {
        ++pos_;
        auto rhs = parse_unary();
        for (const auto& [t2, op2] : ops)
          if (is_punct(t2)) fail("comparison operators are not associative");
        return compare(op, lhs, rhs);
      }
    }
    return lhs;
  }

  ExprPtr parse_unary() {
    if (is_word("not")) {
      ++pos_;
      return logical_not(parse_unary());
    }
    return parse_postfix();
  }

  ExprPtr parse_postfix() {
    auto e = parse_primary();
    for (;;) {
      if (is_punct(".")) {
        ++pos_;
        auto name = expect_ident();
        if (name == "allInstances" && is_punct("(")) {
          if (e->kind != Expr::Kind::Keyword) fail("allInstances() requires a class name");
          expect_punct("(");
          expect_punct(")");
          e = all_instances(e->name);
        } else {
          e = attribute(e, name);
        }
      } else if (is_punct("->")) {
        ++pos_;
        auto op = expect_ident();
        expect_punct("(");
        if (op == "select" || op == "exists" || op == "forAll") {
          auto var = expect_ident();
          expect_punct("|");
          scopes_.push_back(var);
          auto body = parse_or();
          scopes_.pop_back();
          expect_punct(")");
          auto kind = op == "select" ? Expr::Kind::Select
                      : op == "exists" ? Expr::Kind::Exists
                                       : Expr::Kind::ForAll;
          e = iterate(kind, e, var, body);
        } else if (op == "includes") {
          auto arg = parse_or();
          expect_punct(")");
          e = includes(e, arg);
        } else if (op == "isEmpty") {
          expect_punct(")");
          e = is_empty(e);
        } else {
          fail("unsupported collection operation '" + op + "'");
        }
      } else {
        return e;
      }
    }
  }

  ExprPtr parse_primary() {
    const Token& t = peek();
    switch (t.kind) {
      case Token::Kind::Int:
        ++pos_;
        return int_lit(std::stoll(t.text));
      case Token::Kind::String:
        ++pos_;
        return string_lit(t.text);
      case Token::Kind::Ident: {
        ++pos_;
        if (t.text == "true" || t.text == "false") return bool_lit(t.text == "true");
        if (t.text == "null") return null_lit();
        if (t.text == "and" || t.text == "or" || t.text == "not") {
          --pos_;
          fail("unexpected '" + t.text + "'");
        }
        if (std::find(scopes_.begin(), scopes_.end(), t.text) != scopes_.end()) return variable(t.text);
        return keyword(t.text);
      }
      case Token::Kind::Punct:
        if (t.text == "(") {
          ++pos_;
          auto e = parse_or();
          expect_punct(")");
          return e;
        }
        if (t.text == "-" && peek(1).kind == Token::Kind::Int) {
          pos_ += 2;
          return int_lit(-std::stoll(tokens_[pos_ - 1].text));
        }
        fail("unexpected '" + t.text + "'");
      case Token::Kind::End:
        fail("unexpected end of input");
    }
    fail("unexpected token");
  }

  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
  std::vector<std::string> scopes_;
};

}  // namespace

ExprPtr parse_syntax(std::string_view text) { return Parser(text).parse(); }

// ---- rendering ------------------------------------------------------------

namespace {

int precedence(const Expr& e) {
  switch (e.kind) {
    case Expr::Kind::Or: return 1;
    case Expr::Kind::And: return 2;
    case Expr::Kind::Compare: return 3;
    case Expr::Kind::Not: return 4;
    default: return 5;
  }
}

void render(const Expr& e, std::string& out, int min_prec);

void render_child(const Expr& e, std::string& out, int min_prec) {
  if (precedence(e) < min_prec) {
    out += '(';
    render(e, out, 0);
    out += ')';
  } else {
    render(e, out, min_prec);
  }
}

void render(const Expr& e, std::string& out, int /*min_prec*/) {
  switch (e.kind) {
    case Expr::Kind::Keyword:
    case Expr::Kind::Variable:
      out += e.name;
      break;
    case Expr::Kind::ObjectLit:
      out += '<' + e.name + '>';
      break;
    case Expr::Kind::IntLit:
      out += std::to_string(e.int_value);
      break;
    case Expr::Kind::StringLit:
      out += '\'';
      for (char c : e.string_value) {
        if (c == '\'') out += '\'';
        out += c;
      }
      out += '\'';
      break;
    case Expr::Kind::BoolLit:
      out += e.bool_value ? "true" : "false";
      break;
    case Expr::Kind::NullLit:
      out += "null";
      break;
    case Expr::Kind::Attribute:
    case Expr::Kind::Navigation:
      render_child(*e.args[0], out, 5);
      out += '.' + e.name;
      break;
    case Expr::Kind::AllInstances:
      out += e.name + ".allInstances()";
      break;
    case Expr::Kind::Select:
    case Expr::Kind::Exists:
    case Expr::Kind::ForAll:
      render_child(*e.args[0], out, 5);
      out += e.kind == Expr::Kind::Select ? "->select(" : e.kind == Expr::Kind::Exists ? "->exists(" : "->forAll(";
      out += e.name + '|';
      render(*e.args[1], out, 0);
      out += ')';
      break;
    case Expr::Kind::Includes:
      render_child(*e.args[0], out, 5);
      out += "->includes(";
      render(*e.args[1], out, 0);
      out += ')';
      break;
    case Expr::Kind::IsEmpty:
      render_child(*e.args[0], out, 5);
      out += "->isEmpty()";
      break;
    case Expr::Kind::Compare:
      render_child(*e.args[0], out, 4);
      out += ' ';
      out += to_string(e.op);
      out += ' ';
      render_child(*e.args[1], out, 4);
      break;
    case Expr::Kind::And:
    case Expr::Kind::Or: {
      int p = precedence(e);
      render_child(*e.args[0], out, p);
      out += e.kind == Expr::Kind::And ? " and " : " or ";
      render_child(*e.args[1], out, p + 1);
      break;
    }
    case Expr::Kind::Not:
      out += "not ";
      render_child(*e.args[0], out, 4);
      break;
  }
}

}  // namespace

std::string render_ocl(const Expr& e) {
  std::string out;
  render(e, out, 0);
  return out;
}

// ---- type checking --------------------------------------------------------

namespace {

class TypeChecker {
 public:
  TypeChecker(const DataModel& dm, const KeywordTypes& keywords) : dm_(dm), keywords_(keywords) {}

  ExprPtr check(const Expr& e) {
    Expr out = e;
    out.args.clear();
    auto fail = [&](const std::string& expected, const std::string& found) -> ExprPtr {
      throw TypeError(render_ocl(e), expected, found);
    };
    switch (e.kind) {
      case Expr::Kind::Keyword: {
        auto it = keywords_.find(e.name);
        if (it == keywords_.end()) {
          if (dm_.find_class(e.name)) return fail("an object", "class name '" + e.name + "'");
          return fail("a declared keyword", "'" + e.name + "'");
        }
        out.type = Type::object(it->second);
        break;
      }
      case Expr::Kind::Variable: {
        auto it = std::find_if(vars_.rbegin(), vars_.rend(), [&](const auto& v) { return v.first == e.name; });
        if (it == vars_.rend()) return fail("a bound variable", "'" + e.name + "'");
        out.type = Type::object(it->second);
        break;
      }
      case Expr::Kind::ObjectLit:
        if (!dm_.find_class(e.class_name)) return fail("a declared class", e.class_name);
        out.type = Type::object(e.class_name);
        break;
      case Expr::Kind::IntLit:
        out.type = Type::integer();
        break;
      case Expr::Kind::StringLit:
        out.type = Type::string();
        break;
      case Expr::Kind::BoolLit:
        out.type = Type::boolean();
        break;
      case Expr::Kind::NullLit:
        out.type = Type::null();
        break;
      case Expr::Kind::Attribute:
      case Expr::Kind::Navigation: {
        auto src = check(*e.args[0]);
        if (src->type.kind != Type::Kind::Object) return fail("an object", to_string(src->type));
        const auto* cls = dm_.find_class(src->type.class_name);
        if (const auto* attr = cls ? cls->find_attribute(e.name) : nullptr) {
          out.kind = Expr::Kind::Attribute;
          out.type = attr->type == AttrType::Int ? Type::integer() : Type::string();
        } else if (auto nav = dm_.find_end(src->type.class_name, e.name)) {
          out.kind = Expr::Kind::Navigation;
          out.type = Type::collection(nav->target().class_name);
        } else {
          return fail("a feature of " + src->type.class_name, "'" + e.name + "'");
        }
        out.args = {src};
        break;
      }
      case Expr::Kind::AllInstances:
        if (!dm_.find_class(e.name)) return fail("a declared class", "'" + e.name + "'");
        out.type = Type::collection(e.name);
        break;
      case Expr::Kind::Select:
      case Expr::Kind::Exists:
      case Expr::Kind::ForAll: {
        auto src = check(*e.args[0]);
        if (src->type.kind != Type::Kind::Collection) return fail("a collection", to_string(src->type));
        if (keywords_.count(e.name) ||
            std::any_of(vars_.begin(), vars_.end(), [&](const auto& v) { return v.first == e.name; }))
          return fail("a fresh iterator variable", "'" + e.name + "'");
        vars_.emplace_back(e.name, src->type.class_name);
        auto body = check(*e.args[1]);
        vars_.pop_back();
        if (body->type.kind != Type::Kind::Bool) return fail("a Boolean body", to_string(body->type));
        out.type = e.kind == Expr::Kind::Select ? src->type : Type::boolean();
        out.args = {src, body};
        break;
      }
      case Expr::Kind::Includes: {
        auto src = check(*e.args[0]);
        if (src->type.kind != Type::Kind::Collection) return fail("a collection", to_string(src->type));
        auto elem = check(*e.args[1]);
        bool ok = elem->type.kind == Type::Kind::Null ||
                  (elem->type.kind == Type::Kind::Object && elem->type.class_name == src->type.class_name);
        if (!ok) return fail(src->type.class_name, to_string(elem->type));
        out.type = Type::boolean();
        out.args = {src, elem};
        break;
      }
      case Expr::Kind::IsEmpty: {
        auto src = check(*e.args[0]);
        if (src->type.kind != Type::Kind::Collection) return fail("a collection", to_string(src->type));
        out.type = Type::boolean();
        out.args = {src};
        break;
      }
      case Expr::Kind::Compare: {
        auto lhs = check(*e.args[0]);
        auto rhs = check(*e.args[1]);
        const auto& lt = lhs->type;
        const auto& rt = rhs->type;
        if (e.op == CompareOp::Eq || e.op == CompareOp::Ne) {
          bool scalar = lt.kind == Type::Kind::Int || lt.kind == Type::Kind::String || lt.kind == Type::Kind::Object;
          bool rscalar = rt.kind == Type::Kind::Int || rt.kind == Type::Kind::String || rt.kind == Type::Kind::Object;
          bool ok = (lt == rt && scalar) || (lt.kind == Type::Kind::Null && rscalar) ||
                    (rt.kind == Type::Kind::Null && scalar);
          if (!ok) return fail(to_string(lt), to_string(rt));
        } else {
          if (lt.kind != Type::Kind::Int) return fail("Integer", to_string(lt));
          if (rt.kind != Type::Kind::Int) return fail("Integer", to_string(rt));
        }
        out.type = Type::boolean();
        out.args = {lhs, rhs};
        break;
      }
      case Expr::Kind::And:
      case Expr::Kind::Or:
      case Expr::Kind::Not: {
        for (const auto& a : e.args) {
          auto c = check(*a);
          if (c->type.kind != Type::Kind::Bool) return fail("Boolean", to_string(c->type));
          out.args.push_back(c);
        }
        out.type = Type::boolean();
        break;
      }
    }
    return std::make_shared<const Expr>(std::move(out));
  }

 private:
  const DataModel& dm_;
  const KeywordTypes& keywords_;
  std::vector<std::pair<std::string, std::string>> vars_;
};

}  // namespace

ExprPtr type_check(const ExprPtr& e, const DataModel& dm, const KeywordTypes& keywords) {
  return TypeChecker(dm, keywords).check(*e);
}

ExprPtr parse_ocl(std::string_view text, const DataModel& dm, const KeywordTypes& keywords) {
  return type_check(parse_syntax(text), dm, keywords);
}

// ---- tree utilities -------------------------------------------------------

namespace {

ExprPtr rebuild(const Expr& e, const std::function<ExprPtr(const Expr&)>& leaf,
                std::vector<std::pair<std::string, std::string>>& renames, int& counter, bool rename) {
  if (auto r = leaf(e)) return r;
  Expr out = e;
  out.args.clear();
  bool iter = e.kind == Expr::Kind::Select || e.kind == Expr::Kind::Exists || e.kind == Expr::Kind::ForAll;
  if (e.kind == Expr::Kind::Variable && rename) {
    auto it = std::find_if(renames.rbegin(), renames.rend(), [&](const auto& p) { return p.first == e.name; });
    if (it != renames.rend()) out.name = it->second;
  }
  for (std::size_t i = 0; i < e.args.size(); ++i) {
    if (iter && i == 1 && rename) {
      renames.emplace_back(e.name, "v" + std::to_string(counter++));
      out.name = renames.back().second;
      out.args.push_back(rebuild(*e.args[i], leaf, renames, counter, rename));
      renames.pop_back();
    } else {
      out.args.push_back(rebuild(*e.args[i], leaf, renames, counter, rename));
    }
  }
  return std::make_shared<const Expr>(std::move(out));
}

}  // namespace

ExprPtr normalize_variables(const ExprPtr& e) {
  std::vector<std::pair<std::string, std::string>> renames;
  int counter = 0;
  return rebuild(*e, [](const Expr&) { return ExprPtr{}; }, renames, counter, true);
}

ExprPtr substitute(const ExprPtr& e, const Binding& binding) {
  if (binding.empty()) return e;
  std::vector<std::pair<std::string, std::string>> renames;
  int counter = 0;
  return rebuild(
      *e,
      [&](const Expr& n) -> ExprPtr {
        if (n.kind != Expr::Kind::Keyword) return nullptr;
        auto it = binding.find(n.name);
        if (it == binding.end()) return nullptr;
        return object_lit(it->second.id, it->second.class_name);
      },
      renames, counter, false);
}

std::set<std::string> free_keywords(const Expr& e) {
  std::set<std::string> out;
  std::function<void(const Expr&)> walk = [&](const Expr& n) {
    if (n.kind == Expr::Kind::Keyword) out.insert(n.name);
    for (const auto& a : n.args) walk(*a);
  };
  walk(e);
  return out;
}

void collect_literals(const Expr& e, std::set<std::int64_t>& ints, std::set<std::string>& strings) {
  if (e.kind == Expr::Kind::IntLit) ints.insert(e.int_value);
  if (e.kind == Expr::Kind::StringLit) strings.insert(e.string_value);
  for (const auto& a : e.args) collect_literals(*a, ints, strings);
}

// ---- evaluation -----------------------------------------------------------

std::string to_string(const Value& v) {
  struct Visitor {
    std::string operator()(const NullVal&) const { return "null"; }
    std::string operator()(const InvalidVal&) const { return "invalid"; }
    std::string operator()(const BoolVal& b) const { return b.value ? "true" : "false"; }
    std::string operator()(const IntVal& i) const { return std::to_string(i.value); }
    std::string operator()(const StringVal& s) const { return "'" + s.value + "'"; }
    std::string operator()(const ObjectRef& o) const { return o.class_name + ":" + o.id; }
    std::string operator()(const Collection& c) const {
      std::string out = "Set{";
      for (std::size_t i = 0; i < c.elements.size(); ++i) {
        if (i) out += ", ";
        out += c.elements[i].class_name + ":" + c.elements[i].id;
      }
      return out + "}";
    }
  };
  return std::visit(Visitor{}, v);
}

bool is_true(const Value& v) {
  const auto* b = std::get_if<BoolVal>(&v);
  return b && b->value;
}

namespace {

class Evaluator {
 public:
  Evaluator(const DataModel& dm, const Scenario& sc, const Binding& binding)
      : dm_(dm), sc_(sc), binding_(binding) {}

  Value eval(const Expr& e) {
    switch (e.kind) {
      case Expr::Kind::Keyword: {
        auto it = binding_.find(e.name);
        if (it == binding_.end()) throw Error(ErrorCode::UnboundKeyword, "keyword '" + e.name + "' is not bound");
        return it->second;
      }
      case Expr::Kind::Variable: {
        auto it = std::find_if(vars_.rbegin(), vars_.rend(), [&](const auto& v) { return v.first == e.name; });
        if (it == vars_.rend()) throw Error(ErrorCode::UnboundKeyword, "variable '" + e.name + "' is not bound");
        return it->second;
      }
      case Expr::Kind::ObjectLit:
        return ObjectRef{e.name, e.class_name};
      case Expr::Kind::IntLit:
        return IntVal{e.int_value};
      case Expr::Kind::StringLit:
        return StringVal{e.string_value};
      case Expr::Kind::BoolLit:
        return BoolVal{e.bool_value};
      case Expr::Kind::NullLit:
        return NullVal{};
      case Expr::Kind::Attribute: {
        auto src = eval(*e.args[0]);
        const auto* obj = std::get_if<ObjectRef>(&src);
        if (!obj || !sc_.find_object(obj->class_name, obj->id)) return InvalidVal{};
        auto v = sc_.attribute(obj->class_name, obj->id, e.name);
        if (is_null(v)) return NullVal{};
        if (const auto* i = std::get_if<std::int64_t>(&v)) return IntVal{*i};
        return StringVal{std::get<std::string>(v)};
      }
      case Expr::Kind::Navigation: {
        auto src = eval(*e.args[0]);
        const auto* obj = std::get_if<ObjectRef>(&src);
        if (!obj || !sc_.find_object(obj->class_name, obj->id)) return InvalidVal{};
        auto nav = dm_.find_end(obj->class_name, e.name);
        if (!nav) return InvalidVal{};
        Collection out;
        auto links = sc_.links.find(nav->association->name);
        if (links != sc_.links.end()) {
          for (const auto& [x, y] : links->second) {
            const auto& from = nav->target_is_end1 ? y : x;
            const auto& to = nav->target_is_end1 ? x : y;
            if (from == obj->id) out.elements.push_back({to, nav->target().class_name});
          }
        }
        std::sort(out.elements.begin(), out.elements.end());
        return out;
      }
      case Expr::Kind::AllInstances: {
        Collection out;
        for (const auto& id : sc_.ids_of(e.name)) out.elements.push_back({id, e.name});
        return out;
      }
      case Expr::Kind::Select: {
        auto src = eval(*e.args[0]);
        const auto* coll = std::get_if<Collection>(&src);
        if (!coll) return InvalidVal{};
        Collection out;
        for (const auto& x : coll->elements)
          if (is_true(eval_body(e, x))) out.elements.push_back(x);
        return out;
      }
      case Expr::Kind::Exists:
      case Expr::Kind::ForAll: {
        auto src = eval(*e.args[0]);
        const auto* coll = std::get_if<Collection>(&src);
        if (!coll) return InvalidVal{};
        bool exists = e.kind == Expr::Kind::Exists;
        bool undecided = false;
        for (const auto& x : coll->elements) {
          auto v = eval_body(e, x);
          const auto* b = std::get_if<BoolVal>(&v);
          if (!b) {
            undecided = true;
          } else if (b->value == exists) {
            return BoolVal{exists};
          }
        }
        if (undecided) return InvalidVal{};
        return BoolVal{!exists};
      }
      case Expr::Kind::Includes: {
        auto src = eval(*e.args[0]);
        auto elem = eval(*e.args[1]);
        const auto* coll = std::get_if<Collection>(&src);
        if (!coll || std::holds_alternative<InvalidVal>(elem)) return InvalidVal{};
        const auto* obj = std::get_if<ObjectRef>(&elem);
        if (!obj) return BoolVal{false};
        return BoolVal{std::find(coll->elements.begin(), coll->elements.end(), *obj) != coll->elements.end()};
      }
      case Expr::Kind::IsEmpty: {
        auto src = eval(*e.args[0]);
        const auto* coll = std::get_if<Collection>(&src);
        if (!coll) return InvalidVal{};
        return BoolVal{coll->elements.empty()};
      }
      case Expr::Kind::Compare:
        return eval_compare(e.op, eval(*e.args[0]), eval(*e.args[1]));
      case Expr::Kind::And:
      case Expr::Kind::Or: {
        // Both operands are always evaluated; the result does not depend on order.
        auto a = eval(*e.args[0]);
        auto b = eval(*e.args[1]);
        bool dominant = e.kind == Expr::Kind::Or;
        auto has = [&](bool v) {
          const auto* x = std::get_if<BoolVal>(&a);
          const auto* y = std::get_if<BoolVal>(&b);
          return (x && x->value == v) || (y && y->value == v);
        };
        if (has(dominant)) return BoolVal{dominant};
        auto bool_or_null = [](const Value& v) {
          return std::holds_alternative<BoolVal>(v) || std::holds_alternative<NullVal>(v);
        };
        if (!bool_or_null(a) || !bool_or_null(b)) return InvalidVal{};
        if (std::holds_alternative<NullVal>(a) || std::holds_alternative<NullVal>(b)) return NullVal{};
        return BoolVal{!dominant};
      }
      case Expr::Kind::Not: {
        auto a = eval(*e.args[0]);
        if (const auto* b = std::get_if<BoolVal>(&a)) return BoolVal{!b->value};
        if (std::holds_alternative<NullVal>(a)) return NullVal{};
        return InvalidVal{};
      }
    }
    return InvalidVal{};
  }

 private:
  Value eval_body(const Expr& iter, const ObjectRef& x) {
    vars_.emplace_back(iter.name, x);
    auto v = eval(*iter.args[1]);
    vars_.pop_back();
    return v;
  }

  static Value eval_compare(CompareOp op, const Value& a, const Value& b) {
    if (std::holds_alternative<InvalidVal>(a) || std::holds_alternative<InvalidVal>(b)) return InvalidVal{};
    bool an = std::holds_alternative<NullVal>(a);
    bool bn = std::holds_alternative<NullVal>(b);
    if (op == CompareOp::Eq || op == CompareOp::Ne) {
      bool eq;
      if (an || bn) {
        eq = an && bn;
      } else if (a.index() != b.index()) {
        return InvalidVal{};
      } else if (const auto* o = std::get_if<ObjectRef>(&a)) {
        eq = o->id == std::get<ObjectRef>(b).id;
      } else {
        eq = a == b;
      }
      return BoolVal{op == CompareOp::Eq ? eq : !eq};
    }
    if (an || bn) return InvalidVal{};
    const auto* x = std::get_if<IntVal>(&a);
    const auto* y = std::get_if<IntVal>(&b);
    if (!x || !y) return InvalidVal{};
    switch (op) {
      case CompareOp::Lt: return BoolVal{x->value < y->value};
      case CompareOp::Gt: return BoolVal{x->value > y->value};
      case CompareOp::Le: return BoolVal{x->value <= y->value};
      case CompareOp::Ge: return BoolVal{x->value >= y->value};
      default: return InvalidVal{};
    }
  }

  const DataModel& dm_;
  const Scenario& sc_;
  const Binding& binding_;
  std::vector<std::pair<std::string, ObjectRef>> vars_;
};

}  // namespace

Value eval_ocl(const DataModel& dm, const Scenario& sc, const Expr& e, const Binding& binding) {
  return Evaluator(dm, sc, binding).eval(e);
}

}  // namespace fgac::ocl
