#include "fgac/sql.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include "fgac/error.hpp"

namespace fgac::sql {

namespace {

Expr blank(Expr::Kind kind) {
  Expr e{kind, {}, {}, 0, {}, false, {}, {}, {}, {}, {}, {}, {}, CheckStyle::WhenOne, {}};
  return e;
}

ExprPtr make(Expr e) { return std::make_shared<const Expr>(std::move(e)); }

std::string upper(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

}  // namespace

ExprPtr column(std::string name, std::string qualifier) {
  auto e = blank(Expr::Kind::Column);
  e.name = std::move(name);
  e.qualifier = std::move(qualifier);
  return make(std::move(e));
}

ExprPtr star(std::string qualifier) {
  auto e = blank(Expr::Kind::Star);
  e.qualifier = std::move(qualifier);
  return make(std::move(e));
}

ExprPtr int_lit(std::int64_t v) {
  auto e = blank(Expr::Kind::IntLit);
  e.int_value = v;
  return make(std::move(e));
}

ExprPtr string_lit(std::string v) {
  auto e = blank(Expr::Kind::StringLit);
  e.string_value = std::move(v);
  return make(std::move(e));
}

ExprPtr bool_lit(bool v) {
  auto e = blank(Expr::Kind::BoolLit);
  e.flag = v;
  return make(std::move(e));
}

ExprPtr null_lit() { return make(blank(Expr::Kind::NullLit)); }

ExprPtr binary(std::string op, ExprPtr lhs, ExprPtr rhs) {
  auto e = blank(Expr::Kind::Binary);
  e.op = std::move(op);
  e.args = {std::move(lhs), std::move(rhs)};
  return make(std::move(e));
}

ExprPtr logical_not(ExprPtr operand) {
  auto e = blank(Expr::Kind::Not);
  e.args = {std::move(operand)};
  return make(std::move(e));
}

ExprPtr call(std::string name, std::vector<ExprPtr> args) {
  auto e = blank(Expr::Kind::Call);
  e.name = std::move(name);
  e.args = std::move(args);
  return make(std::move(e));
}

ExprPtr checked(std::string func, std::vector<ExprPtr> args, ExprPtr value, CheckStyle style,
                std::string resource) {
  auto e = blank(Expr::Kind::Checked);
  e.name = std::move(func);
  e.args = std::move(args);
  e.value = std::move(value);
  e.style = style;
  e.resource = std::move(resource);
  return make(std::move(e));
}

// ---- lexer ----------------------------------------------------------------

namespace {

struct Token {
  enum class Kind { Ident, Int, String, Punct, End };
  Kind kind;
  std::string text;  // identifiers keep their case; `word` is upper-cased
  std::string word;
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
    if (c == '-' && i + 1 < src.size() && src[i + 1] == '-') {
      while (i < src.size() && src[i] != '\n') ++i;
      continue;
    }
    std::size_t start = i;
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == '@') {
      ++i;
      while (i < src.size() && (std::isalnum(static_cast<unsigned char>(src[i])) || src[i] == '_')) ++i;
      std::string text(src.substr(start, i - start));
      out.push_back({Token::Kind::Ident, text, upper(text), start});
    } else if (c == '`') {
      auto end = src.find('`', i + 1);
      if (end == std::string_view::npos) throw SyntaxError(start, "unterminated quoted identifier");
      std::string text(src.substr(i + 1, end - i - 1));
      i = end + 1;
      out.push_back({Token::Kind::Ident, text, "`" + text, start});
    } else if (std::isdigit(static_cast<unsigned char>(c))) {
      while (i < src.size() && std::isdigit(static_cast<unsigned char>(src[i]))) ++i;
      std::string text(src.substr(start, i - start));
      out.push_back({Token::Kind::Int, text, text, start});
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
      out.push_back({Token::Kind::String, text, text, start});
    } else {
      static const char* two[] = {"<>", "<=", ">=", "!="};
      std::string punct;
      for (const char* t : two)
        if (src.substr(i, 2) == t) punct = t;
      if (punct.empty()) {
        if (std::string_view("(),.*=<>;-").find(c) == std::string_view::npos)
          throw SyntaxError(i, std::string("unexpected character '") + c + "'");
        punct = std::string(1, c);
      }
      if (punct == "!=") punct = "<>";
      i += (punct == "<>" && src[i] == '!') ? 2 : punct.size();
      out.push_back({Token::Kind::Punct, punct, punct, start});
    }
  }
  out.push_back({Token::Kind::End, "", "", src.size()});
  return out;
}

const std::set<std::string>& reserved() {
  static const std::set<std::string> words = {
      "SELECT", "FROM", "WHERE", "JOIN", "INNER", "ON", "AS", "AND", "OR", "NOT", "IS", "NULL",
      "TRUE", "FALSE", "EXISTS", "CASE", "WHEN", "THEN", "ELSE", "END", "DISTINCT"};
  return words;
}

const std::set<std::string>& unsupported() {
  static const std::set<std::string> words = {
      "GROUP", "ORDER", "HAVING", "LIMIT", "OFFSET", "LEFT", "RIGHT", "FULL", "OUTER", "CROSS",
      "NATURAL", "UNION", "INTERSECT", "EXCEPT", "IN", "LIKE", "BETWEEN", "INSERT", "UPDATE",
      "DELETE", "USING", "ALL", "ANY", "SOME", "WITH"};
  return words;
}

class Parser {
 public:
  explicit Parser(std::string_view src) : tokens_(lex(src)) {}

  QueryPtr parse_statement() {
    auto q = parse_query();
    if (is_punct(";")) ++pos_;
    expect_end();
    return q;
  }

  ExprPtr parse_standalone_expr() {
    auto e = parse_or();
    expect_end();
    return e;
  }

  std::vector<Statement> parse_script() {
    std::vector<Statement> out;
    while (peek().kind != Token::Kind::End) {
      if (is_punct(";")) {
        ++pos_;
        continue;
      }
      if (is_word("CREATE")) {
        out.push_back(parse_create());
      } else if (is_word("INSERT")) {
        out.push_back(parse_insert());
      } else {
        fail("expected CREATE TABLE or INSERT");
      }
    }
    return out;
  }

 private:
  const Token& peek(std::size_t ahead = 0) const {
    return tokens_[std::min(pos_ + ahead, tokens_.size() - 1)];
  }
  bool is_punct(std::string_view p, std::size_t ahead = 0) const {
    return peek(ahead).kind == Token::Kind::Punct && peek(ahead).text == p;
  }
  bool is_word(std::string_view w, std::size_t ahead = 0) const {
    return peek(ahead).kind == Token::Kind::Ident && peek(ahead).word == w;
  }
  [[noreturn]] void fail(const std::string& msg) const { throw SyntaxError(peek().pos, msg); }

  void check_supported() const {
    const auto& t = peek();
    if (t.kind == Token::Kind::Ident && unsupported().count(t.word))
      throw Error(ErrorCode::UnsupportedFeature, "'" + t.text + "' is outside the supported subset");
  }

  void expect_end() {
    check_supported();
    if (peek().kind != Token::Kind::End) fail("unexpected '" + peek().text + "'");
  }
  void expect_punct(std::string_view p) {
    check_supported();
    if (!is_punct(p)) fail("expected '" + std::string(p) + "'");
    ++pos_;
  }
  void expect_word(std::string_view w) {
    check_supported();
    if (!is_word(w)) fail("expected " + std::string(w));
    ++pos_;
  }
  std::string expect_ident() {
    check_supported();
    const auto& t = peek();
    if (t.kind != Token::Kind::Ident || reserved().count(t.word)) fail("expected identifier");
    ++pos_;
    return t.text;
  }
  bool is_plain_ident(std::size_t ahead = 0) const {
    const auto& t = peek(ahead);
    return t.kind == Token::Kind::Ident && !reserved().count(t.word) && !unsupported().count(t.word);
  }

  QueryPtr parse_query() {
    auto q = std::make_shared<Query>();
    expect_word("SELECT");
    if (is_word("DISTINCT")) {
      ++pos_;
      q->distinct = true;
    }
    do {
      q->items.push_back(parse_select_item());
    } while (is_punct(",") && ++pos_);
    expect_word("FROM");
    q->from.push_back(parse_from_item());
    while (is_punct(",")) {
      ++pos_;
      q->from.push_back(parse_from_item());
    }
    for (;;) {
      check_supported();
      if (is_word("INNER")) {
        ++pos_;
        expect_word("JOIN");
      } else if (is_word("JOIN")) {
        ++pos_;
      } else {
        break;
      }
      Join j{parse_from_item(), nullptr};
      expect_word("ON");
      j.on = parse_or();
      q->joins.push_back(std::move(j));
    }
    check_supported();
    if (is_word("WHERE")) {
      ++pos_;
      q->where = parse_or();
    }
    check_supported();
    return q;
  }

  SelectItem parse_select_item() {
    SelectItem item;
    if (is_punct("*")) {
      ++pos_;
      item.expr = star();
      return item;
    }
    if (is_plain_ident() && is_punct(".", 1) && is_punct("*", 2)) {
      auto q = expect_ident();
      pos_ += 2;
      item.expr = star(q);
      return item;
    }
    item.expr = parse_or();
    if (is_word("AS")) {
      ++pos_;
      item.alias = expect_ident();
    } else if (is_plain_ident()) {
      item.alias = expect_ident();
    }
    return item;
  }

  FromItem parse_from_item() {
    FromItem item;
    if (is_punct("(")) {
      ++pos_;
      item.subquery = parse_query();
      expect_punct(")");
      if (is_word("AS")) ++pos_;
      item.alias = expect_ident();
      return item;
    }
    item.table = expect_ident();
    if (is_word("AS")) {
      ++pos_;
      item.alias = expect_ident();
    } else if (is_plain_ident()) {
      item.alias = expect_ident();
    }
    return item;
  }

  ExprPtr parse_or() {
    auto lhs = parse_and();
    while (is_word("OR")) {
      ++pos_;
      lhs = binary("OR", lhs, parse_and());
    }
    return lhs;
  }

  ExprPtr parse_and() {
    auto lhs = parse_not();
    while (is_word("AND")) {
      ++pos_;
      lhs = binary("AND", lhs, parse_not());
    }
    return lhs;
  }

  ExprPtr parse_not() {
    if (is_word("NOT")) {
      ++pos_;
      return logical_not(parse_not());
    }
    return parse_comparison();
  }

  ExprPtr parse_comparison() {
    auto lhs = parse_primary();
    check_supported();
    static const char* ops[] = {"=", "<>", "<=", ">=", "<", ">"};
    for (const char* op : ops) {
      if (is_punct(op)) {
        ++pos_;
        return binary(op, lhs, parse_primary());
      }
    }
    if (is_word("IS")) {
      ++pos_;
      bool negated = false;
      if (is_word("NOT")) {
        ++pos_;
        negated = true;
      }
      expect_word("NULL");
      auto e = blank(Expr::Kind::IsNull);
      e.flag = negated;
      e.args = {lhs};
      return make(std::move(e));
    }
    if (is_word("NOT") && unsupported().count(peek(1).word))
      throw Error(ErrorCode::UnsupportedFeature, "'" + peek(1).text + "' is outside the supported subset");
    return lhs;
  }

  ExprPtr parse_primary() {
    check_supported();
    const Token& t = peek();
    if (t.kind == Token::Kind::Int) {
      ++pos_;
      return int_lit(std::stoll(t.text));
    }
    if (t.kind == Token::Kind::String) {
      ++pos_;
      return string_lit(t.text);
    }
    if (is_punct("-") && peek(1).kind == Token::Kind::Int) {
      pos_ += 2;
      return int_lit(-std::stoll(tokens_[pos_ - 1].text));
    }
    if (is_punct("(")) {
      ++pos_;
      if (is_word("SELECT")) {
        auto e = blank(Expr::Kind::Subquery);
        e.query = parse_query();
        expect_punct(")");
        return make(std::move(e));
      }
      auto inner = parse_or();
      expect_punct(")");
      return inner;
    }
    if (t.kind != Token::Kind::Ident) fail("unexpected '" + t.text + "'");
    if (t.word == "TRUE" || t.word == "FALSE") {
      ++pos_;
      return bool_lit(t.word == "TRUE");
    }
    if (t.word == "NULL") {
      ++pos_;
      return null_lit();
    }
    if (t.word == "EXISTS") {
      ++pos_;
      expect_punct("(");
      auto e = blank(Expr::Kind::Exists);
      e.query = parse_query();
      expect_punct(")");
      return make(std::move(e));
    }
    if (t.word == "CASE") return parse_case();
    auto name = expect_ident();
    if (is_punct("(")) {
      ++pos_;
      std::vector<ExprPtr> args;
      if (is_punct("*")) {
        ++pos_;
        args.push_back(star());
      } else if (!is_punct(")")) {
        if (is_word("DISTINCT"))
          throw Error(ErrorCode::UnsupportedFeature, "DISTINCT inside a function call is outside the supported subset");
        do {
          args.push_back(parse_or());
        } while (is_punct(",") && ++pos_);
      }
      expect_punct(")");
      return call(name, std::move(args));
    }
    if (is_punct(".")) {
      ++pos_;
      return column(expect_ident(), name);
    }
    return column(name);
  }

  ExprPtr parse_case() {
    expect_word("CASE");
    auto e = blank(Expr::Kind::Case);
    if (!is_word("WHEN")) e.operand = parse_or();
    while (is_word("WHEN")) {
      ++pos_;
      auto cond = parse_or();
      expect_word("THEN");
      e.whens.emplace_back(cond, parse_or());
    }
    if (e.whens.empty()) fail("CASE needs at least one WHEN");
    if (is_word("ELSE")) {
      ++pos_;
      e.otherwise = parse_or();
    }
    expect_word("END");
    return make(std::move(e));
  }

  Statement parse_create() {
    expect_word("CREATE");
    if (is_word("TEMPORARY")) ++pos_;
    expect_word("TABLE");
    CreateTable ct{expect_ident(), {}};
    expect_punct("(");
    for (;;) {
      if (is_word("PRIMARY") || is_word("FOREIGN") || is_word("KEY") || is_word("CONSTRAINT")) {
        skip_entry();
      } else {
        ct.columns.push_back(expect_ident());
        skip_entry();
      }
      if (is_punct(",")) {
        ++pos_;
        continue;
      }
      expect_punct(")");
      break;
    }
    return ct;
  }

  // Skips tokens up to the next top-level ',' or ')' of a column list.
  void skip_entry() {
    int depth = 0;
    while (peek().kind != Token::Kind::End) {
      if (is_punct("(")) ++depth;
      if (is_punct(")")) {
        if (depth == 0) return;
        --depth;
      }
      if (is_punct(",") && depth == 0) return;
      ++pos_;
    }
    fail("unterminated column list");
  }

  Statement parse_insert() {
    ++pos_;  // INSERT, a statement keyword here rather than an unsupported query feature
    expect_word("INTO");
    Insert ins{expect_ident(), {}, {}};
    expect_punct("(");
    do {
      ins.columns.push_back(expect_ident());
    } while (is_punct(",") && ++pos_);
    expect_punct(")");
    expect_word("VALUES");
    expect_punct("(");
    do {
      const auto& t = peek();
      if (t.kind == Token::Kind::Int) {
        ins.values.emplace_back(static_cast<std::int64_t>(std::stoll(t.text)));
        ++pos_;
      } else if (is_punct("-") && peek(1).kind == Token::Kind::Int) {
        ins.values.emplace_back(static_cast<std::int64_t>(-std::stoll(peek(1).text)));
        pos_ += 2;
      } else if (t.kind == Token::Kind::String) {
        ins.values.emplace_back(t.text);
        ++pos_;
      } else if (is_word("NULL")) {
        ins.values.emplace_back(NullValue{});
        ++pos_;
      } else {
        fail("expected a literal value");
      }
    } while (is_punct(",") && ++pos_);
    expect_punct(")");
    if (ins.values.size() != ins.columns.size()) fail("column and value counts differ");
    return ins;
  }

  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
};

}  // namespace

QueryPtr parse_select(std::string_view text) { return Parser(text).parse_statement(); }

ExprPtr parse_expression(std::string_view text) { return Parser(text).parse_standalone_expr(); }

std::vector<Statement> parse_script(std::string_view text) { return Parser(text).parse_script(); }

// ---- rendering ------------------------------------------------------------

namespace {

int precedence(const Expr& e) {
  if (e.kind == Expr::Kind::Binary) {
    if (e.op == "OR") return 1;
    if (e.op == "AND") return 2;
    return 4;
  }
  if (e.kind == Expr::Kind::Not) return 3;
  if (e.kind == Expr::Kind::IsNull) return 4;
  return 5;
}

void render(const Expr& e, std::string& out);
void render(const Query& q, std::string& out);

void render_child(const Expr& e, std::string& out, int min_prec) {
  if (precedence(e) < min_prec) {
    out += '(';
    render(e, out);
    out += ')';
  } else {
    render(e, out);
  }
}

void render_args(const std::vector<ExprPtr>& args, std::string& out) {
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (i) out += ", ";
    render(*args[i], out);
  }
}

void render(const Expr& e, std::string& out) {
  switch (e.kind) {
    case Expr::Kind::Column:
      if (!e.qualifier.empty()) out += e.qualifier + '.';
      out += e.name;
      break;
    case Expr::Kind::Star:
      if (!e.qualifier.empty()) out += e.qualifier + '.';
      out += '*';
      break;
    case Expr::Kind::IntLit:
      out += std::to_string(e.int_value);
      break;
    case Expr::Kind::StringLit:
      out += sql_quote(e.string_value);
      break;
    case Expr::Kind::BoolLit:
      out += e.flag ? "TRUE" : "FALSE";
      break;
    case Expr::Kind::NullLit:
      out += "NULL";
      break;
    case Expr::Kind::Binary: {
      int p = precedence(e);
      if (p == 4) {
        render_child(*e.args[0], out, 5);
        out += ' ' + e.op + ' ';
        render_child(*e.args[1], out, 5);
      } else {
        render_child(*e.args[0], out, p);
        out += ' ' + e.op + ' ';
        render_child(*e.args[1], out, p + 1);
      }
      break;
    }
    case Expr::Kind::Not:
      out += "NOT ";
      render_child(*e.args[0], out, 3);
      break;
    case Expr::Kind::IsNull:
      render_child(*e.args[0], out, 5);
      out += e.flag ? " IS NOT NULL" : " IS NULL";
      break;
    case Expr::Kind::Exists:
      out += "EXISTS (";
      render(*e.query, out);
      out += ')';
      break;
    case Expr::Kind::Subquery:
      out += '(';
      render(*e.query, out);
      out += ')';
      break;
    case Expr::Kind::Call:
      out += e.name + '(';
      render_args(e.args, out);
      out += ')';
      break;
    case Expr::Kind::Case:
      out += "CASE";
      if (e.operand) {
        out += ' ';
        render(*e.operand, out);
      }
      for (const auto& [c, v] : e.whens) {
        out += " WHEN ";
        render(*c, out);
        out += " THEN ";
        render(*v, out);
      }
      if (e.otherwise) {
        out += " ELSE ";
        render(*e.otherwise, out);
      }
      out += " END";
      break;
    case Expr::Kind::Checked:
      out += "CASE " + e.name + '(';
      render_args(e.args, out);
      out += ')';
      if (e.style == CheckStyle::WhenOne) {
        out += " WHEN 1 THEN ";
        render(*e.value, out);
      } else {
        out += " WHEN TRUE THEN ";
        render(*e.value, out);
      }
      out += " ELSE throw_error() END";
      break;
  }
}

void render(const FromItem& item, std::string& out) {
  if (item.subquery) {
    out += '(';
    render(*item.subquery, out);
    out += ") AS " + item.alias;
  } else {
    out += item.table;
    if (!item.alias.empty()) out += ' ' + item.alias;
  }
}

void render(const Query& q, std::string& out) {
  out += "SELECT ";
  if (q.distinct) out += "DISTINCT ";
  for (std::size_t i = 0; i < q.items.size(); ++i) {
    if (i) out += ", ";
    const auto& item = q.items[i];
    render(*item.expr, out);
    if (!item.alias.empty()) {
      bool lower = item.expr->kind == Expr::Kind::Case || item.expr->kind == Expr::Kind::Checked;
      out += (lower ? " as " : " AS ") + item.alias;
    }
  }
  out += " FROM ";
  for (std::size_t i = 0; i < q.from.size(); ++i) {
    if (i) out += ", ";
    render(q.from[i], out);
  }
  for (const auto& j : q.joins) {
    out += " JOIN ";
    render(j.item, out);
    out += " ON ";
    render(*j.on, out);
  }
  if (q.where) {
    out += " WHERE ";
    render(*q.where, out);
  }
}

}  // namespace

std::string render_sql(const Query& q) {
  std::string out;
  render(q, out);
  return out;
}

std::string render_expr(const Expr& e) {
  std::string out;
  render(e, out);
  return out;
}

// ---- structural equality & rewriting --------------------------------------

namespace {

bool same(const ExprPtr& a, const ExprPtr& b) {
  if (!a || !b) return !a && !b;
  return same_structure(*a, *b);
}

bool same(const QueryPtr& a, const QueryPtr& b) {
  if (!a || !b) return !a && !b;
  return same_structure(*a, *b);
}

bool same(const FromItem& a, const FromItem& b) {
  return a.table == b.table && a.alias == b.alias && same(a.subquery, b.subquery);
}

}  // namespace

bool same_structure(const Expr& a, const Expr& b) {
  if (a.kind != b.kind || a.qualifier != b.qualifier || a.name != b.name || a.int_value != b.int_value ||
      a.string_value != b.string_value || a.flag != b.flag || a.op != b.op || a.args.size() != b.args.size() ||
      a.whens.size() != b.whens.size() || a.style != b.style)
    return false;
  for (std::size_t i = 0; i < a.args.size(); ++i)
    if (!same(a.args[i], b.args[i])) return false;
  for (std::size_t i = 0; i < a.whens.size(); ++i)
    if (!same(a.whens[i].first, b.whens[i].first) || !same(a.whens[i].second, b.whens[i].second)) return false;
  return same(a.query, b.query) && same(a.operand, b.operand) && same(a.otherwise, b.otherwise) &&
         same(a.value, b.value);
}

bool same_structure(const Query& a, const Query& b) {
  if (a.distinct != b.distinct || a.items.size() != b.items.size() || a.from.size() != b.from.size() ||
      a.joins.size() != b.joins.size() || !same(a.where, b.where))
    return false;
  for (std::size_t i = 0; i < a.items.size(); ++i)
    if (a.items[i].alias != b.items[i].alias || !same(a.items[i].expr, b.items[i].expr)) return false;
  for (std::size_t i = 0; i < a.from.size(); ++i)
    if (!same(a.from[i], b.from[i])) return false;
  for (std::size_t i = 0; i < a.joins.size(); ++i)
    if (!same(a.joins[i].item, b.joins[i].item) || !same(a.joins[i].on, b.joins[i].on)) return false;
  return true;
}

namespace {

using Rewriter = std::function<ExprPtr(const ExprPtr&)>;

ExprPtr rewrite_impl(const ExprPtr& e, const Rewriter& f, bool into_queries);

QueryPtr rewrite_query_impl(const Query& q, const Rewriter& f) {
  auto out = std::make_shared<Query>(q);
  for (auto& item : out->items) item.expr = rewrite_impl(item.expr, f, true);
  for (auto& item : out->from)
    if (item.subquery) item.subquery = rewrite_query_impl(*item.subquery, f);
  for (auto& j : out->joins) {
    if (j.item.subquery) j.item.subquery = rewrite_query_impl(*j.item.subquery, f);
    j.on = rewrite_impl(j.on, f, true);
  }
  if (out->where) out->where = rewrite_impl(out->where, f, true);
  return out;
}

ExprPtr rewrite_impl(const ExprPtr& e, const Rewriter& f, bool into_queries) {
  if (!e) return e;
  Expr copy = *e;
  for (auto& a : copy.args) a = rewrite_impl(a, f, into_queries);
  copy.operand = rewrite_impl(copy.operand, f, into_queries);
  for (auto& [c, v] : copy.whens) {
    c = rewrite_impl(c, f, into_queries);
    v = rewrite_impl(v, f, into_queries);
  }
  copy.otherwise = rewrite_impl(copy.otherwise, f, into_queries);
  copy.value = rewrite_impl(copy.value, f, into_queries);
  if (copy.query && into_queries) copy.query = rewrite_query_impl(*copy.query, f);
  auto rebuilt = make(std::move(copy));
  if (auto r = f(rebuilt)) return r;
  return rebuilt;
}

}  // namespace

ExprPtr rewrite(const ExprPtr& e, const std::function<ExprPtr(const ExprPtr&)>& f) {
  return rewrite_impl(e, f, false);
}

QueryPtr rewrite_query(const Query& q, const std::function<ExprPtr(const ExprPtr&)>& f) {
  return rewrite_query_impl(q, f);
}

namespace {

ExprPtr strip_one(const ExprPtr& e) { return e->kind == Expr::Kind::Checked ? e->value : nullptr; }

}  // namespace

ExprPtr strip_checks(const ExprPtr& e) { return rewrite_impl(e, strip_one, true); }

QueryPtr strip_checks(const Query& q) { return rewrite_query_impl(q, strip_one); }

bool has_checks(const Expr& e) {
  bool found = false;
  rewrite_impl(std::make_shared<const Expr>(e), [&](const ExprPtr& n) -> ExprPtr {
    if (n->kind == Expr::Kind::Checked) found = true;
    return nullptr;
  }, true);
  return found;
}

bool has_checks(const Query& q) {
  bool found = false;
  rewrite_query_impl(q, [&](const ExprPtr& n) -> ExprPtr {
    if (n->kind == Expr::Kind::Checked) found = true;
    return nullptr;
  });
  return found;
}

// ---- columns ----------------------------------------------------------------

std::optional<std::vector<std::string>> table_columns(const DataModel& dm, std::string_view table) {
  if (const auto* c = dm.find_class(table)) {
    std::vector<std::string> cols{c->id_column()};
    for (const auto& a : c->attributes) cols.push_back(a.name);
    return cols;
  }
  if (const auto* a = dm.find_association(table)) return std::vector<std::string>{a->end1.name, a->end2.name};
  return std::nullopt;
}

namespace {

std::vector<std::string> item_columns(const FromItem& item, const TableLookup& lookup) {
  if (item.subquery) return output_columns(*item.subquery, lookup);
  auto cols = lookup(item.table);
  if (!cols) throw Error(ErrorCode::UnknownTable, "unknown table '" + item.table + "'");
  return *cols;
}

}  // namespace

std::vector<std::string> output_columns(const Query& q, const TableLookup& lookup) {
  std::vector<std::string> out;
  for (const auto& item : q.items) {
    if (item.expr->kind == Expr::Kind::Star) {
      auto add = [&](const FromItem& fi) {
        if (!item.expr->qualifier.empty() && fi.exposed_name() != item.expr->qualifier) return;
        for (auto& c : item_columns(fi, lookup)) out.push_back(c);
      };
      for (const auto& fi : q.from) add(fi);
      for (const auto& j : q.joins) add(j.item);
    } else if (!item.alias.empty()) {
      out.push_back(item.alias);
    } else if (item.expr->kind == Expr::Kind::Column) {
      out.push_back(item.expr->name);
    } else {
      out.push_back(render_expr(*item.expr));
    }
  }
  return out;
}

// ---- resource analysis ------------------------------------------------------

namespace {

struct ScopeSource {
  std::string name;
  std::string table;  // empty for subqueries
  std::vector<std::string> columns;
};

using Scope = std::vector<ScopeSource>;

class AccessCollector {
 public:
  explicit AccessCollector(const DataModel& dm) : dm_(dm) {}

  std::vector<ResourceAccess> run(const Query& q) {
    std::vector<Scope> scopes;
    visit_query(q, scopes);
    return std::move(out_);
  }

 private:
  void visit_query(const Query& q, std::vector<Scope>& scopes) {
    Scope scope;
    auto lookup = [&](std::string_view t) { return table_columns(dm_, t); };
    auto add_item = [&](const FromItem& item) {
      if (item.subquery) {
        if (item.alias.empty()) throw Error(ErrorCode::UnknownTable, "subquery in FROM needs an alias");
        visit_query(*item.subquery, scopes);
        scope.push_back({item.alias, "", output_columns(*item.subquery, lookup)});
        return;
      }
      auto cols = table_columns(dm_, item.table);
      if (!cols) throw Error(ErrorCode::UnknownTable, "unknown table '" + item.table + "'");
      if (const auto* a = dm_.find_association(item.table))
        out_.push_back(AssocAccess{a->name, a->end1.class_name, a->end2.class_name});
      scope.push_back({item.exposed_name(), item.table, *cols});
    };
    for (const auto& item : q.from) add_item(item);
    for (const auto& j : q.joins) add_item(j.item);
    scopes.push_back(scope);
    for (const auto& j : q.joins) visit_expr(*j.on, scopes);
    if (q.where) visit_expr(*q.where, scopes);
    for (const auto& item : q.items) {
      if (item.expr->kind == Expr::Kind::Star) {
        for (const auto& src : scopes.back())
          if (item.expr->qualifier.empty() || item.expr->qualifier == src.name)
            for (const auto& c : src.columns) note(src, c);
      } else {
        visit_expr(*item.expr, scopes);
      }
    }
    scopes.pop_back();
  }

  void visit_expr(const Expr& e, std::vector<Scope>& scopes) {
    switch (e.kind) {
      case Expr::Kind::Column:
        resolve(e, scopes);
        return;
      case Expr::Kind::Exists:
      case Expr::Kind::Subquery:
        visit_query(*e.query, scopes);
        return;
      default:
        break;
    }
    for (const auto& a : e.args) visit_expr(*a, scopes);
    if (e.operand) visit_expr(*e.operand, scopes);
    for (const auto& [c, v] : e.whens) {
      visit_expr(*c, scopes);
      visit_expr(*v, scopes);
    }
    if (e.otherwise) visit_expr(*e.otherwise, scopes);
    if (e.value) visit_expr(*e.value, scopes);
  }

  void resolve(const Expr& col, const std::vector<Scope>& scopes) {
    for (auto s = scopes.rbegin(); s != scopes.rend(); ++s) {
      const ScopeSource* hit = nullptr;
      int hits = 0;
      for (const auto& src : *s) {
        if (!col.qualifier.empty() && src.name != col.qualifier) continue;
        if (std::find(src.columns.begin(), src.columns.end(), col.name) != src.columns.end()) {
          hit = &src;
          ++hits;
        }
      }
      if (hits > 1) throw Error(ErrorCode::UnknownColumn, "column '" + col.name + "' is ambiguous");
      if (hit) {
        note(*hit, col.name);
        return;
      }
      if (!col.qualifier.empty() &&
          std::any_of(s->begin(), s->end(), [&](const ScopeSource& src) { return src.name == col.qualifier; }))
        throw Error(ErrorCode::UnknownColumn, "unknown column '" + col.qualifier + "." + col.name + "'");
    }
    if (col.qualifier.empty() && (col.name == "caller" || col.name == "role")) return;
    throw Error(ErrorCode::UnknownColumn,
                "unknown column '" + (col.qualifier.empty() ? "" : col.qualifier + ".") + col.name + "'");
  }

  void note(const ScopeSource& src, const std::string& column_name) {
    const auto* cls = src.table.empty() ? nullptr : dm_.find_class(src.table);
    if (!cls || !cls->find_attribute(column_name)) return;
    for (const auto& r : out_)
      if (const auto* a = std::get_if<AttrAccess>(&r))
        if (a->class_name == cls->name && a->attribute == column_name) return;
    out_.push_back(AttrAccess{cls->name, column_name, src.name});
  }

  const DataModel& dm_;
  std::vector<ResourceAccess> out_;
};

}  // namespace

std::vector<ResourceAccess> resource_accesses(const Query& q, const DataModel& dm) {
  return AccessCollector(dm).run(q);
}

}  // namespace fgac::sql
