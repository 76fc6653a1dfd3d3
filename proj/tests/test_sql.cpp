#include <gtest/gtest.h>

#include <random>

#include "fgac/error.hpp"
#include "fgac/sql.hpp"
#include "support.hpp"

using namespace fgac;
using namespace fgac::sql;
using fgac::testing::University;

namespace {

const DataModel& dm() { return University::get().dm; }

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error";
  return ErrorCode::InvalidInput;
}

}  // namespace

TEST(SqlParse, CaseStudyQueriesRoundTrip) {
  const auto& u = University::get();
  for (int i = 1; i <= 6; ++i) {
    auto text = render_sql(*u.q[i]);
    auto again = parse_select(text);
    EXPECT_TRUE(same_structure(*u.q[i], *again)) << "query " << i << ": " << text;
  }
}

TEST(SqlParse, Shapes) {
  const auto& u = University::get();
  EXPECT_TRUE(u.q[2]->distinct);
  ASSERT_EQ(u.q[6]->joins.size(), 1u);
  EXPECT_EQ(u.q[6]->joins[0].item.alias, "my_enrolments");
  EXPECT_TRUE(u.q[6]->joins[0].item.subquery);
  EXPECT_EQ(u.q[4]->items[0].expr->kind, Expr::Kind::Call);
  EXPECT_EQ(u.q[4]->items[0].expr->args[0]->kind, Expr::Kind::Star);
}

TEST(SqlParse, KeywordsAreCaseInsensitive) {
  auto a = parse_select("select COUNT(*) from Student where age > 18;");
  EXPECT_TRUE(same_structure(*a, *University::get().q[4]));
}

TEST(SqlParse, Expressions) {
  auto e = parse_expression("a = 1 OR NOT b IS NULL AND c <> 'x''y'");
  ASSERT_EQ(e->kind, Expr::Kind::Binary);
  EXPECT_EQ(e->op, "OR");
  auto again = parse_expression(render_expr(*e));
  EXPECT_TRUE(same_structure(*e, *again)) << render_expr(*e);
  auto c = parse_expression("CASE WHEN x = 1 THEN 2 ELSE 3 END");
  EXPECT_EQ(c->kind, Expr::Kind::Case);
  auto ex = parse_expression("EXISTS (SELECT 1 FROM Enrolment e WHERE e.lecturers = caller)");
  EXPECT_EQ(ex->kind, Expr::Kind::Exists);
}

TEST(SqlParse, UnsupportedFeatures) {
  for (const char* text : {"SELECT age FROM Student ORDER BY age", "SELECT age FROM Student GROUP BY age",
                           "SELECT age FROM Student LEFT JOIN Lecturer ON 1 = 1",
                           "SELECT age FROM Student WHERE age IN (1, 2)", "SELECT age FROM Student UNION SELECT age FROM Lecturer",
                           "SELECT age FROM Student LIMIT 1", "SELECT COUNT(DISTINCT age) FROM Student"})
    EXPECT_EQ(code_of([&] { parse_select(text); }), ErrorCode::UnsupportedFeature) << text;
}

TEST(SqlParse, SyntaxErrors) {
  for (const char* text : {"SELECT", "SELECT age FROM", "SELECT age FROM Student WHERE", "SELECT (age FROM Student",
                           "SELECT age FROM Student; SELECT 1"})
    EXPECT_EQ(code_of([&] { parse_select(text); }), ErrorCode::SyntaxError) << text;
}

TEST(SqlChecks, StripAndDetect) {
  auto f = checked("auth_x", {column("caller")}, column("age"), CheckStyle::WhenOne, "Student:age");
  auto e = binary("=", f, int_lit(3));
  EXPECT_TRUE(has_checks(*e));
  auto s = strip_checks(e);
  EXPECT_FALSE(has_checks(*s));
  EXPECT_EQ(render_expr(*s), "age = 3");
}

TEST(SqlColumns, OutputColumns) {
  auto lookup = [](std::string_view t) { return table_columns(University::get().dm, t); };
  const auto& u = University::get();
  EXPECT_EQ(output_columns(*u.q[1], lookup), std::vector<std::string>{"email"});
  auto star = parse_select("SELECT * FROM Enrolment");
  EXPECT_EQ(output_columns(*star, lookup), (std::vector<std::string>{"lecturers", "students"}));
  auto aliased = parse_select("SELECT age AS a FROM Student");
  EXPECT_EQ(output_columns(*aliased, lookup), std::vector<std::string>{"a"});
  EXPECT_EQ(table_columns(dm(), "Student"), (std::vector<std::string>{"Student_id", "age", "name", "email"}));
  EXPECT_FALSE(table_columns(dm(), "Course"));
}

TEST(SqlAccess, CaseStudyQueries) {
  const auto& u = University::get();
  auto q4 = resource_accesses(*u.q[4], dm());
  ASSERT_EQ(q4.size(), 1u);
  EXPECT_EQ(std::get<AttrAccess>(q4[0]).attribute, "age");
  auto q5 = resource_accesses(*u.q[5], dm());
  ASSERT_EQ(q5.size(), 1u);
  EXPECT_EQ(std::get<AssocAccess>(q5[0]).association, "Enrolment");
  auto q6 = resource_accesses(*u.q[6], dm());
  ASSERT_EQ(q6.size(), 2u);
  EXPECT_TRUE(std::holds_alternative<AssocAccess>(q6[0]));
  EXPECT_EQ(std::get<AttrAccess>(q6[1]).class_name, "Student");
  auto q1 = resource_accesses(*u.q[1], dm());
  ASSERT_EQ(q1.size(), 1u);
  EXPECT_EQ(std::get<AttrAccess>(q1[0]).attribute, "email");
}

TEST(SqlAccess, IdColumnsAreNotProtected) {
  auto q = parse_select("SELECT Student_id FROM Student");
  EXPECT_TRUE(resource_accesses(*q, dm()).empty());
}

TEST(SqlAccess, UnknownNames) {
  EXPECT_EQ(code_of([] { resource_accesses(*parse_select("SELECT x FROM Course"), dm()); }), ErrorCode::UnknownTable);
  EXPECT_EQ(code_of([] { resource_accesses(*parse_select("SELECT salary FROM Student"), dm()); }),
            ErrorCode::UnknownColumn);
  EXPECT_EQ(code_of([] { resource_accesses(*parse_select("SELECT age FROM Student, Lecturer"), dm()); }),
            ErrorCode::UnknownColumn);
}

TEST(SqlScript, ParsesGeneratedDdlAndInserts) {
  auto sc = fgac::testing::make_scenario({40}, {20, std::nullopt}, 1);
  auto stmts = parse_script(sql_schema(dm()) + scenario_to_inserts(dm(), sc));
  std::size_t creates = 0, inserts = 0;
  for (const auto& s : stmts) (std::holds_alternative<CreateTable>(s) ? creates : inserts)++;
  EXPECT_EQ(creates, 3u);
  EXPECT_EQ(inserts, 4u);
}

namespace {

// Random ASTs inside the supported subset.
class QueryGen {
 public:
  explicit QueryGen(unsigned seed) : rng_(seed) {}

  QueryPtr query(int depth) {
    auto q = std::make_shared<Query>();
    q->distinct = roll(4) == 0;
    int items = 1 + roll(3);
    if (roll(5) == 0) {
      q->items.push_back({call("COUNT", {star()}), roll(2) ? "n" : ""});
    } else {
      for (int i = 0; i < items; ++i) q->items.push_back({scalar(depth), roll(3) == 0 ? "c" + std::to_string(i) : ""});
    }
    q->from.push_back(from_item(depth));
    if (roll(3) == 0) q->from.push_back(from_item(depth));
    int joins = roll(3);
    for (int i = 0; i < joins; ++i) q->joins.push_back({from_item(depth), condition(depth)});
    if (roll(3)) q->where = condition(depth);
    return q;
  }

 private:
  int roll(int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng_); }

  FromItem from_item(int depth) {
    FromItem f;
    if (depth > 0 && roll(3) == 0) {
      f.subquery = query(depth - 1);
      f.alias = "s" + std::to_string(roll(9));
    } else {
      static const char* tables[] = {"Lecturer", "Student", "Enrolment", "TEMP1"};
      f.table = tables[roll(4)];
      if (roll(2)) f.alias = "t" + std::to_string(roll(9));
    }
    return f;
  }

  ExprPtr scalar(int depth) {
    switch (roll(depth > 0 ? 7 : 5)) {
      case 0: return int_lit(roll(100));
      case 1: return string_lit(roll(2) ? "O'Neil" : "x");
      case 2: return null_lit();
      case 3: return column(roll(2) ? "age" : "caller", roll(2) ? "" : "t1");
      case 4: return column("email");
      case 5: {
        auto q = query(depth - 1);
        auto e = std::make_shared<Expr>(Expr{Expr::Kind::Subquery});
        e->query = q;
        return e;
      }
      default: {
        auto e = std::make_shared<Expr>(Expr{Expr::Kind::Case});
        if (roll(2)) e->operand = scalar(depth - 1);
        int whens = 1 + roll(2);
        for (int i = 0; i < whens; ++i)
          e->whens.emplace_back(e->operand ? scalar(depth - 1) : condition(depth - 1), scalar(depth - 1));
        if (roll(2)) e->otherwise = scalar(depth - 1);
        return e;
      }
    }
  }

  ExprPtr condition(int depth) {
    static const char* cmp[] = {"=", "<>", "<", ">", "<=", ">="};
    switch (roll(depth > 0 ? 7 : 3)) {
      case 0: {
        auto lhs = scalar(depth);
        return binary(cmp[roll(6)], lhs, scalar(depth));
      }
      case 1: return bool_lit(roll(2) == 0);
      case 2: {
        auto e = std::make_shared<Expr>(Expr{Expr::Kind::IsNull});
        e->args = {scalar(depth)};
        e->flag = roll(2);
        return e;
      }
      case 3: return logical_not(condition(depth - 1));
      case 4: {
        auto e = std::make_shared<Expr>(Expr{Expr::Kind::Exists});
        e->query = query(depth - 1);
        return e;
      }
      default: {
        auto lhs = condition(depth - 1);
        return binary(roll(2) ? "AND" : "OR", lhs, condition(depth - 1));
      }
    }
  }

  std::mt19937 rng_;
};

}  // namespace

TEST(SqlParse, RandomQueriesRoundTrip) {
  QueryGen gen(17);
  for (int i = 0; i < 500; ++i) {
    auto q = gen.query(2);
    auto text = render_sql(*q);
    QueryPtr again;
    ASSERT_NO_THROW(again = parse_select(text)) << text;
    ASSERT_TRUE(same_structure(*q, *again)) << text << "\n" << render_sql(*again);
  }
}
