#include <gtest/gtest.h>

#include "fgac/error.hpp"
#include "fgac/harness.hpp"
#include "support.hpp"

using namespace fgac;
using namespace fgac::harness;
using fgac::testing::University;

namespace {

const DataModel& dm() { return University::get().dm; }

Database two_lecturers() {
  return Database::from_scenario(dm(), loaders::load_scenario(fgac::testing::data_file("two_lecturers.json"), dm()));
}

ExecResult secured(const SecurityModel& s, int query, const Database& db, const std::string& caller,
                   ExecStats* stats = nullptr) {
  const auto& u = University::get();
  auto sec = secquery::gen_sec_query(s, *u.q[query], u.registry);
  return exec_procedure(db, sec.procedure, sec.functions, caller, "Lecturer", stats);
}

std::int64_t scalar(const ExecResult& r) {
  const auto& rows = std::get<Rows>(r);
  EXPECT_EQ(rows.rows.size(), 1u);
  return std::get<std::int64_t>(rows.rows.at(0).at(0));
}

}  // namespace

TEST(Harness, PlainQueries) {
  auto db = two_lecturers();
  const auto& u = University::get();
  EXPECT_EQ(scalar(exec_query(db, *u.q[4], {})), 2);
  EXPECT_EQ(scalar(exec_query(db, *u.q[5], {})), 3);
  auto q6 = exec_query(db, *u.q[6], {{"caller", Value{std::string("Huong")}}});
  EXPECT_EQ(std::get<Rows>(q6).rows.size(), 2u);
  auto q1 = std::get<Rows>(exec_query(db, *u.q[1], {}));
  ASSERT_EQ(q1.rows.size(), 1u);
  EXPECT_EQ(q1.columns, std::vector<std::string>{"email"});
}

TEST(Harness, ExpressionsFollowSqlNulls) {
  auto db = two_lecturers();
  auto eval = [&](const std::string& text) { return eval_expression(db, *sql::parse_expression(text), {}); };
  EXPECT_TRUE(fgac::testing::sql_true(eval("NULL IS NULL")));
  EXPECT_FALSE(fgac::testing::sql_true(eval("NULL = NULL")));
  EXPECT_TRUE(fgac::testing::sql_true(eval("(NOT (NULL = 1)) IS NULL")));
  EXPECT_TRUE(fgac::testing::sql_true(eval("(NULL = 1) OR TRUE")));
  EXPECT_TRUE(fgac::testing::sql_true(eval("(SELECT MAX(age) FROM Lecturer) = 45")));
  EXPECT_TRUE(fgac::testing::sql_true(eval("(SELECT COUNT(*) FROM Enrolment WHERE lecturers = 'Huong') = 2")));
  EXPECT_TRUE(fgac::testing::sql_true(eval("(SELECT MAX(age) FROM Student WHERE age > 100) IS NULL")));
}

TEST(Harness, ParametersShadowColumns) {
  auto db = two_lecturers();
  auto q = sql::parse_select("SELECT COUNT(*) FROM Enrolment WHERE lecturers = caller");
  EXPECT_EQ(scalar(exec_query(db, *q, {{"caller", Value{std::string("Manuel")}}})), 1);
}

TEST(Harness, SecuredQuery4) {
  auto db = two_lecturers();
  const auto& u = University::get();
  ExecStats stats;
  EXPECT_EQ(scalar(secured(u.p1, 4, db, "Huong", &stats)), 2);
  EXPECT_EQ(stats.total_auth_calls(), 3u);
  EXPECT_TRUE(std::holds_alternative<SecurityError>(secured(u.p1, 4, db, "Manuel")));
}

TEST(Harness, UnknownRoleIsDeniedAtRuntime) {
  auto db = two_lecturers();
  const auto& u = University::get();
  auto sec = secquery::gen_sec_query(u.p1, *u.q[4], u.registry);
  EXPECT_TRUE(std::holds_alternative<SecurityError>(exec_procedure(db, sec.procedure, sec.functions, "Huong", "Dean")));
}

TEST(Harness, ReferenceJudgmentMatchesProcedure) {
  const auto& u = University::get();
  fgac::testing::GridOptions o;
  o.max_lecturers = 2;
  o.max_students = 2;
  for (const auto& sc : fgac::testing::scenario_grid(o)) {
    auto db = Database::from_scenario(dm(), sc);
    for (const auto* s : {&u.p1, &u.p2})
      for (int q : {4, 5, 6})
        for (const auto& caller : sc.ids_of("Lecturer")) {
          bool ok = auth_query_ref(*s, {caller, "Lecturer"}, "Lecturer", *u.q[q], db);
          auto r = secured(*s, q, db, caller);
          ASSERT_EQ(!std::holds_alternative<SecurityError>(r), ok) << s->name << " q" << q << " " << caller;
          if (ok) {
            auto plain = exec_query(db, *u.q[q], {{"caller", Value{caller}}});
            EXPECT_TRUE(same_rows(std::get<Rows>(r), std::get<Rows>(plain)));
          }
        }
  }
}

TEST(Harness, LeakageQueriesUnderOwnEmailPolicy) {
  auto db = two_lecturers();
  const auto& u = University::get();
  // Huong may read her own email; Manuel may not.
  EXPECT_TRUE(std::holds_alternative<Rows>(secured(u.a, 1, db, "Huong")));
  EXPECT_TRUE(std::holds_alternative<SecurityError>(secured(u.a, 1, db, "Manuel")));
  // Reading the Enrolment rows of another lecturer is denied.
  EXPECT_TRUE(std::holds_alternative<SecurityError>(secured(u.a, 2, db, "Manuel")));
  EXPECT_TRUE(std::holds_alternative<SecurityError>(secured(u.a, 3, db, "Manuel")));
  EXPECT_TRUE(std::holds_alternative<SecurityError>(secured(u.a, 3, db, "Huong")));
}

TEST(Harness, SameRowsIsMultisetEquality) {
  Rows a{{"x"}, {{Value{std::int64_t{1}}}, {Value{std::int64_t{2}}}, {Value{std::int64_t{1}}}}};
  Rows b{{"x"}, {{Value{std::int64_t{2}}}, {Value{std::int64_t{1}}}, {Value{std::int64_t{1}}}}};
  Rows c{{"x"}, {{Value{std::int64_t{2}}}, {Value{std::int64_t{2}}}, {Value{std::int64_t{1}}}}};
  EXPECT_TRUE(same_rows(a, b));
  EXPECT_FALSE(same_rows(a, c));
}

TEST(Harness, ScriptErrors) {
  Database db;
  EXPECT_THROW(db.execute_script("INSERT INTO Nowhere VALUES (1);"), Error);
  EXPECT_THROW(db.execute_script("CREATE TABLE T (a int); CREATE TABLE T (a int);"), Error);
}

TEST(Harness, SqlErrorsAreReported) {
  auto db = two_lecturers();
  auto r = exec_query(db, *sql::parse_select("SELECT x FROM Course"), {});
  EXPECT_TRUE(std::holds_alternative<SqlError>(r));
}

// Perturbing data the analysis does not report must leave every result unchanged.
TEST(Harness, ResourceAccessesAreExhaustive) {
  const auto& u = University::get();
  fgac::testing::GridOptions o;
  o.max_lecturers = 3;
  o.max_students = 3;
  o.link_samples = 3;
  auto grid = fgac::testing::scenario_grid(o);
  std::vector<sql::QueryPtr> queries(u.q.begin() + 1, u.q.end());
  for (const char* extra : {"SELECT name FROM Student WHERE age > 18", "SELECT COUNT(*) FROM Lecturer WHERE email = 'L1@uni'",
                            "SELECT DISTINCT lecturers FROM Enrolment JOIN Student ON students = Student_id WHERE age < 20"})
    queries.push_back(sql::parse_select(extra));
  for (const auto& q : queries) {
    auto accesses = sql::resource_accesses(*q, dm());
    auto reported = [&](const std::string& cls, const std::string& attr) {
      return std::any_of(accesses.begin(), accesses.end(), [&](const sql::ResourceAccess& a) {
        const auto* x = std::get_if<sql::AttrAccess>(&a);
        return x && x->class_name == cls && x->attribute == attr;
      });
    };
    bool links_reported = std::any_of(accesses.begin(), accesses.end(), [](const sql::ResourceAccess& a) {
      return std::holds_alternative<sql::AssocAccess>(a);
    });
    for (const auto& sc : grid) {
      Params params{{"caller", Value{std::string("L1")}}};
      auto base = exec_query(Database::from_scenario(dm(), sc), *q, params);
      auto perturbed = sc;
      for (auto& [cls, objs] : perturbed.objects)
        for (auto& [id, rec] : objs)
          for (auto& [attr, v] : rec) {
            if (reported(cls, attr)) continue;
            if (attr == "age") v = Value{std::int64_t{99}};
            else v = Value{std::string("changed")};
          }
      if (!links_reported) {
        auto& links = perturbed.links["Enrolment"];
        std::set<Link> flipped;
        for (const auto& l : sc.ids_of("Lecturer"))
          for (const auto& s : sc.ids_of("Student"))
            if (!links.count({l, s})) flipped.emplace(l, s);
        links = flipped;
      }
      auto after = exec_query(Database::from_scenario(dm(), perturbed), *q, params);
      ASSERT_EQ(to_string(base), to_string(after)) << sql::render_sql(*q) << "\n" << scenario_to_inserts(dm(), sc);
    }
  }
}
