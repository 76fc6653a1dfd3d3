#include <gtest/gtest.h>

#include "fgac/error.hpp"
#include "fgac/ocl.hpp"
#include "support.hpp"

using namespace fgac::ocl;
using fgac::DataModel;
using fgac::Error;
using fgac::ErrorCode;
using fgac::NullValue;
using fgac::Scenario;
namespace loaders = fgac::loaders;
using fgac::testing::University;

namespace {

const DataModel& dm() { return University::get().dm; }

const KeywordTypes kLecturerSelf = {{"caller", "Lecturer"}, {"self", "Lecturer"}};
const KeywordTypes kStudentSelf = {{"caller", "Lecturer"}, {"self", "Student"}};
const KeywordTypes kEnrolment = {{"caller", "Lecturer"}, {"lecturers", "Lecturer"}, {"students", "Student"}};

Scenario two_lecturers() { return loaders::load_scenario(fgac::testing::data_file("two_lecturers.json"), dm()); }

Value eval(const std::string& text, const KeywordTypes& kw, const Scenario& sc, const Binding& b) {
  return eval_ocl(dm(), sc, *parse_ocl(text, dm(), kw), b);
}

ObjectRef L(const std::string& id) { return {id, "Lecturer"}; }
ObjectRef S(const std::string& id) { return {id, "Student"}; }

}  // namespace

TEST(OclParse, PrecedenceAndAssociativity) {
  auto e = parse_syntax("a = b or c = d and not e = f");
  ASSERT_EQ(e->kind, Expr::Kind::Or);
  EXPECT_EQ(e->args[1]->kind, Expr::Kind::And);
  // not binds tighter than the comparison.
  ASSERT_EQ(e->args[1]->args[1]->kind, Expr::Kind::Compare);
  EXPECT_EQ(e->args[1]->args[1]->args[0]->kind, Expr::Kind::Not);
}

TEST(OclParse, IteratorBindsVariables) {
  auto e = parse_syntax("Lecturer.allInstances()->select(l|l.age > caller.age)->isEmpty()");
  ASSERT_EQ(e->kind, Expr::Kind::IsEmpty);
  const auto& sel = *e->args[0];
  ASSERT_EQ(sel.kind, Expr::Kind::Select);
  EXPECT_EQ(sel.name, "l");
  const auto& cmp = *sel.args[1];
  EXPECT_EQ(cmp.args[0]->args[0]->kind, Expr::Kind::Variable);
  EXPECT_EQ(cmp.args[1]->args[0]->kind, Expr::Kind::Keyword);
}

TEST(OclParse, RenderRoundTrip) {
  for (const char* text : {
           "Lecturer.allInstances()->select(l|l.age > caller.age)->isEmpty()",
           "caller = lecturers or students.lecturers->includes(caller)",
           "caller.students->exists(s|s = self)",
           "not (caller.age <> 3) and caller.email = 'a''b'",
           "Student.allInstances()->forAll(s|s.lecturers->includes(caller))",
           "caller.age = null",
           "true or false",
       }) {
    auto e = parse_syntax(text);
    auto again = parse_syntax(render_ocl(*e));
    EXPECT_TRUE(same_structure(*e, *again)) << text << " -> " << render_ocl(*e);
  }
}

TEST(OclParse, SyntaxErrorsCarryPositions) {
  try {
    parse_syntax("caller.age > ");
    FAIL();
  } catch (const fgac::SyntaxError& e) {
    EXPECT_GE(e.position(), 11u);
  }
  EXPECT_THROW(parse_syntax("caller.age # 3"), fgac::SyntaxError);
  EXPECT_THROW(parse_syntax("'open"), fgac::SyntaxError);
  EXPECT_THROW(parse_syntax("x->select(y|"), fgac::SyntaxError);
}

TEST(OclType, ResolvesFeatures) {
  auto e = parse_ocl("caller.students->exists(s|s = self)", dm(), kStudentSelf);
  EXPECT_EQ(e->type, Type::boolean());
  EXPECT_EQ(e->args[0]->kind, Expr::Kind::Navigation);
  EXPECT_EQ(e->args[0]->type, Type::collection("Student"));
  auto age = parse_ocl("caller.age", dm(), kLecturerSelf);
  EXPECT_EQ(age->kind, Expr::Kind::Attribute);
  EXPECT_EQ(age->type, Type::integer());
}

TEST(OclType, Rejections) {
  auto type_error = [](const std::string& text, const KeywordTypes& kw) {
    try {
      parse_ocl(text, dm(), kw);
    } catch (const fgac::TypeError& e) {
      return true;
    }
    return false;
  };
  EXPECT_TRUE(type_error("caller.age = 'x'", kLecturerSelf));
  EXPECT_TRUE(type_error("caller.email > 'x'", kLecturerSelf));
  EXPECT_TRUE(type_error("caller = self", kStudentSelf));
  EXPECT_TRUE(type_error("caller.salary = 3", kLecturerSelf));
  EXPECT_TRUE(type_error("unknown = caller", kLecturerSelf));
  EXPECT_TRUE(type_error("caller.students->includes(caller)", kLecturerSelf));
  EXPECT_TRUE(type_error("caller.age", kLecturerSelf) == false);
  EXPECT_TRUE(type_error("caller.students->exists(s|s.age)", kLecturerSelf));
  EXPECT_TRUE(type_error("caller.students->exists(caller|true)", kLecturerSelf));
  EXPECT_TRUE(type_error("caller.students->exists(s|s.lecturers->exists(s|true))", kLecturerSelf));
  EXPECT_TRUE(type_error("caller.students = caller.students", kLecturerSelf));
  EXPECT_TRUE(type_error("Nobody.allInstances()->isEmpty()", kLecturerSelf));
}

TEST(OclEval, CaseStudyConstraints) {
  auto sc = two_lecturers();
  auto oldest = "Lecturer.allInstances()->select(l|l.age > caller.age)->isEmpty()";
  EXPECT_EQ(eval(oldest, kLecturerSelf, sc, {{"caller", L("Huong")}, {"self", L("Huong")}}), Value{BoolVal{true}});
  EXPECT_EQ(eval(oldest, kLecturerSelf, sc, {{"caller", L("Manuel")}, {"self", L("Huong")}}), Value{BoolVal{false}});
  auto mine = "caller.students->exists(s|s = self)";
  EXPECT_TRUE(is_true(eval(mine, kStudentSelf, sc, {{"caller", L("Huong")}, {"self", S("Nam")}})));
  EXPECT_FALSE(is_true(eval(mine, kStudentSelf, sc, {{"caller", L("Manuel")}, {"self", S("Nam")}})));
  auto enrol = "caller = lecturers or students.lecturers->includes(caller)";
  Binding b = {{"caller", L("Manuel")}, {"lecturers", L("Huong")}, {"students", S("Thanh")}};
  EXPECT_TRUE(is_true(eval(enrol, kEnrolment, sc, b)));
  b["students"] = S("Nam");
  EXPECT_FALSE(is_true(eval(enrol, kEnrolment, sc, b)));
}

TEST(OclEval, NullAndInvalid) {
  auto sc = two_lecturers();
  sc.objects["Lecturer"]["Manuel"]["age"] = fgac::Value{NullValue{}};
  Binding b = {{"caller", L("Manuel")}, {"self", L("Huong")}};
  EXPECT_EQ(eval("caller.age = null", kLecturerSelf, sc, b), Value{BoolVal{true}});
  EXPECT_EQ(eval("caller.age <> self.age", kLecturerSelf, sc, b), Value{BoolVal{true}});
  EXPECT_EQ(eval("caller.age > 3", kLecturerSelf, sc, b), Value{InvalidVal{}});
  EXPECT_EQ(eval("caller.age > 3 or true", kLecturerSelf, sc, b), Value{BoolVal{true}});
  EXPECT_EQ(eval("true or caller.age > 3", kLecturerSelf, sc, b), Value{BoolVal{true}});
  EXPECT_EQ(eval("caller.age > 3 and false", kLecturerSelf, sc, b), Value{BoolVal{false}});
  EXPECT_EQ(eval("caller.age > 3 and true", kLecturerSelf, sc, b), Value{InvalidVal{}});
  EXPECT_EQ(eval("not (caller.age > 3)", kLecturerSelf, sc, b), Value{InvalidVal{}});
  // The select drops the element whose comparison is invalid; the quantifier does not.
  EXPECT_EQ(eval("Lecturer.allInstances()->select(l|l.age > 40)->isEmpty()", kLecturerSelf, sc, b),
            Value{BoolVal{false}});
  EXPECT_EQ(eval("Lecturer.allInstances()->forAll(l|l.age > 50)", kLecturerSelf, sc, b), Value{BoolVal{false}});
  EXPECT_EQ(eval("Lecturer.allInstances()->forAll(l|l.age > 40)", kLecturerSelf, sc, b), Value{InvalidVal{}});
  EXPECT_EQ(eval("Lecturer.allInstances()->forAll(l|l.age > 10)", kLecturerSelf, sc, b), Value{InvalidVal{}});
  EXPECT_EQ(eval("Lecturer.allInstances()->exists(l|l.age > 40)", kLecturerSelf, sc, b), Value{BoolVal{true}});
}

TEST(OclEval, DanglingObjectIsInvalid) {
  auto sc = two_lecturers();
  Binding b = {{"caller", L("Ghost")}, {"self", L("Huong")}};
  EXPECT_EQ(eval("caller.age > 3", kLecturerSelf, sc, b), Value{InvalidVal{}});
  EXPECT_EQ(eval("caller.students->isEmpty()", kLecturerSelf, sc, b), Value{InvalidVal{}});
  EXPECT_EQ(eval("self.students->includes(null)", kLecturerSelf, sc, b), Value{BoolVal{false}});
}

TEST(OclEval, UnboundKeyword) {
  auto sc = two_lecturers();
  try {
    eval("caller = self", kLecturerSelf, sc, {{"caller", L("Huong")}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnboundKeyword);
  }
}

TEST(OclEval, EmptyCollections) {
  auto sc = two_lecturers();
  sc.links["Enrolment"].clear();
  Binding b = {{"caller", L("Huong")}, {"self", L("Huong")}};
  EXPECT_TRUE(is_true(eval("caller.students->isEmpty()", kLecturerSelf, sc, b)));
  EXPECT_TRUE(is_true(eval("caller.students->forAll(s|s.age > 100)", kLecturerSelf, sc, b)));
  EXPECT_FALSE(is_true(eval("caller.students->exists(s|true)", kLecturerSelf, sc, b)));
}

TEST(OclUtil, NormalizeAndSubstitute) {
  auto a = normalize_variables(parse_syntax("caller.students->exists(s|s = self)"));
  auto b = normalize_variables(parse_syntax("caller.students->exists(t|t = self)"));
  EXPECT_TRUE(same_structure(*a, *b));
  auto e = parse_ocl("caller = self", dm(), kLecturerSelf);
  auto g = substitute(e, {{"caller", L("Huong")}, {"self", L("Huong")}});
  EXPECT_TRUE(free_keywords(*g).empty());
  EXPECT_EQ(free_keywords(*e), (std::set<std::string>{"caller", "self"}));
  EXPECT_EQ(g->args[0]->kind, Expr::Kind::ObjectLit);
}

TEST(OclUtil, CollectLiterals) {
  std::set<std::int64_t> ints;
  std::set<std::string> strings;
  collect_literals(*parse_syntax("caller.age > 3 and caller.email = 'x' or caller.age = 3"), ints, strings);
  EXPECT_EQ(ints, (std::set<std::int64_t>{3}));
  EXPECT_EQ(strings, (std::set<std::string>{"x"}));
}

// Evaluating under a binding equals evaluating the substituted ground constraint.
TEST(OclUtil, SubstitutionLemma) {
  fgac::testing::GridOptions o;
  o.max_lecturers = 2;
  o.max_students = 2;
  o.null_ages = true;
  auto grid = fgac::testing::scenario_grid(o);
  for (const char* text : {"Lecturer.allInstances()->select(l|l.age > caller.age)->isEmpty()",
                           "caller.students->exists(s|s = self)", "caller.students->includes(self)",
                           "self.lecturers->forAll(l|l = caller or l.age < self.age)",
                           "not (caller.age = self.age) and self.email <> null"}) {
    auto e = parse_ocl(text, dm(), kStudentSelf);
    for (const auto& sc : grid)
      for (const auto& c : sc.ids_of("Lecturer"))
        for (const auto& s : sc.ids_of("Student")) {
          Binding b{{"caller", L(c)}, {"self", S(s)}};
          EXPECT_EQ(eval_ocl(dm(), sc, *substitute(e, b), {}), eval_ocl(dm(), sc, *e, b)) << text;
        }
  }
}
