#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include <sys/stat.h>

#include "fgac/error.hpp"
#include "fgac/optimizer.hpp"
#include "support.hpp"

using namespace fgac;
using namespace fgac::optimizer;
using fgac::testing::squash;
using fgac::testing::University;

namespace {

struct Case {
  const SecurityModel* s;
  int query;
  const std::vector<ContextFact>* facts;
};

Optimization run(const Case& c) {
  const auto& u = University::get();
  return optimize(*c.s, *u.q[c.query], u.registry, *c.facts, fgac::testing::solver(), 2);
}

std::string golden_step(const std::string& file, const SecurityModel& s) {
  return squash(fgac::testing::fill_golden(loaders::read_file(fgac::testing::fixture(file)), s, ""));
}

// Executable shell script standing in for a solver.
std::string fake_solver(const std::string& name, const std::string& body) {
  auto path = (std::filesystem::temp_directory_path() / ("fgac_fake_" + name + ".sh")).string();
  std::ofstream(path) << "#!/bin/sh\n" << body << "\n";
  chmod(path.c_str(), 0755);
  return path;
}

#define REQUIRE_SOLVER() \
  if (!fgac::testing::have_solver()) GTEST_SKIP() << "no SMT solver"

}  // namespace

TEST(Answer, Parsing) {
  EXPECT_EQ(parse_answer("unsat\n"), Verdict::Proven);
  EXPECT_EQ(parse_answer("\n  sat\n"), Verdict::Sat);
  EXPECT_EQ(parse_answer("unknown\n"), Verdict::Unknown);
  EXPECT_THROW(parse_answer("(error \"line 1\")\n"), Error);
  EXPECT_THROW(parse_answer(""), Error);
  EXPECT_EQ(to_string(Verdict::Proven), "unsat");
}

TEST(Planning, FactsApplyByKeywordsAndChecks) {
  const auto& u = University::get();
  auto sec = secquery::gen_sec_query(u.p2, *u.q[6], u.registry);
  auto proofs = plan_proofs(u.p2, sec, u.facts3);
  ASSERT_EQ(proofs.size(), 2u);
  EXPECT_EQ(proofs[0].facts, std::vector<std::size_t>{0});
  EXPECT_EQ(proofs[1].facts, std::vector<std::size_t>{1});
  // Without the explicit lists, a fact applies wherever its keywords are bound.
  auto loose = u.facts3;
  for (auto& f : loose) f.checks.clear();
  proofs = plan_proofs(u.p2, sec, loose);
  EXPECT_EQ(proofs[0].facts, std::vector<std::size_t>{0});
  EXPECT_EQ(proofs[1].facts, std::vector<std::size_t>{1});
  std::vector<ContextFact> by_id = {{"d", "caller.age > 0", "TRUE", {"TEMP5:Student:age"}}};
  proofs = plan_proofs(u.p2, sec, by_id);
  EXPECT_TRUE(proofs[0].facts.empty());
  EXPECT_EQ(proofs[1].facts, std::vector<std::size_t>{0});
}

TEST(Planning, BadFactsAreInvalidInput) {
  const auto& u = University::get();
  auto sec = secquery::gen_sec_query(u.p1, *u.q[4], u.registry);
  for (const auto& f : {ContextFact{"d", "caller.", "TRUE", {}}, ContextFact{"d", "caller.age = 'x'", "TRUE", {}}}) {
    try {
      plan_proofs(u.p1, sec, {f});
      ADD_FAILURE() << f.ocl;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::InvalidInput) << f.ocl;
    }
  }
}

TEST(Planning, RolesWithoutRuleAreSkipped) {
  const auto& u = University::get();
  auto s = make_security_model("Mixed", u.dm, "Lecturer", {"Lecturer", "Guest"},
                               {{"Lecturer", AttributeRes{"Student", "age"}, "true"}});
  auto sec = secquery::gen_sec_query(s, *u.q[4], {});
  auto proofs = plan_proofs(s, sec, {});
  ASSERT_EQ(proofs.size(), 1u);
  EXPECT_EQ(proofs[0].role, "Lecturer");
}

TEST(Proofs, VerdictMatrix) {
  REQUIRE_SOLVER();
  const auto& u = University::get();
  auto verdicts = [&](const SecurityModel& s, int q, const std::vector<ContextFact>& f) {
    std::vector<Verdict> out;
    for (const auto& p : run({&s, q, &f}).proofs) out.push_back(p.outcome.verdict);
    return out;
  };
  EXPECT_EQ(verdicts(u.p1, 4, u.facts1), std::vector<Verdict>{Verdict::Proven});
  EXPECT_EQ(verdicts(u.p2, 4, u.facts1), std::vector<Verdict>{Verdict::Sat});
  EXPECT_EQ(verdicts(u.p2, 5, u.facts2), std::vector<Verdict>{Verdict::Proven});
  EXPECT_EQ(verdicts(u.p1, 5, u.facts2), std::vector<Verdict>{Verdict::Sat});
  EXPECT_EQ(verdicts(u.p2, 6, u.facts3), (std::vector<Verdict>{Verdict::Proven, Verdict::Proven}));
  EXPECT_EQ(verdicts(u.p1, 6, u.facts3), (std::vector<Verdict>{Verdict::Sat, Verdict::Sat}));
}

TEST(Proofs, NoFactsProveNothingForCaseStudy) {
  REQUIRE_SOLVER();
  const auto& u = University::get();
  std::vector<ContextFact> none;
  for (const auto& p : run({&u.p2, 6, &none}).proofs) EXPECT_EQ(p.outcome.verdict, Verdict::Sat) << p.check_id;
}

TEST(Optimized, StepsMatchGoldens) {
  REQUIRE_SOLVER();
  const auto& u = University::get();
  auto c1 = run({&u.p1, 4, &u.facts1});
  EXPECT_EQ(squash(secquery::render_step(c1.optimized.steps.at(0))), golden_step("case1_optimized.sql", u.p1));
  auto c2 = run({&u.p2, 5, &u.facts2});
  EXPECT_EQ(squash(secquery::render_step(c2.optimized.steps.at(1))), golden_step("case2_optimized.sql", u.p2));
  auto c3 = run({&u.p2, 6, &u.facts3});
  EXPECT_EQ(squash(secquery::render_step(c3.optimized.steps.at(1))), golden_step("case3_optimized_temp2.sql", u.p2));
  EXPECT_EQ(squash(secquery::render_step(c3.optimized.steps.at(4))), golden_step("case3_optimized_temp5.sql", u.p2));
}

TEST(Optimized, NothingProvenLeavesProcedureUnchanged) {
  REQUIRE_SOLVER();
  const auto& u = University::get();
  auto o = run({&u.p1, 6, &u.facts3});
  EXPECT_EQ(secquery::render_procedure(o.optimized), secquery::render_procedure(o.secured.procedure));
  for (auto a : actions(o.secured, o.proofs)) EXPECT_EQ(a, Action::Kept);
}

TEST(Optimized, ActionsAndReport) {
  const auto& u = University::get();
  auto sec = secquery::gen_sec_query(u.p2, *u.q[6], u.registry);
  auto proofs = plan_proofs(u.p2, sec, u.facts3);
  proofs[0].outcome.verdict = Verdict::Proven;
  proofs[1].outcome.verdict = Verdict::Sat;
  EXPECT_EQ(actions(sec, proofs), (std::vector<Action>{Action::Removed, Action::Kept}));
  auto text = report(sec, proofs, u.facts3, false);
  EXPECT_EQ(text,
            "TEMP2:Enrolment\tEnrolment\tLecturer\tcaller is the lecturer in the considered records\tunsat\t-\tREMOVED\n"
            "TEMP5:Student:age\tStudent:age\tLecturer\tthe students considered are students of the caller\tsat\t-\tKEPT\n");
  auto proc = gen_optimized_proc(sec, proofs, u.facts3);
  EXPECT_TRUE(std::holds_alternative<secquery::GuardedStep>(proc.steps[1]));
  EXPECT_TRUE(std::holds_alternative<secquery::TempStep>(proc.steps[4]));
}

TEST(Optimized, SiblingCheckKeepsStepChecked) {
  const auto& u = University::get();
  auto q = sql::parse_select("SELECT age, email FROM Student");
  auto s = make_security_model("Two", u.dm, "Lecturer", {"Lecturer"},
                               {{"Lecturer", AttributeRes{"Student", "age"}, "true"},
                                {"Lecturer", AttributeRes{"Student", "email"}, "caller.students->includes(self)"}});
  auto sec = secquery::gen_sec_query(s, *q, {});
  auto proofs = plan_proofs(s, sec, {});
  ASSERT_EQ(proofs.size(), 2u);
  ASSERT_EQ(sec.plan.checks[0].step, sec.plan.checks[1].step);
  proofs[0].outcome.verdict = Verdict::Proven;
  proofs[1].outcome.verdict = Verdict::Sat;
  EXPECT_EQ(actions(sec, proofs), (std::vector<Action>{Action::Guarded, Action::Kept}));
  auto proc = gen_optimized_proc(sec, proofs, {});
  EXPECT_EQ(secquery::render_procedure(proc), secquery::render_procedure(sec.procedure));
}

TEST(Optimized, MultipleRolesAreOred) {
  const auto& u = University::get();
  auto s = make_security_model("Roles", u.dm, "Lecturer", {"A", "B"},
                               {{"A", AttributeRes{"Student", "age"}, "true"},
                                {"B", AttributeRes{"Student", "age"}, "true"}});
  auto sec = secquery::gen_sec_query(s, *u.q[4], {});
  std::vector<ContextFact> facts = {{"g", "caller = caller", "caller = 'x'", {}}};
  auto proofs = plan_proofs(s, sec, facts);
  ASSERT_EQ(proofs.size(), 2u);
  for (auto& p : proofs) p.outcome.verdict = Verdict::Proven;
  auto proc = gen_optimized_proc(sec, proofs, facts);
  const auto& g = std::get<secquery::GuardedStep>(proc.steps[0]);
  EXPECT_EQ(g.condition_text, "((role = 'A' AND (caller = 'x')) OR (role = 'B' AND (caller = 'x')))");
}

TEST(Optimized, ForeignProofIsInconsistent) {
  const auto& u = University::get();
  auto sec = secquery::gen_sec_query(u.p1, *u.q[4], u.registry);
  auto proofs = plan_proofs(u.p1, sec, u.facts1);
  proofs[0].check_id = "TEMP9:Student:age";
  try {
    gen_optimized_proc(sec, proofs, u.facts1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InconsistentChecks);
  }
}

TEST(Solver, TimeoutIsNotAProof) {
  const auto& u = University::get();
  SolverConfig slow{fake_solver("slow", "sleep 5; echo unsat"), std::chrono::milliseconds(200)};
  auto o = optimize(u.p1, *u.q[4], u.registry, u.facts1, slow);
  ASSERT_EQ(o.proofs.size(), 1u);
  EXPECT_EQ(o.proofs[0].outcome.verdict, Verdict::Timeout);
  EXPECT_LT(o.proofs[0].outcome.elapsed_ms, 3000);
  EXPECT_EQ(secquery::render_procedure(o.optimized), secquery::render_procedure(o.secured.procedure));
}

TEST(Solver, GarbageIsSolverError) {
  const auto& u = University::get();
  SolverConfig bad{fake_solver("garbage", "echo 'segmentation fault'"), std::chrono::milliseconds(5000)};
  auto o = optimize(u.p1, *u.q[4], u.registry, u.facts1, bad);
  EXPECT_EQ(o.proofs[0].outcome.verdict, Verdict::SolverError);
  EXPECT_EQ(actions(o.secured, o.proofs), std::vector<Action>{Action::Kept});
}

TEST(Solver, UnknownIsNotAProof) {
  const auto& u = University::get();
  SolverConfig unsure{fake_solver("unknown", "echo unknown"), std::chrono::milliseconds(5000)};
  auto o = optimize(u.p1, *u.q[4], u.registry, u.facts1, unsure);
  EXPECT_EQ(o.proofs[0].outcome.verdict, Verdict::Unknown);
}

TEST(Solver, MissingExecutable) {
  const auto& u = University::get();
  SolverConfig none{"/nonexistent/solver", std::chrono::milliseconds(1000)};
  try {
    optimize(u.p1, *u.q[4], u.registry, u.facts1, none);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SolverUnavailable);
  }
}
