#pragma once

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <random>
#include <regex>
#include <string>
#include <vector>

#include <unistd.h>

#include "fgac/error.hpp"
#include "fgac/harness.hpp"
#include "fgac/loaders.hpp"
#include "fgac/optimizer.hpp"
#include "fgac/secquery.hpp"
#include "fgac/subprocess.hpp"

namespace fgac::testing {

inline std::string data_file(const std::string& name) { return std::string(FGAC_DATA_DIR) + "/" + name; }
inline std::string fixture(const std::string& name) { return std::string(FGAC_TEST_DATA_DIR) + "/" + name; }

inline std::string solver_path() {
  if (const char* env = std::getenv("FGAC_SOLVER")) return env;
  return FGAC_TEST_SOLVER;
}

inline optimizer::SolverConfig solver() {
  optimizer::SolverConfig c;
  c.path = solver_path();
  c.timeout = std::chrono::milliseconds(10000);
  return c;
}

inline bool have_solver() {
  static const bool found = [] {
    try {
      run_process({solver_path(), "-version"}, std::chrono::seconds(5));
      return true;
    } catch (const Error&) {
      return false;
    }
  }();
  return found;
}

/// Solves a theory through a temporary script file.
inline optimizer::Verdict solve(const msfol::Theory& t) {
  char path[] = "/tmp/fgac_test_XXXXXX.smt2";
  int fd = mkstemps(path, 5);
  if (fd < 0) throw Error(ErrorCode::InvalidInput, "cannot create a temporary file");
  close(fd);
  {
    std::ofstream(path) << msfol::emit_smtlib(t);
  }
  auto outcome = optimizer::prove_script(path, solver());
  std::remove(path);
  return outcome.verdict;
}

// The case-study inputs, loaded once. Policies point into `dm`, so the
// instance never moves.
struct University {
  DataModel dm;
  SecurityModel a, p1, p2;
  ocl2sql::Registry registry;
  std::vector<optimizer::ContextFact> facts1, facts2, facts3;
  std::vector<sql::QueryPtr> q;  // q[1]..q[6]

  static const University& get() {
    static const University u;
    return u;
  }

 private:
  University() : dm(loaders::load_model(data_file("model.json"))) {
    a = loaders::load_policy(data_file("secvgu_a.json"), dm);
    p1 = loaders::load_policy(data_file("secvgu_1.json"), dm);
    p2 = loaders::load_policy(data_file("secvgu_2.json"), dm);
    registry = loaders::load_registry(data_file("registry.json"));
    facts1 = loaders::load_facts(data_file("facts_case1.json"));
    facts2 = loaders::load_facts(data_file("facts_case2.json"));
    facts3 = loaders::load_facts(data_file("facts_case3.json"));
    q.resize(7);
    for (int i = 1; i <= 6; ++i)
      q[i] = sql::parse_select(loaders::read_file(data_file("q" + std::to_string(i) + ".sql")));
  }
};

/// Collapses whitespace runs and the blanks just inside parentheses.
inline std::string squash(const std::string& text) {
  std::string s = std::regex_replace(text, std::regex(R"(\s+)"), " ");
  s = std::regex_replace(s, std::regex(R"(\(\s)"), "(");
  s = std::regex_replace(s, std::regex(R"(\s\))"), ")");
  auto b = s.find_first_not_of(' ');
  auto e = s.find_last_not_of(' ');
  return b == std::string::npos ? "" : s.substr(b, e - b + 1);
}

/// SMT-LIB text without comments, logic/check-sat lines, and with the
/// invalidClassifier spelling normalized.
inline std::string smt_body(const std::string& text) {
  std::string s = std::regex_replace(text, std::regex(R"(;[^\n]*)"), "");
  s = std::regex_replace(s, std::regex(R"(\(set-logic [A-Za-z_]+\))"), "");
  s = std::regex_replace(s, std::regex(R"(\(check-sat\))"), "");
  s = std::regex_replace(s, std::regex("invalidClassifier"), "invalClassifier");
  return squash(s);
}

struct GridOptions {
  int max_lecturers = 4;
  int max_students = 4;
  int link_samples = 6;  // random link subsets per size once exhaustive enumeration is too large
  bool null_ages = false;
  unsigned seed = 7;
};

inline Scenario make_scenario(const std::vector<std::optional<int>>& lecturer_ages,
                              const std::vector<std::optional<int>>& student_ages, unsigned long long link_mask) {
  Scenario sc;
  auto value = [](const std::optional<int>& a) { return a ? Value{std::int64_t{*a}} : Value{NullValue{}}; };
  auto& ls = sc.objects["Lecturer"];
  for (std::size_t i = 0; i < lecturer_ages.size(); ++i) {
    auto id = "L" + std::to_string(i + 1);
    ls[id] = {{"age", value(lecturer_ages[i])}, {"email", Value{id + "@uni"}}, {"name", Value{id}}};
  }
  auto& ss = sc.objects["Student"];
  for (std::size_t j = 0; j < student_ages.size(); ++j) {
    auto id = "S" + std::to_string(j + 1);
    ss[id] = {{"age", value(student_ages[j])}, {"name", Value{id}}, {"email", Value{id + "@uni"}}};
  }
  auto& links = sc.links["Enrolment"];
  for (std::size_t i = 0; i < lecturer_ages.size(); ++i)
    for (std::size_t j = 0; j < student_ages.size(); ++j)
      if (link_mask >> (i * student_ages.size() + j) & 1ULL)
        links.emplace("L" + std::to_string(i + 1), "S" + std::to_string(j + 1));
  return sc;
}

/// Scenarios with 1..max lecturers, 0..max students and link subsets: all of
/// them while there are at most 2^6 subsets, sampled beyond that.
inline std::vector<Scenario> scenario_grid(const GridOptions& o) {
  std::mt19937 rng(o.seed);
  std::vector<std::optional<int>> ages = {17, 18, 19, 25, 40, 40, 52};
  if (o.null_ages) ages.push_back(std::nullopt);
  auto pick = [&]() { return ages[std::uniform_int_distribution<std::size_t>(0, ages.size() - 1)(rng)]; };
  std::vector<Scenario> out;
  for (int nl = 1; nl <= o.max_lecturers; ++nl)
    for (int ns = 0; ns <= o.max_students; ++ns) {
      std::vector<std::optional<int>> la(nl), sa(ns);
      for (auto& a : la) a = pick();
      for (auto& a : sa) a = pick();
      int cells = nl * ns;
      std::vector<unsigned long long> masks;
      if (cells <= 6) {
        for (unsigned long long m = 0; m < (1ULL << cells); ++m) masks.push_back(m);
      } else {
        unsigned long long full = (1ULL << cells) - 1;
        masks = {0, full};
        std::uniform_int_distribution<unsigned long long> d(0, full);
        for (int k = 0; k < o.link_samples; ++k) masks.push_back(d(rng));
      }
      for (auto m : masks) out.push_back(make_scenario(la, sa, m));
    }
  return out;
}

inline harness::Params params_of(const std::map<std::string, std::string>& binding) {
  harness::Params p;
  for (const auto& [k, v] : binding) p[k] = Value{v};
  return p;
}

/// True iff a harness value is SQL TRUE.
inline bool sql_true(const harness::ExecResult& r) {
  const auto* rows = std::get_if<harness::Rows>(&r);
  if (!rows || rows->rows.size() != 1 || rows->rows[0].size() != 1) return false;
  const auto* i = std::get_if<std::int64_t>(&rows->rows[0][0]);
  return i && *i != 0;
}

/// Golden text with the generated names substituted for its placeholders.
inline std::string fill_golden(std::string text, const SecurityModel& s, const std::string& proc) {
  auto replace = [&](const std::string& from, const std::string& to) {
    for (auto p = text.find(from); p != std::string::npos; p = text.find(from, p + to.size()))
      text.replace(p, from.size(), to);
  };
  replace("{PROC}", proc);
  replace("{AUTH:Student:age}", secquery::auth_func_name(s, AttributeRes{"Student", "age"}));
  replace("{AUTH:Enrolment}", secquery::auth_func_name(s, AssociationRes{"Enrolment"}));
  return text;
}

}  // namespace fgac::testing
