#pragma once

#include <map>
#include <string>
#include <variant>
#include <vector>

#include "fgac/ocl2sql.hpp"
#include "fgac/policy.hpp"
#include "fgac/sql.hpp"

namespace fgac::secquery {

/// CREATE TEMPORARY TABLE <name> AS (<body>);
struct TempStep {
  std::string name;
  sql::QueryPtr body;
};

/// IF (<condition>) THEN <unchecked> ELSE <checked> END IF; both branches
/// create the same temporary table.
struct GuardedStep {
  std::string name;
  std::string condition_text;
  sql::ExprPtr condition;
  sql::QueryPtr unchecked;
  sql::QueryPtr checked;
};

using Step = std::variant<TempStep, GuardedStep>;

/// One protected resource checked inside one step.
struct CheckSite {
  std::size_t step = 0;  // index into StagingPlan::steps
  Resource resource;
  std::string function;

  std::string id() const;  // "TEMP2:Enrolment"
};

struct StagingPlan {
  std::vector<TempStep> steps;
  sql::QueryPtr epilogue;  // SELECT ... FROM TEMPn
  std::vector<CheckSite> checks;
  std::map<std::string, Resource> functions;  // AuthFunc name -> resource
};

struct AuthBranch {
  std::string role;
  std::string sql;
  ocl2sql::Origin origin = ocl2sql::Origin::Generated;
};

struct AuthFuncDef {
  std::string name;
  Resource resource;
  std::vector<std::string> keywords;  // parameters after caller and role
  std::vector<AuthBranch> branches;   // roles without a rule are absent
  sql::ExprPtr body;                  // CASE WHEN role = ... THEN (...) ... ELSE FALSE END
};

struct StoredProcedure {
  std::string name;
  std::vector<Step> steps;
  sql::QueryPtr epilogue;
};

struct SecQuery {
  StoredProcedure procedure;
  std::vector<AuthFuncDef> functions;
  StagingPlan plan;
};

std::string sanitize(const std::string& name);
std::string auth_func_name(const SecurityModel& s, const Resource& res);
std::string procedure_name(const SecurityModel& s, const sql::Query& q);

/// Stages `q` into checked temporary-table steps. Throws UnsupportedQuery,
/// UnknownTable, UnknownColumn.
StagingPlan plan_query(const SecurityModel& s, const sql::Query& q);

AuthFuncDef gen_auth_func(const SecurityModel& s, const Resource& res, const ocl2sql::Registry& registry);

SecQuery gen_sec_query(const SecurityModel& s, const sql::Query& q, const ocl2sql::Registry& registry);

std::string render_step(const Step& step);
std::string render_procedure(const StoredProcedure& proc);
std::string render_auth_func(const AuthFuncDef& f);
std::string render_throw_error();

/// Complete script: helper, functions, procedure, wrapped in DELIMITER
/// directives for the mysql client.
std::string render_script(const StoredProcedure& proc, const std::vector<AuthFuncDef>& functions);

}  // namespace fgac::secquery
