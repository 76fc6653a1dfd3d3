#pragma once

#include <map>
#include <string>
#include <variant>
#include <vector>

#include "fgac/model.hpp"
#include "fgac/policy.hpp"
#include "fgac/secquery.hpp"
#include "fgac/sql.hpp"

namespace fgac::harness {

using Row = std::vector<Value>;

struct Table {
  std::vector<std::string> columns;
  std::vector<Row> rows;
};

class Database {
 public:
  /// Creates the schema and loads the scenario through the generated SQL.
  static Database from_scenario(const DataModel& dm, const Scenario& sc);

  /// Executes CREATE TABLE / INSERT statements. Throws InvalidInput.
  void execute_script(std::string_view script);

  /// Reconstructs the scenario stored in the class and association tables.
  Scenario read_back(const DataModel& dm) const;

  const Table* find(std::string_view name) const;
  const std::map<std::string, Table>& tables() const { return tables_; }

 private:
  std::map<std::string, Table> tables_;
};

struct Rows {
  std::vector<std::string> columns;
  std::vector<Row> rows;
};

struct SecurityError {
  std::string message;
};

struct SqlError {
  std::string message;
};

using ExecResult = std::variant<Rows, SecurityError, SqlError>;

using Params = std::map<std::string, Value>;

struct ExecStats {
  std::map<std::string, std::size_t> auth_calls;  // AuthFunc name -> invocations
  std::size_t total_auth_calls() const;
};

ExecResult exec_query(const Database& db, const sql::Query& q, const Params& params);

/// Evaluates a scalar expression with no row context.
ExecResult eval_expression(const Database& db, const sql::Expr& e, const Params& params);

ExecResult exec_procedure(const Database& db, const secquery::StoredProcedure& proc,
                          const std::vector<secquery::AuthFuncDef>& functions, const std::string& caller,
                          const std::string& role, ExecStats* stats = nullptr);

/// Reference authorization judgment: runs the staging of `q` without its
/// checks and decides every check site row with the OCL evaluator.
bool auth_query_ref(const SecurityModel& s, const ocl::ObjectRef& caller, const std::string& role,
                    const sql::Query& q, const Database& db);

/// Multiset equality of row lists.
bool same_rows(const Rows& a, const Rows& b);

std::string to_string(const ExecResult& r);

}  // namespace fgac::harness
