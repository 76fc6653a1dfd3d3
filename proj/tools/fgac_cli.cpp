// Command-line front end: schema, compile, optimize, prove, run, eval.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "fgac/error.hpp"
#include "fgac/harness.hpp"
#include "fgac/loaders.hpp"
#include "fgac/optimizer.hpp"
#include "fgac/secquery.hpp"

#ifndef FGAC_DEFAULT_SOLVER
#define FGAC_DEFAULT_SOLVER "z3"
#endif

namespace fs = std::filesystem;
using namespace fgac;

namespace {

struct Options {
  std::string model, policy, query, scenario, facts, registry, out, out_dir, script, constraint;
  std::string caller, role = "Lecturer", solver;
  std::vector<std::string> bindings;
  double timeout = 10;
  unsigned jobs = 1;
  bool optimized = false;
  bool plain = false;
};

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::InvalidInput, "cannot write '" + path + "'");
  out << text;
}

optimizer::SolverConfig solver_config(const Options& o) {
  optimizer::SolverConfig c;
  c.path = o.solver;
  if (c.path.empty())
    if (const char* env = std::getenv("FGAC_SOLVER")) c.path = env;
  if (c.path.empty()) c.path = FGAC_DEFAULT_SOLVER;
  c.timeout = std::chrono::milliseconds(static_cast<long long>(o.timeout * 1000));
  return c;
}

ocl2sql::Registry registry_of(const Options& o) {
  return o.registry.empty() ? ocl2sql::Registry{} : loaders::load_registry(o.registry);
}

int cmd_schema(const Options& o) {
  write_text(o.out, sql_schema(loaders::load_model(o.model)));
  return 0;
}

int cmd_compile(const Options& o) {
  auto dm = loaders::load_model(o.model);
  auto s = loaders::load_policy(o.policy, dm);
  auto q = sql::parse_select(loaders::read_file(o.query));
  auto sec = secquery::gen_sec_query(s, *q, registry_of(o));
  write_text(o.out, secquery::render_script(sec.procedure, sec.functions));
  return 0;
}

int cmd_optimize(const Options& o) {
  auto dm = loaders::load_model(o.model);
  auto s = loaders::load_policy(o.policy, dm);
  auto q = sql::parse_select(loaders::read_file(o.query));
  auto facts = loaders::load_facts(o.facts);
  auto result = optimizer::optimize(s, *q, registry_of(o), facts, solver_config(o), o.jobs);
  auto script = secquery::render_script(result.optimized, result.secured.functions);
  if (!o.out_dir.empty()) {
    fs::create_directories(o.out_dir);
    for (const auto& p : result.proofs)
      write_text((fs::path(o.out_dir) / (secquery::sanitize(p.check_id) + "_" + secquery::sanitize(p.role) + ".smt2")).string(),
                 p.script);
    write_text((fs::path(o.out_dir) / "report.txt").string(),
               optimizer::report(result.secured, result.proofs, facts, false));
    write_text((fs::path(o.out_dir) / "procedure.sql").string(), script);
  } else if (!o.out.empty()) {
    write_text(o.out, script);
  }
  std::cout << optimizer::report(result.secured, result.proofs, facts);
  if (o.out_dir.empty() && o.out.empty()) std::cout << "\n" << script;
  return 0;
}

int cmd_prove(const Options& o) {
  auto outcome = optimizer::prove_script(o.script, solver_config(o));
  std::cout << optimizer::to_string(outcome.verdict) << "\n";
  return 0;
}

int cmd_run(const Options& o) {
  auto dm = loaders::load_model(o.model);
  auto sc = loaders::load_scenario(o.scenario, dm);
  auto db = harness::Database::from_scenario(dm, sc);
  auto q = sql::parse_select(loaders::read_file(o.query));
  harness::ExecResult r;
  harness::ExecStats stats;
  if (o.plain) {
    r = harness::exec_query(db, *q, {{"caller", Value{o.caller}}, {"role", Value{o.role}}});
  } else {
    auto s = loaders::load_policy(o.policy, dm);
    if (!s.has_role(o.role)) throw Error(ErrorCode::UnknownRole, "role '" + o.role + "' is not declared");
    if (!o.facts.empty()) {
      auto facts = loaders::load_facts(o.facts);
      auto result = optimizer::optimize(s, *q, registry_of(o), facts, solver_config(o), o.jobs);
      r = harness::exec_procedure(db, result.optimized, result.secured.functions, o.caller, o.role, &stats);
    } else {
      auto sec = secquery::gen_sec_query(s, *q, registry_of(o));
      r = harness::exec_procedure(db, sec.procedure, sec.functions, o.caller, o.role, &stats);
    }
  }
  std::cout << harness::to_string(r);
  if (!o.plain) std::cerr << "AuthFunc calls: " << stats.total_auth_calls() << "\n";
  return std::holds_alternative<harness::Rows>(r) ? 0 : 1;
}

int cmd_eval(const Options& o) {
  auto dm = loaders::load_model(o.model);
  auto sc = loaders::load_scenario(o.scenario, dm);
  ocl::Binding binding;
  ocl::KeywordTypes types;
  for (const auto& b : o.bindings) {
    auto eq = b.find('=');
    if (eq == std::string::npos) throw Error(ErrorCode::InvalidInput, "binding '" + b + "' is not keyword=id");
    auto kw = b.substr(0, eq);
    auto id = b.substr(eq + 1);
    auto cls = sc.class_of(id);
    if (!cls) throw Error(ErrorCode::InvalidInput, "no object '" + id + "' in the scenario");
    binding[kw] = {id, *cls};
    types[kw] = *cls;
  }
  auto e = ocl::parse_ocl(o.constraint, dm, types);
  std::cout << ocl::to_string(ocl::eval_ocl(dm, sc, *e, binding)) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fine-grained access control compiler for SQL queries"};
  app.require_subcommand(1);
  Options o;

  auto* schema = app.add_subcommand("schema", "Emit the SQL schema of a data model");
  schema->add_option("--model", o.model, "Data model (JSON)")->required()->check(CLI::ExistingFile);
  schema->add_option("-o,--out", o.out, "Output file (default stdout)");

  auto* compile = app.add_subcommand("compile", "Emit the secured stored procedure and its AuthFuncs");
  auto* optimize = app.add_subcommand("optimize", "Prove checks unnecessary and emit the optimized procedure");
  auto* run = app.add_subcommand("run", "Execute a query or its secured procedure on a scenario");
  for (auto* c : {compile, optimize, run}) {
    c->add_option("--model", o.model, "Data model (JSON)")->required()->check(CLI::ExistingFile);
    c->add_option("--query", o.query, "SELECT statement file")->required()->check(CLI::ExistingFile);
    c->add_option("--registry", o.registry, "Manual SQL implementations (JSON)")->check(CLI::ExistingFile);
  }
  compile->add_option("--policy", o.policy, "Security policy (JSON)")->required()->check(CLI::ExistingFile);
  optimize->add_option("--policy", o.policy, "Security policy (JSON)")->required()->check(CLI::ExistingFile);
  run->add_option("--policy", o.policy, "Security policy (JSON)")->check(CLI::ExistingFile);
  compile->add_option("-o,--out", o.out, "Output file (default stdout)");
  optimize->add_option("-o,--out", o.out, "Optimized procedure file");
  optimize->add_option("--out-dir", o.out_dir, "Directory for scripts, report and procedure");
  optimize->add_option("--facts", o.facts, "Context facts (JSON)")->required()->check(CLI::ExistingFile);
  run->add_option("--facts", o.facts, "Run the procedure optimized under these facts")->check(CLI::ExistingFile);
  run->add_option("--scenario", o.scenario, "Scenario (JSON)")->required()->check(CLI::ExistingFile);
  run->add_option("--caller", o.caller, "Caller object id")->required();
  run->add_option("--role", o.role, "Caller role")->capture_default_str();
  run->add_flag("--plain", o.plain, "Execute the query itself, without enforcement");

  auto* prove = app.add_subcommand("prove", "Solve one elimination problem");
  prove->add_option("script", o.script, "SMT-LIB script")->required()->check(CLI::ExistingFile);

  for (auto* c : {optimize, run, prove}) {
    c->add_option("--solver", o.solver, "SMT solver executable (default $FGAC_SOLVER, then z3)");
    c->add_option("--timeout", o.timeout, "Seconds per problem")->capture_default_str()->check(CLI::PositiveNumber);
    c->add_option("--jobs", o.jobs, "Concurrent solver processes")->capture_default_str()->check(CLI::Range(1u, 256u));
  }

  auto* eval = app.add_subcommand("eval", "Evaluate an OCL constraint on a scenario");
  eval->add_option("--model", o.model, "Data model (JSON)")->required()->check(CLI::ExistingFile);
  eval->add_option("--scenario", o.scenario, "Scenario (JSON)")->required()->check(CLI::ExistingFile);
  eval->add_option("--constraint", o.constraint, "OCL text")->required();
  eval->add_option("--bind", o.bindings, "keyword=objectId");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  if (run->parsed() && !o.plain && o.policy.empty()) {
    std::cerr << "run: --policy is required unless --plain is given\n";
    return 2;
  }

  try {
    if (schema->parsed()) return cmd_schema(o);
    if (compile->parsed()) return cmd_compile(o);
    if (optimize->parsed()) return cmd_optimize(o);
    if (prove->parsed()) return cmd_prove(o);
    if (run->parsed()) return cmd_run(o);
    if (eval->parsed()) return cmd_eval(o);
  } catch (const Error& e) {
    std::cerr << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
