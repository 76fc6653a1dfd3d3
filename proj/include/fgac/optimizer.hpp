#pragma once

#include <chrono>
#include <string>
#include <vector>

#include "fgac/msfol.hpp"
#include "fgac/ocl2sql.hpp"
#include "fgac/policy.hpp"
#include "fgac/secquery.hpp"

namespace fgac::optimizer {

/// A trusted hypothesis about the caller or the data, with the SQL test that
/// establishes it at runtime.
struct ContextFact {
  std::string description;
  std::string ocl;        // constraint text over caller and the check's keywords
  std::string sql_guard;  // boolean SQL over caller and role; "TRUE" when it holds by construction
  /// Restricts the fact to these check ids ("TEMP2:Enrolment") or resources
  /// ("Student:age"). Empty: every check whose keywords cover the fact.
  std::vector<std::string> checks;
};

struct EliminationProblem {
  msfol::Theory theory;  // map(D) and the keyword constants
  msfol::Theory facts;   // fact definitions and assertions
  msfol::Theory defs;    // definitions of the auth constraint
  msfol::Command goal;   // (assert (not map_true(auth)))

  msfol::Theory script() const;
};

struct TypedFact {
  std::string description;
  ocl::ExprPtr constraint;
};

EliminationProblem build_elimination_problem(const DataModel& dm, const std::vector<msfol::SigmaDecl>& sigma,
                                             const std::vector<TypedFact>& facts, const ocl::Expr& auth);

enum class Verdict { Proven, Sat, Unknown, Timeout, SolverError };

std::string_view to_string(Verdict v);

struct ProofOutcome {
  Verdict verdict = Verdict::Unknown;
  double elapsed_ms = 0;
  std::string raw;  // solver stdout

  bool proven() const { return verdict == Verdict::Proven; }
};

struct SolverConfig {
  std::string path;
  std::chrono::milliseconds timeout{10000};
};

/// Parses a solver answer. Throws SolverProtocolError on anything other than
/// sat / unsat / unknown on the first non-empty line.
Verdict parse_answer(const std::string& out);

/// Runs the solver on the emitted script. unsat is the only answer that
/// proves the check unnecessary. Throws SolverUnavailable,
/// SolverProtocolError.
ProofOutcome prove_check_unnecessary(const EliminationProblem& p, const SolverConfig& solver);

/// Runs the solver on a script file.
ProofOutcome prove_script(const std::string& script_path, const SolverConfig& solver);

/// One elimination attempt: a check site under one role.
struct CheckProof {
  std::string check_id;
  Resource resource;
  std::string role;
  std::vector<std::size_t> facts;  // indices into the fact list
  std::string script;              // emitted SMT-LIB
  ProofOutcome outcome;
};

/// Elimination problems for every (check site, role with a rule) pair, in
/// check order then role order. Throws InvalidInput for facts that do not
/// parse or type-check.
std::vector<CheckProof> plan_proofs(const SecurityModel& s, const secquery::SecQuery& sec,
                                    const std::vector<ContextFact>& facts);

/// Solves the planned problems, `jobs` at a time. Results keep plan order.
void run_proofs(std::vector<CheckProof>& proofs, const SolverConfig& solver, unsigned jobs = 1);

enum class Action { Removed, Guarded, Kept };

std::string_view to_string(Action a);

/// Wraps every step whose checks are all proven for some role into an
/// IF (guard) THEN unchecked ELSE checked END IF. Throws InconsistentChecks if
/// a proof names a check the procedure does not contain.
secquery::StoredProcedure gen_optimized_proc(const secquery::SecQuery& sec, const std::vector<CheckProof>& proofs,
                                             const std::vector<ContextFact>& facts);

/// What happened to each proof's check in the optimized procedure.
std::vector<Action> actions(const secquery::SecQuery& sec, const std::vector<CheckProof>& proofs);

/// One line per proof: id, resource, role, facts, verdict, ms, action. The
/// elapsed column is "-" without `timings`, which keeps the text reproducible.
std::string report(const secquery::SecQuery& sec, const std::vector<CheckProof>& proofs,
                   const std::vector<ContextFact>& facts, bool timings = true);

struct Optimization {
  secquery::SecQuery secured;
  std::vector<CheckProof> proofs;
  secquery::StoredProcedure optimized;
};

Optimization optimize(const SecurityModel& s, const sql::Query& q, const ocl2sql::Registry& registry,
                      const std::vector<ContextFact>& facts, const SolverConfig& solver, unsigned jobs = 1);

}  // namespace fgac::optimizer
