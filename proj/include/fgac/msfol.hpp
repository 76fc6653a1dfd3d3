#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "fgac/model.hpp"
#include "fgac/ocl.hpp"

namespace fgac::msfol {

/// S-expression over SMT-LIB symbols. A leaf has no arguments and is printed
/// as `head`; an application prints as `(head arg...)`.
struct Term {
  std::string head;
  std::vector<Term> args;
  bool application = false;
};

Term atom(std::string symbol);
Term app(std::string head, std::vector<Term> args);
Term eq(Term a, Term b);
Term neg(Term a);
/// n-ary connectives; zero operands give the unit, one operand is returned as is.
Term conj(std::vector<Term> parts);
Term disj(std::vector<Term> parts);
Term forall(const std::string& var, Term body);
Term exists(const std::string& var, Term body);

std::string render(const Term& t);

/// One top-level command, optionally preceded by comment lines (without the
/// leading "; ").
struct Command {
  std::vector<std::string> comments;
  std::string text;
};

struct Theory {
  std::vector<Command> commands;

  void append(const Theory& other);
  void add(std::string text, std::vector<std::string> comments = {});
  void assert_term(const Term& t, std::vector<std::string> comments = {});
};

/// Sorts, null/invalid constants, class predicates, disjointness, attribute
/// functions and association predicates of a data model.
Theory map_datamodel_theory(const DataModel& dm);

using SigmaDecl = std::pair<std::string, std::string>;  // keyword, class

/// Constant symbols for the keywords of an assignment.
Theory map_sigma(const DataModel& dm, const std::vector<SigmaDecl>& decls);

/// Auxiliary predicates introduced for select subexpressions. The counter
/// is shared by every translation that goes into one problem.
struct DefinitionSet {
  Theory theory;
  int next = 0;
};

/// Names object literals (ground constraints) as SMT constants.
using ObjectNamer = std::map<std::string, std::string>;

Term map_true(const ocl::Expr& e, const DataModel& dm, DefinitionSet& defs, const ObjectNamer& objects = {});
Term map_false(const ocl::Expr& e, const DataModel& dm, DefinitionSet& defs, const ObjectNamer& objects = {});

/// SMT constant chosen for every object of the scenario.
ObjectNamer object_names(const DataModel& dm, const Scenario& sc);

/// Finite-model encoding of a scenario. `ints` and `strings` are extra
/// literal values that must be kept apart from the null/invalid sentinels.
Theory map_interpretation(const DataModel& dm, const Scenario& sc, const std::set<std::int64_t>& ints = {},
                          const std::set<std::string>& strings = {});

/// map(D) + intr(sc) + defs + (assert (not map_true(e))) for a ground
/// constraint; unsat exactly when `e` evaluates to true in `sc`.
Theory ground_check(const DataModel& dm, const Scenario& sc, const ocl::Expr& ground);

/// `(set-logic ALL)`, the commands with their comments, `(check-sat)`.
std::string emit_smtlib(const Theory& t);

}  // namespace fgac::msfol
