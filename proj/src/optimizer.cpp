#include "fgac/optimizer.hpp"

#include <stdlib.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include "fgac/error.hpp"
#include "fgac/subprocess.hpp"

namespace fgac::optimizer {

msfol::Theory EliminationProblem::script() const {
  msfol::Theory t = theory;
  t.append(facts);
  t.append(defs);
  t.commands.push_back(goal);
  return t;
}

EliminationProblem build_elimination_problem(const DataModel& dm, const std::vector<msfol::SigmaDecl>& sigma,
                                             const std::vector<TypedFact>& facts, const ocl::Expr& auth) {
  EliminationProblem p;
  p.theory = msfol::map_datamodel_theory(dm);
  p.theory.append(msfol::map_sigma(dm, sigma));
  msfol::DefinitionSet defs;
  for (const auto& f : facts) {
    auto t = msfol::map_true(*f.constraint, dm, defs);
    p.facts.append(defs.theory);
    defs.theory.commands.clear();
    std::vector<std::string> comments;
    if (!f.description.empty()) comments.push_back(f.description);
    comments.push_back(ocl::render_ocl(*f.constraint));
    p.facts.assert_term(t, std::move(comments));
  }
  auto goal = msfol::map_true(auth, dm, defs);
  p.defs = defs.theory;
  p.goal = {{"authorisation constraint", ocl::render_ocl(auth), "below is the negation of map_true(auth)"},
            "(assert " + msfol::render(msfol::neg(goal)) + ")"};
  return p;
}

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::Proven: return "unsat";
    case Verdict::Sat: return "sat";
    case Verdict::Unknown: return "unknown";
    case Verdict::Timeout: return "timeout";
    case Verdict::SolverError: return "solver-error";
  }
  return "?";
}

std::string_view to_string(Action a) {
  switch (a) {
    case Action::Removed: return "REMOVED";
    case Action::Guarded: return "GUARDED";
    case Action::Kept: return "KEPT";
  }
  return "?";
}

Verdict parse_answer(const std::string& out) {
  std::istringstream in(out);
  std::string line;
  while (std::getline(in, line)) {
    auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos) continue;
    auto e = line.find_last_not_of(" \t\r");
    auto word = line.substr(b, e - b + 1);
    if (word == "unsat") return Verdict::Proven;
    if (word == "sat") return Verdict::Sat;
    if (word == "unknown" || word == "timeout") return Verdict::Unknown;
    break;
  }
  throw Error(ErrorCode::SolverProtocolError, "unexpected solver output: " + out);
}

namespace {

class TempScript {
 public:
  explicit TempScript(const std::string& text) {
    auto pattern = (std::filesystem::temp_directory_path() / "fgac-XXXXXX.smt2").string();
    std::vector<char> buf(pattern.begin(), pattern.end());
    buf.push_back('\0');
    int fd = ::mkstemps(buf.data(), 5);
    if (fd < 0) throw Error(ErrorCode::SolverUnavailable, "cannot create a temporary script");
    ::close(fd);
    path_ = buf.data();
    std::ofstream(path_) << text;
  }
  ~TempScript() {
    std::error_code ec;
    std::filesystem::remove(path_, ec);
  }
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

}  // namespace

ProofOutcome prove_script(const std::string& script_path, const SolverConfig& solver) {
  if (solver.path.empty()) throw Error(ErrorCode::SolverUnavailable, "no SMT solver configured");
  auto start = std::chrono::steady_clock::now();
  auto r = run_process({solver.path, script_path}, solver.timeout);
  ProofOutcome o;
  o.elapsed_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  o.raw = r.out;
  if (r.timed_out) {
    o.verdict = Verdict::Timeout;
    return o;
  }
  o.verdict = parse_answer(r.out + (r.out.empty() ? r.err : ""));
  return o;
}

ProofOutcome prove_check_unnecessary(const EliminationProblem& p, const SolverConfig& solver) {
  TempScript file(msfol::emit_smtlib(p.script()));
  return prove_script(file.path(), solver);
}

namespace {

bool applies(const ContextFact& f, const secquery::CheckSite& site, const ocl::KeywordTypes& kws) {
  if (!f.checks.empty()) {
    auto res = to_string(site.resource);
    bool listed = std::any_of(f.checks.begin(), f.checks.end(),
                              [&](const std::string& c) { return c == site.id() || c == res; });
    if (!listed) return false;
  }
  for (const auto& k : ocl::free_keywords(*ocl::parse_syntax(f.ocl)))
    if (!kws.count(k)) return false;
  return true;
}

std::vector<msfol::SigmaDecl> sigma_for(const SecurityModel& s, const Resource& res) {
  const auto& dm = *s.data_model;
  auto kws = keyword_types(dm, s.user_class, res);
  std::vector<msfol::SigmaDecl> out{{"caller", s.user_class}};
  for (const auto& k : target_keywords(dm, res)) out.emplace_back(k, kws.at(k));
  return out;
}

}  // namespace

std::vector<CheckProof> plan_proofs(const SecurityModel& s, const secquery::SecQuery& sec,
                                    const std::vector<ContextFact>& facts) {
  const auto& dm = *s.data_model;
  for (const auto& f : facts) {
    try {
      ocl::parse_syntax(f.ocl);
    } catch (const Error& e) {
      throw Error(ErrorCode::InvalidInput, "fact '" + f.description + "': " + e.what());
    }
  }
  std::vector<CheckProof> out;
  for (const auto& site : sec.plan.checks) {
    auto kws = keyword_types(dm, s.user_class, site.resource);
    std::vector<std::size_t> used;
    std::vector<TypedFact> typed;
    for (std::size_t i = 0; i < facts.size(); ++i) {
      if (!applies(facts[i], site, kws)) continue;
      try {
        typed.push_back({facts[i].description, ocl::parse_ocl(facts[i].ocl, dm, kws)});
      } catch (const Error& e) {
        throw Error(ErrorCode::InvalidInput, "fact '" + facts[i].description + "': " + e.what());
      }
      used.push_back(i);
    }
    for (const auto& role : s.roles) {
      const auto* rule = s.find_rule(role, site.resource);
      if (!rule) continue;
      auto problem = build_elimination_problem(dm, sigma_for(s, site.resource), typed, *rule->constraint);
      CheckProof p;
      p.check_id = site.id();
      p.resource = site.resource;
      p.role = role;
      p.facts = used;
      p.script = msfol::emit_smtlib(problem.script());
      out.push_back(std::move(p));
    }
  }
  return out;
}

void run_proofs(std::vector<CheckProof>& proofs, const SolverConfig& solver, unsigned jobs) {
  if (solver.path.empty()) throw Error(ErrorCode::SolverUnavailable, "no SMT solver configured");
  std::atomic<std::size_t> next{0};
  std::vector<std::string> errors(proofs.size());
  auto worker = [&] {
    for (std::size_t i = next++; i < proofs.size(); i = next++) {
      try {
        TempScript file(proofs[i].script);
        proofs[i].outcome = prove_script(file.path(), solver);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::SolverProtocolError) {
          errors[i] = e.what();
          continue;
        }
        proofs[i].outcome.verdict = Verdict::SolverError;
        proofs[i].outcome.raw = e.what();
      }
    }
  };
  jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(std::max<std::size_t>(1, proofs.size()))));
  std::vector<std::thread> pool;
  for (unsigned j = 1; j < jobs; ++j) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (const auto& e : errors)
    if (!e.empty()) throw Error(ErrorCode::SolverUnavailable, e);
}

namespace {

bool is_true_guard(const std::string& g) {
  std::string t;
  for (char c : g)
    if (!std::isspace(static_cast<unsigned char>(c))) t += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return t == "TRUE" || t == "(TRUE)";
}

sql::QueryPtr unchecked_variant(const sql::Query& q) {
  auto stripped = sql::strip_checks(q);
  auto copy = *stripped;
  for (std::size_t i = 0; i < copy.items.size() && i < q.items.size(); ++i) {
    const auto& before = q.items[i].expr;
    auto& item = copy.items[i];
    if (before->kind == sql::Expr::Kind::Checked && item.expr->kind == sql::Expr::Kind::Column &&
        item.expr->name == item.alias)
      item.alias.clear();
  }
  return std::make_shared<const sql::Query>(std::move(copy));
}

// Roles for which every check of the step is proven, with the facts used.
struct StepDecision {
  std::map<std::string, std::set<std::size_t>> roles;
};

std::map<std::size_t, StepDecision> decide(const secquery::SecQuery& sec, const std::vector<CheckProof>& proofs) {
  std::map<std::string, const secquery::CheckSite*> sites;
  for (const auto& c : sec.plan.checks) sites[c.id()] = &c;
  std::map<std::pair<std::string, std::string>, const CheckProof*> by_site_role;
  for (const auto& p : proofs) {
    if (!sites.count(p.check_id))
      throw Error(ErrorCode::InconsistentChecks, "no check '" + p.check_id + "' in the procedure");
    by_site_role[{p.check_id, p.role}] = &p;
  }
  std::map<std::size_t, std::vector<const secquery::CheckSite*>> per_step;
  for (const auto& c : sec.plan.checks) per_step[c.step].push_back(&c);
  std::set<std::string> roles;
  for (const auto& p : proofs) roles.insert(p.role);

  std::map<std::size_t, StepDecision> out;
  for (const auto& [step, checks] : per_step)
    for (const auto& role : roles) {
      std::set<std::size_t> used;
      bool all = true;
      for (const auto* c : checks) {
        auto it = by_site_role.find({c->id(), role});
        if (it == by_site_role.end() || !it->second->outcome.proven()) {
          all = false;
          break;
        }
        used.insert(it->second->facts.begin(), it->second->facts.end());
      }
      if (all) out[step].roles[role] = used;
    }
  return out;
}

}  // namespace

secquery::StoredProcedure gen_optimized_proc(const secquery::SecQuery& sec, const std::vector<CheckProof>& proofs,
                                             const std::vector<ContextFact>& facts) {
  auto decisions = decide(sec, proofs);
  secquery::StoredProcedure proc = sec.procedure;
  for (const auto& [step, d] : decisions) {
    if (d.roles.empty()) continue;
    const auto& temp = sec.plan.steps.at(step);
    std::vector<std::string> alternatives;
    for (const auto& [role, used] : d.roles) {
      std::string alt = "role = " + sql_quote(role);
      for (auto i : used) {
        if (i >= facts.size()) throw Error(ErrorCode::InconsistentChecks, "fact index out of range");
        if (!is_true_guard(facts[i].sql_guard)) alt += " AND (" + facts[i].sql_guard + ")";
      }
      alternatives.push_back(alt);
    }
    std::string cond;
    if (alternatives.size() == 1) {
      cond = "(" + alternatives.front() + ")";
    } else {
      for (std::size_t i = 0; i < alternatives.size(); ++i) cond += (i ? " OR (" : "((") + alternatives[i] + ")";
      cond += ")";
    }
    secquery::GuardedStep g;
    g.name = temp.name;
    g.condition_text = cond;
    g.condition = sql::parse_expression(cond);
    g.unchecked = unchecked_variant(*temp.body);
    g.checked = temp.body;
    proc.steps.at(step) = g;
  }
  return proc;
}

std::vector<Action> actions(const secquery::SecQuery& sec, const std::vector<CheckProof>& proofs) {
  auto decisions = decide(sec, proofs);
  std::map<std::string, std::size_t> step_of;
  for (const auto& c : sec.plan.checks) step_of[c.id()] = c.step;
  std::vector<Action> out;
  for (const auto& p : proofs) {
    auto it = decisions.find(step_of.at(p.check_id));
    bool wrapped = it != decisions.end() && it->second.roles.count(p.role);
    if (wrapped) out.push_back(Action::Removed);
    else if (p.outcome.proven()) out.push_back(Action::Guarded);
    else out.push_back(Action::Kept);
  }
  return out;
}

std::string report(const secquery::SecQuery& sec, const std::vector<CheckProof>& proofs,
                   const std::vector<ContextFact>& facts, bool timings) {
  auto acts = actions(sec, proofs);
  std::ostringstream out;
  for (std::size_t i = 0; i < proofs.size(); ++i) {
    const auto& p = proofs[i];
    std::string used;
    for (auto f : p.facts) {
      if (!used.empty()) used += "; ";
      used += facts.at(f).description.empty() ? facts.at(f).ocl : facts.at(f).description;
    }
    if (used.empty()) used = "-";
    char ms[32] = "-";
    if (timings) std::snprintf(ms, sizeof ms, "%.0fms", p.outcome.elapsed_ms);
    out << p.check_id << "\t" << to_string(p.resource) << "\t" << p.role << "\t" << used << "\t"
        << to_string(p.outcome.verdict) << "\t" << ms << "\t" << to_string(acts[i]) << "\n";
  }
  return out.str();
}

Optimization optimize(const SecurityModel& s, const sql::Query& q, const ocl2sql::Registry& registry,
                      const std::vector<ContextFact>& facts, const SolverConfig& solver, unsigned jobs) {
  Optimization o;
  o.secured = secquery::gen_sec_query(s, q, registry);
  o.proofs = plan_proofs(s, o.secured, facts);
  run_proofs(o.proofs, solver, jobs);
  o.optimized = gen_optimized_proc(o.secured, o.proofs, facts);
  return o;
}

}  // namespace fgac::optimizer
