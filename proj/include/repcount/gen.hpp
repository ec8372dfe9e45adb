#pragma once

#include <array>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "repcount/fd_analysis.hpp"
#include "repcount/model.hpp"
#include "repcount/numeric.hpp"

namespace repcount {

struct Literal {
  int var = 0;  // 1-based
  bool positive = true;

  /// Truth value of the literal when its variable is assigned v.
  bool value_under(bool v) const { return positive ? v : !v; }
};

/// 3CNF with exactly three literals per clause and per-clause distinct
/// variables.
struct Cnf3 {
  int num_vars = 0;
  std::vector<std::array<Literal, 3>> clauses;

  Cnf3() = default;
  Cnf3(int vars, std::vector<std::array<Literal, 3>> cls)
      : num_vars(vars), clauses(std::move(cls)) {
    if (num_vars < 0) throw Error("cnf: negative variable count");
    for (const auto& clause : clauses) {
      std::set<int> seen;
      for (const Literal& lit : clause) {
        if (lit.var < 1 || lit.var > num_vars)
          throw Error("cnf: literal variable " + std::to_string(lit.var) + " out of range");
        if (!seen.insert(lit.var).second)
          throw Error("cnf: variable repeated within a clause");
      }
    }
  }

  std::size_t num_clauses() const { return clauses.size(); }

  /// Variables that actually occur in some clause, sorted.
  std::vector<int> occurring_variables() const {
    std::set<int> vars;
    for (const auto& clause : clauses)
      for (const Literal& lit : clause) vars.insert(lit.var);
    return {vars.begin(), vars.end()};
  }

  std::size_t clauses_true_under(const std::map<int, bool>& assignment) const {
    std::size_t n = 0;
    for (const auto& clause : clauses) {
      bool sat = false;
      for (const Literal& lit : clause)
        if (lit.value_under(assignment.at(lit.var))) {
          sat = true;
          break;
        }
      if (sat) ++n;
    }
    return n;
  }
};

struct GapInstance {
  Database db;
  FDSet sigma;
};

namespace detail {

inline std::string clause_pair_constant(std::size_t clause, int copy, bool value) {
  return "C" + std::to_string(clause) + "_" + std::to_string(copy) + "|" + (value ? "1" : "0");
}

}  // namespace detail

/// The hard-instance gadget over R(Var, VValue, Clause, LValue): per clause
/// copy, six rows storing each literal's variable under both truth values
/// together with the induced literal value, plus one conflict row
/// (*, *, <copy,1>, 0). The FDs Var -> VValue and Clause -> LValue have no
/// LHS chain. Total 7*k*m facts, k*m of them conflict rows.
inline GapInstance gen_gap3sat(const Cnf3& cnf, int k) {
  if (k < 1) throw PreconditionError("gen_gap3sat: k must be at least 1");
  Schema schema;
  schema.add(RelationDecl("R", {"Var", "VValue", "Clause", "LValue"}));
  Database db(schema);
  for (std::size_t i = 0; i < cnf.clauses.size(); ++i) {
    for (int j = 1; j <= k; ++j) {
      for (const Literal& lit : cnf.clauses[i]) {
        for (bool v : {false, true}) {
          const bool lval = lit.value_under(v);
          db.insert(Fact("R", {"x" + std::to_string(lit.var), v ? "1" : "0",
                               detail::clause_pair_constant(i + 1, j, lval), lval ? "1" : "0"}));
        }
      }
      db.insert(Fact("R", {"*", "*", detail::clause_pair_constant(i + 1, j, true), "0"}));
    }
  }
  FDSet sigma;
  sigma.add(FD("R", {"Var"}, {"VValue"}));
  sigma.add(FD("R", {"Clause"}, {"LValue"}));
  return GapInstance{std::move(db), std::move(sigma)};
}

/// Sum over all truth assignments tau of 2^(k * c_tau), where c_tau counts
/// the clauses true under tau and assignments range over the variables
/// occurring in the formula. Upper-bounds the gadget's repair count: each
/// assignment indexes a family of 2^(k * c_tau) repairs, but the families
/// overlap (a repair that stores a satisfied clause copy only through its
/// conflict row also represents the assignment with the flipped variables),
/// so the sum is not the exact count.
inline BigCount expected_gap_count(const Cnf3& cnf, int k) {
  if (k < 1) throw PreconditionError("expected_gap_count: k must be at least 1");
  std::vector<int> vars = cnf.occurring_variables();
  if (vars.size() > 20)
    throw PreconditionError("expected_gap_count: too many variables to enumerate (" +
                            std::to_string(vars.size()) + ")");
  BigCount total = 0;
  const std::uint64_t limit = std::uint64_t(1) << vars.size();
  for (std::uint64_t bits = 0; bits < limit; ++bits) {
    std::map<int, bool> assignment;
    for (std::size_t i = 0; i < vars.size(); ++i)
      assignment[vars[i]] = ((bits >> i) & 1) != 0;
    total += pow2(static_cast<std::uint64_t>(k) * cnf.clauses_true_under(assignment));
  }
  return total;
}

struct RfreqInstance {
  Database db;
  FDSet sigma;
  ConjunctiveQuery query;
};

/// Low-frequency family: D_n has 2n+1 facts over R(A1..A4), the chain FDs
/// A1 -> A2 and {A1,A3} -> A4, and the atomic query R(x,x,y,z). Exactly one
/// of the 2^n + 1 repairs entails the query.
inline RfreqInstance gen_rfreq_family(int n) {
  if (n < 1) throw PreconditionError("gen_rfreq_family: n must be at least 1");
  Schema schema;
  schema.add(RelationDecl("R", {"A1", "A2", "A3", "A4"}));
  Database db(schema);
  db.insert(Fact("R", {"a", "a", "a", "a"}));
  for (int i = 1; i <= n; ++i) {
    db.insert(Fact("R", {"a", "b", "c" + std::to_string(i), "d1"}));
    db.insert(Fact("R", {"a", "b", "c" + std::to_string(i), "d2"}));
  }
  FDSet sigma;
  sigma.add(FD("R", {"A1"}, {"A2"}));
  sigma.add(FD("R", {"A1", "A3"}, {"A4"}));
  ConjunctiveQuery query({Atom("R", {Term::variable("x"), Term::variable("x"),
                                     Term::variable("y"), Term::variable("z")})});
  return RfreqInstance{std::move(db), std::move(sigma), std::move(query)};
}

struct CookReduction {
  Database db;                // D (renamed if needed) plus the grounded query facts
  ConjunctiveQuery grounded;  // Q with every variable replaced by a fresh constant
  Substitution assignment;    // variable -> fresh constant
  bool renamed = false;       // whether D's constants had to be renamed
};

namespace detail {

inline std::string fresh_name(const std::string& base, std::set<std::string>& used) {
  if (!used.count(base)) {
    used.insert(base);
    return base;
  }
  for (int i = 0;; ++i) {
    std::string candidate = base + "_" + std::to_string(i);
    if (!used.count(candidate)) {
      used.insert(candidate);
      return candidate;
    }
  }
}

}  // namespace detail

/// Reduces counting repairs to counting repairs that entail a query:
/// #rep(D, Sigma) = #rep(D', Sigma, Q') where D' adds one fresh fact per
/// query atom and Q' is the query grounded with those fresh constants. D is
/// first renamed apart when it shares constants with the query.
///
/// Every FD must have a nonempty left-hand side: under a dependency
/// "nothing determines Y" the fresh facts conflict with the existing ones
/// and the count identity fails (two facts of a unary relation under
/// {} -> A have two repairs, but only one repair of the extended database
/// entails the grounded query).
inline CookReduction cook_reduce(const Database& d, const FDSet& sigma,
                                 const ConjunctiveQuery& q) {
  if (!q.self_join_free()) throw PreconditionError("cook_reduce: query has self-joins");
  for (const Atom& a : q.atoms()) d.schema().at(a.relation);  // relations must be declared
  sigma.validate(d.schema());
  for (const FD& fd : sigma.fds()) {
    std::set<std::string> effective_rhs;
    std::set_difference(fd.rhs.begin(), fd.rhs.end(), fd.lhs.begin(), fd.lhs.end(),
                        std::inserter(effective_rhs, effective_rhs.begin()));
    if (fd.lhs.empty() && !effective_rhs.empty())
      throw PreconditionError("cook_reduce: FD " + fd.to_string() +
                              " has an empty left-hand side; the reduction requires every "
                              "dependency to have a determining attribute");
  }

  std::vector<std::string> qconsts = q.constants();
  std::vector<std::string> dom = d.active_domain();
  std::set<std::string> used(dom.begin(), dom.end());
  used.insert(qconsts.begin(), qconsts.end());

  Database base = d;
  bool renamed = false;

  std::vector<std::string> overlap;
  std::set_intersection(dom.begin(), dom.end(), qconsts.begin(), qconsts.end(),
                        std::back_inserter(overlap));
  if (!overlap.empty()) {
    // Rename every constant of D with a fresh one; injective, so the number
    // of repairs is unchanged.
    std::map<std::string, std::string> rename;
    for (const auto& c : dom) rename[c] = detail::fresh_name("v_" + c, used);
    std::vector<Fact> renamed_facts;
    for (const Fact& f : d.facts()) {
      std::vector<std::string> values;
      values.reserve(f.values.size());
      for (const auto& v : f.values) values.push_back(rename.at(v));
      renamed_facts.emplace_back(f.relation, std::move(values));
    }
    base = d.empty_like().with_facts(std::move(renamed_facts));
    renamed = true;
  }

  Substitution assignment;
  for (const auto& x : q.variables()) assignment[x] = detail::fresh_name("q_" + x, used);
  return CookReduction{base.with_facts(hom_image(q, assignment)),
                       substitute_all(q, assignment), assignment, renamed};
}

/// Parameters of the amplified decision test.
struct GapParams {
  ExactRatio gamma = ExactRatio(1, 16);
  ExactRatio epsilon = ExactRatio(1, 3);
  int k = 112;
};

namespace detail {

/// (7/8 + gamma) * k, which must be an integer for the thresholds to be
/// exact powers of two.
inline BigCount gap_exponent_unit(const GapParams& p) {
  if (p.gamma <= 0 || p.gamma >= ExactRatio(1, 8))
    throw PreconditionError("gap parameters: gamma must be in (0, 1/8)");
  if (p.epsilon <= 0 || p.epsilon >= 1)
    throw PreconditionError("gap parameters: epsilon must be in (0, 1)");
  if (p.k < 1) throw PreconditionError("gap parameters: k must be at least 1");
  ExactRatio unit = (ExactRatio(7, 8) + p.gamma) * p.k;
  if (ratio_denom(unit) != 1)
    throw PreconditionError("gap parameters: (7/8 + gamma) * k is not an integer");
  return ratio_numer(unit);
}

}  // namespace detail

/// Exact evaluation of 2^(k m) / (2^n 2^((7/8+gamma) k m)) > (1+eps)/(1-eps).
inline bool gap_ratio_holds(const GapParams& params, int m, int n) {
  if (m < 1) throw PreconditionError("gap_ratio_holds: m must be at least 1");
  if (n < 1 || n > 3 * m) throw PreconditionError("gap_ratio_holds: need 0 < n <= 3m");
  BigCount unit = detail::gap_exponent_unit(params);
  BigCount denom_exp = BigCount(n) + unit * m;
  ExactRatio lhs(pow2(static_cast<std::uint64_t>(params.k) * static_cast<std::uint64_t>(m)),
                 pow2(denom_exp.convert_to<std::uint64_t>()));
  ExactRatio rhs = (ExactRatio(1) + params.epsilon) / (ExactRatio(1) - params.epsilon);
  return lhs > rhs;
}

struct GapDecision {
  bool accept = false;
  BigCount count;
  ExactRatio threshold;
};

using CountFunction = std::function<BigCount(const Database&, const FDSet&)>;

/// Threshold test of the amplified construction: accept iff the (exact or
/// approximate) repair count of the gadget exceeds
/// (1+eps) * 2^n * 2^((7/8+gamma) k m). The counter is pluggable because no
/// approximation scheme exists for this FD set; at desk scale the
/// brute-force oracle plays that role.
inline GapDecision gap_decide(const Cnf3& cnf, const GapParams& params,
                              const CountFunction& counter) {
  if (cnf.clauses.empty()) throw PreconditionError("gap_decide: formula has no clauses");
  BigCount unit = detail::gap_exponent_unit(params);
  const std::size_t n = cnf.occurring_variables().size();
  const std::size_t m = cnf.num_clauses();
  BigCount exponent = BigCount(n) + unit * BigCount(m);
  GapDecision out;
  out.threshold = (ExactRatio(1) + params.epsilon) * pow2(exponent.convert_to<std::uint64_t>());
  GapInstance inst = gen_gap3sat(cnf, params.k);
  out.count = counter(inst.db, inst.sigma);
  out.accept = ExactRatio(out.count) > out.threshold;
  return out;
}

}  // namespace repcount
