#pragma once

#include <algorithm>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "repcount/fd_analysis.hpp"
#include "repcount/model.hpp"

namespace repcount {

enum class Complexity { InFP, SharpPComplete };

inline const char* to_string(Complexity c) {
  return c == Complexity::InFP ? "FP" : "#P-complete";
}

struct SafetyStep {
  std::string rule;
  std::string detail;
};

struct SafetyResult {
  bool safe = false;
  std::vector<SafetyStep> trace;
};

struct SafetyStats {
  std::uint64_t calls = 0;
};

namespace detail {

// Split Q into connected components of the atom graph (atoms joined by a
// shared variable). More than one component means Q = Q1 (+) Q2.
inline std::vector<std::vector<Atom>> variable_components(const ConjunctiveQuery& q) {
  const auto& atoms = q.atoms();
  std::vector<std::size_t> parent(atoms.size());
  for (std::size_t i = 0; i < atoms.size(); ++i) parent[i] = i;
  auto find = [&](std::size_t a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  };
  auto unite = [&](std::size_t a, std::size_t b) { parent[find(a)] = find(b); };

  std::map<std::string, std::size_t> first_atom_of_var;
  for (std::size_t i = 0; i < atoms.size(); ++i)
    for (const Term& t : atoms[i].terms) {
      if (!t.is_variable()) continue;
      auto [it, inserted] = first_atom_of_var.emplace(t.text, i);
      if (!inserted) unite(i, it->second);
    }

  std::map<std::size_t, std::vector<Atom>> comps;
  for (std::size_t i = 0; i < atoms.size(); ++i) comps[find(i)].push_back(atoms[i]);
  std::vector<std::vector<Atom>> out;
  for (auto& [root, group] : comps) out.push_back(std::move(group));
  return out;
}

// Fresh constants live in a reserved lexical namespace (a control character
// the parsers reject), one per recursion depth.
inline std::string fresh_constant(const std::string& pool, std::size_t depth) {
  return pool + std::to_string(depth);
}

}  // namespace detail

/// Smallest variable occurring at a primary-lhs position of every
/// complex-part atom, if any. Shared by the safety test and Eval so the two
/// recursions follow the same derivation.
inline std::optional<std::string> shared_pvar_variable(const CanonicalCover& cover,
                                                       const ConjunctiveQuery& q,
                                                       const std::vector<Atom>& comp) {
  if (comp.empty()) return std::nullopt;
  std::set<std::string> candidates = primary_analysis(cover, q, comp[0].relation).pvar;
  for (std::size_t i = 1; i < comp.size() && !candidates.empty(); ++i) {
    std::set<std::string> pv = primary_analysis(cover, q, comp[i].relation).pvar;
    std::set<std::string> inter;
    std::set_intersection(candidates.begin(), candidates.end(), pv.begin(), pv.end(),
                          std::inserter(inter, inter.begin()));
    candidates = std::move(inter);
  }
  if (candidates.empty()) return std::nullopt;
  return *candidates.begin();
}

/// First complex-part atom with pvar empty that has a variable at a position
/// of the primary FD's right-hand side; returns that variable.
inline std::optional<std::string> primary_rhs_variable(const CanonicalCover& cover,
                                                       const ConjunctiveQuery& q,
                                                       const std::vector<Atom>& comp) {
  for (const Atom& atom : comp) {
    PrimaryAnalysis pa = primary_analysis(cover, q, atom.relation);
    if (!pa.pvar.empty() || !pa.primary_index) continue;
    const RelationDecl& decl = cover.schema().at(atom.relation);
    LhsChain chain = lhs_chain(cover, atom.relation);
    const FD& primary = chain.fds[*pa.primary_index];
    for (const auto& a : decl.attributes) {
      if (!primary.rhs.count(a)) continue;
      const Term& t = atom.terms[decl.attribute_index(a)];
      if (t.is_variable()) return t.text;
    }
  }
  return std::nullopt;
}

namespace detail {

inline bool is_safe_rec(const CanonicalCover& cover, const ConjunctiveQuery& q,
                        std::vector<SafetyStep>& trace, const std::string& pool,
                        std::size_t depth, SafetyStats* stats) {
  if (stats) ++stats->calls;

  std::vector<Atom> comp = complex_part(cover, q);
  if (comp.empty()) {
    trace.push_back({"empty-complex-part", ""});
    return true;
  }

  std::vector<std::vector<Atom>> comps = variable_components(q);
  if (comps.size() > 1) {
    trace.push_back({"disjoint-union", std::to_string(comps.size()) + " components"});
    std::vector<Atom> rest;
    for (std::size_t i = 1; i < comps.size(); ++i)
      rest.insert(rest.end(), comps[i].begin(), comps[i].end());
    ConjunctiveQuery q1(comps[0]);
    ConjunctiveQuery q2(rest);
    return is_safe_rec(cover, q1, trace, pool, depth, stats) &&
           is_safe_rec(cover, q2, trace, pool, depth, stats);
  }

  if (auto shared = shared_pvar_variable(cover, q, comp)) {
    std::string c = fresh_constant(pool, depth);
    trace.push_back({"shared-primary-lhs-variable", *shared});
    return is_safe_rec(cover, substitute(q, *shared, c), trace, pool, depth + 1, stats);
  }

  if (auto rhs_var = primary_rhs_variable(cover, q, comp)) {
    std::string c = fresh_constant(pool, depth);
    trace.push_back({"primary-rhs-variable", *rhs_var});
    return is_safe_rec(cover, substitute(q, *rhs_var, c), trace, pool, depth + 1, stats);
  }

  trace.push_back({"unsafe", "no rule applies"});
  return false;
}

}  // namespace detail

/// Decides query safety for a canonical LHS-chain FD set, recording the
/// applied rules. The fresh-constant pool is injectable so tests can verify
/// the verdict is independent of the chosen constants.
inline SafetyResult is_safe(const CanonicalCover& cover, const ConjunctiveQuery& q,
                            SafetyStats* stats = nullptr, const std::string& pool = "\x01s") {
  if (!q.self_join_free()) throw PreconditionError("is_safe: query has self-joins");
  if (!has_lhs_chain(cover)) throw PreconditionError("is_safe: FD set has no LHS chain");
  SafetyResult r;
  r.safe = detail::is_safe_rec(cover, q, r.trace, pool, 0, stats);
  return r;
}

struct SafetyVerdict {
  bool chain_ok = false;
  bool safe = false;
  Complexity complexity = Complexity::SharpPComplete;
  std::vector<SafetyStep> trace;
};

/// The dichotomy classifier: counting repairs entailing Q is in FP iff the
/// canonical cover has an LHS chain and Q is safe; otherwise #P-complete.
inline SafetyVerdict classify(const Schema& schema, const FDSet& sigma,
                              const ConjunctiveQuery& q) {
  if (!q.self_join_free())
    throw PreconditionError("classify: query has self-joins; the dichotomy covers SJFCQs only");
  CanonicalCover cover = canonical_cover(schema, sigma);
  SafetyVerdict v;
  v.chain_ok = has_lhs_chain(cover);
  if (!v.chain_ok) {
    v.safe = false;
    v.trace.push_back({"no-lhs-chain", "hard for every SJFCQ"});
  } else {
    SafetyResult r = is_safe(cover, q);
    v.safe = r.safe;
    v.trace = std::move(r.trace);
  }
  v.complexity = (v.chain_ok && v.safe) ? Complexity::InFP : Complexity::SharpPComplete;
  return v;
}

}  // namespace repcount
