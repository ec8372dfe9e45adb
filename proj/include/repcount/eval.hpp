#pragma once

#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "repcount/fd_analysis.hpp"
#include "repcount/model.hpp"
#include "repcount/numeric.hpp"
#include "repcount/repair_core.hpp"
#include "repcount/safety.hpp"

namespace repcount {

struct EvalStats {
  std::uint64_t calls = 0;
};

namespace detail {

inline std::string database_key(const Database& d) {
  std::ostringstream os;
  for (const Fact& f : d.facts()) {
    os << f.relation << '(';
    for (const auto& v : f.values) os << v << ',';
    os << ");";
  }
  return os.str();
}

inline std::string query_key(const ConjunctiveQuery& q) {
  std::ostringstream os;
  for (const Atom& a : q.atoms()) {
    os << a.relation << '(';
    for (const Term& t : a.terms) os << (t.is_variable() ? '?' : '=') << t.text << ',';
    os << ");";
  }
  return os.str();
}

}  // namespace detail

/// Base case of Eval: when comp(Q, Sigma) is empty, the repairs entailing Q
/// are exactly the repairs of D minus the conflicting facts.
inline ExactRatio rel_freq_base(const Database& d, const CanonicalCover& cover,
                                const ConjunctiveQuery& q) {
  if (!complex_part(cover, q).empty())
    throw Error("rel_freq_base: complex part is not empty");
  if (!entails(d, q)) return 0;
  Trim t = trim(d, cover, q);
  BigCount entailing = count_repairs(d.without(t.d_conf.facts()), cover);
  BigCount total = count_repairs(d, cover);
  return ExactRatio(entailing, total);
}

namespace detail {

using EvalMemo = std::map<std::string, ExactRatio>;

inline ExactRatio eval_rec(const Database& d, const CanonicalCover& cover,
                           const ConjunctiveQuery& q, EvalMemo& memo, EvalStats* stats) {
  if (stats) ++stats->calls;
  const std::string key = database_key(d) + "#" + query_key(q);
  if (auto it = memo.find(key); it != memo.end()) return it->second;

  ExactRatio result;
  if (!entails(d, q)) {
    result = 0;
  } else {
    std::vector<Atom> comp = complex_part(cover, q);
    if (comp.empty()) {
      result = rel_freq_base(d, cover, q);
    } else {
      std::vector<std::vector<Atom>> comps = detail::variable_components(q);
      if (comps.size() > 1) {
        std::vector<Atom> rest;
        for (std::size_t i = 1; i < comps.size(); ++i)
          rest.insert(rest.end(), comps[i].begin(), comps[i].end());
        result = eval_rec(d, cover, ConjunctiveQuery(comps[0]), memo, stats) *
                 eval_rec(d, cover, ConjunctiveQuery(rest), memo, stats);
      } else if (auto shared = shared_pvar_variable(cover, q, comp)) {
        // rfreq(Q) = (1 - prod_c (1 - rfreq(Q_{x->c}) over D^{Sigma,Q})) * R
        Trim t = trim(d, cover, q);
        ExactRatio ratio(count_repairs(d.without(t.d_conf.facts()), cover),
                         count_repairs(d, cover));
        ExactRatio prod = 1;
        for (const std::string& c : d.active_domain()) {
          ExactRatio sub = eval_rec(t.d_core, cover, substitute(q, *shared, c), memo, stats);
          prod *= (ExactRatio(1) - sub);
        }
        result = (ExactRatio(1) - prod) * ratio;
      } else if (auto rhs_var = primary_rhs_variable(cover, q, comp)) {
        // rfreq(Q) = sum_c rfreq(Q_{x->c})
        ExactRatio sum = 0;
        for (const std::string& c : d.active_domain())
          sum += eval_rec(d, cover, substitute(q, *rhs_var, c), memo, stats);
        result = sum;
      } else {
        throw PreconditionError(
            "rel_freq: query is not safe; exact counting is #P-hard, use approx");
      }
    }
  }
  memo.emplace(key, result);
  return result;
}

}  // namespace detail

/// Exact relative frequency of a safe SJFCQ under LHS-chain FDs. All
/// arithmetic is in exact rationals.
inline ExactRatio rel_freq(const Database& d, const CanonicalCover& cover,
                           const ConjunctiveQuery& q, EvalStats* stats = nullptr) {
  if (!q.self_join_free())
    throw PreconditionError("rel_freq: query has self-joins; use approx or the oracle");
  if (!has_lhs_chain(cover))
    throw PreconditionError(
        "rel_freq: FD set has no LHS chain (up to equivalence); use approx or the oracle");
  if (!is_safe(cover, q).safe)
    throw PreconditionError("rel_freq: query is not safe w.r.t. the FDs; use approx or the oracle");
  detail::EvalMemo memo;
  return detail::eval_rec(d, cover, q, memo, stats);
}

inline ExactRatio rel_freq(const Database& d, const FDSet& sigma, const ConjunctiveQuery& q,
                           EvalStats* stats = nullptr) {
  return rel_freq(d, canonical_cover(d.schema(), sigma), q, stats);
}

/// Exact number of repairs entailing Q: rfreq * #repairs, always an integer.
inline BigCount count_entailing(const Database& d, const CanonicalCover& cover,
                                const ConjunctiveQuery& q) {
  ExactRatio product = rel_freq(d, cover, q) * ExactRatio(count_repairs(d, cover));
  if (ratio_denom(product) != 1)
    throw Error("count_entailing: non-integer result; this is a bug");
  return ratio_numer(product);
}

inline BigCount count_entailing(const Database& d, const FDSet& sigma,
                                const ConjunctiveQuery& q) {
  return count_entailing(d, canonical_cover(d.schema(), sigma), q);
}

}  // namespace repcount
