#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "repcount/model.hpp"

namespace repcount {

/// Functional dependency R : X -> Y over attribute names of R.
struct FD {
  std::string relation;
  std::set<std::string> lhs;
  std::set<std::string> rhs;

  FD() = default;
  FD(std::string rel, std::set<std::string> x, std::set<std::string> y)
      : relation(std::move(rel)), lhs(std::move(x)), rhs(std::move(y)) {}

  auto operator<=>(const FD&) const = default;

  std::string to_string() const {
    std::ostringstream os;
    os << relation << ": {";
    bool first = true;
    for (const auto& a : lhs) os << (first ? "" : ",") << a, first = false;
    os << "} -> {";
    first = true;
    for (const auto& a : rhs) os << (first ? "" : ",") << a, first = false;
    os << "}";
    return os.str();
  }
};

class FDSet {
 public:
  FDSet() = default;
  explicit FDSet(std::vector<FD> fds) {
    for (auto& fd : fds) add(std::move(fd));
  }

  void add(FD fd) {
    auto it = std::lower_bound(fds_.begin(), fds_.end(), fd);
    if (it != fds_.end() && *it == fd) return;
    fds_.insert(it, std::move(fd));
  }

  const std::vector<FD>& fds() const { return fds_; }
  bool empty() const { return fds_.empty(); }

  /// Sigma_R: the FDs over one relation.
  std::vector<FD> for_relation(const std::string& relation) const {
    std::vector<FD> out;
    for (const auto& fd : fds_)
      if (fd.relation == relation) out.push_back(fd);
    return out;
  }

  std::vector<std::string> relations() const {
    std::set<std::string> rels;
    for (const auto& fd : fds_) rels.insert(fd.relation);
    return {rels.begin(), rels.end()};
  }

  void validate(const Schema& schema) const {
    for (const auto& fd : fds_) {
      const RelationDecl& decl = schema.at(fd.relation);
      for (const auto& a : fd.lhs)
        if (!decl.has_attribute(a)) throw Error("FD " + fd.to_string() + ": unknown attribute " + a);
      for (const auto& a : fd.rhs)
        if (!decl.has_attribute(a)) throw Error("FD " + fd.to_string() + ": unknown attribute " + a);
    }
  }

  bool operator==(const FDSet&) const = default;

 private:
  std::vector<FD> fds_;  // sorted, unique
};

/// Smallest superset of `attrs` closed under the given FDs of one relation.
inline std::set<std::string> attribute_closure(const RelationDecl& decl,
                                               const std::set<std::string>& attrs,
                                               const std::vector<FD>& fds) {
  for (const auto& a : attrs)
    if (!decl.has_attribute(a))
      throw Error("attribute_closure: unknown attribute " + a + " of " + decl.name);
  std::set<std::string> closure = attrs;
  bool changed = true;
  while (changed) {
    changed = false;
    for (const auto& fd : fds) {
      if (!std::includes(closure.begin(), closure.end(), fd.lhs.begin(), fd.lhs.end())) continue;
      for (const auto& a : fd.rhs)
        if (closure.insert(a).second) changed = true;
    }
  }
  return closure;
}

namespace detail {

// Attribute set ordered by declared position, used to order FDs deterministically.
inline std::vector<std::size_t> attr_indices(const RelationDecl& decl,
                                             const std::set<std::string>& attrs) {
  std::vector<std::size_t> idx;
  idx.reserve(attrs.size());
  for (const auto& a : attrs) idx.push_back(decl.attribute_index(a));
  std::sort(idx.begin(), idx.end());
  return idx;
}

struct UnitFd {
  std::set<std::string> lhs;
  std::string rhs;
};

inline std::set<std::string> unit_closure(const std::set<std::string>& attrs,
                                          const std::vector<UnitFd>& fds,
                                          std::size_t skip = static_cast<std::size_t>(-1)) {
  std::set<std::string> closure = attrs;
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t i = 0; i < fds.size(); ++i) {
      if (i == skip) continue;
      if (!std::includes(closure.begin(), closure.end(), fds[i].lhs.begin(), fds[i].lhs.end()))
        continue;
      if (closure.insert(fds[i].rhs).second) changed = true;
    }
  }
  return closure;
}

}  // namespace detail

/// Minimal cover: no redundant FDs, no redundant LHS attributes, trivial FDs
/// removed, at most one FD per (relation, lhs). Computed with a fixed pass
/// order so the result is deterministic.
class CanonicalCover {
 public:
  CanonicalCover(Schema schema, FDSet origin) : schema_(std::move(schema)), origin_(std::move(origin)) {
    origin_.validate(schema_);
    for (const auto& rel : origin_.relations()) {
      const RelationDecl& decl = schema_.at(rel);
      std::vector<FD> canon = canonicalize_relation(decl, origin_.for_relation(rel));
      for (auto& fd : canon) cover_.add(std::move(fd));
    }
  }

  const Schema& schema() const { return schema_; }
  const FDSet& cover() const { return cover_; }
  const FDSet& origin() const { return origin_; }

  /// Canonical FDs of one relation, ordered by (lhs, rhs) in declared
  /// attribute order.
  std::vector<FD> for_relation(const std::string& relation) const {
    std::vector<FD> fds = cover_.for_relation(relation);
    const RelationDecl& decl = schema_.at(relation);
    std::sort(fds.begin(), fds.end(), [&](const FD& a, const FD& b) {
      auto ka = std::make_pair(detail::attr_indices(decl, a.lhs), detail::attr_indices(decl, a.rhs));
      auto kb = std::make_pair(detail::attr_indices(decl, b.lhs), detail::attr_indices(decl, b.rhs));
      return ka < kb;
    });
    return fds;
  }

 private:
  static std::vector<FD> canonicalize_relation(const RelationDecl& decl, std::vector<FD> fds) {
    using detail::UnitFd;

    // Split into single-attribute right-hand sides and drop trivial parts.
    std::vector<UnitFd> work;
    for (const auto& fd : fds)
      for (const auto& b : fd.rhs)
        if (!fd.lhs.count(b)) work.push_back({fd.lhs, b});
    auto unit_key = [&](const UnitFd& u) {
      return std::make_pair(detail::attr_indices(decl, u.lhs), decl.attribute_index(u.rhs));
    };
    std::sort(work.begin(), work.end(),
              [&](const UnitFd& a, const UnitFd& b) { return unit_key(a) < unit_key(b); });
    work.erase(std::unique(work.begin(), work.end(),
                           [&](const UnitFd& a, const UnitFd& b) {
                             return a.lhs == b.lhs && a.rhs == b.rhs;
                           }),
               work.end());

    // Drop extraneous LHS attributes.
    bool changed = true;
    while (changed) {
      changed = false;
      for (auto& u : work) {
        for (const auto& attr : decl.attributes) {
          if (!u.lhs.count(attr)) continue;
          std::set<std::string> reduced = u.lhs;
          reduced.erase(attr);
          if (detail::unit_closure(reduced, work).count(u.rhs)) {
            u.lhs = std::move(reduced);
            changed = true;
          }
        }
      }
    }

    // Drop redundant FDs.
    for (std::size_t i = 0; i < work.size();) {
      if (detail::unit_closure(work[i].lhs, work, i).count(work[i].rhs)) {
        work.erase(work.begin() + static_cast<std::ptrdiff_t>(i));
      } else {
        ++i;
      }
    }

    // Merge same-LHS FDs back together.
    std::map<std::set<std::string>, std::set<std::string>> merged;
    for (const auto& u : work) merged[u.lhs].insert(u.rhs);
    std::vector<FD> out;
    for (auto& [lhs, rhs] : merged)
      if (!rhs.empty()) out.emplace_back(decl.name, lhs, rhs);
    return out;
  }

  Schema schema_;
  FDSet origin_;
  FDSet cover_;
};

inline CanonicalCover canonical_cover(const Schema& schema, const FDSet& sigma) {
  return CanonicalCover(schema, sigma);
}

/// The unique LHS chain R : X_1 -> Y_1, ..., X_n -> Y_n of a canonical
/// relation with X_i strictly nested, X_i disjoint from every Y_j and the
/// Y_i pairwise disjoint. May be empty when the relation has no FDs.
struct LhsChain {
  std::string relation;
  std::vector<FD> fds;

  std::size_t length() const { return fds.size(); }
};

inline bool relation_has_lhs_chain(const CanonicalCover& cover, const std::string& relation) {
  std::vector<FD> fds = cover.for_relation(relation);
  for (std::size_t i = 0; i < fds.size(); ++i)
    for (std::size_t j = i + 1; j < fds.size(); ++j) {
      const auto& a = fds[i].lhs;
      const auto& b = fds[j].lhs;
      bool a_in_b = std::includes(b.begin(), b.end(), a.begin(), a.end());
      bool b_in_a = std::includes(a.begin(), a.end(), b.begin(), b.end());
      if (!a_in_b && !b_in_a) return false;
    }
  return true;
}

inline bool has_lhs_chain(const CanonicalCover& cover) {
  for (const auto& rel : cover.cover().relations())
    if (!relation_has_lhs_chain(cover, rel)) return false;
  return true;
}

/// Chain detection "up to equivalence": canonicalize, then check inclusion.
inline bool has_lhs_chain(const Schema& schema, const FDSet& sigma) {
  return has_lhs_chain(canonical_cover(schema, sigma));
}

inline LhsChain lhs_chain(const CanonicalCover& cover, const std::string& relation) {
  if (!relation_has_lhs_chain(cover, relation))
    throw PreconditionError("FDs of " + relation + " have no LHS chain");
  std::vector<FD> fds = cover.for_relation(relation);
  std::sort(fds.begin(), fds.end(),
            [](const FD& a, const FD& b) { return a.lhs.size() < b.lhs.size(); });
  // Canonical chain invariants; a violation here is an internal error.
  std::set<std::string> seen_rhs;
  for (std::size_t i = 0; i < fds.size(); ++i) {
    if (i + 1 < fds.size()) {
      const auto& x1 = fds[i].lhs;
      const auto& x2 = fds[i + 1].lhs;
      if (x1.size() >= x2.size() || !std::includes(x2.begin(), x2.end(), x1.begin(), x1.end()))
        throw Error("lhs_chain: canonical chain of " + relation + " is not strictly nested");
    }
    for (const auto& a : fds[i].rhs) {
      if (!seen_rhs.insert(a).second)
        throw Error("lhs_chain: overlapping RHS in chain of " + relation);
      for (const auto& fd : fds)
        if (fd.lhs.count(a)) throw Error("lhs_chain: RHS attribute in an LHS of " + relation);
    }
  }
  return {relation, std::move(fds)};
}

/// Primary FD machinery of an atom w.r.t. a canonical chain.
struct PrimaryAnalysis {
  std::string relation;
  std::optional<std::size_t> primary_index;  // into the chain
  std::set<std::string> primary_lhs;
  std::set<std::string> non_primary_lhs;
  std::vector<FD> primary_prefix;
  std::set<std::string> pvar;  // variables at primary-lhs positions

  std::optional<FD> primary_fd(const LhsChain& chain) const {
    if (!primary_index) return std::nullopt;
    return chain.fds[*primary_index];
  }
};

inline PrimaryAnalysis primary_analysis(const CanonicalCover& cover, const ConjunctiveQuery& q,
                                        const std::string& relation) {
  if (!q.self_join_free()) throw PreconditionError("primary_analysis: query has self-joins");
  const Atom* atom = q.atom_for(relation);
  if (!atom) throw Error("primary_analysis: relation " + relation + " does not occur in the query");
  const RelationDecl& decl = cover.schema().at(relation);
  LhsChain chain = lhs_chain(cover, relation);

  auto term_at = [&](const std::string& attr) -> const Term& {
    return atom->terms[decl.attribute_index(attr)];
  };

  PrimaryAnalysis pa;
  pa.relation = relation;
  for (std::size_t i = 0; i < chain.fds.size(); ++i) {
    std::set<std::string> xy = chain.fds[i].lhs;
    xy.insert(chain.fds[i].rhs.begin(), chain.fds[i].rhs.end());
    bool has_var = std::any_of(xy.begin(), xy.end(),
                               [&](const std::string& a) { return term_at(a).is_variable(); });
    if (has_var) {
      pa.primary_index = i;
      break;
    }
  }

  if (pa.primary_index) {
    pa.primary_lhs = chain.fds[*pa.primary_index].lhs;
    pa.primary_prefix.assign(chain.fds.begin(),
                             chain.fds.begin() + static_cast<std::ptrdiff_t>(*pa.primary_index));
  } else {
    pa.primary_lhs.insert(decl.attributes.begin(), decl.attributes.end());
    pa.primary_prefix = chain.fds;
  }
  for (const auto& a : decl.attributes)
    if (!pa.primary_lhs.count(a)) pa.non_primary_lhs.insert(a);
  for (const auto& a : pa.primary_lhs)
    if (term_at(a).is_variable()) pa.pvar.insert(term_at(a).text);
  return pa;
}

/// comp(Q, Sigma): atoms carrying a constant or liaison variable at a
/// non-primary-lhs position not covered by any primary-prefix FD.
inline std::vector<Atom> complex_part(const CanonicalCover& cover, const ConjunctiveQuery& q) {
  std::vector<std::string> liaison = q.liaison_variables();
  auto is_liaison = [&](const std::string& v) {
    return std::binary_search(liaison.begin(), liaison.end(), v);
  };

  std::vector<Atom> comp;
  for (const Atom& atom : q.atoms()) {
    PrimaryAnalysis pa = primary_analysis(cover, q, atom.relation);
    std::set<std::string> prefix_attrs;
    for (const auto& fd : pa.primary_prefix) {
      prefix_attrs.insert(fd.lhs.begin(), fd.lhs.end());
      prefix_attrs.insert(fd.rhs.begin(), fd.rhs.end());
    }
    const RelationDecl& decl = cover.schema().at(atom.relation);
    bool in_comp = false;
    for (const auto& a : pa.non_primary_lhs) {
      if (prefix_attrs.count(a)) continue;
      const Term& t = atom.terms[decl.attribute_index(a)];
      if (t.is_constant() || is_liaison(t.text)) {
        in_comp = true;
        break;
      }
    }
    if (in_comp) comp.push_back(atom);
  }
  return comp;
}

/// D_conf / D_ind / D_core split of a database w.r.t. the primary prefixes.
struct Trim {
  Database d_conf;
  Database d_ind;
  Database d_core;
};

inline Trim trim(const Database& d, const CanonicalCover& cover, const ConjunctiveQuery& q) {
  struct RelInfo {
    const Atom* atom;
    PrimaryAnalysis pa;
  };
  std::map<std::string, RelInfo> info;
  for (const Atom& atom : q.atoms())
    info.emplace(atom.relation, RelInfo{&atom, primary_analysis(cover, q, atom.relation)});

  std::vector<Fact> conf, ind, core;
  for (const Fact& f : d.facts()) {
    auto it = info.find(f.relation);
    if (it == info.end()) {
      core.push_back(f);
      continue;
    }
    const RelationDecl& decl = cover.schema().at(f.relation);
    const Atom& atom = *it->second.atom;
    auto atom_const_at = [&](const std::string& attr) -> const std::string& {
      const Term& t = atom.terms[decl.attribute_index(attr)];
      if (!t.is_constant()) throw Error("trim: primary-prefix position holds a variable");
      return t.text;
    };
    auto value_at = [&](const std::string& attr) -> const std::string& {
      return f.values[decl.attribute_index(attr)];
    };

    bool in_conf = false;
    bool in_ind = false;
    for (const FD& fd : it->second.pa.primary_prefix) {
      bool agrees_lhs = std::all_of(fd.lhs.begin(), fd.lhs.end(), [&](const std::string& a) {
        return value_at(a) == atom_const_at(a);
      });
      if (agrees_lhs) {
        bool disagrees_rhs = std::any_of(fd.rhs.begin(), fd.rhs.end(), [&](const std::string& a) {
          return value_at(a) != atom_const_at(a);
        });
        if (disagrees_rhs) {
          in_conf = true;
          break;
        }
      } else {
        in_ind = true;  // disagrees on some LHS attribute of the prefix
      }
    }
    if (in_conf)
      conf.push_back(f);
    else if (in_ind)
      ind.push_back(f);
    else
      core.push_back(f);
  }

  Database empty = d.empty_like();
  return Trim{empty.with_facts(std::move(conf)), empty.with_facts(std::move(ind)),
              empty.with_facts(std::move(core))};
}

}  // namespace repcount
