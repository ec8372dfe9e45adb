#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "repcount/fd_analysis.hpp"
#include "repcount/model.hpp"
#include "repcount/numeric.hpp"

namespace repcount {

struct OracleCapError : Error {
  using Error::Error;
};

inline bool satisfies_fd(const Fact& f, const Fact& g, const FD& fd, const RelationDecl& decl) {
  for (const auto& a : fd.lhs)
    if (f.values[decl.attribute_index(a)] != g.values[decl.attribute_index(a)]) return true;
  for (const auto& a : fd.rhs)
    if (f.values[decl.attribute_index(a)] != g.values[decl.attribute_index(a)]) return false;
  return true;
}

/// {f,g} violates Sigma_R. Facts over distinct relations are never in conflict.
inline bool in_conflict(const Fact& f, const Fact& g, const FDSet& sigma, const Schema& schema) {
  if (f.relation != g.relation) return false;
  const RelationDecl& decl = schema.at(f.relation);
  for (const auto& fd : sigma.for_relation(f.relation))
    if (!satisfies_fd(f, g, fd, decl)) return true;
  return false;
}

inline bool consistent(const Database& d, const FDSet& sigma) {
  const auto& facts = d.facts();
  for (std::size_t i = 0; i < facts.size(); ++i)
    for (std::size_t j = i + 1; j < facts.size(); ++j)
      if (in_conflict(facts[i], facts[j], sigma, d.schema())) return false;
  return true;
}

inline bool consistent_facts(const std::vector<Fact>& facts, const FDSet& sigma,
                             const Schema& schema) {
  for (std::size_t i = 0; i < facts.size(); ++i)
    for (std::size_t j = i + 1; j < facts.size(); ++j)
      if (in_conflict(facts[i], facts[j], sigma, schema)) return false;
  return true;
}

namespace detail {

inline std::vector<std::vector<Fact>> group_by_attrs(const std::vector<Fact>& facts,
                                                     const std::set<std::string>& attrs,
                                                     const RelationDecl& decl) {
  std::vector<std::size_t> idx;
  for (const auto& a : attrs) idx.push_back(decl.attribute_index(a));
  std::sort(idx.begin(), idx.end());
  std::map<std::vector<std::string>, std::vector<Fact>> groups;
  for (const Fact& f : facts) {
    std::vector<std::string> key;
    key.reserve(idx.size());
    for (auto i : idx) key.push_back(f.values[i]);
    groups[std::move(key)].push_back(f);
  }
  std::vector<std::vector<Fact>> out;
  out.reserve(groups.size());
  for (auto& [key, g] : groups) out.push_back(std::move(g));
  return out;
}

}  // namespace detail

/// Maximal groups of R-facts agreeing on X.
inline std::vector<std::vector<Fact>> blocks(const std::vector<Fact>& rel_facts, const FD& fd,
                                             const RelationDecl& decl) {
  return detail::group_by_attrs(rel_facts, fd.lhs, decl);
}

/// Maximal groups of R-facts agreeing on X and Y.
inline std::vector<std::vector<Fact>> subblocks(const std::vector<Fact>& rel_facts, const FD& fd,
                                                const RelationDecl& decl) {
  std::set<std::string> xy = fd.lhs;
  xy.insert(fd.rhs.begin(), fd.rhs.end());
  return detail::group_by_attrs(rel_facts, xy, decl);
}

/// The (R, Lambda)-blocktree: root labeled D_R at level 0; children of an
/// even-level node at 2i are the blocks of its label w.r.t. the (i+1)-th
/// chain FD, children of an odd-level node at 2i+1 its subblocks; leaves sit
/// at level 2n and carry consistent labels. Each node also stores the number
/// of repairs of its label (leaf 1, even level product of children, odd
/// level sum of children). An empty root has no children and one repair.
struct BlocktreeNode {
  std::vector<Fact> label;
  int level = 0;
  std::vector<std::size_t> children;
  BigCount repairs = 0;
};

struct Blocktree {
  std::string relation;
  LhsChain chain;
  std::vector<BlocktreeNode> nodes;  // nodes[0] is the root

  const BlocktreeNode& root() const { return nodes.front(); }
  const BigCount& repair_count() const { return nodes.front().repairs; }
  int height() const { return 2 * static_cast<int>(chain.length()); }
};

inline Blocktree build_blocktree(const Database& d, const CanonicalCover& cover,
                                 const std::string& relation) {
  const RelationDecl& decl = cover.schema().at(relation);
  Blocktree tree;
  tree.relation = relation;
  tree.chain = lhs_chain(cover, relation);
  const int leaf_level = 2 * static_cast<int>(tree.chain.length());

  tree.nodes.push_back(BlocktreeNode{d.facts_of(relation), 0, {}, 0});

  auto expand = [&](auto&& self, std::size_t node_idx) -> void {
    const int level = tree.nodes[node_idx].level;
    if (tree.nodes[node_idx].label.empty()) {  // only possible at the root
      tree.nodes[node_idx].repairs = 1;
      return;
    }
    if (level == leaf_level) {
      tree.nodes[node_idx].repairs = 1;
      return;
    }
    const bool even = level % 2 == 0;
    const std::size_t fd_idx = even ? static_cast<std::size_t>(level / 2)
                                    : static_cast<std::size_t>((level - 1) / 2);
    const FD& fd = tree.chain.fds[fd_idx];
    std::vector<std::vector<Fact>> parts = even ? blocks(tree.nodes[node_idx].label, fd, decl)
                                                : subblocks(tree.nodes[node_idx].label, fd, decl);
    std::vector<std::size_t> child_ids;
    for (auto& part : parts) {
      std::size_t id = tree.nodes.size();
      tree.nodes.push_back(BlocktreeNode{std::move(part), level + 1, {}, 0});
      child_ids.push_back(id);
    }
    tree.nodes[node_idx].children = child_ids;
    BigCount total = even ? 1 : 0;
    for (std::size_t id : child_ids) {
      self(self, id);
      if (even)
        total *= tree.nodes[id].repairs;
      else
        total += tree.nodes[id].repairs;
    }
    tree.nodes[node_idx].repairs = std::move(total);
  };
  expand(expand, 0);
  return tree;
}

/// Number of repairs; polynomial in the database size for LHS-chain FDs.
inline BigCount count_repairs(const Database& d, const CanonicalCover& cover) {
  if (!has_lhs_chain(cover))
    throw PreconditionError(
        "FD set has no LHS chain (up to equivalence); exact counting is #P-hard, "
        "use the brute-force oracle or the approximate counter");
  BigCount total = 1;
  for (const auto& entry : cover.schema().relations()) {
    const std::string& rel = entry.first;
    if (d.facts_of(rel).empty()) continue;  // the empty database is its own unique repair
    total *= build_blocktree(d, cover, rel).repair_count();
  }
  return total;
}

inline BigCount count_repairs(const Database& d, const FDSet& sigma) {
  return count_repairs(d, canonical_cover(d.schema(), sigma));
}

struct OracleOptions {
  std::size_t max_facts = 25;
};

/// Brute-force repair oracle: enumerates the maximal independent sets of the
/// conflict graph (Bron-Kerbosch with pivoting on the compatibility graph).
/// Works for arbitrary FDs; guarded by a fact-count cap.
inline std::vector<Database> enumerate_repairs(const Database& d, const FDSet& sigma,
                                               const OracleOptions& opts = {}) {
  const std::size_t n = d.size();
  if (n > opts.max_facts || n > 64)
    throw OracleCapError("oracle cap exceeded: " + std::to_string(n) + " facts (cap " +
                         std::to_string(std::min<std::size_t>(opts.max_facts, 64)) + ")");
  const auto& facts = d.facts();

  std::vector<std::uint64_t> compat(n, 0);  // complement of the conflict graph
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (!in_conflict(facts[i], facts[j], sigma, d.schema())) {
        compat[i] |= std::uint64_t(1) << j;
        compat[j] |= std::uint64_t(1) << i;
      }

  std::vector<std::uint64_t> cliques;
  auto bron_kerbosch = [&](auto&& self, std::uint64_t r, std::uint64_t p, std::uint64_t x) -> void {
    if (p == 0 && x == 0) {
      cliques.push_back(r);
      return;
    }
    std::uint64_t px = p | x;
    std::size_t pivot = 0;
    int best = -1;
    for (std::uint64_t m = px; m != 0; m &= m - 1) {
      std::size_t u = static_cast<std::size_t>(std::countr_zero(m));
      int deg = std::popcount(p & compat[u]);
      if (deg > best) {
        best = deg;
        pivot = u;
      }
    }
    std::uint64_t cand = p & ~compat[pivot];
    while (cand != 0) {
      std::size_t v = static_cast<std::size_t>(std::countr_zero(cand));
      std::uint64_t bit = std::uint64_t(1) << v;
      self(self, r | bit, p & compat[v], x & compat[v]);
      p &= ~bit;
      x |= bit;
      cand &= ~bit;
    }
  };
  std::uint64_t all = n == 64 ? ~std::uint64_t(0) : (std::uint64_t(1) << n) - 1;
  if (n == 0) {
    cliques.push_back(0);  // the empty database has exactly one repair
  } else {
    bron_kerbosch(bron_kerbosch, 0, all, 0);
  }

  std::vector<Database> out;
  out.reserve(cliques.size());
  for (std::uint64_t mask : cliques) {
    std::vector<Fact> chosen;
    for (std::uint64_t m = mask; m != 0; m &= m - 1)
      chosen.push_back(facts[static_cast<std::size_t>(std::countr_zero(m))]);
    out.push_back(d.empty_like().with_facts(std::move(chosen)));
  }
  std::sort(out.begin(), out.end());
  return out;
}

namespace detail {

// Fixed-width bitset over w 64-bit words, enough for the counting oracle.
struct WordMask {
  std::vector<std::uint64_t> w;
  explicit WordMask(std::size_t words) : w(words, 0) {}
  void set(std::size_t i) { w[i / 64] |= std::uint64_t(1) << (i % 64); }
  bool any() const {
    for (auto x : w)
      if (x) return true;
    return false;
  }
  int popcount_and(const WordMask& o) const {
    int n = 0;
    for (std::size_t i = 0; i < w.size(); ++i) n += std::popcount(w[i] & o.w[i]);
    return n;
  }
};

}  // namespace detail

/// Count-only variant of the brute-force oracle; does not materialize the
/// repairs, so it scales to somewhat larger gadgets (cap 128 facts).
inline BigCount count_repairs_oracle(const Database& d, const FDSet& sigma,
                                     std::size_t max_facts = 128) {
  const std::size_t n = d.size();
  if (n > max_facts || n > 128)
    throw OracleCapError("oracle cap exceeded: " + std::to_string(n) + " facts (cap " +
                         std::to_string(std::min<std::size_t>(max_facts, 128)) + ")");
  if (n == 0) return 1;
  const auto& facts = d.facts();
  const std::size_t words = (n + 63) / 64;

  std::vector<detail::WordMask> compat(n, detail::WordMask(words));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (!in_conflict(facts[i], facts[j], sigma, d.schema())) {
        compat[i].set(j);
        compat[j].set(i);
      }

  BigCount count = 0;
  auto bron_kerbosch = [&](auto&& self, detail::WordMask p, detail::WordMask x) -> void {
    if (!p.any() && !x.any()) {
      ++count;
      return;
    }
    std::size_t pivot = 0;
    int best = -1;
    for (std::size_t w = 0; w < words; ++w)
      for (std::uint64_t m = p.w[w] | x.w[w]; m != 0; m &= m - 1) {
        std::size_t u = w * 64 + static_cast<std::size_t>(std::countr_zero(m));
        int deg = p.popcount_and(compat[u]);
        if (deg > best) {
          best = deg;
          pivot = u;
        }
      }
    std::vector<std::size_t> candidates;
    for (std::size_t w = 0; w < words; ++w)
      for (std::uint64_t m = p.w[w] & ~compat[pivot].w[w]; m != 0; m &= m - 1)
        candidates.push_back(w * 64 + static_cast<std::size_t>(std::countr_zero(m)));
    for (std::size_t v : candidates) {
      detail::WordMask np(words), nx(words);
      for (std::size_t ww = 0; ww < words; ++ww) {
        np.w[ww] = p.w[ww] & compat[v].w[ww];
        nx.w[ww] = x.w[ww] & compat[v].w[ww];
      }
      self(self, np, nx);
      p.w[v / 64] &= ~(std::uint64_t(1) << (v % 64));
      x.w[v / 64] |= std::uint64_t(1) << (v % 64);
    }
  };
  detail::WordMask all(words);
  for (std::size_t i = 0; i < n; ++i) all.set(i);
  bron_kerbosch(bron_kerbosch, all, detail::WordMask(words));
  return count;
}

/// candidate is a maximal consistent subset of d.
inline bool is_repair(const Database& candidate, const Database& d, const FDSet& sigma) {
  if (!d.contains_all(candidate.facts())) return false;
  if (!consistent(candidate, sigma)) return false;
  for (const Fact& f : d.facts()) {
    if (candidate.contains(f)) continue;
    bool blocked = false;
    for (const Fact& g : candidate.facts())
      if (in_conflict(f, g, sigma, d.schema())) {
        blocked = true;
        break;
      }
    if (!blocked) return false;  // f could still be added
  }
  return true;
}

inline BigCount count_entailing_oracle(const Database& d, const FDSet& sigma,
                                       const ConjunctiveQuery& q, const OracleOptions& opts = {}) {
  BigCount n = 0;
  for (const Database& rep : enumerate_repairs(d, sigma, opts))
    if (entails(rep, q)) ++n;
  return n;
}

}  // namespace repcount
