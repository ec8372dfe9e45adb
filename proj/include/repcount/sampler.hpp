#pragma once

#include <string>
#include <utility>
#include <vector>

#include "repcount/fd_analysis.hpp"
#include "repcount/model.hpp"
#include "repcount/numeric.hpp"
#include "repcount/repair_core.hpp"

namespace repcount {

namespace detail {

/// Walk a blocktree: keep all children of even-level nodes, choose one child
/// of an odd-level node with probability #rep(child)/#rep(node), and union
/// the reached leaf labels. Draws use exact big-integer cumulative weights.
inline void sample_from_tree(const Blocktree& tree, std::size_t node_idx, Rng& rng,
                             std::vector<Fact>& out) {
  const BlocktreeNode& node = tree.nodes[node_idx];
  if (node.children.empty()) {
    out.insert(out.end(), node.label.begin(), node.label.end());
    return;
  }
  for (std::size_t block_idx : node.children) {
    const BlocktreeNode& block = tree.nodes[block_idx];
    BigCount draw = rng.below(block.repairs);
    BigCount cumulative = 0;
    std::size_t chosen = block.children.back();
    for (std::size_t sub_idx : block.children) {
      cumulative += tree.nodes[sub_idx].repairs;
      if (draw < cumulative) {
        chosen = sub_idx;
        break;
      }
    }
    sample_from_tree(tree, chosen, rng, out);
  }
}

}  // namespace detail

/// Uniform member of rep(D_R, Sigma_R), as a database of R-facts.
inline Database r_sample(const Database& d, const CanonicalCover& cover,
                         const std::string& relation, Rng& rng) {
  Blocktree tree = build_blocktree(d, cover, relation);
  std::vector<Fact> chosen;
  detail::sample_from_tree(tree, 0, rng, chosen);
  return d.empty_like().with_facts(std::move(chosen));
}

/// Caches per-relation blocktrees so repeated draws from rep(D, Sigma) cost
/// one tree walk each.
class RepairSampler {
 public:
  RepairSampler(const Database& d, const CanonicalCover& cover) : db_(d), count_(1) {
    for (const auto& entry : d.schema().relations()) {
      const std::string& rel = entry.first;
      if (d.facts_of(rel).empty()) continue;
      trees_.push_back(build_blocktree(d, cover, rel));
      count_ *= trees_.back().repair_count();
    }
  }

  const BigCount& repair_count() const { return count_; }

  Database sample(Rng& rng) const {
    std::vector<Fact> chosen;
    for (const Blocktree& tree : trees_) detail::sample_from_tree(tree, 0, rng, chosen);
    return db_.empty_like().with_facts(std::move(chosen));
  }

 private:
  Database db_;
  std::vector<Blocktree> trees_;
  BigCount count_;
};

/// Uniform member of rep(D, Sigma).
inline Database sample_repair(const Database& d, const CanonicalCover& cover, Rng& rng) {
  if (!has_lhs_chain(cover))
    throw PreconditionError(
        "sample_repair: FD set has no LHS chain (up to equivalence); no polynomial sampler");
  return RepairSampler(d, cover).sample(rng);
}

inline Database sample_repair(const Database& d, const FDSet& sigma, Rng& rng) {
  return sample_repair(d, canonical_cover(d.schema(), sigma), rng);
}

/// Facts of D that conflict with the consistent fact set H; removing them
/// turns the unconditional sampler/counter into one for the repairs
/// containing H, since rep(D, Sigma, H) = rep(D minus these, Sigma).
inline std::vector<Fact> facts_conflicting_with(const Database& d, const FDSet& sigma,
                                                const std::vector<Fact>& h) {
  std::vector<Fact> removed;
  for (const Fact& f : d.facts())
    for (const Fact& g : h)
      if (in_conflict(f, g, sigma, d.schema())) {
        removed.push_back(f);
        break;
      }
  return removed;
}

/// Uniform member of the repairs of D that contain H.
inline Database sample_conditional(const Database& d, const FDSet& sigma,
                                   const std::vector<Fact>& h, Rng& rng) {
  if (!d.contains_all(h))
    throw PreconditionError("sample_conditional: H is not a subset of the database");
  if (!consistent_facts(h, sigma, d.schema()))
    throw PreconditionError("sample_conditional: H is inconsistent w.r.t. the FDs");
  Database trimmed = d.without(facts_conflicting_with(d, sigma, h));
  return sample_repair(trimmed, sigma, rng);
}

}  // namespace repcount
