#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "repcount/fd_analysis.hpp"
#include "repcount/model.hpp"
#include "repcount/numeric.hpp"
#include "repcount/repair_core.hpp"
#include "repcount/sampler.hpp"

namespace repcount {

/// A consistent homomorphic image h(Q), with one witnessing substitution.
struct HomImage {
  std::vector<Fact> facts;  // sorted
  Substitution provenance;
};

/// All distinct consistent homomorphic images of Q in D, sorted. Enumeration
/// is exponential in |Q| only; the cap guards runaway queries.
inline std::vector<HomImage> hom_images(const ConjunctiveQuery& q, const Database& d,
                                        const FDSet& sigma, std::size_t image_cap = 1000000) {
  std::map<std::vector<Fact>, Substitution> images;
  for (const Substitution& h : enumerate_homomorphisms(q, d)) {
    std::vector<Fact> image = hom_image(q, h);
    if (!consistent_facts(image, sigma, d.schema())) continue;
    images.emplace(std::move(image), h);
    if (images.size() > image_cap)
      throw PreconditionError("hom_images: image cap exceeded (" + std::to_string(image_cap) + ")");
  }
  std::vector<HomImage> out;
  out.reserve(images.size());
  for (auto& [facts, h] : images) out.push_back(HomImage{facts, h});
  return out;
}

/// #rep(D, Sigma, H) for a consistent H: count after dropping the facts in
/// conflict with H.
inline BigCount count_conditional(const Database& d, const CanonicalCover& cover,
                                  const std::vector<Fact>& h) {
  if (!d.contains_all(h))
    throw PreconditionError("count_conditional: H is not a subset of the database");
  if (!consistent_facts(h, cover.origin(), d.schema()))
    throw PreconditionError("count_conditional: H is inconsistent w.r.t. the FDs");
  return count_repairs(d.without(facts_conflicting_with(d, cover.origin(), h)), cover);
}

inline BigCount count_conditional(const Database& d, const FDSet& sigma,
                                  const std::vector<Fact>& h) {
  return count_conditional(d, canonical_cover(d.schema(), sigma), h);
}

/// Least i with H_i a subset of the repair; the canonical index of the
/// Karp-Luby estimator.
inline std::optional<std::size_t> least_covered_index(const std::vector<HomImage>& images,
                                                      const Database& repair) {
  for (std::size_t i = 0; i < images.size(); ++i)
    if (repair.contains_all(images[i].facts)) return i;
  return std::nullopt;
}

struct ApproxParams {
  ExactRatio epsilon = ExactRatio(1, 5);
  ExactRatio delta = ExactRatio(1, 20);
  std::uint64_t seed = 0;
  std::size_t image_cap = 1000000;
};

struct ApproxResult {
  BigCount estimate;      // rounded to the nearest integer
  ExactRatio raw;         // S * successes / trials
  std::size_t num_images = 0;
  std::uint64_t num_trials = 0;
};

/// Karp-Luby union-of-sets estimator for #rep(D, Sigma, Q). Q may have
/// self-joins. The union members are the repair sets rep(D, Sigma, H_i) over
/// the consistent homomorphic images H_i; each trial picks an image
/// proportionally to its conditional count, samples one of its repairs
/// uniformly, and scores it iff the image is the least index covering the
/// sampled repair.
inline ApproxResult karp_luby_count(const Database& d, const FDSet& sigma,
                                    const ConjunctiveQuery& q, const ApproxParams& params) {
  if (params.epsilon <= 0) throw PreconditionError("karp_luby_count: epsilon must be positive");
  if (params.delta <= 0 || params.delta >= 1)
    throw PreconditionError("karp_luby_count: delta must be in (0,1)");
  CanonicalCover cover = canonical_cover(d.schema(), sigma);
  if (!has_lhs_chain(cover))
    throw PreconditionError("karp_luby_count: FD set has no LHS chain (up to equivalence)");

  std::vector<HomImage> images = hom_images(q, d, sigma, params.image_cap);
  ApproxResult res;
  res.num_images = images.size();
  if (images.empty()) {
    res.estimate = 0;
    res.raw = 0;
    return res;
  }

  std::vector<BigCount> counts;
  std::vector<RepairSampler> samplers;
  counts.reserve(images.size());
  samplers.reserve(images.size());
  BigCount total_weight = 0;
  for (const HomImage& img : images) {
    Database trimmed = d.without(facts_conflicting_with(d, sigma, img.facts));
    samplers.emplace_back(trimmed, cover);
    counts.push_back(samplers.back().repair_count());
    total_weight += counts.back();
  }

  // Chernoff-style trial count for a {0,1} estimator with success
  // probability at least 1/n: N = ceil(4 n ln(2/delta) / eps^2).
  const double eps = static_cast<double>(ratio_numer(params.epsilon)) /
                     static_cast<double>(ratio_denom(params.epsilon));
  const double delta = static_cast<double>(ratio_numer(params.delta)) /
                       static_cast<double>(ratio_denom(params.delta));
  const double raw_trials =
      std::ceil(4.0 * static_cast<double>(images.size()) * std::log(2.0 / delta) / (eps * eps));
  const std::uint64_t trials = raw_trials < 1.0 ? 1 : static_cast<std::uint64_t>(raw_trials);
  res.num_trials = trials;

  Rng rng(params.seed);
  std::uint64_t successes = 0;
  for (std::uint64_t t = 0; t < trials; ++t) {
    BigCount draw = rng.below(total_weight);
    std::size_t picked = 0;
    BigCount cumulative = 0;
    for (std::size_t i = 0; i < counts.size(); ++i) {
      cumulative += counts[i];
      if (draw < cumulative) {
        picked = i;
        break;
      }
    }
    Database repair = samplers[picked].sample(rng);
    if (least_covered_index(images, repair) == picked) ++successes;
  }

  res.raw = ExactRatio(total_weight * successes, trials);
  res.estimate = round_nearest(res.raw);
  return res;
}

struct MonteCarloResult {
  BigCount estimate;
  ExactRatio raw;
  std::uint64_t entailing_samples = 0;
};

/// Naive baseline: #rep(D, Sigma) times the fraction of uniform repair
/// samples entailing Q. Unusable when the relative frequency is
/// exponentially small, which is exactly what the low-frequency family
/// demonstrates.
inline MonteCarloResult monte_carlo_count(const Database& d, const FDSet& sigma,
                                          const ConjunctiveQuery& q, std::uint64_t samples,
                                          Rng& rng) {
  if (samples == 0) throw PreconditionError("monte_carlo_count: need at least one sample");
  CanonicalCover cover = canonical_cover(d.schema(), sigma);
  if (!has_lhs_chain(cover))
    throw PreconditionError("monte_carlo_count: FD set has no LHS chain (up to equivalence)");
  RepairSampler sampler(d, cover);
  std::uint64_t hits = 0;
  for (std::uint64_t i = 0; i < samples; ++i)
    if (entails(sampler.sample(rng), q)) ++hits;
  MonteCarloResult res;
  res.entailing_samples = hits;
  res.raw = ExactRatio(sampler.repair_count() * hits, samples);
  res.estimate = round_nearest(res.raw);
  return res;
}

}  // namespace repcount
