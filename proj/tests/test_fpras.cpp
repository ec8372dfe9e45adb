#include <catch2/catch_amalgamated.hpp>

#include "repcount/eval.hpp"
#include "repcount/fpras.hpp"
#include "repcount/gen.hpp"
#include "support/testgen.hpp"

using namespace repcount;

TEST_CASE("hom_images") {
  rtest::EmployeeFixture fx;

  SECTION("no homomorphism means no images") {
    ConjunctiveQuery q({Atom("Employee", {Term::constant("9"), Term::variable("n"),
                                          Term::variable("d")})});
    CHECK(hom_images(q, fx.db, fx.sigma).empty());
  }

  SECTION("single atom produces one image per matching fact") {
    Schema s;
    s.add(RelationDecl("R", {"A", "B"}));
    Database d(s);
    d.insert(Fact("R", {"a", "b"}));
    d.insert(Fact("R", {"a", "c"}));
    ConjunctiveQuery q({Atom("R", {Term::variable("x"), Term::variable("y")})});
    auto images = hom_images(q, d, FDSet{});
    REQUIRE(images.size() == 2);
    for (const auto& img : images) CHECK(img.facts.size() == 1);
  }

  SECTION("self-join images on the running example keep only consistent ones") {
    auto images = hom_images(fx.same_dept_query(), fx.db, fx.sigma);
    // Both employees in IT; the HR fact cannot join.
    REQUIRE(images.size() == 2);
    for (const auto& img : images) {
      REQUIRE(img.facts.size() == 2);
      CHECK(img.facts[0] == Fact("Employee", {"1", "Bob", "IT"}));
      CHECK(consistent_facts(img.facts, fx.sigma, fx.schema));
    }
  }
}

TEST_CASE("count_conditional") {
  rtest::EmployeeFixture fx;

  SECTION("empty condition counts all repairs") {
    CHECK(count_conditional(fx.db, fx.sigma, {}) == 4);
  }

  SECTION("one fact halves the running example") {
    CHECK(count_conditional(fx.db, fx.sigma, {Fact("Employee", {"1", "Bob", "HR"})}) == 2);
  }

  SECTION("agrees with the oracle filter on random instances") {
    rtest::StdRng g(404);
    int checked = 0;
    while (checked < 60) {
      Schema s = rtest::random_schema(g, 3, 3);
      FDSet sigma = rtest::random_chain_fds(g, s);
      Database d = rtest::random_database(g, s, 12, 2);
      auto repairs = enumerate_repairs(d, sigma);
      // Condition on a random subset of a random repair.
      const Database& base = repairs[static_cast<std::size_t>(
          rtest::rint(g, 0, static_cast<int>(repairs.size()) - 1))];
      std::vector<Fact> h;
      for (const Fact& f : base.facts())
        if (rtest::coin(g, 0.5)) h.push_back(f);
      BigCount expected = 0;
      for (const Database& rep : repairs)
        if (rep.contains_all(h)) ++expected;
      REQUIRE(count_conditional(d, sigma, h) == expected);
      ++checked;
    }
  }
}

TEST_CASE("least_covered_index picks the first covering image") {
  rtest::EmployeeFixture fx;
  auto images = hom_images(fx.same_dept_query(), fx.db, fx.sigma);
  REQUIRE(images.size() == 2);
  for (const Database& rep : enumerate_repairs(fx.db, fx.sigma)) {
    auto idx = least_covered_index(images, rep);
    if (idx) {
      CHECK(rep.contains_all(images[*idx].facts));
      for (std::size_t j = 0; j < *idx; ++j) CHECK_FALSE(rep.contains_all(images[j].facts));
    } else {
      for (const auto& img : images) CHECK_FALSE(rep.contains_all(img.facts));
    }
  }
}

TEST_CASE("karp_luby_count") {
  rtest::EmployeeFixture fx;

  SECTION("no image means zero") {
    ConjunctiveQuery q({Atom("Employee", {Term::constant("9"), Term::variable("n"),
                                          Term::variable("d")})});
    ApproxResult r = karp_luby_count(fx.db, fx.sigma, q, ApproxParams{});
    CHECK(r.estimate == 0);
    CHECK(r.num_images == 0);
  }

  SECTION("a single image is counted exactly, any seed") {
    ConjunctiveQuery q({Atom("Employee", {Term::constant("1"), Term::variable("n"),
                                          Term::constant("HR")})});
    BigCount truth = count_entailing_oracle(fx.db, fx.sigma, q);
    for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
      ApproxParams params;
      params.seed = seed;
      ApproxResult r = karp_luby_count(fx.db, fx.sigma, q, params);
      REQUIRE(r.num_images == 1);
      CHECK(r.estimate == truth);
      CHECK(r.raw == ExactRatio(truth));
    }
  }

  SECTION("self-join query lands near the oracle value") {
    BigCount truth = count_entailing_oracle(fx.db, fx.sigma, fx.same_dept_query());
    REQUIRE(truth == 2);
    int ok = 0;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
      ApproxParams params;
      params.epsilon = ExactRatio(1, 5);
      params.delta = ExactRatio(1, 20);
      params.seed = seed;
      ApproxResult r = karp_luby_count(fx.db, fx.sigma, fx.same_dept_query(), params);
      if (r.raw >= ExactRatio(8, 5) && r.raw <= ExactRatio(12, 5)) ++ok;
    }
    CHECK(ok >= 48);
  }

  SECTION("deterministic under the seed") {
    ApproxParams params;
    params.seed = 99;
    ApproxResult a = karp_luby_count(fx.db, fx.sigma, fx.same_dept_query(), params);
    ApproxResult b = karp_luby_count(fx.db, fx.sigma, fx.same_dept_query(), params);
    CHECK(a.raw == b.raw);
    CHECK(a.estimate == b.estimate);
  }

  SECTION("matches the exact counter within epsilon on safe queries") {
    rtest::StdRng g(1999);
    int checked = 0;
    while (checked < 8) {
      Schema s = rtest::random_schema(g, 3, 3);
      FDSet sigma = rtest::random_chain_fds(g, s);
      ConjunctiveQuery q = rtest::random_query(g, s, 2, 2);
      if (classify(s, sigma, q).complexity != Complexity::InFP) continue;
      Database d = rtest::random_database(g, s, 10, 2);
      BigCount truth = count_entailing(d, sigma, q);
      if (truth == 0) continue;
      ApproxParams params;
      params.epsilon = ExactRatio(1, 4);
      params.delta = ExactRatio(1, 20);
      params.seed = 7 + checked;
      ApproxResult r = karp_luby_count(d, sigma, q, params);
      ExactRatio err = ExactRatio(r.raw) - ExactRatio(truth);
      if (err < 0) err = -err;
      REQUIRE(err <= params.epsilon * ExactRatio(truth));
      ++checked;
    }
  }
}

TEST_CASE("estimator expectation equals the union size, exhaustively") {
  // E[S * indicator] = sum_i (c_i/S) sum_{D' in rep(D,Sigma,H_i)} (1/c_i) [i least] * S
  //                  = #union. Enumerate every (i, D') pair.
  rtest::StdRng g(2024);
  int checked = 0;
  while (checked < 30) {
    Schema s = rtest::random_schema(g, 2, 3);
    FDSet sigma = rtest::random_chain_fds(g, s);
    Database d = rtest::random_database(g, s, 10, 2);
    ConjunctiveQuery q = rtest::random_query(g, s, 2, 2);
    auto images = hom_images(q, d, sigma);
    if (images.empty()) continue;

    BigCount expectation = 0;
    for (std::size_t i = 0; i < images.size(); ++i) {
      Database trimmed = d.without(facts_conflicting_with(d, sigma, images[i].facts));
      for (const Database& rep : enumerate_repairs(trimmed, sigma)) {
        REQUIRE(rep.contains_all(images[i].facts));
        if (least_covered_index(images, rep) == i) ++expectation;
      }
    }
    CHECK(expectation == count_entailing_oracle(d, sigma, q));
    ++checked;
  }
}

TEST_CASE("monte_carlo_count") {
  rtest::EmployeeFixture fx;

  SECTION("frequency-one instance is exact for any sample count") {
    Schema s;
    s.add(RelationDecl("R", {"A", "B"}));
    Database d(s);
    d.insert(Fact("R", {"a", "1"}));
    d.insert(Fact("R", {"a", "2"}));
    FDSet sigma({FD("R", {"A"}, {"B"})});
    ConjunctiveQuery q({Atom("R", {Term::constant("a"), Term::variable("y")})});
    Rng rng(11);
    MonteCarloResult r = monte_carlo_count(d, sigma, q, 50, rng);
    CHECK(r.estimate == 2);
    CHECK(r.raw == 2);
  }

  SECTION("running example estimate is close at ten thousand samples") {
    Rng rng(2025);
    MonteCarloResult r = monte_carlo_count(fx.db, fx.sigma, fx.same_dept_query(), 10000, rng);
    CHECK(r.raw >= ExactRatio(9, 5));
    CHECK(r.raw <= ExactRatio(11, 5));
  }

  SECTION("low-frequency family defeats Monte Carlo") {
    RfreqInstance inst = gen_rfreq_family(20);
    Rng rng(31415);
    MonteCarloResult r = monte_carlo_count(inst.db, inst.sigma, inst.query, 10000, rng);
    CHECK(r.estimate == 0);  // true count is 1, the estimator misses it
    CHECK(count_entailing(inst.db, inst.sigma, inst.query) == 1);
  }
}
