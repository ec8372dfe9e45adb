#include <catch2/catch_amalgamated.hpp>

#include "repcount/eval.hpp"
#include "repcount/gen.hpp"
#include "support/testgen.hpp"

using namespace repcount;

TEST_CASE("rel_freq_base") {
  Schema s;
  s.add(RelationDecl("R", {"A", "B"}));
  FDSet sigma({FD("R", {"A"}, {"B"})});
  CanonicalCover cover(s, sigma);
  ConjunctiveQuery q({Atom("R", {Term::variable("x"), Term::variable("y")})});

  SECTION("no homomorphism means zero") {
    CHECK(rel_freq_base(Database(s), cover, q) == 0);
  }

  SECTION("consistent entailing database means one") {
    Database d(s);
    d.insert(Fact("R", {"a", "b"}));
    CHECK(rel_freq_base(d, cover, q) == 1);
  }

  SECTION("nonempty complex part is a usage error") {
    Schema s2;
    s2.add(RelationDecl("R", {"A", "B"}));
    CanonicalCover cover2(s2, FDSet({FD("R", {"A"}, {"B"})}));
    ConjunctiveQuery bad({Atom("R", {Term::variable("x"), Term::constant("c")})});
    Database d(s2);
    CHECK_THROWS_AS(rel_freq_base(d, cover2, bad), Error);
  }

  SECTION("agrees with the oracle on random comp-empty instances") {
    rtest::StdRng g(808);
    int checked = 0;
    for (int iter = 0; iter < 150 && checked < 60; ++iter) {
      Schema schema = rtest::random_schema(g, 3, 4);
      FDSet fds = rtest::random_chain_fds(g, schema);
      CanonicalCover cov(schema, fds);
      ConjunctiveQuery query = rtest::random_query(g, schema, 2, 2);
      if (!complex_part(cov, query).empty()) continue;
      Database d = rtest::random_database(g, schema, 12, 2);
      REQUIRE(rel_freq_base(d, cov, query) == rtest::oracle_rfreq(d, fds, query));
      ++checked;
    }
    CHECK(checked >= 60);
  }
}

TEST_CASE("rel_freq on the low-frequency family") {
  for (int n = 1; n <= 12; ++n) {
    RfreqInstance inst = gen_rfreq_family(n);
    ExactRatio expected(1, pow2(static_cast<std::uint64_t>(n)) + 1);
    CHECK(rel_freq(inst.db, inst.sigma, inst.query) == expected);
  }
  // Oracle confirmation at small n.
  for (int n = 1; n <= 6; ++n) {
    RfreqInstance inst = gen_rfreq_family(n);
    CHECK(rtest::oracle_rfreq(inst.db, inst.sigma, inst.query) ==
          ExactRatio(1, pow2(static_cast<std::uint64_t>(n)) + 1));
  }
}

TEST_CASE("disjoint queries multiply") {
  Schema s;
  s.add(RelationDecl("R", {"A", "B"}));
  s.add(RelationDecl("S", {"A", "B"}));
  FDSet sigma({FD("R", {"A"}, {"B"}), FD("S", {"A"}, {"B"})});
  Database d(s);
  d.insert(Fact("R", {"a", "1"}));
  d.insert(Fact("R", {"a", "2"}));
  d.insert(Fact("S", {"b", "1"}));
  d.insert(Fact("S", {"b", "1"}));
  d.insert(Fact("S", {"b", "2"}));
  ConjunctiveQuery qr({Atom("R", {Term::variable("x"), Term::constant("1")})});
  ConjunctiveQuery qs({Atom("S", {Term::variable("z"), Term::constant("2")})});
  ConjunctiveQuery q({qr.atoms()[0], qs.atoms()[0]});
  ExactRatio freq = rel_freq(d, sigma, q);
  CHECK(freq == rel_freq(d, sigma, qr) * rel_freq(d, sigma, qs));
  CHECK(freq == rtest::oracle_rfreq(d, sigma, q));
}

TEST_CASE("count_entailing") {
  rtest::EmployeeFixture fx;

  SECTION("single-atom safe query on the running example") {
    // Employee 1 in HR holds in the repairs containing (1, Bob, HR); the
    // oracle puts that at 2 of the 4.
    ConjunctiveQuery q({Atom("Employee", {Term::constant("1"), Term::variable("n"),
                                          Term::constant("HR")})});
    BigCount oracle = count_entailing_oracle(fx.db, fx.sigma, q);
    REQUIRE(oracle == 2);
    CHECK(count_entailing(fx.db, fx.sigma, q) == oracle);
  }

  SECTION("consistent entailing database") {
    Schema s;
    s.add(RelationDecl("R", {"A"}));
    Database d(s);
    d.insert(Fact("R", {"a"}));
    ConjunctiveQuery q({Atom("R", {Term::variable("x")})});
    CHECK(count_entailing(d, FDSet{}, q) == 1);
  }

  SECTION("low-frequency family has exactly one entailing repair") {
    for (int n : {1, 4, 9}) {
      RfreqInstance inst = gen_rfreq_family(n);
      CHECK(count_entailing(inst.db, inst.sigma, inst.query) == 1);
    }
  }
}

TEST_CASE("unsafe or chainless inputs are rejected with a pointer to approx") {
  Schema s;
  s.add(RelationDecl("R", {"A1", "A2", "A3", "A4"}));
  ConjunctiveQuery q({Atom("R", {Term::variable("x"), Term::variable("y"), Term::variable("z"),
                                 Term::variable("w")})});
  FDSet no_chain({FD("R", {"A1"}, {"A2"}), FD("R", {"A3"}, {"A4"})});
  Database d(s);
  CHECK_THROWS_AS(rel_freq(d, no_chain, q), PreconditionError);

  Schema s2;
  s2.add(RelationDecl("R", {"A", "B"}));
  s2.add(RelationDecl("S", {"A", "B"}));
  FDSet keys({FD("R", {"A"}, {"B"}), FD("S", {"A"}, {"B"})});
  ConjunctiveQuery unsafe({Atom("R", {Term::variable("x"), Term::variable("y")}),
                           Atom("S", {Term::variable("z"), Term::variable("y")})});
  Database d2(s2);
  CHECK_THROWS_AS(rel_freq(d2, keys, unsafe), PreconditionError);
}

namespace {

struct SafeInstance {
  Schema schema;
  FDSet sigma;
  Database db;
  ConjunctiveQuery query;
};

std::optional<SafeInstance> next_safe_instance(rtest::StdRng& g, int max_facts = 18,
                                               int value_pool = 2) {
  Schema s = rtest::random_schema(g, 4, 4);
  FDSet sigma = rtest::random_chain_fds(g, s);
  ConjunctiveQuery q = rtest::random_query(g, s, value_pool, 3);
  if (classify(s, sigma, q).complexity != Complexity::InFP) return std::nullopt;
  Database d = rtest::random_database(g, s, max_facts, value_pool);
  return SafeInstance{std::move(s), std::move(sigma), std::move(d), std::move(q)};
}

}  // namespace

TEST_CASE("Eval equals the oracle on random safe instances") {
  rtest::StdRng g(90210);
  int done = 0;
  std::uint64_t entailing_hits = 0;
  while (done < 150) {
    auto inst = next_safe_instance(g);
    if (!inst) continue;
    EvalStats stats;
    ExactRatio fast = rel_freq(inst->db, inst->sigma, inst->query, &stats);
    ExactRatio slow = rtest::oracle_rfreq(inst->db, inst->sigma, inst->query);
    REQUIRE(fast == slow);

    // Numerator integrality and range.
    ExactRatio scaled = fast * ExactRatio(count_repairs(inst->db, inst->sigma));
    CHECK(ratio_denom(scaled) == 1);
    CHECK(fast >= 0);
    CHECK(fast <= 1);
    if (fast > 0) ++entailing_hits;

    // Call-count bound: (2|Q|-1) * sum_{i=0..m} N^i.
    const std::uint64_t n_dom = inst->db.active_domain().size();
    const std::uint64_t m = inst->query.variables().size();
    BigCount series = 0;
    BigCount power = 1;
    for (std::uint64_t i = 0; i <= m; ++i) {
      series += power;
      power *= n_dom;
    }
    BigCount bound = BigCount(2 * inst->query.atoms().size() - 1) * series;
    REQUIRE(BigCount(stats.calls) <= bound);
    ++done;
  }
  CHECK(entailing_hits > 30);  // the generator hits nontrivial frequencies
}

TEST_CASE("simplification identities hold standalone against the oracle") {
  rtest::StdRng g(112358);
  int shared_var_cases = 0, rhs_var_cases = 0;
  for (int iter = 0; iter < 400 && (shared_var_cases < 25 || rhs_var_cases < 25); ++iter) {
    Schema s = rtest::random_schema(g, 3, 4);
    FDSet sigma = rtest::random_chain_fds(g, s);
    Database d = rtest::random_database(g, s, 10, 2);
    ConjunctiveQuery q = rtest::random_query(g, s, 2, 2);
    CanonicalCover cover(s, sigma);
    std::vector<Atom> comp = complex_part(cover, q);
    if (comp.empty()) continue;

    if (auto x = shared_pvar_variable(cover, q, comp); x && shared_var_cases < 25) {
      // rfreq(Q)(D) = (1 - prod_c (1 - rfreq(Q_{x->c})(D_core))) * #rep(D - conf)/#rep(D)
      Trim t = trim(d, cover, q);
      ExactRatio prod = 1;
      for (const std::string& c : d.active_domain())
        prod *= ExactRatio(1) - rtest::oracle_rfreq(t.d_core, sigma, substitute(q, *x, c));
      ExactRatio ratio(BigCount(enumerate_repairs(d.without(t.d_conf.facts()), sigma).size()),
                       BigCount(enumerate_repairs(d, sigma).size()));
      ExactRatio lhs = rtest::oracle_rfreq(d, sigma, q);
      REQUIRE(lhs == (ExactRatio(1) - prod) * ratio);
      ++shared_var_cases;
    } else if (auto y = primary_rhs_variable(cover, q, comp); y && rhs_var_cases < 25) {
      // rfreq(Q)(D) = sum_c rfreq(Q_{x->c})(D)
      ExactRatio sum = 0;
      for (const std::string& c : d.active_domain())
        sum += rtest::oracle_rfreq(d, sigma, substitute(q, *y, c));
      REQUIRE(rtest::oracle_rfreq(d, sigma, q) == sum);
      ++rhs_var_cases;
    }
  }
  CHECK(shared_var_cases >= 25);
  CHECK(rhs_var_cases >= 25);
}
