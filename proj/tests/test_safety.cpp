#include <catch2/catch_amalgamated.hpp>

#include "repcount/safety.hpp"
#include "support/testgen.hpp"

using namespace repcount;

namespace {

Schema rs_schema() {
  Schema s;
  s.add(RelationDecl("R", {"A", "B"}));
  s.add(RelationDecl("S", {"A"}));
  return s;
}

}  // namespace

TEST_CASE("empty complex part is safe") {
  Schema s;
  s.add(RelationDecl("R", {"A", "B"}));
  CanonicalCover cover(s, FDSet({FD("R", {"A"}, {"B"})}));
  ConjunctiveQuery q({Atom("R", {Term::variable("x"), Term::variable("y")})});
  SafetyResult r = is_safe(cover, q);
  CHECK(r.safe);
  REQUIRE(r.trace.size() == 1);
  CHECK(r.trace[0].rule == "empty-complex-part");
}

TEST_CASE("join through a non-key position can still be safe") {
  Schema s = rs_schema();
  CanonicalCover cover(s, FDSet({FD("R", {"A"}, {"B"})}));
  ConjunctiveQuery q({Atom("R", {Term::variable("x"), Term::variable("y")}),
                      Atom("S", {Term::variable("y")})});
  SafetyResult r = is_safe(cover, q);
  REQUIRE(r.safe);
  // Derivation: substitute the shared key variable, then the key's RHS
  // variable, then the complex part is empty.
  REQUIRE(r.trace.size() == 3);
  CHECK(r.trace[0].rule == "shared-primary-lhs-variable");
  CHECK(r.trace[0].detail == "x");
  CHECK(r.trace[1].rule == "primary-rhs-variable");
  CHECK(r.trace[1].detail == "y");
  CHECK(r.trace[2].rule == "empty-complex-part");
}

TEST_CASE("non-key join across two keyed relations is unsafe") {
  Schema s;
  s.add(RelationDecl("R", {"A", "B"}));
  s.add(RelationDecl("S", {"A", "B"}));
  CanonicalCover cover(s, FDSet({FD("R", {"A"}, {"B"}), FD("S", {"A"}, {"B"})}));
  ConjunctiveQuery q({Atom("R", {Term::variable("x"), Term::variable("y")}),
                      Atom("S", {Term::variable("z"), Term::variable("y")})});
  SafetyResult r = is_safe(cover, q);
  CHECK_FALSE(r.safe);
  CHECK(r.trace.back().rule == "unsafe");
}

TEST_CASE("disjoint union rule splits variable-disjoint parts") {
  Schema s;
  s.add(RelationDecl("R", {"A", "B"}));
  s.add(RelationDecl("S", {"A", "B"}));
  CanonicalCover cover(s, FDSet({FD("R", {"A"}, {"B"}), FD("S", {"A"}, {"B"})}));
  // Each component needs a constant at a non-key position to have a complex
  // part of its own.
  ConjunctiveQuery q({Atom("R", {Term::variable("x"), Term::constant("c")}),
                      Atom("S", {Term::variable("z"), Term::constant("d")})});
  SafetyResult r = is_safe(cover, q);
  CHECK(r.safe);
  REQUIRE_FALSE(r.trace.empty());
  CHECK(r.trace[0].rule == "disjoint-union");
}

TEST_CASE("classify") {
  SECTION("no chain is #P-complete for every SJFCQ") {
    Schema s;
    s.add(RelationDecl("R", {"A1", "A2", "A3", "A4"}));
    FDSet sigma({FD("R", {"A1"}, {"A2"}), FD("R", {"A3"}, {"A4"})});
    ConjunctiveQuery q({Atom("R", {Term::variable("x"), Term::variable("y"), Term::variable("z"),
                                   Term::variable("w")})});
    SafetyVerdict v = classify(s, sigma, q);
    CHECK(v.complexity == Complexity::SharpPComplete);
    CHECK_FALSE(v.chain_ok);
  }

  SECTION("chain plus empty complex part is in FP") {
    Schema s;
    s.add(RelationDecl("R", {"A", "B"}));
    FDSet sigma({FD("R", {"A"}, {"B"})});
    ConjunctiveQuery q({Atom("R", {Term::variable("x"), Term::variable("y")})});
    SafetyVerdict v = classify(s, sigma, q);
    CHECK(v.complexity == Complexity::InFP);
    CHECK(v.chain_ok);
    CHECK(v.safe);
  }

  SECTION("chain plus unsafe query is #P-complete") {
    Schema s;
    s.add(RelationDecl("R", {"A", "B"}));
    s.add(RelationDecl("S", {"A", "B"}));
    FDSet sigma({FD("R", {"A"}, {"B"}), FD("S", {"A"}, {"B"})});
    ConjunctiveQuery q({Atom("R", {Term::variable("x"), Term::variable("y")}),
                        Atom("S", {Term::variable("z"), Term::variable("y")})});
    SafetyVerdict v = classify(s, sigma, q);
    CHECK(v.complexity == Complexity::SharpPComplete);
    CHECK(v.chain_ok);
    CHECK_FALSE(v.safe);
  }

  SECTION("complexity field matches chain_ok and safe") {
    rtest::StdRng g(1123);
    for (int iter = 0; iter < 80; ++iter) {
      Schema s = rtest::random_schema(g, 3, 4);
      FDSet sigma = rtest::coin(g) ? rtest::random_chain_fds(g, s) : rtest::random_fds(g, s);
      ConjunctiveQuery q = rtest::random_query(g, s);
      SafetyVerdict v = classify(s, sigma, q);
      CHECK((v.complexity == Complexity::InFP) == (v.chain_ok && v.safe));
    }
  }
}

TEST_CASE("self-joins are rejected") {
  Schema s;
  s.add(RelationDecl("R", {"A", "B"}));
  FDSet sigma({FD("R", {"A"}, {"B"})});
  ConjunctiveQuery q({Atom("R", {Term::variable("x"), Term::variable("y")}),
                      Atom("R", {Term::variable("y"), Term::variable("z")})});
  CHECK_THROWS_AS(classify(s, sigma, q), PreconditionError);
  CHECK_THROWS_AS(is_safe(CanonicalCover(s, sigma), q), PreconditionError);
}

TEST_CASE("recursion terminates within 2|Q| - 1 + m calls") {
  rtest::StdRng g(2718);
  for (int iter = 0; iter < 200; ++iter) {
    Schema s = rtest::random_schema(g, 4, 4);
    FDSet sigma = rtest::random_chain_fds(g, s);
    ConjunctiveQuery q = rtest::random_query(g, s, 3, 3);
    CanonicalCover cover(s, sigma);
    SafetyStats stats;
    is_safe(cover, q, &stats);
    const std::uint64_t bound =
        2 * q.atoms().size() - 1 + q.variables().size();
    REQUIRE(stats.calls <= bound);
  }
}

TEST_CASE("verdict does not depend on the fresh constants") {
  rtest::StdRng g(161803);
  for (int iter = 0; iter < 150; ++iter) {
    Schema s = rtest::random_schema(g, 3, 4);
    FDSet sigma = rtest::random_chain_fds(g, s);
    ConjunctiveQuery q = rtest::random_query(g, s);
    CanonicalCover cover(s, sigma);
    SafetyResult a = is_safe(cover, q, nullptr, "\x01s");
    SafetyResult b = is_safe(cover, q, nullptr, "\x02t");
    REQUIRE(a.safe == b.safe);
    REQUIRE(a.trace.size() == b.trace.size());
  }
}
