#include <algorithm>

#include "doctest.h"
#include "qmaps/census.hpp"
#include "qmaps/markov.hpp"
#include "qmaps/peeling.hpp"

using namespace qm;

TEST_CASE("rerooting invariance") {
  Boltzmann B(BoltzmannParams{});
  CHECK(rerooting_invariance_check(1, 2, B) == 0);
  CHECK(rerooting_invariance_check(2, 2, B) == 0);
  CHECK(rerooting_invariance_check(3, 1, B) == 0);
}

TEST_CASE("right process traces") {
  auto tree = decode("T2(0,0)");
  auto rp = right_process(tree);
  CHECK(rp.walk.faces.size() == 2);
  CHECK(rp.walk.faces[0] == rp.walk.faces[1]);
  CHECK(rp.tau_E == 1);
  CHECK(rp.tau_I == -1);
  for (const auto& q : generate_all(1, 1)) {
    auto r = right_process(q);
    const int inner = q.internal_faces()[0];
    CHECK(r.walk.completed);
    CHECK(std::count(r.walk.faces.begin(), r.walk.faces.end(), inner) >= 1);
    CHECK(r.walk.faces.back() == q.root_face());
  }
  CHECK_THROWS_AS(right_process(decode("T2(0,1),T2(0,0)")), Error);
}

// The self-intersecting walk pictured in the README: x_3 is met again at
// step 9, so Q keeps x_0..x_3 and x_9..x_10 and leaves the loop through
// x_4..x_8 unexplored.
TEST_CASE("right process with a nested loop") {
  const auto q = decode("T1,T1,T1,T2(3,0),T1,T1,T1,T2(1,4),T2(0,0),T2(0,3),T2(0,2),T2(1,0),T2(0,0)");
  const auto rp = right_process(q);
  CHECK(rp.tau_E == 10);
  CHECK(rp.tau_I == 3);
  CHECK(rp.tau_R == 9);
  const auto& x = rp.walk.faces;
  CHECK(x[3] == x[9]);
  CHECK(x[4] == x[8]);
  CHECK(x[5] == x[7]);
  bool full = true;
  const auto Q = stopping_map_Q(q, &full);
  CHECK_FALSE(full);
  CHECK(embed(Q, q));
  CHECK(Q.num_internal_faces() == 3);
  CHECK(Q.num_holes() >= 1);
  CHECK(containment_decider_Q(Q) == Decision::Contained);
}

TEST_CASE("left walk is the right walk reversed") {
  for (int f = 0; f <= 4; ++f)
    for (const auto& q : generate_all(1, f)) {
      auto R = dual_walk(q, true), L = dual_walk(q, false);
      REQUIRE(R.completed);
      REQUIRE(L.completed);
      auto rev = L.faces;
      std::reverse(rev.begin(), rev.end());
      CHECK(rev == R.faces);
      for (size_t i = 0; i < R.exits.size(); ++i)
        CHECK(q.alpha(R.exits[i]) == L.exits[L.exits.size() - 1 - i]);
    }
}

TEST_CASE("stopping map Q and its decider over the census") {
  long checked = 0, contained = 0;
  for (int f = 0; f <= 3; ++f)
    for (const auto& q : generate_all(1, f)) {
      const auto S = stopping_map_Q(q);
      REQUIRE(embed(S, q));
      CHECK(containment_decider_Q(q) == Decision::Contained);
      const auto ex = explore(q);
      for (const auto& p : ex.maps) {
        const bool truth = embed(S, p).has_value();
        const bool said = containment_decider_Q(p) == Decision::Contained;
        CHECK(truth == said);
        ++checked;
        contained += said;
      }
    }
  MESSAGE("prefixes checked: " << checked << ", contained: " << contained);
  CHECK(containment_decider_Q(MapWithHoles::initial(1)) == Decision::NotContained);
  CHECK(containment_decider_Q(replay(1, {PeelEvent::t1()})) == Decision::NotContained);
}


// Peeling in random order reaches prefixes the canonical order never shows,
// e.g. the two walks meeting at a nested revisit while the first loop is
// still open.
TEST_CASE("decider on randomly ordered explorations") {
  Rng rng(99);
  long checked = 0, contained = 0;
  for (int it = 0; it < 400; ++it) {
    const auto q = sample_uniform(1, 5 + it % 30, rng);
    const auto S = stopping_map_Q(q);
    Explorer ex(q);
    while (true) {
      const auto& e = ex.explored();
      const bool truth = embed(S, e).has_value();
      const bool said = containment_decider_Q(e) == Decision::Contained;
      REQUIRE(truth == said);
      ++checked;
      contained += said;
      if (ex.done()) break;
      const auto act = e.active_boundary();
      ex.step(act[rng() % act.size()]);
    }
  }
  MESSAGE("random prefixes: " << checked << ", contained: " << contained);
}
TEST_CASE("rules and guards") {
  Boltzmann B(BoltzmannParams{});
  Rng rng(3);
  StoppingMapRule bad{"bad", [](const MapWithHoles&) { return replay(1, {PeelEvent::t1(), PeelEvent::t1()}); }, {}};
  // A two-step prefix that most samples do not contain.
  bool threw = false;
  try {
    strong_markov_test(1, B, bad, 200, rng);
  } catch (const Error& e) {
    threw = e.code() == Errc::PreconditionViolation;
  }
  CHECK(threw);
  CHECK_THROWS_AS(weak_markov_test(1, B, decode("T2(0,0)"), 10, rng), Error);
}

TEST_CASE("small Markov batteries") {
  Boltzmann B(BoltzmannParams{});
  Rng rng(2024);
  auto trivial = weak_markov_test(1, B, MapWithHoles::initial(1), 20000, rng);
  CHECK(trivial.hits == 20000);
  CHECK(trivial.holes.size() == 1);
  CHECK(trivial.holes[0].r.p_value > 0.001);

  auto two = weak_markov_test(2, B, replay(2, {PeelEvent::t1(), PeelEvent::t2(1, 1)}), 20000, rng);
  REQUIRE(two.holes.size() == 2);
  REQUIRE(two.independence.size() == 1);
  CHECK(two.hits > 100);
  MESSAGE(two.to_text());

  auto s = strong_markov_test(1, B, first_type2_rule(), 20000, rng);
  for (double p : s.hole_p_values()) CHECK(p > 0.001);
  auto q = strong_markov_test(1, B, stopping_map_Q_rule(), 20000, rng);
  CHECK(q.flagged > 0);
  for (double p : q.hole_p_values()) CHECK(p > 0.001);
}

TEST_CASE("branch diagram") {
  Boltzmann B(BoltzmannParams{});
  auto leaves = counterexample_branches(B);
  CHECK(leaves.size() == 9);
  for (const auto& L : leaves) {
    CHECK(L.probability > 0);
    CHECK(L.completions > 0);
    CHECK(L.equal_to_Q == 0);
    MESSAGE(L.name << ": p=" << static_cast<double>(L.probability) << " completions=" << L.completions
                   << " Q inside=" << L.Q_inside);
  }
}
