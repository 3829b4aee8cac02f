#include <map>
#include <set>

#include "doctest.h"
#include "qmaps/census.hpp"
#include "qmaps/map.hpp"
#include "qmaps/peeling.hpp"

using namespace qm;

namespace {

// Plane trees with n edges, counted by brute force over balanced bracket words.
long brute_plane_trees(int n) {
  long count = 0;
  for (long w = 0; w < (1L << (2 * n)); ++w) {
    int depth = 0;
    bool ok = true;
    for (int i = 0; i < 2 * n && ok; ++i) {
      depth += ((w >> i) & 1) ? 1 : -1;
      ok = depth >= 0;
    }
    count += ok && depth == 0;
  }
  return count;
}

MapWithHoles relabel(const MapWithHoles& m, const std::vector<int>& perm) {
  const int n = m.num_darts();
  std::vector<int> a(n), s(n);
  for (int d = 0; d < n; ++d) {
    a[perm[d]] = perm[m.alpha(d)];
    s[perm[d]] = perm[m.sigma(d)];
  }
  std::vector<int> marks;
  for (const auto& h : m.holes()) marks.push_back(perm[h.mark]);
  return MapWithHoles::from_raw(a, s, perm[m.root()], marks);
}

}  // namespace

TEST_CASE("initial hole map") {
  for (int l = 1; l <= 4; ++l) {
    auto m = MapWithHoles::initial(l);
    CHECK(validate_structure(m));
    CHECK(m.semi_perimeter() == l);
    CHECK(m.num_holes() == 1);
    CHECK(m.face_degree(m.holes()[0].face) == 2 * l);
    CHECK(m.num_internal_faces() == 0);
  }
}

TEST_CASE("validate_quadrangulation examples") {
  CHECK(validate_quadrangulation(decode("T2(0,0)")));
  auto init2 = MapWithHoles::initial(2);
  auto quad = MapWithHoles::from_raw(init2.alpha_vector(), init2.sigma_vector(), 0, {});
  CHECK(validate_quadrangulation(quad));
  CHECK(quad.semi_perimeter() == 2);
  CHECK(quad.num_internal_faces() == 1);

  // Move dart 3 of the root face into the quadrilateral: faces of degree 3 and 5.
  const int n = quad.num_darts();
  std::vector<int> phi(n);
  for (int d = 0; d < n; ++d) phi[d] = quad.phi(d);
  const int r3 = 3, p3 = quad.phi_inv(r3), q0 = quad.alpha(0);
  phi[p3] = quad.phi(r3);
  phi[r3] = quad.phi(q0);
  phi[q0] = r3;
  std::vector<int> sigma(n);
  for (int d = 0; d < n; ++d) sigma[d] = phi[quad.alpha(d)];
  auto bad = MapWithHoles::from_raw(quad.alpha_vector(), sigma, 0, {});
  auto st = validate_quadrangulation(bad);
  CHECK_FALSE(st);
  CHECK(st.code == Errc::NonQuadFace);
  CHECK(bad.face_degree(st.detail) == 5);

  std::vector<int> a = quad.alpha_vector();
  std::swap(a[0], a[1]);
  CHECK_THROWS_AS(MapWithHoles::from_raw(a, quad.sigma_vector(), 0, {}), Error);
}

TEST_CASE("peel examples") {
  auto init = MapWithHoles::initial(1);
  auto tree = peel(init, init.holes()[0].mark, PeelEvent::t2(0, 0));
  CHECK(tree.num_holes() == 0);
  CHECK(validate_quadrangulation(tree));
  CHECK(canonical_code(tree) == canonical_code(decode("T2(0,0)")));

  auto one = peel(init, init.holes()[0].mark, PeelEvent::t1());
  CHECK(one.num_internal_faces() == 1);
  CHECK(one.num_holes() == 1);
  CHECK(one.face_degree(one.holes()[0].face) == 4);
  CHECK(validate_structure(one));

  auto a = decode("T1,T2(0,1),T2(0,0)");
  auto b = decode("T1,T2(1,0),T2(0,0)");
  CHECK(validate_quadrangulation(a));
  CHECK(validate_quadrangulation(b));
  CHECK(a.num_internal_faces() == 1);
  CHECK(canonical_code(a) != canonical_code(b));

  CHECK_THROWS_AS(peel(init, 0, PeelEvent::t1()), Error);  // root-face dart
  try {
    peel(one, one.holes()[0].mark, PeelEvent::t2(0, 0));
    FAIL("expected SplitArityMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::SplitArityMismatch);
  }
}

TEST_CASE("codec round trip and bijection over the census") {
  for (int l = 1; l <= 8; ++l) {
    for (int f = 0; l + 2 * f <= 8; ++f) {
      auto codes = generate_codes(l, f);
      std::set<std::string> canon;
      for (const auto& c : codes) {
        auto m = decode(c);
        REQUIRE(validate_quadrangulation(m));
        CHECK(m.num_internal_faces() == f);
        CHECK(m.semi_perimeter() == l);
        CHECK(encode(m) == c);
        canon.insert(canonical_code(m));
      }
      CHECK(canon.size() == codes.size());
    }
  }
}

TEST_CASE("canonical code") {
  auto m = decode("T1,T1,T2(0,2),T2(1,0),T2(0,0)");
  const int n = m.num_darts();
  std::vector<int> perm(n);
  for (int i = 0; i < n; ++i) perm[i] = (7 * i + 3) % n;
  if (std::set<int>(perm.begin(), perm.end()).size() == static_cast<size_t>(n)) {
    CHECK(canonical_code(relabel(m, perm)) == canonical_code(m));
  }
  std::vector<int> rev(n);
  for (int i = 0; i < n; ++i) rev[i] = n - 1 - i;
  CHECK(canonical_code(relabel(m, rev)) == canonical_code(m));

  // A path of two edges rooted at a leaf versus at its middle vertex.
  auto path = decode("T2(0,1),T2(0,0)");
  auto r = reroot(path, path.phi(path.root()));
  CHECK(canonical_code(r) != canonical_code(path));
}

TEST_CASE("reroot") {
  auto m = decode("T1,T2(1,0),T2(0,0)");
  CHECK(canonical_code(reroot(m, m.root())) == canonical_code(m));
  for (int l = 1; l <= 3; ++l) {
    for (const auto& q : generate_all(l, 1)) {
      auto r = q;
      for (int i = 0; i < 2 * l; ++i) r = reroot(r, r.phi(r.root()));
      CHECK(canonical_code(r) == canonical_code(q));
    }
  }
  for (const auto& q : generate_all(2, 1)) {
    int d = q.root();
    do {
      auto r = reroot(q, d);
      CHECK(r.num_internal_faces() == q.num_internal_faces());
      CHECK(r.semi_perimeter() == q.semi_perimeter());
      CHECK(validate_quadrangulation(r));
      d = q.phi(d);
    } while (d != q.root());
  }
  CHECK_THROWS_AS(reroot(m, m.alpha(m.root())), Error);
}

TEST_CASE("glue examples") {
  auto init = MapWithHoles::initial(1);
  auto h1 = replay(1, {PeelEvent::t1()});
  auto glued = glue(h1, {decode("T2(0,1),T2(0,0)")});
  CHECK(canonical_code(glued) == canonical_code(decode("T1,T2(0,1),T2(0,0)")));

  auto sealed = glue(init, {decode("T2(0,0)")});
  CHECK(canonical_code(sealed) == canonical_code(decode("T2(0,0)")));

  try {
    glue(h1, {decode("T2(0,0)")});
    FAIL("expected PerimeterMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::PerimeterMismatch);
  }
}

TEST_CASE("submap: prefixes, round trip, reflexivity, cemetery") {
  for (int f = 0; f <= 2; ++f) {
    for (const auto& code : generate_codes(1, f)) {
      auto q = decode(code);
      auto ev = parse_code(code);
      auto cem = is_submap(MapWithHoles{}, q);
      REQUIRE(cem);
      CHECK(canonical_code(glue(MapWithHoles{}, *cem)) == canonical_code(q));
      for (size_t k = 0; k <= ev.size(); ++k) {
        auto p = replay(1, std::vector<PeelEvent>(ev.begin(), ev.begin() + k));
        auto fills = is_submap(p, q);
        REQUIRE(fills);
        CHECK(canonical_code(glue(p, *fills)) == canonical_code(q));
        auto self = is_submap(p, p);
        REQUIRE(self);
        for (size_t i = 0; i < self->size(); ++i) {
          const auto& F = (*self)[i];
          CHECK(F.num_internal_faces() == 0);
          CHECK(F.num_holes() == 1);
        }
        CHECK(canonical_code(glue(p, *self)) == canonical_code(p));
      }
    }
  }
}

TEST_CASE("submap partial order over the census") {
  std::vector<MapWithHoles> all;
  for (int l = 1; l <= 2; ++l)
    for (int f = 0; l + 2 * f <= 6; ++f)
      for (const auto& code : generate_codes(l, f)) {
        auto ev = parse_code(code);
        for (size_t k = 0; k <= ev.size(); ++k)
          all.push_back(replay(l, std::vector<PeelEvent>(ev.begin(), ev.begin() + k)));
      }
  std::map<std::string, MapWithHoles> uniq;
  for (auto& m : all) uniq.emplace(canonical_code(m), m);
  std::vector<MapWithHoles> v;
  for (auto& [k, m] : uniq) v.push_back(m);
  const int n = static_cast<int>(v.size());
  std::vector<std::vector<char>> le(n, std::vector<char>(n));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) le[i][j] = is_submap(v[i], v[j]).has_value();
  int antisym_violations = 0, trans_violations = 0;
  for (int i = 0; i < n; ++i) {
    CHECK(le[i][i]);
    for (int j = 0; j < n; ++j) {
      if (i != j && le[i][j] && le[j][i] && v[i].num_holes() == v[j].num_holes() &&
          canonical_code(v[i]) != canonical_code(v[j])) {
        // Mutual containment may only differ in hole marks.
        ++antisym_violations;
      }
      if (!le[i][j]) continue;
      for (int k = 0; k < n; ++k)
        if (le[j][k] && !le[i][k]) ++trans_violations;
    }
  }
  CHECK(trans_violations == 0);
  MESSAGE("mutually contained pairs differing in marks only: " << antisym_violations);
}

TEST_CASE("gluing order over disjoint holes") {
  // Two holes: fill them one at a time in either order.
  auto p = replay(2, {PeelEvent::t1(), PeelEvent::t2(1, 1)});
  REQUIRE(p.num_holes() == 2);
  auto f0 = decode("T1,T2(0,1),T2(0,0)");
  auto f1 = decode("T2(0,0)");
  auto full = glue(p, {f0, f1});
  auto init1 = MapWithHoles::initial(1);
  auto step_a = glue(p, {f0, init1});
  auto step_b = glue(p, {init1, f1});
  CHECK(canonical_code(glue(step_a, {f1})) == canonical_code(full));
  CHECK(canonical_code(glue(step_b, {f0})) == canonical_code(full));
}

TEST_CASE("peel_type_of and explore") {
  auto init = MapWithHoles::initial(1);
  CHECK(peel_type_of(init, init.holes()[0].mark, decode("T2(0,0)")) == PeelEvent::t2(0, 0));
  for (const auto& q : generate_all(1, 1))
    CHECK(peel_type_of(init, init.holes()[0].mark, q) == PeelEvent::t1());

  auto ex = explore(decode("T2(0,0)"));
  CHECK(ex.events.size() == 1);
  CHECK(ex.events[0] == PeelEvent::t2(0, 0));

  for (const auto& q : generate_all(1, 2)) {
    auto stopped = explore(q, {}, [](const MapWithHoles&, const std::vector<PeelEvent>& ev) {
      return !ev.empty() && ev.back().kind == PeelEvent::Type1;
    });
    CHECK(stopped.events.size() == 1);
    CHECK(stopped.maps.back().num_holes() == 1);
    auto full = explore(q);
    for (size_t i = 0; i + 1 < full.maps.size(); ++i) {
      auto fills = is_submap(full.maps[i], q);
      CHECK(fills);
      const int d = canonical_algorithm(full.maps[i]);
      CHECK(peel_type_of(full.maps[i], d, q) == full.events[i]);
    }
    CHECK(canonical_code(replay(1, full.events)) == canonical_code(q));
  }
}

TEST_CASE("json raw form") {
  auto m = replay(2, {PeelEvent::t1(), PeelEvent::t2(1, 1)});
  auto back = from_json(to_json(m));
  CHECK(canonical_code(back) == canonical_code(m));
  CHECK_THROWS_AS(from_json("{\"alpha\":[1,0],\"sigma\":[0,0]}"), Error);
}

TEST_CASE("census counts") {
  // Independent values: rooted quadrangulations with n faces,
  // 2 * 3^n (2n)! / (n! (n+2)!), match N(1, n).
  const long quad[] = {1, 2, 9, 54, 378, 2916, 24057, 208494};
  const auto& t = census(8, 8);
  for (int n = 0; n < 8; ++n) CHECK(t.count(1, n) == quad[n]);
  for (int l = 0; l <= 8; ++l) {
    CHECK(t.count(l, 0) == brute_plane_trees(l));
    CHECK(t.count(l, 0) == catalan(l));
  }
  CHECK(t.count(0, 0) == 1);
  for (int f = 1; f <= 8; ++f) CHECK(t.count(0, f) == 0);
  for (int l = 1; l + 0 <= 8; ++l)
    for (int f = 0; l + 2 * f <= 8; ++f)
      CHECK(t.count(l, f) == static_cast<long>(generate_all(l, f).size()));
  CHECK_THROWS_AS(t.count(100, 0), Error);
  CHECK_THROWS_AS(generate_all(1, 10), Error);
  CHECK_THROWS_AS(generate_all(0, 0), Error);
}

TEST_CASE("growth ratio") {
  // N(1,n+1)/N(1,n) = 12 - 30/(n+3) from the closed form above.
  CHECK(growth_ratio(1, 40) == mpq_class(12 * 43 - 30, 43));
  for (int l = 1; l <= 4; ++l)
    CHECK(growth_ratio(l, 0) == mpq_class(mpq_class(census(l, 1).count(l, 1)) / catalan(l)));
  double prev = 0;
  for (int f = 5; f <= 40; ++f) {
    const double r = growth_ratio(1, f).get_d();
    CHECK(r > prev);
    CHECK(r < 12.0);
    prev = r;
  }
}
