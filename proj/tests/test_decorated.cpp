#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <functional>

#include "doctest.h"
#include "qmaps/census.hpp"
#include "qmaps/decorated.hpp"
#include "qmaps/peeling.hpp"

using namespace qm;

namespace {

const char* kQuad = "T1,T2(2,0),T2(1,0),T2(0,0)";

DecoratedParams ising(Real q = 1.0L / 48, Real beta = 1) {
  DecoratedParams p;
  p.base.q = q;
  p.beta = beta;
  p.mu = SpinMeasure::ising();
  return p;
}

DecoratedParams gaussian(Real q = 1.0L / 48, Real beta = 1) {
  DecoratedParams p = ising(q, beta);
  p.mu = SpinMeasure::gaussian();
  return p;
}

// Z by nested adaptive quadrature over the internal spins.
double quadrature_Z(const MapWithHoles& m, const BoundaryCondition& b, double beta) {
  const auto g = face_adjacency(m);
  const int n = g.n_internal;
  std::vector<double> s(n, 0);
  auto value = [&](int u) { return u < n ? s[u] : static_cast<double>(b[u - n]); };
  std::function<double(int)> level = [&](int i) -> double {
    if (i == n) {
      double h = 0;
      for (const auto& e : g.edges) h += e.mult * (value(e.u) - value(e.v)) * (value(e.u) - value(e.v));
      return std::exp(-beta / 2 * h);
    }
    auto f = [&](double x) {
      s[i] = x;
      return level(i + 1);
    };
    // Boundary spins lie in [-1, 2]; the integrand is below e^-40 outside [-12, 12].
    return boost::math::quadrature::gauss_kronrod<double, 21>::integrate(f, -12.0, 12.0, 8, 1e-8);
  };
  return level(0);
}

}  // namespace

TEST_CASE("face adjacency") {
  const auto quad = decode(kQuad);
  auto g = face_adjacency(quad);
  REQUIRE(g.n_internal == 1);
  REQUIRE(g.n_phantom == 4);
  for (int j = 0; j < 4; ++j) CHECK(g.multiplicity(0, 1 + j) == 1);
  CHECK(g.edges.size() == 4);

  const auto tree = decode("T2(0,0)");
  g = face_adjacency(tree);
  CHECK(g.n_internal == 0);
  // The tree edge is bordered by both phantoms.
  REQUIRE(g.edges.size() == 1);
  CHECK(g.multiplicity(0, 1) == 1);

  g = face_adjacency(decode("T1,T1,T2(0,2),T2(0,1),T2(0,0)"));
  CHECK(g.multiplicity(0, 1) == 2);

  CHECK_THROWS_AS(face_adjacency(MapWithHoles::initial(1)), Error);
}

TEST_CASE("hamiltonian") {
  const auto quad = decode(kQuad);
  CHECK(hamiltonian(quad, {1}, {1, 1, 1, 1}, 1) == 0);
  CHECK(hamiltonian(quad, {-1}, {1, 1, 1, 1}, 1) == 8);
  CHECK(hamiltonian(quad, {-1}, {1, 1, 1, 1}, 2.5L) == 20);
  for (const auto& m : generate_all(2, 2)) {
    const BoundaryCondition b = {1, -1, -1, 1};
    const BoundaryCondition nb = {-1, 1, 1, -1};
    for (int c = 0; c < 4; ++c) {
      Decoration s = {c & 1 ? 1.0L : -1.0L, c & 2 ? 1.0L : -1.0L};
      Decoration ns = {-s[0], -s[1]};
      CHECK(hamiltonian(m, s, b, 1) == hamiltonian(m, ns, nb, 1));
      CHECK(hamiltonian(m, s, b, 1) >= 0);
    }
  }
  CHECK_THROWS_AS(hamiltonian(quad, {}, {1, 1, 1, 1}, 1), Error);
  CHECK_THROWS_AS(hamiltonian(quad, {1}, {1, 1}, 1), Error);
}

TEST_CASE("exact partition functions") {
  const auto quad = decode(kQuad);
  const Real Z = partition_decorated(quad, {1, 1, 1, 1}, ising(1.0L / 48));
  CHECK(std::fabs(static_cast<double>(Z - (1 + std::exp(-8.0L)))) <= 1e-12);

  // Trees carry only the phantom-phantom energy.
  const auto tree = decode("T2(0,0)");
  CHECK(partition_decorated(tree, {1, 1}, ising()) == 1);
  CHECK(std::fabs(static_cast<double>(partition_decorated(tree, {1, -1}, ising()) -
                                      std::exp(-2.0L))) < 1e-15);

  // Three-point measure, one face: direct sum.
  DecoratedParams p = ising();
  p.mu = SpinMeasure::discrete({-1, 0, 2}, {0.5, 1, 2});
  const BoundaryCondition b = {0, 0, 2, -1};
  Real direct = 0;
  for (auto [s, w] : {std::pair<Real, Real>{-1, 0.5}, {0, 1}, {2, 2}})
    direct += w * std::exp(-hamiltonian(quad, {s}, b, 1));
  CHECK(std::fabs(static_cast<double>(partition_decorated(quad, b, p) - direct)) < 1e-15);
  CHECK_THROWS_AS(partition_decorated(quad, {1, 1, 1, 3}, ising()), Error);
}

TEST_CASE("Gaussian partition function against quadrature") {
  const std::vector<std::pair<int, BoundaryCondition>> setups = {
      {1, {0.3, -0.7}}, {2, {1, -0.5, 0.25, 2}}};
  double worst = 0;
  int checked = 0;
  for (double beta : {1.0, 0.7}) {
    for (const auto& [l, b] : setups)
      for (int f = 1; f <= 3; ++f) {
        if (l == 2 && f == 3) continue;
        int taken = 0;
        for (const auto& m : generate_all(l, f)) {
          if (taken++ == 3) break;
          const double exact =
              static_cast<double>(partition_decorated(m, b, gaussian(1.0L / 48, beta)));
          const double quad = quadrature_Z(m, b, beta);
          worst = std::max(worst, std::fabs(exact - quad) / quad);
          ++checked;
        }
      }
  }
  MESSAGE("maps checked: " << checked << ", worst relative error " << worst);
  CHECK(worst <= 1e-4);
}

TEST_CASE("rerooting with shifted boundary") {
  const int l = 2;
  const BoundaryCondition b = {1, -1, -1, 1};
  for (int f = 0; f <= 2; ++f)
    for (const auto& m : generate_all(l, f)) {
      const Real z = partition_decorated(m, b, ising());
      const Real zg = partition_decorated(m, {0.2, -1, 0.5, 1.5}, gaussian());
      int d = m.root();
      for (int s = 0; s < 2 * l; ++s, d = m.phi_inv(d)) {
        BoundaryCondition bs(2 * l), gs(2 * l);
        const BoundaryCondition g = {0.2, -1, 0.5, 1.5};
        for (int j = 0; j < 2 * l; ++j) {
          bs[j] = b[(j + s) % (2 * l)];
          gs[j] = g[(j + s) % (2 * l)];
        }
        const auto r = reroot(m, d);
        CHECK(partition_decorated(r, bs, ising()) == doctest::Approx(static_cast<double>(z)).epsilon(1e-14));
        CHECK(partition_decorated(r, gs, gaussian()) == doctest::Approx(static_cast<double>(zg)).epsilon(1e-12));
      }
    }
}

TEST_CASE("Gibbs ratios") {
  CHECK(gibbs_ratio_check(1, {1, -1}, 0, ising()) == 0);
  CHECK(gibbs_ratio_check(2, {1, 1, 1, 1}, 1, ising()) <= 1e-12);
  CHECK(gibbs_ratio_check(2, {1, -1, 1, 1}, 2, ising()) <= 1e-12);
  CHECK(gibbs_ratio_check(2, {0.5, -1, 0, 1}, 2, gaussian()) <= 1e-8);
}

TEST_CASE("energy splits along holes") {
  Rng rng(7);
  const auto D = DecoratedBoltzmann(ising(1.0L / 30));
  const auto G = DecoratedBoltzmann(gaussian(1.0L / 40));
  for (int it = 0; it < 60; ++it) {
    const auto& S = it % 2 ? D : G;
    const BoundaryCondition b = it % 2 ? BoundaryCondition{1, -1} : BoundaryCondition{0.4, -1.2};
    const auto [Q, sigma] = S.sample(1, b, rng);
    const auto qf = canonical_internal_faces(Q);
    std::vector<int> qi(Q.num_faces(), -1);
    for (size_t i = 0; i < qf.size(); ++i) qi[qf[i]] = static_cast<int>(i);
    const Real total = hamiltonian(Q, sigma, b, 1);
    Explorer ex(Q);
    for (;;) {
      const auto& e = ex.explored();
      const auto emb = embed(e, Q);
      REQUIRE(emb);
      Decoration se;
      for (int f : canonical_internal_faces(e))
        se.push_back(sigma[qi[Q.face_of(emb->image[e.face_dart(f)])]]);
      const auto bcs = hole_boundaries(e, se, b);
      // Energy of the edges of e that do not touch a hole.
      std::vector<int> ph(e.num_darts(), -1);
      int x = e.root();
      for (int j = 0; j < 2; ++j, x = e.phi_inv(x)) ph[x] = j;
      auto spin = [&](int d) -> Real {
        if (ph[d] >= 0) return b[ph[d]];
        return sigma[qi[Q.face_of(emb->image[d])]];
      };
      Real inner = 0;
      for (int d = 0; d < e.num_darts(); ++d) {
        const int a = e.alpha(d);
        if (d > a || e.is_hole_dart(d) || e.is_hole_dart(a)) continue;
        inner += (spin(d) - spin(a)) * (spin(d) - spin(a)) / 2;
      }
      Real split = inner;
      for (int h = 0; h < e.num_holes(); ++h) {
        const auto& F = emb->fills[h];
        Decoration sf;
        for (int f : canonical_internal_faces(F))
          sf.push_back(sigma[qi[Q.face_of(emb->fill_image[h][F.face_dart(f)])]]);
        split += hamiltonian(F, sf, bcs[h], 1);
      }
      REQUIRE(static_cast<double>(split) == doctest::Approx(static_cast<double>(total)).epsilon(1e-12));
      if (ex.done()) break;
      const auto act = e.active_boundary();
      ex.step(act[rng() % act.size()]);
    }
  }
}

TEST_CASE("decorated sampler") {
  Rng rng(3);
  {
    auto p = ising(0);
    const auto [m, s] = sample_decorated(1, {1, -1}, p, rng);
    CHECK(m.num_internal_faces() == 0);
    CHECK(s.empty());
  }
  CHECK_THROWS_AS(DecoratedBoltzmann(ising(1.0L / 20)), Error);

  // Map marginal on Q^{1,<=2}, conditional on at most two faces.
  const BoundaryCondition b = {1, -1};
  const auto p = ising(1.0L / 48);
  const DecoratedBoltzmann D(p);
  std::vector<std::string> codes;
  std::vector<double> w;
  for (int f = 0; f <= 2; ++f)
    for (const auto& m : generate_all(1, f)) {
      codes.push_back(canonical_code(m));
      w.push_back(static_cast<double>(std::pow(p.base.q, static_cast<Real>(f)) * D.Z(m, b)));
    }
  const double W = static_cast<double>(decorated_partition_upto(1, b, p, 2));
  std::vector<double> obs(codes.size(), 0);
  long kept = 0;
  for (int i = 0; i < 100000; ++i) {
    const auto m = D.sample(1, b, rng).first;
    if (m.num_internal_faces() > 2) continue;
    ++kept;
    const auto c = canonical_code(m);
    obs[std::find(codes.begin(), codes.end(), c) - codes.begin()] += 1;
  }
  std::vector<double> exp;
  for (double x : w) exp.push_back(kept * x / W);
  const auto r = stats::chi_square_gof(obs, exp);
  MESSAGE("map marginal chi2 p = " << r.p_value);
  CHECK(r.p_value > 0.01);
}

TEST_CASE("conditional spin laws") {
  Rng rng(5);
  const auto quad = decode(kQuad);
  const BoundaryCondition b = {1, 1, -1, 1};
  const auto p = ising(1.0L / 48, 0.4L);
  const DecoratedBoltzmann D(p);
  const double hp = static_cast<double>(hamiltonian(quad, {1}, b, p.beta));
  const double hm = static_cast<double>(hamiltonian(quad, {-1}, b, p.beta));
  const double pp = std::exp(-hp) / (std::exp(-hp) + std::exp(-hm));
  const int N = 100000;
  int up = 0;
  for (int i = 0; i < N; ++i) up += D.sample_spins(quad, b, rng)[0] > 0;
  CHECK(std::fabs(up - N * pp) <= 3 * std::sqrt(N * pp * (1 - pp)));

  // Gaussian single face with four phantoms: mean of b, variance 1/(4 beta).
  const DecoratedBoltzmann G(gaussian(1.0L / 48, 2));
  const BoundaryCondition g = {0, 1, 2, 0.6};
  double s1 = 0, s2 = 0;
  for (int i = 0; i < N; ++i) {
    const double x = static_cast<double>(G.sample_spins(quad, g, rng)[0]);
    s1 += x;
    s2 += x * x;
  }
  const double mean = s1 / N, var = s2 / N - mean * mean;
  CHECK(std::fabs(mean - 0.9) <= 3 * std::sqrt(0.125 / N));
  CHECK(std::fabs(var - 0.125) <= 3 * 0.125 * std::sqrt(2.0 / N));
}

TEST_CASE("decorated weak Markov, small runs") {
  Rng rng(11);
  const DecoratedBoltzmann D(ising(1.0L / 48));
  const auto subq = replay(1, {PeelEvent::t1()});
  auto rep = decorated_weak_markov_test(1, {1, -1}, D, subq, 20000, rng);
  MESSAGE(rep.to_text());
  REQUIRE(rep.holes.size() == 1);
  CHECK(rep.holes[0].r.p_value > 0.001);

  rep = decorated_weak_markov_test(1, {1, 1}, D, MapWithHoles{}, 20000, rng);
  CHECK(rep.hits == 20000);
  CHECK(rep.holes[0].r.p_value > 0.001);

  const DecoratedBoltzmann G(gaussian(1.0L / 48));
  DecoratedMarkovOptions opt;
  opt.fill_faces = 2;
  rep = decorated_weak_markov_test(1, {0.5, -0.5}, G, subq, 5000, rng, opt);
  MESSAGE(rep.to_text());
  CHECK(rep.holes[0].r.p_value > 0.001);

  opt.min_bin = 100000;
  CHECK_THROWS_AS(decorated_weak_markov_test(1, {0.5, -0.5}, G, subq, 200, rng, opt), Error);
}
