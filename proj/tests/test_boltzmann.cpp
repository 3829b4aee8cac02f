#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include "doctest.h"
#include "qmaps/boltzmann.hpp"
#include "qmaps/census.hpp"
#include "qmaps/stats.hpp"

using namespace qm;

TEST_CASE("bigint to long double") {
  mpz_class big = 1;
  big <<= 200;
  CHECK(to_real(big) == std::ldexp(1.0L, 200));
  mpz_class x("123456789012345678901234567890");
  CHECK(std::abs(to_real(x) / 123456789012345678901234567890.0L - 1) < 1e-18L);
  CHECK(to_real(mpz_class(-7)) == -7);
}

TEST_CASE("partition values") {
  BoltzmannParams zero{0.0L, 60, 1e-9L, false};
  for (int l = 1; l <= 6; ++l) {
    auto v = partition(l, zero);
    CHECK(v.W == to_real(catalan(l)));
    CHECK(v.tail_bound == 0);
  }
  BoltzmannParams cap0{1.0L / 24, 0, 1e-9L, true};
  auto c = partition(1, cap0);
  CHECK(c.W == 1);
  CHECK(c.tail_warning);
  cap0.allow_tail = false;
  CHECK_THROWS_AS(partition(1, cap0), Error);

  BoltzmannParams p;
  auto v = partition(1, p);
  CHECK(v.tail_bound < 1e-9L);
  CHECK_FALSE(v.tail_warning);
  // Independent sum of the closed form 2 * 3^n (2n)! / (n! (n+2)!) q^n.
  long double ref = 0, term = 1;  // term = N(1,n) q^n
  for (int n = 0; n <= 60; ++n) {
    ref += term;
    term *= (12.0L - 30.0L / (n + 3)) / 24;
  }
  CHECK(std::abs(v.W / ref - 1) < 1e-15L);
  CHECK_THROWS_AS(Boltzmann(BoltzmannParams{0.1L}), Error);
}

TEST_CASE("prob_exact and peel probabilities") {
  BoltzmannParams p;
  Boltzmann B(p);
  auto a = decode("T1,T2(0,1),T2(0,0)");
  auto b = decode("T1,T2(1,0),T2(0,0)");
  CHECK(B.prob_exact(a) == B.prob_exact(b));
  CHECK(B.prob_exact(a) == p.q / B.W(1));

  BoltzmannParams zero{0.0L};
  Boltzmann Z(zero);
  for (const auto& t : generate_all(3, 0)) CHECK(Z.prob_exact(t) == 1.0L / 5);
  auto pz = Z.peel_probabilities(3);
  CHECK(pz[0].second == 0);
  long double s = 0;
  for (auto& [e, pr] : pz) s += pr;
  CHECK(std::abs(s - 1) < 1e-18L);

  for (int l = 1; l <= 4; ++l) {
    long double tot = 0;
    for (auto& [e, pr] : B.peel_probabilities(l)) tot += pr;
    CHECK(std::abs(tot - 1) < 1e-9L);
  }

  // Total mass of the enumerable strata against the face law.
  long double mass = 0;
  for (int f = 0; f <= 4; ++f)
    for (const auto& m : generate_all(1, f)) mass += B.prob_exact(m);
  auto law = B.face_law(1);
  long double head = 0;
  for (int f = 0; f <= 4; ++f) head += law[f];
  CHECK(std::abs(mass - head) < 1e-15L);
}

TEST_CASE("decomposition product") {
  Boltzmann B(BoltzmannParams{});
  long double worst = 0;
  for (int l = 1; l <= 3; ++l)
    for (int f = 0; f <= 3 && l + 2 * f <= 10; ++f)
      for (const auto& m : generate_all(l, f)) {
        auto ex = explore(m);
        long double prod = 1;
        for (size_t i = 0; i < ex.events.size(); ++i) {
          const auto& e = ex.maps[i];
          const int k = e.face_degree(e.holes()[0].face) / 2;
          for (auto& [ev, pr] : B.peel_probabilities(k))
            if (ev == ex.events[i]) prod *= pr;
        }
        worst = std::max(worst, std::abs(prod / B.prob_exact(m) - 1));
      }
  CHECK(worst < 1e-12L);
}

TEST_CASE("uniform bigint") {
  Rng rng(7);
  std::vector<double> counts(6, 0);
  for (int i = 0; i < 60000; ++i) counts[uniform_below(mpz_class(6), rng).get_ui()]++;
  auto r = stats::chi_square_gof(counts, std::vector<double>(6, 10000));
  CHECK(r.p_value > 0.001);
  mpz_class big("100000000000000000000000000000000000001");
  for (int i = 0; i < 100; ++i) CHECK(uniform_below(big, rng) < big);
}

TEST_CASE("uniform sampler") {
  Rng rng(11);
  for (int i = 0; i < 5; ++i) CHECK(encode(sample_uniform(1, 0, rng)) == "T2(0,0)");
  std::map<std::string, double> c;
  const int N = 100000;
  for (int i = 0; i < N; ++i) c[format_code(sample_uniform_events(1, 1, rng))]++;
  CHECK(c.size() == 2);
  const double sd = std::sqrt(N * 0.25);
  for (auto& [k, v] : c) CHECK(std::abs(v - N / 2.0) < 3 * sd);

  auto all = generate_codes(2, 2);
  std::map<std::string, double> h;
  for (const auto& code : all) h[code] = 0;
  const int M = 20 * static_cast<int>(all.size());
  for (int i = 0; i < M; ++i) h.at(format_code(sample_uniform_events(2, 2, rng)))++;
  std::vector<double> obs, exp;
  for (auto& [k, v] : h) {
    obs.push_back(v);
    exp.push_back(static_cast<double>(M) / all.size());
  }
  CHECK(stats::chi_square_gof(obs, exp).p_value > 0.01);
  CHECK_THROWS_AS(sample_uniform(0, 1, rng), Error);
}

TEST_CASE("Boltzmann sampler") {
  Rng rng(5);
  BoltzmannParams zero{0.0L};
  for (int i = 0; i < 20; ++i) CHECK(sample_boltzmann(3, zero, rng).num_internal_faces() == 0);

  // Fit of Q^{1,<=2} plus a remainder cell, over a sweep of 20 seeds.
  Boltzmann B(BoltzmannParams{});
  const int N = 100000;
  std::vector<double> strata(3, 0), pvals;
  for (int seed = 1; seed <= 20; ++seed) {
    Rng r(seed);
    std::map<std::string, double> cnt;
    double rest = 0;
    for (int i = 0; i < N; ++i) {
      const int f = B.sample_faces(1, r);
      if (f <= 2) {
        cnt[format_code(sample_uniform_events(1, f, r))]++;
        if (seed == 1) strata[f]++;
      } else {
        rest++;
      }
    }
    std::vector<double> obs, exp;
    double e_sum = 0;
    for (int f = 0; f <= 2; ++f)
      for (const auto& code : generate_codes(1, f)) {
        obs.push_back(cnt[code]);
        const double e = static_cast<double>(N * B.prob_exact(decode(code)));
        exp.push_back(e);
        e_sum += e;
      }
    obs.push_back(rest);
    exp.push_back(N - e_sum);
    pvals.push_back(stats::chi_square_gof(obs, exp).p_value);
  }
  CHECK(*std::min_element(pvals.begin(), pvals.end()) > 0.01 / 20);
  CHECK(stats::ks_uniform(pvals).p_value > 0.01);

  // q^{-f} reweighted stratum frequencies are proportional to N(1,f).
  for (int f = 0; f <= 2; ++f) {
    const double w = strata[f] / std::pow(1.0 / 24, f) / N / census(1, 2).count(1, f).get_d();
    CHECK(w == doctest::Approx(static_cast<double>(1 / B.W(1))).epsilon(0.05));
  }
}
