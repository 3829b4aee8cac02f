#include "qmaps/boltzmann.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "qmaps/census.hpp"

namespace qm {

Real to_real(const mpz_class& x) {
  if (sgn(x) == 0) return 0;
  const size_t bits = mpz_sizeinbase(x.get_mpz_t(), 2);
  mpz_class top = abs(x);
  long shift = 0;
  if (bits > 64) {
    shift = static_cast<long>(bits - 64);
    top >>= shift;
  }
  std::uint64_t word = 0;
  mpz_export(&word, nullptr, -1, sizeof(word), 0, 0, top.get_mpz_t());
  const Real v = std::ldexp(static_cast<Real>(word), static_cast<int>(shift));
  return sgn(x) < 0 ? -v : v;
}

Boltzmann::Boltzmann(BoltzmannParams p) : p_(p) {
  if (!(p_.q >= 0) || p_.q > 1.0L / 12)
    throw Error(Errc::PreconditionViolation, "q must lie in [0, 1/12]");
  if (p_.face_cap < 0) throw Error(Errc::PreconditionViolation, "negative face cap");
}

Real Boltzmann::weight(int f) const {
  if (f == 0) return 1;
  return std::pow(p_.q, static_cast<Real>(f));
}

const PartitionValue& Boltzmann::partition(int k) const {
  if (k < 0) throw Error(Errc::OutOfBounds, "negative semi-perimeter");
  if (k < static_cast<int>(have_.size()) && have_[k]) return cache_[k];
  if (k >= static_cast<int>(have_.size())) {
    have_.resize(k + 1, 0);
    cache_.resize(k + 1);
  }
  const int cap = p_.face_cap;
  const CensusTable* t;
  try {
    t = &census(k, cap + 1);
  } catch (const std::bad_alloc&) {
    throw Error(Errc::CensusMissing, "census table too large");
  }
  PartitionValue v;
  Real last = 0;
  for (int f = 0; f <= cap; ++f) {
    last = to_real(t->count(k, f)) * weight(f);
    v.W += last;
  }
  if (p_.q > 0) {
    const Real next = to_real(t->count(k, cap + 1)) * weight(cap + 1);
    if (next > 0) {
      // Term ratios climb towards 12q from below; take the larger of the
      // limit and the last observed ratio.
      Real rho = 12 * p_.q;
      if (last > 0) rho = std::max(rho, next / last);
      v.tail_bound = rho < 1 ? next / (1 - rho) / v.W : std::numeric_limits<Real>::infinity();
    }
  }
  if (v.tail_bound > p_.tail_tol) {
    if (!p_.allow_tail)
      throw Error(Errc::TailToleranceNotMet,
                  "W^" + std::to_string(k) + " tail estimate " +
                      std::to_string(static_cast<double>(v.tail_bound)) + " exceeds tolerance");
    v.tail_warning = true;
  }
  cache_[k] = v;
  have_[k] = 1;
  return cache_[k];
}

Real Boltzmann::prob_exact(const MapWithHoles& m) const {
  if (m.is_cemetery() || m.num_holes() != 0)
    throw Error(Errc::PreconditionViolation, "prob_exact needs a hole-free map");
  return prob_class(m.semi_perimeter(), m.num_internal_faces());
}

std::vector<Real> Boltzmann::face_law(int k) const {
  const Real w = W(k);
  const auto& t = census(k, p_.face_cap + 1);
  std::vector<Real> law(p_.face_cap + 1);
  for (int f = 0; f <= p_.face_cap; ++f) law[f] = to_real(t.count(k, f)) * weight(f) / w;
  return law;
}

std::vector<std::pair<PeelEvent, Real>> Boltzmann::peel_probabilities(int k) const {
  if (k < 1) throw Error(Errc::PreconditionViolation, "peeling needs semi-perimeter >= 1");
  const Real w = W(k);
  std::vector<std::pair<PeelEvent, Real>> out;
  out.emplace_back(PeelEvent::t1(), p_.q > 0 ? p_.q * W(k + 1) / w : Real(0));
  for (int l1 = 0; l1 < k; ++l1)
    out.emplace_back(PeelEvent::t2(l1, k - 1 - l1), W(l1) * W(k - 1 - l1) / w);
  return out;
}

int Boltzmann::sample_faces(int k, Rng& rng) const {
  if (k >= static_cast<int>(cdf_.size())) cdf_.resize(k + 1);
  auto& cdf = cdf_[k];
  if (cdf.empty()) {
    const auto law = face_law(k);
    Real acc = 0;
    for (Real x : law) cdf.push_back(acc += x);
    // Rounding may leave the total short of 1; the last populated stratum
    // takes the slack.
    for (size_t f = cdf.size(); f-- > 0;)
      if (law[f] > 0) {
        for (size_t g = f; g < cdf.size(); ++g) cdf[g] = 2;
        break;
      }
  }
  std::uniform_real_distribution<Real> U(0, 1);
  const Real u = U(rng);
  return static_cast<int>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
}

MapWithHoles Boltzmann::sample(int k, Rng& rng) const {
  return sample_uniform(k, sample_faces(k, rng), rng);
}

PartitionValue partition(int l, const BoltzmannParams& p) { return Boltzmann(p).partition(l); }

Real prob_exact(const MapWithHoles& m, const BoltzmannParams& p) {
  return Boltzmann(p).prob_exact(m);
}

std::vector<std::pair<PeelEvent, Real>> peel_probabilities(int l, const BoltzmannParams& p) {
  return Boltzmann(p).peel_probabilities(l);
}

mpz_class uniform_below(const mpz_class& n, Rng& rng) {
  if (sgn(n) <= 0) throw Error(Errc::PreconditionViolation, "uniform_below needs n > 0");
  const size_t bits = mpz_sizeinbase(n.get_mpz_t(), 2);
  const size_t words = (bits + 63) / 64;
  const unsigned spare = static_cast<unsigned>(words * 64 - bits);
  std::vector<std::uint64_t> buf(words);
  mpz_class x;
  do {
    for (auto& w : buf) w = rng();
    buf.back() >>= spare;  // most significant word, least significant first
    mpz_import(x.get_mpz_t(), words, -1, sizeof(std::uint64_t), 0, 0, buf.data());
  } while (x >= n);
  return x;
}

namespace {

struct UniformSampler {
  const CensusTable& t;
  Rng& rng;
  std::vector<PeelEvent> out;

  // Completions of a single hole of semi-perimeter k with r internal faces,
  // chosen one event at a time in proportion to their counts.
  void run(int k, int r) {
    if (k == 0) return;
    mpz_class u = uniform_below(t.count(k, r), rng);
    if (r > 0) {
      const mpz_class& w = t.count(k + 1, r - 1);
      if (u < w) {
        out.push_back(PeelEvent::t1());
        run(k + 1, r - 1);
        return;
      }
      u -= w;
    }
    for (int l1 = 0; l1 < k; ++l1) {
      const int l2 = k - 1 - l1;
      for (int r1 = 0; r1 <= r; ++r1) {
        const mpz_class w = t.count(l1, r1) * t.count(l2, r - r1);
        if (u < w) {
          out.push_back(PeelEvent::t2(l1, l2));
          run(l1, r1);
          run(l2, r - r1);
          return;
        }
        u -= w;
      }
    }
    throw Error(Errc::PreconditionViolation, "census recursion does not add up");
  }
};

}  // namespace

std::vector<PeelEvent> sample_uniform_events(int l, int f, Rng& rng) {
  if (l < 1 || f < 0) throw Error(Errc::EmptyClass, "Q^{l,f} needs l >= 1, f >= 0");
  const auto& t = census(l, f);
  if (sgn(t.count(l, f)) == 0) throw Error(Errc::EmptyClass, "N(l,f) = 0");
  UniformSampler s{t, rng, {}};
  s.run(l, f);
  return std::move(s.out);
}

MapWithHoles sample_uniform(int l, int f, Rng& rng) {
  return replay(l, sample_uniform_events(l, f, rng));
}

MapWithHoles sample_boltzmann(int l, const BoltzmannParams& p, Rng& rng) {
  return Boltzmann(p).sample(l, rng);
}

}  // namespace qm
