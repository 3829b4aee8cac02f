#pragma once

#include <gmpxx.h>

#include <limits>
#include <random>
#include <utility>
#include <vector>

#include "qmaps/map.hpp"
#include "qmaps/peeling.hpp"

namespace qm {

using Real = long double;
static_assert(std::numeric_limits<Real>::digits >= 64, "need an extended-precision long double");

using Rng = std::mt19937_64;

Real to_real(const mpz_class& x);

struct BoltzmannParams {
  Real q = 1.0L / 24;
  int face_cap = 60;
  Real tail_tol = 1e-9L;
  // Report an oversized tail through PartitionValue::tail_warning instead of throwing.
  bool allow_tail = false;
};

struct PartitionValue {
  Real W = 0;
  Real tail_bound = 0;  // relative to W
  bool tail_warning = false;
};

// Truncated partition functions W^k for a fixed parameter set, computed on
// demand and cached.
class Boltzmann {
 public:
  explicit Boltzmann(BoltzmannParams p);

  const BoltzmannParams& params() const { return p_; }
  const PartitionValue& partition(int k) const;
  Real W(int k) const { return partition(k).W; }
  // q^f (q^0 = 1 also at q = 0).
  Real weight(int f) const;
  // Probability of one given map in Q^{k,f}.
  Real prob_class(int k, int f) const { return weight(f) / W(k); }
  Real prob_exact(const MapWithHoles& m) const;
  // Law of the face count f <= face_cap at semi-perimeter k, normalised.
  std::vector<Real> face_law(int k) const;
  std::vector<std::pair<PeelEvent, Real>> peel_probabilities(int k) const;
  MapWithHoles sample(int k, Rng& rng) const;
  int sample_faces(int k, Rng& rng) const;

 private:
  BoltzmannParams p_;
  mutable std::vector<PartitionValue> cache_;
  mutable std::vector<char> have_;
  mutable std::vector<std::vector<Real>> cdf_;  // cumulative face law per k
};

PartitionValue partition(int l, const BoltzmannParams& p);
Real prob_exact(const MapWithHoles& m, const BoltzmannParams& p);
std::vector<std::pair<PeelEvent, Real>> peel_probabilities(int l, const BoltzmannParams& p);

// Uniform integer in [0, n), n > 0.
mpz_class uniform_below(const mpz_class& n, Rng& rng);
// Canonical codec events of a uniform member of Q^{l,f}.
std::vector<PeelEvent> sample_uniform_events(int l, int f, Rng& rng);
MapWithHoles sample_uniform(int l, int f, Rng& rng);
MapWithHoles sample_boltzmann(int l, const BoltzmannParams& p, Rng& rng);

}  // namespace qm
