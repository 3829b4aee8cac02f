#pragma once

#include <string>
#include <utility>
#include <vector>

#include "qmaps/boltzmann.hpp"
#include "qmaps/map.hpp"
#include "qmaps/markov.hpp"

namespace qm {

// Reference measure for one face spin.
struct SpinMeasure {
  enum Kind { Ising, Gaussian, Discrete };
  Kind kind = Ising;
  std::vector<Real> support;  // Ising and Discrete
  std::vector<Real> weights;

  static SpinMeasure ising();
  static SpinMeasure gaussian();  // Lebesgue on the line
  static SpinMeasure discrete(std::vector<Real> support, std::vector<Real> weights);

  bool is_discrete() const { return kind != Gaussian; }
  bool in_support(Real x) const;
  std::string name() const;
};

// Spins of the 2l phantom faces; phantom j sits on the root-face dart
// phi^{-j}(root), which is also how glue lines a fill up with its hole.
using BoundaryCondition = std::vector<Real>;
// Phantom index of each root-face dart, -1 elsewhere.
std::vector<int> phantom_index(const MapWithHoles& m);
// Spins of the internal faces in canonical_internal_faces order.
using Decoration = std::vector<Real>;

struct DecoratedParams {
  BoltzmannParams base;
  Real beta = 1;
  SpinMeasure mu = SpinMeasure::ising();
};

// Face multigraph of a hole-free map with its phantom faces.  Nodes
// 0..n_internal-1 are internal faces (canonical order), node n_internal + j is
// phantom j.  Every edge of the map appears once; loops are kept.
struct FaceGraph {
  int n_internal = 0;
  int n_phantom = 0;
  std::vector<int> faces;  // map face id of each internal node
  struct Edge {
    int u, v, mult;
  };
  std::vector<Edge> edges;  // u <= v, one entry per node pair

  int multiplicity(int u, int v) const;
};
FaceGraph face_adjacency(const MapWithHoles& m);

Real hamiltonian(const MapWithHoles& m, const Decoration& sigma, const BoundaryCondition& b,
                 Real beta);

// Exact Z^b(m): summation over the support for discrete measures, Gaussian
// integral through the Dirichlet face Laplacian otherwise.
Real partition_decorated(const MapWithHoles& m, const BoundaryCondition& b,
                         const DecoratedParams& p);

// Decorated q-Boltzmann law on the face-capped class, sampled by rejection
// from the plain Boltzmann law at q * M where M bounds Z^b per internal face
// (total mass of mu, or sqrt(2 pi / beta) for the Gaussian measure).
class DecoratedBoltzmann {
 public:
  explicit DecoratedBoltzmann(DecoratedParams p);

  const DecoratedParams& params() const { return p_; }
  Real face_bound() const { return M_; }
  const Boltzmann& proposal() const { return prop_; }

  Real Z(const MapWithHoles& m, const BoundaryCondition& b) const;
  // Law of m up to a factor depending only on (l, b), as the sampler realises it.
  Real unnormalized_prob(const MapWithHoles& m, const BoundaryCondition& b) const;

  std::pair<MapWithHoles, Decoration> sample(int l, const BoundaryCondition& b, Rng& rng) const;
  // Exact conditional law of the spins given the map.
  Decoration sample_spins(const MapWithHoles& m, const BoundaryCondition& b, Rng& rng) const;

 private:
  DecoratedParams p_;
  Real M_;
  Boltzmann prop_;
};

std::pair<MapWithHoles, Decoration> sample_decorated(int l, const BoundaryCondition& b,
                                                     const DecoratedParams& p, Rng& rng);

// Sum of q^f Z^b(m) over Q^{l,f}, f <= fmax, by enumeration.
Real decorated_partition_upto(int l, const BoundaryCondition& b, const DecoratedParams& p,
                              int fmax);

// max |P(m1)/P(m2) - Z(m1)/Z(m2)| over pairs in Q^{l,f}, f <= fmax.
Real gibbs_ratio_check(int l, const BoundaryCondition& b, int fmax, const DecoratedParams& p);

// Boundary condition of each hole of e, read off the explored side: spins of
// the internal faces of e (indexed by canonical_internal_faces(e)) and b.
std::vector<BoundaryCondition> hole_boundaries(const MapWithHoles& e, const Decoration& sigma,
                                               const BoundaryCondition& b);

struct DecoratedMarkovOptions {
  int fill_faces = 3;  // fills are tested conditionally on having at most this many faces
  int bins = 4;        // quantile bins per revealed spin (Gaussian)
  long min_bin = 50;   // BinTooThin below this many hits in a bin
};

MarkovTestReport decorated_weak_markov_test(int l, const BoundaryCondition& b,
                                            const DecoratedBoltzmann& D, const MapWithHoles& subq,
                                            long n, Rng& rng,
                                            const DecoratedMarkovOptions& opt = {});

std::string decoration_csv(const MapWithHoles& m, const Decoration& sigma);

}  // namespace qm
