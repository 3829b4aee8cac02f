#pragma once

#include <functional>
#include <string>
#include <vector>

#include "qmaps/boltzmann.hpp"
#include "qmaps/decorated.hpp"
#include "qmaps/map.hpp"
#include "qmaps/stats.hpp"

namespace qm {

// Dual of a closed map.  Internal faces become vertices 0..n_internal-1 and
// the root face splits into 2l phantom vertices n_internal + j (phantom j on
// the root-face dart phi^{-j}(root), as in the decorated model).  Each map
// edge is one dual edge, oriented from its smaller dart, except the root
// edge: it is edge 0 and starts at phantom 0.
struct DualSkeleton {
  MapWithHoles map;
  std::string code;
  int n_internal = 0;
  int n_phantom = 0;
  struct Edge {
    int u, v, dart;
  };
  std::vector<Edge> edges;
  std::vector<std::vector<int>> incident;  // edge ids per node, a loop listed twice

  int semi_perimeter() const { return n_phantom / 2; }
  bool is_phantom(int node) const { return node >= n_internal; }
  int num_edges() const { return static_cast<int>(edges.size()); }
};
DualSkeleton dual_skeleton(const MapWithHoles& m);

// The skeleton class Q^{l, f <= cap} in census order.
std::vector<DualSkeleton> capped_skeletons(int l, int cap);

// Total mass exp(-(u-v)^2 / 2w) / sqrt(2 pi w) of the unnormalised bridge.
double bridge_mass(double u, double v, double w);
double log_bridge_mass(double u, double v, double w);

// |int bridge_mass(u,z,w1) bridge_mass(z,v,w2) dz - bridge_mass(u,v,w1+w2)|.
double bridge_decompose_check(double u, double v, double w1, double w2);

// Values of a path at increasing times t[0] = 0 < ... < t.back() = length.
struct BridgePath {
  std::vector<double> t, x;
  double length() const { return t.empty() ? 0 : t.back(); }
  double value_at(double s) const;  // s must be a grid time
};

// Brownian bridge from u to v over [0, w] on a dyadic grid of step <= h,
// built by midpoint bisection.
BridgePath bridge_sample(double u, double v, double w, double h, Rng& rng);
// Adds time s to the grid, drawn from the bridge between its neighbours;
// returns the value there.  Existing points are kept.
double refine(BridgePath& p, double s, Rng& rng);

struct McmcOptions {
  double length_step = 1.0;  // sd of the log-length random walk
  double spin_step = 1.0;    // sd of the spin random walk (continuous mu)
  long burn_in = 2000;       // sweeps
  int thin = 4;              // sweeps per recorded sample
};

// beta is fixed to 1; (q, lambda, beta) -> (q beta^2, lambda beta, 1) is the
// reduction for other values.
struct MetricParams {
  double q = 0.5;
  double lambda = 1;
  SpinMeasure mu = SpinMeasure::gaussian();
  int skeleton_cap = 3;
  McmcOptions mcmc;
};

// Point of the capped state space: skeleton index, one length per edge and
// one spin per internal vertex.
struct MetricState {
  int skeleton = 0;
  std::vector<double> lengths, spins;
};

// log of q^{|V_i|} prod_e e^{-lambda w_e} bridge_mass(s_u, s_v, w_e) times the
// mu weights of the spins (Lebesgue for the Gaussian measure).
double log_metric_density(const DualSkeleton& s, const std::vector<double>& lengths,
                          const std::vector<double>& spins, const std::vector<double>& b,
                          const MetricParams& p);
double metric_density(const DualSkeleton& s, const std::vector<double>& lengths,
                      const std::vector<double>& spins, const std::vector<double>& b,
                      const MetricParams& p);
// Same density with every length integrated out:
// q^{|V_i|} prod_e exp(-sqrt(2 lambda) |s_u - s_v|) / sqrt(2 lambda).
double log_collapsed_density(const DualSkeleton& s, const std::vector<double>& spins,
                             const std::vector<double>& b, const MetricParams& p);

// Draw of an edge length from e^{-lambda w} bridge_mass(d, 0, w) (generalised
// inverse Gaussian with index 1/2) and its normalised log density.
double sample_edge_length(double d, double lambda, Rng& rng);
double log_edge_length_density(double w, double d, double lambda);

struct Transition {
  enum Kind { Length, Spin, Skeleton };
  Kind kind = Length;
  double log_target_from = 0, log_target_to = 0;
  double log_proposal_forward = 0, log_proposal_backward = 0;
  double accept = 0;
  bool accepted = false;
};

struct ChainDiagnostics {
  long sweeps = 0;
  long recorded = 0;
  long proposed[3] = {0, 0, 0};
  long accepted[3] = {0, 0, 0};
  double ess_root_length = 0;
  double ess_faces = 0;

  double acceptance(Transition::Kind k) const {
    return proposed[k] ? static_cast<double>(accepted[k]) / proposed[k] : 0;
  }
  std::string to_text() const;
};

// Metropolis-within-Gibbs on the capped metric law: log-random-walk length
// moves, spin moves (random walk, or an exact draw for discrete mu), and an
// independence move on the skeleton that redraws spins from a fixed proposal
// and lengths from their exact conditional law.
class MetricChain {
 public:
  MetricChain(int l, std::vector<double> b, MetricParams p,
              std::vector<DualSkeleton> skeletons = {});

  const MetricParams& params() const { return p_; }
  const std::vector<double>& boundary() const { return b_; }
  const std::vector<DualSkeleton>& skeletons() const { return sk_; }
  const DualSkeleton& skeleton() const { return sk_[x_.skeleton]; }
  const MetricState& state() const { return x_; }
  double log_target() const;

  double root_length() const { return x_.lengths[0]; }
  double root_far_spin() const;  // spin at the far end of the root edge
  bool root_far_internal() const;

  void sweep(Rng& rng);
  void set_log(std::function<void(const Transition&)> f) { log_ = std::move(f); }
  const ChainDiagnostics& counters() const { return diag_; }

 private:
  double node_spin(const DualSkeleton& s, const std::vector<double>& spins, int v) const;
  void length_move(int e, Rng& rng);
  void spin_move(int i, Rng& rng);
  void skeleton_move(Rng& rng);
  double log_spin_proposal(const std::vector<double>& spins) const;

  std::vector<double> b_;
  MetricParams p_;
  std::vector<DualSkeleton> sk_;
  std::vector<double> log_mu_;  // log of the normalised discrete mu weights
  std::vector<std::vector<int>> by_faces_;  // skeleton ids per face count, nonempty classes only
  double prop_mean_ = 0, prop_sd_ = 1;
  MetricState x_;
  ChainDiagnostics diag_;
  std::function<void(const Transition&)> log_;
};

// Runs burn-in, then records `samples` states `thin` sweeps apart, calling
// visit after each.  Diagnostics include effective sample sizes of the root
// length and of the face count.
ChainDiagnostics mcmc_sample_metric(int l, const std::vector<double>& b, const MetricParams& p,
                                    long samples, Rng& rng,
                                    const std::function<void(const MetricChain&)>& visit);

// Exact sampler for the capped law, by rejection on the length-integrated
// density (lengths are then drawn from their conditional law).  Independent
// of the chain; the tests use it as the reference law.
class MetricExact {
 public:
  MetricExact(int l, MetricParams p, std::vector<DualSkeleton> skeletons = {});
  const std::vector<DualSkeleton>& skeletons() const { return sk_; }
  MetricState sample(const std::vector<double>& b, Rng& rng) const;

 private:
  MetricState sample_gaussian(const std::vector<double>& b, Rng& rng) const;
  MetricState sample_discrete(const std::vector<double>& b, Rng& rng) const;

  MetricParams p_;
  std::vector<DualSkeleton> sk_;
  // Gaussian mu: spanning forest from the phantoms.
  struct Tree {
    std::vector<int> order, parent_edge, other_edges;
  };
  std::vector<Tree> trees_;
  std::vector<double> cdf_;  // skeleton law of the proposal
};

// A metric map with its decoration: lengths, vertex spins, phantom values and
// optionally one bridge path per edge.
struct MetricMap {
  DualSkeleton skel;
  std::vector<double> lengths, spins, b;
  std::vector<BridgePath> paths;  // empty: no path stored yet

  double node_value(int v) const;
};
// Samples a bridge path on every edge, with grid step w_e / grid.
MetricMap decorate(const DualSkeleton& s, const MetricState& x, const std::vector<double>& b,
                   Rng& rng, int grid = 64);

// Edges with a phantom endpoint.
std::vector<int> active_edges(const MetricMap& m);

struct Type3Peel {
  double explored = 0;    // min(L, w_e)
  BridgePath segment;     // decoration on [0, explored] from the marked end
  bool full = false;      // the whole edge was consumed
  int revealed = -1;      // newly revealed internal vertex, if any
  double tip = 0;         // decoration at the tip
  std::vector<int> new_active;
  MetricMap remainder;    // partial peel: the tip is the phantom of the marked end
  int edge = -1, phantom = -1;
  bool reversed = false;  // the marked end is the edge's v end
};
// Explores edge e for length L from its phantom end (the u end if both are
// phantom).  Points missing from the path are drawn with rng.
Type3Peel type3_peel(const MetricMap& m, int e, double L, Rng& rng);
// Inverse of a partial peel.
MetricMap glue_type3(const Type3Peel& p);

struct P3Options {
  std::vector<double> t_grid = {0.2, 0.4, 0.6, 0.8, 1.0, 1.2, 1.4, 1.6, 1.8, 2.0};
  double eps = 0.05;     // half-width of the window around b(0)
  int batches = 20;      // batch means for the standard errors
  long min_hits = 200;   // samples with w_root > t needed at every t
};

struct P3Report {
  std::vector<double> t, p3, se;  // estimate and batch-means standard error
  std::vector<long> hits;
  stats::LinearFit fit;           // log(sqrt(2 pi t) p3) against t
  double se_intercept = 0, se_slope = 0, z_intercept = 0;
  ChainDiagnostics diag;
  std::string to_text() const;
};

// Estimates p3(t), the density of {root edge longer than t, decoration at t in
// b(0) +- eps} per unit length, from chain samples.  Each sample contributes
// the exact probability of the window given the root length and the far
// spin (the bridge value at t is Gaussian given those).
P3Report p3_shape_test(int l, const std::vector<double>& b, const MetricParams& p, long n,
                       Rng& rng, const P3Options& opt = {});

struct MidEdgeOptions {
  int bins = 4;
  long min_bin = 50;
  long min_spin = 20;  // KS on the far spin needs this many internal far ends per side
  // Sweeps between chain samples, at least.  The tests treat chain samples as
  // independent; at 4 sweeps the skeleton chi-square is visibly anti-conservative.
  int thin = 16;
  // Replace the chain by exact samples at b: both sides are then exact and the
  // harness runs under its own null.
  bool exact_chain = false;
};

struct MidEdgeTest {
  int bin = 0;
  std::string quantity;  // skeleton, residual_length, far_spin
  long n_chain = 0, n_fresh = 0;
  stats::TestResult r;
};

struct MidEdgeReport {
  double t = 0;
  long samples = 0, hits = 0;
  std::vector<double> bin_edges;
  std::vector<MidEdgeTest> tests;
  ChainDiagnostics diag;
  std::vector<double> p_values() const;
  std::string to_text() const;
};

// Conditions chain samples on {root edge longer than t}, draws the tip value
// x, and compares the remainder (skeleton, w - t, far spin) within tip-value
// quantile bins against exact samples at the boundary b with b(0) replaced by
// x.  Tip values of the second half of the hits drive the exact samples; the
// first half is the chain side, so the two sides are independent.
MidEdgeReport mid_edge_markov_test(int l, const std::vector<double>& b, const MetricParams& p,
                                   double t, long n, Rng& rng, const MidEdgeOptions& opt = {});

// "edge,u,v,length" rows under a header with the skeleton code.
std::string metric_csv(const MetricMap& m);
// "edge,t,x" rows; the header line declares the grid.
std::string path_csv(const MetricMap& m, int grid);

}  // namespace qm
