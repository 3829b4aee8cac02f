#include "qmaps/decorated.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <sstream>
#include <tuple>

#include "qmaps/census.hpp"
#include "qmaps/stats.hpp"

namespace qm {

SpinMeasure SpinMeasure::ising() { return {Ising, {-1, 1}, {1, 1}}; }

SpinMeasure SpinMeasure::gaussian() { return {Gaussian, {}, {}}; }

SpinMeasure SpinMeasure::discrete(std::vector<Real> support, std::vector<Real> weights) {
  if (support.empty() || support.size() != weights.size())
    throw Error(Errc::PreconditionViolation, "support and weights must be nonempty and match");
  for (Real w : weights)
    if (!(w > 0)) throw Error(Errc::PreconditionViolation, "spin weights must be positive");
  return {Discrete, std::move(support), std::move(weights)};
}

bool SpinMeasure::in_support(Real x) const {
  if (kind == Gaussian) return std::isfinite(x);
  return std::find(support.begin(), support.end(), x) != support.end();
}

std::string SpinMeasure::name() const {
  switch (kind) {
    case Ising: return "ising";
    case Gaussian: return "gaussian";
    default: return "discrete";
  }
}

int FaceGraph::multiplicity(int u, int v) const {
  if (u > v) std::swap(u, v);
  for (const auto& e : edges)
    if (e.u == u && e.v == v) return e.mult;
  return 0;
}

std::vector<int> phantom_index(const MapWithHoles& m) {
  std::vector<int> ph(m.num_darts(), -1);
  int x = m.root();
  for (int j = 0; j < 2 * m.semi_perimeter(); ++j) {
    ph[x] = j;
    x = m.phi_inv(x);
  }
  return ph;
}

namespace {

void need_closed(const MapWithHoles& m) {
  if (m.is_cemetery() || m.num_holes() != 0)
    throw Error(Errc::PreconditionViolation, "decorations live on hole-free maps");
}

void check_boundary(const MapWithHoles& m, const BoundaryCondition& b, const SpinMeasure* mu) {
  if (static_cast<int>(b.size()) != 2 * m.semi_perimeter())
    throw Error(Errc::MissingSpin, "boundary condition needs 2l values");
  if (mu)
    for (Real x : b)
      if (!mu->in_support(x))
        throw Error(Errc::PreconditionViolation, "boundary spin outside the support");
}

Real energy(const FaceGraph& g, const Decoration& s, const BoundaryCondition& b, Real beta) {
  Real h = 0;
  for (const auto& e : g.edges) {
    const Real a = e.u < g.n_internal ? s[e.u] : b[e.u - g.n_internal];
    const Real c = e.v < g.n_internal ? s[e.v] : b[e.v - g.n_internal];
    h += e.mult * (a - c) * (a - c);
  }
  return beta / 2 * h;
}

constexpr long kMaxConfigs = 1L << 22;

// Calls visit(config, weight) for every spin assignment of the internal faces.
template <class Visit>
void for_each_config(const FaceGraph& g, const BoundaryCondition& b, const DecoratedParams& p,
                     Visit&& visit) {
  const int n = g.n_internal;
  const auto& mu = p.mu;
  const int S = static_cast<int>(mu.support.size());
  long total = 1;
  for (int i = 0; i < n; ++i) {
    total *= S;
    if (n > 20 || total > kMaxConfigs)
      throw Error(Errc::TooManyFaces, "too many spin configurations to sum exactly", n);
  }
  std::vector<int> idx(n, 0);
  Decoration s(n, mu.support[0]);
  for (;;) {
    Real w = 1;
    for (int i = 0; i < n; ++i) w *= mu.weights[idx[i]];
    visit(s, w * std::exp(-energy(g, s, b, p.beta)));
    int i = 0;
    while (i < n && ++idx[i] == S) {
      idx[i] = 0;
      s[i] = mu.support[0];
      ++i;
    }
    if (i == n) break;
    s[i] = mu.support[idx[i]];
  }
}

using Mat = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic>;
using Vec = Eigen::Matrix<Real, Eigen::Dynamic, 1>;

// H = beta/2 (s'Ls - 2h's + c).
struct Quadratic {
  Mat L;
  Vec h;
  Real c = 0;
};

Quadratic quadratic_form(const FaceGraph& g, const BoundaryCondition& b) {
  const int n = g.n_internal;
  Quadratic Q{Mat::Zero(n, n), Vec::Zero(n), 0};
  for (const auto& e : g.edges) {
    const bool iu = e.u < n, iv = e.v < n;
    if (iu && iv) {
      if (e.u == e.v) continue;
      Q.L(e.u, e.u) += e.mult;
      Q.L(e.v, e.v) += e.mult;
      Q.L(e.u, e.v) -= e.mult;
      Q.L(e.v, e.u) -= e.mult;
    } else if (iu || iv) {
      const int i = iu ? e.u : e.v;
      const Real x = b[(iu ? e.v : e.u) - n];
      Q.L(i, i) += e.mult;
      Q.h(i) += e.mult * x;
      Q.c += e.mult * x * x;
    } else {
      const Real d = b[e.u - n] - b[e.v - n];
      Q.c += e.mult * d * d;
    }
  }
  return Q;
}

Real gaussian_Z(const FaceGraph& g, const BoundaryCondition& b, Real beta) {
  const int n = g.n_internal;
  const auto Q = quadratic_form(g, b);
  if (n == 0) return std::exp(-beta / 2 * Q.c);
  Eigen::LLT<Mat> llt(Q.L);
  if (llt.info() != Eigen::Success)
    throw Error(Errc::SingularForm, "face Laplacian is not positive definite");
  Real logdet = 0;
  const Mat& C = llt.matrixLLT();
  for (int i = 0; i < n; ++i) logdet += 2 * std::log(C(i, i));
  const Vec m = llt.solve(Q.h);
  const Real pi = std::numbers::pi_v<Real>;
  return std::exp(n / Real(2) * std::log(2 * pi / beta) - logdet / 2 -
                  beta / 2 * (Q.c - Q.h.dot(m)));
}

}  // namespace

FaceGraph face_adjacency(const MapWithHoles& m) {
  need_closed(m);
  FaceGraph g;
  g.faces = canonical_internal_faces(m);
  g.n_internal = static_cast<int>(g.faces.size());
  g.n_phantom = 2 * m.semi_perimeter();
  std::vector<int> node_of_face(m.num_faces(), -1);
  for (int i = 0; i < g.n_internal; ++i) node_of_face[g.faces[i]] = i;
  const auto ph = phantom_index(m);
  auto node = [&](int d) {
    return ph[d] >= 0 ? g.n_internal + ph[d] : node_of_face[m.face_of(d)];
  };
  std::map<std::pair<int, int>, int> mult;
  for (int d = 0; d < m.num_darts(); ++d) {
    const int a = m.alpha(d);
    if (d > a) continue;
    int u = node(d), v = node(a);
    if (u > v) std::swap(u, v);
    mult[{u, v}]++;
  }
  for (auto [uv, k] : mult) g.edges.push_back({uv.first, uv.second, k});
  return g;
}

Real hamiltonian(const MapWithHoles& m, const Decoration& sigma, const BoundaryCondition& b,
                 Real beta) {
  const auto g = face_adjacency(m);
  check_boundary(m, b, nullptr);
  if (static_cast<int>(sigma.size()) != g.n_internal)
    throw Error(Errc::MissingSpin, "decoration needs one spin per internal face");
  return energy(g, sigma, b, beta);
}

Real partition_decorated(const MapWithHoles& m, const BoundaryCondition& b,
                         const DecoratedParams& p) {
  const auto g = face_adjacency(m);
  check_boundary(m, b, &p.mu);
  if (!p.mu.is_discrete()) return gaussian_Z(g, b, p.beta);
  Real Z = 0;
  for_each_config(g, b, p, [&](const Decoration&, Real w) { Z += w; });
  return Z;
}

namespace {

Real face_bound_of(const DecoratedParams& p) {
  if (!(p.beta > 0)) throw Error(Errc::PreconditionViolation, "beta must be positive");
  if (!p.mu.is_discrete()) return std::sqrt(2 * std::numbers::pi_v<Real> / p.beta);
  Real s = 0;
  for (Real w : p.mu.weights) s += w;
  return s;
}

BoltzmannParams proposal_params(const DecoratedParams& p, Real M) {
  BoltzmannParams b = p.base;
  b.q = p.base.q * M;
  if (b.q > 1.0L / 12)
    throw Error(Errc::PreconditionViolation,
                "q times the per-face bound of Z exceeds 1/12; lower q");
  return b;
}

}  // namespace

DecoratedBoltzmann::DecoratedBoltzmann(DecoratedParams p)
    : p_(std::move(p)), M_(face_bound_of(p_)), prop_(proposal_params(p_, M_)) {}

Real DecoratedBoltzmann::Z(const MapWithHoles& m, const BoundaryCondition& b) const {
  return partition_decorated(m, b, p_);
}

Real DecoratedBoltzmann::unnormalized_prob(const MapWithHoles& m,
                                           const BoundaryCondition& b) const {
  need_closed(m);
  const int f = m.num_internal_faces();
  return prop_.prob_class(m.semi_perimeter(), f) * Z(m, b) /
         std::pow(M_, static_cast<Real>(f));
}

Decoration DecoratedBoltzmann::sample_spins(const MapWithHoles& m, const BoundaryCondition& b,
                                            Rng& rng) const {
  const auto g = face_adjacency(m);
  check_boundary(m, b, &p_.mu);
  const int n = g.n_internal;
  if (n == 0) return {};
  if (!p_.mu.is_discrete()) {
    const auto Q = quadratic_form(g, b);
    Eigen::LLT<Mat> llt(Q.L);
    if (llt.info() != Eigen::Success)
      throw Error(Errc::SingularForm, "face Laplacian is not positive definite");
    const Vec mean = llt.solve(Q.h);
    std::normal_distribution<double> N01;
    Vec z(n);
    for (int i = 0; i < n; ++i) z(i) = N01(rng);
    // Precision beta L = beta U'U, so U x = z / sqrt(beta) has covariance (beta L)^-1.
    const Vec x = llt.matrixU().solve(z) / std::sqrt(p_.beta);
    Decoration s(n);
    for (int i = 0; i < n; ++i) s[i] = mean(i) + x(i);
    return s;
  }
  std::vector<Decoration> configs;
  std::vector<Real> cdf;
  Real acc = 0;
  for_each_config(g, b, p_, [&](const Decoration& s, Real w) {
    configs.push_back(s);
    cdf.push_back(acc += w);
  });
  std::uniform_real_distribution<Real> U(0, acc);
  const Real u = U(rng);
  const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
  return configs[std::min<size_t>(it - cdf.begin(), configs.size() - 1)];
}

std::pair<MapWithHoles, Decoration> DecoratedBoltzmann::sample(int l, const BoundaryCondition& b,
                                                               Rng& rng) const {
  if (static_cast<int>(b.size()) != 2 * l)
    throw Error(Errc::MissingSpin, "boundary condition needs 2l values");
  std::uniform_real_distribution<Real> U(0, 1);
  for (long tries = 0; tries < 100000000L; ++tries) {
    auto m = prop_.sample(l, rng);
    const int f = m.num_internal_faces();
    const Real a = Z(m, b) / std::pow(M_, static_cast<Real>(f));
    if (U(rng) < a) {
      auto s = sample_spins(m, b, rng);
      return {std::move(m), std::move(s)};
    }
  }
  throw Error(Errc::EventNeverHit, "rejection sampler never accepted");
}

std::pair<MapWithHoles, Decoration> sample_decorated(int l, const BoundaryCondition& b,
                                                     const DecoratedParams& p, Rng& rng) {
  return DecoratedBoltzmann(p).sample(l, b, rng);
}

Real decorated_partition_upto(int l, const BoundaryCondition& b, const DecoratedParams& p,
                              int fmax) {
  Real W = 0;
  for (int f = 0; f <= fmax; ++f) {
    const Real w = f == 0 ? 1 : std::pow(p.base.q, static_cast<Real>(f));
    for (const auto& m : generate_all(l, f, l + 2 * fmax)) W += w * partition_decorated(m, b, p);
  }
  return W;
}

Real gibbs_ratio_check(int l, const BoundaryCondition& b, int fmax, const DecoratedParams& p) {
  const DecoratedBoltzmann D(p);
  Real worst = 0;
  for (int f = 0; f <= fmax; ++f) {
    std::vector<Real> P, Z;
    for (const auto& m : generate_all(l, f, l + 2 * fmax)) {
      P.push_back(D.unnormalized_prob(m, b));
      Z.push_back(D.Z(m, b));
    }
    for (size_t i = 0; i < P.size(); ++i)
      for (size_t j = 0; j < P.size(); ++j)
        worst = std::max(worst, std::fabs(P[i] / P[j] - Z[i] / Z[j]));
  }
  return worst;
}

std::vector<BoundaryCondition> hole_boundaries(const MapWithHoles& e, const Decoration& sigma,
                                               const BoundaryCondition& b) {
  if (e.is_cemetery()) return {b};
  check_boundary(e, b, nullptr);
  const auto faces = canonical_internal_faces(e);
  if (sigma.size() != faces.size())
    throw Error(Errc::MissingSpin, "decoration needs one spin per internal face");
  std::vector<int> idx(e.num_faces(), -1);
  for (size_t i = 0; i < faces.size(); ++i) idx[faces[i]] = static_cast<int>(i);
  const auto ph = phantom_index(e);
  std::vector<BoundaryCondition> out;
  for (int i = 0; i < e.num_holes(); ++i) {
    BoundaryCondition bc;
    for (int h : e.hole_walk(i)) {
      const int a = e.alpha(h);
      if (ph[a] >= 0)
        bc.push_back(b[ph[a]]);
      else if (idx[e.face_of(a)] >= 0)
        bc.push_back(sigma[idx[e.face_of(a)]]);
      else
        throw Error(Errc::BadHole, "hole edge without an explored side", h);
    }
    out.push_back(std::move(bc));
  }
  return out;
}

namespace {

// Spins of the internal faces of `part` (canonical order), read from the
// decoration of Q through a dart map part -> Q.
Decoration pull_spins(const MapWithHoles& part, const std::vector<int>& image,
                      const MapWithHoles& Q, const std::vector<int>& q_index,
                      const Decoration& sigma) {
  Decoration s;
  for (int f : canonical_internal_faces(part))
    s.push_back(sigma[q_index[Q.face_of(image[part.face_dart(f)])]]);
  return s;
}

std::string spin_key(const Decoration& s, const SpinMeasure& mu) {
  std::string k;
  for (Real x : s)
    k += static_cast<char>('0' + (std::find(mu.support.begin(), mu.support.end(), x) -
                                  mu.support.begin()));
  return k;
}

void add_into(stats::TestResult& acc, const stats::TestResult& r) {
  acc.statistic += r.statistic;
  acc.dof += r.dof;
  acc.cells += r.cells;
}

struct Hit {
  Decoration revealed;
  std::vector<BoundaryCondition> bcs;
  std::vector<std::string> keys;  // per hole; empty when the fill is too large
  std::vector<int> k;
};

struct Candidate {
  std::string code;
  MapWithHoles m;
  FaceGraph g;
  Real w;  // q^f
};

// Every map of semi-perimeter k with at most F faces.
const std::vector<Candidate>& candidates(int k, int F, Real q) {
  static std::map<std::tuple<int, int, Real>, std::vector<Candidate>> cache;
  auto& v = cache[{k, F, q}];
  if (v.empty())
    for (int f = 0; f <= F; ++f)
      for (auto& m : generate_all(k, f, k + 2 * F)) {
        auto code = canonical_code(m);
        auto g = face_adjacency(m);
        v.push_back({std::move(code), std::move(m), std::move(g),
                     f == 0 ? Real(1) : std::pow(q, static_cast<Real>(f))});
      }
  return v;
}

// Reference law of fill classes with at most F faces at semi-perimeter k and
// boundary condition bc; keys are code (+ spin string for discrete spins).
std::map<std::string, Real> reference_law(int k, const BoundaryCondition& bc,
                                          const DecoratedParams& p, int F, bool with_spins) {
  std::map<std::string, Real> law;
  Real W = 0;
  for (const auto& c : candidates(k, F, p.base.q)) {
    if (with_spins) {
      for_each_config(c.g, bc, p, [&](const Decoration& s, Real z) {
        law[c.code + "|" + spin_key(s, p.mu)] += c.w * z;
        W += c.w * z;
      });
    } else {
      const Real z = gaussian_Z(c.g, bc, p.beta);
      law[c.code] += c.w * z;
      W += c.w * z;
    }
  }
  for (auto& [key, v] : law) v /= W;
  return law;
}

}  // namespace

MarkovTestReport decorated_weak_markov_test(int l, const BoundaryCondition& b,
                                            const DecoratedBoltzmann& D, const MapWithHoles& subq,
                                            long n, Rng& rng, const DecoratedMarkovOptions& opt) {
  const auto& p = D.params();
  if (!subq.is_cemetery()) {
    if (auto st = validate_structure(subq); !st) throw Error(st.code, st.message, st.detail);
    if (subq.num_holes() < 1) throw Error(Errc::PreconditionViolation, "subq needs a hole");
    if (subq.semi_perimeter() != l) throw Error(Errc::WrongPerimeter, "subq semi-perimeter differs");
  }
  const bool discrete = p.mu.is_discrete();
  const int H = subq.is_cemetery() ? 1 : subq.num_holes();

  std::vector<Hit> hits;
  for (long i = 0; i < n; ++i) {
    const auto [Q, sigma] = D.sample(l, b, rng);
    const auto emb = embed(subq, Q);
    if (!emb) continue;
    const auto qf = canonical_internal_faces(Q);
    std::vector<int> q_index(Q.num_faces(), -1);
    for (size_t j = 0; j < qf.size(); ++j) q_index[qf[j]] = static_cast<int>(j);
    Hit h;
    if (!subq.is_cemetery()) h.revealed = pull_spins(subq, emb->image, Q, q_index, sigma);
    h.bcs = hole_boundaries(subq, h.revealed, b);
    for (int j = 0; j < H; ++j) {
      const auto& F = emb->fills[j];
      h.k.push_back(F.semi_perimeter());
      if (F.num_internal_faces() > opt.fill_faces) {
        h.keys.emplace_back();
        continue;
      }
      auto key = canonical_code(F);
      if (discrete) key += "|" + spin_key(pull_spins(F, emb->fill_image[j], Q, q_index, sigma), p.mu);
      h.keys.push_back(std::move(key));
    }
    hits.push_back(std::move(h));
  }
  if (hits.empty()) throw Error(Errc::EventNeverHit, "subq never contained in a sample");

  // Strata: exact revealed spins, or quantile bins of each revealed spin.
  std::vector<std::string> stratum(hits.size());
  if (discrete) {
    for (size_t i = 0; i < hits.size(); ++i) stratum[i] = spin_key(hits[i].revealed, p.mu);
  } else {
    const size_t r = hits[0].revealed.size();
    for (size_t c = 0; c < r; ++c) {
      std::vector<Real> col;
      for (const auto& h : hits) col.push_back(h.revealed[c]);
      std::sort(col.begin(), col.end());
      std::vector<Real> cut;
      for (int q = 1; q < opt.bins; ++q) cut.push_back(col[col.size() * q / opt.bins]);
      for (size_t i = 0; i < hits.size(); ++i) {
        const auto bin = std::upper_bound(cut.begin(), cut.end(), hits[i].revealed[c]) - cut.begin();
        stratum[i] += static_cast<char>('0' + bin);
      }
    }
    std::map<std::string, long> size;
    for (const auto& s : stratum) size[s]++;
    for (const auto& [s, c] : size)
      if (c < opt.min_bin) throw Error(Errc::BinTooThin, "revealed-spin bin " + s + " too thin");
  }

  MarkovTestReport rep;
  {
    std::ostringstream s;
    s << "independent decorated q-Boltzmann fills with the revealed boundary spins, mu="
      << p.mu.name() << ", beta=" << static_cast<double>(p.beta)
      << ", q=" << static_cast<double>(p.base.q)
      << (discrete ? "; strata: exact revealed spins" : "; strata: quantile bins of revealed spins");
    rep.reference = s.str();
    std::ostringstream t;
    t << "fills tested conditionally on at most " << opt.fill_faces
      << " faces; whole maps capped at " << p.base.face_cap << " faces";
    rep.truncation = t.str();
  }
  rep.samples = n;
  rep.hits = static_cast<long>(hits.size());

  std::map<std::string, std::vector<size_t>> groups;
  for (size_t i = 0; i < hits.size(); ++i) groups[stratum[i]].push_back(i);

  std::map<std::tuple<int, std::vector<Real>>, std::map<std::string, Real>> law_cache;
  auto law_of = [&](int k, const BoundaryCondition& bc) -> const std::map<std::string, Real>& {
    auto key = std::make_tuple(k, bc);
    auto it = law_cache.find(key);
    if (it == law_cache.end())
      it = law_cache.emplace(key, reference_law(k, bc, p, opt.fill_faces, discrete)).first;
    return it->second;
  };

  for (int j = 0; j < H; ++j) {
    SlotTest st;
    st.slot = j;
    for (const auto& [s, members] : groups) {
      // Exact boundary conditions can still differ inside a bin (Gaussian)
      // or through the semi-perimeter; expected counts add per sample.
      std::map<std::string, double> obs, exp;
      double n_in = 0;
      if (discrete) {
        std::map<std::pair<int, BoundaryCondition>, long> per_bc;
        for (size_t i : members)
          if (!hits[i].keys[j].empty()) per_bc[{hits[i].k[j], hits[i].bcs[j]}]++;
        for (const auto& [kb, c] : per_bc)
          for (const auto& [key, pr] : law_of(kb.first, kb.second))
            exp[key] += static_cast<double>(c * pr);
      } else {
        for (size_t i : members)
          if (!hits[i].keys[j].empty())
            for (const auto& [key, pr] :
                 reference_law(hits[i].k[j], hits[i].bcs[j], p, opt.fill_faces, false))
              exp[key] += static_cast<double>(pr);
      }
      for (size_t i : members)
        if (!hits[i].keys[j].empty()) {
          obs[hits[i].keys[j]] += 1;
          n_in += 1;
        }
      if (n_in == 0) continue;
      st.n += static_cast<long>(n_in);
      std::vector<double> o, e;
      for (const auto& [key, x] : exp) {
        e.push_back(x);
        auto it = obs.find(key);
        o.push_back(it == obs.end() ? 0.0 : it->second);
      }
      for (const auto& [key, c] : obs)
        if (!exp.count(key)) {  // impossible class: zero expectation
          o.push_back(c);
          e.push_back(0);
        }
      add_into(st.r, stats::chi_square_gof(o, e));
    }
    st.r.p_value = st.r.dof > 0 ? stats::chi2_sf(st.r.statistic, st.r.dof) : 1.0;
    rep.holes.push_back(st);
  }

  // Pairwise independence of fill classes inside each stratum.
  for (int a = 0; a < H; ++a)
    for (int c = a + 1; c < H; ++c) {
      PairTest pt;
      pt.a = a;
      pt.b = c;
      bool any = false;
      for (const auto& [s, members] : groups) {
        std::map<std::string, long> ra, rb;
        std::vector<std::pair<std::string, std::string>> pairs;
        for (size_t i : members) {
          pairs.emplace_back(hits[i].keys[a], hits[i].keys[c]);
          ra[pairs.back().first]++;
          rb[pairs.back().second]++;
        }
        const double N = static_cast<double>(pairs.size());
        const long keep = static_cast<long>(std::ceil(std::sqrt(5.0 * N)));
        std::map<std::string, int> ia, ib;
        for (const auto& [x, k] : ra)
          if (k >= keep) ia.emplace(x, static_cast<int>(ia.size()));
        for (const auto& [y, k] : rb)
          if (k >= keep) ib.emplace(y, static_cast<int>(ib.size()));
        const int R = static_cast<int>(ia.size()) + 1, C = static_cast<int>(ib.size()) + 1;
        std::vector<std::vector<double>> tab(R, std::vector<double>(C, 0));
        for (const auto& [x, y] : pairs)
          tab[ia.count(x) ? ia[x] : R - 1][ib.count(y) ? ib[y] : C - 1] += 1;
        pt.n += static_cast<long>(N);
        try {
          add_into(pt.r, stats::chi_square_independence(tab));
          any = true;
        } catch (const Error& e) {
          if (e.code() != Errc::DegenerateTable) throw;
        }
      }
      pt.skipped = !any;
      pt.r.p_value = pt.r.dof > 0 ? stats::chi2_sf(pt.r.statistic, pt.r.dof) : 1.0;
      rep.independence.push_back(pt);
    }
  return rep;
}

std::string decoration_csv(const MapWithHoles& m, const Decoration& sigma) {
  const auto faces = canonical_internal_faces(m);
  if (faces.size() != sigma.size())
    throw Error(Errc::MissingSpin, "decoration needs one spin per internal face");
  std::ostringstream s;
  s.precision(17);
  s << "face,spin\n";
  for (size_t i = 0; i < faces.size(); ++i)
    s << faces[i] << ',' << static_cast<double>(sigma[i]) << '\n';
  return s.str();
}

}  // namespace qm
