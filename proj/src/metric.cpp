#include "qmaps/metric.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include "qmaps/census.hpp"
#include "qmaps/peeling.hpp"

namespace qm {

namespace {

constexpr double kPi = std::numbers::pi;

void need_params(const MetricParams& p) {
  if (!(p.q > 0) || !(p.lambda > 0) || !std::isfinite(p.q) || !std::isfinite(p.lambda))
    throw Error(Errc::PreconditionViolation, "metric law needs q > 0 and lambda > 0");
  if (p.mcmc.thin < 1 || p.mcmc.burn_in < 0 || !(p.mcmc.length_step > 0) ||
      !(p.mcmc.spin_step > 0))
    throw Error(Errc::PreconditionViolation, "bad chain settings");
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double log_mu_weight(const SpinMeasure& mu, double s) {
  if (!mu.is_discrete()) return 0;
  for (size_t k = 0; k < mu.support.size(); ++k)
    if (static_cast<double>(mu.support[k]) == s) return std::log(static_cast<double>(mu.weights[k]));
  throw Error(Errc::MissingSpin, "spin outside the support of mu");
}

void check_sizes(const DualSkeleton& s, const std::vector<double>* lengths,
                 const std::vector<double>& spins, const std::vector<double>& b) {
  if (lengths && static_cast<int>(lengths->size()) != s.num_edges())
    throw Error(Errc::PreconditionViolation, "need one length per edge");
  if (static_cast<int>(spins.size()) != s.n_internal)
    throw Error(Errc::MissingSpin, "need one spin per internal vertex");
  if (static_cast<int>(b.size()) != s.n_phantom)
    throw Error(Errc::MissingSpin, "need one boundary value per phantom vertex");
  if (lengths)
    for (double w : *lengths)
      if (!(w > 0)) throw Error(Errc::NonpositiveLength, "edge lengths must be positive");
}

double spin_of(const DualSkeleton& s, const std::vector<double>& spins,
               const std::vector<double>& b, int v) {
  return v < s.n_internal ? spins[v] : b[v - s.n_internal];
}

// Effective sample size from the initial positive sequence of autocorrelations.
double ess(const std::vector<double>& x) {
  const size_t n = x.size();
  if (n < 4) return static_cast<double>(n);
  double m = 0;
  for (double v : x) m += v;
  m /= n;
  auto acov = [&](size_t k) {
    double s = 0;
    for (size_t i = 0; i + k < n; ++i) s += (x[i] - m) * (x[i + k] - m);
    return s / n;
  };
  const double c0 = acov(0);
  if (c0 <= 0) return static_cast<double>(n);
  double tau = -1;
  for (size_t k = 0; k + 1 < std::min<size_t>(n, 2000); k += 2) {
    const double g = (acov(k) + acov(k + 1)) / c0;
    if (g <= 0) break;
    tau += 2 * g;
  }
  return n / std::max(tau, 1e-9);
}

std::vector<std::vector<int>> face_classes(const std::vector<DualSkeleton>& sk) {
  int fmax = 0;
  for (const auto& s : sk) fmax = std::max(fmax, s.n_internal);
  std::vector<std::vector<int>> by(fmax + 1);
  for (int i = 0; i < static_cast<int>(sk.size()); ++i) by[sk[i].n_internal].push_back(i);
  std::erase_if(by, [](const auto& v) { return v.empty(); });
  return by;
}

std::vector<DualSkeleton> skeletons_for(int l, const MetricParams& p,
                                        std::vector<DualSkeleton> given) {
  if (given.empty()) return capped_skeletons(l, p.skeleton_cap);
  for (const auto& s : given)
    if (s.semi_perimeter() != l)
      throw Error(Errc::PerimeterMismatch, "skeleton with the wrong semi-perimeter");
  return given;
}

}  // namespace

DualSkeleton dual_skeleton(const MapWithHoles& m) {
  if (m.is_cemetery() || m.num_holes() != 0)
    throw Error(Errc::PreconditionViolation, "metric maps live on hole-free maps");
  DualSkeleton s;
  s.map = m;
  s.code = encode(m);
  const auto faces = canonical_internal_faces(m);
  s.n_internal = static_cast<int>(faces.size());
  s.n_phantom = 2 * m.semi_perimeter();
  std::vector<int> node_of_face(m.num_faces(), -1);
  for (int i = 0; i < s.n_internal; ++i) node_of_face[faces[i]] = i;
  const auto ph = phantom_index(m);
  auto node = [&](int d) { return ph[d] >= 0 ? s.n_internal + ph[d] : node_of_face[m.face_of(d)]; };
  const int r = m.root();
  s.edges.push_back({node(r), node(m.alpha(r)), r});
  for (int d = 0; d < m.num_darts(); ++d) {
    const int a = m.alpha(d);
    if (d > a || d == r || a == r) continue;
    s.edges.push_back({node(d), node(a), d});
  }
  s.incident.assign(s.n_internal + s.n_phantom, {});
  for (int e = 0; e < s.num_edges(); ++e) {
    s.incident[s.edges[e].u].push_back(e);
    s.incident[s.edges[e].v].push_back(e);
  }
  return s;
}

std::vector<DualSkeleton> capped_skeletons(int l, int cap) {
  if (l < 1 || cap < 0) throw Error(Errc::CapUnsatisfiable, "need l >= 1 and cap >= 0");
  if (cap > 4) throw Error(Errc::CapUnsatisfiable, "skeleton cap above 4 is too large to enumerate");
  std::vector<DualSkeleton> out;
  for (int f = 0; f <= cap; ++f)
    for (const auto& m : generate_all(l, f)) out.push_back(dual_skeleton(m));
  if (out.empty()) throw Error(Errc::CapUnsatisfiable, "empty skeleton class");
  return out;
}

double log_bridge_mass(double u, double v, double w) {
  if (!(w > 0)) throw Error(Errc::NonpositiveLength, "bridge length must be positive");
  return -(u - v) * (u - v) / (2 * w) - 0.5 * std::log(2 * kPi * w);
}

double bridge_mass(double u, double v, double w) { return std::exp(log_bridge_mass(u, v, w)); }

double bridge_decompose_check(double u, double v, double w1, double w2) {
  if (!(w1 > 0) || !(w2 > 0)) throw Error(Errc::NonpositiveLength, "bridge length must be positive");
  // The integrand is a Gaussian bump in z; integrate in its own scale.
  const double w = w1 + w2;
  const double m = (u * w2 + v * w1) / w, s = std::sqrt(w1 * w2 / w);
  auto f = [&](double y) {
    const double z = m + s * y;
    return bridge_mass(u, z, w1) * bridge_mass(z, v, w2) * s;
  };
  double err = 0;
  const double inf = std::numeric_limits<double>::infinity();
  const double I =
      boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, -inf, inf, 15, 1e-14, &err);
  const double exact = bridge_mass(u, v, w);
  if (!std::isfinite(I) || err > 1e-10 * std::max(1.0, exact))
    throw Error(Errc::QuadratureFailure, "bridge convolution did not converge");
  return std::abs(I - exact);
}

double BridgePath::value_at(double s) const {
  const auto it = std::lower_bound(t.begin(), t.end(), s);
  if (it == t.end() || *it != s) throw Error(Errc::OutOfBounds, "not a grid time");
  return x[it - t.begin()];
}

BridgePath bridge_sample(double u, double v, double w, double h, Rng& rng) {
  if (!(w > 0)) throw Error(Errc::NonpositiveLength, "bridge length must be positive");
  if (!(h > 0) || h > w) throw Error(Errc::BadGrid, "grid step must lie in (0, w]");
  long n = 1;
  while (w / n > h) {
    n *= 2;
    if (n > (1L << 24)) throw Error(Errc::BadGrid, "grid too fine");
  }
  BridgePath p;
  p.t.resize(n + 1);
  p.x.assign(n + 1, 0);
  for (long k = 0; k <= n; ++k) p.t[k] = w * static_cast<double>(k) / n;
  p.t[n] = w;
  p.x[0] = u;
  p.x[n] = v;
  std::normal_distribution<double> N;
  const double dt = w / n;
  for (long step = n / 2; step >= 1; step /= 2)
    for (long k = step; k < n; k += 2 * step)
      p.x[k] = 0.5 * (p.x[k - step] + p.x[k + step]) + std::sqrt(step * dt / 2) * N(rng);
  return p;
}

double refine(BridgePath& p, double s, Rng& rng) {
  if (p.t.size() < 2 || !(s >= 0) || s > p.t.back())
    throw Error(Errc::OutOfBounds, "time outside the path");
  const auto it = std::lower_bound(p.t.begin(), p.t.end(), s);
  const size_t i = it - p.t.begin();
  if (*it == s) return p.x[i];
  const double a = p.t[i - 1], c = p.t[i];
  const double mean = p.x[i - 1] + (s - a) / (c - a) * (p.x[i] - p.x[i - 1]);
  const double var = (s - a) * (c - s) / (c - a);
  std::normal_distribution<double> N;
  const double val = mean + std::sqrt(var) * N(rng);
  p.t.insert(p.t.begin() + i, s);
  p.x.insert(p.x.begin() + i, val);
  return val;
}

double log_metric_density(const DualSkeleton& s, const std::vector<double>& lengths,
                          const std::vector<double>& spins, const std::vector<double>& b,
                          const MetricParams& p) {
  need_params(p);
  check_sizes(s, &lengths, spins, b);
  double r = s.n_internal * std::log(p.q);
  for (int e = 0; e < s.num_edges(); ++e) {
    const double w = lengths[e];
    r += -p.lambda * w +
         log_bridge_mass(spin_of(s, spins, b, s.edges[e].u), spin_of(s, spins, b, s.edges[e].v), w);
  }
  for (double x : spins) r += log_mu_weight(p.mu, x);
  return r;
}

double metric_density(const DualSkeleton& s, const std::vector<double>& lengths,
                      const std::vector<double>& spins, const std::vector<double>& b,
                      const MetricParams& p) {
  return std::exp(log_metric_density(s, lengths, spins, b, p));
}

double log_collapsed_density(const DualSkeleton& s, const std::vector<double>& spins,
                             const std::vector<double>& b, const MetricParams& p) {
  need_params(p);
  check_sizes(s, nullptr, spins, b);
  const double k = std::sqrt(2 * p.lambda);
  double r = s.n_internal * std::log(p.q) - 0.5 * s.num_edges() * std::log(2 * p.lambda);
  for (const auto& e : s.edges)
    r -= k * std::abs(spin_of(s, spins, b, e.u) - spin_of(s, spins, b, e.v));
  for (double x : spins) r += log_mu_weight(p.mu, x);
  return r;
}

double sample_edge_length(double d, double lambda, Rng& rng) {
  if (!(lambda > 0)) throw Error(Errc::PreconditionViolation, "lambda must be positive");
  std::normal_distribution<double> N;
  const double ad = std::abs(d);
  if (ad < 1e-300) {
    // Gamma(1/2, lambda).
    for (;;) {
      const double z = N(rng);
      if (z != 0) return z * z / (2 * lambda);
    }
  }
  // 1/w is inverse Gaussian with mean sqrt(2 lambda)/|d| and shape 2 lambda
  // (Michael, Schucany and Haas).
  const double mu = std::sqrt(2 * lambda) / ad, shape = 2 * lambda;
  const double nu = N(rng);
  const double r = mu * nu * nu / (2 * shape);
  const double x = mu / (1 + r + std::sqrt(r * r + 2 * r));
  std::uniform_real_distribution<double> U(0, 1);
  const double y = U(rng) <= mu / (mu + x) ? x : mu * mu / x;
  return 1 / y;
}

double log_edge_length_density(double w, double d, double lambda) {
  if (!(w > 0)) return -std::numeric_limits<double>::infinity();
  const double k = std::sqrt(2 * lambda);
  return -lambda * w - d * d / (2 * w) - 0.5 * std::log(2 * kPi * w) + std::log(k) + k * std::abs(d);
}

std::string ChainDiagnostics::to_text() const {
  std::ostringstream os;
  os << "sweeps " << sweeps << ", recorded " << recorded << "\n";
  const char* names[3] = {"length", "spin", "skeleton"};
  for (int k = 0; k < 3; ++k)
    os << "acceptance " << names[k] << " " << acceptance(static_cast<Transition::Kind>(k)) << " ("
       << proposed[k] << " proposals)\n";
  os << "ess root_length " << ess_root_length << ", ess faces " << ess_faces << "\n";
  return os.str();
}

// ---------------------------------------------------------------- chain

MetricChain::MetricChain(int l, std::vector<double> b, MetricParams p,
                         std::vector<DualSkeleton> skeletons)
    : b_(std::move(b)), p_(std::move(p)) {
  need_params(p_);
  if (l < 1) throw Error(Errc::CapUnsatisfiable, "need l >= 1");
  if (static_cast<int>(b_.size()) != 2 * l)
    throw Error(Errc::MissingSpin, "boundary condition needs 2l values");
  sk_ = skeletons_for(l, p_, std::move(skeletons));
  by_faces_ = face_classes(sk_);
  if (p_.mu.is_discrete()) {
    double tot = 0;
    for (Real w : p_.mu.weights) tot += static_cast<double>(w);
    for (Real w : p_.mu.weights) log_mu_.push_back(std::log(static_cast<double>(w) / tot));
  }
  double m = 0, v = 0;
  for (double x : b_) m += x;
  m /= b_.size();
  for (double x : b_) v += (x - m) * (x - m);
  prop_mean_ = m;
  prop_sd_ = std::sqrt(v / b_.size() + 1 / p_.lambda);

  // Start on the first skeleton with the fewest faces.
  x_.skeleton = by_faces_.front().front();
  const auto& s = sk_[x_.skeleton];
  x_.lengths.assign(s.num_edges(), 1 / p_.lambda);
  x_.spins.assign(s.n_internal, p_.mu.is_discrete() ? static_cast<double>(p_.mu.support[0]) : m);
}

double MetricChain::node_spin(const DualSkeleton& s, const std::vector<double>& spins, int v) const {
  return spin_of(s, spins, b_, v);
}

double MetricChain::log_target() const {
  return log_metric_density(skeleton(), x_.lengths, x_.spins, b_, p_);
}

double MetricChain::root_far_spin() const { return node_spin(skeleton(), x_.spins, skeleton().edges[0].v); }

bool MetricChain::root_far_internal() const { return !skeleton().is_phantom(skeleton().edges[0].v); }

void MetricChain::length_move(int e, Rng& rng) {
  const auto& s = skeleton();
  const double d = node_spin(s, x_.spins, s.edges[e].u) - node_spin(s, x_.spins, s.edges[e].v);
  const double w = x_.lengths[e];
  std::normal_distribution<double> N;
  const double step = p_.mcmc.length_step * N(rng);
  const double w2 = w * std::exp(step);
  auto lp = [&](double x) { return -p_.lambda * x - d * d / (2 * x) - 0.5 * std::log(x); };
  const double log_r = lp(w2) - lp(w) + std::log(w2 / w);
  const double a = log_r >= 0 ? 1.0 : std::exp(log_r);
  std::uniform_real_distribution<double> U(0, 1);
  const bool ok = U(rng) < a;
  diag_.proposed[Transition::Length]++;
  if (log_) {
    Transition t;
    t.kind = Transition::Length;
    t.log_target_from = log_target();
    auto y = x_.lengths;
    y[e] = w2;
    t.log_target_to = log_metric_density(s, y, x_.spins, b_, p_);
    // Log-normal proposal density in w.
    const double sd = p_.mcmc.length_step;
    auto lq = [&](double from, double to) {
      const double z = (std::log(to) - std::log(from)) / sd;
      return -0.5 * z * z - std::log(sd * std::sqrt(2 * kPi)) - std::log(to);
    };
    t.log_proposal_forward = lq(w, w2);
    t.log_proposal_backward = lq(w2, w);
    t.accept = a;
    t.accepted = ok;
    log_(t);
  }
  if (ok) {
    x_.lengths[e] = w2;
    diag_.accepted[Transition::Length]++;
  }
}

void MetricChain::spin_move(int i, Rng& rng) {
  const auto& s = skeleton();
  // Energy of spin value y against the current neighbours.
  auto energy = [&](double y) {
    double h = 0;
    for (int e : s.incident[i]) {
      const auto& E = s.edges[e];
      if (E.u == E.v) continue;
      const double o = node_spin(s, x_.spins, E.u == i ? E.v : E.u);
      h += (y - o) * (y - o) / (2 * x_.lengths[e]);
    }
    return h;
  };
  std::uniform_real_distribution<double> U(0, 1);
  diag_.proposed[Transition::Spin]++;
  Transition t;
  t.kind = Transition::Spin;
  if (log_) t.log_target_from = log_target();
  double y;
  bool ok;
  if (p_.mu.is_discrete()) {
    // Exact draw from the conditional law over the support.
    const auto& sup = p_.mu.support;
    std::vector<double> lw(sup.size());
    double mx = -std::numeric_limits<double>::infinity();
    for (size_t k = 0; k < sup.size(); ++k) {
      lw[k] = log_mu_[k] - energy(static_cast<double>(sup[k]));
      mx = std::max(mx, lw[k]);
    }
    double tot = 0;
    for (double& v : lw) tot += (v = std::exp(v - mx));
    double u = U(rng) * tot;
    size_t k = 0;
    while (k + 1 < sup.size() && u >= lw[k]) u -= lw[k++];
    y = static_cast<double>(sup[k]);
    ok = true;
    t.accept = 1;
    if (log_) {
      size_t cur = 0;
      while (static_cast<double>(sup[cur]) != x_.spins[i]) ++cur;
      t.log_proposal_forward = std::log(lw[k] / tot);
      t.log_proposal_backward = std::log(lw[cur] / tot);
    }
  } else {
    std::normal_distribution<double> N;
    y = x_.spins[i] + p_.mcmc.spin_step * N(rng);
    const double log_r = energy(x_.spins[i]) - energy(y);
    t.accept = log_r >= 0 ? 1.0 : std::exp(log_r);
    ok = U(rng) < t.accept;
  }
  if (log_) {
    auto z = x_.spins;
    z[i] = y;
    t.log_target_to = log_metric_density(s, x_.lengths, z, b_, p_);
    t.accepted = ok;
    log_(t);
  }
  if (ok) {
    x_.spins[i] = y;
    diag_.accepted[Transition::Spin]++;
  }
}

double MetricChain::log_spin_proposal(const std::vector<double>& spins) const {
  double r = 0;
  for (double x : spins) {
    if (p_.mu.is_discrete()) {
      size_t k = 0;
      while (static_cast<double>(p_.mu.support[k]) != x) ++k;
      r += log_mu_[k];
    } else {
      const double z = (x - prop_mean_) / prop_sd_;
      r += -0.5 * z * z - std::log(prop_sd_ * std::sqrt(2 * kPi));
    }
  }
  return r;
}

void MetricChain::skeleton_move(Rng& rng) {
  std::uniform_int_distribution<size_t> pick_class(0, by_faces_.size() - 1);
  const auto& cls = by_faces_[pick_class(rng)];
  std::uniform_int_distribution<size_t> pick(0, cls.size() - 1);
  MetricState y;
  y.skeleton = cls[pick(rng)];
  const auto& s = sk_[y.skeleton];
  std::normal_distribution<double> N;
  for (int i = 0; i < s.n_internal; ++i) {
    if (p_.mu.is_discrete()) {
      std::discrete_distribution<size_t> D(p_.mu.weights.begin(), p_.mu.weights.end());
      y.spins.push_back(static_cast<double>(p_.mu.support[D(rng)]));
    } else {
      y.spins.push_back(prop_mean_ + prop_sd_ * N(rng));
    }
  }
  for (const auto& e : s.edges)
    y.lengths.push_back(
        sample_edge_length(node_spin(s, y.spins, e.u) - node_spin(s, y.spins, e.v), p_.lambda, rng));

  auto log_g = [&](const MetricState& z) {
    const int f = sk_[z.skeleton].n_internal;
    size_t c = 0;
    while (sk_[by_faces_[c].front()].n_internal != f) ++c;
    return -std::log(static_cast<double>(by_faces_.size())) -
           std::log(static_cast<double>(by_faces_[c].size())) + log_spin_proposal(z.spins);
  };
  const auto& cur = skeleton();
  const double log_r = log_collapsed_density(s, y.spins, b_, p_) -
                       log_collapsed_density(cur, x_.spins, b_, p_) + log_g(x_) - log_g(y);
  const double a = log_r >= 0 ? 1.0 : std::exp(log_r);
  std::uniform_real_distribution<double> U(0, 1);
  const bool ok = U(rng) < a;
  diag_.proposed[Transition::Skeleton]++;
  if (log_) {
    auto lengths_law = [&](const MetricState& z) {
      const auto& k = sk_[z.skeleton];
      double r = 0;
      for (int e = 0; e < k.num_edges(); ++e)
        r += log_edge_length_density(
            z.lengths[e],
            node_spin(k, z.spins, k.edges[e].u) - node_spin(k, z.spins, k.edges[e].v), p_.lambda);
      return r;
    };
    Transition t;
    t.kind = Transition::Skeleton;
    t.log_target_from = log_target();
    t.log_target_to = log_metric_density(s, y.lengths, y.spins, b_, p_);
    t.log_proposal_forward = log_g(y) + lengths_law(y);
    t.log_proposal_backward = log_g(x_) + lengths_law(x_);
    t.accept = a;
    t.accepted = ok;
    log_(t);
  }
  if (ok) {
    x_ = std::move(y);
    diag_.accepted[Transition::Skeleton]++;
  }
}

void MetricChain::sweep(Rng& rng) {
  for (int e = 0; e < skeleton().num_edges(); ++e) length_move(e, rng);
  for (int i = 0; i < skeleton().n_internal; ++i) spin_move(i, rng);
  skeleton_move(rng);
  diag_.sweeps++;
}

ChainDiagnostics mcmc_sample_metric(int l, const std::vector<double>& b, const MetricParams& p,
                                    long samples, Rng& rng,
                                    const std::function<void(const MetricChain&)>& visit) {
  MetricChain chain(l, b, p);
  for (long k = 0; k < p.mcmc.burn_in; ++k) chain.sweep(rng);
  std::vector<double> lengths, faces;
  lengths.reserve(samples);
  faces.reserve(samples);
  for (long k = 0; k < samples; ++k) {
    for (int j = 0; j < p.mcmc.thin; ++j) chain.sweep(rng);
    lengths.push_back(chain.root_length());
    faces.push_back(chain.skeleton().n_internal);
    if (visit) visit(chain);
  }
  ChainDiagnostics d = chain.counters();
  d.recorded = samples;
  d.ess_root_length = ess(lengths);
  d.ess_faces = ess(faces);
  return d;
}

// ---------------------------------------------------------------- exact

MetricExact::MetricExact(int l, MetricParams p, std::vector<DualSkeleton> skeletons)
    : p_(std::move(p)) {
  need_params(p_);
  sk_ = skeletons_for(l, p_, std::move(skeletons));
  if (p_.mu.is_discrete()) return;
  const double k = std::sqrt(2 * p_.lambda);
  std::vector<double> lw;
  for (const auto& s : sk_) {
    Tree T;
    T.parent_edge.assign(s.n_internal, -1);
    std::vector<char> seen(s.n_internal + s.n_phantom, 0), tree_edge(s.num_edges(), 0);
    std::vector<int> queue;
    for (int j = 0; j < s.n_phantom; ++j) {
      seen[s.n_internal + j] = 1;
      queue.push_back(s.n_internal + j);
    }
    for (size_t h = 0; h < queue.size(); ++h) {
      const int v = queue[h];
      for (int e : s.incident[v]) {
        const int w = s.edges[e].u == v ? s.edges[e].v : s.edges[e].u;
        if (seen[w]) continue;
        seen[w] = 1;
        T.parent_edge[w] = e;
        tree_edge[e] = 1;
        T.order.push_back(w);
        queue.push_back(w);
      }
    }
    if (static_cast<int>(T.order.size()) != s.n_internal)
      throw Error(Errc::NotConnected, "internal vertex unreachable from the boundary");
    for (int e = 0; e < s.num_edges(); ++e)
      if (!tree_edge[e]) T.other_edges.push_back(e);
    trees_.push_back(std::move(T));
    // Mass of the proposal: the tree edges carry normalised Laplace densities.
    lw.push_back(s.n_internal * (std::log(p_.q) + std::log(2 / k)) -
                 0.5 * s.num_edges() * std::log(2 * p_.lambda));
  }
  const double mx = *std::max_element(lw.begin(), lw.end());
  double acc = 0;
  for (double v : lw) cdf_.push_back(acc += std::exp(v - mx));
  for (double& v : cdf_) v /= acc;
}

MetricState MetricExact::sample(const std::vector<double>& b, Rng& rng) const {
  if (static_cast<int>(b.size()) != sk_.front().n_phantom)
    throw Error(Errc::MissingSpin, "boundary condition needs 2l values");
  return p_.mu.is_discrete() ? sample_discrete(b, rng) : sample_gaussian(b, rng);
}

MetricState MetricExact::sample_gaussian(const std::vector<double>& b, Rng& rng) const {
  const double k = std::sqrt(2 * p_.lambda);
  std::uniform_real_distribution<double> U(0, 1);
  std::exponential_distribution<double> Ex(k);
  for (long tries = 0; tries < 100000000L; ++tries) {
    MetricState x;
    const double u = U(rng);
    x.skeleton = static_cast<int>(std::upper_bound(cdf_.begin(), cdf_.end(), u) - cdf_.begin());
    x.skeleton = std::min<int>(x.skeleton, static_cast<int>(sk_.size()) - 1);
    const auto& s = sk_[x.skeleton];
    const auto& T = trees_[x.skeleton];
    x.spins.assign(s.n_internal, 0);
    for (int v : T.order) {
      const auto& E = s.edges[T.parent_edge[v]];
      const int par = E.u == v ? E.v : E.u;
      const double step = U(rng) < 0.5 ? Ex(rng) : -Ex(rng);
      x.spins[v] = spin_of(s, x.spins, b, par) + step;
    }
    double h = 0;
    for (int e : T.other_edges)
      h += k * std::abs(spin_of(s, x.spins, b, s.edges[e].u) - spin_of(s, x.spins, b, s.edges[e].v));
    if (U(rng) >= std::exp(-h)) continue;
    for (const auto& E : s.edges)
      x.lengths.push_back(sample_edge_length(
          spin_of(s, x.spins, b, E.u) - spin_of(s, x.spins, b, E.v), p_.lambda, rng));
    return x;
  }
  throw Error(Errc::EventNeverHit, "rejection sampler made no progress");
}

MetricState MetricExact::sample_discrete(const std::vector<double>& b, Rng& rng) const {
  // Enumerate (skeleton, spins) with the length-integrated weights.
  const auto& sup = p_.mu.support;
  const int S = static_cast<int>(sup.size());
  std::vector<std::pair<int, std::vector<double>>> cells;
  std::vector<double> lw;
  for (int i = 0; i < static_cast<int>(sk_.size()); ++i) {
    const auto& s = sk_[i];
    std::vector<int> idx(s.n_internal, 0);
    for (;;) {
      std::vector<double> sp(s.n_internal);
      for (int j = 0; j < s.n_internal; ++j) sp[j] = static_cast<double>(sup[idx[j]]);
      lw.push_back(log_collapsed_density(s, sp, b, p_));
      cells.emplace_back(i, std::move(sp));
      int j = 0;
      while (j < s.n_internal && ++idx[j] == S) idx[j++] = 0;
      if (j == s.n_internal) break;
    }
  }
  const double mx = *std::max_element(lw.begin(), lw.end());
  double tot = 0;
  for (double& v : lw) tot += (v = std::exp(v - mx));
  std::uniform_real_distribution<double> U(0, 1);
  double u = U(rng) * tot;
  size_t c = 0;
  while (c + 1 < lw.size() && u >= lw[c]) u -= lw[c++];
  MetricState x;
  x.skeleton = cells[c].first;
  x.spins = cells[c].second;
  const auto& s = sk_[x.skeleton];
  for (const auto& E : s.edges)
    x.lengths.push_back(sample_edge_length(
        spin_of(s, x.spins, b, E.u) - spin_of(s, x.spins, b, E.v), p_.lambda, rng));
  return x;
}

// ---------------------------------------------------------------- type 3

double MetricMap::node_value(int v) const { return spin_of(skel, spins, b, v); }

MetricMap decorate(const DualSkeleton& s, const MetricState& x, const std::vector<double>& b,
                   Rng& rng, int grid) {
  if (grid < 1) throw Error(Errc::BadGrid, "grid must have at least one step");
  MetricMap m{s, x.lengths, x.spins, b, {}};
  check_sizes(s, &m.lengths, m.spins, m.b);
  for (int e = 0; e < s.num_edges(); ++e) {
    const double w = m.lengths[e];
    m.paths.push_back(bridge_sample(m.node_value(s.edges[e].u), m.node_value(s.edges[e].v), w,
                                    w / grid, rng));
  }
  return m;
}

std::vector<int> active_edges(const MetricMap& m) {
  std::vector<int> out;
  for (int e = 0; e < m.skel.num_edges(); ++e)
    if (m.skel.is_phantom(m.skel.edges[e].u) || m.skel.is_phantom(m.skel.edges[e].v))
      out.push_back(e);
  return out;
}

namespace {

BridgePath reversed_path(const BridgePath& p) {
  BridgePath r;
  const double w = p.length();
  for (size_t i = p.t.size(); i-- > 0;) {
    r.t.push_back(w - p.t[i]);
    r.x.push_back(p.x[i]);
  }
  r.t.front() = 0;
  r.t.back() = w;
  return r;
}

}  // namespace

Type3Peel type3_peel(const MetricMap& m, int e, double L, Rng& rng) {
  const auto& s = m.skel;
  if (e < 0 || e >= s.num_edges()) throw Error(Errc::OutOfBounds, "no such edge", e);
  if (!(L > 0)) throw Error(Errc::NonpositiveLength, "peel length must be positive");
  const auto& E = s.edges[e];
  if (!s.is_phantom(E.u) && !s.is_phantom(E.v))
    throw Error(Errc::NotActive, "edge has no explored endpoint", e);
  Type3Peel r;
  r.edge = e;
  r.reversed = !s.is_phantom(E.u);
  const int marked = r.reversed ? E.v : E.u, far = r.reversed ? E.u : E.v;
  r.phantom = marked - s.n_internal;
  const double w = m.lengths[e];
  BridgePath path = m.paths.empty()
                        ? BridgePath{{0, w}, {m.node_value(E.u), m.node_value(E.v)}}
                        : m.paths[e];
  if (r.reversed) path = reversed_path(path);
  r.remainder = m;
  if (L >= w) {
    r.full = true;
    r.explored = w;
    r.segment = path;
    r.tip = path.x.back();
    if (!s.is_phantom(far)) {
      r.revealed = far;
      for (int f : s.incident[far])
        if (f != e && std::find(r.new_active.begin(), r.new_active.end(), f) == r.new_active.end())
          r.new_active.push_back(f);
    }
    return r;
  }
  r.explored = L;
  r.tip = refine(path, L, rng);
  BridgePath rest;
  for (size_t i = 0; i < path.t.size(); ++i) {
    if (path.t[i] <= L) {
      r.segment.t.push_back(path.t[i]);
      r.segment.x.push_back(path.x[i]);
    }
    if (path.t[i] >= L) {
      rest.t.push_back(path.t[i] - L);
      rest.x.push_back(path.x[i]);
    }
  }
  rest.t.front() = 0;
  r.remainder.lengths[e] = w - L;
  r.remainder.b[r.phantom] = r.tip;
  if (!m.paths.empty()) {
    rest.t.back() = w - L;
    r.remainder.paths[e] = r.reversed ? reversed_path(rest) : rest;
  }
  return r;
}

MetricMap glue_type3(const Type3Peel& p) {
  if (p.full) throw Error(Errc::PreconditionViolation, "a fully consumed edge has no remainder");
  MetricMap m = p.remainder;
  const int e = p.edge;
  const double rest_len = m.lengths[e];
  m.lengths[e] = p.explored + rest_len;
  m.b[p.phantom] = p.segment.x.front();
  if (!m.paths.empty()) {
    const BridgePath rest = p.reversed ? reversed_path(m.paths[e]) : m.paths[e];
    BridgePath whole = p.segment;
    for (size_t i = 1; i < rest.t.size(); ++i) {
      whole.t.push_back(rest.t[i] + p.explored);
      whole.x.push_back(rest.x[i]);
    }
    whole.t.back() = m.lengths[e];
    m.paths[e] = p.reversed ? reversed_path(whole) : whole;
  }
  return m;
}

// ---------------------------------------------------------------- p3

std::string P3Report::to_text() const {
  std::ostringstream os;
  os.precision(8);
  os << "t,p3,se,hits,log_sqrt_2pi_t_p3\n";
  for (size_t k = 0; k < t.size(); ++k)
    os << t[k] << "," << p3[k] << "," << se[k] << "," << hits[k] << ","
       << std::log(std::sqrt(2 * kPi * t[k]) * p3[k]) << "\n";
  os << "slope " << fit.slope << " (se " << se_slope << ")\n";
  os << "intercept " << fit.intercept << " (se " << se_intercept << ", z " << z_intercept << ")\n";
  os << "r2 " << fit.r2 << "\n";
  os << diag.to_text();
  return os.str();
}

P3Report p3_shape_test(int l, const std::vector<double>& b, const MetricParams& p, long n,
                       Rng& rng, const P3Options& opt) {
  const auto& T = opt.t_grid;
  if (T.size() < 3 || !std::is_sorted(T.begin(), T.end()) || !(T.front() > 0))
    throw Error(Errc::PreconditionViolation, "t grid needs >= 3 increasing positive times");
  if (!(opt.eps >= 0)) throw Error(Errc::PreconditionViolation, "eps must be >= 0");
  if (opt.batches < 2 || n < opt.batches)
    throw Error(Errc::PreconditionViolation, "need at least two batches of samples");
  const size_t K = T.size();
  const int B = opt.batches;
  std::vector<std::vector<double>> sum(B, std::vector<double>(K, 0));
  std::vector<long> per_batch(B, 0);
  P3Report rep;
  rep.hits.assign(K, 0);
  long idx = 0;
  const double b0 = b.at(0), eps = opt.eps;
  rep.diag = mcmc_sample_metric(l, b, p, n, rng, [&](const MetricChain& c) {
    const int bt = static_cast<int>(idx * B / n);
    ++idx;
    per_batch[bt]++;
    const double w = c.root_length(), y = c.root_far_spin();
    for (size_t k = 0; k < K; ++k) {
      const double t = T[k];
      if (w <= t) break;
      const double off = t / w * (y - b0);
      const double sd = std::sqrt(t * (w - t) / w);
      const double v = eps > 0 ? (normal_cdf((eps - off) / sd) - normal_cdf((-eps - off) / sd)) / (2 * eps)
                               : std::exp(-off * off / (2 * sd * sd)) / (sd * std::sqrt(2 * kPi));
      sum[bt][k] += v;
      rep.hits[k]++;
    }
  });
  rep.t = T;
  rep.p3.assign(K, 0);
  rep.se.assign(K, 0);
  for (size_t k = 0; k < K; ++k) {
    if (rep.hits[k] < opt.min_hits)
      throw Error(Errc::InsufficientHits, "too few samples with a long root edge", static_cast<int>(k));
    double tot = 0, m = 0, m2 = 0;
    for (int bt = 0; bt < B; ++bt) {
      tot += sum[bt][k];
      const double e = sum[bt][k] / per_batch[bt];
      m += e;
      m2 += e * e;
    }
    rep.p3[k] = tot / n;
    m /= B;
    rep.se[k] = std::sqrt(std::max(0.0, (m2 / B - m * m) * B / (B - 1)) / B);
    if (!(rep.p3[k] > 0))
      throw Error(Errc::InsufficientHits, "empty window", static_cast<int>(k));
  }
  auto response = [&](const std::vector<double>& est) {
    std::vector<double> y(K);
    for (size_t k = 0; k < K; ++k) y[k] = std::log(std::sqrt(2 * kPi * T[k]) * est[k]);
    return y;
  };
  rep.fit = stats::linear_fit(T, response(rep.p3));
  // Batch-means errors of the fitted line.
  std::vector<double> a, s;
  for (int bt = 0; bt < B; ++bt) {
    std::vector<double> est(K);
    for (size_t k = 0; k < K; ++k) {
      est[k] = sum[bt][k] / per_batch[bt];
      if (!(est[k] > 0))
        throw Error(Errc::InsufficientHits, "empty window in a batch", static_cast<int>(k));
    }
    const auto f = stats::linear_fit(T, response(est));
    a.push_back(f.intercept);
    s.push_back(f.slope);
  }
  auto se_of = [&](const std::vector<double>& v) {
    double m = 0, m2 = 0;
    for (double x : v) m += x;
    m /= v.size();
    for (double x : v) m2 += (x - m) * (x - m);
    return std::sqrt(m2 / (v.size() - 1) / v.size());
  };
  rep.se_intercept = se_of(a);
  rep.se_slope = se_of(s);
  rep.z_intercept = rep.se_intercept > 0 ? rep.fit.intercept / rep.se_intercept : 0;
  return rep;
}

// ---------------------------------------------------------------- mid-edge

std::vector<double> MidEdgeReport::p_values() const {
  std::vector<double> v;
  for (const auto& t : tests) v.push_back(t.r.p_value);
  return v;
}

std::string MidEdgeReport::to_text() const {
  std::ostringstream os;
  os << "t " << t << ", samples " << samples << ", hits " << hits << "\n";
  os << "bin edges";
  for (double e : bin_edges) os << " " << e;
  os << "\nbin,quantity,n_chain,n_fresh,statistic,p_value\n";
  for (const auto& x : tests)
    os << x.bin << "," << x.quantity << "," << x.n_chain << "," << x.n_fresh << ","
       << x.r.statistic << "," << x.r.p_value << "\n";
  os << diag.to_text();
  return os.str();
}

MidEdgeReport mid_edge_markov_test(int l, const std::vector<double>& b, const MetricParams& p,
                                   double t, long n, Rng& rng, const MidEdgeOptions& opt) {
  if (!(t > 0)) throw Error(Errc::NonpositiveLength, "peel length must be positive");
  if (opt.bins < 1) throw Error(Errc::PreconditionViolation, "need at least one bin");
  struct Hit {
    double x;
    int skeleton;
    double residual, far;
    bool far_internal;
  };
  std::vector<Hit> hits;
  std::normal_distribution<double> N;
  const double b0 = b.at(0);
  MidEdgeReport rep;
  rep.t = t;
  rep.samples = n;
  std::vector<DualSkeleton> sk;
  MetricParams pc = p;
  pc.mcmc.thin = std::max(p.mcmc.thin, opt.thin);
  auto record = [&](int skeleton, double w, double y, bool far_internal) {
    if (w <= t) return;
    const double x = b0 + t / w * (y - b0) + std::sqrt(t * (w - t) / w) * N(rng);
    hits.push_back({x, skeleton, w - t, y, far_internal});
  };
  if (opt.exact_chain) {
    MetricExact ex(l, p);
    sk = ex.skeletons();
    for (long i = 0; i < n; ++i) {
      const auto z = ex.sample(b, rng);
      const auto& s = sk[z.skeleton];
      const int far = s.edges[0].v;
      record(z.skeleton, z.lengths[0], spin_of(s, z.spins, b, far), !s.is_phantom(far));
    }
  } else {
    rep.diag = mcmc_sample_metric(l, b, pc, n, rng, [&](const MetricChain& c) {
      if (sk.empty()) sk = c.skeletons();
      record(c.state().skeleton, c.root_length(), c.root_far_spin(), c.root_far_internal());
    });
  }
  rep.hits = static_cast<long>(hits.size());
  if (hits.size() < 2) throw Error(Errc::EventNeverHit, "root edge never longer than t");
  const size_t half = hits.size() / 2;
  std::vector<double> xs;
  for (size_t i = 0; i < half; ++i) xs.push_back(hits[i].x);
  std::sort(xs.begin(), xs.end());
  for (int k = 1; k < opt.bins; ++k) rep.bin_edges.push_back(xs[xs.size() * k / opt.bins]);
  auto bin_of = [&](double x) {
    return static_cast<int>(std::upper_bound(rep.bin_edges.begin(), rep.bin_edges.end(), x) -
                            rep.bin_edges.begin());
  };

  // Exact remainders at the tip values of the second half.
  MetricExact exact(l, p, sk);
  std::vector<Hit> fresh;
  for (size_t i = half; i < hits.size(); ++i) {
    auto bx = b;
    bx[0] = hits[i].x;
    const auto z = exact.sample(bx, rng);
    const auto& s = sk[z.skeleton];
    const int far = s.edges[0].v;
    fresh.push_back({hits[i].x, z.skeleton, z.lengths[0], spin_of(s, z.spins, bx, far),
                     !s.is_phantom(far)});
  }

  for (int k = 0; k < opt.bins; ++k) {
    std::vector<double> ca(sk.size(), 0), cb(sk.size(), 0), ra, rb, fa, fb;
    for (size_t i = 0; i < half; ++i)
      if (bin_of(hits[i].x) == k) {
        ca[hits[i].skeleton]++;
        ra.push_back(hits[i].residual);
        if (hits[i].far_internal) fa.push_back(hits[i].far);
      }
    for (const auto& h : fresh)
      if (bin_of(h.x) == k) {
        cb[h.skeleton]++;
        rb.push_back(h.residual);
        if (h.far_internal) fb.push_back(h.far);
      }
    const long na = static_cast<long>(ra.size()), nb = static_cast<long>(rb.size());
    if (na < opt.min_bin || nb < opt.min_bin)
      throw Error(Errc::BinTooThin, "too few hits in a tip-value bin", k);
    int used = 0;
    for (size_t j = 0; j < sk.size(); ++j) used += (ca[j] + cb[j]) > 0;
    if (used >= 2) rep.tests.push_back({k, "skeleton", na, nb, stats::chi_square_two_sample(ca, cb)});
    rep.tests.push_back({k, "residual_length", na, nb, stats::ks_two_sample(ra, rb)});
    if (static_cast<long>(fa.size()) >= opt.min_spin && static_cast<long>(fb.size()) >= opt.min_spin)
      rep.tests.push_back({k, "far_spin", static_cast<long>(fa.size()), static_cast<long>(fb.size()),
                           stats::ks_two_sample(fa, fb)});
  }
  return rep;
}

std::string metric_csv(const MetricMap& m) {
  std::ostringstream os;
  os.precision(17);
  os << "# skeleton " << m.skel.code << "\n";
  os << "edge,u,v,length,value_u,value_v\n";
  for (int e = 0; e < m.skel.num_edges(); ++e) {
    const auto& E = m.skel.edges[e];
    os << e << "," << E.u << "," << E.v << "," << m.lengths[e] << "," << m.node_value(E.u) << ","
       << m.node_value(E.v) << "\n";
  }
  return os.str();
}

std::string path_csv(const MetricMap& m, int grid) {
  std::ostringstream os;
  os.precision(17);
  os << "# grid step w_e/" << grid << " per edge\n";
  os << "edge,t,x\n";
  for (int e = 0; e < static_cast<int>(m.paths.size()); ++e)
    for (size_t i = 0; i < m.paths[e].t.size(); ++i)
      os << e << "," << m.paths[e].t[i] << "," << m.paths[e].x[i] << "\n";
  return os.str();
}

}  // namespace qm
