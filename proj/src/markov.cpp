#include "qmaps/markov.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "json.hpp"
#include "qmaps/census.hpp"
#include "qmaps/peeling.hpp"

namespace qm {

std::vector<double> MarkovTestReport::hole_p_values() const {
  std::vector<double> p;
  for (const auto& h : holes)
    if (h.r.dof > 0) p.push_back(h.r.p_value);
  return p;
}

std::string MarkovTestReport::to_text() const {
  nlohmann::ordered_json j;
  j["reference"] = reference;
  j["truncation"] = truncation;
  j["samples"] = samples;
  j["hits"] = hits;
  j["flagged"] = flagged;
  for (const auto& h : holes)
    j["holes"].push_back({{"slot", h.slot},
                          {"n", h.n},
                          {"chi2", h.r.statistic},
                          {"dof", h.r.dof},
                          {"cells", h.r.cells},
                          {"p", h.r.p_value}});
  for (const auto& t : independence)
    j["independence"].push_back({{"slots", {t.a, t.b}},
                                 {"n", t.n},
                                 {"skipped", t.skipped},
                                 {"chi2", t.r.statistic},
                                 {"dof", t.r.dof},
                                 {"p", t.r.p_value}});
  return j.dump(2);
}

int FillAccumulator::intern(int k, int f, const std::string& key) {
  auto [it, fresh] = ids_.emplace(key, static_cast<int>(info_.size()));
  if (fresh) info_.push_back({k, f});
  return it->second;
}

void FillAccumulator::add(const std::vector<MapWithHoles>& fills) {
  std::vector<int> row;
  row.reserve(fills.size());
  for (const auto& F : fills)
    row.push_back(intern(F.semi_perimeter(), F.num_internal_faces(), canonical_code(F)));
  rows_.push_back(std::move(row));
  ++n_;
}

namespace {

void add_into(stats::TestResult& acc, const stats::TestResult& r) {
  acc.statistic += r.statistic;
  acc.dof += r.dof;
  acc.cells += r.cells;
}

void finalize(stats::TestResult& r) {
  r.p_value = r.dof > 0 ? stats::chi2_sf(r.statistic, r.dof) : 1.0;
}

}  // namespace

MarkovTestReport FillAccumulator::finish(bool independence) const {
  MarkovTestReport rep;
  const auto& p = B_.params();
  {
    std::ostringstream s;
    s << "independent q-Boltzmann fills at each hole's semi-perimeter, q=" << static_cast<double>(p.q);
    rep.reference = s.str();
    std::ostringstream t;
    t << "W truncated at f <= " << p.face_cap << "; fills above the cap fall in the remainder cell";
    rep.truncation = t.str();
  }
  size_t slots = 0;
  for (const auto& r : rows_) slots = std::max(slots, r.size());
  const int cap = p.face_cap;

  for (size_t j = 0; j < slots; ++j) {
    // k -> (class id -> count)
    std::map<int, std::map<int, long>> by_k;
    std::map<int, long> n_k;
    for (const auto& r : rows_) {
      if (j >= r.size()) continue;
      const int id = r[j];
      by_k[info_[id].k][id]++;
      n_k[info_[id].k]++;
    }
    SlotTest st;
    st.slot = static_cast<int>(j);
    for (const auto& [k, counts] : by_k) {
      const long n = n_k[k];
      st.n += n;
      const auto& t = census(k, cap);
      std::vector<std::vector<long>> seen(cap + 1);
      for (const auto& [id, c] : counts)
        if (info_[id].f <= cap) seen[info_[id].f].push_back(c);
      std::vector<double> obs, exp;
      double e_sum = 0, o_sum = 0;
      for (int f = 0; f <= cap; ++f) {
        const double e = static_cast<double>(n * B_.prob_class(k, f));
        if (e < 5.0) continue;
        const long total = t.count(k, f).get_si();
        for (long c : seen[f]) {
          obs.push_back(static_cast<double>(c));
          exp.push_back(e);
          o_sum += c;
          e_sum += e;
        }
        for (long z = static_cast<long>(seen[f].size()); z < total; ++z) {
          obs.push_back(0);
          exp.push_back(e);
          e_sum += e;
        }
      }
      obs.push_back(static_cast<double>(n) - o_sum);
      exp.push_back(std::max(0.0, static_cast<double>(n) - e_sum));
      add_into(st.r, stats::chi_square_gof(obs, exp));
    }
    finalize(st.r);
    rep.holes.push_back(st);
  }

  if (!independence) return rep;
  for (size_t a = 0; a < slots; ++a)
    for (size_t b = a + 1; b < slots; ++b) {
      PairTest pt;
      pt.a = static_cast<int>(a);
      pt.b = static_cast<int>(b);
      std::map<std::pair<int, int>, std::vector<std::pair<int, int>>> groups;
      for (const auto& r : rows_)
        if (b < r.size()) groups[{info_[r[a]].k, info_[r[b]].k}].push_back({r[a], r[b]});
      bool any = false;
      for (const auto& [kk, pairs] : groups) {
        const double N = static_cast<double>(pairs.size());
        const long keep = static_cast<long>(std::ceil(std::sqrt(5.0 * N)));
        std::map<int, long> ra, rb;
        for (auto [x, y] : pairs) ra[x]++, rb[y]++;
        std::map<int, int> ia, ib;
        for (auto [x, c] : ra)
          if (c >= keep) ia.emplace(x, static_cast<int>(ia.size()));
        for (auto [y, c] : rb)
          if (c >= keep) ib.emplace(y, static_cast<int>(ib.size()));
        const int R = static_cast<int>(ia.size()) + 1, C = static_cast<int>(ib.size()) + 1;
        std::vector<std::vector<double>> tab(R, std::vector<double>(C, 0));
        for (auto [x, y] : pairs) {
          const int i = ia.count(x) ? ia[x] : R - 1;
          const int k = ib.count(y) ? ib[y] : C - 1;
          tab[i][k] += 1;
        }
        pt.n += static_cast<long>(N);
        try {
          add_into(pt.r, stats::chi_square_independence(tab));
          any = true;
        } catch (const Error& e) {
          if (e.code() != Errc::DegenerateTable) throw;
        }
      }
      pt.skipped = !any;
      finalize(pt.r);
      rep.independence.push_back(pt);
    }
  return rep;
}

MarkovTestReport weak_markov_test(int l, const Boltzmann& B, const MapWithHoles& subq, long n,
                                  Rng& rng) {
  if (subq.is_cemetery() || subq.num_holes() < 1)
    throw Error(Errc::PreconditionViolation, "subq needs at least one hole");
  if (auto st = validate_structure(subq); !st) throw Error(st.code, st.message, st.detail);
  if (subq.semi_perimeter() != l) throw Error(Errc::WrongPerimeter, "subq semi-perimeter differs");
  // Witness: close every hole with a path.
  std::vector<MapWithHoles> trees;
  for (const auto& h : subq.holes()) {
    std::vector<PeelEvent> ev;
    for (int s = subq.face_degree(h.face) / 2; s >= 1; --s) ev.push_back(PeelEvent::t2(0, s - 1));
    trees.push_back(replay(subq.face_degree(h.face) / 2, ev));
  }
  if (auto st = validate_quadrangulation(glue(subq, trees)); !st)
    throw Error(Errc::PreconditionViolation, "subq has no completion: " + st.message);

  FillAccumulator acc(B);
  MarkovTestReport rep;
  long hits = 0;
  for (long i = 0; i < n; ++i) {
    const auto Q = B.sample(l, rng);
    auto emb = embed(subq, Q);
    if (!emb) continue;
    ++hits;
    acc.add(emb->fills);
  }
  if (hits == 0) throw Error(Errc::EventNeverHit, "subq never contained in a sample");
  rep = acc.finish(subq.num_holes() > 1);
  rep.samples = n;
  rep.hits = hits;
  return rep;
}

StoppingMapRule prefix_rule(int steps) {
  StoppingMapRule r;
  r.name = "prefix(" + std::to_string(steps) + ")";
  r.extract = [steps](const MapWithHoles& q) {
    auto ex = explore(q, {}, [steps](const MapWithHoles&, const std::vector<PeelEvent>& ev) {
      return static_cast<int>(ev.size()) >= steps;
    });
    return ex.maps.back();
  };
  return r;
}

StoppingMapRule first_type2_rule() {
  StoppingMapRule r;
  r.name = "first-type2";
  r.extract = [](const MapWithHoles& q) {
    auto ex = explore(q, {}, [](const MapWithHoles&, const std::vector<PeelEvent>& ev) {
      return !ev.empty() && ev.back().kind == PeelEvent::Type2;
    });
    return ex.maps.back();
  };
  return r;
}

StoppingMapRule stopping_map_Q_rule() {
  StoppingMapRule r;
  r.name = "right-left-Q";
  r.extract = [](const MapWithHoles& q) { return stopping_map_Q(q); };
  r.flag = [](const MapWithHoles& q) { return right_process(q).tau_I < 0; };
  return r;
}

MarkovTestReport strong_markov_test(int l, const Boltzmann& B, const StoppingMapRule& rule,
                                    long n, Rng& rng) {
  FillAccumulator acc(B);
  long flagged = 0;
  for (long i = 0; i < n; ++i) {
    const auto Q = B.sample(l, rng);
    const auto s = rule.extract(Q);
    auto emb = embed(s, Q);
    if (!emb)
      throw Error(Errc::PreconditionViolation, "rule " + rule.name + " returned a non-submap");
    if (rule.flag && rule.flag(Q)) ++flagged;
    acc.add(emb->fills);
  }
  if (n <= 0) throw Error(Errc::EventNeverHit, "no samples");
  auto rep = acc.finish(true);
  rep.reference += "; grouped by stopping submap hole slot and semi-perimeter";
  rep.samples = n;
  rep.hits = n;
  rep.flagged = flagged;
  return rep;
}

MarkovTestReport null_fill_test(const Boltzmann& B, const std::vector<int>& perimeters, long n,
                                Rng& rng) {
  FillAccumulator acc(B);
  std::vector<MapWithHoles> fills(perimeters.size());
  for (long i = 0; i < n; ++i) {
    for (size_t j = 0; j < perimeters.size(); ++j) fills[j] = B.sample(perimeters[j], rng);
    acc.add(fills);
  }
  auto rep = acc.finish(perimeters.size() > 1);
  rep.samples = rep.hits = n;
  return rep;
}

Real rerooting_invariance_check(int l, int fmax, const Boltzmann& B) {
  Real worst = 0;
  for (int f = 0; f <= fmax; ++f) {
    std::vector<MapWithHoles> maps;
    try {
      maps = generate_all(l, f, 14);
    } catch (const Error& e) {
      throw Error(Errc::CensusMissing, e.what());
    }
    for (const auto& m : maps) {
      const Real p = B.prob_exact(m);
      int d = m.root();
      do {
        const auto r = reroot(m, d);
        if (auto st = validate_quadrangulation(r); !st) throw Error(st.code, st.message, st.detail);
        worst = std::max(worst, std::abs(p - B.prob_exact(r)));
        d = m.phi(d);
      } while (d != m.root());
    }
  }
  return worst;
}

Real decomposition_check(int l, int fmax, const Boltzmann& B) {
  Real worst = 0;
  for (int f = 0; f <= fmax; ++f)
    for (const auto& m : generate_all(l, f, 14)) {
      const auto ex = explore(m);
      Real prod = 1;
      for (size_t i = 0; i < ex.events.size(); ++i) {
        const auto& e = ex.maps[i];
        const int k = e.face_degree(e.holes()[0].face) / 2;
        for (const auto& [ev, pr] : B.peel_probabilities(k))
          if (ev == ex.events[i]) prod *= pr;
      }
      const Real p = B.prob_exact(m);
      worst = std::max(worst, std::abs(p - prod) / p);
    }
  return worst;
}

DualWalk dual_walk(const MapWithHoles& m, bool right) {
  DualWalk w;
  std::vector<char> used(m.num_darts(), 0);
  auto mark = [&](int d) { used[d] = used[m.alpha(d)] = 1; };
  const int rf = m.root_face();
  w.faces.push_back(rf);
  int exit = right ? m.root() : m.phi_inv(m.root());
  for (;;) {
    w.exits.push_back(exit);
    mark(exit);
    const int a = m.alpha(exit);
    const int F = m.face_of(a);
    if (m.face_kind(F) == FaceKind::Hole) {
      w.exits.pop_back();  // the crossing leads nowhere known
      return w;
    }
    w.faces.push_back(F);
    if (F == rf) {
      w.completed = true;
      return w;
    }
    int next = -1;
    int d = a;
    for (int s = 1; s < m.face_degree(F); ++s) {
      d = right ? m.phi(d) : m.phi_inv(d);
      if (!used[d]) {
        next = d;
        break;
      }
    }
    if (next < 0) throw Error(Errc::PreconditionViolation, "dual walk stuck", F);
    exit = next;
  }
}

RightProcess right_process(const MapWithHoles& q) {
  if (q.is_cemetery() || q.semi_perimeter() != 1)
    throw Error(Errc::WrongPerimeter, "right process needs semi-perimeter 1");
  if (q.num_holes() != 0) throw Error(Errc::PreconditionViolation, "right process needs a full map");
  RightProcess r;
  r.walk = dual_walk(q, true);
  const auto& x = r.walk.faces;
  r.tau_E = static_cast<int>(x.size()) - 1;
  std::map<int, int> count;
  for (int i = 1; i <= r.tau_E; ++i) count[x[i]]++;
  for (int i = 1; i <= r.tau_E; ++i)
    if (count[x[i]] > 1) {
      r.tau_I = i;
      break;
    }
  if (r.tau_I >= 0)
    for (int i = r.tau_E; i >= 0; --i)
      if (x[i] == x[r.tau_I]) {
        r.tau_R = i;
        break;
      }
  return r;
}

MapWithHoles stopping_map_Q(const MapWithHoles& q, bool* full_cycle) {
  const auto rp = right_process(q);
  Explorer ex(q);
  const auto& e = rp.walk.exits;  // e[i-1] crosses the i-th cycle edge
  const bool whole = rp.tau_I < 0;
  if (full_cycle) *full_cycle = whole;
  for (int i = 1; i <= rp.tau_E; ++i) {
    if (!whole && i > rp.tau_I && i <= rp.tau_R) continue;
    ex.peel_edge(e[i - 1]);
  }
  return ex.explored();
}

Decision containment_decider_Q(const MapWithHoles& p) {
  if (p.is_cemetery() || p.semi_perimeter() != 1)
    throw Error(Errc::WrongPerimeter, "decider needs semi-perimeter 1");
  const auto R = dual_walk(p, true);
  if (R.completed) return Decision::Contained;
  const auto L = dual_walk(p, false);
  if (L.completed) return Decision::Contained;
  // The earliest vertex of the right walk seen twice in either walk is the
  // first self-intersection; Q lies inside p iff its second visit is one the
  // left walk has already made.  A meeting of the two walks at a later vertex
  // is not enough (the loop it closes may sit inside the unexplored part).
  std::map<int, int> in_left;
  for (size_t i = 1; i < L.faces.size(); ++i) in_left[L.faces[i]]++;
  std::map<int, int> in_right;
  for (size_t i = 1; i < R.faces.size(); ++i) in_right[R.faces[i]]++;
  for (size_t i = 1; i < R.faces.size(); ++i) {
    const int x = R.faces[i];
    if (in_right[x] > 1) return Decision::NotContained;
    if (in_left.count(x)) return Decision::Contained;
  }
  return Decision::NotContained;
}

namespace {

// Peeling steps on a concrete map with named hole darts.
struct Branch {
  const Boltzmann& B;
  MapWithHoles m = MapWithHoles::initial(1);
  Real prob = 1;
  std::vector<std::string> steps;
  std::map<char, int> name;

  Real step_prob(int k, PeelEvent ev) const {
    for (auto& [e, p] : B.peel_probabilities(k))
      if (e == ev) return p;
    return 0;
  }
  int k_of(int d) const { return m.face_degree(m.face_of(d)) / 2; }

  // Type1 on `who`; the new hole darts, from the right, get `fresh`.
  Branch& t1(char who, const char* fresh) {
    const int d = name.at(who);
    prob *= step_prob(k_of(d), PeelEvent::t1());
    const int n = m.num_darts();
    m = peel(m, d, PeelEvent::t1());
    for (int i = 0; i < 3; ++i) name[fresh[i]] = n + 3 + i;
    steps.push_back(std::string("peel ") + who + ": new vertex with " + fresh);
    return *this;
  }
  Branch& t2(char who, char with) {
    const int d = name.at(who), target = name.at(with);
    int j = 0;
    for (int y = d; y != target; y = m.phi(y))
      if (++j > m.num_darts()) throw Error(Errc::PreconditionViolation, "darts on different holes");
    if (j % 2 == 0) throw Error(Errc::PreconditionViolation, "identification at even distance");
    const int k = k_of(d);
    const auto ev = PeelEvent::t2((j - 1) / 2, k - 1 - (j - 1) / 2);
    prob *= step_prob(k, ev);
    m = peel(m, d, ev);
    steps.push_back(std::string("peel ") + who + ": identify with " + with + " (" + ev.str() + ")");
    return *this;
  }
};

void check_completions(BranchLeaf& leaf, int fill_faces) {
  const auto& p = leaf.discovered;
  std::vector<std::vector<MapWithHoles>> options;
  for (const auto& h : p.holes()) {
    const int k = p.face_degree(h.face) / 2;
    std::vector<MapWithHoles> opt;
    for (int f = 0; f <= fill_faces; ++f)
      for (auto& F : generate_all(k, f, 14)) opt.push_back(std::move(F));
    options.push_back(std::move(opt));
  }
  std::vector<size_t> idx(options.size(), 0);
  for (;;) {
    std::vector<MapWithHoles> fills;
    for (size_t i = 0; i < idx.size(); ++i) fills.push_back(options[i][idx[i]]);
    const auto q = glue(p, fills);
    const auto S = stopping_map_Q(q);
    ++leaf.completions;
    if (same_region(S, p)) ++leaf.equal_to_Q;
    if (embed(S, p)) ++leaf.Q_inside;
    size_t i = 0;
    while (i < idx.size() && ++idx[i] == options[i].size()) idx[i++] = 0;
    if (i == idx.size()) break;
  }
}

}  // namespace

std::vector<BranchLeaf> counterexample_branches(const Boltzmann& B, int fill_faces) {
  auto start = [&]() {
    Branch b{B, MapWithHoles::initial(1), 1, {}, {}};
    b.name['r'] = b.m.holes()[0].mark;
    b.name['d'] = b.m.alpha(b.m.phi(b.m.root()));
    b.t1('r', "abc");
    b.steps.front() = "peel root edge: new vertex x1 with a, b, c";
    return b;
  };
  struct Spec {
    std::string name;
    std::function<void(Branch&)> run;
  };
  const std::vector<Spec> specs = {
      {"(1) peel a, identify a with b", [](Branch& b) { b.t2('a', 'b'); }},
      {"(1) peel b, identify b with a", [](Branch& b) { b.t2('b', 'a'); }},
      {"(2) peel c, peel a, identify h with d",
       [](Branch& b) { b.t1('c', "efg").t1('a', "hij").t2('h', 'd'); }},
      {"(3) peel d, peel g, identify g with f",
       [](Branch& b) { b.t1('d', "efg").t2('g', 'f'); }},
      {"(3) peel d, peel f, identify f with g",
       [](Branch& b) { b.t1('d', "efg").t2('f', 'g'); }},
      {"(3) peel d, peel a, identify a with b",
       [](Branch& b) { b.t1('d', "efg").t2('a', 'b'); }},
      {"(3) peel d, peel b, identify b with a",
       [](Branch& b) { b.t1('d', "efg").t2('b', 'a'); }},
      {"(3) peel d, peel e, then as (2): peel a, identify h with g",
       [](Branch& b) { b.t1('d', "efg").t1('e', "DDD").t1('a', "hij").t2('h', 'g'); }},
      {"(3) peel d, peel c, then as (2): peel a, identify h with g",
       [](Branch& b) { b.t1('d', "efg").t1('c', "DDD").t1('a', "hij").t2('h', 'g'); }},
  };
  std::vector<BranchLeaf> out;
  for (const auto& s : specs) {
    auto b = start();
    s.run(b);
    BranchLeaf leaf;
    leaf.name = s.name;
    leaf.steps = b.steps;
    leaf.discovered = b.m;
    leaf.probability = b.prob;
    check_completions(leaf, fill_faces);
    out.push_back(std::move(leaf));
  }
  return out;
}

}  // namespace qm
