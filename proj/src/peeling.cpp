#include "qmaps/peeling.hpp"

#include <algorithm>
#include <charconv>
#include <sstream>

#include "map_access.hpp"

namespace qm {

using detail::MapAccess;

std::string PeelEvent::str() const {
  if (kind == Type1) return "T1";
  return "T2(" + std::to_string(l1) + "," + std::to_string(l2) + ")";
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\n' ||
                        s.front() == '\r'))
    s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\n' ||
                        s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

int parse_int(std::string_view s) {
  s = trim(s);
  int v = -1;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || v < 0)
    throw Error(Errc::BadCode, "bad integer '" + std::string(s) + "'");
  return v;
}

// In-place peeling steps.  Removed darts are compacted by moving the last
// dart into the freed slot; on_move(old, new) reports each such move.
class Surgery {
 public:
  template <class F>
  Surgery(MapWithHoles& m, F&& on_move) : m_(m), on_move_(std::forward<F>(on_move)) {}

  // Returns the index of f1; f2, f3, g1, g2, g3 follow.
  int type1(int h) {
    auto& alpha = MapAccess::alpha(m_);
    auto& phi = MapAccess::phi(m_);
    auto& phi_inv = MapAccess::phi_inv(m_);
    auto& face_of = MapAccess::face_of(m_);
    auto& rep = MapAccess::face_rep(m_);
    auto& deg = MapAccess::face_deg(m_);
    const int hi = m_.hole_index_of(h);
    if (hi < 0) throw Error(Errc::NotActive, "dart is not on a hole", h);
    const int H = face_of[h];
    const int p = phi_inv[h], nx = phi[h];
    const int n = m_.num_darts();
    const int f1 = n, f2 = n + 1, f3 = n + 2, g1 = n + 3, g2 = n + 4, g3 = n + 5;
    for (auto* v : {&alpha, &phi, &phi_inv, &face_of}) v->resize(n + 6);
    const int F = m_.num_faces();
    MapAccess::face_kind(m_).push_back(FaceKind::Internal);
    rep.push_back(h);
    deg.push_back(4);
    alpha[f1] = g1, alpha[g1] = f1;
    alpha[f2] = g2, alpha[g2] = f2;
    alpha[f3] = g3, alpha[g3] = f3;
    phi[h] = f1, phi[f1] = f2, phi[f2] = f3, phi[f3] = h;
    phi_inv[f1] = h, phi_inv[f2] = f1, phi_inv[f3] = f2, phi_inv[h] = f3;
    face_of[h] = face_of[f1] = face_of[f2] = face_of[f3] = F;
    phi[p] = g3, phi[g3] = g2, phi[g2] = g1, phi[g1] = nx;
    phi_inv[g3] = p, phi_inv[g2] = g3, phi_inv[g1] = g2, phi_inv[nx] = g1;
    face_of[g1] = face_of[g2] = face_of[g3] = H;
    deg[H] += 2;
    if (rep[H] == h) rep[H] = g3;
    auto& hole = MapAccess::holes(m_)[hi];
    if (hole.mark == h) hole.mark = g3;
    return f1;
  }

  void type2(int h, int l1, int l2) {
    auto& alpha = MapAccess::alpha(m_);
    auto& phi = MapAccess::phi(m_);
    auto& phi_inv = MapAccess::phi_inv(m_);
    auto& face_of = MapAccess::face_of(m_);
    auto& rep = MapAccess::face_rep(m_);
    auto& deg = MapAccess::face_deg(m_);
    auto& holes = MapAccess::holes(m_);
    const int hi = m_.hole_index_of(h);
    if (hi < 0) throw Error(Errc::NotActive, "dart is not on a hole", h);
    const int H = face_of[h];
    const int k = deg[H] / 2;
    if (l1 < 0 || l2 < 0 || l1 + l2 != k - 1)
      throw Error(Errc::SplitArityMismatch,
                  "Type2 split sizes must add up to the hole semi-perimeter minus one", hi);
    std::vector<int> w;
    w.reserve(2 * k);
    for (int x = h, i = 0; i < 2 * k; ++i, x = phi[x]) w.push_back(x);
    const int j = 2 * l1 + 1;
    const int a = alpha[w[0]], b = alpha[w[j]];
    alpha[a] = b;
    alpha[b] = a;
    const int mark = holes[hi].mark;
    const int mpos = static_cast<int>(std::find(w.begin(), w.end(), mark) - w.begin());

    std::vector<HoleRecord> repl;
    if (j > 1) {  // hole A = w[1..j-1]
      phi[w[j - 1]] = w[1];
      phi_inv[w[1]] = w[j - 1];
      deg[H] = j - 1;
      rep[H] = w[1];
      repl.push_back({H, (mpos >= 1 && mpos < j) ? mark : w[1]});
    }
    if (j < 2 * k - 1) {  // hole B = w[j+1..2k-1]
      int FB = H;
      if (j > 1) {
        FB = m_.num_faces();
        MapAccess::face_kind(m_).push_back(FaceKind::Hole);
        rep.push_back(w[j + 1]);
        deg.push_back(0);
      }
      phi[w[2 * k - 1]] = w[j + 1];
      phi_inv[w[j + 1]] = w[2 * k - 1];
      for (int i = j + 1; i < 2 * k; ++i) face_of[w[i]] = FB;
      deg[FB] = 2 * k - 1 - j;
      rep[FB] = w[j + 1];
      repl.push_back({FB, mpos > j ? mark : w[j + 1]});
    }
    holes.erase(holes.begin() + hi);
    holes.insert(holes.begin() + hi, repl.begin(), repl.end());
    if (repl.empty()) remove_face(H);
    remove_dart(std::max(w[0], w[j]));
    remove_dart(std::min(w[0], w[j]));
  }

 private:
  void remove_face(int F) {
    auto& kind = MapAccess::face_kind(m_);
    auto& rep = MapAccess::face_rep(m_);
    auto& deg = MapAccess::face_deg(m_);
    auto& face_of = MapAccess::face_of(m_);
    const int last = static_cast<int>(kind.size()) - 1;
    if (F != last) {
      kind[F] = kind[last];
      rep[F] = rep[last];
      deg[F] = deg[last];
      int x = rep[F];
      do {
        face_of[x] = F;
        x = m_.phi(x);
      } while (x != rep[F]);
      for (auto& h : MapAccess::holes(m_))
        if (h.face == last) h.face = F;
    }
    kind.pop_back();
    rep.pop_back();
    deg.pop_back();
  }

  // x must already be detached from alpha and phi of the remaining darts.
  void remove_dart(int x) {
    auto& alpha = MapAccess::alpha(m_);
    auto& phi = MapAccess::phi(m_);
    auto& phi_inv = MapAccess::phi_inv(m_);
    auto& face_of = MapAccess::face_of(m_);
    const int y = m_.num_darts() - 1;
    if (x != y) {
      alpha[x] = alpha[y];
      alpha[alpha[y]] = x;
      phi[x] = phi[y];
      phi_inv[x] = phi_inv[y];
      phi_inv[phi[y]] = x;
      phi[phi_inv[y]] = x;
      face_of[x] = face_of[y];
      auto& rep = MapAccess::face_rep(m_);
      if (rep[face_of[y]] == y) rep[face_of[y]] = x;
      for (auto& h : MapAccess::holes(m_))
        if (h.mark == y) h.mark = x;
      if (MapAccess::root(m_) == y) MapAccess::root(m_) = x;
      on_move_(y, x);
    }
    for (auto* v : {&alpha, &phi, &phi_inv, &face_of}) v->pop_back();
  }

  MapWithHoles& m_;
  std::function<void(int, int)> on_move_;
};

void apply_inplace(MapWithHoles& m, int dart, PeelEvent ev) {
  if (dart < 0 || dart >= m.num_darts() || !m.is_hole_dart(dart))
    throw Error(Errc::NotActive, "dart is not on the active boundary", dart);
  Surgery s(m, [](int, int) {});
  if (ev.kind == PeelEvent::Type1)
    s.type1(dart);
  else
    s.type2(dart, ev.l1, ev.l2);
}

}  // namespace

PeelEvent parse_event(std::string_view s) {
  s = trim(s);
  if (s == "T1") return PeelEvent::t1();
  if (s.size() >= 7 && s.substr(0, 3) == "T2(" && s.back() == ')') {
    const auto inner = s.substr(3, s.size() - 4);
    const auto comma = inner.find(',');
    if (comma == std::string_view::npos) throw Error(Errc::BadCode, "bad event '" + std::string(s) + "'");
    return PeelEvent::t2(parse_int(inner.substr(0, comma)), parse_int(inner.substr(comma + 1)));
  }
  throw Error(Errc::BadCode, "bad event '" + std::string(s) + "'");
}

std::string format_code(const std::vector<PeelEvent>& events) {
  std::string out;
  for (size_t i = 0; i < events.size(); ++i) {
    if (i) out.push_back(',');
    out += events[i].str();
  }
  return out;
}

std::vector<PeelEvent> parse_code(std::string_view code) {
  std::vector<PeelEvent> out;
  code = trim(code);
  if (code.empty()) return out;
  // Split on commas outside parentheses.
  int depth = 0;
  size_t start = 0;
  for (size_t i = 0; i <= code.size(); ++i) {
    if (i == code.size() || (code[i] == ',' && depth == 0)) {
      out.push_back(parse_event(code.substr(start, i - start)));
      start = i + 1;
    } else if (code[i] == '(') {
      ++depth;
    } else if (code[i] == ')') {
      --depth;
    }
  }
  return out;
}

int code_semi_perimeter(const std::vector<PeelEvent>& events) {
  int s = 0;
  for (const auto& e : events) s += (e.kind == PeelEvent::Type2) ? 1 : -1;
  return s;
}

MapWithHoles peel(const MapWithHoles& m, int dart, PeelEvent ev) {
  MapWithHoles r = m;
  apply_inplace(r, dart, ev);
  return r;
}

int canonical_algorithm(const MapWithHoles& m) {
  if (m.num_holes() == 0)
    throw Error(Errc::AlgorithmReturnedInactiveDart, "no hole left to peel");
  return m.holes()[0].mark;
}

MapWithHoles replay(int l, const std::vector<PeelEvent>& events) {
  MapWithHoles m = MapWithHoles::initial(l);
  for (size_t i = 0; i < events.size(); ++i) {
    if (m.num_holes() == 0)
      throw Error(Errc::BadCode, "events continue after the map closed", static_cast<int>(i));
    const int h = m.holes()[0].mark;
    const auto& ev = events[i];
    if (ev.kind == PeelEvent::Type2 &&
        ev.l1 + ev.l2 != m.face_degree(m.holes()[0].face) / 2 - 1)
      throw Error(Errc::BadCode, "split sizes do not match hole at event " + std::to_string(i),
                  static_cast<int>(i));
    apply_inplace(m, h, ev);
  }
  return m;
}

MapWithHoles decode(std::string_view code) {
  const auto events = parse_code(code);
  const int l = code_semi_perimeter(events);
  if (l < 1) throw Error(Errc::BadCode, "code does not describe a map of positive semi-perimeter");
  MapWithHoles m = replay(l, events);
  if (m.num_holes() != 0) throw Error(Errc::BadCode, "incomplete code");
  return m;
}

// ----------------------------------------------------------------- Explorer

Explorer::Explorer(const MapWithHoles& q) : q_(q) {
  if (q.is_cemetery() || q.num_holes() != 0)
    throw Error(Errc::PreconditionViolation, "exploration target must be a hole-free map");
  e_ = MapWithHoles::initial(q.semi_perimeter());
  const int k = 2 * q.semi_perimeter();
  img_.assign(2 * k, -1);
  pre_.assign(q.num_darts(), -1);
  int x = q.root();
  for (int i = 0; i < k; ++i, x = q.phi(x)) {  // initial(): root face darts 0..k-1
    img_[i] = x;
    pre_[x] = i;
  }
}

PeelEvent Explorer::event_at(int h) const {
  if (h < 0 || h >= e_.num_darts() || !e_.is_hole_dart(h))
    throw Error(Errc::NotActive, "dart is not on the active boundary", h);
  const int x = q_.alpha(img_[e_.alpha(h)]);
  if (pre_[x] == -1) return PeelEvent::t1();
  const int h2 = e_.alpha(pre_[x]);
  const int k = e_.face_degree(e_.face_of(h)) / 2;
  int j = 0;
  for (int y = h; y != h2; y = e_.phi(y)) {
    if (++j >= 2 * k) throw Error(Errc::NotSubmap, "identified dart lies on another hole", h);
  }
  if (j % 2 == 0) throw Error(Errc::NotSubmap, "identification at even distance", h);
  const int l1 = (j - 1) / 2;
  return PeelEvent::t2(l1, k - 1 - l1);
}

PeelEvent Explorer::step(int h) {
  const PeelEvent ev = event_at(h);
  Surgery s(e_, [this](int from, int to) {
    img_[to] = img_[from];
    if (img_[to] != -1) pre_[img_[to]] = to;
  });
  if (ev.kind == PeelEvent::Type1) {
    const int x = q_.alpha(img_[e_.alpha(h)]);
    if (q_.face_kind(q_.face_of(x)) != FaceKind::Internal || q_.face_degree(q_.face_of(x)) != 4)
      throw Error(Errc::NotSubmap, "revealed face is not an internal quadrilateral", h);
    const int f1 = s.type1(h);
    img_.resize(e_.num_darts(), -1);
    const int xs[4] = {x, q_.phi(x), q_.phi(q_.phi(x)), q_.phi(q_.phi(q_.phi(x)))};
    const int es[4] = {h, f1, f1 + 1, f1 + 2};
    for (int i = 0; i < 4; ++i) {
      img_[es[i]] = xs[i];
      pre_[xs[i]] = es[i];
    }
  } else {
    s.type2(h, ev.l1, ev.l2);
    img_.resize(e_.num_darts());
  }
  events_.push_back(ev);
  return ev;
}

bool Explorer::peel_edge(int x) {
  for (int y : {x, q_.alpha(x)}) {
    const int d = pre_[y];
    if (d == -1) continue;
    const int a = e_.alpha(d);
    if (e_.is_hole_dart(a)) {
      step(a);
      return true;
    }
  }
  return false;
}

PeelEvent peel_type_of(const MapWithHoles& e, int dart, const MapWithHoles& q) {
  auto emb = embed(e, q);
  if (!emb) throw Error(Errc::NotSubmap, "explored map is not a submap of the target");
  if (dart < 0 || dart >= e.num_darts() || !e.is_hole_dart(dart))
    throw Error(Errc::NotActive, "dart is not on the active boundary", dart);
  std::vector<int> pre(q.num_darts(), -1);
  for (int d = 0; d < e.num_darts(); ++d)
    if (emb->image[d] >= 0) pre[emb->image[d]] = d;
  const int x = q.alpha(emb->image[e.alpha(dart)]);
  if (pre[x] == -1) return PeelEvent::t1();
  const int h2 = e.alpha(pre[x]);
  const int k = e.face_degree(e.face_of(dart)) / 2;
  int j = 0;
  for (int y = dart; y != h2; y = e.phi(y))
    if (++j >= 2 * k) throw Error(Errc::NotSubmap, "identified dart lies on another hole", dart);
  const int l1 = (j - 1) / 2;
  return PeelEvent::t2(l1, k - 1 - l1);
}

Exploration explore(const MapWithHoles& q, const PeelingAlgorithm& alg, const StoppingRule& stop) {
  Explorer ex(q);
  Exploration out;
  out.l = q.semi_perimeter();
  out.maps.push_back(ex.explored());
  while (!ex.done()) {
    if (stop && stop(ex.explored(), ex.events())) break;
    const int d = alg ? alg(ex.explored()) : canonical_algorithm(ex.explored());
    if (d < 0 || d >= ex.explored().num_darts() || !ex.explored().is_hole_dart(d))
      throw Error(Errc::AlgorithmReturnedInactiveDart, "algorithm returned an inactive dart", d);
    ex.step(d);
    out.maps.push_back(ex.explored());
  }
  out.events = ex.events();
  return out;
}

std::vector<PeelEvent> canonical_events(const MapWithHoles& q) {
  Explorer ex(q);
  while (!ex.done()) ex.step_canonical();
  return ex.events();
}

std::string encode(const MapWithHoles& q) { return format_code(canonical_events(q)); }

}  // namespace qm
