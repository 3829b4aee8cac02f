#include "qmaps/map.hpp"

#include <algorithm>
#include <deque>
#include <sstream>

#include "json.hpp"
#include "map_access.hpp"

namespace qm {

const char* errc_name(Errc c) {
  switch (c) {
    case Errc::InvalidPermutation: return "InvalidPermutation";
    case Errc::NonQuadFace: return "NonQuadFace";
    case Errc::EulerViolation: return "EulerViolation";
    case Errc::NotConnected: return "NotConnected";
    case Errc::BadHole: return "BadHole";
    case Errc::PerimeterMismatch: return "PerimeterMismatch";
    case Errc::NotAHole: return "NotAHole";
    case Errc::DartNotOnBoundary: return "DartNotOnBoundary";
    case Errc::NotActive: return "NotActive";
    case Errc::SplitArityMismatch: return "SplitArityMismatch";
    case Errc::NotSubmap: return "NotSubmap";
    case Errc::AlgorithmReturnedInactiveDart: return "AlgorithmReturnedInactiveDart";
    case Errc::BadCode: return "BadCode";
    case Errc::OutOfBounds: return "OutOfBounds";
    case Errc::BudgetExceeded: return "BudgetExceeded";
    case Errc::DivisionByZero: return "DivisionByZero";
    case Errc::TailToleranceNotMet: return "TailToleranceNotMet";
    case Errc::CensusMissing: return "CensusMissing";
    case Errc::EmptyClass: return "EmptyClass";
    case Errc::EventNeverHit: return "EventNeverHit";
    case Errc::DegenerateTable: return "DegenerateTable";
    case Errc::PreconditionViolation: return "PreconditionViolation";
    case Errc::WrongPerimeter: return "WrongPerimeter";
    case Errc::TooManyFaces: return "TooManyFaces";
    case Errc::SingularForm: return "SingularForm";
    case Errc::MissingSpin: return "MissingSpin";
    case Errc::BinTooThin: return "BinTooThin";
    case Errc::NonpositiveLength: return "NonpositiveLength";
    case Errc::QuadratureFailure: return "QuadratureFailure";
    case Errc::BadGrid: return "BadGrid";
    case Errc::CapUnsatisfiable: return "CapUnsatisfiable";
    case Errc::InsufficientHits: return "InsufficientHits";
    case Errc::Usage: return "Usage";
  }
  return "Unknown";
}

namespace detail {

MapWithHoles MapAccess::assemble(std::vector<int> alpha, std::vector<int> phi,
                                 int root, const std::vector<int>& hole_marks) {
  MapWithHoles m;
  const int n = static_cast<int>(alpha.size());
  m.alpha_ = std::move(alpha);
  m.phi_ = std::move(phi);
  m.phi_inv_.assign(n, -1);
  for (int d = 0; d < n; ++d) m.phi_inv_[m.phi_[d]] = d;
  m.face_of_.assign(n, -1);
  for (int d = 0; d < n; ++d) {
    if (m.face_of_[d] != -1) continue;
    const int f = static_cast<int>(m.face_kind_.size());
    int deg = 0;
    int x = d;
    do {
      m.face_of_[x] = f;
      ++deg;
      x = m.phi_[x];
    } while (x != d);
    m.face_kind_.push_back(FaceKind::Internal);
    m.face_rep_.push_back(d);
    m.face_deg_.push_back(deg);
  }
  m.root_ = root;
  if (n > 0) m.face_kind_[m.face_of_[root]] = FaceKind::Root;
  for (int mark : hole_marks) {
    const int f = m.face_of_[mark];
    if (m.face_kind_[f] != FaceKind::Internal)
      throw Error(Errc::BadHole, "hole mark on root face or repeated hole", mark);
    m.face_kind_[f] = FaceKind::Hole;
    m.holes_.push_back({f, mark});
  }
  return m;
}

}  // namespace detail

using detail::MapAccess;

MapWithHoles MapWithHoles::initial(int l) {
  if (l < 1) throw Error(Errc::PreconditionViolation, "semi-perimeter must be >= 1");
  const int k = 2 * l;
  std::vector<int> alpha(2 * k), phi(2 * k);
  for (int i = 0; i < k; ++i) {
    alpha[i] = k + i;
    alpha[k + i] = i;
    phi[i] = (i + 1) % k;
    phi[k + i] = k + (i + k - 1) % k;
  }
  return MapAccess::assemble(std::move(alpha), std::move(phi), 0, {k});
}

MapWithHoles MapWithHoles::from_raw(const std::vector<int>& alpha,
                                    const std::vector<int>& sigma, int root,
                                    const std::vector<int>& hole_marks) {
  const int n = static_cast<int>(alpha.size());
  if (n == 0) {
    if (!sigma.empty() || !hole_marks.empty())
      throw Error(Errc::InvalidPermutation, "empty alpha with nonempty data");
    return MapWithHoles{};
  }
  if (static_cast<int>(sigma.size()) != n || n % 2 != 0)
    throw Error(Errc::InvalidPermutation, "alpha/sigma size mismatch or odd dart count");
  std::vector<char> seen(n, 0);
  for (int d = 0; d < n; ++d) {
    if (alpha[d] < 0 || alpha[d] >= n || alpha[d] == d || alpha[alpha[d]] != d)
      throw Error(Errc::InvalidPermutation, "alpha is not a fixed-point-free involution", d);
    if (sigma[d] < 0 || sigma[d] >= n || seen[sigma[d]])
      throw Error(Errc::InvalidPermutation, "sigma is not a permutation", d);
    seen[sigma[d]] = 1;
  }
  if (root < 0 || root >= n) throw Error(Errc::InvalidPermutation, "root out of range", root);
  for (int mk : hole_marks)
    if (mk < 0 || mk >= n) throw Error(Errc::BadHole, "hole mark out of range", mk);
  std::vector<int> phi(n);
  for (int d = 0; d < n; ++d) phi[d] = sigma[alpha[d]];
  return MapAccess::assemble(alpha, std::move(phi), root, hole_marks);
}

std::vector<int> MapWithHoles::face_darts(int f) const {
  std::vector<int> out;
  out.reserve(face_deg_[f]);
  const int s = face_rep_[f];
  int x = s;
  do {
    out.push_back(x);
    x = phi_[x];
  } while (x != s);
  return out;
}

std::vector<int> MapWithHoles::hole_walk(int i) const {
  std::vector<int> out;
  const int s = holes_[i].mark;
  out.reserve(face_deg_[holes_[i].face]);
  int x = s;
  do {
    out.push_back(x);
    x = phi_[x];
  } while (x != s);
  return out;
}

int MapWithHoles::hole_index_of(int d) const {
  const int f = face_of_[d];
  if (face_kind_[f] != FaceKind::Hole) return -1;
  for (int i = 0; i < num_holes(); ++i)
    if (holes_[i].face == f) return i;
  return -1;
}

std::vector<int> MapWithHoles::active_boundary() const {
  std::vector<int> out;
  for (int d = 0; d < num_darts(); ++d)
    if (is_hole_dart(d)) out.push_back(d);
  return out;
}

int MapWithHoles::num_internal_faces() const {
  int c = 0;
  for (auto k : face_kind_) c += (k == FaceKind::Internal);
  return c;
}

std::vector<int> MapWithHoles::internal_faces() const {
  std::vector<int> out;
  for (int f = 0; f < num_faces(); ++f)
    if (face_kind_[f] == FaceKind::Internal) out.push_back(f);
  return out;
}

int MapWithHoles::num_vertices() const {
  const int n = num_darts();
  std::vector<char> seen(n, 0);
  int v = 0;
  for (int d = 0; d < n; ++d) {
    if (seen[d]) continue;
    ++v;
    int x = d;
    do {
      seen[x] = 1;
      x = sigma(x);
    } while (x != d);
  }
  return v;
}

std::vector<int> MapWithHoles::sigma_vector() const {
  std::vector<int> s(num_darts());
  for (int d = 0; d < num_darts(); ++d) s[d] = sigma(d);
  return s;
}

// ---------------------------------------------------------------- validation

namespace {

Status check_permutations(const MapWithHoles& m) {
  const int n = m.num_darts();
  if (n % 2 != 0) return Status::fail(Errc::InvalidPermutation, "odd number of darts");
  for (int d = 0; d < n; ++d) {
    const int a = m.alpha(d);
    if (a < 0 || a >= n || a == d || m.alpha(a) != d)
      return Status::fail(Errc::InvalidPermutation, "alpha is not a fixed-point-free involution", d);
    const int p = m.phi(d);
    if (p < 0 || p >= n || m.phi_inv(p) != d)
      return Status::fail(Errc::InvalidPermutation, "phi is not a permutation", d);
    if (m.face_of(p) != m.face_of(d))
      return Status::fail(Errc::InvalidPermutation, "face labels disagree with phi", d);
  }
  if (m.root() < 0 || m.root() >= n)
    return Status::fail(Errc::InvalidPermutation, "root out of range");
  return {};
}

Status check_connected(const MapWithHoles& m) {
  const int n = m.num_darts();
  std::vector<char> seen(n, 0);
  std::vector<int> stack{m.root()};
  seen[m.root()] = 1;
  int cnt = 1;
  while (!stack.empty()) {
    const int d = stack.back();
    stack.pop_back();
    for (int y : {m.alpha(d), m.phi(d)}) {
      if (!seen[y]) {
        seen[y] = 1;
        ++cnt;
        stack.push_back(y);
      }
    }
  }
  if (cnt != n) return Status::fail(Errc::NotConnected, "map is not connected");
  return {};
}

Status check_holes(const MapWithHoles& m) {
  std::vector<char> used(m.num_faces(), 0);
  for (int i = 0; i < m.num_holes(); ++i) {
    const auto& h = m.holes()[i];
    if (h.face == m.root_face() || m.face_kind(h.face) != FaceKind::Hole || used[h.face])
      return Status::fail(Errc::BadHole, "hole face invalid or repeated", i);
    if (m.face_of(h.mark) != h.face)
      return Status::fail(Errc::BadHole, "hole mark not on hole face", i);
    if (m.face_degree(h.face) % 2 != 0)
      return Status::fail(Errc::BadHole, "hole of odd degree", i);
    used[h.face] = 1;
  }
  int nh = 0;
  for (int f = 0; f < m.num_faces(); ++f) nh += (m.face_kind(f) == FaceKind::Hole);
  if (nh != m.num_holes()) return Status::fail(Errc::BadHole, "unlisted hole face");
  for (int d = 0; d < m.num_darts(); ++d)
    if (m.is_hole_dart(d) && m.is_hole_dart(m.alpha(d)))
      return Status::fail(Errc::BadHole, "edge with holes on both sides", d);
  return {};
}

Status check_euler(const MapWithHoles& m) {
  const int chi = m.num_vertices() - m.num_edges() + m.num_faces();
  if (chi != 2)
    return Status::fail(Errc::EulerViolation, "V - E + F = " + std::to_string(chi));
  return {};
}

}  // namespace

Status validate_structure(const MapWithHoles& m) {
  if (m.is_cemetery()) return {};
  for (auto check : {check_permutations, check_connected, check_holes, check_euler}) {
    Status s = check(m);
    if (!s) return s;
  }
  return {};
}

Status validate_quadrangulation(const MapWithHoles& m) {
  if (m.is_cemetery()) return {};
  for (auto check : {check_permutations, check_connected, check_holes}) {
    Status s = check(m);
    if (!s) return s;
  }
  for (int f = 0; f < m.num_faces(); ++f)
    if (m.face_kind(f) == FaceKind::Internal && m.face_degree(f) != 4)
      return Status::fail(Errc::NonQuadFace,
                          "face " + std::to_string(f) + " has degree " +
                              std::to_string(m.face_degree(f)),
                          f);
  if (m.face_degree(m.root_face()) % 2 != 0)
    return Status::fail(Errc::NonQuadFace, "root face of odd degree", m.root_face());
  return check_euler(m);
}

// ------------------------------------------------------------------- gluing

MapWithHoles glue(const MapWithHoles& q1, const std::vector<MapWithHoles>& fills) {
  if (q1.is_cemetery()) {
    if (fills.size() == 1) return fills[0];
    if (fills.empty()) return q1;
    throw Error(Errc::NotAHole, "the cemetery takes at most one fill");
  }
  if (static_cast<int>(fills.size()) != q1.num_holes())
    throw Error(Errc::NotAHole, "expected one fill per hole", static_cast<int>(fills.size()));
  const int H = q1.num_holes();
  for (int i = 0; i < H; ++i) {
    if (fills[i].is_cemetery() ||
        2 * fills[i].semi_perimeter() != q1.face_degree(q1.holes()[i].face))
      throw Error(Errc::PerimeterMismatch,
                  "fill perimeter differs from hole degree", i);
  }

  // Position of every hole dart along its hole walk.
  std::vector<int> hole_of(q1.num_darts(), -1), pos_of(q1.num_darts(), -1);
  std::vector<std::vector<int>> walks(H);
  for (int i = 0; i < H; ++i) {
    walks[i] = q1.hole_walk(i);
    for (int p = 0; p < static_cast<int>(walks[i].size()); ++p) {
      hole_of[walks[i][p]] = i;
      pos_of[walks[i][p]] = p;
    }
  }
  // Root-face position of each fill dart (-1 when not on the fill's root face).
  std::vector<std::vector<int>> rpos(H);
  std::vector<std::vector<int>> rdart(H);  // position -> fill root-face dart
  for (int i = 0; i < H; ++i) {
    const auto& F = fills[i];
    const int k = 2 * F.semi_perimeter();
    rpos[i].assign(F.num_darts(), -1);
    rdart[i].assign(k, -1);
    int x = F.root();
    for (int p = 0; p < k; ++p) {  // position p is phi^{-p}(root)
      rpos[i][x] = p;
      rdart[i][p] = x;
      x = F.phi_inv(x);
    }
  }

  // New ids: q1 non-hole darts first, then fill darts in fill order.
  std::vector<int> id1(q1.num_darts(), -1);
  int n = 0;
  for (int d = 0; d < q1.num_darts(); ++d)
    if (!q1.is_hole_dart(d)) id1[d] = n++;
  std::vector<std::vector<int>> idf(H);
  for (int i = 0; i < H; ++i) {
    idf[i].assign(fills[i].num_darts(), -1);
    for (int x = 0; x < fills[i].num_darts(); ++x)
      if (rpos[i][x] < 0) idf[i][x] = n++;
  }

  std::vector<int> alpha(n, -1), phi(n, -1);
  // Partner of a q1 hole dart seen from the q1 side.
  auto through = [&](int h) -> int {
    for (int guard = 0; guard <= q1.num_darts(); ++guard) {
      const int i = hole_of[h];
      const auto& F = fills[i];
      const int x = F.alpha(rdart[i][pos_of[h]]);
      if (rpos[i][x] < 0) return idf[i][x];
      const int h2 = walks[i][rpos[i][x]];
      const int d2 = q1.alpha(h2);
      if (!q1.is_hole_dart(d2)) return id1[d2];
      h = d2;
    }
    throw Error(Errc::BadHole, "unbounded identification chain while gluing");
  };

  for (int d = 0; d < q1.num_darts(); ++d) {
    if (q1.is_hole_dart(d)) continue;
    phi[id1[d]] = id1[q1.phi(d)];
    const int a = q1.alpha(d);
    alpha[id1[d]] = q1.is_hole_dart(a) ? through(a) : id1[a];
  }
  for (int i = 0; i < H; ++i) {
    const auto& F = fills[i];
    for (int x = 0; x < F.num_darts(); ++x) {
      if (rpos[i][x] >= 0) continue;
      phi[idf[i][x]] = idf[i][F.phi(x)];
      const int y = F.alpha(x);
      if (rpos[i][y] < 0) {
        alpha[idf[i][x]] = idf[i][y];
      } else {
        const int d = q1.alpha(walks[i][rpos[i][y]]);
        alpha[idf[i][x]] = id1[d];
      }
    }
  }

  std::vector<int> marks;
  for (int i = 0; i < H; ++i)
    for (const auto& h : fills[i].holes()) marks.push_back(idf[i][h.mark]);
  return MapAccess::assemble(std::move(alpha), std::move(phi), id1[q1.root()], marks);
}

// ------------------------------------------------------------------ submaps

std::optional<Embedding> embed(const MapWithHoles& q1, const MapWithHoles& q2) {
  if (q1.is_cemetery()) {
    Embedding e;
    e.fills.push_back(q2);
    std::vector<int> id(q2.num_darts());
    for (int d = 0; d < q2.num_darts(); ++d) id[d] = d;
    e.fill_image.push_back(std::move(id));
    return e;
  }
  if (q2.is_cemetery()) return std::nullopt;
  if (q1.semi_perimeter() != q2.semi_perimeter()) return std::nullopt;

  const int n1 = q1.num_darts(), n2 = q2.num_darts();
  std::vector<int> img(n1, -1), inv(n2, -1);
  auto kind_ok = [&](int d1, int d2) {
    const FaceKind k1 = q1.face_kind(q1.face_of(d1));
    const FaceKind k2 = q2.face_kind(q2.face_of(d2));
    return k1 == k2 && k1 != FaceKind::Hole;
  };
  if (!kind_ok(q1.root(), q2.root())) return std::nullopt;
  img[q1.root()] = q2.root();
  inv[q2.root()] = q1.root();
  std::vector<int> stack{q1.root()};
  int mapped = 1;
  while (!stack.empty()) {
    const int d = stack.back();
    stack.pop_back();
    const int e = img[d];
    const int a = q1.alpha(d);
    const int nb[2] = {q1.phi(d), q1.is_hole_dart(a) ? -1 : a};
    const int tg[2] = {q2.phi(e), q2.alpha(e)};
    for (int t = 0; t < 2; ++t) {
      if (nb[t] < 0) continue;
      if (img[nb[t]] == -1) {
        if (inv[tg[t]] != -1 || !kind_ok(nb[t], tg[t])) return std::nullopt;
        img[nb[t]] = tg[t];
        inv[tg[t]] = nb[t];
        ++mapped;
        stack.push_back(nb[t]);
      } else if (img[nb[t]] != tg[t]) {
        return std::nullopt;
      }
    }
  }
  int surviving = 0;
  for (int d = 0; d < n1; ++d) surviving += !q1.is_hole_dart(d);
  if (mapped != surviving) return std::nullopt;

  const int H = q1.num_holes();
  std::vector<int> hole_of(n1, -1), pos_of(n1, -1);
  std::vector<std::vector<int>> walks(H);
  for (int i = 0; i < H; ++i) {
    walks[i] = q1.hole_walk(i);
    for (int p = 0; p < static_cast<int>(walks[i].size()); ++p) {
      hole_of[walks[i][p]] = i;
      pos_of[walks[i][p]] = p;
    }
  }

  Embedding out;
  out.image = img;
  std::vector<int> owner(n2, -1), loc(n2, -1);
  for (int i = 0; i < H; ++i) {
    const int k = static_cast<int>(walks[i].size());
    std::vector<int> darts;  // q2 darts of this fill, in local order after the k root darts
    std::vector<int> falpha(k, -1);
    std::vector<int> queue;
    auto claim = [&](int x) -> bool {
      if (owner[x] == i) return true;
      if (owner[x] != -1) return false;
      owner[x] = i;
      loc[x] = k + static_cast<int>(darts.size());
      darts.push_back(x);
      falpha.push_back(-1);
      queue.push_back(x);
      return true;
    };
    // Root-face darts of the fill.
    for (int p = 0; p < k; ++p) {
      const int d = q1.alpha(walks[i][p]);
      const int e = q2.alpha(img[d]);
      if (inv[e] == -1) {
        if (!claim(e)) return std::nullopt;
        falpha[p] = loc[e];
      } else {
        const int h2 = q1.alpha(inv[e]);
        if (hole_of[h2] != i) return std::nullopt;
        falpha[p] = pos_of[h2];
      }
    }
    for (size_t qi = 0; qi < queue.size(); ++qi) {
      const int x = queue[qi];
      for (int y : {q2.phi(x), q2.phi_inv(x)}) {
        if (inv[y] != -1 || !claim(y)) return std::nullopt;
      }
      const int y = q2.alpha(x);
      if (inv[y] == -1) {
        if (!claim(y)) return std::nullopt;
        falpha[loc[x]] = loc[y];
      } else {
        const int h2 = q1.alpha(inv[y]);
        if (hole_of[h2] != i) return std::nullopt;
        falpha[loc[x]] = pos_of[h2];
      }
    }
    const int nf = k + static_cast<int>(darts.size());
    std::vector<int> fphi(nf);
    for (int p = 0; p < k; ++p) fphi[p] = (p + k - 1) % k;
    for (int x : darts) fphi[loc[x]] = loc[q2.phi(x)];
    for (int p = 0; p < nf; ++p)
      if (falpha[p] < 0 || falpha[falpha[p]] != p) return std::nullopt;
    std::vector<int> marks;
    for (const auto& h : q2.holes())
      if (owner[h.mark] == i) marks.push_back(loc[h.mark]);
    MapWithHoles F;
    try {
      F = MapAccess::assemble(falpha, std::move(fphi), 0, marks);
    } catch (const Error&) {
      return std::nullopt;
    }
    if (!validate_structure(F)) return std::nullopt;
    std::vector<int> fimg(nf, -1);
    for (int x : darts) fimg[loc[x]] = x;
    out.fills.push_back(std::move(F));
    out.fill_image.push_back(std::move(fimg));
  }
  for (int x = 0; x < n2; ++x)
    if (inv[x] == -1 && owner[x] == -1) return std::nullopt;
  return out;
}

std::optional<std::vector<MapWithHoles>> is_submap(const MapWithHoles& q1,
                                                   const MapWithHoles& q2) {
  auto e = embed(q1, q2);
  if (!e) return std::nullopt;
  return std::move(e->fills);
}

bool same_region(const MapWithHoles& a, const MapWithHoles& b) {
  return embed(a, b).has_value() && embed(b, a).has_value();
}

MapWithHoles reroot(const MapWithHoles& m, int dart) {
  if (m.is_cemetery() || dart < 0 || dart >= m.num_darts() ||
      m.face_of(dart) != m.root_face())
    throw Error(Errc::DartNotOnBoundary, "new root must lie on the root face", dart);
  MapWithHoles r = m;
  MapAccess::root(r) = dart;
  return r;
}

// ------------------------------------------------------------ canonical code

std::vector<int> canonical_dart_order(const MapWithHoles& m) {
  std::vector<int> order;
  if (m.is_cemetery()) return order;
  std::vector<char> seen(m.num_darts(), 0);
  order.reserve(m.num_darts());
  order.push_back(m.root());
  seen[m.root()] = 1;
  for (size_t i = 0; i < order.size(); ++i) {
    const int d = order[i];
    for (int y : {m.alpha(d), m.phi(d)}) {
      if (!seen[y]) {
        seen[y] = 1;
        order.push_back(y);
      }
    }
  }
  return order;
}

namespace {
void put_varint(std::string& s, unsigned v) {
  while (v >= 0x80) {
    s.push_back(static_cast<char>((v & 0x7f) | 0x80));
    v >>= 7;
  }
  s.push_back(static_cast<char>(v));
}
}  // namespace

std::string canonical_code(const MapWithHoles& m) {
  std::string s;
  const auto order = canonical_dart_order(m);
  std::vector<int> lab(m.num_darts(), -1);
  for (size_t i = 0; i < order.size(); ++i) lab[order[i]] = static_cast<int>(i);
  put_varint(s, static_cast<unsigned>(order.size()));
  for (int d : order) {
    put_varint(s, static_cast<unsigned>(lab[m.alpha(d)]));
    put_varint(s, static_cast<unsigned>(lab[m.phi(d)]));
    s.push_back(static_cast<char>(m.face_kind(m.face_of(d))));
  }
  put_varint(s, static_cast<unsigned>(m.num_holes()));
  for (const auto& h : m.holes()) put_varint(s, static_cast<unsigned>(lab[h.mark]));
  return s;
}

std::string to_hex(const std::string& bytes) {
  static const char* digits = "0123456789abcdef";
  std::string out;
  out.reserve(2 * bytes.size());
  for (unsigned char c : bytes) {
    out.push_back(digits[c >> 4]);
    out.push_back(digits[c & 15]);
  }
  return out;
}

std::vector<int> canonical_internal_faces(const MapWithHoles& m) {
  std::vector<int> out;
  std::vector<char> seen(m.num_faces(), 0);
  for (int d : canonical_dart_order(m)) {
    const int f = m.face_of(d);
    if (!seen[f] && m.face_kind(f) == FaceKind::Internal) out.push_back(f);
    seen[f] = 1;
  }
  return out;
}

// --------------------------------------------------------------------- json

std::string to_json(const MapWithHoles& m) {
  nlohmann::json j;
  j["darts"] = m.num_darts();
  j["alpha"] = m.alpha_vector();
  j["sigma"] = m.sigma_vector();
  j["root"] = m.root();
  std::vector<int> marks;
  for (const auto& h : m.holes()) marks.push_back(h.mark);
  j["holes"] = marks;
  return j.dump();
}

MapWithHoles from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::BadCode, std::string("malformed json: ") + e.what());
  }
  try {
    return MapWithHoles::from_raw(j.at("alpha").get<std::vector<int>>(),
                                  j.at("sigma").get<std::vector<int>>(),
                                  j.value("root", 0),
                                  j.value("holes", std::vector<int>{}));
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::BadCode, std::string("bad raw map: ") + e.what());
  }
}

}  // namespace qm
