#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qmaps/error.hpp"

namespace qm {

namespace detail {
struct MapAccess;
}

enum class FaceKind : std::uint8_t { Root, Internal, Hole };

struct HoleRecord {
  int face;
  int mark;  // marked dart, lies on `face`
};

// Rooted planar map with an ordered list of holes.
//
// Darts 0..n-1.  alpha pairs the two darts of an edge, phi walks a face
// (phi(d) starts where d ends) and the vertex rotation is
// sigma = phi o alpha.  Every dart lies on exactly one face; the face of the
// root dart is the root face.  The default-constructed value (no darts) is
// the cemetery.
class MapWithHoles {
 public:
  MapWithHoles() = default;

  // Root face and one hole, both of degree 2l, sharing all their edges.
  static MapWithHoles initial(int l);

  // Raw form: alpha and sigma on 0..n-1, a root dart, and one marked dart per
  // hole (in hole order).  Throws InvalidPermutation / BadHole on malformed
  // input; planarity is checked by validate_structure.
  static MapWithHoles from_raw(const std::vector<int>& alpha,
                               const std::vector<int>& sigma, int root,
                               const std::vector<int>& hole_marks);

  bool is_cemetery() const { return alpha_.empty(); }
  int num_darts() const { return static_cast<int>(alpha_.size()); }
  int num_edges() const { return num_darts() / 2; }
  int alpha(int d) const { return alpha_[d]; }
  int phi(int d) const { return phi_[d]; }
  int phi_inv(int d) const { return phi_inv_[d]; }
  int sigma(int d) const { return phi_[alpha_[d]]; }
  int root() const { return root_; }

  int num_faces() const { return static_cast<int>(face_kind_.size()); }
  int face_of(int d) const { return face_of_[d]; }
  FaceKind face_kind(int f) const { return face_kind_[f]; }
  int face_degree(int f) const { return face_deg_[f]; }
  int face_dart(int f) const { return face_rep_[f]; }
  int root_face() const { return face_of_[root_]; }
  bool is_hole_dart(int d) const {
    return face_kind_[face_of_[d]] == FaceKind::Hole;
  }
  // Darts of face f starting at face_dart(f).
  std::vector<int> face_darts(int f) const;

  const std::vector<HoleRecord>& holes() const { return holes_; }
  int num_holes() const { return static_cast<int>(holes_.size()); }
  // Hole darts of hole i, starting at its mark and following phi.
  std::vector<int> hole_walk(int i) const;
  // Index in holes() of the hole containing dart d, or -1.
  int hole_index_of(int d) const;
  std::vector<int> active_boundary() const;

  int semi_perimeter() const { return is_cemetery() ? 0 : face_deg_[root_face()] / 2; }
  int num_internal_faces() const;
  int num_vertices() const;
  std::vector<int> internal_faces() const;

  std::vector<int> sigma_vector() const;
  const std::vector<int>& alpha_vector() const { return alpha_; }

 private:
  friend struct detail::MapAccess;

  std::vector<int> alpha_, phi_, phi_inv_, face_of_;
  std::vector<FaceKind> face_kind_;
  std::vector<int> face_rep_, face_deg_;
  std::vector<HoleRecord> holes_;
  int root_ = -1;
};

struct Status {
  bool ok = true;
  Errc code = Errc::InvalidPermutation;
  int detail = -1;
  std::string message;
  explicit operator bool() const { return ok; }
  static Status fail(Errc c, std::string msg, int detail = -1) {
    return Status{false, c, detail, std::move(msg)};
  }
};

// Permutations, connectivity, Euler characteristic, hole sanity.
Status validate_structure(const MapWithHoles& m);
// validate_structure plus: internal faces of degree 4, even root degree.
Status validate_quadrangulation(const MapWithHoles& m);

// q1 with each hole replaced by the corresponding fill.
MapWithHoles glue(const MapWithHoles& q1, const std::vector<MapWithHoles>& fills);

// Embedding of q1 into q2: where each non-hole dart of q1 lands, and the fill
// of each hole together with where each fill dart lands in q2 (-1 for the
// fill's root-face darts, which do not exist in q2).
struct Embedding {
  std::vector<int> image;  // q1 dart -> q2 dart, -1 for hole darts
  std::vector<MapWithHoles> fills;
  std::vector<std::vector<int>> fill_image;
};

std::optional<Embedding> embed(const MapWithHoles& q1, const MapWithHoles& q2);
std::optional<std::vector<MapWithHoles>> is_submap(const MapWithHoles& q1,
                                                   const MapWithHoles& q2);
// q1 ⊂ q2 and q2 ⊂ q1: same explored region, possibly different marks.
bool same_region(const MapWithHoles& a, const MapWithHoles& b);

MapWithHoles reroot(const MapWithHoles& m, int dart);

// Byte string; equal iff the maps are isomorphic preserving root, face kinds,
// hole order and marks.
std::string canonical_code(const MapWithHoles& m);
std::string to_hex(const std::string& bytes);
// Darts in canonical (breadth-first from the root) order.
std::vector<int> canonical_dart_order(const MapWithHoles& m);
// Internal face ids in canonical order; decorations are indexed this way.
std::vector<int> canonical_internal_faces(const MapWithHoles& m);

std::string to_json(const MapWithHoles& m);
MapWithHoles from_json(const std::string& text);

}  // namespace qm
