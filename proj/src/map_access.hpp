#pragma once

// Internal surgery on MapWithHoles, shared by the map and peeling sources.

#include <vector>

#include "qmaps/map.hpp"

namespace qm::detail {

struct MapAccess {
  static std::vector<int>& alpha(MapWithHoles& m) { return m.alpha_; }
  static std::vector<int>& phi(MapWithHoles& m) { return m.phi_; }
  static std::vector<int>& phi_inv(MapWithHoles& m) { return m.phi_inv_; }
  static std::vector<int>& face_of(MapWithHoles& m) { return m.face_of_; }
  static std::vector<FaceKind>& face_kind(MapWithHoles& m) { return m.face_kind_; }
  static std::vector<int>& face_rep(MapWithHoles& m) { return m.face_rep_; }
  static std::vector<int>& face_deg(MapWithHoles& m) { return m.face_deg_; }
  static std::vector<HoleRecord>& holes(MapWithHoles& m) { return m.holes_; }
  static int& root(MapWithHoles& m) { return m.root_; }

  // Builds a map from alpha/phi; faces are numbered by their smallest dart.
  // Hole faces are the faces of hole_marks, in that order.
  static MapWithHoles assemble(std::vector<int> alpha, std::vector<int> phi,
                               int root, const std::vector<int>& hole_marks);
};

}  // namespace qm::detail
