#pragma once

#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "qmaps/map.hpp"

namespace qm {

struct PeelEvent {
  enum Kind : std::uint8_t { Type1, Type2 };
  Kind kind = Type1;
  int l1 = 0, l2 = 0;

  static PeelEvent t1() { return {Type1, 0, 0}; }
  static PeelEvent t2(int l1, int l2) { return {Type2, l1, l2}; }
  bool operator==(const PeelEvent& o) const {
    return kind == o.kind && (kind == Type1 || (l1 == o.l1 && l2 == o.l2));
  }
  bool operator!=(const PeelEvent& o) const { return !(*this == o); }
  std::string str() const;
};

PeelEvent parse_event(std::string_view s);
std::string format_code(const std::vector<PeelEvent>& events);
std::vector<PeelEvent> parse_code(std::string_view code);
// Semi-perimeter of the map a complete code describes (#Type2 - #Type1).
int code_semi_perimeter(const std::vector<PeelEvent>& events);

// Type1 glues a new quadrilateral on `dart`; Type2(l1,l2) identifies `dart`
// with the hole dart 2*l1+1 steps further along the hole.  The part of the
// hole following `dart` (semi-perimeter l1) comes first in the hole list.
MapWithHoles peel(const MapWithHoles& m, int dart, PeelEvent ev);

// Event revealed when peeling `dart` of e inside q (e ⊂ q).
PeelEvent peel_type_of(const MapWithHoles& e, int dart, const MapWithHoles& q);

using PeelingAlgorithm = std::function<int(const MapWithHoles&)>;
// Marked dart of the first hole.
int canonical_algorithm(const MapWithHoles& m);

using StoppingRule =
    std::function<bool(const MapWithHoles& explored, const std::vector<PeelEvent>& events)>;

struct Exploration {
  int l = 0;
  std::vector<PeelEvent> events;
  std::vector<MapWithHoles> maps;  // e_0 .. e_n
};

// Empty algorithm means canonical.  The stopping rule is consulted before
// every step (including step 0).
Exploration explore(const MapWithHoles& q, const PeelingAlgorithm& alg = {},
                    const StoppingRule& stop = {});
// Events of the canonical exploration only; no intermediate maps.
std::vector<PeelEvent> canonical_events(const MapWithHoles& q);
std::string encode(const MapWithHoles& q);

// Canonical replay from the initial hole of semi-perimeter l.  A prefix
// yields a map with holes.
MapWithHoles replay(int l, const std::vector<PeelEvent>& events);
MapWithHoles decode(std::string_view code);

// Incremental peeling of a known hole-free map q.  Keeps the explored map and
// the correspondence between its darts and the darts of q.
class Explorer {
 public:
  explicit Explorer(const MapWithHoles& q);

  const MapWithHoles& explored() const { return e_; }
  const MapWithHoles& target() const { return q_; }
  bool done() const { return e_.num_holes() == 0; }
  const std::vector<PeelEvent>& events() const { return events_; }

  // Event that peeling hole dart h of the explored map would reveal.
  PeelEvent event_at(int h) const;
  PeelEvent step(int h);
  PeelEvent step_canonical() { return step(e_.holes()[0].mark); }
  // Peel the q-edge containing q dart x from its revealed side.  Returns
  // false when the edge is already fully revealed or not yet reachable.
  bool peel_edge(int x);

  int image(int d) const { return img_[d]; }      // explored -> q, -1 on holes
  int preimage(int x) const { return pre_[x]; }   // q -> explored, -1 if hidden

 private:
  MapWithHoles q_;
  MapWithHoles e_;
  std::vector<int> img_, pre_;
  std::vector<PeelEvent> events_;
};

}  // namespace qm
