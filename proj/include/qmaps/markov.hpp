#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "qmaps/boltzmann.hpp"
#include "qmaps/map.hpp"
#include "qmaps/stats.hpp"

namespace qm {

struct SlotTest {
  int slot = 0;
  long n = 0;
  stats::TestResult r;
};

struct PairTest {
  int a = 0, b = 0;
  long n = 0;
  bool skipped = false;  // every group collapsed below 2x2
  stats::TestResult r;
};

struct MarkovTestReport {
  std::string reference;
  std::string truncation;
  long samples = 0;
  long hits = 0;
  long flagged = 0;
  std::vector<SlotTest> holes;
  std::vector<PairTest> independence;

  // Slots whose cells all pooled into one (dof 0) ran no test and are left out.
  std::vector<double> hole_p_values() const;
  std::string to_text() const;
};

// Tallies fills by hole slot and compares them with independent Boltzmann
// laws at each hole's semi-perimeter.
class FillAccumulator {
 public:
  explicit FillAccumulator(const Boltzmann& B) : B_(B) {}
  void add(const std::vector<MapWithHoles>& fills);
  long size() const { return n_; }
  MarkovTestReport finish(bool independence) const;

 private:
  struct ClassInfo {
    int k, f;
  };
  int intern(int k, int f, const std::string& key);
  const Boltzmann& B_;
  long n_ = 0;
  std::map<std::string, int> ids_;
  std::vector<ClassInfo> info_;
  std::vector<std::vector<int>> rows_;  // per sample: class id per slot
};

MarkovTestReport weak_markov_test(int l, const Boltzmann& B, const MapWithHoles& subq, long n,
                                  Rng& rng);

enum class Decision { Contained, NotContained };

struct StoppingMapRule {
  std::string name;
  std::function<MapWithHoles(const MapWithHoles&)> extract;
  std::function<bool(const MapWithHoles&)> flag;  // optional, counted in reports
};

StoppingMapRule prefix_rule(int steps);
StoppingMapRule first_type2_rule();
StoppingMapRule stopping_map_Q_rule();

MarkovTestReport strong_markov_test(int l, const Boltzmann& B, const StoppingMapRule& rule,
                                    long n, Rng& rng);

// Fills drawn straight from the reference law: the harness under its null.
MarkovTestReport null_fill_test(const Boltzmann& B, const std::vector<int>& perimeters, long n,
                                Rng& rng);

Real rerooting_invariance_check(int l, int fmax, const Boltzmann& B);

// max over Q^{l, f <= fmax} of |prob_exact - product of canonical step
// probabilities| / prob_exact.
Real decomposition_check(int l, int fmax, const Boltzmann& B);

// Dual walk through faces.  The right walk leaves the root face through the
// root edge and, on arriving at a face through dart a, leaves through the
// first unused edge among phi(a), phi^2(a), phi^3(a).  The left walk leaves
// through the other root-face edge and uses phi^-1.  Walks stop on reaching
// the root face (completed) or a hole.
struct DualWalk {
  std::vector<int> faces;  // x_0 = root face, x_1, ...
  std::vector<int> exits;  // exits[i]: dart of faces[i] crossed to reach faces[i+1]
  bool completed = false;
};
DualWalk dual_walk(const MapWithHoles& m, bool right);

struct RightProcess {
  DualWalk walk;
  int tau_E = 0;
  int tau_I = -1;  // -1: no self-intersection
  int tau_R = -1;
};
RightProcess right_process(const MapWithHoles& q);

// Explored map of the cycle x[0, tau_I] + x[tau_R, tau_E] (whole loop without
// self-intersection; full_cycle reports that case).
MapWithHoles stopping_map_Q(const MapWithHoles& q, bool* full_cycle = nullptr);
Decision containment_decider_Q(const MapWithHoles& p);

struct BranchLeaf {
  std::string name;
  std::vector<std::string> steps;
  MapWithHoles discovered;
  Real probability = 0;
  long completions = 0;  // hole fillings checked
  long equal_to_Q = 0;   // completions whose stopping map is the discovered map
  long Q_inside = 0;     // completions whose stopping map lies inside it
};
std::vector<BranchLeaf> counterexample_branches(const Boltzmann& B, int fill_faces = 1);

}  // namespace qm
