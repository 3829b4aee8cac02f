#pragma once

#include <gmpxx.h>

#include <vector>

#include "qmaps/map.hpp"

namespace qm {

// Exact counts N(l, f) of rooted quadrangulations with semi-perimeter l and f
// internal faces.  Built for 0 <= l <= lmax, 0 <= f <= fmax; entries with
// l + f <= lmax + fmax are filled internally since Type1 raises l.
class CensusTable {
 public:
  CensusTable(int lmax, int fmax);

  int lmax() const { return lmax_; }
  int fmax() const { return fmax_; }
  // Largest l usable at face count f (the table is triangular).
  int lmax_at(int f) const { return lint_ - f; }
  bool covers(int l, int f) const { return l >= 0 && f >= 0 && f <= fmax_ && l <= lint_ - f; }

  const mpz_class& count(int l, int f) const;

 private:
  int lmax_, fmax_, lint_;
  std::vector<std::vector<mpz_class>> n_;  // n_[f][l]
};

// Shared table covering at least (lmax, fmax); grows on demand.
const CensusTable& census(int lmax, int fmax);

mpz_class catalan(int n);
mpq_class growth_ratio(int l, int f);
std::vector<MapWithHoles> generate_all(int l, int f, int bound = 10);
std::vector<std::string> generate_codes(int l, int f, int bound = 10);

}  // namespace qm
