#include "qmaps/census.hpp"

#include <memory>
#include <mutex>

#include "qmaps/peeling.hpp"

namespace qm {

CensusTable::CensusTable(int lmax, int fmax) : lmax_(lmax), fmax_(fmax), lint_(lmax + fmax) {
  if (lmax < 0 || fmax < 0) throw Error(Errc::OutOfBounds, "negative census bounds");
  n_.resize(fmax + 1);
  for (int f = 0; f <= fmax; ++f) n_[f].assign(lint_ - f + 1, 0);
  n_[0][0] = 1;
  for (int f = 0; f <= fmax; ++f) {
    for (int l = 1; l <= lint_ - f; ++l) {
      mpz_class v = 0;
      if (f > 0) v = n_[f - 1][l + 1];
      for (int l1 = 0; l1 <= l - 1; ++l1) {
        const int l2 = l - 1 - l1;
        for (int f1 = 0; f1 <= f; ++f1) {
          const int f2 = f - f1;
          // l1 + f1 and l2 + f2 stay inside the triangle since l1, l2 < l.
          v += n_[f1][l1] * n_[f2][l2];
        }
      }
      n_[f][l] = v;
    }
  }
}

const mpz_class& CensusTable::count(int l, int f) const {
  if (!covers(l, f))
    throw Error(Errc::OutOfBounds,
                "N(" + std::to_string(l) + "," + std::to_string(f) + ") outside census table");
  return n_[f][l];
}

const CensusTable& census(int lmax, int fmax) {
  static std::mutex mu;
  static std::unique_ptr<CensusTable> table;
  std::lock_guard<std::mutex> lock(mu);
  if (!table || table->lmax() < lmax || table->fmax() < fmax) {
    const int L = table ? std::max(table->lmax(), lmax) : lmax;
    const int F = table ? std::max(table->fmax(), fmax) : fmax;
    // Old tables are kept alive: callers may still hold references.
    static std::vector<std::unique_ptr<CensusTable>> retired;
    if (table) retired.push_back(std::move(table));
    table = std::make_unique<CensusTable>(L, F);
  }
  return *table;
}

mpz_class catalan(int n) {
  mpz_class c;
  mpz_bin_uiui(c.get_mpz_t(), 2 * n, n);
  return c / (n + 1);
}

mpq_class growth_ratio(int l, int f) {
  const auto& t = census(l, f + 1);
  const mpz_class& a = t.count(l, f);
  if (a == 0) throw Error(Errc::DivisionByZero, "N(l,f) = 0");
  mpq_class r(t.count(l, f + 1), a);
  r.canonicalize();
  return r;
}

namespace {

// Depth-first walk of the canonical peeling tree in codec order.
struct Generator {
  int faces;
  std::vector<PeelEvent> events;
  std::vector<std::vector<PeelEvent>> out;

  void run(std::vector<int>& holes, int used) {
    if (holes.empty()) {
      if (used == faces) out.push_back(events);
      return;
    }
    const int k = holes.front();
    if (used < faces) {
      holes.front() = k + 1;
      events.push_back(PeelEvent::t1());
      run(holes, used + 1);
      events.pop_back();
      holes.front() = k;
    }
    for (int l1 = 0; l1 <= k - 1; ++l1) {
      const int l2 = k - 1 - l1;
      std::vector<int> next;
      if (l1 > 0) next.push_back(l1);
      if (l2 > 0) next.push_back(l2);
      next.insert(next.end(), holes.begin() + 1, holes.end());
      events.push_back(PeelEvent::t2(l1, l2));
      run(next, used);
      events.pop_back();
    }
  }
};

std::vector<std::vector<PeelEvent>> generate_events(int l, int f, int bound) {
  if (l < 1) throw Error(Errc::PreconditionViolation, "generate_all needs l >= 1");
  if (f < 0 || l + 2 * f > bound)
    throw Error(Errc::BudgetExceeded, "l + 2f exceeds the generation bound " + std::to_string(bound));
  Generator g{f, {}, {}};
  std::vector<int> holes{l};
  g.run(holes, 0);
  return std::move(g.out);
}

}  // namespace

std::vector<MapWithHoles> generate_all(int l, int f, int bound) {
  std::vector<MapWithHoles> maps;
  for (const auto& ev : generate_events(l, f, bound)) maps.push_back(replay(l, ev));
  return maps;
}

std::vector<std::string> generate_codes(int l, int f, int bound) {
  std::vector<std::string> codes;
  for (const auto& ev : generate_events(l, f, bound)) codes.push_back(format_code(ev));
  return codes;
}

}  // namespace qm
