#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <locale>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "qmaps/boltzmann.hpp"
#include "qmaps/census.hpp"
#include "qmaps/decorated.hpp"
#include "qmaps/error.hpp"
#include "qmaps/markov.hpp"
#include "qmaps/metric.hpp"
#include "qmaps/peeling.hpp"
#include "qmaps/stats.hpp"
#include "qmaps/version.hpp"

using namespace qm;
using json = nlohmann::ordered_json;

namespace {

constexpr int kUsage = 1;
constexpr int kRejected = 2;

std::string fmt(double x) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}
std::string fmt(long double x) { return fmt(static_cast<double>(x)); }
std::string fmt(const std::string& s) { return s; }
std::string fmt(bool b) { return b ? "true" : "false"; }
template <class T>
std::string fmt(const std::vector<T>& v) {
  std::string s;
  for (size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + fmt(v[i]);
  return s;
}
template <class T>
  requires std::is_integral_v<T>
std::string fmt(T x) {
  return std::to_string(x);
}

// Registered options of one subcommand, in declaration order, so the report
// header can list every effective value.
struct Config {
  struct Item {
    CLI::App* owner;
    std::string key;
    std::function<std::string()> value;
  };
  std::string command;
  CLI::App* active = nullptr;
  std::vector<Item> items;

  template <class T>
  CLI::Option* add(CLI::App* app, const std::string& flag, T& var, const std::string& help) {
    std::string key = flag.substr(flag.rfind('-') == std::string::npos ? 0 : flag.find_first_not_of('-'));
    items.push_back({app, key, [&var] { return fmt(var); }});
    return app->add_option(flag, var, help)->capture_default_str();
  }

  std::string header() const {
    std::string s = std::string("# ") + kVersion + "\n# command " + command + "\n";
    for (const auto& it : items)
      if (it.owner == active || it.owner->get_parent() == nullptr)
        s += "# " + it.key + " " + it.value() + "\n";
    return s;
  }
};

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> v;
  std::string tok;
  std::istringstream is(s);
  while (std::getline(is, tok, ',')) {
    double x;
    auto r = std::from_chars(tok.data(), tok.data() + tok.size(), x);
    if (r.ec != std::errc() || r.ptr != tok.data() + tok.size())
      throw CLI::ValidationError("bad number '" + tok + "' in list '" + s + "'");
    v.push_back(x);
  }
  if (v.empty()) throw CLI::ValidationError("empty list");
  return v;
}

// ising | gaussian | discrete:v1,v2,...:w1,w2,...
SpinMeasure parse_mu(const std::string& s) {
  if (s == "ising") return SpinMeasure::ising();
  if (s == "gaussian") return SpinMeasure::gaussian();
  if (s.rfind("discrete:", 0) == 0) {
    auto rest = s.substr(9);
    auto c = rest.find(':');
    if (c == std::string::npos)
      throw CLI::ValidationError("--mu discrete needs 'discrete:values:weights'");
    auto vs = parse_list(rest.substr(0, c)), ws = parse_list(rest.substr(c + 1));
    return SpinMeasure::discrete({vs.begin(), vs.end()}, {ws.begin(), ws.end()});
  }
  throw CLI::ValidationError("--mu must be ising, gaussian or discrete:values:weights");
}

int semi_perimeter_of(const std::vector<double>& b) {
  if (b.size() % 2 || b.empty())
    throw CLI::ValidationError("--boundary needs an even, nonzero number of spins (2l)");
  return static_cast<int>(b.size() / 2);
}

// Runs f(i) for i < n on up to `threads` workers; results are stored by index
// so the output does not depend on the schedule.
template <class R>
std::vector<R> run_seeds(int n, int threads, const std::function<R(int)>& f) {
  std::vector<R> out(n);
  std::vector<std::exception_ptr> errs(n);
  std::atomic<int> next{0};
  auto work = [&] {
    for (int i; (i = next++) < n;) {
      try {
        out[i] = f(i);
      } catch (...) {
        errs[i] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (int t = 1; t < std::min(threads, n); ++t) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  for (auto& e : errs)
    if (e) std::rethrow_exception(e);
  return out;
}

struct Outcome {
  std::string body;
  bool rejected = false;
};

// Summary over a seed sweep: every p above alpha and the pooled p-values
// uniform by KS.
json sweep_summary(const std::vector<double>& ps, double alpha, bool& rejected) {
  json j;
  double mn = 1;
  long below = 0;
  for (double p : ps) {
    mn = std::min(mn, p);
    below += p <= alpha;
  }
  j["p_values"] = ps.size();
  j["min_p"] = mn;
  j["below_alpha"] = below;
  if (ps.size() >= 2) {
    double ks = stats::ks_uniform(ps).p_value;
    j["ks_uniform_p"] = ks;
    rejected |= ks <= alpha;
  }
  rejected |= below > 0;
  j["pass"] = !rejected;
  return j;
}

}  // namespace

int main(int argc, char** argv) {
  std::locale::global(std::locale::classic());
  std::cout.imbue(std::locale::classic());

  CLI::App app{"Peeling, Boltzmann sampling and Markov property checks for quadrangulations"};
  app.require_subcommand(1);
  app.fallthrough();  // global options may follow the subcommand
  app.set_version_flag("--version", std::string(kVersion));

  std::string out;
  int threads = 1;
  Config cfg;
  app.add_option("--out", out,
                 "Report file (default stdout); relative paths go under $QMAPS_OUT_DIR if set");
  cfg.add(&app, "--threads", threads, "Worker threads for seed sweeps")->check(CLI::PositiveNumber);

  std::function<Outcome()> action;
  std::vector<std::pair<CLI::App*, std::function<void()>>> bind;  // sets cfg.command and action

  // Shared option values.
  int l = 1, lmax = 4, fmax = 8, f = 0, bound = 14, face_cap = 60, seeds = 1, cap = 3;
  long n = 100000, burn_in = 2000;
  double q = 1.0 / 24, dq = 1.0 / 48, mq = 0.5, alpha = 0.01, beta = 1, lambda = 1, eps = 0.05, t = 0.5;
  std::uint64_t seed = 0;
  std::string format = "csv", code, subq = "T1", rule = "first-type2", mu = "ising",
              boundary = "1,1", mboundary = "0,0.5", mmu = "gaussian", t_grid = "0.2,0.4,0.6,0.8,1,1.2,1.4,1.6,1.8,2", paths;
  int fill_faces = 3, bins = 4, thin = 4, mid_thin = 16, batches = 20, grid = 64;

  auto seed_opt = [&](CLI::App* s) {
    cfg.add(s, "--seed", seed, "RNG seed (required)")->required();
  };
  auto sweep_opts = [&](CLI::App* s) {
    cfg.add(s, "--seeds", seeds, "Independent runs at seed, seed+1, ...")->check(CLI::PositiveNumber);
    cfg.add(s, "--alpha", alpha, "Rejection threshold for p-values");
  };

  // census
  auto* c_census = app.add_subcommand("census", "Exact counts N(l, f)");
  auto* c_generate = app.add_subcommand("generate", "List the codes of every map in Q^{l,f}");
  auto* c_sample = app.add_subcommand("sample", "Boltzmann maps as codes");
  auto* c_explore = app.add_subcommand("explore", "Canonical peeling of a coded map");
  auto* c_verify = app.add_subcommand("verify", "Exact identities and Markov property tests");
  c_verify->require_subcommand(1);
  auto* v_weak = c_verify->add_subcommand("weak-markov", "Fills of a fixed submap");
  auto* v_strong = c_verify->add_subcommand("strong-markov", "Fills of a stopping map");
  auto* v_reroot = c_verify->add_subcommand("reroot", "Boltzmann law under rerooting");
  auto* v_decomp = c_verify->add_subcommand("decomposition", "Law as a product of peel steps");
  auto* v_counter = c_verify->add_subcommand("counterexample", "Branches of the right-walk stopping map");
  auto* v_decorated = c_verify->add_subcommand("decorated-markov", "Fills of a submap with spins");
  auto* c_sdec = app.add_subcommand("sample-decorated", "Spin-decorated Boltzmann maps");
  auto* c_metric = app.add_subcommand("metric", "Metric maps with Brownian decorations");
  c_metric->require_subcommand(1);
  auto* m_sample = c_metric->add_subcommand("sample", "Chain samples of the capped metric law");
  auto* m_p3 = c_metric->add_subcommand("p3", "Shape of the mid-edge survival density");
  auto* m_mid = c_metric->add_subcommand("mid-edge", "Markov property at a mid-edge tip");

  cfg.add(c_census, "--lmax", lmax, "Largest semi-perimeter")->check(CLI::NonNegativeNumber);
  cfg.add(c_census, "--fmax", fmax, "Largest face count")->check(CLI::NonNegativeNumber);
  cfg.add(c_census, "--format", format, "csv or text")->check(CLI::IsMember({"csv", "text"}));
  bind.push_back({c_census, [&] {
                    action = [&] {
                      CensusTable T(lmax, fmax);
                      Outcome o;
                      if (format == "csv") {
                        o.body = "l,f,count\n";
                        for (int ff = 0; ff <= fmax; ++ff)
                          for (int ll = 0; ll <= lmax; ++ll)
                            if (T.covers(ll, ff))
                              o.body += fmt(ll) + "," + fmt(ff) + "," + T.count(ll, ff).get_str() + "\n";
                      } else {
                        json j;
                        for (int ff = 0; ff <= fmax; ++ff)
                          for (int ll = 0; ll <= lmax; ++ll)
                            if (T.covers(ll, ff))
                              j["counts"].push_back({{"l", ll}, {"f", ff}, {"count", T.count(ll, ff).get_str()}});
                        o.body = j.dump(2) + "\n";
                      }
                      return o;
                    };
                  }});

  cfg.add(c_generate, "--l", l, "Semi-perimeter")->check(CLI::NonNegativeNumber);
  cfg.add(c_generate, "--f", f, "Internal faces")->check(CLI::NonNegativeNumber);
  cfg.add(c_generate, "--bound", bound, "Largest l + f the census table is built for");
  bind.push_back({c_generate, [&] {
                    action = [&] {
                      Outcome o;
                      o.body = "code\n";
                      for (const auto& s : generate_codes(l, f, bound)) o.body += "\"" + s + "\"\n";
                      return o;
                    };
                  }});

  cfg.add(c_sample, "--l", l, "Semi-perimeter")->check(CLI::NonNegativeNumber);
  cfg.add(c_sample, "--q", q, "Face weight, at most 1/12");
  cfg.add(c_sample, "--face-cap", face_cap, "Largest face count");
  cfg.add(c_sample, "--n", n, "Samples")->check(CLI::PositiveNumber);
  seed_opt(c_sample);
  bind.push_back({c_sample, [&] {
                    action = [&] {
                      Boltzmann B(BoltzmannParams{q, face_cap});
                      Rng rng(seed);
                      Outcome o;
                      o.body = "sample,faces,code\n";
                      for (long i = 0; i < n; ++i) {
                        auto m = B.sample(l, rng);
                        o.body += fmt(i) + "," + fmt(m.num_internal_faces()) + ",\"" + encode(m) + "\"\n";
                      }
                      return o;
                    };
                  }});

  cfg.add(c_explore, "--code", code, "Peeling code, e.g. T1,T2(0,0)")->required();
  bind.push_back({c_explore, [&] {
                    action = [&] {
                      auto m = decode(code);
                      auto ex = explore(m);
                      Outcome o;
                      o.body = "step,event,faces,holes\n";
                      for (size_t i = 0; i < ex.maps.size(); ++i) {
                        const auto& e = ex.maps[i];
                        std::string holes;
                        for (const auto& h : e.holes())
                          holes += (holes.empty() ? "" : ";") + fmt(e.face_degree(h.face) / 2);
                        o.body += fmt(i) + "," + (i < ex.events.size() ? ex.events[i].str() : "") + "," +
                                  fmt(e.num_internal_faces()) + "," + holes + "\n";
                      }
                      return o;
                    };
                  }});

  // Markov batteries share the seed sweep.
  auto markov_sweep = [&](std::function<MarkovTestReport(Rng&)> one) {
    return [&, one] {
      auto reps = run_seeds<MarkovTestReport>(seeds, threads, [&](int i) {
        Rng rng(seed + i);
        return one(rng);
      });
      json j;
      std::vector<double> ps;
      for (int i = 0; i < seeds; ++i) {
        json r = json::parse(reps[i].to_text());
        r["seed"] = seed + i;
        j["runs"].push_back(r);
        for (double p : reps[i].hole_p_values()) ps.push_back(p);
      }
      Outcome o;
      j["summary"] = sweep_summary(ps, alpha, o.rejected);
      o.body = j.dump(2) + "\n";
      return o;
    };
  };

  cfg.add(v_weak, "--l", l, "Semi-perimeter")->check(CLI::PositiveNumber);
  cfg.add(v_weak, "--q", q, "Face weight");
  cfg.add(v_weak, "--face-cap", face_cap, "Largest face count");
  cfg.add(v_weak, "--subq", subq, "Canonical code prefix giving the submap");
  cfg.add(v_weak, "--n", n, "Samples per seed")->check(CLI::PositiveNumber);
  seed_opt(v_weak);
  sweep_opts(v_weak);
  bind.push_back({v_weak, [&] {
                    action = markov_sweep([&](Rng& rng) {
                      Boltzmann B(BoltzmannParams{q, face_cap});
                      return weak_markov_test(l, B, replay(l, parse_code(subq)), n, rng);
                    });
                  }});

  cfg.add(v_strong, "--l", l, "Semi-perimeter")->check(CLI::PositiveNumber);
  cfg.add(v_strong, "--q", q, "Face weight");
  cfg.add(v_strong, "--face-cap", face_cap, "Largest face count");
  cfg.add(v_strong, "--rule", rule, "prefix:K, first-type2 or stopping-map-q");
  cfg.add(v_strong, "--n", n, "Samples per seed")->check(CLI::PositiveNumber);
  seed_opt(v_strong);
  sweep_opts(v_strong);
  bind.push_back({v_strong, [&] {
                    StoppingMapRule R;
                    if (rule == "first-type2")
                      R = first_type2_rule();
                    else if (rule == "stopping-map-q")
                      R = stopping_map_Q_rule();
                    else if (rule.rfind("prefix:", 0) == 0)
                      R = prefix_rule(std::stoi(rule.substr(7)));
                    else
                      throw CLI::ValidationError("--rule must be prefix:K, first-type2 or stopping-map-q");
                    action = markov_sweep([&, R](Rng& rng) {
                      Boltzmann B(BoltzmannParams{q, face_cap});
                      return strong_markov_test(l, B, R, n, rng);
                    });
                  }});

  auto exact_check = [&](CLI::App* s, const char* what, Real (*check)(int, int, const Boltzmann&),
                         double tol) {
    cfg.add(s, "--l", l, "Semi-perimeter")->check(CLI::PositiveNumber);
    cfg.add(s, "--fmax", fmax, "Largest face count")->check(CLI::NonNegativeNumber);
    cfg.add(s, "--q", q, "Face weight");
    bind.push_back({s, [&, what, check, tol] {
                      action = [&, what, check, tol] {
                        Boltzmann B(BoltzmannParams{q});
                        json j;
                        const Real e = check(l, fmax, B);
                        j[what] = static_cast<double>(e);
                        j["tolerance"] = tol;
                        Outcome o;
                        o.rejected = !(e <= tol);
                        j["pass"] = !o.rejected;
                        o.body = j.dump(2) + "\n";
                        return o;
                      };
                    }});
  };
  exact_check(v_reroot, "max_error", rerooting_invariance_check, 0);
  exact_check(v_decomp, "max_relative_error", decomposition_check, 1e-9);

  cfg.add(v_counter, "--q", q, "Face weight");
  cfg.add(v_counter, "--fill-faces", fill_faces, "Faces per hole filling checked");
  bind.push_back({v_counter, [&] {
                    action = [&] {
                      Boltzmann B(BoltzmannParams{q});
                      Outcome o;
                      json j;
                      for (const auto& L : counterexample_branches(B, fill_faces)) {
                        const bool ok = L.probability > 0 && L.completions > 0 && L.equal_to_Q == 0;
                        o.rejected |= !ok;
                        j["leaves"].push_back({{"name", L.name},
                                               {"steps", L.steps},
                                               {"discovered", canonical_code(L.discovered)},
                                               {"probability", static_cast<double>(L.probability)},
                                               {"completions", L.completions},
                                               {"equal_to_Q", L.equal_to_Q},
                                               {"Q_inside", L.Q_inside},
                                               {"pass", ok}});
                      }
                      j["pass"] = !o.rejected;
                      o.body = j.dump(2) + "\n";
                      return o;
                    };
                  }});

  auto decorated_opts = [&](CLI::App* s) {
    cfg.add(s, "--mu", mu, "ising, gaussian or discrete:values:weights");
    cfg.add(s, "--beta", beta, "Inverse temperature")->check(CLI::PositiveNumber);
    cfg.add(s, "--boundary", boundary, "Phantom spins b(0),...,b(2l-1)");
    cfg.add(s, "--q", dq, "Face weight of the decorated law");
    cfg.add(s, "--face-cap", face_cap, "Largest face count");
  };
  auto decorated_params = [&] {
    DecoratedParams p;
    p.base.q = dq;
    p.base.face_cap = face_cap;
    p.beta = beta;
    p.mu = parse_mu(mu);
    return p;
  };

  decorated_opts(v_decorated);
  cfg.add(v_decorated, "--subq", subq, "Canonical code prefix giving the submap");
  cfg.add(v_decorated, "--fill-faces", fill_faces, "Fills are tested given at most this many faces");
  cfg.add(v_decorated, "--bins", bins, "Quantile bins per revealed spin (Gaussian)");
  cfg.add(v_decorated, "--n", n, "Samples per seed")->check(CLI::PositiveNumber);
  seed_opt(v_decorated);
  sweep_opts(v_decorated);
  bind.push_back({v_decorated, [&] {
                    auto b = parse_list(boundary);
                    auto dp = decorated_params();
                    action = markov_sweep([&, b, dp](Rng& rng) {
                      DecoratedBoltzmann D(dp);
                      const int ll = semi_perimeter_of(b);
                      DecoratedMarkovOptions opt;
                      opt.fill_faces = fill_faces;
                      opt.bins = bins;
                      return decorated_weak_markov_test(ll, {b.begin(), b.end()}, D,
                                                        replay(ll, parse_code(subq)), n, rng, opt);
                    });
                  }});

  decorated_opts(c_sdec);
  cfg.add(c_sdec, "--n", n, "Samples")->check(CLI::PositiveNumber);
  seed_opt(c_sdec);
  bind.push_back({c_sdec, [&] {
                    auto b = parse_list(boundary);
                    auto dp = decorated_params();
                    action = [&, b, dp] {
                      DecoratedBoltzmann D(dp);
                      Rng rng(seed);
                      Outcome o;
                      o.body = "sample,faces,code,spins\n";
                      for (long i = 0; i < n; ++i) {
                        auto [m, s] = D.sample(semi_perimeter_of(b), {b.begin(), b.end()}, rng);
                        o.body += fmt(i) + "," + fmt(m.num_internal_faces()) + ",\"" + encode(m) +
                                  "\",\"" + fmt(s) + "\"\n";
                      }
                      return o;
                    };
                  }});

  auto metric_opts = [&](CLI::App* s, int& th) {
    cfg.add(s, "--boundary", mboundary, "Phantom spins b(0),...,b(2l-1)");
    cfg.add(s, "--q", mq, "Weight per internal vertex");
    cfg.add(s, "--lambda", lambda, "Length penalty")->check(CLI::PositiveNumber);
    cfg.add(s, "--mu", mmu, "gaussian, ising or discrete:values:weights");
    cfg.add(s, "--cap", cap, "Largest face count of the skeleton");
    cfg.add(s, "--burn-in", burn_in, "Chain sweeps discarded");
    cfg.add(s, "--thin", th, "Sweeps between recorded samples")->check(CLI::PositiveNumber);
    cfg.add(s, "--n", n, "Recorded samples")->check(CLI::PositiveNumber);
    seed_opt(s);
  };
  auto metric_params = [&] {
    MetricParams p;
    p.q = mq;
    p.lambda = lambda;
    p.mu = parse_mu(mmu);
    p.skeleton_cap = cap;
    p.mcmc.burn_in = burn_in;
    p.mcmc.thin = thin;
    return p;
  };

  metric_opts(m_sample, thin);
  cfg.add(m_sample, "--grid", grid, "Path points per edge")->check(CLI::PositiveNumber);
  cfg.add(m_sample, "--paths", paths, "Also write bridge paths of every sample to this CSV");
  bind.push_back({m_sample, [&] {
                    auto b = parse_list(mboundary);
                    auto mp = metric_params();
                    action = [&, b, mp] {
                      Rng rng(seed);
                      Outcome o;
                      std::string pth = "sample,edge,t,x\n";
                      o.body = "sample,skeleton,edge,u,v,length,value_u,value_v\n";
                      long i = 0;
                      auto diag = mcmc_sample_metric(semi_perimeter_of(b), b, mp, n, rng, [&](const MetricChain& c) {
                        auto m = decorate(c.skeleton(), c.state(), b, rng, paths.empty() ? 1 : grid);
                        std::istringstream rows(metric_csv(m));
                        std::string line;
                        std::getline(rows, line);
                        std::getline(rows, line);
                        while (std::getline(rows, line))
                          o.body += fmt(i) + ",\"" + m.skel.code + "\"," + line + "\n";
                        if (!paths.empty()) {
                          std::istringstream pr(path_csv(m, grid));
                          std::getline(pr, line);
                          std::getline(pr, line);
                          while (std::getline(pr, line)) pth += fmt(i) + "," + line + "\n";
                        }
                        ++i;
                      });
                      if (!paths.empty()) std::ofstream(paths) << pth;
                      std::istringstream d(diag.to_text());
                      for (std::string line; std::getline(d, line);) o.body += "# " + line + "\n";
                      return o;
                    };
                  }});

  metric_opts(m_p3, thin);
  cfg.add(m_p3, "--t-grid", t_grid, "Times at which p3 is estimated");
  cfg.add(m_p3, "--eps", eps, "Half-width of the window around b(0)");
  cfg.add(m_p3, "--batches", batches, "Batch means for standard errors");
  bind.push_back({m_p3, [&] {
                    auto b = parse_list(mboundary);
                    auto mp = metric_params();
                    mp.mu = SpinMeasure::gaussian();
                    action = [&, b, mp] {
                      P3Options opt;
                      opt.t_grid = parse_list(t_grid);
                      opt.eps = eps;
                      opt.batches = batches;
                      Rng rng(seed);
                      auto r = p3_shape_test(semi_perimeter_of(b), b, mp, n, rng, opt);
                      Outcome o;
                      o.rejected = !(r.fit.r2 >= 0.98 && r.fit.slope < 0 && std::abs(r.z_intercept) < 3);
                      o.body = r.to_text() + (o.rejected ? "FAIL" : "PASS") + "\n";
                      return o;
                    };
                  }});

  metric_opts(m_mid, mid_thin);
  cfg.add(m_mid, "--t", t, "Peel length")->check(CLI::PositiveNumber);
  cfg.add(m_mid, "--bins", bins, "Tip-value quantile bins")->check(CLI::PositiveNumber);
  sweep_opts(m_mid);
  bind.push_back({m_mid, [&] {
                    auto b = parse_list(mboundary);
                    auto mp = metric_params();
                    mp.mcmc.thin = mid_thin;
                    action = [&, b, mp] {
                      MidEdgeOptions opt;
                      opt.bins = bins;
                      opt.thin = mid_thin;
                      auto reps = run_seeds<MidEdgeReport>(seeds, threads, [&](int i) {
                        Rng rng(seed + i);
                        return mid_edge_markov_test(semi_perimeter_of(b), b, mp, t, n, rng, opt);
                      });
                      Outcome o;
                      std::vector<double> ps;
                      for (int i = 0; i < seeds; ++i) {
                        o.body += "## seed " + fmt(seed + i) + "\n" + reps[i].to_text();
                        for (double p : reps[i].p_values()) ps.push_back(p);
                      }
                      o.body += sweep_summary(ps, alpha, o.rejected).dump(2) + "\n";
                      return o;
                    };
                  }});

  try {
    app.parse(argc, argv);
    for (auto& [sub, setup] : bind)
      if (sub->parsed()) {
        cfg.active = sub;
        cfg.command = sub->get_parent() == &app ? sub->get_name()
                                                : sub->get_parent()->get_name() + " " + sub->get_name();
        setup();
      }
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kUsage;
  }

  try {
    Outcome o = action();
    std::string report = cfg.header() + o.body;
    if (out.empty()) {
      std::cout << report;
    } else {
      std::filesystem::path p(out);
      if (const char* dir = std::getenv("QMAPS_OUT_DIR"); dir && p.is_relative()) p = std::filesystem::path(dir) / p;
      std::ofstream os(p, std::ios::binary);
      if (!os) {
        std::cerr << "error: cannot write " << p << "\n";
        return kUsage;
      }
      os << report;
    }
    if (o.rejected) std::cerr << "hypothesis rejected (see report)\n";
    return o.rejected ? kRejected : 0;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const CLI::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
}
