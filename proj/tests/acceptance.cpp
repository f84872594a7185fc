// Acceptance checks. Prints one PASS/FAIL line per criterion; detail lines
// are indented. Exit status is nonzero if any selected criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "stts/harness.hpp"
#include "stts/stats.hpp"

using namespace stts;
using nlohmann::json;

namespace {

std::string g_data = "data";

struct Check {
  bool ok = true;

  void expect(bool cond, const std::string& what) {
    std::cout << "  " << (cond ? "ok   " : "FAIL ") << what << "\n";
    ok = ok && cond;
  }
};

std::string fmt(double x, int digits = 6) {
  std::ostringstream s;
  s << std::setprecision(digits) << x;
  return s.str();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// P(X <= k) for X ~ Binomial(n, q).
double binomial_cdf(Index k, Index n, double q) {
  if (k >= n) return 1.0;
  if (k < 0) return 0.0;
  return regularized_incomplete_beta(double(n - k), double(k + 1), 1.0 - q);
}

// The observed success count is consistent with a true rate of at least
// `target`: a one-sided test of rate >= target does not reject at 1%.
bool binomial_at_least(double rate, Index n, double target) {
  const auto k = static_cast<Index>(std::llround(rate * double(n)));
  return binomial_cdf(k, n, target) > 0.01;
}

std::vector<double> replication_accuracy(const std::vector<RunResult>& runs) {
  std::vector<double> acc;
  for (const auto& r : runs) acc.push_back(double(r.num_correct()) / double(r.tasks.size()));
  return acc;
}

// Mixture posterior against brute-force Bayes on a grid.
bool check_posterior() {
  Check c;
  const auto t0 = std::chrono::steady_clock::now();
  MixturePriorParams conj;
  VectorXd w = VectorXd::Zero(2);
  w(0) = 1.0;
  MixturePosteriord one = build_mixture_prior(w, conj, 1.0);
  one.update(1, 2.0);
  const auto [m, v] = one.moments(1);
  c.expect(std::abs(m - 1.0 / 3.0) < 1e-12 && std::abs(v - 1.0 / 6.0) < 1e-12,
           "conjugate example mean " + fmt(m, 12) + " variance " + fmt(v, 12));

  RngStream rng(2024);
  const double h = 0.004;
  std::vector<double> grid;
  for (double x = -9.0; x <= 11.0; x += h) grid.push_back(x);
  auto npdf = [](double x, double mean, double var) {
    return std::exp(-0.5 * (x - mean) * (x - mean) / var) / std::sqrt(2.0 * M_PI * var);
  };
  double worst = 0.0;
  for (int inst = 0; inst < 10; ++inst) {
    MixturePriorParams p;
    p.mu = rng.normal(0.0, 0.5);
    p.gap = 0.5 + 2.0 * rng.uniform();
    p.sigma0 = 0.4 + rng.uniform();
    VectorXd wt(3);
    for (Index i = 0; i < 3; ++i) wt(i) = 0.2 + rng.uniform();
    wt /= wt.sum();
    MixturePosteriord post = build_mixture_prior(wt, p, 1.0);
    std::vector<std::pair<Index, double>> obs;
    const int n = inst % 6;
    for (int t = 0; t < n; ++t) {
      const Index arm = rng.uniform_index(3);
      const double r = rng.normal(arm == 1 ? p.gap : 0.0, 1.0);
      obs.emplace_back(arm, r);
      post.update(arm, r);
    }
    // grid densities per (component, arm), then evidence-weighted marginals
    const double s2 = p.sigma0 * p.sigma0;
    std::vector<double> mass(3, 0.0);
    std::vector<std::vector<std::vector<double>>> dens(3, std::vector<std::vector<double>>(3));
    for (Index k = 0; k < 3; ++k) {
      double ev = wt(k);
      for (Index i = 0; i < 3; ++i) {
        auto& d = dens[k][i];
        d.resize(grid.size());
        double z = 0.0;
        for (std::size_t g = 0; g < grid.size(); ++g) {
          double like = npdf(grid[g], p.mu + (i == k ? p.gap : 0.0), s2);
          for (const auto& [a, r] : obs) {
            if (a == i) like *= npdf(r, grid[g], 1.0);
          }
          d[g] = like;
          z += like * h;
        }
        for (auto& x : d) x /= z;
        ev *= z;
      }
      mass[k] = ev;
    }
    const double total = mass[0] + mass[1] + mass[2];
    for (Index i = 0; i < 3; ++i) {
      double tv = 0.0;
      for (std::size_t g = 0; g < grid.size(); ++g) {
        double oracle = 0.0;
        for (Index k = 0; k < 3; ++k) oracle += mass[k] / total * dens[k][i][g];
        tv += std::abs(oracle - post.marginal_density(i, grid[g])) * h;
      }
      worst = std::max(worst, 0.5 * tv);
    }
  }
  c.expect(worst < 1e-3, "largest total variation " + fmt(worst, 3));
  const double secs = seconds_since(t0);
  c.expect(secs < 1.0, "runtime " + fmt(secs, 3) + " s");
  return c.ok;
}

bool check_stopping() {
  Check c;
  c.expect(bonferroni(0.1, 20) == 0.1 / 20.0 && std::abs(bonferroni(0.1, 20) - 0.005) < 1e-18,
           "bonferroni(0.1, 20) = " + fmt(bonferroni(0.1, 20), 17));
  StoppingConfig cfg;
  cfg.delta = 0.1;
  cfg.M = 20;
  const double g10 = moment_matched_threshold(10, cfg);
  c.expect(std::abs(g10 - 3.5021) <= 1e-3, "gamma_10 = " + fmt(g10, 8));
  GLRInputs<double> in;
  in.pulls = Vector<Index>::Ones(2);
  in.means = Eigen::Vector2d(2.0, 0.0);
  in.noise_var = 1.0;
  const double z = chernoff_glr(in);
  c.expect(std::abs(z - 1.0) <= 1e-9, "two-arm GLR Z = " + fmt(z, 15));
  return c.ok;
}

bool check_fixed_confidence() {
  Check c;
  const auto t0 = std::chrono::steady_clock::now();
  ExperimentConfig base;
  base.J = 10;
  base.M = 20;
  base.B = 200;
  base.stopping.delta = 0.1;
  base.prior.mu = 0.0;
  base.prior.gap = 2.0;
  base.sigma0 = std::sqrt(0.2);
  std::vector<json> ps;
  for (int k = 1; k <= 10; ++k) ps.push_back(json(k / 10.0));
  const std::vector<Algorithm> algs{Algorithm::kSTTS, Algorithm::kVTTS, Algorithm::kRandom,
                                    Algorithm::kBR};
  const auto rows = sweep(to_json(base), "p", ps, algs);
  std::map<Algorithm, std::vector<double>> steps;
  std::vector<double> pgrid;
  for (const auto& r : rows) {
    const std::string tag = to_string(r.cfg.algorithm) + " p=" + r.value;
    std::cout << "  " << tag << " steps " << fmt(r.metrics.mean_total_steps) << " avg "
              << fmt(r.metrics.avg_accuracy) << " 0-1 " << fmt(r.metrics.zero_one_accuracy)
              << "\n";
    c.expect(binomial_at_least(r.metrics.avg_accuracy, r.cfg.B * r.cfg.M, 0.9) &&
                 binomial_at_least(r.metrics.zero_one_accuracy, r.cfg.B, 0.9),
             tag + " accuracies consistent with >= 0.9");
    steps[r.cfg.algorithm].push_back(r.metrics.mean_total_steps);
    if (r.cfg.algorithm == Algorithm::kSTTS) pgrid.push_back(r.cfg.p);
  }
  const double rho = spearman(pgrid, steps[Algorithm::kSTTS]);
  c.expect(rho < -0.8, "spearman(p, STTS steps) = " + fmt(rho, 4));
  const double s = steps[Algorithm::kSTTS][0], v = steps[Algorithm::kVTTS][0];
  c.expect(std::abs(s - v) <= 0.1 * v, "p=0.1 STTS " + fmt(s) + " vs VTTS " + fmt(v));
  std::cout << "  runtime " << fmt(seconds_since(t0), 4) << " s\n";
  return c.ok;
}

bool check_fixed_budget() {
  Check c;
  const auto t0 = std::chrono::steady_clock::now();
  for (double p : {0.8, 1.0}) {
    for (Index t_max = 5, g = 0; t_max <= 100; t_max += 5, ++g) {
      std::map<Algorithm, std::vector<double>> acc;
      for (Algorithm alg : {Algorithm::kSTTS, Algorithm::kSTTSOracle, Algorithm::kVTTS}) {
        if (alg == Algorithm::kSTTSOracle && !(p == 1.0 && t_max == 100)) continue;
        ExperimentConfig cfg;
        cfg.algorithm = alg;
        cfg.p = p;
        cfg.B = 200;
        cfg.stopping.mode = StopMode::kFixedBudget;
        cfg.stopping.t_max = t_max;
        cfg.master_seed = 1 + static_cast<std::uint64_t>(g);
        acc[alg] = replication_accuracy(run_experiment(cfg).runs);
      }
      const auto& s = acc[Algorithm::kSTTS];
      const auto& v = acc[Algorithm::kVTTS];
      const double se = std::sqrt(sample_variance(s) / double(s.size()) +
                                  sample_variance(v) / double(v.size()));
      const std::string tag = "p=" + fmt(p, 2) + " t_max=" + std::to_string(t_max);
      c.expect(mean(s) >= mean(v) - 2.0 * se, tag + " STTS " + fmt(mean(s), 4) + " VTTS " +
                                                  fmt(mean(v), 4) + " 2SE " + fmt(2 * se, 3));
      if (p == 1.0 && t_max == 100) {
        const double o = mean(acc[Algorithm::kSTTSOracle]);
        c.expect(mean(s) >= 0.99 && o >= 0.99,
                 "p=1 t_max=100 STTS " + fmt(mean(s), 4) + " STTS-Oracle " + fmt(o, 4));
      }
    }
  }
  std::cout << "  runtime " << fmt(seconds_since(t0), 4) << " s\n";
  return c.ok;
}

bool check_theorem() {
  Check c;
  BoundInputs zero;
  zero.n = 100;
  zero.J = 10;
  zero.gaps = VectorXd::Constant(20, 2.0);
  zero.entropies = VectorXd::Zero(20);
  const BoundTerms z = theorem1_bound(zero);
  c.expect(z.main_term == 0.0 && z.remainder_term == 0.0 && z.total == 0.0,
           "zero entropy bound (" + fmt(z.main_term) + ", " + fmt(z.remainder_term) + ", " +
               fmt(z.total) + ")");

  BoundInputs in;
  in.J = 10;
  in.gaps = VectorXd::Constant(2, 2.0);
  in.entropies = VectorXd::Constant(
      2, conditional_entropy(markov_next_dist(0, MarkovPrior(0.999, 10))));
  double last = 2.0;
  bool decreasing = true;
  for (Index n : {1000, 10000, 100000, 1000000}) {
    in.n = n;
    const double r = theorem1_bound(in).remainder_term;
    std::cout << "  n=" << n << " remainder " << fmt(r, 4) << "\n";
    decreasing = decreasing && r < last;
    last = r;
  }
  c.expect(decreasing && last < 1e-3, "remainder decreases below 1e-3");

  BoundInputs h;
  h.n = 500;
  h.J = 10;
  h.gaps = VectorXd::LinSpaced(20, 0.5, 4.0);
  h.entropies = VectorXd::LinSpaced(20, 0.1, 2.0);
  const double before = theorem1_bound(h).main_term;
  h.gaps *= 2.0;
  const double after = theorem1_bound(h).main_term;
  c.expect(after == before / 2.0, "main term " + fmt(before, 17) + " -> " + fmt(after, 17));
  return c.ok;
}

bool check_allocation() {
  Check c;
  AllocationConfig cfg;
  cfg.B = 200;
  cfg.p_values = {0.1, 0.9};
  const auto rows = allocation_study(cfg);
  std::map<std::pair<double, Index>, double> sum;
  std::map<std::pair<double, Index>, int> count;
  for (const auto& r : rows) {
    sum[{r.p, r.t}] += r.kl;
    count[{r.p, r.t}] += 1;
  }
  auto avg = [&](double p, Index t) { return sum[{p, t}] / count[{p, t}]; };
  const double k1 = avg(0.1, 500), k9 = avg(0.9, 500);
  c.expect(k9 < k1, "t=500 mean KL p=0.9 " + fmt(k9) + " vs p=0.1 " + fmt(k1));
  for (double p : cfg.p_values) {
    bool down = true;
    std::cout << "  p=" << p << ":";
    for (std::size_t i = 0; i < cfg.checkpoints.size(); ++i) {
      std::cout << " " << fmt(avg(p, cfg.checkpoints[i]), 4);
      if (i > 0) down = down && avg(p, cfg.checkpoints[i]) < avg(p, cfg.checkpoints[i - 1]);
    }
    std::cout << "\n";
    c.expect(down, "mean KL decreasing from t=50 to t=500 at p=" + fmt(p, 2));
  }
  return c.ok;
}

bool check_gaussian_u() {
  Check c;
  struct Case {
    Index J;
    int kind;
  };
  for (const Case& k : {Case{5, 1}, Case{5, 2}, Case{5, 3}, Case{10, 1}, Case{10, 2},
                        Case{10, 3}}) {
    std::map<Algorithm, double> steps;
    for (Algorithm alg : {Algorithm::kSTTS, Algorithm::kVTTS, Algorithm::kRandom}) {
      ExperimentConfig cfg;
      cfg.scenario = Scenario::kGaussianU;
      cfg.algorithm = alg;
      cfg.J = k.J;
      cfg.u_kind = k.kind;
      cfg.mu0 = 5.0;
      cfg.sigma0 = 0.5;
      cfg.B = 200;
      const Metrics m = run_experiment(cfg).metrics;
      steps[alg] = m.mean_total_steps;
      const std::string tag =
          "J=" + std::to_string(k.J) + " U" + std::to_string(k.kind) + " " + to_string(alg);
      c.expect(m.avg_accuracy >= 0.9 && m.zero_one_accuracy >= 0.9,
               tag + " steps " + fmt(m.mean_total_steps) + " avg " + fmt(m.avg_accuracy) +
                   " 0-1 " + fmt(m.zero_one_accuracy));
    }
    const std::string tag = "J=" + std::to_string(k.J) + " U" + std::to_string(k.kind);
    c.expect(steps[Algorithm::kSTTS] < steps[Algorithm::kVTTS] &&
                 steps[Algorithm::kVTTS] < steps[Algorithm::kRandom],
             tag + " ordering STTS < VTTS < Random");
    if (k.J == 5 && k.kind == 1) {
      const double s = steps[Algorithm::kSTTS];
      c.expect(s >= 0.5 * 47.1 && s <= 1.5 * 47.1, "J=5 U1 STTS steps " + fmt(s) +
                                                       " within 50% of 47.1");
    }
  }
  return c.ok;
}

bool check_p300_fidelity() {
  Check c;
  p300::EEGConfig cfg;
  const p300::EpochGenerator gen(cfg);
  RngStream rng(11);
  double l0 = 0.0, l1 = 0.0;
  Index n0 = 0, n1 = 0;
  for (int rep = 0; rep < 2000; ++rep) {
    const MatrixXd z = gen.noise(rng);
    for (Index e = 0; e < z.rows(); ++e) {
      for (Index t = 0; t < z.cols(); ++t) {
        l0 += z(e, t) * z(e, t);
        ++n0;
        if (t > 0) {
          l1 += z(e, t) * z(e, t - 1);
          ++n1;
        }
      }
    }
  }
  const double rho = (l1 / n1) / (l0 / n0);
  c.expect(std::abs(rho - 0.9) <= 0.02, "lag-1 autocorrelation " + fmt(rho, 4));

  p300::EEGConfig quiet = cfg;
  quiet.noise_var = 0.0;
  RngStream q(1);
  const double ratio = p300::generate_epoch(quiet, p300::Label::kTarget, q).values.maxCoeff() /
                       p300::generate_epoch(quiet, p300::Label::kNontarget, q).values.maxCoeff();
  c.expect(std::abs(ratio - 5.0) < 1e-12, "zero-noise amplitude ratio " + fmt(ratio, 15));

  RngStream cal(7);
  p300::EpochSet data = p300::generate_calibration(cfg, 300, 1500, cal);
  RngStream shuffle(8);
  std::shuffle(data.labels.begin(), data.labels.end(), shuffle.engine());
  double a = 0.5;
  try {
    a = p300::train_swlda(data).holdout_auc;
  } catch (const InvalidArgument&) {
    std::cout << "  no feature entered on shuffled labels\n";
  }
  c.expect(a >= 0.4 && a <= 0.6, "shuffled-label AUC " + fmt(a, 4));
  return c.ok;
}

bool check_p300_end_to_end() {
  Check c;
  const auto t0 = std::chrono::steady_clock::now();
  const std::vector<Algorithm> algs{Algorithm::kSTTS, Algorithm::kVTTS, Algorithm::kBR,
                                    Algorithm::kRandom, Algorithm::kBBTS};
  std::map<double, std::map<Algorithm, double>> steps;
  for (double s2 : {1.0, 2.5}) {
    ExperimentConfig base;
    base.scenario = Scenario::kP300;
    base.M = 20;
    base.B = 50;
    base.sigma_eeg = s2;
    base.feedback = Feedback::kBackspace;
    base.table = g_data + "/word_table.json";
    const P300Context ctx = prepare_p300(base);
    std::cout << "  sigma^2=" << s2 << " calibration gap " << fmt(ctx.gap(), 4) << "\n";
    for (Algorithm alg : algs) {
      ExperimentConfig cfg = base;
      cfg.algorithm = alg;
      const Metrics m = run_experiment(cfg, &ctx).metrics;
      steps[s2][alg] = m.mean_total_steps;
      const std::string tag = "sigma^2=" + fmt(s2, 2) + " " + to_string(alg);
      c.expect(m.avg_accuracy >= 0.9 && m.zero_one_accuracy >= 0.9,
               tag + " steps " + fmt(m.mean_total_steps) + " avg " + fmt(m.avg_accuracy) +
                   " 0-1 " + fmt(m.zero_one_accuracy));
    }
  }
  const auto& one = steps[1.0];
  c.expect(one.at(Algorithm::kSTTS) <= 0.75 * one.at(Algorithm::kVTTS),
           "STTS/VTTS = " + fmt(one.at(Algorithm::kSTTS) / one.at(Algorithm::kVTTS), 4));
  for (Algorithm alg : algs) {
    c.expect(steps[2.5][alg] > steps[1.0][alg], to_string(alg) + " steps rise with noise");
  }
  c.expect(one.at(Algorithm::kSTTS) < one.at(Algorithm::kVTTS) &&
               one.at(Algorithm::kVTTS) < one.at(Algorithm::kBR) &&
               one.at(Algorithm::kBR) < one.at(Algorithm::kRandom),
           "ordering STTS < VTTS < BR < Random");
  std::cout << "  runtime " << fmt(seconds_since(t0), 4) << " s\n";
  return c.ok;
}

std::string results_csv(const ExperimentConfig& cfg, const P300Context* ctx) {
  std::ostringstream out;
  write_results_header(out);
  write_results(out, cfg, run_experiment(cfg, ctx).runs);
  return out.str();
}

bool check_determinism() {
  Check c;
  ExperimentConfig cfg;
  cfg.B = 20;
  cfg.p = 0.5;
  for (Algorithm alg : {Algorithm::kSTTS, Algorithm::kBR, Algorithm::kBBTS}) {
    cfg.algorithm = alg;
    c.expect(results_csv(cfg, nullptr) == results_csv(cfg, nullptr),
             "synthetic " + to_string(alg) + " results identical");
  }
  cfg.scenario = Scenario::kGaussianU;
  cfg.algorithm = Algorithm::kSTTS;
  c.expect(results_csv(cfg, nullptr) == results_csv(cfg, nullptr), "gaussian_u identical");

  ExperimentConfig p3;
  p3.scenario = Scenario::kP300;
  p3.M = 5;
  p3.B = 3;
  p3.table = g_data + "/word_table.json";
  const P300Context a = prepare_p300(p3);
  const P300Context b = prepare_p300(p3);
  c.expect(results_csv(p3, &a) == results_csv(p3, &b), "p300 identical across calibrations");

  p3.threads = 2;
  const std::string threaded = results_csv(p3, &a);
  p3.threads = 1;
  c.expect(threaded == results_csv(p3, &a), "thread count does not change results");
  return c.ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance checks"};
  std::string only;
  app.add_option("--only", only, "run a single criterion");
  app.add_option("--data", g_data, "data directory");
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::pair<std::string, std::function<bool()>>> criteria{
      {"posterior", check_posterior},
      {"stopping", check_stopping},
      {"fixed_confidence", check_fixed_confidence},
      {"fixed_budget", check_fixed_budget},
      {"theorem", check_theorem},
      {"allocation", check_allocation},
      {"gaussian_u", check_gaussian_u},
      {"p300_fidelity", check_p300_fidelity},
      {"p300_end_to_end", check_p300_end_to_end},
      {"determinism", check_determinism},
  };
  int failures = 0;
  bool matched = false;
  for (const auto& [name, fn] : criteria) {
    if (!only.empty() && only != name) continue;
    matched = true;
    std::cout << "[" << name << "]\n";
    bool ok = false;
    try {
      ok = fn();
    } catch (const std::exception& e) {
      std::cout << "  exception: " << e.what() << "\n";
    }
    std::cout << (ok ? "PASS " : "FAIL ") << name << std::endl;
    failures += !ok;
  }
  if (!matched) {
    std::cerr << "unknown criterion '" << only << "'\n";
    return 2;
  }
  return failures == 0 ? 0 : 1;
}
