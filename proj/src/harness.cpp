#include "stts/harness.hpp"

#include <atomic>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <set>
#include <sstream>
#include <thread>

#include "stts/stats.hpp"

namespace stts {

using nlohmann::json;

namespace {

template <typename Enum, std::size_t N>
Enum parse_enum(const std::string& s, const std::pair<Enum, const char*> (&names)[N],
                const char* what) {
  for (const auto& [value, name] : names) {
    if (s == name) return value;
  }
  std::string options;
  for (const auto& [value, name] : names) options += std::string(options.empty() ? "" : ", ") + name;
  throw InvalidArgument(std::string(what) + ": unknown value '" + s + "' (expected " +
                        options + ")");
}

template <typename Enum, std::size_t N>
std::string enum_name(Enum e, const std::pair<Enum, const char*> (&names)[N]) {
  for (const auto& [value, name] : names) {
    if (value == e) return name;
  }
  return "?";
}

const std::pair<Scenario, const char*> kScenarios[] = {
    {Scenario::kSyntheticMarkov, "synthetic_markov"},
    {Scenario::kGaussianU, "gaussian_u"},
    {Scenario::kP300, "p300"},
};
const std::pair<Algorithm, const char*> kAlgorithms[] = {
    {Algorithm::kSTTS, "stts"},     {Algorithm::kSTTSOracle, "stts-oracle"},
    {Algorithm::kVTTS, "vtts"},     {Algorithm::kRandom, "random"},
    {Algorithm::kBR, "br"},         {Algorithm::kBBTS, "bbts"},
};
const std::pair<Feedback, const char*> kFeedback[] = {
    {Feedback::kNone, "none"},
    {Feedback::kOracleReveal, "oracle_reveal"},
    {Feedback::kBackspace, "backspace"},
};
const std::pair<StopMode, const char*> kModes[] = {
    {StopMode::kFixedConfidence, "fixed_confidence"},
    {StopMode::kFixedBudget, "fixed_budget"},
};
const std::pair<GammaVariant, const char*> kGammaVariants[] = {
    {GammaVariant::kMomentMatched, "moment_matched"},
    {GammaVariant::kAsymptotic, "asymptotic"},
};
const std::pair<ThresholdGrouping, const char*> kGroupings[] = {
    {ThresholdGrouping::kLogLogT, "loglog_t"},
    {ThresholdGrouping::kLogTMD, "log_tmd"},
};

const std::pair<BBTSStopRule, const char*> kBBTSRules[] = {
    {BBTSStopRule::kTargetPosterior, "target_posterior"},
    {BBTSStopRule::kDominance, "dominance"},
};
const std::pair<BRRadius, const char*> kBRRadii[] = {
    {BRRadius::kLil, "lil"},
    {BRRadius::kAnytime, "anytime"},
};

json optional_value(const std::optional<double>& v) {
  return v ? json(*v) : json(nullptr);
}

}  // namespace

std::string to_string(Scenario s) { return enum_name(s, kScenarios); }
std::string to_string(Algorithm a) { return enum_name(a, kAlgorithms); }
std::string to_string(Feedback f) { return enum_name(f, kFeedback); }
Scenario scenario_from_string(const std::string& s) {
  return parse_enum(s, kScenarios, "scenario");
}
Algorithm algorithm_from_string(const std::string& s) {
  return parse_enum(s, kAlgorithms, "algorithm");
}
Feedback feedback_from_string(const std::string& s) {
  return parse_enum(s, kFeedback, "feedback");
}

double ExperimentConfig::resolved_sigma0() const {
  if (sigma0) return *sigma0;
  return scenario == Scenario::kGaussianU ? 0.5 : std::sqrt(0.2);
}

void ExperimentConfig::validate() const {
  require(M >= 1, "config: M must be >= 1");
  require(B >= 1, "config: B must be >= 1");
  require(threads >= 1, "config: threads must be >= 1");
  require(safety_cap >= 1, "config: safety cap must be >= 1");
  require(noise_sd > 0.0, "config: noise_sd must be positive");
  require(resolved_sigma0() > 0.0, "config: sigma0 must be positive");
  if (scenario != Scenario::kP300) require(J >= 2, "config: J must be >= 2");
  StoppingConfig s = stopping;
  s.M = M;
  s.validate();
  top_two.validate();
  require(shrink > 0.0 && shrink <= 1.0, "config: shrink must lie in (0,1]");
  if (p_max) require(*p_max > 0.0 && *p_max < 1.0, "config: p_max must lie in (0,1)");
  if (algorithm == Algorithm::kBR) {
    require(stopping.mode == StopMode::kFixedConfidence,
            "config: br runs only in fixed_confidence mode");
  }
  switch (scenario) {
    case Scenario::kSyntheticMarkov:
      require(p >= 0.0 && p <= 1.0, "config: p must lie in [0,1]");
      break;
    case Scenario::kGaussianU:
      u_matrix(u_kind_from_int(u_kind), J);
      require(mu0 > 0.0, "config: mu0 must be positive");
      require(vtts_sigma > 0.0, "config: vtts_sigma must be positive");
      break;
    case Scenario::kP300:
      require(sigma_eeg > 0.0, "config: sigma_eeg must be positive");
      require(n_calib_target >= 1 && n_calib_nontarget >= 1,
              "config: calibration counts must be >= 1");
      break;
  }
}

json to_json(const ExperimentConfig& c) {
  json j;
  j["scenario"] = to_string(c.scenario);
  j["algorithm"] = to_string(c.algorithm);
  j["J"] = c.J;
  j["M"] = c.M;
  j["B"] = c.B;
  j["p"] = c.p;
  j["u_kind"] = c.u_kind;
  j["mu"] = c.prior.mu;
  j["gap"] = c.prior.gap;
  j["sigma0"] = optional_value(c.sigma0);
  j["sigma1"] = c.prior.sigma1;
  j["perturb"] = c.prior.perturb;
  j["mu0"] = c.mu0;
  j["vtts_sigma"] = c.vtts_sigma;
  j["noise_sd"] = c.noise_sd;
  j["mode"] = enum_name(c.stopping.mode, kModes);
  j["delta"] = c.stopping.delta;
  j["t_max"] = c.stopping.t_max;
  j["gamma_variant"] = enum_name(c.stopping.gamma_variant, kGammaVariants);
  j["grouping"] = enum_name(c.stopping.grouping, kGroupings);
  j["C"] = c.stopping.C;
  j["min_t"] = c.stopping.min_t;
  j["beta"] = c.top_two.beta;
  j["max_resample"] = c.top_two.max_resample;
  j["shrink"] = c.shrink;
  j["br_radius"] = enum_name(c.br_radius, kBRRadii);
  j["threshold"] = optional_value(c.threshold);
  j["p_max"] = optional_value(c.p_max);
  j["bbts_stop_rule"] = enum_name(c.bbts_stop_rule, kBBTSRules);
  j["feedback"] = to_string(c.feedback);
  j["safety_cap"] = c.safety_cap;
  j["master_seed"] = c.master_seed;
  j["output"] = c.output;
  j["threads"] = c.threads;
  j["sigma_eeg"] = c.sigma_eeg;
  j["n_electrodes"] = c.eeg.n_electrodes;
  j["window_len"] = c.eeg.window_len;
  j["kernel_bandwidth"] = c.eeg.kernel_bandwidth;
  j["ar_coef"] = c.eeg.ar_coef;
  j["amplitude_ratio"] = c.eeg.amplitude_ratio;
  j["nontarget_amp"] = c.eeg.nontarget_amp;
  j["bump_center"] = c.eeg.bump_center;
  j["bump_width"] = c.eeg.bump_width;
  j["p_enter"] = c.swlda.p_enter;
  j["p_remove"] = c.swlda.p_remove;
  j["max_features"] = c.swlda.max_features;
  j["table"] = c.table;
  j["truth_table"] = c.truth_table;
  j["n_calib_target"] = c.n_calib_target;
  j["n_calib_nontarget"] = c.n_calib_nontarget;
  return j;
}

ExperimentConfig config_from_json(const json& j) {
  require(j.is_object(), "config: top level must be an object");
  ExperimentConfig c;
  const json defaults = to_json(c);
  for (auto it = j.begin(); it != j.end(); ++it) {
    require(defaults.contains(it.key()), "config: unknown key '" + it.key() + "'");
  }
  auto get = [&](const char* key, auto& target) {
    if (!j.contains(key)) return;
    try {
      j.at(key).get_to(target);
    } catch (const json::exception&) {
      throw InvalidArgument(std::string("config: bad value for '") + key + "'");
    }
  };
  auto get_optional = [&](const char* key, std::optional<double>& target) {
    if (!j.contains(key)) return;
    if (j.at(key).is_null()) {
      target.reset();
    } else {
      double v = 0.0;
      get(key, v);
      target = v;
    }
  };
  auto get_enum = [&](const char* key, auto& target, const auto& names) {
    if (!j.contains(key)) return;
    std::string s;
    get(key, s);
    target = parse_enum(s, names, key);
  };
  get_enum("scenario", c.scenario, kScenarios);
  get_enum("algorithm", c.algorithm, kAlgorithms);
  get("J", c.J);
  get("M", c.M);
  get("B", c.B);
  get("p", c.p);
  get("u_kind", c.u_kind);
  get("mu", c.prior.mu);
  get("gap", c.prior.gap);
  get_optional("sigma0", c.sigma0);
  get("sigma1", c.prior.sigma1);
  get("perturb", c.prior.perturb);
  get("mu0", c.mu0);
  get("vtts_sigma", c.vtts_sigma);
  get("noise_sd", c.noise_sd);
  get_enum("mode", c.stopping.mode, kModes);
  get("delta", c.stopping.delta);
  get("t_max", c.stopping.t_max);
  get_enum("gamma_variant", c.stopping.gamma_variant, kGammaVariants);
  get_enum("grouping", c.stopping.grouping, kGroupings);
  get("C", c.stopping.C);
  get("min_t", c.stopping.min_t);
  get("beta", c.top_two.beta);
  get("max_resample", c.top_two.max_resample);
  get("shrink", c.shrink);
  get_enum("br_radius", c.br_radius, kBRRadii);
  get_optional("threshold", c.threshold);
  get_optional("p_max", c.p_max);
  get_enum("bbts_stop_rule", c.bbts_stop_rule, kBBTSRules);
  get_enum("feedback", c.feedback, kFeedback);
  get("safety_cap", c.safety_cap);
  get("master_seed", c.master_seed);
  get("output", c.output);
  get("threads", c.threads);
  get("sigma_eeg", c.sigma_eeg);
  get("n_electrodes", c.eeg.n_electrodes);
  get("window_len", c.eeg.window_len);
  get("kernel_bandwidth", c.eeg.kernel_bandwidth);
  get("ar_coef", c.eeg.ar_coef);
  get("amplitude_ratio", c.eeg.amplitude_ratio);
  get("nontarget_amp", c.eeg.nontarget_amp);
  get("bump_center", c.eeg.bump_center);
  get("bump_width", c.eeg.bump_width);
  get("p_enter", c.swlda.p_enter);
  get("p_remove", c.swlda.p_remove);
  get("max_features", c.swlda.max_features);
  get("table", c.table);
  get("truth_table", c.truth_table);
  get("n_calib_target", c.n_calib_target);
  get("n_calib_nontarget", c.n_calib_nontarget);
  c.stopping.M = c.M;
  c.prior.sigma0 = c.resolved_sigma0();
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("config: cannot open '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw FormatError("config: " + std::string(e.what()));
  }
  return config_from_json(j);
}

Index RunResult::total_steps() const {
  Index total = 0;
  for (const auto& t : tasks) total += t.tau;
  return total;
}

Index RunResult::num_correct() const {
  Index n = 0;
  for (const auto& t : tasks) n += t.correct;
  return n;
}

Metrics compute_metrics(const std::vector<RunResult>& runs) {
  Metrics m;
  m.B = static_cast<Index>(runs.size());
  if (runs.empty()) return m;
  double correct = 0.0, tasks = 0.0, perfect = 0.0;
  std::vector<double> steps;
  for (const auto& r : runs) {
    correct += double(r.num_correct());
    tasks += double(r.tasks.size());
    perfect += r.all_correct();
    steps.push_back(double(r.total_steps()));
    for (const auto& t : r.tasks) m.capped_tasks += t.capped;
  }
  m.avg_accuracy = tasks > 0 ? correct / tasks : 0.0;
  m.zero_one_accuracy = perfect / double(runs.size());
  m.mean_total_steps = mean(steps);
  m.sd_total_steps = std::sqrt(sample_variance(steps));
  return m;
}

double P300Context::gap() const {
  return (model.calib.target_mean - model.calib.nontarget_mean) / scale;
}

P300Context prepare_p300(const ExperimentConfig& cfg) {
  P300Context ctx;
  ctx.prior_table = std::make_shared<const WordModelTable>(load_word_table(cfg.table));
  ctx.truth_table = cfg.truth_table.empty()
                        ? ctx.prior_table
                        : std::make_shared<const WordModelTable>(load_word_table(cfg.truth_table));
  require(ctx.truth_table->vocab() == ctx.prior_table->vocab(),
          "p300: truth table and prior table must share one vocabulary");
  p300::EEGConfig eeg = cfg.eeg;
  eeg.noise_var = cfg.sigma_eeg;
  ctx.generator = std::make_shared<const p300::EpochGenerator>(eeg);
  RngStream calib_rng(cfg.master_seed, {0, 0, Purpose::kCalibration});
  const p300::EpochSet data =
      p300::generate_calibration(eeg, cfg.n_calib_target, cfg.n_calib_nontarget, calib_rng);
  ctx.model = p300::train_swlda(data, cfg.swlda);
  ctx.offset = ctx.model.calib.nontarget_mean;
  ctx.scale = std::sqrt(ctx.model.calib.pooled_var());
  require(ctx.scale > 0.0 && ctx.gap() > 0.0,
          "p300: calibration did not separate target from nontarget scores");
  return ctx;
}

namespace {

struct TaskTruth {
  std::vector<Index> optimal;
  std::vector<VectorXd> theta;  // empty for p300
};

Index effective_J(const ExperimentConfig& cfg, const P300Context* ctx) {
  return cfg.scenario == Scenario::kP300 ? ctx->prior_table->size() : cfg.J;
}

TaskTruth draw_truth(const ExperimentConfig& cfg, Index replication,
                     const P300Context* ctx) {
  RngStream rng(cfg.master_seed, {std::uint64_t(replication), 0, Purpose::kTruth});
  TaskTruth truth;
  switch (cfg.scenario) {
    case Scenario::kSyntheticMarkov: {
      const MarkovProvider provider(MarkovPrior(cfg.p, cfg.J));
      const TaskSequence seq =
          sample_task_sequence(provider, cfg.M, cfg.prior, rng, cfg.noise_sd);
      truth.optimal = seq.optimal_arms;
      for (const auto& env : seq.tasks) truth.theta.push_back(env.theta());
      break;
    }
    case Scenario::kGaussianU: {
      const GaussianUPrior prior(u_matrix(u_kind_from_int(cfg.u_kind), cfg.J), cfg.mu0,
                                 cfg.resolved_sigma0());
      const TaskSequence seq = sample_gaussian_u_sequence(prior, cfg.M, rng, cfg.noise_sd);
      truth.optimal = seq.optimal_arms;
      for (const auto& env : seq.tasks) truth.theta.push_back(env.theta());
      break;
    }
    case Scenario::kP300: {
      const WordTableProvider provider(ctx->truth_table);
      Index prev = -1;
      for (Index m = 0; m < cfg.M; ++m) {
        prev = sample_categorical(m == 0 ? provider.initial() : provider.next(prev), rng);
        truth.optimal.push_back(prev);
      }
      break;
    }
  }
  return truth;
}

bool uses_history(Algorithm a) {
  return a == Algorithm::kSTTS || a == Algorithm::kSTTSOracle;
}

// Prior for task m given the previous arm in the algorithm's history (or
// -1 on the first task).
MixturePosteriord task_prior(const ExperimentConfig& cfg, const P300Context* ctx,
                             Index prev) {
  const bool informed = uses_history(cfg.algorithm);
  switch (cfg.scenario) {
    case Scenario::kSyntheticMarkov: {
      const MarkovProvider provider(MarkovPrior(cfg.p, cfg.J));
      const VectorXd weights = informed && prev >= 0
                                   ? provider.next(prev)
                                   : VectorXd::Constant(cfg.J, 1.0 / double(cfg.J));
      return build_mixture_prior(weights, cfg.prior, cfg.noise_sd * cfg.noise_sd);
    }
    case Scenario::kGaussianU: {
      const double noise_var = cfg.noise_sd * cfg.noise_sd;
      if (!informed) {
        return MixturePosteriord::gaussian(
            VectorXd::Zero(cfg.J),
            VectorXd::Constant(cfg.J, cfg.vtts_sigma * cfg.vtts_sigma), noise_var);
      }
      const GaussianUPrior prior(u_matrix(u_kind_from_int(cfg.u_kind), cfg.J), cfg.mu0,
                                 cfg.resolved_sigma0());
      return prev < 0 ? gaussian_u_first_task_prior(prior, noise_var)
                      : gaussian_u_task_prior(prev, prior, noise_var);
    }
    case Scenario::kP300: {
      const Index J = ctx->prior_table->size();
      MixturePriorParams params = cfg.prior;
      params.mu = 0.0;
      params.gap = ctx->gap();
      VectorXd weights = VectorXd::Constant(J, 1.0 / double(J));
      if (informed) weights = prev >= 0 ? ctx->prior_table->row(prev) : ctx->prior_table->initial();
      return build_mixture_prior(weights, params, 1.0);
    }
  }
  throw InvalidArgument("task_prior: unknown scenario");
}

double default_threshold(const ExperimentConfig& cfg, const P300Context* ctx) {
  switch (cfg.scenario) {
    case Scenario::kSyntheticMarkov: return cfg.prior.mu + 0.5 * cfg.prior.gap;
    case Scenario::kGaussianU: return 0.5 * cfg.mu0;
    case Scenario::kP300: return 0.5 * ctx->gap();
  }
  return 0.0;
}

// Success probabilities of a thresholded reward on the target and on any
// other arm, taking the reward as Gaussian with the arm's mean plus the
// prior spread.
std::pair<double, double> bbts_rates(const ExperimentConfig& cfg, const P300Context* ctx,
                                     double threshold) {
  double lo = 0.0, hi = 0.0, sd = 1.0;
  switch (cfg.scenario) {
    case Scenario::kSyntheticMarkov: {
      const double s0 = cfg.resolved_sigma0();
      lo = cfg.prior.mu;
      hi = cfg.prior.mu + cfg.prior.gap;
      sd = std::sqrt(cfg.noise_sd * cfg.noise_sd + s0 * s0);
      break;
    }
    case Scenario::kGaussianU: {
      const double s0 = cfg.resolved_sigma0();
      hi = cfg.mu0;
      sd = std::sqrt(cfg.noise_sd * cfg.noise_sd + s0 * s0);
      break;
    }
    case Scenario::kP300:
      hi = ctx->gap();
      break;
  }
  auto above = [&](double mean) {
    return std::clamp(0.5 * std::erfc((threshold - mean) / (sd * std::sqrt(2.0))), 1e-12,
                      1.0 - 1e-12);
  };
  return {above(hi), above(lo)};
}

struct TaskOutcome {
  Index tau = 0;
  Index decided = 0;
  bool capped = false;
};

template <typename Reward>
TaskOutcome run_posterior_task(const ExperimentConfig& cfg, MixturePosteriord post,
                               Reward&& reward, RngStream& policy) {
  const StoppingConfig& stop = cfg.stopping;
  const bool budget = stop.mode == StopMode::kFixedBudget;
  const Index J = post.num_arms();
  TaskOutcome out;
  for (;;) {
    const Index arm = cfg.algorithm == Algorithm::kRandom
                          ? random_select(J, policy)
                          : top_two_select(post, cfg.top_two, policy);
    post.update(arm, reward(arm));
    ++out.tau;
    if (budget) {
      if (budget_stop(out.tau, stop)) break;
    } else if (posterior_stop(post, out.tau, stop)) {
      break;
    }
    if (out.tau >= cfg.safety_cap) {
      out.capped = true;
      break;
    }
  }
  out.decided = decide(post);
  return out;
}

template <typename Reward>
TaskOutcome run_br_task(const ExperimentConfig& cfg, Index J, double noise_var,
                        Reward&& reward) {
  BRState state(J, noise_var, bonferroni(cfg.stopping.delta, cfg.M), cfg.shrink,
                cfg.br_radius);
  TaskOutcome out;
  for (;;) {
    const BRRound round = br_round(state);
    if (state.done()) break;
    if (out.tau >= cfg.safety_cap) {
      out.capped = true;
      break;
    }
    for (Index arm : round.arms) {
      state.observe(arm, reward(arm));
      ++out.tau;
    }
  }
  out.decided = state.leader();
  return out;
}

template <typename Reward>
TaskOutcome run_bbts_task(const ExperimentConfig& cfg, Index J, double threshold,
                          std::pair<double, double> rates, Reward&& reward,
                          RngStream& policy) {
  const double p_max = cfg.p_max ? *cfg.p_max : bbts_p_max(cfg.stopping.delta, cfg.M);
  BBTSState state(J, threshold, p_max);
  const bool budget = cfg.stopping.mode == StopMode::kFixedBudget;
  TaskOutcome out;
  for (;;) {
    const Index arm = bbts_step(state, policy);
    bbts_update(state, arm, reward(arm));
    ++out.tau;
    if (budget) {
      if (budget_stop(out.tau, cfg.stopping)) break;
    } else if (out.tau >= cfg.stopping.min_t) {
      const bool stop =
          cfg.bbts_stop_rule == BBTSStopRule::kDominance
              ? bbts_stop_exact(state)
              : bbts_target_posterior(state, rates.first, rates.second).maxCoeff() >= p_max;
      if (stop) break;
    }
    if (out.tau >= cfg.safety_cap) {
      out.capped = true;
      break;
    }
  }
  out.decided = cfg.bbts_stop_rule == BBTSStopRule::kDominance
                    ? state.best()
                    : argmax(bbts_target_posterior(state, rates.first, rates.second));
  return out;
}

}  // namespace

RunResult run_task_sequence(const ExperimentConfig& cfg, Index replication,
                            const P300Context* ctx) {
  cfg.validate();
  require(cfg.scenario != Scenario::kP300 || ctx != nullptr,
          "run_task_sequence: p300 needs a prepared context");
  const Index J = effective_J(cfg, ctx);
  const TaskTruth truth = draw_truth(cfg, replication, ctx);
  const double noise_var =
      cfg.scenario == Scenario::kP300 ? 1.0 : cfg.noise_sd * cfg.noise_sd;
  const double threshold = cfg.threshold ? *cfg.threshold : default_threshold(cfg, ctx);
  const bool reveal = cfg.algorithm == Algorithm::kSTTSOracle || cfg.feedback != Feedback::kNone;

  RunResult result;
  Index prev = -1;
  for (Index m = 0; m < cfg.M; ++m) {
    const auto rep = std::uint64_t(replication);
    const auto task = std::uint64_t(m);
    RngStream policy(cfg.master_seed, {rep, task, Purpose::kPolicy});
    RngStream reward_rng(cfg.master_seed, {rep, task, Purpose::kReward});
    const Index target = truth.optimal[m];

    auto reward = [&](Index arm) {
      if (cfg.scenario == Scenario::kP300) {
        return ctx->standardize(
            p300::p300_reward_channel(ctx->model, *ctx->generator, target, arm, reward_rng));
      }
      return pull(truth.theta[m], cfg.noise_sd, arm, reward_rng);
    };

    TaskOutcome outcome;
    switch (cfg.algorithm) {
      case Algorithm::kBR:
        outcome = run_br_task(cfg, J, noise_var, reward);
        break;
      case Algorithm::kBBTS:
        outcome = run_bbts_task(cfg, J, threshold, bbts_rates(cfg, ctx, threshold), reward,
                                policy);
        break;
      default:
        outcome = run_posterior_task(cfg, task_prior(cfg, ctx, prev), reward, policy);
        break;
    }

    TaskRecord rec;
    rec.tau = outcome.tau;
    rec.decided = outcome.decided;
    rec.truth = target;
    rec.correct = outcome.decided == target;
    rec.capped = outcome.capped;
    result.tasks.push_back(rec);
    prev = reveal ? target : outcome.decided;
  }
  return result;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, const P300Context* ctx) {
  cfg.validate();
  std::optional<P300Context> owned;
  if (cfg.scenario == Scenario::kP300 && ctx == nullptr) {
    owned = prepare_p300(cfg);
    ctx = &*owned;
  }
  ExperimentResult out;
  out.runs.resize(static_cast<std::size_t>(cfg.B));
  const int workers = static_cast<int>(std::min<Index>(cfg.threads, cfg.B));
  if (workers <= 1) {
    for (Index b = 0; b < cfg.B; ++b) out.runs[b] = run_task_sequence(cfg, b, ctx);
  } else {
    std::atomic<Index> next{0};
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (Index b = next++; b < cfg.B; b = next++) {
            out.runs[b] = run_task_sequence(cfg, b, ctx);
          }
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }
  out.metrics = compute_metrics(out.runs);
  return out;
}

std::string p_or_kind(const ExperimentConfig& cfg) {
  switch (cfg.scenario) {
    case Scenario::kSyntheticMarkov: {
      std::ostringstream os;
      os << std::setprecision(6) << cfg.p;
      return os.str();
    }
    case Scenario::kGaussianU: return "U" + std::to_string(cfg.u_kind);
    case Scenario::kP300: return "table";
  }
  return "";
}

namespace {

std::string sigma_eeg_field(const ExperimentConfig& cfg) {
  if (cfg.scenario != Scenario::kP300) return "NA";
  std::ostringstream os;
  os << std::setprecision(6) << cfg.sigma_eeg;
  return os.str();
}

Index reported_J(const ExperimentConfig& cfg, const std::vector<RunResult>& runs) {
  (void)runs;
  if (cfg.scenario != Scenario::kP300) return cfg.J;
  return load_word_table(cfg.table).size();
}

}  // namespace

void write_results_header(std::ostream& out) {
  out << "scenario,algorithm,J,M,p_or_kind,sigma_eeg,replication,task,tau,decided,truth,"
         "correct\n";
}

void write_results(std::ostream& out, const ExperimentConfig& cfg,
                   const std::vector<RunResult>& runs) {
  const std::string prefix = to_string(cfg.scenario) + "," + to_string(cfg.algorithm) +
                             "," + std::to_string(reported_J(cfg, runs)) + "," +
                             std::to_string(cfg.M) + "," + p_or_kind(cfg) + "," +
                             sigma_eeg_field(cfg) + ",";
  for (std::size_t b = 0; b < runs.size(); ++b) {
    for (std::size_t m = 0; m < runs[b].tasks.size(); ++m) {
      const TaskRecord& t = runs[b].tasks[m];
      out << prefix << b + 1 << ',' << m + 1 << ',' << t.tau << ','
          << to_external(t.decided) << ',' << to_external(t.truth) << ','
          << (t.correct ? 1 : 0) << '\n';
    }
  }
}

void write_summary_header(std::ostream& out) {
  out << "scenario,algorithm,J,M,B,p_or_kind,sigma_eeg,mode,t_max,avg_accuracy,"
         "zero_one_accuracy,mean_total_steps,sd_total_steps,capped_tasks\n";
}

void write_summary(std::ostream& out, const ExperimentConfig& cfg, const Metrics& m) {
  const bool budget = cfg.stopping.mode == StopMode::kFixedBudget;
  out << to_string(cfg.scenario) << ',' << to_string(cfg.algorithm) << ','
      << reported_J(cfg, {}) << ',' << cfg.M << ',' << m.B << ',' << p_or_kind(cfg) << ','
      << sigma_eeg_field(cfg) << ',' << enum_name(cfg.stopping.mode, kModes) << ','
      << (budget ? std::to_string(cfg.stopping.t_max) : std::string("NA")) << ','
      << std::setprecision(10) << m.avg_accuracy << ',' << m.zero_one_accuracy << ','
      << m.mean_total_steps << ',' << m.sd_total_steps << ',' << m.capped_tasks << '\n';
}

std::vector<SweepRow> sweep(const json& base, const std::string& axis,
                            const std::vector<json>& values,
                            const std::vector<Algorithm>& algorithms) {
  std::vector<SweepRow> rows;
  const std::uint64_t seed = base.value("master_seed", std::uint64_t{1});
  for (std::size_t g = 0; g < values.size(); ++g) {
    json point = base;
    point[axis] = values[g];
    point["master_seed"] = seed + g;
    ExperimentConfig proto = config_from_json(point);
    std::optional<P300Context> ctx;
    if (proto.scenario == Scenario::kP300) ctx = prepare_p300(proto);
    for (Algorithm a : algorithms) {
      ExperimentConfig cfg = proto;
      cfg.algorithm = a;
      cfg.validate();
      SweepRow row;
      row.axis = axis;
      row.value = values[g].is_string() ? values[g].get<std::string>() : values[g].dump();
      row.metrics = run_experiment(cfg, ctx ? &*ctx : nullptr).metrics;
      row.cfg = std::move(cfg);
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

void write_sweep(std::ostream& out, const std::vector<SweepRow>& rows) {
  out << "axis,value,scenario,algorithm,J,M,B,p_or_kind,sigma_eeg,mode,t_max,avg_accuracy,"
         "zero_one_accuracy,mean_total_steps,sd_total_steps,capped_tasks\n";
  for (const auto& r : rows) {
    out << r.axis << ',' << r.value << ',';
    std::ostringstream line;
    write_summary(line, r.cfg, r.metrics);
    out << line.str();
  }
}

std::vector<AllocationRow> allocation_study(const AllocationConfig& cfg) {
  require(!cfg.checkpoints.empty(), "allocation_study: no checkpoints");
  require(cfg.B >= 1, "allocation_study: B must be >= 1");
  cfg.top_two.validate();
  const Index horizon = *std::max_element(cfg.checkpoints.begin(), cfg.checkpoints.end());
  std::vector<AllocationRow> rows;
  for (double p : cfg.p_values) {
    const MarkovPrior markov(p, cfg.J);
    for (Index b = 0; b < cfg.B; ++b) {
      const auto rep = std::uint64_t(b);
      RngStream truth_rng(cfg.master_seed, {rep, 0, Purpose::kTruth});
      RngStream policy(cfg.master_seed, {rep, 0, Purpose::kPolicy});
      RngStream reward_rng(cfg.master_seed, {rep, 0, Purpose::kReward});
      const Index prev = static_cast<Index>(truth_rng.uniform_index(cfg.J));
      const VectorXd weights = markov_next_dist(prev, markov);
      const Index best = sample_categorical(weights, truth_rng);
      const VectorXd theta = conditional_mean(best, cfg.J, cfg.prior);
      MixturePosteriord post = build_mixture_prior(weights, cfg.prior, cfg.noise_sd * cfg.noise_sd);
      std::vector<AllocationSnapshot> snaps;
      for (Index t = 1; t <= horizon; ++t) {
        const Index arm = top_two_select(post, cfg.top_two, policy);
        post.update(arm, pull(theta, cfg.noise_sd, arm, reward_rng));
        if (std::find(cfg.checkpoints.begin(), cfg.checkpoints.end(), t) != cfg.checkpoints.end()) {
          snaps.push_back({post.stats().pulls, t, best});
        }
      }
      for (const auto& point : allocation_trace(snaps, cfg.J, cfg.top_two.beta, horizon)) {
        rows.push_back({p, b, point.t, point.kl});
      }
    }
  }
  return rows;
}

void write_allocation(std::ostream& out, const std::vector<AllocationRow>& rows) {
  out << "t,kl,p,replication\n" << std::setprecision(10);
  for (const auto& r : rows) {
    out << r.t << ',' << r.kl << ',' << r.p << ',' << to_external(r.replication) << '\n';
  }
}

}  // namespace stts
