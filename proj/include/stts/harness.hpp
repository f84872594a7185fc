#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "stts/algorithms.hpp"
#include "stts/core.hpp"
#include "stts/p300.hpp"
#include "stts/priors.hpp"
#include "stts/stopping.hpp"
#include "stts/theory.hpp"
#include "stts/types.hpp"
#include "stts/word_table.hpp"

namespace stts {

enum class Scenario { kSyntheticMarkov, kGaussianU, kP300 };
enum class Algorithm { kSTTS, kSTTSOracle, kVTTS, kRandom, kBR, kBBTS };
// kNone:         STTS conditions on its own recommendations.
// kOracleReveal: the true optimal arm always enters the history.
// kBackspace:    a wrong recommendation is corrected, so the history is the
//                truth; the error still counts.
enum class Feedback { kNone, kOracleReveal, kBackspace };
// kTargetPosterior: stop when one arm's probability of being the target
//                   reaches p_max; hit and false-alarm rates follow from the
//                   threshold and the reward model.
// kDominance:       stop when the best arm's Beta posterior dominates every
//                   other arm's with probability p_max.
enum class BBTSStopRule { kTargetPosterior, kDominance };

std::string to_string(Scenario s);
std::string to_string(Algorithm a);
std::string to_string(Feedback f);
Scenario scenario_from_string(const std::string& s);
Algorithm algorithm_from_string(const std::string& s);
Feedback feedback_from_string(const std::string& s);

struct ExperimentConfig {
  Scenario scenario = Scenario::kSyntheticMarkov;
  Algorithm algorithm = Algorithm::kSTTS;
  Index J = 10;
  Index M = 20;
  Index B = 200;

  // synthetic_markov
  double p = 0.1;
  MixturePriorParams prior;  // mu, gap, sigma1, perturb; sigma0 resolved below
  // Unset means the scenario default: sqrt(0.2), or 0.5 for gaussian_u.
  std::optional<double> sigma0;

  // gaussian_u
  int u_kind = 1;
  double mu0 = 5.0;
  double vtts_sigma = 10.0;

  double noise_sd = 1.0;
  StoppingConfig stopping;
  TopTwoConfig top_two;
  double shrink = 0.25;
  BRRadius br_radius = BRRadius::kLil;
  // Unset: midpoint between the non-optimal and optimal means.
  std::optional<double> threshold;
  // Unset: 1 - delta / (1000 M).
  std::optional<double> p_max;
  BBTSStopRule bbts_stop_rule = BBTSStopRule::kTargetPosterior;
  Feedback feedback = Feedback::kNone;
  Index safety_cap = 1000000;

  std::uint64_t master_seed = 1;
  std::string output = "out";
  int threads = 1;

  // p300
  double sigma_eeg = 1.0;
  p300::EEGConfig eeg;
  p300::SWLDAOptions swlda;
  std::string table = "data/word_table.json";
  std::string truth_table;  // empty: same as table
  Index n_calib_target = 300;
  Index n_calib_nontarget = 1500;

  double resolved_sigma0() const;
  void validate() const;
};

nlohmann::json to_json(const ExperimentConfig& cfg);
// Missing keys keep their defaults; unknown keys are rejected.
ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);

struct TaskRecord {
  Index tau = 0;
  Index decided = 0;
  Index truth = 0;
  bool correct = false;
  bool capped = false;
};

struct RunResult {
  std::vector<TaskRecord> tasks;

  Index total_steps() const;
  Index num_correct() const;
  bool all_correct() const { return num_correct() == Index(tasks.size()); }
};

struct Metrics {
  Index B = 0;
  double avg_accuracy = 0.0;
  double zero_one_accuracy = 0.0;
  double mean_total_steps = 0.0;
  double sd_total_steps = 0.0;
  Index capped_tasks = 0;
};

Metrics compute_metrics(const std::vector<RunResult>& runs);

// Shared, immutable state for the P300 scenario: word tables and one
// calibrated classifier. Scores are standardized so that nontarget scores
// have mean 0 and the pooled calibration variance is 1.
struct P300Context {
  std::shared_ptr<const WordModelTable> prior_table;
  std::shared_ptr<const WordModelTable> truth_table;
  std::shared_ptr<const p300::EpochGenerator> generator;
  p300::SWLDAModel model;
  double offset = 0.0;
  double scale = 1.0;

  // Calibration gap in standardized units.
  double gap() const;
  double standardize(double score) const { return (score - offset) / scale; }
};

P300Context prepare_p300(const ExperimentConfig& cfg);

// One replication: M tasks run in sequence. `ctx` is required for p300.
RunResult run_task_sequence(const ExperimentConfig& cfg, Index replication,
                            const P300Context* ctx = nullptr);

struct ExperimentResult {
  std::vector<RunResult> runs;
  Metrics metrics;
};

ExperimentResult run_experiment(const ExperimentConfig& cfg,
                                const P300Context* ctx = nullptr);

// Label for the prior-strength column: p, the U kind, or "table".
std::string p_or_kind(const ExperimentConfig& cfg);

void write_results_header(std::ostream& out);
void write_results(std::ostream& out, const ExperimentConfig& cfg,
                   const std::vector<RunResult>& runs);
void write_summary_header(std::ostream& out);
void write_summary(std::ostream& out, const ExperimentConfig& cfg,
                   const Metrics& metrics);

struct SweepRow {
  std::string axis;
  std::string value;
  ExperimentConfig cfg;
  Metrics metrics;
};

// Cross product of axis values and algorithms. Grid point g runs with
// master_seed + g for every algorithm, so algorithms share their task
// sequences at each point.
std::vector<SweepRow> sweep(const nlohmann::json& base, const std::string& axis,
                            const std::vector<nlohmann::json>& values,
                            const std::vector<Algorithm>& algorithms);

void write_sweep(std::ostream& out, const std::vector<SweepRow>& rows);

// Allocation study: one task whose previous optimal arm is drawn uniformly,
// the current one from the Markov kernel, theta at its conditional mean,
// and STTS run for the largest checkpoint.
struct AllocationConfig {
  Index J = 10;
  std::vector<double> p_values{0.1, 0.5, 0.9};
  MixturePriorParams prior{0.0, 0.5, 1.0, 1.0, false};
  double noise_sd = 1.0;
  TopTwoConfig top_two;
  std::vector<Index> checkpoints{50, 100, 150, 200, 250, 300, 350, 400, 450, 500};
  Index B = 200;
  std::uint64_t master_seed = 1;
};

struct AllocationRow {
  double p = 0.0;
  Index replication = 0;
  Index t = 0;
  double kl = 0.0;
};

std::vector<AllocationRow> allocation_study(const AllocationConfig& cfg);
void write_allocation(std::ostream& out, const std::vector<AllocationRow>& rows);

}  // namespace stts
