#pragma once

#include <string>
#include <vector>

#include <Eigen/Cholesky>

#include "stts/rng.hpp"
#include "stts/types.hpp"

namespace stts::p300 {

// Electrodes sit on a square grid (16 -> 4x4, unit spacing). Noise is
// sqrt(noise_var) * L * Z where L L^T is the Gaussian-kernel correlation
// between electrode positions and each row of Z is a stationary unit-variance
// AR(1) process.
struct EEGConfig {
  Index n_electrodes = 16;
  Index window_len = 25;
  double noise_var = 1.0;
  double kernel_bandwidth = 1.5;
  double ar_coef = 0.9;
  double amplitude_ratio = 5.0;
  double nontarget_amp = 0.3;
  // Target bump: centered at bump_center (fraction of the window) with
  // standard deviation bump_width samples.
  double bump_center = 0.6;
  double bump_width = 2.0;

  void validate() const;
  Index num_features() const { return n_electrodes * window_len; }
};

enum class Label { kNontarget = 0, kTarget = 1 };

struct EEGEpoch {
  MatrixXd values;  // n_electrodes x window_len
  Label label = Label::kNontarget;
};

// Spatial correlation matrix over the electrode grid.
MatrixXd spatial_kernel(const EEGConfig& cfg);

// Noise-free signal for a label.
MatrixXd epoch_template(const EEGConfig& cfg, Label label);

class EpochGenerator {
 public:
  explicit EpochGenerator(const EEGConfig& cfg);

  const EEGConfig& config() const { return cfg_; }
  EEGEpoch generate(Label label, RngStream& rng) const;
  // Noise only.
  MatrixXd noise(RngStream& rng) const;

 private:
  EEGConfig cfg_;
  MatrixXd chol_;
  MatrixXd target_;
  MatrixXd nontarget_;
};

EEGEpoch generate_epoch(const EEGConfig& cfg, Label label, RngStream& rng);

// Flattened epochs (electrode-major: feature e * window_len + t) and labels.
struct EpochSet {
  Index n_electrodes = 0;
  Index window_len = 0;
  MatrixXd features;  // one row per epoch
  std::vector<Label> labels;

  Index size() const { return features.rows(); }
  Index count(Label label) const;
};

// n_target target epochs followed by n_nontarget nontarget epochs.
EpochSet generate_calibration(const EEGConfig& cfg, Index n_target,
                              Index n_nontarget, RngStream& rng);

void save_calibration(const EpochSet& data, const std::string& path);
EpochSet load_calibration(const std::string& path);

struct CalibStats {
  double target_mean = 0.0;
  double target_var = 0.0;
  double nontarget_mean = 0.0;
  double nontarget_var = 0.0;

  double gap() const { return target_mean - nontarget_mean; }
  double pooled_var() const { return 0.5 * (target_var + nontarget_var); }
  double standardized_gap() const;
};

struct SWLDAModel {
  Index n_electrodes = 0;
  Index window_len = 0;
  std::vector<Index> selected;  // flattened feature indices
  VectorXd weights;
  double intercept = 0.0;
  CalibStats calib;
  double holdout_auc = 0.5;
};

struct SWLDAOptions {
  double p_enter = 0.10;
  double p_remove = 0.15;
  Index max_features = 60;
  // Every k-th epoch (k = 1 / holdout_fraction) is held out for calibration.
  double holdout_fraction = 0.2;
};

// Forward-backward stepwise least squares of +/-1 labels on the features:
// enter the candidate with the smallest partial-F p-value below p_enter,
// then drop included features whose p-value exceeds p_remove, until neither
// applies or max_features are in. Calibration statistics and the held-out
// AUC come from the held-out split.
SWLDAModel train_swlda(const EpochSet& data, const SWLDAOptions& options = {});

double score(const SWLDAModel& model, const EEGEpoch& epoch);
double score_features(const SWLDAModel& model,
                      const Eigen::Ref<const VectorXd>& flat);

void save_model(const SWLDAModel& model, const std::string& path);
SWLDAModel load_model(const std::string& path);

// Flashing `pulled` while the user attends `target_word`: a target epoch if
// they coincide, otherwise a nontarget epoch; returns the classifier score.
double p300_reward_channel(const SWLDAModel& model, const EpochGenerator& gen,
                           Index target_word, Index pulled, RngStream& rng);

}  // namespace stts::p300
