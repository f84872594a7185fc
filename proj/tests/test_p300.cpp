#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <vector>

#include "doctest.h"

#include "stts/p300.hpp"
#include "stts/rng.hpp"
#include "stts/stats.hpp"

using namespace stts;
using namespace stts::p300;

TEST_CASE("noise is AR(1) in time with unit variance") {
  EEGConfig cfg;
  const EpochGenerator gen(cfg);
  RngStream rng(7);
  double lag0 = 0.0, lag1 = 0.0;
  Index n0 = 0, n1 = 0;
  for (int rep = 0; rep < 2000; ++rep) {
    const MatrixXd z = gen.noise(rng);
    for (Index e = 0; e < z.rows(); ++e) {
      for (Index t = 0; t < z.cols(); ++t) {
        lag0 += z(e, t) * z(e, t);
        ++n0;
        if (t > 0) {
          lag1 += z(e, t) * z(e, t - 1);
          ++n1;
        }
      }
    }
  }
  CHECK(lag0 / n0 == doctest::Approx(1.0).epsilon(0.03));
  CHECK(std::abs((lag1 / n1) / (lag0 / n0) - 0.9) < 0.02);
}

TEST_CASE("neighbouring electrodes are correlated through the kernel") {
  EEGConfig cfg;
  const MatrixXd K = spatial_kernel(cfg);
  CHECK(K(0, 0) == 1.0);
  CHECK(K(0, 1) == doctest::Approx(std::exp(-1.0 / (2.0 * 2.25))));
  CHECK(K(0, 5) == doctest::Approx(std::exp(-2.0 / (2.0 * 2.25))));
  CHECK(K.isApprox(K.transpose()));

  const EpochGenerator gen(cfg);
  RngStream rng(9);
  double cov = 0.0, var = 0.0;
  const int n = 20000;
  for (int rep = 0; rep < n; ++rep) {
    const MatrixXd z = gen.noise(rng);
    cov += z(0, 0) * z(1, 0);
    var += z(0, 0) * z(0, 0);
  }
  CHECK(std::abs(cov / var - K(0, 1)) < 0.03);
}

TEST_CASE("target template peaks at the amplitude ratio") {
  EEGConfig cfg;
  const MatrixXd target = epoch_template(cfg, Label::kTarget);
  const MatrixXd nontarget = epoch_template(cfg, Label::kNontarget);
  CHECK(target.maxCoeff() / nontarget.maxCoeff() == doctest::Approx(5.0));
  CHECK(nontarget.minCoeff() == nontarget.maxCoeff());
  cfg.noise_var = 0.0;
  RngStream rng(1);
  CHECK(generate_epoch(cfg, Label::kTarget, rng).values == target);
}

TEST_CASE("stepwise LDA separates targets and fails on shuffled labels") {
  EEGConfig cfg;
  RngStream rng(41);
  EpochSet data = generate_calibration(cfg, 300, 1500, rng);
  CHECK(data.count(Label::kTarget) == 300);
  const SWLDAModel model = train_swlda(data);
  CHECK(model.holdout_auc > 0.9);
  CHECK(model.calib.gap() > 0.0);
  CHECK(!model.selected.empty());
  CHECK(Index(model.selected.size()) <= 60);

  // score and score_features agree
  RngStream probe(3);
  const EEGEpoch epoch = EpochGenerator(cfg).generate(Label::kTarget, probe);
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = epoch.values;
  const VectorXd flat = Eigen::Map<const VectorXd>(rm.data(), rm.size());
  CHECK(score(model, epoch) == doctest::Approx(score_features(model, flat)));

  RngStream shuffle(5);
  std::shuffle(data.labels.begin(), data.labels.end(), shuffle.engine());
  double permuted_auc = 0.5;
  try {
    permuted_auc = train_swlda(data).holdout_auc;
  } catch (const InvalidArgument&) {
    // nothing entered the model: chance performance
  }
  CHECK(permuted_auc >= 0.4);
  CHECK(permuted_auc <= 0.6);
}

TEST_CASE("separation falls as noise grows") {
  double last = 1e9;
  for (double v : {0.5, 1.0, 2.5}) {
    EEGConfig cfg;
    cfg.noise_var = v;
    RngStream rng(12);
    const SWLDAModel model = train_swlda(generate_calibration(cfg, 300, 1500, rng));
    CHECK(model.calib.standardized_gap() < last);
    last = model.calib.standardized_gap();
  }
}

TEST_CASE("model and calibration files round trip") {
  EEGConfig cfg;
  cfg.n_electrodes = 4;
  cfg.window_len = 10;
  RngStream rng(2);
  const EpochSet data = generate_calibration(cfg, 100, 300, rng);
  const SWLDAModel model = train_swlda(data);
  const std::string mpath = "/tmp/stts_test_model.txt";
  save_model(model, mpath);
  const SWLDAModel back = load_model(mpath);
  CHECK(back.selected == model.selected);
  CHECK(back.weights.isApprox(model.weights, 1e-14));
  CHECK(back.intercept == model.intercept);
  CHECK(back.calib.gap() == doctest::Approx(model.calib.gap()));

  const std::string cpath = "/tmp/stts_test_calib.txt";
  save_calibration(data, cpath);
  const EpochSet cback = load_calibration(cpath);
  CHECK(cback.labels == data.labels);
  CHECK(cback.features.isApprox(data.features, 1e-12));
  std::remove(mpath.c_str());
  std::remove(cpath.c_str());
  CHECK_THROWS_AS(load_model("/nonexistent/model.txt"), FormatError);
}

TEST_CASE("reward channel labels by target") {
  EEGConfig cfg;
  cfg.noise_var = 0.0;
  RngStream rng(4);
  EEGConfig noisy;
  const SWLDAModel model = train_swlda(generate_calibration(noisy, 200, 800, rng));
  const EpochGenerator gen(cfg);
  const double hit = p300_reward_channel(model, gen, 3, 3, rng);
  const double miss = p300_reward_channel(model, gen, 3, 4, rng);
  CHECK(hit > miss);
}

TEST_CASE("stats helpers") {
  CHECK(auc({1.0, 2.0}, {0.0, 0.5}) == 1.0);
  CHECK(auc({1.0}, {1.0}) == 0.5);
  CHECK(spearman({1, 2, 3, 4}, {10, 20, 25, 40}) == doctest::Approx(1.0));
  CHECK(spearman({1, 2, 3, 4}, {4, 3, 2, 1}) == doctest::Approx(-1.0));
  // I_x(1, 1) = x and I_x(2, 1) = x^2
  CHECK(regularized_incomplete_beta(1.0, 1.0, 0.3) == doctest::Approx(0.3));
  CHECK(regularized_incomplete_beta(2.0, 1.0, 0.3) == doctest::Approx(0.09));
  // F(1, d) tail equals the two-sided t tail; F = 4, d = inf-ish -> ~0.0455
  CHECK(f_test_p_value(4.0, 1.0, 1e6) == doctest::Approx(0.0455).epsilon(1e-2));
  CHECK(sample_variance({1.0, 3.0}) == 2.0);
}
