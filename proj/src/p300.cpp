#include "stts/p300.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include <Eigen/QR>

#include "stts/stats.hpp"

namespace stts::p300 {

void EEGConfig::validate() const {
  require(n_electrodes >= 1, "EEGConfig: need at least one electrode");
  require(window_len >= 2, "EEGConfig: window_len must be >= 2");
  require(noise_var >= 0.0, "EEGConfig: noise_var must be nonnegative");
  require(kernel_bandwidth > 0.0, "EEGConfig: kernel_bandwidth must be positive");
  require(std::abs(ar_coef) < 1.0, "EEGConfig: |ar_coef| must be < 1");
  require(amplitude_ratio > 0.0 && nontarget_amp > 0.0,
          "EEGConfig: amplitudes must be positive");
  require(bump_width > 0.0, "EEGConfig: bump_width must be positive");
  require(bump_center >= 0.0 && bump_center <= 1.0,
          "EEGConfig: bump_center must lie in [0, 1]");
}

MatrixXd spatial_kernel(const EEGConfig& cfg) {
  const Index E = cfg.n_electrodes;
  const auto side = static_cast<Index>(std::ceil(std::sqrt(double(E))));
  MatrixXd K(E, E);
  for (Index a = 0; a < E; ++a) {
    for (Index b = 0; b < E; ++b) {
      const double dx = double(a % side - b % side);
      const double dy = double(a / side - b / side);
      K(a, b) = std::exp(-(dx * dx + dy * dy) /
                         (2.0 * cfg.kernel_bandwidth * cfg.kernel_bandwidth));
    }
  }
  return K;
}

MatrixXd epoch_template(const EEGConfig& cfg, Label label) {
  MatrixXd tmpl = MatrixXd::Constant(cfg.n_electrodes, cfg.window_len, cfg.nontarget_amp);
  if (label == Label::kTarget) {
    const double center = std::round(cfg.bump_center * double(cfg.window_len - 1));
    for (Index t = 0; t < cfg.window_len; ++t) {
      const double d = (double(t) - center) / cfg.bump_width;
      const double bump = std::exp(-0.5 * d * d);
      tmpl.col(t).array() *= 1.0 + (cfg.amplitude_ratio - 1.0) * bump;
    }
  }
  return tmpl;
}

EpochGenerator::EpochGenerator(const EEGConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  MatrixXd K = spatial_kernel(cfg_);
  Eigen::LLT<MatrixXd> llt(K);
  double jitter = 1e-12;
  while (llt.info() != Eigen::Success) {
    require(jitter < 1e-3, "EpochGenerator: spatial kernel is not positive definite");
    K.diagonal().array() += jitter;
    llt.compute(K);
    jitter *= 10.0;
  }
  chol_ = llt.matrixL();
  target_ = epoch_template(cfg_, Label::kTarget);
  nontarget_ = epoch_template(cfg_, Label::kNontarget);
}

MatrixXd EpochGenerator::noise(RngStream& rng) const {
  const Index E = cfg_.n_electrodes;
  const Index L = cfg_.window_len;
  const double phi = cfg_.ar_coef;
  const double innovation = std::sqrt(1.0 - phi * phi);
  MatrixXd z(E, L);
  for (Index e = 0; e < E; ++e) {
    double prev = rng.normal();
    z(e, 0) = prev;
    for (Index t = 1; t < L; ++t) {
      prev = phi * prev + innovation * rng.normal();
      z(e, t) = prev;
    }
  }
  return std::sqrt(cfg_.noise_var) * (chol_ * z);
}

EEGEpoch EpochGenerator::generate(Label label, RngStream& rng) const {
  EEGEpoch epoch;
  epoch.label = label;
  const MatrixXd& tmpl = label == Label::kTarget ? target_ : nontarget_;
  epoch.values = cfg_.noise_var > 0.0 ? MatrixXd(tmpl + noise(rng)) : tmpl;
  return epoch;
}

EEGEpoch generate_epoch(const EEGConfig& cfg, Label label, RngStream& rng) {
  return EpochGenerator(cfg).generate(label, rng);
}

Index EpochSet::count(Label label) const {
  Index n = 0;
  for (Label l : labels) n += (l == label);
  return n;
}

namespace {

VectorXd flatten(const MatrixXd& values) {
  // Electrode-major: row e occupies [e * L, (e + 1) * L).
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = values;
  return Eigen::Map<const VectorXd>(rm.data(), rm.size());
}

}  // namespace

EpochSet generate_calibration(const EEGConfig& cfg, Index n_target,
                              Index n_nontarget, RngStream& rng) {
  require(n_target >= 1 && n_nontarget >= 1,
          "generate_calibration: both counts must be >= 1");
  const EpochGenerator gen(cfg);
  EpochSet set;
  set.n_electrodes = cfg.n_electrodes;
  set.window_len = cfg.window_len;
  set.features.resize(n_target + n_nontarget, cfg.num_features());
  Index row = 0;
  for (Label label : {Label::kTarget, Label::kNontarget}) {
    const Index n = label == Label::kTarget ? n_target : n_nontarget;
    for (Index i = 0; i < n; ++i, ++row) {
      set.features.row(row) = flatten(gen.generate(label, rng).values).transpose();
      set.labels.push_back(label);
    }
  }
  return set;
}

void save_calibration(const EpochSet& data, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw FormatError("calibration: cannot write '" + path + "'");
  out << "# electrodes " << data.n_electrodes << " window " << data.window_len << "\n";
  out << std::setprecision(17);
  for (Index i = 0; i < data.size(); ++i) {
    out << (data.labels[i] == Label::kTarget ? 1 : 0);
    for (Index f = 0; f < data.features.cols(); ++f) out << ' ' << data.features(i, f);
    out << '\n';
  }
}

EpochSet load_calibration(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("calibration: cannot open '" + path + "'");
  std::string line;
  EpochSet set;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    if (line[0] == '#') {
      std::string tag;
      ls >> tag >> tag >> set.n_electrodes >> tag >> set.window_len;
      continue;
    }
    int label = -1;
    ls >> label;
    if (label != 0 && label != 1) throw FormatError("calibration: bad label in '" + path + "'");
    std::vector<double> values;
    double v;
    while (ls >> v) values.push_back(v);
    if (static_cast<Index>(values.size()) != set.n_electrodes * set.window_len) {
      throw FormatError("calibration: row has " + std::to_string(values.size()) +
                        " values, expected " +
                        std::to_string(set.n_electrodes * set.window_len));
    }
    set.labels.push_back(label == 1 ? Label::kTarget : Label::kNontarget);
    rows.push_back(std::move(values));
  }
  set.features.resize(static_cast<Index>(rows.size()), set.n_electrodes * set.window_len);
  for (Index i = 0; i < set.features.rows(); ++i) {
    set.features.row(i) = Eigen::Map<const VectorXd>(rows[i].data(), set.features.cols()).transpose();
  }
  return set;
}

double CalibStats::standardized_gap() const {
  const double sd = std::sqrt(pooled_var());
  return sd > 0.0 ? gap() / sd : std::numeric_limits<double>::infinity();
}

namespace {

// Incremental stepwise regression state over centered training data.
class Stepwise {
 public:
  Stepwise(MatrixXd X, VectorXd y) : X_(std::move(X)), y_(std::move(y)) {
    norms_ = X_.colwise().squaredNorm().transpose();
    rebuild();
  }

  const std::vector<Index>& selected() const { return selected_; }
  Index n() const { return X_.rows(); }
  double rss() const { return e_.squaredNorm(); }

  // Best entering candidate and its p-value; -1 if none is admissible.
  std::pair<Index, double> best_entry() const {
    const double k = double(selected_.size());
    const double df = double(n()) - k - 2.0;
    if (df < 1.0) return {-1, 1.0};
    const VectorXd rr = R_.colwise().squaredNorm().transpose();
    const VectorXd re = R_.transpose() * e_;
    const double rss_now = rss();
    Index best = -1;
    double best_f = -1.0;
    for (Index c = 0; c < X_.cols(); ++c) {
      if (norms_(c) <= 1e-12 || in_model(c)) continue;
      if (rr(c) <= 1e-10 * norms_(c)) continue;
      const double gain = re(c) * re(c) / rr(c);
      const double f = gain / std::max((rss_now - gain) / df, 1e-300);
      if (f > best_f) {
        best_f = f;
        best = c;
      }
    }
    if (best < 0) return {-1, 1.0};
    return {best, f_test_p_value(best_f, 1.0, df)};
  }

  // Worst included feature (largest p-value) for removal.
  std::pair<Index, double> worst_included() const {
    if (selected_.empty()) return {-1, 0.0};
    const Index k = static_cast<Index>(selected_.size());
    const double df = double(n()) - double(k) - 1.0;
    const MatrixXd XS = columns();
    const MatrixXd gram = XS.transpose() * XS;
    Eigen::LDLT<MatrixXd> ldlt(gram);
    const VectorXd coef = ldlt.solve(XS.transpose() * y_);
    const MatrixXd inv = ldlt.solve(MatrixXd::Identity(k, k));
    const double sigma2 = rss() / df;
    Index worst = -1;
    double worst_p = -1.0;
    for (Index j = 0; j < k; ++j) {
      const double f = coef(j) * coef(j) / std::max(sigma2 * inv(j, j), 1e-300);
      const double p = f_test_p_value(f, 1.0, df);
      if (p > worst_p) {
        worst_p = p;
        worst = j;
      }
    }
    return {worst, worst_p};
  }

  void add(Index c) {
    const double norm = std::sqrt(R_.col(c).squaredNorm());
    const VectorXd q = R_.col(c) / norm;
    e_ -= q * q.dot(e_);
    R_ -= q * (q.transpose() * R_);
    selected_.push_back(c);
  }

  void remove_at(Index position) {
    selected_.erase(selected_.begin() + position);
    rebuild();
  }

  VectorXd coefficients() const {
    const MatrixXd XS = columns();
    return XS.householderQr().solve(y_);
  }

 private:
  bool in_model(Index c) const {
    for (Index s : selected_) {
      if (s == c) return true;
    }
    return false;
  }

  MatrixXd columns() const {
    MatrixXd XS(X_.rows(), static_cast<Index>(selected_.size()));
    for (std::size_t j = 0; j < selected_.size(); ++j) XS.col(Index(j)) = X_.col(selected_[j]);
    return XS;
  }

  void rebuild() {
    e_ = y_;
    R_ = X_;
    if (selected_.empty()) return;
    const MatrixXd XS = columns();
    Eigen::HouseholderQR<MatrixXd> qr(XS);
    const MatrixXd Q = qr.householderQ() * MatrixXd::Identity(XS.rows(), XS.cols());
    e_ -= Q * (Q.transpose() * y_);
    R_ -= Q * (Q.transpose() * X_);
  }

  MatrixXd X_;
  VectorXd y_;
  VectorXd norms_;
  std::vector<Index> selected_;
  VectorXd e_;
  MatrixXd R_;
};

}  // namespace

SWLDAModel train_swlda(const EpochSet& data, const SWLDAOptions& options) {
  require(options.max_features >= 1, "train_swlda: max_features must be >= 1");
  require(options.holdout_fraction > 0.0 && options.holdout_fraction < 1.0,
          "train_swlda: holdout_fraction must lie in (0,1)");
  require(data.count(Label::kTarget) > 0 && data.count(Label::kNontarget) > 0,
          "train_swlda: both classes must be present");
  const auto stride = static_cast<Index>(std::llround(1.0 / options.holdout_fraction));
  std::vector<Index> train, holdout;
  for (Index i = 0; i < data.size(); ++i) {
    (i % stride == stride - 1 ? holdout : train).push_back(i);
  }
  require(static_cast<Index>(train.size()) > options.max_features + 1,
          "train_swlda: need more training epochs than max_features");

  const Index F = data.features.cols();
  MatrixXd X(static_cast<Index>(train.size()), F);
  VectorXd y(X.rows());
  for (Index r = 0; r < X.rows(); ++r) {
    X.row(r) = data.features.row(train[r]);
    y(r) = data.labels[train[r]] == Label::kTarget ? 1.0 : -1.0;
  }
  const VectorXd x_mean = X.colwise().mean().transpose();
  const double y_mean = y.mean();
  X.rowwise() -= x_mean.transpose();
  y.array() -= y_mean;

  Stepwise sw(X, y);
  const Index max_iter = 4 * options.max_features + 10;
  for (Index iter = 0; iter < max_iter; ++iter) {
    if (static_cast<Index>(sw.selected().size()) >= options.max_features) break;
    const auto [candidate, p_in] = sw.best_entry();
    if (candidate < 0 || !(p_in < options.p_enter)) break;
    sw.add(candidate);
    for (;;) {
      const auto [position, p_out] = sw.worst_included();
      if (position < 0 || !(p_out > options.p_remove)) break;
      sw.remove_at(position);
    }
  }
  if (sw.selected().empty()) {
    throw InvalidArgument("train_swlda: no feature entered the model");
  }

  SWLDAModel model;
  model.n_electrodes = data.n_electrodes;
  model.window_len = data.window_len;
  model.selected = sw.selected();
  model.weights = sw.coefficients();
  model.intercept = y_mean;
  for (std::size_t j = 0; j < model.selected.size(); ++j) {
    model.intercept -= model.weights(Index(j)) * x_mean(model.selected[j]);
  }

  std::vector<double> target_scores, nontarget_scores;
  for (Index i : holdout) {
    const double s = score_features(model, data.features.row(i).transpose());
    (data.labels[i] == Label::kTarget ? target_scores : nontarget_scores).push_back(s);
  }
  require(!target_scores.empty() && !nontarget_scores.empty(),
          "train_swlda: held-out split lacks one class");
  model.calib.target_mean = mean(target_scores);
  model.calib.target_var = sample_variance(target_scores);
  model.calib.nontarget_mean = mean(nontarget_scores);
  model.calib.nontarget_var = sample_variance(nontarget_scores);
  model.holdout_auc = auc(target_scores, nontarget_scores);
  return model;
}

double score_features(const SWLDAModel& model, const Eigen::Ref<const VectorXd>& flat) {
  double s = model.intercept;
  for (std::size_t j = 0; j < model.selected.size(); ++j) {
    s += model.weights(Index(j)) * flat(model.selected[j]);
  }
  return s;
}

double score(const SWLDAModel& model, const EEGEpoch& epoch) {
  if (epoch.values.rows() != model.n_electrodes || epoch.values.cols() != model.window_len) {
    throw InvalidArgument("score: epoch dimensions do not match the model");
  }
  double s = model.intercept;
  for (std::size_t j = 0; j < model.selected.size(); ++j) {
    const Index f = model.selected[j];
    s += model.weights(Index(j)) * epoch.values(f / model.window_len, f % model.window_len);
  }
  return s;
}

void save_model(const SWLDAModel& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw FormatError("model: cannot write '" + path + "'");
  out << std::setprecision(17);
  out << "# electrodes " << model.n_electrodes << " window " << model.window_len << "\n";
  out << "intercept " << model.intercept << "\n";
  out << "calib " << model.calib.target_mean << ' ' << model.calib.target_var << ' '
      << model.calib.nontarget_mean << ' ' << model.calib.nontarget_var << "\n";
  out << "# electrode sample weight\n";
  for (std::size_t j = 0; j < model.selected.size(); ++j) {
    const Index f = model.selected[j];
    out << to_external(f / model.window_len) << ' ' << to_external(f % model.window_len)
        << ' ' << model.weights(Index(j)) << "\n";
  }
}

SWLDAModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("model: cannot open '" + path + "'");
  SWLDAModel model;
  std::vector<double> weights;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    if (line.rfind("# electrodes", 0) == 0) {
      std::string tag;
      ls >> tag >> tag >> model.n_electrodes >> tag >> model.window_len;
    } else if (line[0] == '#') {
      continue;
    } else if (line.rfind("intercept", 0) == 0) {
      std::string tag;
      ls >> tag >> model.intercept;
    } else if (line.rfind("calib", 0) == 0) {
      std::string tag;
      ls >> tag >> model.calib.target_mean >> model.calib.target_var >>
          model.calib.nontarget_mean >> model.calib.nontarget_var;
    } else {
      Index e = 0, t = 0;
      double w = 0.0;
      if (!(ls >> e >> t >> w)) throw FormatError("model: malformed row in '" + path + "'");
      if (e < 1 || e > model.n_electrodes || t < 1 || t > model.window_len) {
        throw FormatError("model: feature index out of range in '" + path + "'");
      }
      model.selected.push_back(from_external(e) * model.window_len + from_external(t));
      weights.push_back(w);
    }
  }
  model.weights = Eigen::Map<const VectorXd>(weights.data(), Index(weights.size()));
  return model;
}

double p300_reward_channel(const SWLDAModel& model, const EpochGenerator& gen,
                           Index target_word, Index pulled, RngStream& rng) {
  const Label label = pulled == target_word ? Label::kTarget : Label::kNontarget;
  return score(model, gen.generate(label, rng));
}

}  // namespace stts::p300
