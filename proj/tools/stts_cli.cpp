// Command-line front end: run, sweep, bound, allocation, gen-calibration,
// validate-table, synth-table.

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "stts/harness.hpp"
#include "stts/p300.hpp"
#include "stts/priors.hpp"
#include "stts/theory.hpp"
#include "stts/word_table.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace stts;

namespace {

// Every config key becomes a flag of the same name. Values are parsed as
// JSON where the key is non-string, so `--sigma0 0.5` and `--sigma0 null`
// both work.
struct ConfigFlags {
  std::string config_path;
  std::map<std::string, std::string> values;

  void attach(CLI::App* app) {
    app->add_option("-c,--config", config_path, "JSON config file");
    const json defaults = to_json(ExperimentConfig{});
    for (auto it = defaults.begin(); it != defaults.end(); ++it) {
      app->add_option("--" + it.key(), values[it.key()], "config key " + it.key());
    }
  }

  json resolve() const {
    json j = json::object();
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      if (!in) throw FormatError("config: cannot open '" + config_path + "'");
      in >> j;
    }
    const json defaults = to_json(ExperimentConfig{});
    for (const auto& [key, text] : values) {
      if (text.empty()) continue;
      if (defaults.at(key).is_string()) {
        j[key] = text;
      } else {
        try {
          j[key] = json::parse(text);
        } catch (const json::exception&) {
          throw InvalidArgument("--" + key + ": cannot parse '" + text + "'");
        }
      }
    }
    return j;
  }
};

std::vector<std::string> split(const std::string& s, char sep = ',') {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::ofstream open_output(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write '" + path.string() + "'");
  return out;
}

int cmd_run(const ConfigFlags& flags) {
  const ExperimentConfig cfg = config_from_json(flags.resolve());
  const ExperimentResult res = run_experiment(cfg);
  const fs::path dir(cfg.output);
  auto results = open_output(dir / "results.csv");
  write_results_header(results);
  write_results(results, cfg, res.runs);
  auto summary = open_output(dir / "summary.csv");
  write_summary_header(summary);
  write_summary(summary, cfg, res.metrics);
  const Metrics& m = res.metrics;
  std::cout << to_string(cfg.algorithm) << ": avg_accuracy " << m.avg_accuracy
            << ", zero_one_accuracy " << m.zero_one_accuracy << ", mean total steps "
            << m.mean_total_steps << " (sd " << m.sd_total_steps << ")";
  if (m.capped_tasks > 0) std::cout << ", capped tasks " << m.capped_tasks;
  std::cout << "\nwrote " << (dir / "results.csv").string() << " and "
            << (dir / "summary.csv").string() << "\n";
  return 0;
}

int cmd_sweep(const ConfigFlags& flags, const std::string& axis,
              const std::string& values_text, const std::string& algorithms_text) {
  const json base = flags.resolve();
  std::vector<json> values;
  for (const auto& v : split(values_text)) {
    try {
      values.push_back(json::parse(v));
    } catch (const json::exception&) {
      values.push_back(v);
    }
  }
  std::vector<Algorithm> algorithms;
  for (const auto& a : split(algorithms_text)) algorithms.push_back(algorithm_from_string(a));
  const auto rows = sweep(base, axis, values, algorithms);
  const ExperimentConfig probe = config_from_json(base);
  const fs::path path = fs::path(probe.output) / "sweep.csv";
  auto out = open_output(path);
  write_sweep(out, rows);
  std::cout << "wrote " << rows.size() << " rows to " << path.string() << "\n";
  return 0;
}

int cmd_bound(Index n, Index J, Index M, double gap, double entropy, double p,
              double cost) {
  BoundInputs in;
  in.n = n;
  in.J = J;
  in.mistake_cost = cost;
  in.gaps = VectorXd::Constant(M, gap);
  const double h = p >= 0.0 ? conditional_entropy(markov_next_dist(0, MarkovPrior(p, J)))
                            : entropy;
  in.entropies = VectorXd::Constant(M, h);
  const BoundTerms terms = theorem1_bound(in);
  const OracleBound oracle = oracle_bound(in);
  std::cout << std::setprecision(10) << "entropy " << h << "\nmain " << terms.main_term
            << "\nremainder " << terms.remainder_term << "\ntotal " << terms.total
            << "\noracle_error_sum " << oracle.error_sum << "\noracle_mistake_cost "
            << oracle.expected_mistake_cost << "\n";
  return 0;
}

int cmd_gen_calibration(const ConfigFlags& flags, const std::string& data_path,
                        const std::string& model_path) {
  const ExperimentConfig cfg = config_from_json(flags.resolve());
  p300::EEGConfig eeg = cfg.eeg;
  eeg.noise_var = cfg.sigma_eeg;
  RngStream rng(cfg.master_seed, {0, 0, Purpose::kCalibration});
  const auto data = p300::generate_calibration(eeg, cfg.n_calib_target, cfg.n_calib_nontarget, rng);
  if (!data_path.empty()) {
    if (fs::path(data_path).has_parent_path()) fs::create_directories(fs::path(data_path).parent_path());
    p300::save_calibration(data, data_path);
  }
  const auto model = p300::train_swlda(data, cfg.swlda);
  if (!model_path.empty()) {
    if (fs::path(model_path).has_parent_path()) fs::create_directories(fs::path(model_path).parent_path());
    p300::save_model(model, model_path);
  }
  std::cout << "epochs " << data.size() << "\nselected features " << model.selected.size()
            << "\nholdout_auc " << model.holdout_auc << "\ntarget score mean "
            << model.calib.target_mean << " var " << model.calib.target_var
            << "\nnontarget score mean " << model.calib.nontarget_mean << " var "
            << model.calib.nontarget_var << "\nstandardized gap "
            << model.calib.standardized_gap() << "\n";
  return 0;
}

int cmd_validate_table(const std::string& path, Index cap) {
  try {
    const WordModelTable table = load_word_table(path, cap);
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0, sum = 0.0;
    for (Index i = 0; i < table.size(); ++i) {
      const double h = conditional_entropy(table.row(i));
      lo = std::min(lo, h);
      hi = std::max(hi, h);
      sum += h;
    }
    std::cout << "ok: " << table.size() << " words; row entropy (nats) min " << lo
              << " mean " << sum / double(table.size()) << " max " << hi << " (uniform "
              << std::log(double(table.size())) << ")\n";
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "invalid: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sequential top-two Thompson sampling experiments"};
  app.require_subcommand(1);

  ConfigFlags run_flags;
  auto* run = app.add_subcommand("run", "run one experiment and write results.csv, summary.csv");
  run_flags.attach(run);

  ConfigFlags sweep_flags;
  std::string axis, values, algorithms = "stts,vtts";
  auto* sw = app.add_subcommand("sweep", "cross product of one axis and algorithms");
  sweep_flags.attach(sw);
  sw->add_option("--axis", axis, "config key to vary")->required();
  sw->add_option("--values", values, "comma-separated values")->required();
  sw->add_option("--algorithms", algorithms, "comma-separated algorithms");

  Index bn = 1000, bJ = 10, bM = 20;
  double bgap = 2.0, bentropy = 0.0, bp = -1.0, bcost = 1.0;
  auto* bound = app.add_subcommand("bound", "print the error-bound terms");
  bound->add_option("-n,--n", bn, "budget per task");
  bound->add_option("--J", bJ, "number of arms");
  bound->add_option("--M", bM, "number of tasks");
  bound->add_option("--gap", bgap, "gap for every task");
  auto* ent = bound->add_option("--entropy", bentropy, "conditional entropy (nats) per task");
  bound->add_option("--p", bp, "Markov prior strength; sets the entropy")->excludes(ent);
  bound->add_option("--mistake_cost", bcost, "cost c per wrong recommendation");

  AllocationConfig acfg;
  std::string a_p = "0.1,0.5,0.9", a_out = "out/allocation.csv";
  auto* alloc = app.add_subcommand("allocation", "allocation-rule KL study");
  alloc->add_option("--J", acfg.J);
  alloc->add_option("--p", a_p, "comma-separated prior strengths");
  alloc->add_option("--B", acfg.B);
  alloc->add_option("--gap", acfg.prior.gap);
  alloc->add_option("--sigma0", acfg.prior.sigma0);
  alloc->add_option("--mu", acfg.prior.mu);
  alloc->add_option("--beta", acfg.top_two.beta);
  alloc->add_option("--master_seed", acfg.master_seed);
  alloc->add_option("--output", a_out, "CSV path");

  ConfigFlags calib_flags;
  std::string calib_out, model_out;
  auto* calib = app.add_subcommand("gen-calibration", "simulate calibration epochs and train SWLDA");
  calib_flags.attach(calib);
  calib->add_option("--data", calib_out, "calibration table path");
  calib->add_option("--model", model_out, "model table path");

  std::string table_path;
  Index cap = WordModelTable::kDefaultCap;
  auto* validate = app.add_subcommand("validate-table", "check a word-table file");
  validate->add_option("path", table_path)->required();
  validate->add_option("--cap", cap, "maximum vocabulary size");

  Index sJ = 100;
  double zipf = 1.1;
  std::uint64_t sseed = 1;
  std::string s_out = "data/word_table.json";
  auto* synth = app.add_subcommand("synth-table", "write a synthetic Zipf word table");
  synth->add_option("--J", sJ);
  synth->add_option("--zipf", zipf);
  synth->add_option("--seed", sseed);
  synth->add_option("--output", s_out);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(run_flags);
    if (*sw) return cmd_sweep(sweep_flags, axis, values, algorithms);
    if (*bound) return cmd_bound(bn, bJ, bM, bgap, bentropy, bp, bcost);
    if (*alloc) {
      acfg.p_values.clear();
      for (const auto& v : split(a_p)) acfg.p_values.push_back(std::stod(v));
      const auto rows = allocation_study(acfg);
      auto out = open_output(a_out);
      write_allocation(out, rows);
      std::cout << "wrote " << rows.size() << " rows to " << a_out << "\n";
      return 0;
    }
    if (*calib) return cmd_gen_calibration(calib_flags, calib_out, model_out);
    if (*validate) return cmd_validate_table(table_path, cap);
    if (*synth) {
      RngStream rng(sseed, {0, 0, Purpose::kMisc});
      const WordModelTable table = synthesize_word_table(sJ, zipf, rng);
      if (fs::path(s_out).has_parent_path()) fs::create_directories(fs::path(s_out).parent_path());
      save_word_table(table, s_out);
      std::cout << "wrote " << s_out << "\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
