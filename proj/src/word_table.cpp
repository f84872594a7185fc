#include "stts/word_table.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>

#include "json.hpp"

namespace stts {

using json = nlohmann::json;

namespace {

void check_distribution(const VectorXd& row, const std::string& what) {
  for (Index i = 0; i < row.size(); ++i) {
    if (!std::isfinite(row(i)) || row(i) < 0.0) {
      throw FormatError(what + ": entries must be finite and nonnegative");
    }
  }
  if (std::abs(row.sum() - 1.0) > 1e-6) {
    throw FormatError(what + ": probabilities sum to " +
                      std::to_string(row.sum()));
  }
}

// Applies the load-time tolerance rule in place.
void renormalize(VectorXd& row, const std::string& what) {
  const double total = row.sum();
  if (std::abs(total - 1.0) > kRowSumTolerance) {
    std::ostringstream os;
    os << what << ": probabilities sum to " << std::setprecision(10) << total
       << " (tolerance " << kRowSumTolerance << ")";
    throw FormatError(os.str());
  }
  row /= total;
}

double probability_value(const json& value, const std::string& what) {
  if (!value.is_number()) throw FormatError(what + ": not a number");
  const double x = value.get<double>();
  if (!std::isfinite(x) || x < 0.0 || x > 1.0 + kRowSumTolerance) {
    throw FormatError(what + ": not a probability");
  }
  return x;
}

}  // namespace

WordModelTable::WordModelTable(std::vector<std::string> vocab,
                               VectorXd initial, MatrixXd transitions,
                               Index cap)
    : vocab_(std::move(vocab)),
      initial_(std::move(initial)),
      transitions_(std::move(transitions)) {
  const Index J = size();
  if (J < 1) throw FormatError("word table: empty vocabulary");
  if (J > cap) {
    throw FormatError("word table: vocabulary of " + std::to_string(J) +
                      " words exceeds cap " + std::to_string(cap));
  }
  for (Index i = 0; i < J; ++i) {
    if (!index_.emplace(vocab_[i], i).second) {
      throw FormatError("word table: duplicate vocabulary word '" + vocab_[i] +
                        "'");
    }
  }
  if (initial_.size() != J || transitions_.rows() != J ||
      transitions_.cols() != J) {
    throw FormatError("word table: dimensions do not match vocabulary");
  }
  check_distribution(initial_, "word table initial");
  for (Index i = 0; i < J; ++i) {
    check_distribution(transitions_.row(i).transpose(),
                       "word table row '" + vocab_[i] + "'");
  }
}

VectorXd WordModelTable::row(Index context) const {
  require_arm(context, size(), "WordModelTable::row");
  return transitions_.row(context).transpose();
}

Index WordModelTable::index_of(const std::string& word) const {
  const auto it = index_.find(word);
  return it == index_.end() ? Index{-1} : it->second;
}

WordModelTable parse_word_table(const std::string& text, Index cap) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("word table: ") + e.what());
  }
  if (!doc.is_object()) throw FormatError("word table: top level must be an object");
  for (const char* key : {"vocab", "initial", "transitions"}) {
    if (!doc.contains(key)) {
      throw FormatError(std::string("word table: missing field '") + key + "'");
    }
  }
  const json& jvocab = doc["vocab"];
  if (!jvocab.is_array()) throw FormatError("word table: 'vocab' must be a list");
  std::vector<std::string> vocab;
  for (const auto& w : jvocab) {
    if (!w.is_string()) throw FormatError("word table: vocab entries must be strings");
    vocab.push_back(w.get<std::string>());
  }
  const Index J = static_cast<Index>(vocab.size());
  if (J > cap) {
    throw FormatError("word table: vocabulary of " + std::to_string(J) +
                      " words exceeds cap " + std::to_string(cap));
  }
  std::unordered_map<std::string, Index> index;
  for (Index i = 0; i < J; ++i) index.emplace(vocab[i], i);

  const json& jinit = doc["initial"];
  if (!jinit.is_array() || static_cast<Index>(jinit.size()) != J) {
    throw FormatError("word table: 'initial' must list one probability per word");
  }
  VectorXd initial(J);
  for (Index i = 0; i < J; ++i) {
    initial(i) = probability_value(jinit[i], "word table initial");
  }
  renormalize(initial, "word table initial");

  const json& jtrans = doc["transitions"];
  if (!jtrans.is_object()) throw FormatError("word table: 'transitions' must be a map");
  MatrixXd transitions = MatrixXd::Zero(J, J);
  for (auto it = jtrans.begin(); it != jtrans.end(); ++it) {
    const auto ctx = index.find(it.key());
    if (ctx == index.end()) {
      throw FormatError("word table: transition context '" + it.key() +
                        "' is not in the vocabulary");
    }
    if (!it.value().is_object()) {
      throw FormatError("word table: row '" + it.key() + "' must be a map");
    }
    for (auto cell = it.value().begin(); cell != it.value().end(); ++cell) {
      const auto next = index.find(cell.key());
      if (next == index.end()) {
        throw FormatError("word table: row '" + it.key() + "' names unknown word '" +
                          cell.key() + "'");
      }
      transitions(ctx->second, next->second) =
          probability_value(cell.value(), "word table row '" + it.key() + "'");
    }
  }
  for (Index i = 0; i < J; ++i) {
    if (!jtrans.contains(vocab[i])) {
      throw FormatError("word table: missing transition row for '" + vocab[i] + "'");
    }
    VectorXd row = transitions.row(i).transpose();
    renormalize(row, "word table row '" + vocab[i] + "'");
    transitions.row(i) = row.transpose();
  }
  return WordModelTable(std::move(vocab), std::move(initial),
                        std::move(transitions), cap);
}

WordModelTable load_word_table(const std::string& path, Index cap) {
  std::ifstream in(path);
  if (!in) throw FormatError("word table: cannot open '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_word_table(buffer.str(), cap);
}

std::string dump_word_table(const WordModelTable& table) {
  json doc;
  doc["vocab"] = table.vocab();
  json initial = json::array();
  for (Index i = 0; i < table.size(); ++i) initial.push_back(table.initial()(i));
  doc["initial"] = initial;
  json transitions = json::object();
  for (Index i = 0; i < table.size(); ++i) {
    json row = json::object();
    for (Index j = 0; j < table.size(); ++j) {
      const double q = table.transitions()(i, j);
      if (q > 0.0) row[table.vocab()[j]] = q;
    }
    transitions[table.vocab()[i]] = row;
  }
  doc["transitions"] = transitions;
  return doc.dump(1) + "\n";
}

void save_word_table(const WordModelTable& table, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw FormatError("word table: cannot write '" + path + "'");
  out << dump_word_table(table);
}

WordModelTable synthesize_word_table(Index num_words, double zipf_exponent,
                                     RngStream& rng) {
  require(num_words >= 2, "synthesize_word_table: need at least two words");
  require(zipf_exponent > 0.0, "synthesize_word_table: exponent must be positive");
  std::vector<std::string> vocab;
  vocab.reserve(num_words);
  for (Index i = 0; i < num_words; ++i) {
    char name[24];
    std::snprintf(name, sizeof(name), "w%03ld", static_cast<long>(i + 1));
    vocab.emplace_back(name);
  }
  VectorXd zipf(num_words);
  for (Index r = 0; r < num_words; ++r) {
    zipf(r) = std::pow(static_cast<double>(r + 1), -zipf_exponent);
  }
  zipf /= zipf.sum();

  auto permuted_row = [&]() {
    std::vector<Index> order(num_words);
    std::iota(order.begin(), order.end(), Index{0});
    std::shuffle(order.begin(), order.end(), rng.engine());
    VectorXd row(num_words);
    for (Index r = 0; r < num_words; ++r) row(order[r]) = zipf(r);
    return row;
  };

  VectorXd initial = permuted_row();
  MatrixXd transitions(num_words, num_words);
  for (Index i = 0; i < num_words; ++i) transitions.row(i) = permuted_row().transpose();
  return WordModelTable(std::move(vocab), std::move(initial),
                        std::move(transitions), num_words);
}

}  // namespace stts
