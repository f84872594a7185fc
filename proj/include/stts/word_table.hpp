#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "stts/rng.hpp"
#include "stts/types.hpp"

namespace stts {

// Order-1 next-word model over a fixed vocabulary: an initial distribution
// and one conditional row per context word. Rows of `transitions` follow
// the order of `vocab`.
class WordModelTable {
 public:
  static constexpr Index kDefaultCap = 100;

  WordModelTable() = default;
  WordModelTable(std::vector<std::string> vocab, VectorXd initial,
                 MatrixXd transitions, Index cap = kDefaultCap);

  Index size() const { return static_cast<Index>(vocab_.size()); }
  const std::vector<std::string>& vocab() const { return vocab_; }
  const VectorXd& initial() const { return initial_; }
  const MatrixXd& transitions() const { return transitions_; }
  VectorXd row(Index context) const;

  // -1 if absent.
  Index index_of(const std::string& word) const;

 private:
  std::vector<std::string> vocab_;
  std::unordered_map<std::string, Index> index_;
  VectorXd initial_;
  MatrixXd transitions_;
};

// Rows whose sum is within this distance of 1 are renormalized on load;
// anything further off is rejected.
inline constexpr double kRowSumTolerance = 1e-4;

WordModelTable parse_word_table(const std::string& text,
                                Index cap = WordModelTable::kDefaultCap);
WordModelTable load_word_table(const std::string& path,
                               Index cap = WordModelTable::kDefaultCap);
std::string dump_word_table(const WordModelTable& table);
void save_word_table(const WordModelTable& table, const std::string& path);

// Synthetic stand-in for an extracted language-model table: each row is a
// Zipf law with the given exponent over a random permutation of the
// vocabulary. Used when no extracted table is available.
WordModelTable synthesize_word_table(Index num_words, double zipf_exponent,
                                     RngStream& rng);

}  // namespace stts
