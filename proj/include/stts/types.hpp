#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace stts {

using Index = Eigen::Index;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using VectorXd = Vector<double>;
using MatrixXd = Matrix<double>;
using VectorXi = Eigen::Matrix<Index, Eigen::Dynamic, 1>;

// Arms are 0-based inside the library. Files, CSV output and the CLI use
// 1-based indices; conversion happens only at those boundaries.
inline Index to_external(Index arm) { return arm + 1; }
inline Index from_external(Index arm) { return arm - 1; }

// Thrown when an argument violates a documented precondition.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Thrown for malformed input files.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw InvalidArgument(message);
}

inline void require_arm(Index arm, Index num_arms, const char* what) {
  if (arm < 0 || arm >= num_arms) {
    throw InvalidArgument(std::string(what) + ": arm index " +
                          std::to_string(to_external(arm)) +
                          " outside [1, " + std::to_string(num_arms) + "]");
  }
}

// Lowest-index argmax.
template <typename Derived>
Index argmax(const Eigen::DenseBase<Derived>& v) {
  Index best = 0;
  for (Index i = 1; i < v.size(); ++i) {
    if (v(i) > v(best)) best = i;
  }
  return best;
}

}  // namespace stts
