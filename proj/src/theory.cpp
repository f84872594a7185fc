#include "stts/theory.hpp"

namespace stts {

std::vector<AllocationPoint> allocation_trace(
    const std::vector<AllocationSnapshot>& snapshots, Index J, double beta,
    Index run_length) {
  std::vector<AllocationPoint> out;
  for (const auto& snap : snapshots) {
    require(snap.t <= run_length,
            "allocation_trace: checkpoint " + std::to_string(snap.t) +
                " beyond run length " + std::to_string(run_length));
    if (snap.t == 0) continue;
    require(snap.counts.size() == J, "allocation_trace: counts length != J");
    require(snap.counts.sum() == snap.t, "allocation_trace: counts must sum to t");
    const VectorXd empirical = snap.counts.cast<double>() / double(snap.t);
    const VectorXd target = optimal_allocation(J, beta, snap.best_arm);
    out.push_back({snap.t, kl_discrete(empirical, target)});
  }
  return out;
}

}  // namespace stts
