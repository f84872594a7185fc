#include "stts/priors.hpp"

namespace stts {

UKind u_kind_from_int(int kind) {
  switch (kind) {
    case 1: return UKind::kCycle;
    case 2: return UKind::kTwoGroups;
    case 3: return UKind::kCycleWithSecond;
    default:
      throw InvalidArgument("u_matrix: unknown kind " + std::to_string(kind));
  }
}

MixturePosteriord gaussian_u_first_task_prior(const GaussianUPrior& prior,
                                              double noise_var) {
  const Index J = prior.num_arms();
  MixturePriorParams params;
  params.mu = 0.0;
  params.gap = prior.mu0;
  params.sigma0 = prior.sigma0;
  return build_mixture_prior(VectorXd::Constant(J, 1.0 / double(J)), params,
                             noise_var);
}

MixturePosteriord gaussian_u_task_prior(Index prev, const GaussianUPrior& prior,
                                        double noise_var) {
  const auto [mean, var] = gaussian_prior_from_u(prev, prior);
  return MixturePosteriord::gaussian(
      mean, VectorXd::Constant(prior.num_arms(), var), noise_var);
}

}  // namespace stts
