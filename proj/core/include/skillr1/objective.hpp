#pragma once

#include <span>
#include <vector>

#include "skillr1/policy.hpp"
#include "skillr1/types.hpp"

namespace skillr1
{
//! exp(logprob_current - logprob_behavior)
double importance_ratio(double logprob_current, double logprob_behavior);

//! min(ratio * A, clip(ratio, 1 - eps, 1 + eps) * A)
double clipped_term(double ratio, double advantage, double epsilon);

//! True when the unclipped branch attains the min (gradient flows)
bool unclipped_branch_active(double ratio, double advantage, double epsilon);

struct SurrogateTerm
{
    int generation = 1;
    double ratio = 1;
    std::vector<double> advantages;
    double clipped_value = 0;  //!< sum over the K rollouts
    double kl_value = 0;
};

struct SurrogateResult
{
    double value = 0;
    Matrix gradient;
    std::vector<SurrogateTerm> terms;
    double kl_total = 0;
};

/*!
 * Clipped bi-level surrogate of one episode and its analytic gradient.
 *
 *   sum_g sum_i min(rho_g A_gi, clip(rho_g) A_gi) - beta sum_g KL_g
 *
 * The ratio rho_g = pi_theta(s_g|H_{g-1}) / pi_old(s_g|H_{g-1}) uses the
 * behavior log-probability recorded when s_g was sampled. Every rollout
 * term of generation g shares the gradient direction grad log pi(s_g), so
 * with unclipped ratios the skill weight is sum_i A_gi; intra advantages
 * cancel and only lambda * K * A_inter(g) survives. The KL term is
 * counted once per generation.
 *
 * The behavior snapshot is used to check that the recorded log-probability
 * was produced by the same policy; a mismatch means the history was
 * sampled under different parameters.
 */
SurrogateResult episode_surrogate(EvolutionHistory const& history,
                                  std::span<AdvantageBundle const> advantages,
                                  PolicyParams const& params,
                                  PolicySnapshot const& behavior,
                                  PolicySnapshot const& reference,
                                  double epsilon,
                                  double beta);

//! sum_{g=1..G} gamma^{g-1} mean_reward_g
double discounted_objective(EvolutionHistory const& history, double gamma);

struct LossResult
{
    double value = 0;
    Matrix gradient;
};

//! sum_i A_i log pi(y_i) with group-relative A (value only)
double vanilla_grpo_loss(std::span<double const> rewards,
                         std::span<double const> logprobs);

/*!
 * Group objective where each of the K group members is an action drawn
 * from the editor under its own features; returns value and gradient.
 */
LossResult vanilla_grpo_loss(Matrix const& weights,
                             std::span<double const> rewards,
                             std::span<std::vector<double> const> feats,
                             std::span<int const> actions);

}  // namespace skillr1
