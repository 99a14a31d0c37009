#pragma once

#include <span>
#include <vector>

#include "skillr1/types.hpp"

namespace skillr1
{
//! r_i - mean(r); no standard-deviation normalization. Requires K >= 2.
std::vector<double> intra_advantage(std::span<double const> rewards);

//! mean_g - mean_prev for g >= 2; zero at g = 1.
double inter_advantage(double mean_g, double mean_prev, int generation);

//! intra_i + lambda * inter. With lambda = 0 the output equals intra exactly.
std::vector<double>
bilevel_advantage(std::span<double const> intra, double inter, double lambda);

//! Single-generation group-relative advantage used by the vanilla baseline.
std::vector<double> vanilla_grpo_advantage(std::span<double const> rewards);

/*!
 * Advantages for generations 1..G of a finished history.
 *
 * With \c inter_uses_gen0 the first revision is credited against the
 * generation-0 skill instead of receiving zero inter advantage.
 */
std::vector<AdvantageBundle> compute_advantages(EvolutionHistory const& history,
                                                double lambda,
                                                bool inter_uses_gen0 = false);

}  // namespace skillr1
