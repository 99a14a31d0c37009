#include "skillr1/advantages.hpp"

#include <cmath>
#include <string>

namespace skillr1
{
std::vector<double> intra_advantage(std::span<double const> rewards)
{
    if (rewards.size() < 2)
    {
        throw PreconditionError(
            "intra_advantage: group of size " + std::to_string(rewards.size())
            + "; K >= 2 required");
    }
    double sum = 0;
    for (double r : rewards)
    {
        if (!std::isfinite(r))
        {
            throw PreconditionError("intra_advantage: non-finite reward");
        }
        sum += r;
    }
    double mean = sum / static_cast<double>(rewards.size());

    std::vector<double> out;
    out.reserve(rewards.size());
    for (double r : rewards)
    {
        out.push_back(r - mean);
    }
    return out;
}

double inter_advantage(double mean_g, double mean_prev, int generation)
{
    if (generation < 1)
    {
        throw PreconditionError("inter_advantage: generation "
                                + std::to_string(generation) + " < 1");
    }
    if (!std::isfinite(mean_g) || !std::isfinite(mean_prev))
    {
        throw PreconditionError("inter_advantage: non-finite mean reward");
    }
    if (generation == 1)
    {
        return 0.0;
    }
    return mean_g - mean_prev;
}

std::vector<double>
bilevel_advantage(std::span<double const> intra, double inter, double lambda)
{
    if (!(lambda >= 0))
    {
        throw PreconditionError("bilevel_advantage: lambda must be >= 0");
    }
    std::vector<double> out(intra.begin(), intra.end());
    if (lambda == 0)
    {
        return out;
    }
    double shift = lambda * inter;
    for (double& a : out)
    {
        a += shift;
    }
    return out;
}

std::vector<double> vanilla_grpo_advantage(std::span<double const> rewards)
{
    // Same group-relative centering as the intra-generation signal
    return intra_advantage(rewards);
}

std::vector<AdvantageBundle> compute_advantages(EvolutionHistory const& history,
                                                double lambda,
                                                bool inter_uses_gen0)
{
    std::vector<AdvantageBundle> out;
    auto const& recs = history.records();
    for (std::size_t g = 1; g < recs.size(); ++g)
    {
        auto rewards = recs[g].rewards();
        AdvantageBundle b;
        b.generation = static_cast<int>(g);
        b.lambda = lambda;
        b.intra = intra_advantage(rewards);
        if (inter_uses_gen0 && g == 1)
        {
            b.inter = recs[1].mean_reward - recs[0].mean_reward;
        }
        else
        {
            b.inter = inter_advantage(
                recs[g].mean_reward, recs[g - 1].mean_reward, b.generation);
        }
        b.combined = bilevel_advantage(b.intra, b.inter, lambda);
        out.push_back(std::move(b));
    }
    return out;
}

}  // namespace skillr1
