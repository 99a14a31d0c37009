#include "skillr1/objective.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "skillr1/advantages.hpp"

namespace skillr1
{
double importance_ratio(double logprob_current, double logprob_behavior)
{
    if (!std::isfinite(logprob_current) || !std::isfinite(logprob_behavior))
    {
        throw PreconditionError("importance_ratio: non-finite log-probability");
    }
    return std::exp(logprob_current - logprob_behavior);
}

double clipped_term(double ratio, double advantage, double epsilon)
{
    if (!(epsilon > 0))
    {
        throw PreconditionError("clipped_term: epsilon must be > 0");
    }
    if (!(ratio > 0))
    {
        throw PreconditionError("clipped_term: ratio must be > 0");
    }
    double clipped = std::clamp(ratio, 1.0 - epsilon, 1.0 + epsilon);
    return std::min(ratio * advantage, clipped * advantage);
}

bool unclipped_branch_active(double ratio, double advantage, double epsilon)
{
    double clipped = std::clamp(ratio, 1.0 - epsilon, 1.0 + epsilon);
    return ratio * advantage <= clipped * advantage;
}

SurrogateResult episode_surrogate(EvolutionHistory const& history,
                                  std::span<AdvantageBundle const> advantages,
                                  PolicyParams const& params,
                                  PolicySnapshot const& behavior,
                                  PolicySnapshot const& reference,
                                  double epsilon,
                                  double beta)
{
    auto const& recs = history.records();
    int const G = static_cast<int>(recs.size()) - 1;
    if (G < 1)
    {
        throw PreconditionError("episode_surrogate: history has no generated "
                                "skills");
    }
    if (static_cast<int>(advantages.size()) != G)
    {
        throw PreconditionError("episode_surrogate: expected "
                                + std::to_string(G) + " advantage bundles, got "
                                + std::to_string(advantages.size()));
    }

    SurrogateResult out;
    out.gradient = Matrix(params.weights.rows(), params.weights.cols());

    for (int g = 1; g <= G; ++g)
    {
        auto const& rec = recs[static_cast<std::size_t>(g)];
        auto const& prev = recs[static_cast<std::size_t>(g - 1)];
        auto const& adv = advantages[static_cast<std::size_t>(g - 1)];
        if (adv.generation != g)
        {
            throw PreconditionError("episode_surrogate: advantage bundle "
                                    "order does not match generations");
        }
        if (!rec.behavior_logprob)
        {
            throw PreconditionError(
                "episode_surrogate: generation " + std::to_string(g)
                + " has no behavior_logprob; record log pi_old(s_g) when the "
                  "skill is sampled");
        }
        if (!rec.skill.vector || !prev.skill.vector)
        {
            throw PreconditionError(
                "episode_surrogate: skills must carry vectors");
        }

        auto feats = featurize(prev);
        int action = infer_action(*prev.skill.vector, *rec.skill.vector);

        double behavior_lp
            = action_logprob(behavior.params().weights, feats.view(), action);
        if (std::abs(behavior_lp - *rec.behavior_logprob) > 1e-9)
        {
            throw PreconditionError(
                "episode_surrogate: generation " + std::to_string(g)
                + " was not sampled from the given behavior snapshot");
        }

        double current_lp
            = action_logprob(params.weights, feats.view(), action);
        double ratio = importance_ratio(current_lp, *rec.behavior_logprob);

        SurrogateTerm term;
        term.generation = g;
        term.ratio = ratio;
        term.advantages = adv.combined;

        // d rho / d W = rho * grad log pi; accumulate the active coefficient
        double grad_coeff = 0;
        for (double a : adv.combined)
        {
            term.clipped_value += clipped_term(ratio, a, epsilon);
            if (unclipped_branch_active(ratio, a, epsilon))
            {
                grad_coeff += ratio * a;
            }
        }
        if (grad_coeff != 0)
        {
            out.gradient.add_scaled(
                logprob_grad(params.weights, feats.view(), action), grad_coeff);
        }

        if (beta > 0)
        {
            term.kl_value = kl_divergence(
                params.weights, reference.params().weights, feats.view());
            out.gradient.add_scaled(
                kl_grad(params.weights, reference.params().weights, feats.view()),
                -beta);
        }

        out.value += term.clipped_value - beta * term.kl_value;
        out.kl_total += term.kl_value;
        out.terms.push_back(std::move(term));
    }
    return out;
}

double discounted_objective(EvolutionHistory const& history, double gamma)
{
    if (!(gamma > 0 && gamma <= 1))
    {
        throw PreconditionError("discounted_objective: gamma must be in (0, 1]");
    }
    auto const& recs = history.records();
    if (recs.size() < 2)
    {
        throw PreconditionError(
            "discounted_objective: history has no generations >= 1");
    }
    double total = 0;
    double weight = 1;
    for (std::size_t g = 1; g < recs.size(); ++g)
    {
        total += weight * recs[g].mean_reward;
        weight *= gamma;
    }
    return total;
}

double vanilla_grpo_loss(std::span<double const> rewards,
                         std::span<double const> logprobs)
{
    if (rewards.size() != logprobs.size())
    {
        throw PreconditionError("vanilla_grpo_loss: rewards/logprobs length "
                                "mismatch");
    }
    auto adv = vanilla_grpo_advantage(rewards);
    double value = 0;
    for (std::size_t i = 0; i < adv.size(); ++i)
    {
        value += adv[i] * logprobs[i];
    }
    return value;
}

LossResult vanilla_grpo_loss(Matrix const& weights,
                             std::span<double const> rewards,
                             std::span<std::vector<double> const> feats,
                             std::span<int const> actions)
{
    if (rewards.size() != feats.size() || rewards.size() != actions.size())
    {
        throw PreconditionError("vanilla_grpo_loss: group arrays differ in "
                                "length");
    }
    auto adv = vanilla_grpo_advantage(rewards);
    LossResult out{0.0, Matrix(weights.rows(), weights.cols())};
    for (std::size_t i = 0; i < adv.size(); ++i)
    {
        out.value += adv[i] * action_logprob(weights, feats[i], actions[i]);
        out.gradient.add_scaled(logprob_grad(weights, feats[i], actions[i]),
                                adv[i]);
    }
    return out;
}

}  // namespace skillr1
