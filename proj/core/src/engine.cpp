#include "skillr1/engine.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <future>
#include <sstream>
#include <thread>

#include "skillr1/advantages.hpp"
#include "skillr1/objective.hpp"
#include "skillr1/rng.hpp"

namespace skillr1
{
namespace
{
std::uint64_t id_hash(std::string const& id)
{
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : id)
    {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

std::string where(std::string const& instance_id, int g, int i = 0)
{
    std::string s = "instance " + instance_id + " generation "
                    + std::to_string(g);
    if (i > 0)
        s += " rollout " + std::to_string(i);
    return s;
}
}  // namespace

//---------------------------------------------------------------------------//

PolicySkillGenerator::PolicySkillGenerator(PolicySnapshot snapshot,
                                           bool record_logprob)
    : snapshot_(std::move(snapshot)), record_logprob_(record_logprob)
{
}

SkillGenerator::Output
PolicySkillGenerator::generate(TaskInstance const&,
                               EvolutionHistory const& history,
                               std::uint64_t seed) const
{
    auto feats = featurize(history);
    Philox rng(seed);
    auto sampled
        = sample_skill(snapshot_.params(), feats, history.back().skill, rng);
    Output out;
    out.skill = std::move(sampled.skill);
    if (record_logprob_)
        out.logprob = sampled.logprob;
    return out;
}

//---------------------------------------------------------------------------//

std::uint64_t rollout_seed(EpisodeContext const& ctx,
                           std::string const& instance_id,
                           int generation,
                           int index)
{
    auto purpose = ctx.evaluation ? StreamPurpose::eval_rollout
                                  : StreamPurpose::rollout;
    return derive_seed({static_cast<std::uint64_t>(purpose),
                        ctx.master_seed,
                        static_cast<std::uint64_t>(ctx.episode_id),
                        id_hash(instance_id),
                        static_cast<std::uint64_t>(generation),
                        static_cast<std::uint64_t>(index)});
}

std::uint64_t skill_seed(EpisodeContext const& ctx,
                         std::string const& instance_id,
                         int generation)
{
    auto purpose = ctx.evaluation ? StreamPurpose::eval_skill_sample
                                  : StreamPurpose::skill_sample;
    return derive_seed({static_cast<std::uint64_t>(purpose),
                        ctx.master_seed,
                        static_cast<std::uint64_t>(ctx.episode_id),
                        id_hash(instance_id),
                        static_cast<std::uint64_t>(generation)});
}

namespace
{
Rollout run_one_rollout(TaskInstance const& instance,
                        Skill const& skill,
                        Ports const& ports,
                        EpisodeContext const& ctx,
                        int g,
                        int i)
{
    Rollout r;
    r.index = i;
    r.seed = rollout_seed(ctx, instance.id, g, i);
    try
    {
        r.content = ports.task.rollout(instance, skill, r.seed);
        r.reward = ports.verifier.verify(instance, r.content);
    }
    catch (PortError const& e)
    {
        r.content = std::string{};
        r.reward = 0;
        r.error = e.what();
        return r;
    }
    catch (std::exception const& e)
    {
        throw EngineError(where(instance.id, g, i) + ": " + e.what());
    }
    if (!std::isfinite(r.reward))
    {
        throw EngineError(where(instance.id, g, i) + ": non-finite reward");
    }
    if (ports.verifier.binary_rewards() && r.reward != 0 && r.reward != 1)
    {
        throw EngineError(where(instance.id, g, i)
                          + ": verifier declared binary rewards but returned "
                          + std::to_string(r.reward));
    }
    return r;
}

std::vector<Rollout> run_group(TaskInstance const& instance,
                               Skill const& skill,
                               Ports const& ports,
                               TrainConfig const& cfg,
                               EpisodeContext const& ctx,
                               int g)
{
    std::vector<Rollout> rollouts(static_cast<std::size_t>(cfg.group_size));
    parallel_for(rollouts.size(), ctx.rollout_concurrency, [&](std::size_t k) {
        rollouts[k] = run_one_rollout(
            instance, skill, ports, ctx, g, static_cast<int>(k) + 1);
    });
    return rollouts;
}
}  // namespace

EpisodeResult run_episode(TaskInstance const& instance,
                          SkillBank const& bank,
                          Ports const& ports,
                          TrainConfig const& cfg,
                          EpisodeContext const& ctx)
{
    bank.validate();
    int const G = cfg.generations;
    if (G < 1 || cfg.group_size < 2)
    {
        throw PreconditionError("run_episode: requires G >= 1 and K >= 2");
    }

    EpisodeResult out;
    out.history = EvolutionHistory(instance.id);

    Skill s0 = bank.skills.front();
    out.history.append(GenerationRecord::make(
        0, s0, run_group(instance, s0, ports, cfg, ctx, 0)));

    for (int g = 1; g <= G; ++g)
    {
        SkillGenerator::Output next;
        try
        {
            next = ports.generator.generate(
                instance, out.history, skill_seed(ctx, instance.id, g));
        }
        catch (std::exception const& e)
        {
            throw EngineError(where(instance.id, g) + ": skill generation: "
                              + e.what());
        }
        auto rollouts = run_group(instance, next.skill, ports, cfg, ctx, g);
        out.history.append(GenerationRecord::make(
            g, std::move(next.skill), std::move(rollouts), next.logprob));

        // Advantages for g use only generations g-1 and g
        auto const& rec = out.history.at(g);
        AdvantageBundle b;
        b.generation = g;
        b.lambda = cfg.lambda;
        auto rewards = rec.rewards();
        b.intra = cfg.mode == Mode::vanilla_grpo
                      ? vanilla_grpo_advantage(rewards)
                      : intra_advantage(rewards);
        double prev_mean = out.history.at(g - 1).mean_reward;
        b.inter = (cfg.inter_uses_gen0 && g == 1)
                      ? rec.mean_reward - prev_mean
                      : inter_advantage(rec.mean_reward, prev_mean, g);
        b.combined = bilevel_advantage(b.intra, b.inter, cfg.lambda);
        out.advantages.push_back(std::move(b));
    }

    for (auto const& rec : out.history.records())
    {
        GenerationSummary s;
        s.mean_reward = rec.mean_reward;
        for (auto const& r : rec.rollouts)
            s.any_success = s.any_success || r.reward > 0;
        out.generations.push_back(s);
    }
    out.objective_value = discounted_objective(out.history, cfg.gamma);
    return out;
}

//---------------------------------------------------------------------------//

void parallel_for(std::size_t n,
                  int jobs,
                  std::function<void(std::size_t)> const& fn)
{
    if (jobs <= 1 || n <= 1)
    {
        for (std::size_t i = 0; i < n; ++i)
            fn(i);
        return;
    }
    std::vector<std::exception_ptr> errors(n);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < n; i = next++)
        {
            try
            {
                fn(i);
            }
            catch (...)
            {
                errors[i] = std::current_exception();
            }
        }
    };
    {
        std::vector<std::jthread> threads;
        auto count = std::min<std::size_t>(static_cast<std::size_t>(jobs), n);
        for (std::size_t t = 0; t < count; ++t)
            threads.emplace_back(worker);
    }
    for (auto& e : errors)
    {
        if (e)
            std::rethrow_exception(e);
    }
}

std::vector<GenerationMetrics>
aggregate_generations(std::span<EpisodeResult const> episodes)
{
    std::vector<GenerationMetrics> rows;
    if (episodes.empty())
        return rows;
    auto gens = episodes.front().generations.size();
    rows.resize(gens);
    for (std::size_t g = 0; g < gens; ++g)
    {
        rows[g].generation = static_cast<int>(g);
        double reward = 0;
        int success = 0;
        for (auto const& ep : episodes)
        {
            reward += ep.generations.at(g).mean_reward;
            success += ep.generations.at(g).any_success;
        }
        auto n = static_cast<double>(episodes.size());
        rows[g].mean_reward = reward / n;
        rows[g].accuracy = success / n;
    }
    return rows;
}

TrainResult train(std::span<InstanceWithBank const> instances,
                  TaskModelPort const& task,
                  VerifierPort const& verifier,
                  TrainConfig const& cfg_in,
                  PolicyParams initial,
                  EventLog* log,
                  UpdateCallback on_update)
{
    auto cfg = cfg_in.effective();
    if (cfg.mode == Mode::inference)
    {
        throw PreconditionError("train: mode is inference");
    }
    if (auto errors = validate_config(cfg); !errors.empty())
    {
        throw PreconditionError("train: invalid config: " + errors.front().message);
    }
    if (instances.empty())
    {
        throw PreconditionError("train: no instances");
    }
    if (!initial.weights.all_finite())
    {
        throw PreconditionError("train: initial parameters are not finite");
    }

    TrainResult result;
    result.params = std::move(initial);
    PolicySnapshot const initial_ref(result.params, SnapshotRole::reference);

    auto const E = static_cast<std::size_t>(cfg.episodes_per_update);
    for (int u = 0; u < cfg.updates; ++u)
    {
        PolicySnapshot behavior(result.params, SnapshotRole::behavior);
        PolicySnapshot reference
            = cfg.refresh_reference
                  ? PolicySnapshot(result.params, SnapshotRole::reference)
                  : initial_ref;
        PolicySkillGenerator generator(behavior, /*record_logprob=*/true);
        Ports ports{task, verifier, generator};

        std::vector<EpisodeResult> episodes(E);
        std::vector<SurrogateResult> surrogates(E);
        parallel_for(E, cfg.jobs, [&](std::size_t e) {
            auto episode_id = static_cast<std::int64_t>(u) * cfg.episodes_per_update
                              + static_cast<std::int64_t>(e);
            auto const& item = instances[static_cast<std::size_t>(episode_id)
                                         % instances.size()];
            EpisodeContext ctx{cfg.master_seed, episode_id, false, 1};
            episodes[e] = run_episode(item.instance, item.bank, ports, cfg, ctx);
            surrogates[e] = episode_surrogate(episodes[e].history,
                                              episodes[e].advantages,
                                              result.params,
                                              behavior,
                                              reference,
                                              cfg.epsilon,
                                              cfg.beta);
        });

        // Ordered reduction keeps the update independent of scheduling
        Matrix grad(result.params.weights.rows(), result.params.weights.cols());
        UpdateMetrics m;
        m.update = u;
        for (std::size_t e = 0; e < E; ++e)
        {
            if (!surrogates[e].gradient.all_finite())
            {
                std::ostringstream msg;
                msg << "non-finite gradient at update " << u << ", episode "
                    << (static_cast<std::int64_t>(u) * cfg.episodes_per_update
                        + static_cast<std::int64_t>(e))
                    << " (instance " << episodes[e].history.instance_id() << ")";
                throw TrainingError(msg.str());
            }
            grad += surrogates[e].gradient;
            m.surrogate += surrogates[e].value;
            m.kl += surrogates[e].kl_total;
            m.objective += episodes[e].objective_value;
        }
        auto n = static_cast<double>(E);
        m.surrogate /= n;
        m.kl /= n;
        m.objective /= n;
        m.grad_max_abs = grad.max_abs();
        for (auto const& row : aggregate_generations(episodes))
            m.generation_reward.push_back(row.mean_reward);

        if (cfg.learning_rate != 0)
            result.params.weights.add_scaled(grad, cfg.learning_rate);
        if (!result.params.weights.all_finite())
        {
            throw TrainingError("non-finite parameters after update "
                                + std::to_string(u) + " (step too large?)");
        }

        if (log && log->enabled())
        {
            for (std::size_t e = 0; e < E; ++e)
            {
                auto episode_id = static_cast<std::int64_t>(u)
                                      * cfg.episodes_per_update
                                  + static_cast<std::int64_t>(e);
                log->emit_history(episodes[e].history, episode_id);
                for (auto const& b : episodes[e].advantages)
                    log->emit_advantages(
                        episodes[e].history.instance_id(), episode_id, b);
            }
            log->emit("update",
                      {{"update", std::int64_t{u}},
                       {"surrogate", m.surrogate},
                       {"kl", m.kl},
                       {"grad_max_abs", m.grad_max_abs},
                       {"objective", m.objective},
                       {"params_hash", params_hash(result.params)}});
        }
        if (on_update)
            on_update(m);
        result.updates.push_back(std::move(m));
    }
    return result;
}

EvalResult evaluate(std::span<InstanceWithBank const> instances,
                    Ports const& ports,
                    TrainConfig const& cfg_in,
                    EventLog* log,
                    int rollout_concurrency)
{
    auto cfg = cfg_in.effective();
    auto const N = instances.size();
    auto const R = static_cast<std::size_t>(std::max(cfg.eval_repeats, 1));
    std::vector<EpisodeResult> episodes(N * R);
    parallel_for(episodes.size(), cfg.jobs, [&](std::size_t k) {
        auto const& item = instances[k % N];
        EpisodeContext ctx{cfg.master_seed, static_cast<std::int64_t>(k), true,
                           rollout_concurrency};
        episodes[k] = run_episode(item.instance, item.bank, ports, cfg, ctx);
    });

    EvalResult out;
    out.rows = aggregate_generations(episodes);
    for (std::size_t i = 0; i < episodes.size(); ++i)
    {
        out.objective += episodes[i].objective_value;
        if (log && log->enabled())
            log->emit_history(episodes[i].history, static_cast<std::int64_t>(i));
    }
    if (!episodes.empty())
        out.objective /= static_cast<double>(episodes.size());
    return out;
}

}  // namespace skillr1
