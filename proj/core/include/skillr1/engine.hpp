#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "skillr1/env.hpp"
#include "skillr1/event_log.hpp"
#include "skillr1/policy.hpp"
#include "skillr1/types.hpp"

namespace skillr1
{
//! Failure inside an episode, annotated with where it happened
class EngineError : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

//! Non-finite gradient during training
class TrainingError : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

//---------------------------------------------------------------------------//
/*!
 * Skill generator pi_theta(. | x, H_{g-1}).
 *
 * Returns the next skill and, for trainable generators, the log-probability
 * of having drawn it. Must be reentrant.
 */
class SkillGenerator
{
  public:
    struct Output
    {
        Skill skill;
        std::optional<double> logprob;
    };

    virtual ~SkillGenerator() = default;
    virtual Output generate(TaskInstance const& instance,
                            EvolutionHistory const& history,
                            std::uint64_t seed) const
        = 0;
};

//! Linear-softmax bit-edit generator backed by a frozen snapshot
class PolicySkillGenerator final : public SkillGenerator
{
  public:
    PolicySkillGenerator(PolicySnapshot snapshot, bool record_logprob);

    Output generate(TaskInstance const& instance,
                    EvolutionHistory const& history,
                    std::uint64_t seed) const override;

    PolicySnapshot const& snapshot() const { return snapshot_; }

  private:
    PolicySnapshot snapshot_;
    bool record_logprob_;
};

struct Ports
{
    TaskModelPort const& task;
    VerifierPort const& verifier;
    SkillGenerator const& generator;
};

//! Coordinates that key every random stream of one episode
struct EpisodeContext
{
    std::uint64_t master_seed = 0;
    std::int64_t episode_id = 0;
    bool evaluation = false;  //!< use the evaluation stream family
    int rollout_concurrency = 1;
};

struct GenerationSummary
{
    double mean_reward = 0;
    bool any_success = false;
};

struct EpisodeResult
{
    EvolutionHistory history;
    std::vector<AdvantageBundle> advantages;  //!< g = 1..G
    double objective_value = 0;               //!< discounted J of the episode
    std::vector<GenerationSummary> generations;  //!< g = 0..G
};

//! Seed of rollout i (1-based) at generation g
std::uint64_t rollout_seed(EpisodeContext const& ctx,
                           std::string const& instance_id,
                           int generation,
                           int index);

//! Seed used to draw the skill of generation g
std::uint64_t skill_seed(EpisodeContext const& ctx,
                         std::string const& instance_id,
                         int generation);

/*!
 * One Skill-R1 episode on a single instance.
 *
 * Selects the first bank skill as s_0, scores its K rollouts to form H_0,
 * then for g = 1..G draws s_g from the generator, scores its K rollouts,
 * computes the intra, inter, and bi-level advantages, and appends to the
 * history. Port failures (PortError) become zero-reward rollouts with an
 * error annotation; anything else propagates as EngineError with the
 * generation and rollout coordinates.
 */
EpisodeResult run_episode(TaskInstance const& instance,
                          SkillBank const& bank,
                          Ports const& ports,
                          TrainConfig const& cfg,
                          EpisodeContext const& ctx);

//---------------------------------------------------------------------------//

struct UpdateMetrics
{
    int update = 0;
    double surrogate = 0;
    double kl = 0;
    double grad_max_abs = 0;
    double objective = 0;                   //!< mean discounted J over the batch
    std::vector<double> generation_reward;  //!< batch mean r_g, g = 0..G
};

struct TrainResult
{
    PolicyParams params;
    std::vector<UpdateMetrics> updates;
};

using UpdateCallback = std::function<void(UpdateMetrics const&)>;

/*!
 * Batched ascent on the clipped bi-level surrogate.
 *
 * Each update snapshots the behavior policy, runs episodes_per_update
 * episodes (cycling through the instances), sums their surrogate gradients
 * in episode order, and takes one step of size learning_rate. The KL
 * reference stays at the initial parameters unless refresh_reference is
 * set. Episodes run on up to cfg.jobs threads; results are independent of
 * the thread count.
 */
TrainResult train(std::span<InstanceWithBank const> instances,
                  TaskModelPort const& task,
                  VerifierPort const& verifier,
                  TrainConfig const& cfg,
                  PolicyParams initial,
                  EventLog* log = nullptr,
                  UpdateCallback on_update = {});

struct GenerationMetrics
{
    int generation = 0;
    double mean_reward = 0;  //!< r_g averaged over instances
    double accuracy = 0;     //!< fraction of instances with any success
};

struct EvalResult
{
    std::vector<GenerationMetrics> rows;  //!< g = 0..G
    double objective = 0;                 //!< mean discounted J
};

/*!
 * Episodes with a frozen generator on evaluation streams.
 *
 * Runs eval_repeats episodes per instance; episode k uses instance
 * k mod N. Accuracy is the fraction of episodes with a rewarded rollout.
 * Rollouts of one generation run on up to \c rollout_concurrency threads.
 */
EvalResult evaluate(std::span<InstanceWithBank const> instances,
                    Ports const& ports,
                    TrainConfig const& cfg,
                    EventLog* log = nullptr,
                    int rollout_concurrency = 1);

//! Aggregate per-generation metrics over finished episodes
std::vector<GenerationMetrics>
aggregate_generations(std::span<EpisodeResult const> episodes);

//! Run fn(i) for i in [0, n) on up to \c jobs threads; rethrows the
//! exception of the lowest failing index
void parallel_for(std::size_t n, int jobs, std::function<void(std::size_t)> const& fn);

}  // namespace skillr1
