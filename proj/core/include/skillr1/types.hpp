#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace skillr1
{
//---------------------------------------------------------------------------//
// Errors
//---------------------------------------------------------------------------//

//! Violated operation precondition (bad argument shape, out-of-range value).
class PreconditionError : public std::invalid_argument
{
  public:
    using std::invalid_argument::invalid_argument;
};

//! Failure reading or parsing an external file.
class FormatError : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

//---------------------------------------------------------------------------//
// Domain types
//---------------------------------------------------------------------------//

//! Fixed-length bitstring, one byte (0 or 1) per bit, index 0 on the left.
using Bits = std::vector<std::uint8_t>;

std::string bits_to_string(Bits const& bits);
Bits bits_from_string(std::string const& text);
int hamming(Bits const& a, Bits const& b);

/*!
 * A task instance x.
 *
 * The synthetic environment fills \c target (hidden from the skill
 * generator); the LLM environment fills \c question and optionally
 * \c reference_answer.
 */
struct TaskInstance
{
    std::string id;
    Bits target;
    std::string question;
    std::optional<std::string> reference_answer;
    std::string skill_bank_ref;
};

/*!
 * A skill: a procedural artifact that conditions the task model.
 *
 * Generation-0 skills come from a bank and have no parent; every revision
 * records the id of the skill it was derived from.
 */
struct Skill
{
    std::string id;
    std::string name;
    std::string description;
    std::optional<Bits> vector;
    std::optional<std::string> text;
    int generation = 0;
    std::optional<std::string> parent_id;

    //! Throws PreconditionError if the lineage invariant is broken
    void validate(std::optional<std::size_t> expected_length = {}) const;

    //! Derive a revision of this skill one generation later
    Skill make_child() const;
};

struct SkillBank
{
    std::string instance_id;
    std::vector<Skill> skills;

    void validate() const;
};

//! Trajectory content: bitstring (synthetic) or transcript text (LLM).
using RolloutContent = std::variant<Bits, std::string>;

struct Rollout
{
    int index = 1;  //!< 1-based position within the group
    RolloutContent content;
    double reward = 0;
    std::uint64_t seed = 0;
    //! Set when a port call failed and the reward was defaulted to zero
    std::optional<std::string> error;
};

struct GenerationRecord
{
    int generation = 0;
    Skill skill;
    std::vector<Rollout> rollouts;
    double mean_reward = 0;
    //! log pi_old(s_g | x, H_{g-1}); absent at g = 0 and in inference mode
    std::optional<double> behavior_logprob;

    //! Build a record, computing mean_reward from the rollouts
    static GenerationRecord make(int generation,
                                 Skill skill,
                                 std::vector<Rollout> rollouts,
                                 std::optional<double> behavior_logprob = {});

    std::vector<double> rewards() const;
};

bool operator==(Skill const&, Skill const&);
bool operator==(Rollout const&, Rollout const&);
bool operator==(GenerationRecord const&, GenerationRecord const&);

/*!
 * Append-only history H_0..H_g for one instance.
 *
 * The per-rollout trajectory of a single generation lives in Rollout; this
 * type holds the sequence of (skill, group, rewards) tuples across
 * generations.
 */
class EvolutionHistory
{
  public:
    EvolutionHistory() = default;
    explicit EvolutionHistory(std::string instance_id);

    //! Append the next generation; generation numbers must be contiguous
    void append(GenerationRecord record);

    std::string const& instance_id() const { return instance_id_; }
    std::vector<GenerationRecord> const& records() const { return records_; }
    GenerationRecord const& back() const;
    GenerationRecord const& at(int generation) const;
    bool empty() const { return records_.empty(); }
    std::size_t size() const { return records_.size(); }

    //! History H_{g} truncated to generations 0..g
    EvolutionHistory prefix(int last_generation) const;

    bool operator==(EvolutionHistory const&) const = default;

  private:
    std::string instance_id_;
    std::vector<GenerationRecord> records_;
};

struct AdvantageBundle
{
    int generation = 1;
    std::vector<double> intra;
    double inter = 0;
    std::vector<double> combined;
    double lambda = 0;
};

enum class Mode
{
    train,
    inference,
    vanilla_grpo
};

enum class EnvKind
{
    synthetic,
    llm
};

std::string to_string(Mode mode);
std::string to_string(EnvKind env);
Mode mode_from_string(std::string const& text);
EnvKind env_from_string(std::string const& text);

//! Hyperparameters for the evolution loop and the skill-generator update.
struct TrainConfig
{
    int generations = 5;        //!< G
    int group_size = 4;         //!< K
    double lambda = 0.25;       //!< inter-generation mixing weight
    double gamma = 1.0;         //!< discount in the J(theta) metric
    double epsilon = 0.2;       //!< clip radius
    double beta = 0.01;         //!< KL weight
    double learning_rate = 0.05;
    int episodes_per_update = 8;
    int updates = 300;
    std::uint64_t master_seed = 0;
    Mode mode = Mode::train;
    EnvKind environment = EnvKind::synthetic;

    //! Give generation 1 inter credit against generation 0 (off: A_inter(1)=0)
    bool inter_uses_gen0 = false;
    //! Reset the KL reference to the behavior policy at every update
    bool refresh_reference = false;
    //! Standard deviation of the initial weights
    double init_scale = 0.01;
    //! Concurrent episodes
    int jobs = 1;
    //! Evaluation episodes per instance
    int eval_repeats = 1;

    //! Apply mode-implied overrides (vanilla-grpo forces G=1, lambda=0)
    TrainConfig effective() const;
};

struct ConfigViolation
{
    std::string field;
    std::string message;
};

//! Empty result means the configuration is valid
std::vector<ConfigViolation> validate_config(TrainConfig const& cfg);

}  // namespace skillr1
