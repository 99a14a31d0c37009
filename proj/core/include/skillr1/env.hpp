#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "skillr1/types.hpp"

namespace skillr1
{
//---------------------------------------------------------------------------//
// Ports
//---------------------------------------------------------------------------//

//! A port call that failed after the implementation's own retries
class PortError : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

/*!
 * Frozen task model pi_task.
 *
 * Implementations must be reentrant and deterministic in
 * (instance, skill, seed): the engine may issue the K rollouts of a group
 * from several threads.
 */
class TaskModelPort
{
  public:
    virtual ~TaskModelPort() = default;
    virtual RolloutContent rollout(TaskInstance const& instance,
                                   Skill const& skill,
                                   std::uint64_t seed) const
        = 0;
};

//! Deterministic scorer f mapping a rollout to a scalar reward
class VerifierPort
{
  public:
    virtual ~VerifierPort() = default;
    virtual double verify(TaskInstance const& instance,
                          RolloutContent const& content) const
        = 0;
    //! True when every reward is exactly 0 or 1
    virtual bool binary_rewards() const { return true; }
};

//---------------------------------------------------------------------------//
// Synthetic bitstring environment
//---------------------------------------------------------------------------//

struct SyntheticEnvConfig
{
    int bits = 8;              //!< d
    double eta = 0.1;          //!< per-bit execution noise
    int tol = 1;               //!< Hamming tolerance for success
    int instance_count = 64;
    int bank_size = 1;

    //! Throws PreconditionError listing every violated bound
    void validate() const;
};

struct InstanceWithBank
{
    TaskInstance instance;
    SkillBank bank;
};

/*!
 * Skills are d-bit vectors; executing a skill copies each bit with
 * probability 1 - eta and flips it otherwise. A rollout succeeds when it
 * lies within \c tol bits of the instance's hidden target.
 */
class SyntheticEnv final : public TaskModelPort, public VerifierPort
{
  public:
    explicit SyntheticEnv(SyntheticEnvConfig cfg);

    SyntheticEnvConfig const& config() const { return cfg_; }

    RolloutContent rollout(TaskInstance const& instance,
                           Skill const& skill,
                           std::uint64_t seed) const override;
    double verify(TaskInstance const& instance,
                  RolloutContent const& content) const override;

  private:
    SyntheticEnvConfig cfg_;
};

//! Bit-level noise process shared by the port and tests
Bits synth_rollout(Bits const& skill, double eta, std::uint64_t seed);

//! 1 iff hamming(rollout, target) <= tol
double synth_verify(Bits const& target, Bits const& rollout, int tol);

//! Targets and initial skills i.i.d. uniform, fully determined by the seed
std::vector<InstanceWithBank>
make_instances(SyntheticEnvConfig const& cfg, std::uint64_t master_seed);

//---------------------------------------------------------------------------//
// Skill bank files
//---------------------------------------------------------------------------//

/*!
 * Parse one skill file.
 *
 * Format: an optional "---" fence, then "key: value" header lines
 * (\c name required, \c description optional; indented lines continue the
 * previous value), terminated by a closing "---" fence or, for unfenced
 * files, the first blank line. Everything after the header is the body,
 * kept verbatim as the skill text.
 */
Skill parse_skill_file(std::string const& content, std::string const& origin);

//! Load every regular file in \c dir (sorted by filename) as a gen-0 skill
SkillBank load_skill_bank(std::filesystem::path const& dir,
                          std::string const& instance_id = {});

}  // namespace skillr1
