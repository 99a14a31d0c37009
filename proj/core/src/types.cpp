#include "skillr1/types.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

namespace skillr1
{
std::string bits_to_string(Bits const& bits)
{
    std::string out;
    out.reserve(bits.size());
    for (auto b : bits)
    {
        out.push_back(b ? '1' : '0');
    }
    return out;
}

Bits bits_from_string(std::string const& text)
{
    Bits out;
    out.reserve(text.size());
    for (char c : text)
    {
        if (c != '0' && c != '1')
        {
            throw FormatError("bitstring may only contain '0' and '1': \""
                              + text + "\"");
        }
        out.push_back(static_cast<std::uint8_t>(c == '1'));
    }
    return out;
}

int hamming(Bits const& a, Bits const& b)
{
    if (a.size() != b.size())
    {
        throw PreconditionError("hamming: length mismatch ("
                                + std::to_string(a.size()) + " vs "
                                + std::to_string(b.size()) + ")");
    }
    int dist = 0;
    for (std::size_t i = 0; i < a.size(); ++i)
    {
        dist += (a[i] != b[i]);
    }
    return dist;
}

//---------------------------------------------------------------------------//

void Skill::validate(std::optional<std::size_t> expected_length) const
{
    if (generation < 0)
    {
        throw PreconditionError("skill " + id + ": negative generation");
    }
    if (parent_id.has_value() != (generation > 0))
    {
        throw PreconditionError("skill " + id
                                + ": parent_id must be set iff generation > 0");
    }
    if (vector && expected_length && vector->size() != *expected_length)
    {
        throw PreconditionError("skill " + id + ": vector length "
                                + std::to_string(vector->size())
                                + " != configured "
                                + std::to_string(*expected_length));
    }
}

Skill Skill::make_child() const
{
    Skill child = *this;
    auto root = id.substr(0, id.rfind('@'));
    child.generation = generation + 1;
    child.id = root + "@g" + std::to_string(child.generation);
    child.parent_id = id;
    return child;
}

void SkillBank::validate() const
{
    if (skills.empty())
    {
        throw PreconditionError("skill bank must be nonempty");
    }
    for (auto const& s : skills)
    {
        if (s.generation != 0)
        {
            throw PreconditionError("skill bank entry " + s.id
                                    + " has generation "
                                    + std::to_string(s.generation));
        }
        s.validate();
    }
}

//---------------------------------------------------------------------------//

GenerationRecord GenerationRecord::make(int generation,
                                        Skill skill,
                                        std::vector<Rollout> rollouts,
                                        std::optional<double> behavior_logprob)
{
    GenerationRecord rec;
    rec.generation = generation;
    rec.skill = std::move(skill);
    rec.rollouts = std::move(rollouts);
    rec.behavior_logprob = behavior_logprob;
    double sum = 0;
    for (auto const& r : rec.rollouts)
    {
        if (!std::isfinite(r.reward))
        {
            throw PreconditionError("rollout reward must be finite");
        }
        sum += r.reward;
    }
    rec.mean_reward
        = rec.rollouts.empty() ? 0.0
                               : sum / static_cast<double>(rec.rollouts.size());
    return rec;
}

std::vector<double> GenerationRecord::rewards() const
{
    std::vector<double> out;
    out.reserve(rollouts.size());
    for (auto const& r : rollouts)
    {
        out.push_back(r.reward);
    }
    return out;
}

//---------------------------------------------------------------------------//

EvolutionHistory::EvolutionHistory(std::string instance_id)
    : instance_id_(std::move(instance_id))
{
}

void EvolutionHistory::append(GenerationRecord record)
{
    int expected = static_cast<int>(records_.size());
    if (record.generation != expected)
    {
        throw PreconditionError("history " + instance_id_
                                + ": expected generation "
                                + std::to_string(expected) + ", got "
                                + std::to_string(record.generation));
    }
    records_.push_back(std::move(record));
}

GenerationRecord const& EvolutionHistory::back() const
{
    if (records_.empty())
    {
        throw PreconditionError("history " + instance_id_ + " is empty");
    }
    return records_.back();
}

GenerationRecord const& EvolutionHistory::at(int generation) const
{
    if (generation < 0 || generation >= static_cast<int>(records_.size()))
    {
        throw PreconditionError("history " + instance_id_ + " has no generation "
                                + std::to_string(generation));
    }
    return records_[static_cast<std::size_t>(generation)];
}

EvolutionHistory EvolutionHistory::prefix(int last_generation) const
{
    EvolutionHistory out(instance_id_);
    for (int g = 0; g <= last_generation; ++g)
    {
        out.records_.push_back(at(g));
    }
    return out;
}

//---------------------------------------------------------------------------//

std::string to_string(Mode mode)
{
    switch (mode)
    {
        case Mode::train:
            return "train";
        case Mode::inference:
            return "inference";
        case Mode::vanilla_grpo:
            return "vanilla-grpo";
    }
    return "?";
}

std::string to_string(EnvKind env)
{
    return env == EnvKind::synthetic ? "synthetic" : "llm";
}

Mode mode_from_string(std::string const& text)
{
    if (text == "train")
        return Mode::train;
    if (text == "inference")
        return Mode::inference;
    if (text == "vanilla-grpo")
        return Mode::vanilla_grpo;
    throw PreconditionError("unknown mode \"" + text
                            + "\" (expected train, inference, vanilla-grpo)");
}

EnvKind env_from_string(std::string const& text)
{
    if (text == "synthetic")
        return EnvKind::synthetic;
    if (text == "llm")
        return EnvKind::llm;
    throw PreconditionError("unknown environment \"" + text
                            + "\" (expected synthetic, llm)");
}

TrainConfig TrainConfig::effective() const
{
    TrainConfig out = *this;
    if (mode == Mode::vanilla_grpo)
    {
        out.generations = 1;
        out.lambda = 0;
    }
    return out;
}

std::vector<ConfigViolation> validate_config(TrainConfig const& cfg)
{
    std::vector<ConfigViolation> errors;
    auto fail = [&errors](std::string field, std::string msg) {
        errors.push_back({std::move(field), std::move(msg)});
    };
    if (cfg.generations < 1)
        fail("generations", "G >= 1 required");
    if (cfg.group_size < 2)
        fail("group_size", "K >= 2 required");
    if (!(cfg.lambda >= 0) || !std::isfinite(cfg.lambda))
        fail("lambda", "lambda >= 0 required");
    if (!(cfg.gamma > 0 && cfg.gamma <= 1))
        fail("gamma", "gamma in (0, 1] required");
    if (!(cfg.epsilon > 0) || !std::isfinite(cfg.epsilon))
        fail("epsilon", "epsilon > 0 required");
    if (!(cfg.beta >= 0) || !std::isfinite(cfg.beta))
        fail("beta", "beta >= 0 required");
    if (!(cfg.learning_rate >= 0) || !std::isfinite(cfg.learning_rate))
        fail("learning_rate", "learning_rate >= 0 required");
    if (cfg.episodes_per_update < 1)
        fail("episodes_per_update", "episodes_per_update >= 1 required");
    if (cfg.updates < 0)
        fail("updates", "updates >= 0 required");
    if (!(cfg.init_scale >= 0) || !std::isfinite(cfg.init_scale))
        fail("init_scale", "init_scale >= 0 required");
    if (cfg.jobs < 1)
        fail("jobs", "jobs >= 1 required");
    if (cfg.eval_repeats < 1)
        fail("eval_repeats", "eval_repeats >= 1 required");
    if (cfg.environment == EnvKind::llm && cfg.mode != Mode::inference)
        fail("mode", "llm environment supports inference mode only");
    return errors;
}

//---------------------------------------------------------------------------//

bool operator==(Skill const& a, Skill const& b)
{
    return a.id == b.id && a.name == b.name && a.description == b.description
           && a.vector == b.vector
           && a.text == b.text && a.generation == b.generation
           && a.parent_id == b.parent_id;
}

bool operator==(Rollout const& a, Rollout const& b)
{
    return a.index == b.index && a.content == b.content
           && a.reward == b.reward && a.seed == b.seed && a.error == b.error;
}

bool operator==(GenerationRecord const& a, GenerationRecord const& b)
{
    return a.generation == b.generation && a.skill == b.skill
           && a.rollouts == b.rollouts && a.mean_reward == b.mean_reward
           && a.behavior_logprob == b.behavior_logprob;
}

}  // namespace skillr1
