#include "skillr1/env.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "skillr1/rng.hpp"

namespace skillr1
{
void SyntheticEnvConfig::validate() const
{
    std::string errors;
    if (bits < 1)
        errors += " bits >= 1 required;";
    if (!(eta >= 0 && eta < 0.5))
        errors += " eta in [0, 0.5) required;";
    if (tol < 0 || tol > bits)
        errors += " tol in [0, bits] required;";
    if (instance_count < 1)
        errors += " instance_count >= 1 required;";
    if (bank_size < 1)
        errors += " bank_size >= 1 required;";
    if (!errors.empty())
    {
        errors.pop_back();
        throw PreconditionError("synthetic env config:" + errors);
    }
}

Bits synth_rollout(Bits const& skill, double eta, std::uint64_t seed)
{
    Philox rng(seed);
    Bits out = skill;
    for (auto& b : out)
    {
        if (rng.uniform() < eta)
        {
            b = static_cast<std::uint8_t>(1 - b);
        }
    }
    return out;
}

double synth_verify(Bits const& target, Bits const& rollout, int tol)
{
    if (target.size() != rollout.size())
    {
        throw PreconditionError("synth_verify: rollout has "
                                + std::to_string(rollout.size())
                                + " bits, target has "
                                + std::to_string(target.size()));
    }
    return hamming(target, rollout) <= tol ? 1.0 : 0.0;
}

SyntheticEnv::SyntheticEnv(SyntheticEnvConfig cfg) : cfg_(cfg)
{
    cfg_.validate();
}

RolloutContent SyntheticEnv::rollout(TaskInstance const&,
                                     Skill const& skill,
                                     std::uint64_t seed) const
{
    if (!skill.vector)
    {
        throw PreconditionError("synthetic rollout: skill " + skill.id
                                + " has no vector");
    }
    if (static_cast<int>(skill.vector->size()) != cfg_.bits)
    {
        throw PreconditionError("synthetic rollout: skill " + skill.id
                                + " has wrong length");
    }
    return synth_rollout(*skill.vector, cfg_.eta, seed);
}

double SyntheticEnv::verify(TaskInstance const& instance,
                            RolloutContent const& content) const
{
    auto const* bits = std::get_if<Bits>(&content);
    if (!bits)
    {
        throw PreconditionError("synthetic verifier: rollout is not a "
                                "bitstring");
    }
    return synth_verify(instance.target, *bits, cfg_.tol);
}

namespace
{
Bits uniform_bits(Philox& rng, int n)
{
    Bits out(static_cast<std::size_t>(n));
    for (auto& b : out)
    {
        b = static_cast<std::uint8_t>(rng.below(2));
    }
    return out;
}

std::string instance_name(int i)
{
    char buf[32];
    std::snprintf(buf, sizeof(buf), "inst-%04d", i);
    return buf;
}
}  // namespace

std::vector<InstanceWithBank>
make_instances(SyntheticEnvConfig const& cfg, std::uint64_t master_seed)
{
    cfg.validate();
    std::vector<InstanceWithBank> out;
    out.reserve(static_cast<std::size_t>(cfg.instance_count));
    for (int i = 0; i < cfg.instance_count; ++i)
    {
        auto key = derive_seed(
            {static_cast<std::uint64_t>(StreamPurpose::instances),
             master_seed,
             static_cast<std::uint64_t>(i)});
        Philox target_rng(key, 0);
        Philox bank_rng(key, 1);

        InstanceWithBank item;
        item.instance.id = instance_name(i);
        item.instance.target = uniform_bits(target_rng, cfg.bits);
        item.instance.skill_bank_ref = item.instance.id + "/bank";
        item.bank.instance_id = item.instance.id;
        for (int s = 0; s < cfg.bank_size; ++s)
        {
            Skill skill;
            skill.id = item.instance.skill_bank_ref + std::to_string(s);
            skill.name = "synthetic-" + std::to_string(s);
            skill.vector = uniform_bits(bank_rng, cfg.bits);
            item.bank.skills.push_back(std::move(skill));
        }
        out.push_back(std::move(item));
    }
    return out;
}

//---------------------------------------------------------------------------//
// Skill files
//---------------------------------------------------------------------------//

namespace
{
std::string trim(std::string const& s)
{
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos)
        return {};
    auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

bool is_fence(std::string const& line)
{
    return trim(line) == "---";
}
}  // namespace

Skill parse_skill_file(std::string const& content, std::string const& origin)
{
    // Split while keeping track of byte offsets so the body stays verbatim
    std::vector<std::pair<std::size_t, std::string>> lines;
    for (std::size_t pos = 0; pos < content.size();)
    {
        auto nl = content.find('\n', pos);
        auto end = nl == std::string::npos ? content.size() : nl;
        lines.emplace_back(pos, content.substr(pos, end - pos));
        pos = end + 1;
    }

    auto fail = [&origin](std::size_t line_no, std::string const& what) {
        throw FormatError(origin + ":" + std::to_string(line_no + 1)
                          + ": malformed front-matter: " + what);
    };

    std::size_t i = 0;
    bool fenced = !lines.empty() && is_fence(lines[0].second);
    if (fenced)
    {
        ++i;
    }

    Skill skill;
    std::string* current = nullptr;
    bool closed = false;
    for (; i < lines.size(); ++i)
    {
        auto const& line = lines[i].second;
        if (fenced && is_fence(line))
        {
            closed = true;
            ++i;
            break;
        }
        if (trim(line).empty())
        {
            if (!fenced)
            {
                closed = true;
                ++i;
                break;
            }
            continue;
        }
        if ((line[0] == ' ' || line[0] == '\t') && current)
        {
            *current += (current->empty() ? "" : " ") + trim(line);
            continue;
        }
        auto colon = line.find(':');
        if (colon == std::string::npos || colon == 0)
        {
            fail(i, "expected 'key: value', got \"" + trim(line) + "\"");
        }
        auto key = trim(line.substr(0, colon));
        auto value = trim(line.substr(colon + 1));
        if (key == "name")
        {
            skill.name = value;
            current = &skill.name;
        }
        else if (key == "description")
        {
            skill.description = value;
            current = &skill.description;
        }
        else
        {
            current = nullptr;  // other keys are tolerated and dropped
        }
    }
    if (fenced && !closed)
    {
        fail(lines.size() - 1, "missing closing '---'");
    }
    if (skill.name.empty())
    {
        fail(0, "missing 'name'");
    }

    auto body_start = i < lines.size() ? lines[i].first : content.size();
    skill.text = content.substr(body_start);
    skill.generation = 0;
    return skill;
}

SkillBank load_skill_bank(std::filesystem::path const& dir,
                          std::string const& instance_id)
{
    namespace fs = std::filesystem;
    std::error_code ec;
    if (!fs::is_directory(dir, ec))
    {
        throw FormatError("skill bank " + dir.string()
                          + " is not a readable directory");
    }
    std::vector<fs::path> files;
    for (auto const& entry : fs::directory_iterator(dir, ec))
    {
        if (entry.is_regular_file())
        {
            files.push_back(entry.path());
        }
    }
    if (ec)
    {
        throw FormatError("cannot list skill bank " + dir.string() + ": "
                          + ec.message());
    }
    std::sort(files.begin(), files.end());

    SkillBank bank;
    bank.instance_id = instance_id;
    for (auto const& path : files)
    {
        std::ifstream is(path, std::ios::binary);
        if (!is)
        {
            throw FormatError("cannot read skill file " + path.string());
        }
        std::ostringstream ss;
        ss << is.rdbuf();
        auto skill = parse_skill_file(ss.str(), path.string());
        skill.id = (instance_id.empty() ? std::string{} : instance_id + "/")
                   + path.filename().string();
        bank.skills.push_back(std::move(skill));
    }
    bank.validate();
    return bank;
}

}  // namespace skillr1
