#include "skillr1/llm/adapter.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>

#include "json.hpp"

namespace skillr1::llm
{
namespace
{
constexpr char const* kTaskSystem
    = "You are a careful assistant that solves tasks step by step.";

constexpr char const* kEditorSystem
    = "You revise procedural skills used by a task-solving assistant. "
      "Reply with the complete revised skill text and nothing else.";

std::string hex64(std::uint64_t v)
{
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::string content_text(RolloutContent const& content)
{
    if (auto const* bits = std::get_if<Bits>(&content))
        return bits_to_string(*bits);
    return std::get<std::string>(content);
}

std::string format_reward(double r)
{
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", r);
    return buf;
}

std::string render_generation(GenerationRecord const& rec,
                              PromptConfig const& cfg)
{
    char head[96];
    std::snprintf(head, sizeof(head), "### Generation %d (mean reward %.2f)\n",
                  rec.generation, rec.mean_reward);
    std::string out = head;
    out += "Skill:\n";
    auto const& text = rec.skill.text;
    out += (text && !text->empty()) ? *text : std::string("(none)");
    if (out.back() != '\n')
        out += '\n';
    for (auto const& r : rec.rollouts)
    {
        out += "Rollout " + std::to_string(r.index) + " [reward="
               + format_reward(r.reward) + "]:\n";
        auto body = content_text(r.content);
        if (body.size() > cfg.max_rollout_chars)
        {
            body = body.substr(0, cfg.max_rollout_chars) + " [...]";
        }
        out += body;
        if (out.back() != '\n')
            out += '\n';
    }
    return out;
}
}  // namespace

//---------------------------------------------------------------------------//

std::vector<ChatMessage> build_task_messages(TaskInstance const& instance,
                                             Skill const& skill,
                                             PromptConfig const& cfg)
{
    std::string user = "Task:\n" + instance.question + "\n\n";
    if (skill.text && !skill.text->empty())
    {
        user += "## Skill\n";
        if (!skill.name.empty())
            user += "name: " + skill.name + "\n";
        if (!skill.description.empty())
            user += "description: " + skill.description + "\n";
        user += *skill.text;
        if (user.back() != '\n')
            user += '\n';
        user += '\n';
    }
    user += "Work through the task, then end your reply with a line of the "
            "form \""
            + cfg.answer_marker + " <answer>\".";
    return {{"system", kTaskSystem}, {"user", std::move(user)}};
}

std::string render_history(EvolutionHistory const& history,
                           PromptConfig const& cfg)
{
    auto const& recs = history.records();
    if (recs.empty())
        return {};

    std::vector<std::string> blocks;
    blocks.reserve(recs.size());
    for (auto const& rec : recs)
        blocks.push_back(render_generation(rec, cfg));

    // Keep the newest block unconditionally, then add older ones while they fit
    std::size_t first = blocks.size() - 1;
    std::size_t used = blocks.back().size();
    while (first > 0 && used + blocks[first - 1].size() <= cfg.max_history_chars)
    {
        --first;
        used += blocks[first].size();
    }

    std::string out;
    if (first > 0)
    {
        out += "[... " + std::to_string(first)
               + " earlier generation(s) truncated ...]\n";
    }
    for (std::size_t i = first; i < blocks.size(); ++i)
        out += blocks[i];
    return out;
}

std::vector<ChatMessage> build_editor_messages(TaskInstance const& instance,
                                               EvolutionHistory const& history,
                                               PromptConfig const& cfg)
{
    std::string user = "Task:\n" + instance.question + "\n\n";
    user += "History of attempts, oldest first. Each rollout is tagged with "
            "its verified reward.\n\n";
    user += render_history(history, cfg);
    user += "\nRevise the skill of the most recent generation so that later "
            "attempts earn higher reward. Keep what worked, fix what failed, "
            "and return only the revised skill text.";
    return {{"system", kEditorSystem}, {"user", std::move(user)}};
}

//---------------------------------------------------------------------------//

std::string normalize_answer(std::string const& text)
{
    std::string out;
    out.reserve(text.size());
    bool pending_space = false;
    for (unsigned char c : text)
    {
        if (std::isspace(c))
        {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space)
        {
            out += ' ';
            pending_space = false;
        }
        out += static_cast<char>(std::tolower(c));
    }
    while (!out.empty())
    {
        char c = out.back();
        if (c == '.' || c == ',' || c == ';' || c == ':' || c == '!' || c == '?'
            || c == ' ')
        {
            out.pop_back();
        }
        else
        {
            break;
        }
    }
    return out;
}

std::string extract_answer(std::string const& text, std::string const& marker)
{
    std::string tail = text;
    if (!marker.empty())
    {
        auto pos = text.rfind(marker);
        if (pos != std::string::npos)
            tail = text.substr(pos + marker.size());
    }
    // The answer is the first non-blank line of the tail
    std::size_t start = 0;
    while (start < tail.size())
    {
        auto nl = tail.find('\n', start);
        auto line = tail.substr(start, nl == std::string::npos ? std::string::npos
                                                               : nl - start);
        if (line.find_first_not_of(" \t\r") != std::string::npos)
            return line;
        if (nl == std::string::npos)
            break;
        start = nl + 1;
    }
    return {};
}

double exact_match_verifier(TaskInstance const& instance,
                            std::string const& rollout_text,
                            std::string const& marker)
{
    if (!instance.reference_answer)
    {
        throw PreconditionError("exact_match_verifier: instance " + instance.id
                                + " has no reference answer");
    }
    auto got = normalize_answer(extract_answer(rollout_text, marker));
    auto want = normalize_answer(*instance.reference_answer);
    return got == want ? 1.0 : 0.0;
}

ExactMatchVerifier::ExactMatchVerifier(std::string marker)
    : marker_(std::move(marker))
{
}

double ExactMatchVerifier::verify(TaskInstance const& instance,
                                  RolloutContent const& content) const
{
    return exact_match_verifier(instance, content_text(content), marker_);
}

//---------------------------------------------------------------------------//

LlmTaskModel::LlmTaskModel(ChatClient& client, PromptConfig cfg)
    : client_(client), cfg_(std::move(cfg))
{
}

RolloutContent LlmTaskModel::rollout(TaskInstance const& instance,
                                     Skill const& skill,
                                     std::uint64_t seed) const
{
    auto const& ep = client_.config();
    ChatRequest req;
    req.model = ep.model;
    req.messages = build_task_messages(instance, skill, cfg_);
    req.temperature = ep.temperature;
    req.max_tokens = ep.max_tokens;
    if (ep.supports_seed)
        req.seed = seed;
    return client_.complete(req, skill.id + "#rollout-" + hex64(seed));
}

LlmSkillEditor::LlmSkillEditor(ChatClient& client, PromptConfig cfg)
    : client_(client), cfg_(std::move(cfg))
{
}

SkillGenerator::Output LlmSkillEditor::generate(TaskInstance const& instance,
                                                EvolutionHistory const& history,
                                                std::uint64_t seed) const
{
    auto const& ep = client_.config();
    auto const& parent = history.back().skill;
    ChatRequest req;
    req.model = ep.model;
    req.messages = build_editor_messages(instance, history, cfg_);
    req.temperature = ep.temperature;
    req.max_tokens = ep.max_tokens;
    if (ep.supports_seed)
        req.seed = seed;

    Output out;
    out.skill = parent.make_child();
    out.skill.text = client_.complete(req, out.skill.id + "#edit");
    return out;
}

SkillGenerator::Output NoSkillGenerator::generate(TaskInstance const&,
                                                  EvolutionHistory const& history,
                                                  std::uint64_t) const
{
    Output out;
    out.skill = history.back().skill.make_child();
    out.skill.text = std::string{};
    return out;
}

//---------------------------------------------------------------------------//

std::vector<InstanceWithBank>
load_llm_tasks(std::filesystem::path const& tasks_file,
               std::filesystem::path const& skills_dir)
{
    std::ifstream is(tasks_file);
    if (!is)
        throw FormatError("cannot read task file " + tasks_file.string());

    std::vector<InstanceWithBank> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(is, line))
    {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos)
            continue;
        InstanceWithBank item;
        try
        {
            auto j = nlohmann::json::parse(line);
            item.instance.id = j.at("id").get<std::string>();
            item.instance.question = j.at("question").get<std::string>();
            if (j.contains("answer") && !j.at("answer").is_null())
                item.instance.reference_answer = j.at("answer").get<std::string>();
        }
        catch (nlohmann::json::exception const& e)
        {
            throw FormatError(tasks_file.string() + ":" + std::to_string(line_no)
                              + ": " + e.what());
        }
        item.instance.skill_bank_ref = skills_dir.string();
        if (skills_dir.empty())
        {
            Skill none;
            none.id = item.instance.id + "/none";
            none.name = "none";
            item.bank = SkillBank{item.instance.id, {std::move(none)}};
        }
        else
        {
            item.bank = load_skill_bank(skills_dir, item.instance.id);
        }
        out.push_back(std::move(item));
    }
    return out;
}

}  // namespace skillr1::llm
