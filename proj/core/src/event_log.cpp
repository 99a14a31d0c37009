#include "skillr1/event_log.hpp"

#include <istream>
#include <ostream>

#include "json.hpp"

namespace skillr1
{
using Json = nlohmann::ordered_json;

namespace
{
template<class T>
Json optional_json(std::optional<T> const& v)
{
    return v ? Json(*v) : Json(nullptr);
}

Json skill_json(Skill const& s)
{
    Json j;
    j["id"] = s.id;
    j["name"] = s.name;
    j["description"] = s.description;
    j["vector"] = s.vector ? Json(bits_to_string(*s.vector)) : Json(nullptr);
    j["text"] = optional_json(s.text);
    j["generation"] = s.generation;
    j["parent_id"] = optional_json(s.parent_id);
    return j;
}

Skill skill_from(Json const& j)
{
    Skill s;
    s.id = j.at("id").get<std::string>();
    s.name = j.at("name").get<std::string>();
    s.description = j.value("description", std::string{});
    if (!j.at("vector").is_null())
        s.vector = bits_from_string(j.at("vector").get<std::string>());
    if (!j.at("text").is_null())
        s.text = j.at("text").get<std::string>();
    s.generation = j.at("generation").get<int>();
    if (!j.at("parent_id").is_null())
        s.parent_id = j.at("parent_id").get<std::string>();
    return s;
}

Json rollout_json(Rollout const& r)
{
    Json j;
    j["index"] = r.index;
    if (auto const* bits = std::get_if<Bits>(&r.content))
        j["content"] = {{"bits", bits_to_string(*bits)}};
    else
        j["content"] = {{"text", std::get<std::string>(r.content)}};
    j["reward"] = r.reward;
    j["seed"] = r.seed;
    if (r.error)
        j["error"] = *r.error;
    return j;
}

Rollout rollout_from(Json const& j)
{
    Rollout r;
    r.index = j.at("index").get<int>();
    auto const& c = j.at("content");
    if (c.contains("bits"))
        r.content = bits_from_string(c.at("bits").get<std::string>());
    else
        r.content = c.at("text").get<std::string>();
    r.reward = j.at("reward").get<double>();
    r.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("error"))
        r.error = j.at("error").get<std::string>();
    return r;
}

Json record_json(GenerationRecord const& rec)
{
    Json j;
    j["generation"] = rec.generation;
    j["skill"] = skill_json(rec.skill);
    Json rollouts = Json::array();
    for (auto const& r : rec.rollouts)
        rollouts.push_back(rollout_json(r));
    j["rollouts"] = std::move(rollouts);
    j["mean_reward"] = rec.mean_reward;
    j["behavior_logprob"] = optional_json(rec.behavior_logprob);
    return j;
}

GenerationRecord record_from(Json const& j)
{
    GenerationRecord rec;
    rec.generation = j.at("generation").get<int>();
    rec.skill = skill_from(j.at("skill"));
    for (auto const& r : j.at("rollouts"))
        rec.rollouts.push_back(rollout_from(r));
    rec.mean_reward = j.at("mean_reward").get<double>();
    if (!j.at("behavior_logprob").is_null())
        rec.behavior_logprob = j.at("behavior_logprob").get<double>();
    return rec;
}

Json advantages_json(AdvantageBundle const& b)
{
    Json j;
    j["generation"] = b.generation;
    j["intra"] = b.intra;
    j["inter"] = b.inter;
    j["combined"] = b.combined;
    j["lambda"] = b.lambda;
    return j;
}

Json parse(std::string_view text)
{
    try
    {
        return Json::parse(text);
    }
    catch (Json::exception const& e)
    {
        throw FormatError(std::string("event log: invalid JSON: ") + e.what());
    }
}

template<class F>
auto guarded(F&& f) -> decltype(f())
{
    try
    {
        return f();
    }
    catch (Json::exception const& e)
    {
        throw FormatError(std::string("event log: schema error: ") + e.what());
    }
}
}  // namespace

std::string encode_skill(Skill const& skill)
{
    return skill_json(skill).dump();
}

Skill decode_skill(std::string_view json)
{
    auto j = parse(json);
    return guarded([&] { return skill_from(j); });
}

std::string encode_record(GenerationRecord const& record)
{
    return record_json(record).dump();
}

GenerationRecord decode_record(std::string_view json)
{
    auto j = parse(json);
    return guarded([&] { return record_from(j); });
}

std::string encode_advantages(AdvantageBundle const& bundle)
{
    return advantages_json(bundle).dump();
}

AdvantageBundle decode_advantages(std::string_view json)
{
    auto j = parse(json);
    return guarded([&] {
        AdvantageBundle b;
        b.generation = j.at("generation").get<int>();
        b.intra = j.at("intra").get<std::vector<double>>();
        b.inter = j.at("inter").get<double>();
        b.combined = j.at("combined").get<std::vector<double>>();
        b.lambda = j.at("lambda").get<double>();
        return b;
    });
}

void write_history(std::ostream& os, EvolutionHistory const& history)
{
    Json head;
    head["event"] = "history";
    head["instance_id"] = history.instance_id();
    head["generations"] = history.size();
    os << head.dump() << '\n';
    for (auto const& rec : history.records())
    {
        Json line;
        line["event"] = "generation";
        line["instance_id"] = history.instance_id();
        line["record"] = record_json(rec);
        os << line.dump() << '\n';
    }
}

std::vector<EvolutionHistory> read_histories(std::istream& is)
{
    std::vector<EvolutionHistory> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(is, line))
    {
        ++line_no;
        if (line.empty())
            continue;
        auto j = parse(line);
        guarded([&] {
            auto event = j.at("event").get<std::string>();
            if (event == "history")
            {
                out.emplace_back(j.at("instance_id").get<std::string>());
            }
            else if (event == "generation")
            {
                if (out.empty()
                    || out.back().instance_id()
                           != j.at("instance_id").get<std::string>())
                {
                    throw FormatError("event log line "
                                      + std::to_string(line_no)
                                      + ": generation without history header");
                }
                out.back().append(record_from(j.at("record")));
            }
            return 0;
        });
    }
    return out;
}

//---------------------------------------------------------------------------//

EventLog::EventLog(std::ostream& os) : os_(&os) {}

void EventLog::write_line(std::string const& line)
{
    std::lock_guard lock(mutex_);
    *os_ << line << '\n';
}

void EventLog::emit(std::string_view event, Fields const& fields)
{
    if (!os_)
        return;
    Json j;
    j["event"] = event;
    for (auto const& [key, value] : fields)
    {
        std::visit([&j, &key = key](auto const& v) { j[key] = v; }, value);
    }
    write_line(j.dump());
}

void EventLog::emit_history(EvolutionHistory const& history, std::int64_t episode)
{
    if (!os_)
        return;
    std::lock_guard lock(mutex_);
    Json head;
    head["event"] = "history";
    head["instance_id"] = history.instance_id();
    head["episode"] = episode;
    head["generations"] = history.size();
    *os_ << head.dump() << '\n';
    for (auto const& rec : history.records())
    {
        Json line;
        line["event"] = "generation";
        line["instance_id"] = history.instance_id();
        line["record"] = record_json(rec);
        *os_ << line.dump() << '\n';
    }
}

void EventLog::emit_advantages(std::string const& instance_id,
                               std::int64_t episode,
                               AdvantageBundle const& bundle)
{
    if (!os_)
        return;
    Json j;
    j["event"] = "advantages";
    j["instance_id"] = instance_id;
    j["episode"] = episode;
    j["bundle"] = advantages_json(bundle);
    write_line(j.dump());
}

}  // namespace skillr1
