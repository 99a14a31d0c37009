#pragma once

#include <cstdint>
#include <iosfwd>
#include <mutex>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "skillr1/types.hpp"

namespace skillr1
{
//---------------------------------------------------------------------------//
// Canonical single-line JSON encodings of the core types
//---------------------------------------------------------------------------//

std::string encode_skill(Skill const& skill);
Skill decode_skill(std::string_view json);

std::string encode_record(GenerationRecord const& record);
GenerationRecord decode_record(std::string_view json);

std::string encode_advantages(AdvantageBundle const& bundle);
AdvantageBundle decode_advantages(std::string_view json);

//! Write a history as one "history" line followed by one "generation" line
//! per record
void write_history(std::ostream& os, EvolutionHistory const& history);

//! Read every history from an event stream, ignoring other event types
std::vector<EvolutionHistory> read_histories(std::istream& is);

//---------------------------------------------------------------------------//
/*!
 * Line-delimited event stream.
 *
 * Each line is a JSON object whose first key is "event". Writers from
 * several threads are serialized; callers that need byte-identical logs
 * emit from a single thread in a fixed order.
 */
class EventLog
{
  public:
    using Value = std::variant<std::int64_t, std::uint64_t, double, bool, std::string>;
    using Fields = std::vector<std::pair<std::string, Value>>;

    //! Log that discards every event
    EventLog() = default;
    explicit EventLog(std::ostream& os);

    bool enabled() const { return os_ != nullptr; }

    void emit(std::string_view event, Fields const& fields);

    //! Emit a history under an episode identifier
    void emit_history(EvolutionHistory const& history, std::int64_t episode);

    void emit_advantages(std::string const& instance_id,
                         std::int64_t episode,
                         AdvantageBundle const& bundle);

  private:
    std::ostream* os_ = nullptr;
    std::mutex mutex_;

    void write_line(std::string const& line);
};

}  // namespace skillr1
