#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "skillr1/env.hpp"
#include "skillr1/llm/adapter.hpp"
#include "skillr1/llm/chat_client.hpp"
#include "skillr1/types.hpp"

namespace skillr1::cli
{
enum class CassetteMode
{
    off,
    record,
    replay
};

struct LlmSettings
{
    llm::EndpointConfig endpoint;
    llm::PromptConfig prompt;
    std::string tasks;      //!< JSON-lines task file
    std::string skills;     //!< skill bank directory
    std::string cassettes;  //!< cassette directory
    CassetteMode cassette_mode = CassetteMode::off;
    bool no_skills = false;  //!< run without any skill text
    int rollout_concurrency = 1;
};

//! Everything one run needs: loop, synthetic environment, endpoint
struct ExperimentConfig
{
    TrainConfig train;
    SyntheticEnvConfig synthetic;
    LlmSettings llm;
};

/*!
 * Flat "key = value" text with [train], [synthetic], and [llm] sections.
 *
 * '#' and ';' start comments at line start or after whitespace. Unknown sections or keys are errors, as is
 * any attempt to put credentials in the file.
 */
ExperimentConfig parse_config(std::string const& text, std::string const& origin);
ExperimentConfig load_config(std::filesystem::path const& path);

//! Set one key; throws FormatError on unknown keys or bad values
void apply_setting(ExperimentConfig& cfg,
                   std::string const& section,
                   std::string const& key,
                   std::string const& value);

//! Canonical rendering; parse_config(write_config(c)) reproduces c
std::string write_config(ExperimentConfig const& cfg);

//! Validation messages for the whole experiment ("field: message")
std::vector<std::string> validate_experiment(ExperimentConfig const& cfg);

}  // namespace skillr1::cli
