#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "skillr1/engine.hpp"
#include "skillr1/env.hpp"
#include "skillr1/llm/chat_client.hpp"

namespace skillr1::llm
{
struct PromptConfig
{
    std::string answer_marker = "FINAL ANSWER:";
    //! Budget for the rendered history inside the editor prompt
    std::size_t max_history_chars = 6000;
    //! Rollout transcripts longer than this are clipped in the rendering
    std::size_t max_rollout_chars = 1500;
};

//---------------------------------------------------------------------------//
// Prompt assembly
//---------------------------------------------------------------------------//

/*!
 * Messages for one task rollout.
 *
 * The user message holds the task, then a "## Skill" section with the skill
 * text, then the answer-format instruction. An empty or absent skill text
 * omits the skill section entirely.
 */
std::vector<ChatMessage> build_task_messages(TaskInstance const& instance,
                                             Skill const& skill,
                                             PromptConfig const& cfg);

/*!
 * Text rendering of the history for the editor.
 *
 * Generations are rendered oldest first, each with its skill text and every
 * rollout tagged with its reward. When the total exceeds max_history_chars,
 * whole generations are dropped from the oldest end and replaced by a
 * truncation marker; the most recent generation is always kept in full.
 */
std::string render_history(EvolutionHistory const& history,
                           PromptConfig const& cfg);

std::vector<ChatMessage> build_editor_messages(TaskInstance const& instance,
                                               EvolutionHistory const& history,
                                               PromptConfig const& cfg);

//---------------------------------------------------------------------------//
// Verifier
//---------------------------------------------------------------------------//

//! Case-fold, trim, collapse whitespace, strip trailing punctuation
std::string normalize_answer(std::string const& text);

//! Text after the last occurrence of \c marker (whole text if absent)
std::string extract_answer(std::string const& text, std::string const& marker);

//! 1 iff the normalized extracted answer equals the normalized reference
double exact_match_verifier(TaskInstance const& instance,
                            std::string const& rollout_text,
                            std::string const& marker);

class ExactMatchVerifier final : public VerifierPort
{
  public:
    explicit ExactMatchVerifier(std::string marker = "FINAL ANSWER:");

    double verify(TaskInstance const& instance,
                  RolloutContent const& content) const override;

  private:
    std::string marker_;
};

//---------------------------------------------------------------------------//
// Ports over a chat endpoint
//---------------------------------------------------------------------------//

//! Frozen task model: one completion per rollout
class LlmTaskModel final : public TaskModelPort
{
  public:
    LlmTaskModel(ChatClient& client, PromptConfig cfg);

    RolloutContent rollout(TaskInstance const& instance,
                           Skill const& skill,
                           std::uint64_t seed) const override;

  private:
    ChatClient& client_;
    PromptConfig cfg_;
};

//! Frozen text editor; never requests log-probabilities
class LlmSkillEditor final : public SkillGenerator
{
  public:
    LlmSkillEditor(ChatClient& client, PromptConfig cfg);

    Output generate(TaskInstance const& instance,
                    EvolutionHistory const& history,
                    std::uint64_t seed) const override;

  private:
    ChatClient& client_;
    PromptConfig cfg_;
};

//! Editor for the no-skill baseline: every child skill has empty text
class NoSkillGenerator final : public SkillGenerator
{
  public:
    Output generate(TaskInstance const& instance,
                    EvolutionHistory const& history,
                    std::uint64_t seed) const override;
};

//---------------------------------------------------------------------------//

/*!
 * Load question/answer tasks from a JSON-lines file.
 *
 * Each line: {"id": ..., "question": ..., "answer": ...}. Every instance
 * receives its own copy of the skill bank in \c skills_dir. An empty path
 * gives each instance a single skill without text.
 */
std::vector<InstanceWithBank>
load_llm_tasks(std::filesystem::path const& tasks_file,
               std::filesystem::path const& skills_dir);

}  // namespace skillr1::llm
