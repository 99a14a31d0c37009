#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "skillr1/engine.hpp"

namespace skillr1::cli
{
// Exit codes
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitRuntime = 2;

//---------------------------------------------------------------------------//
// Metrics tables
//---------------------------------------------------------------------------//

//! Up to six decimals, trailing zeros trimmed, never fewer than two
std::string format_reward(double value);

//! Exactly three decimals
std::string format_accuracy(double value);

//! Signed reward delta, e.g. "+0.07"
std::string format_delta(double value);

//! "generation,mean_reward,accuracy" with one row per generation
std::string format_metrics_table(std::span<GenerationMetrics const> rows);

std::vector<GenerationMetrics> parse_metrics_table(std::string const& text,
                                                   std::string const& origin);

//! Per-update CSV header and row
std::string updates_header(int generations);
std::string format_update_row(UpdateMetrics const& m);

struct LabeledRun
{
    std::string label;
    std::vector<GenerationMetrics> rows;
};

/*!
 * Paired per-generation deltas of the first run against each other run,
 * then a final-generation summary. Throws PreconditionError when the runs
 * disagree on the number of generations.
 */
std::string compare_report(std::span<LabeledRun const> runs);

//---------------------------------------------------------------------------//

//! Entry point; args excludes the program name
int run_cli(std::vector<std::string> const& args, std::ostream& out, std::ostream& err);

}  // namespace skillr1::cli
