#ifndef POCKETGEN_COMMANDS_HPP_
#define POCKETGEN_COMMANDS_HPP_

#include <exception>
#include <ostream>
#include <string_view>
#include <vector>

#include "pocketgen/run_config.hpp"

namespace pocketgen {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitNumeric = 4;

// Each command writes its artifacts under the configured paths and prints
// a one-line JSON summary to `out`. Failures are thrown as pocketgen::Error.
void cmd_prep(const RunConfig& cfg, std::ostream& out);
void cmd_pretrain(const RunConfig& cfg, std::ostream& out);
void cmd_finetune(const RunConfig& cfg, std::ostream& out);
void cmd_sample(const RunConfig& cfg, std::ostream& out);
void cmd_eval(const RunConfig& cfg, std::ostream& out);
// Returns false when the worst relative error exceeds gc_tol.
bool cmd_gradcheck(const RunConfig& cfg, std::ostream& out);

const std::vector<std::string_view>& command_names();

int exit_code_for(const std::exception& e);

// Runs a command by name and maps failures onto exit codes, printing the
// message to `err`.
int run_command(std::string_view name, const RunConfig& cfg, std::ostream& out,
                std::ostream& err);

}  // namespace pocketgen

#endif  // POCKETGEN_COMMANDS_HPP_
