#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ngsac {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitRuntime = 2;

/// Environment variable that supplies the default seed.
inline constexpr const char* kSeedEnv = "NGSAC_SEED";

/// Runs the `ngsac` command line. `args` excludes the program name.
/// Subcommands: synth, train, eval, bench, gradcheck. Every subcommand also
/// accepts --config <json>, whose keys are long flag names; precedence is
/// flag > config file > NGSAC_SEED (seed only) > built-in default.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ngsac
