#pragma once

// Command-line front end: run configuration, oracle specs and the
// subcommands behind the `ava` executable.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "ava/attack.hpp"
#include "ava/eval.hpp"
#include "ava/imaging_io.hpp"
#include "ava/oracle.hpp"

namespace ava::cli {

enum ExitCode : int { kOk = 0, kFailure = 1, kConfigError = 2, kOracleError = 3 };

struct RunConfig {
  AttackConfig attack;
  std::filesystem::path manifest;
  std::string oracle;      // builtin:<weights.json> | remote:<address>
  std::string model_name;  // defaults to a name derived from `oracle`
  std::filesystem::path out = "ava-out";
  std::uint64_t seed = 0;
  int jobs = 1;
  SampleFilter filter = SampleFilter::initially_correct;
  std::filesystem::path eval_input;  // directory written by a previous `attack`
  std::vector<SweepAxis> sweep;
  std::vector<std::string> transfer_models;
};

/// Every accepted key except the open-ended `sweep.<parameter>` family.
std::vector<std::string> config_keys();

/// AVA_ followed by the key upper-cased with '.' mapped to '_':
/// "attack.max_iters" -> "AVA_ATTACK_MAX_ITERS".
std::string env_name(std::string_view key);

/// Sets one key. Relative paths resolve against `base_dir`. Throws
/// ConfigError for unknown keys and malformed values.
void apply_setting(RunConfig& cfg, std::string_view key, std::string_view value,
                   const std::filesystem::path& base_dir);

/// Parses `section.key = value` lines; '#' starts a comment. `origin` names
/// the source in error messages.
RunConfig parse_config(std::string_view text, const std::filesystem::path& base_dir,
                       std::string_view origin = "<config>");
RunConfig load_config(const std::filesystem::path& path);

using EnvLookup = std::function<const char*(const char*)>;

/// Applies AVA_* environment overrides for every known key, plus
/// sweep.<parameter> for each tunable parameter. Paths resolve against the
/// working directory.
void apply_env_overrides(RunConfig& cfg, const EnvLookup& lookup);

/// Checks the hyperparameters; converts InvalidArgument into ConfigError.
void validate(const RunConfig& cfg);

/// Opens an oracle from its spec. "builtin:<path>" loads a reference
/// classifier; "remote:<address>" connects over the wire protocol.
std::unique_ptr<GradientOracle> open_oracle(const std::string& spec);
std::string model_name_for(const std::string& spec);

/// Loads every manifest image, in an order shuffled by `seed`. Throws
/// IoError naming the first unreadable file.
std::vector<Sample> load_samples(const DatasetManifest& manifest, std::uint64_t seed);

// Subcommands. Each returns an exit code and writes a short summary to
// `out`; errors propagate as exceptions and are mapped by run().
void cmd_render(const std::filesystem::path& input, const PhysicalParams& params,
                const std::filesystem::path& out);
int cmd_attack(const RunConfig& cfg, std::ostream& out);
int cmd_sweep(const RunConfig& cfg, std::ostream& out);
int cmd_eval(const RunConfig& cfg, std::ostream& out);
int cmd_transfer(const RunConfig& cfg, std::ostream& out);

/// Full command-line entry point. Diagnostics go to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err,
        const EnvLookup& lookup);

}  // namespace ava::cli
