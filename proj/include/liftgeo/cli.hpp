#pragma once

#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "liftgeo/synth.hpp"
#include "liftgeo/training.hpp"

namespace liftgeo {

class IdMismatch : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Process exit codes.
enum ExitCode : int { kExitOk = 0, kExitConfig = 1, kExitData = 2, kExitNumeric = 3 };

/// Flat `key = value` settings; '#' starts a comment. Later keys override earlier ones.
std::map<std::string, std::string> parse_settings(const std::string& text);
std::map<std::string, std::string> load_settings(const std::filesystem::path& path);

/// Applies one training setting. Keys: batch_size, c, w2d, w3d, wt, lambda, azimuth_range,
/// elevation_range (radians, "lo,hi"), epochs, seed, flags, temporal_m, lifter_width,
/// lifter_blocks, disc_width, disc_blocks, lr_lifter, lr_discriminator, d_steps, eval_limit,
/// and path.<name>. Throws ConfigInvalid for unknown keys or bad values.
void apply_training_setting(TrainingConfig& cfg, const std::string& key, const std::string& value);
TrainingConfig training_config_from(const std::map<std::string, std::string>& settings);

/// Worker cap from LIFTGEO_THREADS (0 when unset). Throws ConfigInvalid when malformed.
int thread_cap_from_env();

/// Runs the command line; returns the process exit code. Errors are reported on stderr.
int run_cli(int argc, const char* const* argv);
int run_cli(const std::vector<std::string>& args);

}  // namespace liftgeo
