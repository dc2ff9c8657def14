#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace filterstab {

inline constexpr const char* kToolName = "filterstab";
inline constexpr const char* kToolVersion = "0.1.0";

struct ExperimentConfig {
  std::string command;
  std::string model_path;
  nlohmann::json mu = "uniform";
  nlohmann::json nu = "uniform";
  int horizon = 50;
  int trials = 500;
  std::uint64_t seed = 0;
  double tol = 1e-9;
  int nmax = 3;
  int threads = 1;
  std::string output_path;  // empty: stdout
  std::string format;       // empty: command default

  // Fields that determine the output. Thread count and output path are
  // excluded so that they do not change the digest.
  nlohmann::json ToJson() const;
};

/// Applies a JSON config object on top of `config`. Unknown keys and wrong
/// types raise ValidationError naming the field.
void ApplyConfigJson(const nlohmann::json& doc, ExperimentConfig& config);

/// Hex SHA-256.
std::string Sha256Hex(const std::string& bytes);

/// Runs one subcommand. `args` excludes the program name. Returns the exit
/// status: 0 success, 1 validation error, 2 runtime error.
int RunCli(const std::vector<std::string>& args, std::ostream& out,
           std::ostream& err);

}  // namespace filterstab
