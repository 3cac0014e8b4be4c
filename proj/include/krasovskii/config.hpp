#pragma once

// Experiment configuration files: strict JSON with `version: 1`, unknown keys
// rejected, every problem reported with the JSON-pointer path of its field.

#include "krasovskii/histories.hpp"
#include "krasovskii/lkf.hpp"
#include "krasovskii/lmi.hpp"
#include "krasovskii/solver.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace krasovskii {

struct Diagnostic {
  std::string path;  // JSON pointer, empty for whole-file problems
  std::string message;
  [[nodiscard]] std::string to_string() const;
};

struct CertifyTask {
  int restarts = 8;
  int max_iterations = 3000;
  std::optional<LmiCertificate> certificate;  // check this one instead of synthesizing
};

struct SimulateTask {};

struct LkfCheckTask {
  DissipationMode mode = DissipationMode::Pointwise;
  double k3 = 0.0;
  int samples = 200;
};

struct SmoothingCheckTask {
  std::optional<double> radius;
};

struct CrossCheck {
  int members = 20;
  double horizon = 50.0;
  double decay_factor = 10.0;
};

struct DelaySweepTask {
  double h_lo = 1e-3;
  double h_cap = 10.0;
  double tol = 1e-3;
  int coarse_points = 12;
  std::optional<CrossCheck> cross_check;
};

struct NormsDemoTask {
  std::vector<int> m;
};

using Task = std::variant<CertifyTask, SimulateTask, LkfCheckTask, SmoothingCheckTask, DelaySweepTask, NormsDemoTask>;

[[nodiscard]] std::string task_name(const Task& task);

struct ExperimentConfig {
  std::uint64_t seed = 0;
  double h_max = 1.0;
  std::optional<SystemModel> model;
  std::optional<DelaySignal> delay;
  std::optional<HistoryFunction> ic;
  SolverOptions solver;
  double horizon = 0.0;
  Task task;
};

struct ParseResult {
  std::optional<ExperimentConfig> config;  // set iff diagnostics is empty
  std::vector<Diagnostic> diagnostics;
};

[[nodiscard]] ParseResult parse_config(std::string_view text);
[[nodiscard]] ParseResult load_config(const std::filesystem::path& path);

/// Full validation without execution; empty iff `run` would not exit 2.
[[nodiscard]] std::vector<Diagnostic> validate_config(const std::filesystem::path& path);

}  // namespace krasovskii
