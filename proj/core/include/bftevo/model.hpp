#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace bftevo {

enum class Strategy : std::uint8_t { Honest, Byzantine };

/// Terminal label of a population trajectory or of an analytic prediction.
enum class EquilibriumClass { HonestStable, ByzantineStable, PoolingStable, Frozen, NotConverged };

std::string_view to_string(Strategy s);
std::string_view to_string(EquilibriumClass c);
std::optional<EquilibriumClass> parse_equilibrium_class(std::string_view name);

/// Monetary primitives of one consensus round, in utility units.
struct PayoffParams {
  double reward = 0.0;      // paid to validators that send a message for an accepted block
  double check_cost = 0.0;  // cost of checking a proposal's validity
  double send_cost = 0.0;   // cost of sending a vote
  double penalty = 0.0;     // borne by honest validators when an invalid block is accepted

  /// reward > check_cost > send_cost > penalty
  [[nodiscard]] bool benchmark_ordering() const noexcept;
};

struct ProtocolParams {
  int committee_size = 0;  // N
  int threshold = 0;       // votes needed to accept a proposal

  [[nodiscard]] double pivotality_rate() const noexcept {
    return static_cast<double>(threshold) / static_cast<double>(committee_size);
  }
};

/// Subjective probability of being matched with a same-strategy proposer.
struct Belief {
  double assortativity = 0.0;
};

/// Dimensionless reparametrization: alpha = R/kappa, beta = c_send/kappa, gamma = nu/N.
struct PolicyRatios {
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
};

inline constexpr int kDefaultMaxRounds = 10'000;
inline constexpr double kDefaultConvergenceTol = 1e-9;

struct ModelConfig {
  PayoffParams payoffs;
  ProtocolParams protocol;
  Belief belief;
  double initial_honest_fraction = 0.0;
  int max_rounds = kDefaultMaxRounds;
  double convergence_tol = kDefaultConvergenceTol;
  std::uint64_t rng_seed = 0;
};

enum class ViolationKind {
  NonPositiveParameter,
  ThresholdOutOfRange,
  FractionOutOfRange,
  RewardNotAboveSendCost,
  CommitteeTooSmall,
  InvalidRunSetting,
};

std::string_view to_string(ViolationKind k);

struct Violation {
  ViolationKind kind;
  std::string field;
  std::string message;
};

struct ValidationWarning {
  std::string field;
  std::string message;
};

class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(std::vector<Violation> violations);
  [[nodiscard]] const std::vector<Violation>& violations() const noexcept { return violations_; }

 private:
  std::vector<Violation> violations_;
};

struct ValidationResult;
ValidationResult validate_model(const ModelConfig& config);

/// A ModelConfig whose invariants have been checked. Immutable.
class ValidatedModel {
 public:
  [[nodiscard]] const ModelConfig& config() const noexcept { return config_; }
  [[nodiscard]] const PayoffParams& payoffs() const noexcept { return config_.payoffs; }
  [[nodiscard]] const ProtocolParams& protocol() const noexcept { return config_.protocol; }
  [[nodiscard]] const Belief& belief() const noexcept { return config_.belief; }
  [[nodiscard]] double initial_honest_fraction() const noexcept { return config_.initial_honest_fraction; }
  [[nodiscard]] bool benchmark_ordering() const noexcept { return benchmark_ordering_; }
  [[nodiscard]] const std::vector<ValidationWarning>& warnings() const noexcept { return warnings_; }
  [[nodiscard]] PolicyRatios ratios() const noexcept;

 private:
  friend ValidationResult validate_model(const ModelConfig& config);
  ValidatedModel(ModelConfig config, bool benchmark, std::vector<ValidationWarning> warnings)
      : config_(std::move(config)), benchmark_ordering_(benchmark), warnings_(std::move(warnings)) {}

  ModelConfig config_;
  bool benchmark_ordering_ = false;
  std::vector<ValidationWarning> warnings_;
};

/// Exactly one of `model` / `violations` is populated.
struct ValidationResult {
  std::optional<ValidatedModel> model;
  std::vector<Violation> violations;

  [[nodiscard]] bool ok() const noexcept { return model.has_value(); }
  explicit operator bool() const noexcept { return ok(); }
};

/// Throws ValidationError listing every violation.
ValidatedModel require_valid(const ModelConfig& config);

PolicyRatios to_policy_ratios(const PayoffParams& payoffs, const ProtocolParams& protocol);

/// Inverse of the reward/send-cost part of to_policy_ratios, holding the penalty fixed.
PayoffParams with_ratios(PayoffParams base, double alpha, double beta);

}  // namespace bftevo
