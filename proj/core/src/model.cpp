#include "bftevo/model.hpp"

#include <array>
#include <cmath>
#include <sstream>

namespace bftevo {

std::string_view to_string(Strategy s) {
  return s == Strategy::Honest ? "Honest" : "Byzantine";
}

namespace {
constexpr std::array<std::string_view, 5> kClassNames = {
    "HonestStable", "ByzantineStable", "PoolingStable", "Frozen", "NotConverged"};
}

std::string_view to_string(EquilibriumClass c) {
  return kClassNames[static_cast<std::size_t>(c)];
}

std::optional<EquilibriumClass> parse_equilibrium_class(std::string_view name) {
  for (std::size_t i = 0; i < kClassNames.size(); ++i) {
    if (kClassNames[i] == name) return static_cast<EquilibriumClass>(i);
  }
  return std::nullopt;
}

std::string_view to_string(ViolationKind k) {
  switch (k) {
    case ViolationKind::NonPositiveParameter: return "NonPositiveParameter";
    case ViolationKind::ThresholdOutOfRange: return "ThresholdOutOfRange";
    case ViolationKind::FractionOutOfRange: return "FractionOutOfRange";
    case ViolationKind::RewardNotAboveSendCost: return "RewardNotAboveSendCost";
    case ViolationKind::CommitteeTooSmall: return "CommitteeTooSmall";
    case ViolationKind::InvalidRunSetting: return "InvalidRunSetting";
  }
  return "Unknown";
}

bool PayoffParams::benchmark_ordering() const noexcept {
  return reward > check_cost && check_cost > send_cost && send_cost > penalty;
}

namespace {

std::string describe(const std::vector<Violation>& violations) {
  std::ostringstream os;
  os << "invalid model:";
  for (const auto& v : violations) os << "\n  " << v.field << ": " << to_string(v.kind) << " (" << v.message << ")";
  return os.str();
}

}  // namespace

ValidationError::ValidationError(std::vector<Violation> violations)
    : std::runtime_error(describe(violations)), violations_(std::move(violations)) {}

PolicyRatios ValidatedModel::ratios() const noexcept {
  return to_policy_ratios(config_.payoffs, config_.protocol);
}

ValidationResult validate_model(const ModelConfig& config) {
  std::vector<Violation> out;
  const auto& p = config.payoffs;
  auto positive = [&out](double v, const char* field) {
    // !(v > 0) also rejects NaN
    if (!(v > 0.0) || !std::isfinite(v)) {
      out.push_back({ViolationKind::NonPositiveParameter, field, "must be finite and > 0"});
      return false;
    }
    return true;
  };
  const bool r_ok = positive(p.reward, "reward");
  positive(p.check_cost, "check_cost");
  const bool s_ok = positive(p.send_cost, "send_cost");
  positive(p.penalty, "penalty");
  if (r_ok && s_ok && !(p.reward > p.send_cost)) {
    out.push_back({ViolationKind::RewardNotAboveSendCost, "reward", "reward must exceed send_cost"});
  }

  const auto& proto = config.protocol;
  if (proto.committee_size < 2) {
    out.push_back({ViolationKind::CommitteeTooSmall, "committee_size", "committee needs at least 2 members"});
  }
  if (proto.threshold < 1 || proto.threshold > proto.committee_size) {
    out.push_back({ViolationKind::ThresholdOutOfRange, "threshold", "threshold must satisfy 1 <= nu <= N"});
  }

  auto fraction = [&out](double v, const char* field) {
    if (!(v >= 0.0 && v <= 1.0)) out.push_back({ViolationKind::FractionOutOfRange, field, "must lie in [0, 1]"});
  };
  fraction(config.belief.assortativity, "assortativity");
  fraction(config.initial_honest_fraction, "initial_honest_fraction");

  if (config.max_rounds < 1) {
    out.push_back({ViolationKind::InvalidRunSetting, "max_rounds", "must be >= 1"});
  }
  if (!(config.convergence_tol > 0.0) || !std::isfinite(config.convergence_tol)) {
    out.push_back({ViolationKind::InvalidRunSetting, "convergence_tol", "must be finite and > 0"});
  }

  ValidationResult result;
  if (!out.empty()) {
    result.violations = std::move(out);
    return result;
  }

  std::vector<ValidationWarning> warnings;
  const bool benchmark = p.benchmark_ordering();
  if (!benchmark) {
    warnings.push_back({"payoffs", "payoffs do not follow reward > check_cost > send_cost > penalty"});
  }
  result.model = ValidatedModel(config, benchmark, std::move(warnings));
  return result;
}

ValidatedModel require_valid(const ModelConfig& config) {
  auto result = validate_model(config);
  if (!result) throw ValidationError(std::move(result.violations));
  return std::move(*result.model);
}

PolicyRatios to_policy_ratios(const PayoffParams& payoffs, const ProtocolParams& protocol) {
  return {payoffs.reward / payoffs.penalty, payoffs.send_cost / payoffs.penalty, protocol.pivotality_rate()};
}

PayoffParams with_ratios(PayoffParams base, double alpha, double beta) {
  base.reward = alpha * base.penalty;
  base.send_cost = beta * base.penalty;
  return base;
}

}  // namespace bftevo
