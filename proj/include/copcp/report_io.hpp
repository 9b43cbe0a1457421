#pragma once

#include <filesystem>
#include <string>

#include "copcp/error.hpp"
#include "copcp/eval.hpp"
#include <json.hpp>

namespace copcp {

/// A configuration problem tied to one top-level key, so front ends can
/// point at the offending line of the config file.
class ConfigError : public Error {
public:
    ConfigError(std::string key, const std::string& message, const std::string& location = {})
        : Error(ErrorCode::InvalidArgument, key + ": " + message),
          key_(std::move(key)),
          message_(message),
          text_((location.empty() ? "" : location + ": ") + key_ + ": " + message) {}

    const char* what() const noexcept override { return text_.c_str(); }
    const std::string& key() const noexcept { return key_; }
    const std::string& message() const noexcept { return message_; }

private:
    std::string key_;
    std::string message_;
    std::string text_;
};

nlohmann::json to_json(const RegressorSpec& spec);
/// Rejects unknown keys; missing keys keep their defaults.
RegressorSpec regressor_spec_from_json(const nlohmann::json& j);

nlohmann::json to_json(const ExperimentConfig& config);
/// Strict: unknown keys and invalid values raise ConfigError.
ExperimentConfig config_from_json(const nlohmann::json& j);

/// Parses and validates a config file. Errors are prefixed with
/// "<path>:<line>:" pointing at the offending key when it can be located.
ExperimentConfig load_config(const std::filesystem::path& path);

nlohmann::json to_json(const ExperimentReport& report);
/// Reads back what `to_json` wrote (per-test-point volumes are not stored).
ExperimentReport report_from_json(const nlohmann::json& j);

/// One row per (fold, copula, epsilon_g): fold, copula, epsilon_g, coverage,
/// median_volume_at_<eps>.
void write_curves_csv(const std::filesystem::path& path, const ExperimentReport& report);

/// Fold-averaged validity curves against the identity calibration line.
std::string validity_svg(const ExperimentReport& report);
/// Box plots of test-point volumes at the efficiency level, one per copula.
std::string volume_svg(const ExperimentReport& report);

/// report.json, curves.csv, plots/validity.svg and plots/volumes.svg under `dir`.
void write_report_artifacts(const std::filesystem::path& dir, const ExperimentReport& report);

/// Table-shaped text summary: validity gap +/- std and median volume per copula.
std::string format_summary(const ExperimentReport& report);

}  // namespace copcp
