#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "copcp/copula.hpp"
#include "copcp/regress.hpp"
#include "copcp/scores.hpp"

namespace copcp {

/// Hyper-rectangle prediction: the product of per-target closed intervals.
struct PredictionBox {
    Eigen::VectorXd lower;
    Eigen::VectorXd upper;
    /// Underlying point prediction the box is centered on.
    Eigen::VectorXd center;

    Eigen::Index targets() const { return lower.size(); }
};

/// prod_j (upper_j - lower_j)
double box_volume(const PredictionBox& box);

/// lower_j <= y_j <= upper_j for every j. Throws LengthMismatch.
bool box_contains(const PredictionBox& box, const Eigen::VectorXd& y);

/// Underlying predictions and the per-target interval scale exp(mu) + beta.
struct PointPredictions {
    Eigen::MatrixXd center;
    Eigen::MatrixXd scale;
};

/// Boxes centered on each prediction with half-widths alpha_j * scale_j.
std::vector<PredictionBox> boxes_from(const PointPredictions& points, const Eigen::VectorXd& alpha);

inline constexpr double kDefaultBeta = 0.1;
inline constexpr Eigen::Index kMinCalibrationRows = 8;

/// Inductive conformal multi-target regressor: underlying model, optional
/// normalizing error model, calibration scores and a fitted copula.
/// Immutable after construction; every query is const.
class ConformalPredictor {
public:
    /// Without an error model mu is taken as 0, so scores are |y - yhat| / (1 + beta).
    ConformalPredictor(std::shared_ptr<const FittedModel> underlying, std::shared_ptr<const ErrorModel> error_model,
                       ScoreMatrix scores, double beta, CopulaFit copula, EcdfDivisor divisor = EcdfDivisor::N);

    /// Fits the underlying model and (when `error_spec` is set) the error model
    /// on the training rows, scores the calibration rows and fits the copula.
    /// Throws CalibTooSmall when fewer than 8 calibration rows are given.
    static ConformalPredictor build(const Eigen::MatrixXd& x_train, const Eigen::MatrixXd& y_train,
                                    const Eigen::MatrixXd& x_calib, const Eigen::MatrixXd& y_calib,
                                    const RegressorSpec& spec, const std::optional<RegressorSpec>& error_spec,
                                    CopulaKind copula, double beta = kDefaultBeta, std::uint64_t seed = 0,
                                    const CalibrationOptions& options = {});

    /// Same fitted models and scores, recalibrated with another copula.
    ConformalPredictor with_copula(CopulaKind copula, const CalibrationOptions& options = {}) const;

    ConfidenceSpec confidence(double epsilon_g) const;
    /// alpha_s, recomputed from the stored scores on every call.
    Eigen::VectorXd thresholds(double epsilon_g) const;

    PointPredictions point_predictions(const Eigen::MatrixXd& x) const;
    PredictionBox predict_box(const Eigen::VectorXd& x, double epsilon_g) const;
    std::vector<PredictionBox> predict_boxes(const Eigen::MatrixXd& x, double epsilon_g) const;

    const FittedModel& underlying() const { return *underlying_; }
    const ErrorModel* error_model() const { return error_model_.get(); }
    const ScoreMatrix& scores() const { return scores_; }
    const CopulaModel& copula() const { return copula_.model; }
    const std::optional<GumbelFit>& gumbel_fit() const { return copula_.gumbel; }
    double beta() const { return beta_; }
    EcdfDivisor divisor() const { return divisor_; }
    Eigen::Index targets() const { return scores_.targets(); }

private:
    Eigen::MatrixXd mu(const Eigen::MatrixXd& x) const;

    std::shared_ptr<const FittedModel> underlying_;
    std::shared_ptr<const ErrorModel> error_model_;
    ScoreMatrix scores_;
    double beta_;
    CopulaFit copula_;
    EcdfDivisor divisor_;
};

inline PredictionBox predict_box(const ConformalPredictor& pred, const Eigen::VectorXd& x, double epsilon_g) {
    return pred.predict_box(x, epsilon_g);
}

/// CSV with <name>_lower, <name>_center, <name>_upper per target and an
/// epsilon_g column.
void write_prediction_csv(const std::filesystem::path& path, const std::vector<PredictionBox>& boxes,
                          const std::vector<std::string>& target_names, double epsilon_g);

}  // namespace copcp
