#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "copcp/conformal.hpp"
#include "copcp/dataio.hpp"

namespace copcp {

/// Empirical coverage of the boxes at each global significance level.
struct ValidityCurve {
    std::vector<double> grid;
    std::vector<double> coverage;
};

/// 0.01 followed by 0.05, 0.10, ..., 0.95 (20 points).
std::vector<double> default_epsilon_grid();

/// Fraction of rows of `y` inside their box. Throws EmptyTestSet.
double coverage(const std::vector<PredictionBox>& boxes, const Eigen::MatrixXd& y);

/// Throws EmptyTestSet, and InvalidArgument unless the grid is strictly
/// increasing inside (0, 1).
ValidityCurve validity_curve(const ConformalPredictor& predictor, const Eigen::MatrixXd& x_test,
                             const Eigen::MatrixXd& y_test, std::span<const double> grid);

/// Mean over the grid of (coverage - (1 - eps_g)), in percent. Negative means
/// the curve lies below the calibration line on average.
double validity_gap(const ValidityCurve& curve);

/// Median; even sizes average the two central values. Throws EmptySample.
double median(std::vector<double> values);

std::vector<double> box_volumes(const std::vector<PredictionBox>& boxes);

/// Median box volume over the test inputs. Throws EmptyTestSet.
double efficiency_median_volume(const ConformalPredictor& predictor, const Eigen::MatrixXd& x_test,
                                double epsilon_g = 0.1);

/// Everything a cross-validated run needs. Paths are only used by the CLI.
struct ExperimentConfig {
    std::string dataset;
    std::vector<std::string> targets;
    RegressorSpec regressor{};
    /// nullopt means no normalizing model (mu = 0).
    std::optional<RegressorSpec> error_model = RegressorSpec{};
    double beta = kDefaultBeta;
    std::vector<CopulaKind> copulas{CopulaKind::Independent, CopulaKind::Gumbel, CopulaKind::Empirical};
    GumbelEstimator gumbel_estimator = GumbelEstimator::TauInversion;
    EcdfDivisor ecdf_divisor = EcdfDivisor::N;
    std::vector<double> grid = default_epsilon_grid();
    double efficiency_epsilon = 0.1;
    int folds = 10;
    double calibration_fraction = 0.10;
    std::uint64_t seed = 0;
    std::string output_dir = "out";

    /// Throws InvalidArgument naming the offending field.
    void validate() const;
};

struct CopulaFoldResult {
    CopulaKind copula = CopulaKind::Independent;
    ValidityCurve curve;
    double gap = 0.0;
    double median_volume = 0.0;
    /// Gumbel theta (1 for independent), absent for empirical.
    std::optional<double> theta;
    std::string warning;
    /// Test-set volumes at the efficiency level; kept in memory for plots.
    std::vector<double> volumes;
};

struct FoldResult {
    int fold = 0;
    Eigen::Index train_rows = 0;
    Eigen::Index calib_rows = 0;
    Eigen::Index test_rows = 0;
    std::vector<double> target_mean;
    std::vector<double> target_std;
    double seconds = 0.0;
    std::vector<CopulaFoldResult> copulas;
};

struct CopulaSummary {
    CopulaKind copula = CopulaKind::Independent;
    double gap_mean = 0.0;
    double gap_std = 0.0;
    double volume_mean = 0.0;
    double volume_std = 0.0;
    /// Coverage averaged over folds at each grid point.
    ValidityCurve mean_curve;
};

struct ExperimentReport {
    ExperimentConfig config;
    Eigen::Index rows = 0;
    Eigen::Index features = 0;
    std::vector<std::string> target_names;
    std::vector<FoldResult> folds;
    /// One entry per configured copula, in configuration order.
    std::vector<CopulaSummary> summary;
    double seconds = 0.0;
};

/// Mean and sample standard deviation (0 for a single value).
std::pair<double, double> mean_std(std::span<const double> values);

/// Cross-validated protocol: per fold, standardize on the training rows, fit
/// the models once, then calibrate and evaluate every configured copula.
/// Folds run on up to `jobs` threads; results do not depend on `jobs`.
/// A failing fold aborts the run with its index in the message.
ExperimentReport run_experiment(const Dataset& data, const ExperimentConfig& config, int jobs = 1);

}  // namespace copcp
