#include "copcp/conformal.hpp"

#include <cmath>
#include <fstream>

#include "copcp/error.hpp"

namespace copcp {

double box_volume(const PredictionBox& box) { return (box.upper - box.lower).prod(); }

bool box_contains(const PredictionBox& box, const Eigen::VectorXd& y) {
    if (y.size() != box.lower.size() || y.size() != box.upper.size())
        throw Error(ErrorCode::LengthMismatch, "target vector and box have different lengths");
    return (box.lower.array() <= y.array()).all() && (y.array() <= box.upper.array()).all();
}

std::vector<PredictionBox> boxes_from(const PointPredictions& points, const Eigen::VectorXd& alpha) {
    if (points.center.cols() != alpha.size() || points.scale.cols() != alpha.size() ||
        points.scale.rows() != points.center.rows())
        throw Error(ErrorCode::DimensionMismatch, "thresholds and predictions disagree on the target count");
    std::vector<PredictionBox> boxes;
    boxes.reserve(static_cast<std::size_t>(points.center.rows()));
    for (Eigen::Index i = 0; i < points.center.rows(); ++i) {
        const Eigen::VectorXd center = points.center.row(i).transpose();
        const Eigen::VectorXd half = alpha.cwiseProduct(points.scale.row(i).transpose());
        boxes.push_back({center - half, center + half, center});
    }
    return boxes;
}

ConformalPredictor::ConformalPredictor(std::shared_ptr<const FittedModel> underlying,
                                       std::shared_ptr<const ErrorModel> error_model, ScoreMatrix scores, double beta,
                                       CopulaFit copula, EcdfDivisor divisor)
    : underlying_(std::move(underlying)),
      error_model_(std::move(error_model)),
      scores_(std::move(scores)),
      beta_(beta),
      copula_(std::move(copula)),
      divisor_(divisor) {
    if (!underlying_) throw Error(ErrorCode::InvalidArgument, "conformal predictor needs an underlying model");
    if (scores_.targets() != underlying_->output_dim())
        throw Error(ErrorCode::DimensionMismatch, "score matrix width differs from the model output width");
    if (error_model_ && error_model_->model.output_dim() != underlying_->output_dim())
        throw Error(ErrorCode::DimensionMismatch, "error model width differs from the model output width");
    if (!(beta_ >= 0.0)) throw Error(ErrorCode::DomainError, "beta must be >= 0");
}

ConformalPredictor ConformalPredictor::build(const Eigen::MatrixXd& x_train, const Eigen::MatrixXd& y_train,
                                             const Eigen::MatrixXd& x_calib, const Eigen::MatrixXd& y_calib,
                                             const RegressorSpec& spec, const std::optional<RegressorSpec>& error_spec,
                                             CopulaKind copula, double beta, std::uint64_t seed,
                                             const CalibrationOptions& options) {
    if (x_calib.rows() < kMinCalibrationRows)
        throw Error(ErrorCode::CalibTooSmall, "calibration set has " + std::to_string(x_calib.rows()) +
                                                  " rows, at least " + std::to_string(kMinCalibrationRows) +
                                                  " are required");
    if (x_calib.rows() != y_calib.rows() || x_calib.cols() != x_train.cols() || y_calib.cols() != y_train.cols())
        throw Error(ErrorCode::DimensionMismatch, "calibration data shape differs from the training data");

    auto underlying = std::make_shared<const FittedModel>(fit(spec, x_train, y_train, seed));
    std::shared_ptr<const ErrorModel> error_model;
    if (error_spec) {
        const Eigen::MatrixXd yhat_train = underlying->predict(x_train);
        error_model = std::make_shared<const ErrorModel>(
            fit_error_model(*error_spec, x_train, y_train, yhat_train, seed + 1));
    }

    const Eigen::MatrixXd yhat_calib = underlying->predict(x_calib);
    const Eigen::MatrixXd mu_calib =
        error_model ? error_model->predict_mu(x_calib) : Eigen::MatrixXd::Zero(y_calib.rows(), y_calib.cols());
    ScoreMatrix scores = score_matrix(y_calib, yhat_calib, mu_calib, beta);
    CopulaFit copula_fit = fit_copula(copula, scores, options);
    return ConformalPredictor(std::move(underlying), std::move(error_model), std::move(scores), beta,
                              std::move(copula_fit), options.ecdf_divisor);
}

ConformalPredictor ConformalPredictor::with_copula(CopulaKind copula, const CalibrationOptions& options) const {
    return ConformalPredictor(underlying_, error_model_, scores_, beta_, fit_copula(copula, scores_, options),
                              options.ecdf_divisor);
}

ConfidenceSpec ConformalPredictor::confidence(double epsilon_g) const {
    return per_target_confidence(copula_.model, scores_.targets(), epsilon_g);
}

Eigen::VectorXd ConformalPredictor::thresholds(double epsilon_g) const {
    return calibrate_thresholds(scores_, copula_.model, epsilon_g, divisor_);
}

Eigen::MatrixXd ConformalPredictor::mu(const Eigen::MatrixXd& x) const {
    return error_model_ ? error_model_->predict_mu(x) : Eigen::MatrixXd::Zero(x.rows(), targets());
}

PointPredictions ConformalPredictor::point_predictions(const Eigen::MatrixXd& x) const {
    PointPredictions points{underlying_->predict(x), mu(x)};
    points.scale = (points.scale.array().exp() + beta_).matrix();
    return points;
}

PredictionBox ConformalPredictor::predict_box(const Eigen::VectorXd& x, double epsilon_g) const {
    return predict_boxes(x.transpose(), epsilon_g).front();
}

std::vector<PredictionBox> ConformalPredictor::predict_boxes(const Eigen::MatrixXd& x, double epsilon_g) const {
    return boxes_from(point_predictions(x), thresholds(epsilon_g));
}

void write_prediction_csv(const std::filesystem::path& path, const std::vector<PredictionBox>& boxes,
                          const std::vector<std::string>& target_names, double epsilon_g) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
    out.precision(17);
    for (const auto& name : target_names) out << name << "_lower," << name << "_center," << name << "_upper,";
    out << "epsilon_g\n";
    for (const auto& box : boxes) {
        if (box.targets() != static_cast<Eigen::Index>(target_names.size()))
            throw Error(ErrorCode::DimensionMismatch, "one name per box dimension is required");
        for (Eigen::Index j = 0; j < box.targets(); ++j)
            out << box.lower(j) << ',' << box.center(j) << ',' << box.upper(j) << ',';
        out << epsilon_g << '\n';
    }
}

}  // namespace copcp
