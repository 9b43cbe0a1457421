#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace copcp {

enum class RegressorKind { Mlp, Knn, Ridge };

std::string_view to_string(RegressorKind kind);
RegressorKind regressor_kind_from_string(std::string_view name);

/// Hyperparameters for the point regressor (and for the error model, which
/// reuses the same machinery). Only the fields of the selected kind are used.
struct RegressorSpec {
    RegressorKind kind = RegressorKind::Mlp;
    // mlp: the first entry is the input SELU layer, the rest are hidden SELU
    // layers followed by dropout; a linear output layer is always appended.
    std::vector<int> widths{128, 128, 64, 32};
    double dropout = 0.1;
    int epochs = 100;
    double lr = 1e-3;
    int batch = 32;
    // knn
    int k = 5;
    // ridge
    double l2 = 1e-6;

    /// Throws InvalidArgument when a hyperparameter is out of range.
    void validate() const;

    bool operator==(const RegressorSpec&) const = default;
};

// --- SELU multilayer perceptron -------------------------------------------

inline constexpr double kSeluLambda = 1.0507009873554804934193349852946;
inline constexpr double kSeluAlpha = 1.6732632423543772848170429916717;

double selu(double x);
double selu_derivative(double x);

/// Dense layer stack. weights[l] is (out x in); samples are rows.
struct MlpParams {
    std::vector<Eigen::MatrixXd> weights;
    std::vector<Eigen::VectorXd> biases;

    std::size_t layer_count() const { return weights.size(); }
    Eigen::Index parameter_count() const;
    /// Flat views in layer order (weights column-major, then bias) for
    /// finite-difference checks and optimizers.
    Eigen::VectorXd flatten() const;
    void assign_flat(const Eigen::VectorXd& flat);
    bool operator==(const MlpParams&) const;
};

/// LeCun-normal initialisation, zero biases. `hidden` may be empty, which
/// yields a single linear layer.
MlpParams mlp_init(Eigen::Index input_dim, const std::vector<int>& hidden, Eigen::Index output_dim,
                   std::mt19937_64& rng);

/// Forward pass with dropout disabled; every layer but the last applies SELU.
Eigen::MatrixXd mlp_forward(const MlpParams& params, const Eigen::MatrixXd& x);

/// Mean squared error averaged over every entry of the (batch x m) output.
double mlp_loss(const MlpParams& params, const Eigen::MatrixXd& x, const Eigen::MatrixXd& y);

/// Analytic gradient of `mlp_loss` (dropout disabled), same shape as `params`.
MlpParams mlp_gradient(const MlpParams& params, const Eigen::MatrixXd& x, const Eigen::MatrixXd& y);

// --- fitted models ----------------------------------------------------------

struct RidgeModel {
    Eigen::MatrixXd coef;         // d x m
    Eigen::RowVectorXd intercept;  // 1 x m
};

struct KnnModel {
    Eigen::MatrixXd x;
    Eigen::MatrixXd y;
    int k = 1;
};

struct MlpModel {
    MlpParams params;
    /// Full-data MSE before training (entry 0) and after each epoch.
    std::vector<double> loss_history;
};

class FittedModel {
public:
    using Params = std::variant<MlpModel, KnnModel, RidgeModel>;

    FittedModel(RegressorSpec spec, Params params, Eigen::Index input_dim, Eigen::Index output_dim);

    const RegressorSpec& spec() const { return spec_; }
    const Params& params() const { return params_; }
    Eigen::Index input_dim() const { return input_dim_; }
    Eigen::Index output_dim() const { return output_dim_; }

    /// (rows x m) predictions. Throws DimensionMismatch on a wrong column count.
    Eigen::MatrixXd predict(const Eigen::MatrixXd& x) const;

private:
    RegressorSpec spec_;
    Params params_;
    Eigen::Index input_dim_;
    Eigen::Index output_dim_;
};

/// Deterministic given `seed`. Throws DimensionMismatch, NonFiniteLoss.
FittedModel fit(const RegressorSpec& spec, const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, std::uint64_t seed);

inline Eigen::MatrixXd predict(const FittedModel& model, const Eigen::MatrixXd& x) { return model.predict(x); }

// --- normalizing error model -----------------------------------------------

inline constexpr double kDefaultResidualFloor = 1e-8;

/// ln(max(|y - yhat|, floor)) entrywise.
Eigen::MatrixXd log_residuals(const Eigen::MatrixXd& y, const Eigen::MatrixXd& yhat,
                              double floor = kDefaultResidualFloor);

/// Multi-output regressor of log absolute residuals. Outputs are in log space.
struct ErrorModel {
    FittedModel model;
    double residual_floor = kDefaultResidualFloor;

    Eigen::MatrixXd predict_mu(const Eigen::MatrixXd& x) const { return model.predict(x); }
};

ErrorModel fit_error_model(const RegressorSpec& spec, const Eigen::MatrixXd& x_train, const Eigen::MatrixXd& y_train,
                           const Eigen::MatrixXd& yhat_train, std::uint64_t seed,
                           double residual_floor = kDefaultResidualFloor);

}  // namespace copcp
