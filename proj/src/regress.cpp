#include "copcp/regress.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "copcp/error.hpp"

namespace copcp {

std::string_view to_string(RegressorKind kind) {
    switch (kind) {
        case RegressorKind::Mlp: return "mlp";
        case RegressorKind::Knn: return "knn";
        case RegressorKind::Ridge: return "ridge";
    }
    return "unknown";
}

RegressorKind regressor_kind_from_string(std::string_view name) {
    if (name == "mlp") return RegressorKind::Mlp;
    if (name == "knn") return RegressorKind::Knn;
    if (name == "ridge") return RegressorKind::Ridge;
    throw Error(ErrorCode::InvalidArgument, "unknown regressor kind '" + std::string(name) + "'");
}

void RegressorSpec::validate() const {
    switch (kind) {
        case RegressorKind::Mlp:
            for (int w : widths)
                if (w < 1) throw Error(ErrorCode::InvalidArgument, "mlp layer widths must be >= 1");
            if (!(dropout >= 0.0 && dropout < 1.0))
                throw Error(ErrorCode::InvalidArgument, "dropout must lie in [0, 1)");
            if (epochs < 1) throw Error(ErrorCode::InvalidArgument, "epochs must be >= 1");
            if (!(lr > 0.0)) throw Error(ErrorCode::InvalidArgument, "lr must be > 0");
            if (batch < 1) throw Error(ErrorCode::InvalidArgument, "batch must be >= 1");
            break;
        case RegressorKind::Knn:
            if (k < 1) throw Error(ErrorCode::InvalidArgument, "knn k must be >= 1");
            break;
        case RegressorKind::Ridge:
            if (!(l2 >= 0.0)) throw Error(ErrorCode::InvalidArgument, "ridge l2 must be >= 0");
            break;
    }
}

double selu(double x) { return x > 0.0 ? kSeluLambda * x : kSeluLambda * kSeluAlpha * std::expm1(x); }

double selu_derivative(double x) { return x > 0.0 ? kSeluLambda : kSeluLambda * kSeluAlpha * std::exp(x); }

Eigen::Index MlpParams::parameter_count() const {
    Eigen::Index count = 0;
    for (std::size_t l = 0; l < weights.size(); ++l) count += weights[l].size() + biases[l].size();
    return count;
}

Eigen::VectorXd MlpParams::flatten() const {
    Eigen::VectorXd flat(parameter_count());
    Eigen::Index pos = 0;
    for (std::size_t l = 0; l < weights.size(); ++l) {
        flat.segment(pos, weights[l].size()) = weights[l].reshaped();
        pos += weights[l].size();
        flat.segment(pos, biases[l].size()) = biases[l];
        pos += biases[l].size();
    }
    return flat;
}

void MlpParams::assign_flat(const Eigen::VectorXd& flat) {
    if (flat.size() != parameter_count()) throw Error(ErrorCode::DimensionMismatch, "flat parameter size mismatch");
    Eigen::Index pos = 0;
    for (std::size_t l = 0; l < weights.size(); ++l) {
        weights[l].reshaped() = flat.segment(pos, weights[l].size());
        pos += weights[l].size();
        biases[l] = flat.segment(pos, biases[l].size());
        pos += biases[l].size();
    }
}

bool MlpParams::operator==(const MlpParams& other) const {
    if (weights.size() != other.weights.size()) return false;
    for (std::size_t l = 0; l < weights.size(); ++l) {
        if (weights[l].rows() != other.weights[l].rows() || weights[l].cols() != other.weights[l].cols()) return false;
        if (weights[l] != other.weights[l] || biases[l] != other.biases[l]) return false;
    }
    return true;
}

MlpParams mlp_init(Eigen::Index input_dim, const std::vector<int>& hidden, Eigen::Index output_dim,
                   std::mt19937_64& rng) {
    MlpParams p;
    std::vector<Eigen::Index> sizes{input_dim};
    for (int w : hidden) sizes.push_back(w);
    sizes.push_back(output_dim);
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
        std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(sizes[l])));
        Eigen::MatrixXd w(sizes[l + 1], sizes[l]);
        for (Eigen::Index i = 0; i < w.rows(); ++i)
            for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = normal(rng);
        p.weights.push_back(std::move(w));
        p.biases.push_back(Eigen::VectorXd::Zero(sizes[l + 1]));
    }
    return p;
}

namespace {

// Activations per layer (index 0 = input) plus pre-activations, with optional
// inverted-dropout masks applied to the post-activation outputs.
struct ForwardTrace {
    std::vector<Eigen::MatrixXd> activations;
    std::vector<Eigen::MatrixXd> pre;
};

ForwardTrace forward_trace(const MlpParams& p, const Eigen::MatrixXd& x,
                           const std::vector<Eigen::MatrixXd>* masks = nullptr) {
    ForwardTrace t;
    t.activations.push_back(x);
    const std::size_t L = p.layer_count();
    for (std::size_t l = 0; l < L; ++l) {
        Eigen::MatrixXd z = (t.activations.back() * p.weights[l].transpose()).rowwise() + p.biases[l].transpose();
        Eigen::MatrixXd a = (l + 1 == L) ? z : Eigen::MatrixXd(z.unaryExpr([](double v) { return selu(v); }));
        if (masks && l + 1 < L && (*masks)[l].size() > 0) a.array() *= (*masks)[l].array();
        t.pre.push_back(std::move(z));
        t.activations.push_back(std::move(a));
    }
    return t;
}

MlpParams backward(const MlpParams& p, const ForwardTrace& t, const Eigen::MatrixXd& y,
                   const std::vector<Eigen::MatrixXd>* masks = nullptr) {
    const std::size_t L = p.layer_count();
    const double scale = 2.0 / static_cast<double>(y.size());
    MlpParams g;
    g.weights.resize(L);
    g.biases.resize(L);
    Eigen::MatrixXd delta = scale * (t.activations.back() - y);
    for (std::size_t l = L; l-- > 0;) {
        g.weights[l] = delta.transpose() * t.activations[l];
        g.biases[l] = delta.colwise().sum().transpose();
        if (l == 0) break;
        Eigen::MatrixXd upstream = delta * p.weights[l];
        if (masks && (*masks)[l - 1].size() > 0) upstream.array() *= (*masks)[l - 1].array();
        delta = upstream.array() * t.pre[l - 1].unaryExpr([](double v) { return selu_derivative(v); }).array();
    }
    return g;
}

void check_mlp_shapes(const MlpParams& p, const Eigen::MatrixXd& x) {
    if (p.layer_count() == 0) throw Error(ErrorCode::InvalidArgument, "mlp has no layers");
    if (x.cols() != p.weights.front().cols())
        throw Error(ErrorCode::DimensionMismatch, "mlp input width " + std::to_string(p.weights.front().cols()) +
                                                      ", got " + std::to_string(x.cols()));
}

}  // namespace

Eigen::MatrixXd mlp_forward(const MlpParams& params, const Eigen::MatrixXd& x) {
    check_mlp_shapes(params, x);
    return forward_trace(params, x).activations.back();
}

double mlp_loss(const MlpParams& params, const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
    return (mlp_forward(params, x) - y).squaredNorm() / static_cast<double>(y.size());
}

MlpParams mlp_gradient(const MlpParams& params, const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
    check_mlp_shapes(params, x);
    if (x.rows() < 1) throw Error(ErrorCode::InvalidArgument, "gradient needs a non-empty batch");
    if (y.rows() != x.rows() || y.cols() != params.weights.back().rows())
        throw Error(ErrorCode::DimensionMismatch, "batch targets do not match the network output");
    return backward(params, forward_trace(params, x), y);
}

namespace {

MlpModel train_mlp(const RegressorSpec& spec, const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                   std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    MlpModel model{mlp_init(x.cols(), spec.widths, y.cols(), rng), {}};
    MlpParams& p = model.params;
    const std::size_t L = p.layer_count();

    // Adam state over the flat parameter vector.
    constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    Eigen::VectorXd first = Eigen::VectorXd::Zero(p.parameter_count());
    Eigen::VectorXd second = first;
    long step = 0;

    const auto record_loss = [&] {
        const double loss = mlp_loss(p, x, y);
        if (!std::isfinite(loss)) throw Error(ErrorCode::NonFiniteLoss, "mlp training diverged");
        model.loss_history.push_back(loss);
    };
    record_loss();

    std::vector<Eigen::Index> order(static_cast<std::size_t>(x.rows()));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::bernoulli_distribution keep(1.0 - spec.dropout);
    const double keep_scale = 1.0 / (1.0 - spec.dropout);

    for (int epoch = 0; epoch < spec.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(spec.batch)) {
            const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(spec.batch));
            const auto rows = static_cast<Eigen::Index>(stop - start);
            Eigen::MatrixXd bx(rows, x.cols()), by(rows, y.cols());
            for (Eigen::Index i = 0; i < rows; ++i) {
                bx.row(i) = x.row(order[start + static_cast<std::size_t>(i)]);
                by.row(i) = y.row(order[start + static_cast<std::size_t>(i)]);
            }
            // Dropout follows every hidden layer except the first dense layer.
            std::vector<Eigen::MatrixXd> masks(L);
            if (spec.dropout > 0.0) {
                for (std::size_t l = 1; l + 1 < L; ++l) {
                    masks[l].resize(rows, p.weights[l].rows());
                    for (Eigen::Index i = 0; i < masks[l].size(); ++i)
                        masks[l].data()[i] = keep(rng) ? keep_scale : 0.0;
                }
            }
            const ForwardTrace trace = forward_trace(p, bx, &masks);
            const Eigen::VectorXd grad = backward(p, trace, by, &masks).flatten();
            ++step;
            first = beta1 * first + (1.0 - beta1) * grad;
            second = beta2 * second + (1.0 - beta2) * grad.cwiseAbs2();
            const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step));
            const double c2 = 1.0 - std::pow(beta2, static_cast<double>(step));
            Eigen::VectorXd flat = p.flatten();
            flat.array() -= spec.lr * (first.array() / c1) / ((second.array() / c2).sqrt() + eps);
            p.assign_flat(flat);
        }
        record_loss();
    }
    return model;
}

RidgeModel fit_ridge(const RegressorSpec& spec, const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
    const Eigen::RowVectorXd x_mean = x.colwise().mean();
    const Eigen::RowVectorXd y_mean = y.colwise().mean();
    const Eigen::MatrixXd xc = x.rowwise() - x_mean;
    const Eigen::MatrixXd yc = y.rowwise() - y_mean;
    Eigen::MatrixXd coef;
    if (spec.l2 > 0.0) {
        Eigen::MatrixXd gram = xc.transpose() * xc;
        gram.diagonal().array() += spec.l2;
        coef = gram.ldlt().solve(xc.transpose() * yc);
    } else {
        coef = xc.completeOrthogonalDecomposition().solve(yc);
    }
    return RidgeModel{coef, y_mean - x_mean * coef};
}

Eigen::MatrixXd predict_knn(const KnnModel& model, const Eigen::MatrixXd& x) {
    const Eigen::Index n = model.x.rows();
    const auto k = static_cast<std::size_t>(std::min<Eigen::Index>(model.k, n));
    Eigen::MatrixXd out(x.rows(), model.y.cols());
    std::vector<std::pair<double, Eigen::Index>> dist(static_cast<std::size_t>(n));
    for (Eigen::Index q = 0; q < x.rows(); ++q) {
        for (Eigen::Index i = 0; i < n; ++i)
            dist[static_cast<std::size_t>(i)] = {(model.x.row(i) - x.row(q)).squaredNorm(), i};
        // pair ordering breaks distance ties by the lower training index
        std::nth_element(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k - 1), dist.end());
        std::sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k));
        Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(model.y.cols());
        for (std::size_t r = 0; r < k; ++r) acc += model.y.row(dist[r].second);
        out.row(q) = acc / static_cast<double>(k);
    }
    return out;
}

}  // namespace

FittedModel::FittedModel(RegressorSpec spec, Params params, Eigen::Index input_dim, Eigen::Index output_dim)
    : spec_(std::move(spec)), params_(std::move(params)), input_dim_(input_dim), output_dim_(output_dim) {}

Eigen::MatrixXd FittedModel::predict(const Eigen::MatrixXd& x) const {
    if (x.cols() != input_dim_)
        throw Error(ErrorCode::DimensionMismatch, "model expects " + std::to_string(input_dim_) + " features, got " +
                                                      std::to_string(x.cols()));
    struct Visitor {
        const Eigen::MatrixXd& x;
        Eigen::MatrixXd operator()(const MlpModel& m) const { return mlp_forward(m.params, x); }
        Eigen::MatrixXd operator()(const KnnModel& m) const { return predict_knn(m, x); }
        Eigen::MatrixXd operator()(const RidgeModel& m) const { return (x * m.coef).rowwise() + m.intercept; }
    };
    return std::visit(Visitor{x}, params_);
}

FittedModel fit(const RegressorSpec& spec, const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, std::uint64_t seed) {
    spec.validate();
    if (x.rows() != y.rows())
        throw Error(ErrorCode::DimensionMismatch, "X has " + std::to_string(x.rows()) + " rows, Y has " +
                                                      std::to_string(y.rows()));
    if (x.rows() < 1 || x.cols() < 1 || y.cols() < 1)
        throw Error(ErrorCode::DimensionMismatch, "fit needs at least one row, feature and target");
    switch (spec.kind) {
        case RegressorKind::Mlp: return FittedModel(spec, train_mlp(spec, x, y, seed), x.cols(), y.cols());
        case RegressorKind::Knn: return FittedModel(spec, KnnModel{x, y, spec.k}, x.cols(), y.cols());
        case RegressorKind::Ridge: return FittedModel(spec, fit_ridge(spec, x, y), x.cols(), y.cols());
    }
    throw Error(ErrorCode::InvalidArgument, "unknown regressor kind");
}

Eigen::MatrixXd log_residuals(const Eigen::MatrixXd& y, const Eigen::MatrixXd& yhat, double floor) {
    if (y.rows() != yhat.rows() || y.cols() != yhat.cols())
        throw Error(ErrorCode::DimensionMismatch, "Y and Yhat shapes differ");
    if (!(floor > 0.0)) throw Error(ErrorCode::InvalidArgument, "residual floor must be > 0");
    return (y - yhat).cwiseAbs().cwiseMax(floor).array().log().matrix();
}

ErrorModel fit_error_model(const RegressorSpec& spec, const Eigen::MatrixXd& x_train, const Eigen::MatrixXd& y_train,
                           const Eigen::MatrixXd& yhat_train, std::uint64_t seed, double residual_floor) {
    return ErrorModel{fit(spec, x_train, log_residuals(y_train, yhat_train, residual_floor), seed), residual_floor};
}

}  // namespace copcp
