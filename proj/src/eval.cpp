#include "copcp/eval.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <numeric>
#include <thread>

#include "copcp/error.hpp"

namespace copcp {

std::vector<double> default_epsilon_grid() {
    std::vector<double> grid{0.01};
    for (int i = 1; i <= 19; ++i) grid.push_back(0.05 * i);
    return grid;
}

double coverage(const std::vector<PredictionBox>& boxes, const Eigen::MatrixXd& y) {
    if (boxes.empty() || y.rows() == 0) throw Error(ErrorCode::EmptyTestSet, "coverage of an empty test set");
    if (static_cast<Eigen::Index>(boxes.size()) != y.rows())
        throw Error(ErrorCode::DimensionMismatch, "one box per test row is required");
    Eigen::Index inside = 0;
    for (Eigen::Index i = 0; i < y.rows(); ++i)
        inside += box_contains(boxes[static_cast<std::size_t>(i)], y.row(i).transpose()) ? 1 : 0;
    return static_cast<double>(inside) / static_cast<double>(y.rows());
}

namespace {

void check_grid(std::span<const double> grid) {
    if (grid.empty()) throw Error(ErrorCode::InvalidArgument, "significance grid is empty");
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!(grid[i] > 0.0 && grid[i] < 1.0))
            throw Error(ErrorCode::InvalidArgument, "significance grid values must lie in (0, 1)");
        if (i > 0 && !(grid[i] > grid[i - 1]))
            throw Error(ErrorCode::InvalidArgument, "significance grid must be strictly increasing");
    }
}

}  // namespace

ValidityCurve validity_curve(const ConformalPredictor& predictor, const Eigen::MatrixXd& x_test,
                             const Eigen::MatrixXd& y_test, std::span<const double> grid) {
    if (x_test.rows() == 0) throw Error(ErrorCode::EmptyTestSet, "validity curve needs test rows");
    check_grid(grid);
    const PointPredictions points = predictor.point_predictions(x_test);
    ValidityCurve curve{{grid.begin(), grid.end()}, {}};
    for (double eps : grid) curve.coverage.push_back(coverage(boxes_from(points, predictor.thresholds(eps)), y_test));
    return curve;
}

double validity_gap(const ValidityCurve& curve) {
    if (curve.grid.empty() || curve.grid.size() != curve.coverage.size())
        throw Error(ErrorCode::InvalidArgument, "validity curve is empty or ragged");
    double sum = 0.0;
    for (std::size_t i = 0; i < curve.grid.size(); ++i) sum += curve.coverage[i] - (1.0 - curve.grid[i]);
    return 100.0 * sum / static_cast<double>(curve.grid.size());
}

double median(std::vector<double> values) {
    if (values.empty()) throw Error(ErrorCode::EmptySample, "median of an empty sample");
    const std::size_t mid = values.size() / 2;
    std::ranges::nth_element(values, values.begin() + static_cast<std::ptrdiff_t>(mid));
    const double upper = values[mid];
    if (values.size() % 2 == 1) return upper;
    const double lower = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lower + upper);
}

std::vector<double> box_volumes(const std::vector<PredictionBox>& boxes) {
    std::vector<double> volumes;
    volumes.reserve(boxes.size());
    for (const auto& b : boxes) volumes.push_back(box_volume(b));
    return volumes;
}

double efficiency_median_volume(const ConformalPredictor& predictor, const Eigen::MatrixXd& x_test,
                                double epsilon_g) {
    if (x_test.rows() == 0) throw Error(ErrorCode::EmptyTestSet, "efficiency needs test rows");
    return median(box_volumes(predictor.predict_boxes(x_test, epsilon_g)));
}

void ExperimentConfig::validate() const {
    const auto fail = [](const std::string& field, const std::string& why) {
        throw Error(ErrorCode::InvalidArgument, field + ": " + why);
    };
    regressor.validate();
    if (error_model) error_model->validate();
    if (!(beta >= 0.0)) fail("beta", "must be >= 0");
    if (copulas.empty()) fail("copulas", "at least one copula is required");
    try {
        check_grid(grid);
    } catch (const Error& e) {
        fail("grid", e.what());
    }
    if (!(efficiency_epsilon > 0.0 && efficiency_epsilon < 1.0)) fail("efficiency_epsilon", "must lie in (0, 1)");
    if (folds < 2) fail("folds", "must be >= 2");
    if (!(calibration_fraction > 0.0 && calibration_fraction < 1.0)) fail("calibration_fraction", "must lie in (0, 1)");
}

std::pair<double, double> mean_std(std::span<const double> values) {
    if (values.empty()) return {0.0, 0.0};
    const double n = static_cast<double>(values.size());
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    if (values.size() < 2) return {mean, 0.0};
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    return {mean, std::sqrt(ss / (n - 1.0))};
}

namespace {

std::uint64_t fold_seed(std::uint64_t seed, int fold) {
    return seed + 0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(fold + 1);
}

FoldResult run_fold(const Dataset& data, const ExperimentConfig& config, const Fold& fold, int index) {
    const auto start = std::chrono::steady_clock::now();
    const StandardizedData scaled = standardize(data, fold.train);
    const Dataset train = scaled.data.subset(fold.train);
    const Dataset calib = scaled.data.subset(fold.calib);
    const Dataset test = scaled.data.subset(fold.test);

    const CalibrationOptions options{config.gumbel_estimator, config.ecdf_divisor, kGumbelThetaMax};
    const ConformalPredictor base = ConformalPredictor::build(
        train.features, train.targets, calib.features, calib.targets, config.regressor, config.error_model,
        config.copulas.front(), config.beta, fold_seed(config.seed, index), options);

    FoldResult result;
    result.fold = index;
    result.train_rows = train.rows();
    result.calib_rows = calib.rows();
    result.test_rows = test.rows();
    const auto& ts = scaled.scaler.targets;
    result.target_mean.assign(ts.mean.data(), ts.mean.data() + ts.mean.size());
    result.target_std.assign(ts.std.data(), ts.std.data() + ts.std.size());

    for (std::size_t c = 0; c < config.copulas.size(); ++c) {
        const ConformalPredictor predictor = c == 0 ? base : base.with_copula(config.copulas[c], options);
        CopulaFoldResult r;
        r.copula = config.copulas[c];
        r.curve = validity_curve(predictor, test.features, test.targets, config.grid);
        r.gap = validity_gap(r.curve);
        r.volumes = box_volumes(predictor.predict_boxes(test.features, config.efficiency_epsilon));
        r.median_volume = median(r.volumes);
        r.theta = predictor.copula().theta();
        if (predictor.gumbel_fit()) r.warning = predictor.gumbel_fit()->warning;
        result.copulas.push_back(std::move(r));
    }
    result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return result;
}

}  // namespace

ExperimentReport run_experiment(const Dataset& data, const ExperimentConfig& config, int jobs) {
    const auto start = std::chrono::steady_clock::now();
    config.validate();
    data.validate();

    SplitParams split{config.folds, config.calibration_fraction, config.seed,
                      std::max<Index>(data.target_dim() + 2, kMinCalibrationRows)};
    const SplitPlan plan = make_folds(data.rows(), split);

    std::vector<FoldResult> results(plan.folds.size());
    std::vector<std::exception_ptr> failures(plan.folds.size());
    std::atomic<std::size_t> next{0};
    const auto worker = [&] {
        for (std::size_t f = next++; f < plan.folds.size(); f = next++) {
            try {
                results[f] = run_fold(data, config, plan.folds[f], static_cast<int>(f));
            } catch (...) {
                failures[f] = std::current_exception();
            }
        }
    };
    const auto threads = static_cast<std::size_t>(std::clamp<int>(jobs, 1, static_cast<int>(plan.folds.size())));
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    }
    for (std::size_t f = 0; f < failures.size(); ++f) {
        if (!failures[f]) continue;
        try {
            std::rethrow_exception(failures[f]);
        } catch (const Error& e) {
            throw Error(e.code(), "fold " + std::to_string(f) + ": " + e.what());
        } catch (const std::exception& e) {
            throw Error(ErrorCode::InvalidArgument, "fold " + std::to_string(f) + ": " + e.what());
        }
    }

    ExperimentReport report;
    report.config = config;
    report.rows = data.rows();
    report.features = data.feature_dim();
    report.target_names = data.target_names;
    report.folds = std::move(results);
    for (std::size_t c = 0; c < config.copulas.size(); ++c) {
        CopulaSummary s;
        s.copula = config.copulas[c];
        std::vector<double> gaps, volumes;
        s.mean_curve.grid = config.grid;
        s.mean_curve.coverage.assign(config.grid.size(), 0.0);
        for (const auto& fold : report.folds) {
            const auto& r = fold.copulas[c];
            gaps.push_back(r.gap);
            volumes.push_back(r.median_volume);
            for (std::size_t g = 0; g < config.grid.size(); ++g) s.mean_curve.coverage[g] += r.curve.coverage[g];
        }
        for (double& cov : s.mean_curve.coverage) cov /= static_cast<double>(report.folds.size());
        std::tie(s.gap_mean, s.gap_std) = mean_std(gaps);
        std::tie(s.volume_mean, s.volume_std) = mean_std(volumes);
        report.summary.push_back(std::move(s));
    }
    report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return report;
}

}  // namespace copcp
