#include "copcp/dataio.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <string_view>
#include <unordered_map>

#include "copcp/error.hpp"

namespace copcp {

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

std::vector<std::string> split_row(std::string_view line) {
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        cells.emplace_back(trim(line.substr(start, comma - start)));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return cells;
}

bool parse_double(const std::string& cell, double& out) {
    if (cell.empty()) return false;
    char* end = nullptr;
    errno = 0;
    out = std::strtod(cell.c_str(), &end);
    return end == cell.c_str() + cell.size() && errno != ERANGE && std::isfinite(out);
}

Eigen::MatrixXd select_rows(const Eigen::MatrixXd& m, std::span<const Index> idx) {
    Eigen::MatrixXd out(static_cast<Index>(idx.size()), m.cols());
    for (std::size_t i = 0; i < idx.size(); ++i) {
        if (idx[i] < 0 || idx[i] >= m.rows())
            throw Error(ErrorCode::InvalidArgument, "row index " + std::to_string(idx[i]) + " out of range");
        out.row(static_cast<Index>(i)) = m.row(idx[i]);
    }
    return out;
}

}  // namespace

void Dataset::validate() const {
    if (features.rows() != targets.rows())
        throw Error(ErrorCode::DimensionMismatch, "features and targets have different row counts");
    if (features.rows() < 1 || features.cols() < 1 || targets.cols() < 1)
        throw Error(ErrorCode::InvalidArgument, "dataset needs n, d, m >= 1");
    if (!features.allFinite() || !targets.allFinite())
        throw Error(ErrorCode::InvalidArgument, "dataset contains non-finite values");
    if (static_cast<Index>(feature_names.size()) != features.cols() ||
        static_cast<Index>(target_names.size()) != targets.cols())
        throw Error(ErrorCode::DimensionMismatch, "column name count does not match matrix width");
}

Dataset Dataset::subset(std::span<const Index> idx) const {
    return Dataset{select_rows(features, idx), select_rows(targets, idx), feature_names, target_names};
}

Eigen::MatrixXd ColumnScaler::transform(const Eigen::MatrixXd& x) const {
    if (x.cols() != mean.size()) throw Error(ErrorCode::DimensionMismatch, "scaler column count mismatch");
    return (x.rowwise() - mean.transpose()).array().rowwise() / std.transpose().array();
}

Eigen::MatrixXd ColumnScaler::inverse_transform(const Eigen::MatrixXd& z) const {
    if (z.cols() != mean.size()) throw Error(ErrorCode::DimensionMismatch, "scaler column count mismatch");
    return (z.array().rowwise() * std.transpose().array()).matrix().rowwise() + mean.transpose();
}

ColumnScaler ColumnScaler::fit(const Eigen::MatrixXd& x, std::span<const Index> rows) {
    if (rows.empty()) throw Error(ErrorCode::EmptyFitSet, "standardization needs at least one fit row");
    const Eigen::MatrixXd fit_rows = select_rows(x, rows);
    ColumnScaler s;
    s.mean = fit_rows.colwise().mean().transpose();
    s.std.resize(x.cols());
    for (Index j = 0; j < x.cols(); ++j) {
        const double var = (fit_rows.col(j).array() - s.mean(j)).square().mean();
        s.std(j) = (var > 0.0 && std::isfinite(var)) ? std::sqrt(var) : 1.0;
    }
    return s;
}

StandardizedData standardize(const Dataset& data, std::span<const Index> fit_idx) {
    ScalerParams params{ColumnScaler::fit(data.features, fit_idx), ColumnScaler::fit(data.targets, fit_idx)};
    Dataset out{params.features.transform(data.features), params.targets.transform(data.targets),
                data.feature_names, data.target_names};
    return {std::move(out), std::move(params)};
}

SplitPlan make_folds(Index n, const SplitParams& params) {
    if (params.fold_count < 2)
        throw Error(ErrorCode::InvalidArgument, "fold_count must be >= 2");
    if (!(params.calibration_fraction > 0.0 && params.calibration_fraction < 1.0))
        throw Error(ErrorCode::InvalidArgument, "calibration_fraction must lie in (0, 1)");
    if (n < 2 * static_cast<Index>(params.fold_count))
        throw Error(ErrorCode::TooFewRows, std::to_string(n) + " rows cannot fill " +
                                               std::to_string(params.fold_count) + " folds");

    std::mt19937_64 rng(params.seed);
    IndexSet perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), Index{0});
    std::shuffle(perm.begin(), perm.end(), rng);

    SplitPlan plan{params.fold_count, params.calibration_fraction, params.seed, {}};
    const Index k = params.fold_count;
    Index offset = 0;
    for (Index f = 0; f < k; ++f) {
        const Index test_size = n / k + (f < n % k ? 1 : 0);
        Fold fold;
        fold.test.assign(perm.begin() + offset, perm.begin() + offset + test_size);
        IndexSet rest;
        rest.reserve(static_cast<std::size_t>(n - test_size));
        rest.insert(rest.end(), perm.begin(), perm.begin() + offset);
        rest.insert(rest.end(), perm.begin() + offset + test_size, perm.end());
        offset += test_size;

        const auto rest_size = static_cast<Index>(rest.size());
        const Index calib_size = std::max<Index>(
            std::llround(params.calibration_fraction * static_cast<double>(rest_size)), params.min_calibration);
        if (calib_size < 1 || calib_size >= rest_size)
            throw Error(ErrorCode::TooFewRows, "fold " + std::to_string(f) + " has " + std::to_string(rest_size) +
                                                   " non-test rows, too few for a calibration set of " +
                                                   std::to_string(calib_size) + " plus training rows");
        std::shuffle(rest.begin(), rest.end(), rng);
        fold.calib.assign(rest.begin(), rest.begin() + calib_size);
        fold.train.assign(rest.begin() + calib_size, rest.end());
        std::ranges::sort(fold.train);
        std::ranges::sort(fold.calib);
        std::ranges::sort(fold.test);
        plan.folds.push_back(std::move(fold));
    }
    return plan;
}

namespace {

Eigen::MatrixXd draw_normal(Index rows, Index cols, std::mt19937_64& rng) {
    std::normal_distribution<double> normal;
    Eigen::MatrixXd out(rows, cols);
    // row-major fill order keeps the draw sequence independent of Eigen's storage
    for (Index i = 0; i < rows; ++i)
        for (Index j = 0; j < cols; ++j) out(i, j) = normal(rng);
    return out;
}

}  // namespace

Eigen::MatrixXd synth_coefficients(Index m, Index feature_dim, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    return draw_normal(feature_dim, m, rng);
}

Dataset synth_dataset(Index n, Index m, Index feature_dim, double dependence, std::uint64_t seed) {
    if (n < 10) throw Error(ErrorCode::InvalidArgument, "synthetic datasets need n >= 10");
    if (m < 1 || feature_dim < 1) throw Error(ErrorCode::InvalidArgument, "synthetic datasets need m, d >= 1");
    if (!(dependence >= 0.0 && dependence < 1.0))
        throw Error(ErrorCode::InvalidArgument, "dependence must lie in [0, 1)");

    std::mt19937_64 rng(seed);
    const Eigen::MatrixXd coef = draw_normal(feature_dim, m, rng);
    Dataset data;
    data.features = draw_normal(n, feature_dim, rng);
    const Eigen::MatrixXd shared = draw_normal(n, 1, rng);
    const Eigen::MatrixXd own = draw_normal(n, m, rng);
    const Eigen::MatrixXd noise =
        std::sqrt(dependence) * shared.replicate(1, m) + std::sqrt(1.0 - dependence) * own;
    data.targets = data.features * coef + noise;
    for (Index j = 0; j < feature_dim; ++j) data.feature_names.push_back("x" + std::to_string(j + 1));
    for (Index j = 0; j < m; ++j) data.target_names.push_back("t" + std::to_string(j + 1));
    return data;
}

Dataset load_csv(const std::filesystem::path& path, const std::vector<std::string>& target_columns) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());

    std::string line;
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        if (!trim(line).empty()) {
            header = split_row(line);
            break;
        }
    }
    if (header.empty()) throw Error(ErrorCode::EmptyFile, path.string() + " has no header row");
    if (!header.empty() && header.front().starts_with("\xEF\xBB\xBF")) header.front().erase(0, 3);

    std::unordered_map<std::string, std::size_t> column_of;
    for (std::size_t c = 0; c < header.size(); ++c) column_of.emplace(header[c], c);

    std::vector<std::size_t> target_cols;
    for (const auto& name : target_columns) {
        const auto it = column_of.find(name);
        if (it == column_of.end()) throw Error(ErrorCode::MissingColumn, "column '" + name + "' not in header");
        target_cols.push_back(it->second);
    }
    if (target_cols.empty()) throw Error(ErrorCode::InvalidArgument, "at least one target column is required");
    std::vector<bool> is_target(header.size(), false);
    for (auto c : target_cols) is_target[c] = true;
    std::vector<std::size_t> feature_cols;
    for (std::size_t c = 0; c < header.size(); ++c)
        if (!is_target[c]) feature_cols.push_back(c);

    std::vector<std::vector<double>> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto cells = split_row(line);
        if (cells.size() != header.size())
            throw Error(ErrorCode::NonNumericCell, "line " + std::to_string(line_no) + " has " +
                                                       std::to_string(cells.size()) + " cells, header has " +
                                                       std::to_string(header.size()));
        std::vector<double> values(cells.size());
        for (std::size_t c = 0; c < cells.size(); ++c) {
            if (!parse_double(cells[c], values[c]))
                throw Error(ErrorCode::NonNumericCell, "row " + std::to_string(rows.size()) + ", column '" +
                                                           header[c] + "' (line " + std::to_string(line_no) +
                                                           "): '" + cells[c] + "'");
        }
        rows.push_back(std::move(values));
    }
    if (rows.empty()) throw Error(ErrorCode::EmptyFile, path.string() + " has no data rows");

    Dataset data;
    const auto n = static_cast<Index>(rows.size());
    data.features.resize(n, static_cast<Index>(feature_cols.size()));
    data.targets.resize(n, static_cast<Index>(target_cols.size()));
    for (Index i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < feature_cols.size(); ++j)
            data.features(i, static_cast<Index>(j)) = rows[static_cast<std::size_t>(i)][feature_cols[j]];
        for (std::size_t j = 0; j < target_cols.size(); ++j)
            data.targets(i, static_cast<Index>(j)) = rows[static_cast<std::size_t>(i)][target_cols[j]];
    }
    for (auto c : feature_cols) data.feature_names.push_back(header[c]);
    for (auto c : target_cols) data.target_names.push_back(header[c]);
    data.validate();
    return data;
}

void write_csv(const std::filesystem::path& path, const Dataset& data) {
    std::ostringstream out;
    out.precision(17);
    bool first = true;
    for (const auto* names : {&data.feature_names, &data.target_names})
        for (const auto& name : *names) {
            out << (first ? "" : ",") << name;
            first = false;
        }
    out << '\n';
    for (Index i = 0; i < data.rows(); ++i) {
        for (Index j = 0; j < data.feature_dim(); ++j) out << (j ? "," : "") << data.features(i, j);
        for (Index j = 0; j < data.target_dim(); ++j) out << ',' << data.targets(i, j);
        out << '\n';
    }
    std::ofstream file(path, std::ios::binary);
    if (!file) throw Error(ErrorCode::Io, "cannot write " + path.string());
    file << out.str();
}

}  // namespace copcp
