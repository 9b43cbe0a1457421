#include "copcp/scores.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "copcp/error.hpp"

namespace copcp {

double standard_score(double y, double yhat) { return std::abs(y - yhat); }

double normalized_score(double y, double yhat, double mu, double beta) {
    return std::abs(y - yhat) / (std::exp(mu) + beta);
}

ScoreMatrix::ScoreMatrix(Eigen::MatrixXd scores) : scores_(std::move(scores)) {
    if (!scores_.allFinite() || (scores_.size() > 0 && scores_.minCoeff() < 0.0))
        throw Error(ErrorCode::DomainError, "scores must be finite and non-negative");
}

ScoreMatrix score_matrix(const Eigen::MatrixXd& y_cal, const Eigen::MatrixXd& yhat_cal, const Eigen::MatrixXd& mu_cal,
                         double beta) {
    if (y_cal.rows() != yhat_cal.rows() || y_cal.cols() != yhat_cal.cols() || y_cal.rows() != mu_cal.rows() ||
        y_cal.cols() != mu_cal.cols())
        throw Error(ErrorCode::DimensionMismatch, "Y, Yhat and Mu must share one shape");
    if (!(beta >= 0.0)) throw Error(ErrorCode::DomainError, "beta must be >= 0");
    Eigen::MatrixXd a(y_cal.rows(), y_cal.cols());
    for (Eigen::Index j = 0; j < a.cols(); ++j)
        for (Eigen::Index i = 0; i < a.rows(); ++i)
            a(i, j) = normalized_score(y_cal(i, j), yhat_cal(i, j), mu_cal(i, j), beta);
    return ScoreMatrix(std::move(a));
}

void write_score_csv(const std::filesystem::path& path, const ScoreMatrix& scores,
                     const std::vector<std::string>& target_names) {
    if (static_cast<Eigen::Index>(target_names.size()) != scores.targets())
        throw Error(ErrorCode::DimensionMismatch, "one name per score column is required");
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
    out.precision(17);
    for (std::size_t j = 0; j < target_names.size(); ++j) out << (j ? "," : "") << target_names[j];
    out << '\n';
    for (Eigen::Index i = 0; i < scores.rows(); ++i) {
        for (Eigen::Index j = 0; j < scores.targets(); ++j) out << (j ? "," : "") << scores.values()(i, j);
        out << '\n';
    }
}

std::string_view to_string(EcdfDivisor divisor) { return divisor == EcdfDivisor::N ? "n" : "n_plus_one"; }

EcdfDivisor ecdf_divisor_from_string(std::string_view name) {
    if (name == "n") return EcdfDivisor::N;
    if (name == "n_plus_one") return EcdfDivisor::NPlusOne;
    throw Error(ErrorCode::InvalidArgument, "unknown ecdf divisor '" + std::string(name) + "'");
}

EmpiricalCdf::EmpiricalCdf(std::span<const double> values, EcdfDivisor divisor)
    : sorted_(values.begin(), values.end()), divisor_(divisor) {
    if (sorted_.empty()) throw Error(ErrorCode::EmptySample, "empirical CDF of an empty sample");
    std::ranges::sort(sorted_);
}

EmpiricalCdf::EmpiricalCdf(const Eigen::VectorXd& values, EcdfDivisor divisor)
    : EmpiricalCdf(std::span<const double>(values.data(), static_cast<std::size_t>(values.size())), divisor) {}

double EmpiricalCdf::level(std::size_t count) const {
    const std::size_t denom = sorted_.size() + (divisor_ == EcdfDivisor::NPlusOne ? 1 : 0);
    return static_cast<double>(count) / static_cast<double>(denom);
}

double EmpiricalCdf::eval(double x) const {
    const auto count = static_cast<std::size_t>(std::ranges::upper_bound(sorted_, x) - sorted_.begin());
    return level(count);
}

double EmpiricalCdf::quantile(double p) const {
    if (p <= 0.0) return sorted_.front();
    // Smallest rank k with level(k) >= p, using the same arithmetic as eval so
    // that eval(quantile(p)) >= p holds bit-for-bit.
    std::size_t lo = 1, hi = sorted_.size() + 1;
    while (lo < hi) {
        const std::size_t mid = lo + (hi - lo) / 2;
        if (level(mid) >= p) hi = mid;
        else lo = mid + 1;
    }
    if (lo > sorted_.size()) return std::numeric_limits<double>::infinity();
    return sorted_[lo - 1];
}

PseudoObservations pseudo_observations(const ScoreMatrix& scores, EcdfDivisor divisor) {
    PseudoObservations po{Eigen::MatrixXd(scores.rows(), scores.targets())};
    for (Eigen::Index j = 0; j < scores.targets(); ++j) {
        const EmpiricalCdf cdf(scores.column(j), divisor);
        for (Eigen::Index i = 0; i < scores.rows(); ++i) po.u(i, j) = cdf.eval(scores.values()(i, j));
    }
    return po;
}

double p_value(std::span<const double> calib_scores, double candidate_score) {
    if (calib_scores.empty()) throw Error(ErrorCode::EmptySample, "p-value needs calibration scores");
    const auto at_least = std::ranges::count_if(calib_scores, [&](double a) { return a >= candidate_score; });
    return static_cast<double>(at_least + 1) / static_cast<double>(calib_scores.size() + 1);
}

}  // namespace copcp
