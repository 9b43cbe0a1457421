#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace copcp {

/// |y - yhat|
double standard_score(double y, double yhat);

/// |y - yhat| / (exp(mu) + beta), the normalized nonconformity score.
double normalized_score(double y, double yhat, double mu, double beta);

/// Calibration nonconformity scores: one row per calibration example, one
/// column per target. Entries are finite and non-negative.
class ScoreMatrix {
public:
    ScoreMatrix() = default;
    /// Throws DomainError if an entry is negative or non-finite.
    explicit ScoreMatrix(Eigen::MatrixXd scores);

    const Eigen::MatrixXd& values() const { return scores_; }
    Eigen::Index rows() const { return scores_.rows(); }
    Eigen::Index targets() const { return scores_.cols(); }
    Eigen::VectorXd column(Eigen::Index j) const { return scores_.col(j); }

private:
    Eigen::MatrixXd scores_;
};

/// Entry (i, j) = normalized_score(Y(i,j), Yhat(i,j), Mu(i,j), beta).
/// Throws DimensionMismatch.
ScoreMatrix score_matrix(const Eigen::MatrixXd& y_cal, const Eigen::MatrixXd& yhat_cal, const Eigen::MatrixXd& mu_cal,
                         double beta);

void write_score_csv(const std::filesystem::path& path, const ScoreMatrix& scores,
                     const std::vector<std::string>& target_names);

/// Denominator of the empirical CDF. `N` (the sample size) makes the largest
/// pseudo-observation exactly 1; `NPlusOne` is the conservative variant.
enum class EcdfDivisor { N, NPlusOne };

std::string_view to_string(EcdfDivisor divisor);
EcdfDivisor ecdf_divisor_from_string(std::string_view name);

/// Right-continuous step CDF of a sample.
class EmpiricalCdf {
public:
    /// Throws EmptySample for an empty sample.
    explicit EmpiricalCdf(std::span<const double> values, EcdfDivisor divisor = EcdfDivisor::N);
    explicit EmpiricalCdf(const Eigen::VectorXd& values, EcdfDivisor divisor = EcdfDivisor::N);

    /// (# values <= x) / divisor
    double eval(double x) const;

    /// Smallest stored value v with eval(v) >= p; the minimum for p <= 0.
    /// Returns +infinity when no stored value reaches p, which can only happen
    /// with the N + 1 divisor.
    double quantile(double p) const;

    std::size_t size() const { return sorted_.size(); }
    const std::vector<double>& sorted_values() const { return sorted_; }
    EcdfDivisor divisor() const { return divisor_; }

private:
    double level(std::size_t count) const;

    std::vector<double> sorted_;
    EcdfDivisor divisor_;
};

inline double ecdf_eval(const EmpiricalCdf& cdf, double x) { return cdf.eval(x); }
inline double ecdf_quantile(const EmpiricalCdf& cdf, double p) { return cdf.quantile(p); }

/// Column-wise ECDF transform of a score matrix; values lie in (0, 1].
struct PseudoObservations {
    Eigen::MatrixXd u;

    Eigen::Index rows() const { return u.rows(); }
    Eigen::Index targets() const { return u.cols(); }
};

/// u(i, j) = F_j(A(i, j)) where F_j is column j's own ECDF; tied scores share
/// the maximal rank.
PseudoObservations pseudo_observations(const ScoreMatrix& scores, EcdfDivisor divisor = EcdfDivisor::N);

/// (|{i : calib_i >= candidate}| + 1) / (N + 1). Throws EmptySample.
double p_value(std::span<const double> calib_scores, double candidate_score);

}  // namespace copcp
