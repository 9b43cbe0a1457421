#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>

#include <Eigen/Dense>

#include "copcp/scores.hpp"

namespace copcp {

enum class CopulaKind { Independent, Gumbel, Empirical };

std::string_view to_string(CopulaKind kind);
CopulaKind copula_kind_from_string(std::string_view name);

struct IndependentCopula {};

struct GumbelCopula {
    double theta = 1.0;
};

struct EmpiricalCopula {
    PseudoObservations pseudo;
};

/// One of the three calibration copulas. Immutable once built.
class CopulaModel {
public:
    using Variant = std::variant<IndependentCopula, GumbelCopula, EmpiricalCopula>;

    static CopulaModel independent() { return CopulaModel(IndependentCopula{}); }
    /// Throws DomainError for theta < 1.
    static CopulaModel gumbel(double theta);
    /// Throws EmptySample for a matrix without rows.
    static CopulaModel empirical(PseudoObservations pseudo);

    CopulaKind kind() const;
    const Variant& variant() const { return variant_; }
    /// Gumbel parameter; 1 for the independent copula, nullopt for empirical.
    std::optional<double> theta() const;

private:
    explicit CopulaModel(Variant v) : variant_(std::move(v)) {}
    Variant variant_;
};

/// C(u). Throws DomainError when a coordinate leaves [0, 1] and
/// DimensionMismatch when an empirical copula sees the wrong width.
double copula_cdf(const CopulaModel& model, std::span<const double> u);
double copula_cdf(const CopulaModel& model, const Eigen::VectorXd& u);

struct FrechetBounds {
    double lower;  // W(u) = max(sum u - m + 1, 0)
    double upper;  // M(u) = min u
};

FrechetBounds frechet_bounds(std::span<const double> u);

/// Kendall's tau-a: (concordant - discordant) / (n (n - 1) / 2); tied pairs
/// count as neither. Throws LengthMismatch.
double kendall_tau(std::span<const double> x, std::span<const double> y);

// --- Gumbel estimation ------------------------------------------------------

inline constexpr double kGumbelThetaMax = 50.0;

enum class GumbelEstimator { TauInversion, PairwiseMple };

std::string_view to_string(GumbelEstimator estimator);
GumbelEstimator gumbel_estimator_from_string(std::string_view name);

struct GumbelFit {
    double theta = 1.0;
    double mean_tau = 0.0;
    /// Set when the estimate hit the upper bound (near-comonotone scores).
    bool degenerate = false;
    /// Pairwise-MPLE only: whether the grid pre-scan of the objective looked unimodal.
    bool unimodal = true;
    std::string warning;

    CopulaModel model() const { return CopulaModel::gumbel(theta); }
};

/// Estimate theta from pseudo-observations (N >= 8 rows, m >= 2 columns).
/// Tau inversion uses theta = 1 / (1 - mean pairwise tau); pairwise MPLE
/// maximizes the sum of bivariate Gumbel log-densities over all column pairs.
/// Both clamp to [1, theta_max]. Throws TooFewRows, DimensionMismatch.
GumbelFit fit_gumbel(const PseudoObservations& pseudo, GumbelEstimator method = GumbelEstimator::TauInversion,
                     double theta_max = kGumbelThetaMax);

/// Bivariate Gumbel copula density on (0, 1)^2, in log space.
double gumbel_log_density(double u, double v, double theta);
inline double gumbel_density(double u, double v, double theta) { return std::exp(gumbel_log_density(u, v, theta)); }

/// Sum over column pairs of the bivariate log-density. Pseudo-observations
/// are rescaled by N / (N + 1) when they reach 1 so every term is finite.
double pairwise_gumbel_loglik(const PseudoObservations& pseudo, double theta);

// --- per-target significance ------------------------------------------------

/// Global significance and the shared per-target significance derived from
/// it. `level` is 1 - epsilon_t, the ECDF level each target is cut at; it is
/// kept separately so calibration never round-trips through the subtraction.
struct ConfidenceSpec {
    double epsilon_g = 0.1;
    double epsilon_t = 0.1;
    double level = 0.9;
};

/// 1 - (1 - eps_g)^(1/m)
double independent_epsilon_t(double epsilon_g, Eigen::Index m);

/// 1 - (1 - eps_g)^(m^(-1/theta)). Throws DomainError for theta < 1.
double gumbel_epsilon_t(double epsilon_g, Eigen::Index m, double theta);

/// Largest eps_t whose diagonal point (1 - eps_t, ..., 1 - eps_t) has empirical
/// copula mass >= 1 - eps_g. Found by bisection, then snapped onto the exact
/// step of the diagonal. Throws EmptySample.
double empirical_epsilon_t(const PseudoObservations& pseudo, double epsilon_g);

/// eps_t and the per-target level for any copula variant.
ConfidenceSpec per_target_confidence(const CopulaModel& model, Eigen::Index m, double epsilon_g);

/// alpha_s^j = ECDF_j^{-1}(1 - eps_t) for every score column j.
Eigen::VectorXd calibrate_thresholds(const ScoreMatrix& scores, const CopulaModel& model, double epsilon_g,
                                     EcdfDivisor divisor = EcdfDivisor::N);

// --- fitting from a score matrix ---------------------------------------------

struct CalibrationOptions {
    GumbelEstimator gumbel_estimator = GumbelEstimator::TauInversion;
    EcdfDivisor ecdf_divisor = EcdfDivisor::N;
    double theta_max = kGumbelThetaMax;
};

struct CopulaFit {
    CopulaModel model;
    std::optional<GumbelFit> gumbel;
};

/// Builds the requested copula from calibration scores. A single target has no
/// dependence to estimate, so Gumbel falls back to theta = 1 when m = 1.
CopulaFit fit_copula(CopulaKind kind, const ScoreMatrix& scores, const CalibrationOptions& options = {});

}  // namespace copcp
