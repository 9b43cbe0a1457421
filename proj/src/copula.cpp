#include "copcp/copula.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "copcp/error.hpp"

namespace copcp {

std::string_view to_string(CopulaKind kind) {
    switch (kind) {
        case CopulaKind::Independent: return "independent";
        case CopulaKind::Gumbel: return "gumbel";
        case CopulaKind::Empirical: return "empirical";
    }
    return "unknown";
}

CopulaKind copula_kind_from_string(std::string_view name) {
    if (name == "independent") return CopulaKind::Independent;
    if (name == "gumbel") return CopulaKind::Gumbel;
    if (name == "empirical") return CopulaKind::Empirical;
    throw Error(ErrorCode::InvalidArgument,
                "unknown copula '" + std::string(name) + "' (expected independent, gumbel or empirical)");
}

std::string_view to_string(GumbelEstimator estimator) {
    return estimator == GumbelEstimator::TauInversion ? "tau" : "mple";
}

GumbelEstimator gumbel_estimator_from_string(std::string_view name) {
    if (name == "tau") return GumbelEstimator::TauInversion;
    if (name == "mple") return GumbelEstimator::PairwiseMple;
    throw Error(ErrorCode::InvalidArgument, "unknown gumbel estimator '" + std::string(name) + "' (expected tau or mple)");
}

CopulaModel CopulaModel::gumbel(double theta) {
    if (!(theta >= 1.0)) throw Error(ErrorCode::DomainError, "gumbel theta must be >= 1");
    return CopulaModel(GumbelCopula{theta});
}

CopulaModel CopulaModel::empirical(PseudoObservations pseudo) {
    if (pseudo.rows() < 1 || pseudo.targets() < 1)
        throw Error(ErrorCode::EmptySample, "empirical copula needs pseudo-observations");
    return CopulaModel(EmpiricalCopula{std::move(pseudo)});
}

CopulaKind CopulaModel::kind() const { return static_cast<CopulaKind>(variant_.index()); }

std::optional<double> CopulaModel::theta() const {
    if (std::holds_alternative<IndependentCopula>(variant_)) return 1.0;
    if (const auto* g = std::get_if<GumbelCopula>(&variant_)) return g->theta;
    return std::nullopt;
}

namespace {

void check_unit_cube(std::span<const double> u) {
    if (u.empty()) throw Error(ErrorCode::DimensionMismatch, "copula argument must have m >= 1 coordinates");
    for (double v : u)
        if (!(v >= 0.0 && v <= 1.0)) throw Error(ErrorCode::DomainError, "copula argument outside [0, 1]");
}

double gumbel_cdf(double theta, std::span<const double> u) {
    std::vector<double> interior;
    for (double v : u) {
        if (v == 0.0) return 0.0;
        if (v < 1.0) interior.push_back(v);
    }
    // exact margins: C(1, ..., v, ..., 1) = v
    if (interior.empty()) return 1.0;
    if (interior.size() == 1) return interior.front();
    double sum = 0.0;
    for (double v : interior) sum += std::pow(-std::log(v), theta);
    return std::exp(-std::pow(sum, 1.0 / theta));
}

double empirical_cdf(const PseudoObservations& po, std::span<const double> u) {
    if (static_cast<Eigen::Index>(u.size()) != po.targets())
        throw Error(ErrorCode::DimensionMismatch, "empirical copula has " + std::to_string(po.targets()) +
                                                      " dimensions, got " + std::to_string(u.size()));
    Eigen::Index count = 0;
    for (Eigen::Index i = 0; i < po.rows(); ++i) {
        bool below = true;
        for (Eigen::Index j = 0; j < po.targets() && below; ++j) below = po.u(i, j) <= u[static_cast<std::size_t>(j)];
        count += below ? 1 : 0;
    }
    return static_cast<double>(count) / static_cast<double>(po.rows());
}

}  // namespace

double copula_cdf(const CopulaModel& model, std::span<const double> u) {
    check_unit_cube(u);
    struct Visitor {
        std::span<const double> u;
        double operator()(const IndependentCopula&) const {
            return std::accumulate(u.begin(), u.end(), 1.0, std::multiplies<>());
        }
        double operator()(const GumbelCopula& g) const { return gumbel_cdf(g.theta, u); }
        double operator()(const EmpiricalCopula& e) const { return empirical_cdf(e.pseudo, u); }
    };
    return std::visit(Visitor{u}, model.variant());
}

double copula_cdf(const CopulaModel& model, const Eigen::VectorXd& u) {
    return copula_cdf(model, std::span<const double>(u.data(), static_cast<std::size_t>(u.size())));
}

FrechetBounds frechet_bounds(std::span<const double> u) {
    check_unit_cube(u);
    const double sum = std::accumulate(u.begin(), u.end(), 0.0);
    return {std::max(sum - static_cast<double>(u.size()) + 1.0, 0.0), *std::ranges::min_element(u)};
}

double kendall_tau(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size())
        throw Error(ErrorCode::LengthMismatch, "kendall tau needs equal-length samples");
    if (x.size() < 2) throw Error(ErrorCode::LengthMismatch, "kendall tau needs at least two observations");
    long long net = 0;
    const std::size_t n = x.size();
    for (std::size_t i = 0; i + 1 < n; ++i) {
        for (std::size_t k = i + 1; k < n; ++k) {
            const double s = (x[i] - x[k]) * (y[i] - y[k]);
            net += (s > 0.0) - (s < 0.0);
        }
    }
    return static_cast<double>(net) / (static_cast<double>(n) * static_cast<double>(n - 1) / 2.0);
}

double gumbel_log_density(double u, double v, double theta) {
    if (!(theta >= 1.0)) throw Error(ErrorCode::DomainError, "gumbel theta must be >= 1");
    if (!(u > 0.0 && u < 1.0 && v > 0.0 && v < 1.0))
        throw Error(ErrorCode::DomainError, "gumbel density is defined on the open unit square");
    const double x = -std::log(u);
    const double y = -std::log(v);
    const double lx = std::log(x);
    const double ly = std::log(y);
    // log(x^theta + y^theta) without overflow
    const double hi = theta * std::max(lx, ly);
    const double lo = theta * std::min(lx, ly);
    const double log_s = hi + std::log1p(std::exp(lo - hi));
    const double a = std::exp(log_s / theta);
    return -a + x + y + (theta - 1.0) * (lx + ly) + (1.0 / theta - 2.0) * log_s + std::log(a + theta - 1.0);
}

double pairwise_gumbel_loglik(const PseudoObservations& pseudo, double theta) {
    const Eigen::Index n = pseudo.rows();
    const double shrink = pseudo.u.maxCoeff() >= 1.0 ? static_cast<double>(n) / static_cast<double>(n + 1) : 1.0;
    double total = 0.0;
    for (Eigen::Index j = 0; j + 1 < pseudo.targets(); ++j)
        for (Eigen::Index k = j + 1; k < pseudo.targets(); ++k)
            for (Eigen::Index i = 0; i < n; ++i)
                total += gumbel_log_density(shrink * pseudo.u(i, j), shrink * pseudo.u(i, k), theta);
    return total;
}

namespace {

double mean_pairwise_tau(const PseudoObservations& pseudo) {
    double sum = 0.0;
    int pairs = 0;
    const auto n = static_cast<std::size_t>(pseudo.rows());
    for (Eigen::Index j = 0; j + 1 < pseudo.targets(); ++j) {
        for (Eigen::Index k = j + 1; k < pseudo.targets(); ++k) {
            sum += kendall_tau(std::span<const double>(pseudo.u.col(j).data(), n),
                               std::span<const double>(pseudo.u.col(k).data(), n));
            ++pairs;
        }
    }
    return sum / pairs;
}

// Golden-section maximisation on [a, b].
template <class F>
double golden_max(F&& f, double a, double b, double tol) {
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = f(c), fd = f(d);
    while (b - a > tol) {
        if (fc >= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    return fc >= fd ? c : d;
}

}  // namespace

GumbelFit fit_gumbel(const PseudoObservations& pseudo, GumbelEstimator method, double theta_max) {
    if (pseudo.rows() < 8)
        throw Error(ErrorCode::TooFewRows, "gumbel estimation needs >= 8 rows, got " + std::to_string(pseudo.rows()));
    if (pseudo.targets() < 2)
        throw Error(ErrorCode::DimensionMismatch, "gumbel estimation needs >= 2 targets");
    if (!(theta_max > 1.0)) throw Error(ErrorCode::InvalidArgument, "theta_max must be > 1");

    GumbelFit fit;
    fit.mean_tau = mean_pairwise_tau(pseudo);

    if (method == GumbelEstimator::TauInversion) {
        if (fit.mean_tau >= 1.0 - 1.0 / theta_max) {
            fit.theta = theta_max;
            fit.degenerate = true;
        } else {
            fit.theta = std::max(1.0, 1.0 / (1.0 - fit.mean_tau));
        }
    } else {
        const auto objective = [&](double theta) { return pairwise_gumbel_loglik(pseudo, theta); };
        // geometric pre-scan, then golden section inside the best bracket
        constexpr int grid_points = 64;
        std::vector<double> grid(grid_points), values(grid_points);
        for (int i = 0; i < grid_points; ++i) {
            grid[i] = std::pow(theta_max, static_cast<double>(i) / (grid_points - 1));
            values[i] = objective(grid[i]);
        }
        const auto best = static_cast<int>(std::ranges::max_element(values) - values.begin());
        for (int i = 1; i < grid_points; ++i) {
            const bool rising = values[i] > values[i - 1];
            if (rising && i > best) fit.unimodal = false;
            if (!rising && values[i] != values[i - 1] && i <= best) fit.unimodal = false;
        }
        const double lo = grid[std::max(best - 1, 0)];
        const double hi = grid[std::min(best + 1, grid_points - 1)];
        fit.theta = std::clamp(golden_max(objective, lo, hi, 1e-8), 1.0, theta_max);
        if (!fit.unimodal) fit.warning = "pairwise likelihood pre-scan is not unimodal; ";
        fit.degenerate = theta_max - fit.theta < 1e-6;
    }
    if (fit.degenerate)
        fit.warning += "DegenerateDependence: scores are nearly comonotone, theta clamped to " + std::to_string(theta_max);
    return fit;
}

namespace {

void check_epsilon(double epsilon_g) {
    if (!(epsilon_g > 0.0 && epsilon_g < 1.0))
        throw Error(ErrorCode::DomainError, "epsilon_g must lie in (0, 1)");
}

// (1 - eps_g)^exponent and its complement, both without cancellation.
ConfidenceSpec power_level(double epsilon_g, double exponent) {
    const double log_level = exponent * std::log1p(-epsilon_g);
    return {epsilon_g, -std::expm1(log_level), std::exp(log_level)};
}

ConfidenceSpec independent_confidence(double epsilon_g, Eigen::Index m) {
    check_epsilon(epsilon_g);
    if (m < 1) throw Error(ErrorCode::DimensionMismatch, "m must be >= 1");
    if (m == 1) return {epsilon_g, epsilon_g, 1.0 - epsilon_g};
    return power_level(epsilon_g, 1.0 / static_cast<double>(m));
}

ConfidenceSpec gumbel_confidence(double epsilon_g, Eigen::Index m, double theta) {
    if (!(theta >= 1.0)) throw Error(ErrorCode::DomainError, "gumbel theta must be >= 1");
    // theta = 1 is the product copula; share its arithmetic exactly.
    if (theta == 1.0 || m == 1) return independent_confidence(epsilon_g, m);
    check_epsilon(epsilon_g);
    return power_level(epsilon_g, std::pow(static_cast<double>(m), -1.0 / theta));
}

ConfidenceSpec empirical_confidence(const PseudoObservations& pseudo, double epsilon_g) {
    check_epsilon(epsilon_g);
    if (pseudo.rows() < 1 || pseudo.targets() < 1)
        throw Error(ErrorCode::EmptySample, "empirical calibration needs pseudo-observations");
    const auto model = CopulaModel::empirical(pseudo);
    const double target = 1.0 - epsilon_g;
    std::vector<double> point(static_cast<std::size_t>(pseudo.targets()));
    const auto diagonal = [&](double t) {
        std::ranges::fill(point, t);
        return copula_cdf(model, point);
    };

    // diagonal(0) = 0 < target <= 1 = diagonal(1)
    double lo = 0.0, hi = 1.0;
    while (hi - lo > 1e-9) {
        const double mid = 0.5 * (lo + hi);
        if (diagonal(mid) >= target) hi = mid;
        else lo = mid;
    }

    // The diagonal is a step function jumping at row maxima; the first jump
    // above lo is the exact solution.
    std::vector<double> row_max(static_cast<std::size_t>(pseudo.rows()));
    for (Eigen::Index i = 0; i < pseudo.rows(); ++i) row_max[static_cast<std::size_t>(i)] = pseudo.u.row(i).maxCoeff();
    std::ranges::sort(row_max);
    auto it = std::ranges::upper_bound(row_max, lo);
    double level = hi;
    for (; it != row_max.end(); ++it) {
        if (diagonal(*it) >= target) {
            level = *it;
            break;
        }
    }
    return {epsilon_g, 1.0 - level, level};
}

}  // namespace

double independent_epsilon_t(double epsilon_g, Eigen::Index m) { return independent_confidence(epsilon_g, m).epsilon_t; }

double gumbel_epsilon_t(double epsilon_g, Eigen::Index m, double theta) {
    return gumbel_confidence(epsilon_g, m, theta).epsilon_t;
}

double empirical_epsilon_t(const PseudoObservations& pseudo, double epsilon_g) {
    return empirical_confidence(pseudo, epsilon_g).epsilon_t;
}

ConfidenceSpec per_target_confidence(const CopulaModel& model, Eigen::Index m, double epsilon_g) {
    struct Visitor {
        Eigen::Index m;
        double eg;
        ConfidenceSpec operator()(const IndependentCopula&) const { return independent_confidence(eg, m); }
        ConfidenceSpec operator()(const GumbelCopula& g) const { return gumbel_confidence(eg, m, g.theta); }
        ConfidenceSpec operator()(const EmpiricalCopula& e) const {
            if (e.pseudo.targets() != m)
                throw Error(ErrorCode::DimensionMismatch, "empirical copula width differs from the target count");
            return empirical_confidence(e.pseudo, eg);
        }
    };
    return std::visit(Visitor{m, epsilon_g}, model.variant());
}

Eigen::VectorXd calibrate_thresholds(const ScoreMatrix& scores, const CopulaModel& model, double epsilon_g,
                                     EcdfDivisor divisor) {
    if (scores.rows() < 1) throw Error(ErrorCode::EmptySample, "calibration needs at least one score row");
    const ConfidenceSpec conf = per_target_confidence(model, scores.targets(), epsilon_g);
    Eigen::VectorXd alpha(scores.targets());
    for (Eigen::Index j = 0; j < scores.targets(); ++j)
        alpha(j) = EmpiricalCdf(scores.column(j), divisor).quantile(conf.level);
    return alpha;
}

CopulaFit fit_copula(CopulaKind kind, const ScoreMatrix& scores, const CalibrationOptions& options) {
    switch (kind) {
        case CopulaKind::Independent: return {CopulaModel::independent(), std::nullopt};
        case CopulaKind::Gumbel: {
            if (scores.targets() == 1) return {CopulaModel::gumbel(1.0), std::nullopt};
            GumbelFit g = fit_gumbel(pseudo_observations(scores, options.ecdf_divisor), options.gumbel_estimator,
                                     options.theta_max);
            CopulaModel model = g.model();
            return {std::move(model), std::move(g)};
        }
        case CopulaKind::Empirical:
            return {CopulaModel::empirical(pseudo_observations(scores, options.ecdf_divisor)), std::nullopt};
    }
    throw Error(ErrorCode::InvalidArgument, "unknown copula kind");
}

}  // namespace copcp
