#pragma once

// Independent reference computations for the test suites. Nothing here calls
// into the code paths it is used to check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace copcp::testing {

/// Brute-force (# values <= x) / n.
inline double brute_ecdf(const std::vector<double>& values, double x) {
    std::size_t count = 0;
    for (double v : values) count += v <= x ? 1 : 0;
    return static_cast<double>(count) / static_cast<double>(values.size());
}

/// Brute-force pseudo-observations: for every entry, the count of entries in
/// its column that are <= it, over N.
inline Eigen::MatrixXd brute_pseudo(const Eigen::MatrixXd& a) {
    Eigen::MatrixXd u(a.rows(), a.cols());
    for (Eigen::Index j = 0; j < a.cols(); ++j)
        for (Eigen::Index i = 0; i < a.rows(); ++i) {
            Eigen::Index count = 0;
            for (Eigen::Index k = 0; k < a.rows(); ++k) count += a(k, j) <= a(i, j) ? 1 : 0;
            u(i, j) = static_cast<double>(count) / static_cast<double>(a.rows());
        }
    return u;
}

/// Per-target level from the empirical diagonal: the k-th smallest row
/// maximum for the smallest k with k / N >= 1 - eps_g.
inline double row_max_level(const Eigen::MatrixXd& u, double epsilon_g) {
    std::vector<double> maxima;
    for (Eigen::Index i = 0; i < u.rows(); ++i) maxima.push_back(u.row(i).maxCoeff());
    std::sort(maxima.begin(), maxima.end());
    const auto n = maxima.size();
    for (std::size_t k = 1; k <= n; ++k) {
        // count of row maxima <= the k-th smallest (ties included)
        const auto count = static_cast<std::size_t>(std::upper_bound(maxima.begin(), maxima.end(), maxima[k - 1]) -
                                                    maxima.begin());
        if (static_cast<double>(count) / static_cast<double>(n) >= 1.0 - epsilon_g) return maxima[k - 1];
    }
    return maxima.back();
}

/// Brute-force tau-a over all pairs.
inline double brute_tau(const std::vector<double>& x, const std::vector<double>& y) {
    double c = 0, d = 0;
    for (std::size_t i = 0; i < x.size(); ++i)
        for (std::size_t k = 0; k < x.size(); ++k) {
            if (k <= i) continue;
            const double s = (x[i] - x[k]) * (y[i] - y[k]);
            if (s > 0) c += 1;
            if (s < 0) d += 1;
        }
    const double pairs = static_cast<double>(x.size()) * static_cast<double>(x.size() - 1) / 2.0;
    return (c - d) / pairs;
}

/// Closed form of the m-variate Gumbel copula, written independently of the library.
inline double gumbel_cdf_reference(const std::vector<double>& u, double theta) {
    double s = 0.0;
    for (double v : u) s += std::pow(-std::log(v), theta);
    return std::exp(-std::pow(s, 1.0 / theta));
}

/// Bivariate Gumbel C(a, b) - min(a, b), written so it keeps full relative
/// precision when C is within rounding of min(a, b).
inline double gumbel_excess_over_min(double a, double b, double theta) {
    const double s = std::min(a, b), t = std::max(a, b);
    const double ls = -std::log(s), lt = -std::log(t);
    const double ratio = std::pow(lt / ls, theta);
    return s * std::expm1(-ls * std::expm1(std::log1p(ratio) / theta));
}

/// Mixed partial d^2 C / du dv of the bivariate Gumbel copula by central
/// finite differences with one Richardson step. Away from the diagonal the
/// differenced function is C - min(u, v), whose mixed partial is the same but
/// which does not cancel when the density is tiny.
inline double gumbel_density_fd(double u, double v, double theta, double h = 2e-4) {
    const bool same_side = std::abs(u - v) > 2.0 * h;
    const auto c = [&](double a, double b) {
        return same_side ? gumbel_excess_over_min(a, b, theta) : gumbel_cdf_reference({a, b}, theta);
    };
    const auto mixed = [&](double k) {
        return (c(u + k, v + k) - c(u + k, v - k) - c(u - k, v + k) + c(u - k, v - k)) / (4.0 * k * k);
    };
    return (4.0 * mixed(h / 2.0) - mixed(h)) / 3.0;
}

/// Marshall-Olkin sampler for the m-variate Gumbel copula. The frailty is a
/// positive stable variable with Laplace transform exp(-t^(1/theta)), drawn
/// with the Chambers-Mallows-Stuck construction.
inline Eigen::MatrixXd sample_gumbel(Eigen::Index n, Eigen::Index m, double theta, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> angle(0.0, std::numbers::pi);
    std::exponential_distribution<double> expo(1.0);
    const double alpha = 1.0 / theta;
    Eigen::MatrixXd u(n, m);
    for (Eigen::Index i = 0; i < n; ++i) {
        double frailty = 1.0;
        if (theta > 1.0) {
            const double w = angle(rng);
            const double e = expo(rng);
            frailty = std::sin(alpha * w) / std::pow(std::sin(w), 1.0 / alpha) *
                      std::pow(std::sin((1.0 - alpha) * w) / e, (1.0 - alpha) / alpha);
        }
        for (Eigen::Index j = 0; j < m; ++j) u(i, j) = std::exp(-std::pow(expo(rng) / frailty, alpha));
    }
    return u;
}

/// Pearson correlation of two columns.
inline double pearson(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    const Eigen::ArrayXd x = a.array() - a.mean();
    const Eigen::ArrayXd y = b.array() - b.mean();
    return (x * y).sum() / std::sqrt((x * x).sum() * (y * y).sum());
}

/// Central-difference gradient of a scalar function of a flat vector.
inline Eigen::VectorXd finite_difference(const std::function<double(const Eigen::VectorXd&)>& f,
                                         const Eigen::VectorXd& at, double h = 1e-5) {
    Eigen::VectorXd g(at.size());
    Eigen::VectorXd p = at;
    for (Eigen::Index i = 0; i < at.size(); ++i) {
        p(i) = at(i) + h;
        const double up = f(p);
        p(i) = at(i) - h;
        const double down = f(p);
        p(i) = at(i);
        g(i) = (up - down) / (2.0 * h);
    }
    return g;
}

/// Relative error with an absolute floor so near-zero gradients compare sanely.
inline double relative_error(double analytic, double numeric, double floor = 1e-7) {
    return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

}  // namespace copcp::testing
