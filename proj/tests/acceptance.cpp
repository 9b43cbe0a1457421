// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero if any fails.

#include <chrono>
#include <algorithm>
#include <cstdio>
#include <functional>
#include <memory>
#include <numeric>
#include <random>
#include <sstream>
#include <string>

#include "copcp/conformal.hpp"
#include "copcp/copula.hpp"
#include "copcp/dataio.hpp"
#include "copcp/eval.hpp"
#include "copcp/regress.hpp"
#include "copcp/scores.hpp"
#include "support/oracles.hpp"

using namespace copcp;
namespace oracle = copcp::testing;

namespace {

// tolerances
constexpr double kGumbelIndependentTol = 1e-12;
constexpr double kCoverageLow = 0.88;
constexpr double kCoverageHigh = 0.93;
constexpr double kGapTolPoints = 2.0;
constexpr double kCurveTolPoints = 3.0;
constexpr double kThetaRelTol = 0.15;
constexpr double kDensityRelTol = 1e-4;
constexpr double kGradientRelTol = 1e-4;
constexpr int kMonotoneTrials = 10000;

struct Outcome {
    bool pass = true;
    std::string detail;
};

Eigen::MatrixXd exp_scores(int n, int m, std::mt19937_64& rng, bool ties) {
    std::exponential_distribution<double> expo(1.0);
    std::uniform_int_distribution<int> coarse(0, 5);
    Eigen::MatrixXd a(n, m);
    for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = ties ? coarse(rng) : expo(rng);
    return a;
}

Outcome closed_form() {
    Outcome o;
    const double et = independent_epsilon_t(0.19, 2);
    if (et != 0.1) o.pass = false;
    std::mt19937_64 rng(101);
    std::uniform_real_distribution<double> eps(0.001, 0.999);
    std::uniform_int_distribution<int> dim(1, 30);
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
        const double eg = eps(rng);
        const int m = dim(rng);
        worst = std::max(worst, std::abs(gumbel_epsilon_t(eg, m, 1.0) - independent_epsilon_t(eg, m)));
    }
    if (worst > kGumbelIndependentTol) o.pass = false;
    std::ostringstream s;
    s.precision(17);
    s << "independent_epsilon_t(0.19, 2) " << (et == 0.1 ? "== 0.1" : "!= 0.1") << " (" << et
      << "), max |gumbel(theta=1) - independent| = " << worst;
    o.detail = s.str();
    return o;
}

Outcome empirical_oracle() {
    Outcome o;
    std::mt19937_64 rng(202);
    std::uniform_int_distribution<int> rows(1, 50), cols(1, 5);
    std::uniform_real_distribution<double> eps(0.005, 0.995);
    int mismatches = 0, checks = 0;
    for (int t = 0; t < 200; ++t) {
        const auto pseudo = pseudo_observations(ScoreMatrix(exp_scores(rows(rng), cols(rng), rng, t % 3 == 0)));
        for (int k = 0; k < 5; ++k) {
            const double eg = eps(rng);
            const double want = oracle::row_max_level(pseudo.u, eg);
            const ConfidenceSpec c = per_target_confidence(CopulaModel::empirical(pseudo), pseudo.targets(), eg);
            ++checks;
            if (c.level != want || empirical_epsilon_t(pseudo, eg) != 1.0 - want) ++mismatches;
        }
    }
    o.pass = mismatches == 0;
    o.detail = std::to_string(mismatches) + " mismatches in " + std::to_string(checks) + " checks";
    return o;
}

Outcome frechet() {
    Outcome o;
    std::mt19937_64 rng(303);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::uniform_int_distribution<int> cols(2, 5);
    int violations = 0;
    long checks = 0;
    const auto check = [&](const CopulaModel& model, const std::vector<double>& u) {
        const auto b = frechet_bounds(u);
        const double c = copula_cdf(model, u);
        ++checks;
        if (c < b.lower - 1e-12 || c > b.upper + 1e-12) ++violations;
    };
    for (int i = 0; i < 10000; ++i) {
        std::vector<double> u(static_cast<std::size_t>(cols(rng)));
        for (double& v : u) v = unif(rng);
        check(CopulaModel::independent(), u);
        for (double theta : {1.0, 2.0, 5.0}) check(CopulaModel::gumbel(theta), u);
    }
    // The empirical copula is a step function on the grid {k / N}; check it
    // there. Scores are continuous: tied scores share the top rank, which
    // leaves the margins non-uniform and can put C below W.
    const int n = 40;
    std::uniform_int_distribution<int> grid(0, n);
    for (int i = 0; i < 10000; ++i) {
        const int m = cols(rng);
        const auto model = CopulaModel::empirical(pseudo_observations(ScoreMatrix(exp_scores(n, m, rng, false))));
        std::vector<double> u(static_cast<std::size_t>(m));
        for (double& v : u) v = grid(rng) / static_cast<double>(n);
        check(model, u);
    }
    o.pass = violations == 0;
    o.detail = std::to_string(violations) + " violations in " + std::to_string(checks) + " evaluations";
    return o;
}

struct SynthSplit {
    Dataset train, calib, test;
};

SynthSplit synth_split(double dependence, std::uint64_t seed) {
    const Dataset d = synth_dataset(6000, 3, 5, dependence, seed);
    std::vector<Index> a(4000), b(1000), c(1000);
    std::iota(a.begin(), a.end(), Index{0});
    std::iota(b.begin(), b.end(), Index{4000});
    std::iota(c.begin(), c.end(), Index{5000});
    return {d.subset(a), d.subset(b), d.subset(c)};
}

ConformalPredictor ridge_predictor(const SynthSplit& s, CopulaKind kind) {
    RegressorSpec ridge;
    ridge.kind = RegressorKind::Ridge;
    return ConformalPredictor::build(s.train.features, s.train.targets, s.calib.features, s.calib.targets, ridge, ridge,
                                     kind, kDefaultBeta, 7);
}

Outcome synthetic_coverage() {
    Outcome o;
    const SynthSplit s = synth_split(0.9, 404);
    const auto ind = ridge_predictor(s, CopulaKind::Independent);
    const auto emp = ind.with_copula(CopulaKind::Empirical);
    const double ci = coverage(ind.predict_boxes(s.test.features, 0.1), s.test.targets);
    const double ce = coverage(emp.predict_boxes(s.test.features, 0.1), s.test.targets);
    const double vi = efficiency_median_volume(ind, s.test.features, 0.1);
    const double ve = efficiency_median_volume(emp, s.test.features, 0.1);
    o.pass = ce >= kCoverageLow && ce <= kCoverageHigh && ci >= ce && vi >= ve;
    std::ostringstream d;
    d << "coverage empirical " << ce << ", independent " << ci << "; median volume empirical " << ve
      << ", independent " << vi;
    o.detail = d.str();
    return o;
}

Outcome independence_sanity() {
    Outcome o;
    const SynthSplit s = synth_split(0.0, 505);
    const auto ind = ridge_predictor(s, CopulaKind::Independent);
    const auto emp = ind.with_copula(CopulaKind::Empirical);
    const auto grid = default_epsilon_grid();
    const ValidityCurve ci = validity_curve(ind, s.test.features, s.test.targets, grid);
    const ValidityCurve ce = validity_curve(emp, s.test.features, s.test.targets, grid);
    const double gap = validity_gap(ci);
    double worst = 0.0;
    for (std::size_t k = 0; k < grid.size(); ++k) worst = std::max(worst, 100.0 * std::abs(ci.coverage[k] - ce.coverage[k]));
    o.pass = std::abs(gap) <= kGapTolPoints && worst <= kCurveTolPoints;
    std::ostringstream d;
    d << "independent gap " << gap << " points, max curve difference " << worst << " points";
    o.detail = d.str();
    return o;
}

Outcome gumbel_recovery() {
    Outcome o;
    std::ostringstream d;
    std::uint64_t seed = 606;
    for (double theta : {1.5, 2.0, 4.0}) {
        const auto pseudo = pseudo_observations(ScoreMatrix(oracle::sample_gumbel(2000, 3, theta, seed++)));
        const double tau = fit_gumbel(pseudo, GumbelEstimator::TauInversion).theta;
        const double mple = fit_gumbel(pseudo, GumbelEstimator::PairwiseMple).theta;
        if (std::abs(tau - theta) > kThetaRelTol * theta || std::abs(mple - theta) > kThetaRelTol * theta)
            o.pass = false;
        d << "theta* " << theta << ": tau " << tau << ", mple " << mple << "; ";
    }
    std::mt19937_64 rng(607);
    std::uniform_real_distribution<double> unif(0.02, 0.98), th(1.0, 6.0);
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
        const double u = unif(rng), v = unif(rng), theta = th(rng);
        worst = std::max(worst, oracle::relative_error(gumbel_density(u, v, theta), oracle::gumbel_density_fd(u, v, theta)));
    }
    if (worst > kDensityRelTol) o.pass = false;
    d << "density max rel error " << worst;
    o.detail = d.str();
    return o;
}

Outcome gradient_check() {
    Outcome o;
    std::mt19937_64 rng(707);
    std::normal_distribution<double> normal;
    std::uniform_int_distribution<int> width(3, 9), depth(0, 3), in(2, 6), out(1, 3);
    double worst = 0.0;
    int coords = 0;
    for (int net = 0; net < 10; ++net) {
        std::vector<int> hidden(static_cast<std::size_t>(depth(rng)) + 1);
        for (int& h : hidden) h = width(rng);
        const int d = in(rng), m = out(rng);
        MlpParams p = mlp_init(d, hidden, m, rng);
        Eigen::MatrixXd x(6, d), y(6, m);
        for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = normal(rng);
        for (Eigen::Index i = 0; i < y.size(); ++i) y.data()[i] = normal(rng);
        const Eigen::VectorXd flat = p.flatten();
        const Eigen::VectorXd grad = mlp_gradient(p, x, y).flatten();
        const auto loss = [&](const Eigen::VectorXd& w) {
            MlpParams q = p;
            q.assign_flat(w);
            return mlp_loss(q, x, y);
        };
        std::uniform_int_distribution<Eigen::Index> pick(0, flat.size() - 1);
        for (int c = 0; c < 100; ++c) {
            const Eigen::Index k = pick(rng);
            Eigen::VectorXd w = flat;
            const double h = 1e-5;
            w(k) = flat(k) + h;
            const double up = loss(w);
            w(k) = flat(k) - h;
            const double down = loss(w);
            worst = std::max(worst, oracle::relative_error(grad(k), (up - down) / (2 * h)));
            ++coords;
        }
    }
    o.pass = worst < kGradientRelTol;
    std::ostringstream d;
    d << "max rel error " << worst << " over " << coords << " coordinates of 10 networks";
    o.detail = d.str();
    return o;
}

Outcome monotonicity() {
    Outcome o;
    std::mt19937_64 rng(808);
    std::uniform_int_distribution<int> rows(1, 40), cols(1, 4), kind(0, 2), coin(0, 1);
    std::uniform_real_distribution<double> eps(0.001, 0.999), prob(-0.1, 1.1);
    std::normal_distribution<double> normal;

    // a fixed underlying model; each trial brings its own calibration scores
    RegressorSpec ridge;
    ridge.kind = RegressorKind::Ridge;
    int curve_bad = 0, nest_bad = 0, quantile_bad = 0;
    const auto grid = default_epsilon_grid();
    for (int t = 0; t < kMonotoneTrials; ++t) {
        const int m = cols(rng);
        Eigen::MatrixXd xt(30, 2), yt(30, m);
        for (Eigen::Index i = 0; i < xt.size(); ++i) xt.data()[i] = normal(rng);
        for (Eigen::Index i = 0; i < yt.size(); ++i) yt.data()[i] = normal(rng);
        const auto model = std::make_shared<const FittedModel>(fit(ridge, xt, yt, 0));

        const auto k = static_cast<CopulaKind>(kind(rng));
        // the Gumbel fit needs at least 8 rows
        const int n = k == CopulaKind::Gumbel ? std::max(rows(rng), 8) : rows(rng);
        const ScoreMatrix scores(exp_scores(n, m, rng, coin(rng) == 1));
        const EcdfDivisor divisor = coin(rng) ? EcdfDivisor::N : EcdfDivisor::NPlusOne;
        CalibrationOptions opts;
        opts.ecdf_divisor = divisor;
        const ConformalPredictor pred(model, nullptr, scores, kDefaultBeta, fit_copula(k, scores, opts), divisor);

        Eigen::MatrixXd x(5, 2), y(5, m);
        for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = normal(rng);
        for (Eigen::Index i = 0; i < y.size(); ++i) y.data()[i] = 2.0 * normal(rng);
        const ValidityCurve curve = validity_curve(pred, x, y, grid);
        for (std::size_t g = 1; g < grid.size(); ++g)
            if (curve.coverage[g] > curve.coverage[g - 1]) ++curve_bad;

        double e1 = eps(rng), e2 = eps(rng);
        if (e1 > e2) std::swap(e1, e2);
        const auto wide = pred.predict_boxes(x, e1);
        const auto narrow = pred.predict_boxes(x, e2);
        for (std::size_t i = 0; i < wide.size(); ++i)
            if ((narrow[i].lower.array() < wide[i].lower.array()).any() ||
                (narrow[i].upper.array() > wide[i].upper.array()).any())
                ++nest_bad;

        const EmpiricalCdf cdf(scores.column(0), divisor);
        double p1 = prob(rng), p2 = prob(rng);
        if (p1 > p2) std::swap(p1, p2);
        if (cdf.quantile(p1) > cdf.quantile(p2)) ++quantile_bad;
    }
    o.pass = curve_bad + nest_bad + quantile_bad == 0;
    o.detail = std::to_string(kMonotoneTrials) + " trials: " + std::to_string(curve_bad) + " curve, " +
               std::to_string(nest_bad) + " nesting, " + std::to_string(quantile_bad) + " quantile counterexamples";
    return o;
}

Outcome single_target() {
    Outcome o;
    const Dataset d = synth_dataset(1500, 1, 4, 0.0, 909);
    std::vector<Index> a(900), b(300), c(300);
    std::iota(a.begin(), a.end(), Index{0});
    std::iota(b.begin(), b.end(), Index{900});
    std::iota(c.begin(), c.end(), Index{1200});
    const Dataset tr = d.subset(a), ca = d.subset(b), te = d.subset(c);
    RegressorSpec ridge;
    ridge.kind = RegressorKind::Ridge;
    RegressorSpec knn;
    knn.kind = RegressorKind::Knn;
    knn.k = 15;
    const auto grid = default_epsilon_grid();
    std::vector<std::vector<PredictionBox>> boxes;
    std::vector<ValidityCurve> curves;
    for (auto kind : {CopulaKind::Independent, CopulaKind::Gumbel, CopulaKind::Empirical}) {
        const auto pred = ConformalPredictor::build(tr.features, tr.targets, ca.features, ca.targets, ridge, knn, kind,
                                                    kDefaultBeta, 3);
        curves.push_back(validity_curve(pred, te.features, te.targets, grid));
        std::vector<PredictionBox> all;
        for (double eg : grid) {
            const auto b = pred.predict_boxes(te.features, eg);
            all.insert(all.end(), b.begin(), b.end());
        }
        boxes.push_back(std::move(all));
    }
    int differing = 0;
    for (std::size_t k = 1; k < 3; ++k) {
        if (curves[k].coverage != curves[0].coverage) ++differing;
        for (std::size_t i = 0; i < boxes[0].size(); ++i)
            if (boxes[k][i].lower != boxes[0][i].lower || boxes[k][i].upper != boxes[0][i].upper) ++differing;
    }
    o.pass = differing == 0;
    o.detail = std::to_string(differing) + " differing boxes/curves across copulas (" +
               std::to_string(boxes[0].size()) + " boxes each)";
    return o;
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"closed-form calibration", closed_form},
        {"empirical copula oracle", empirical_oracle},
        {"Frechet sandwich", frechet},
        {"synthetic coverage", synthetic_coverage},
        {"independence sanity", independence_sanity},
        {"Gumbel recovery", gumbel_recovery},
        {"MLP gradient check", gradient_check},
        {"monotonicity", monotonicity},
        {"single-target degeneracy", single_target},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (!o.pass) ++failed;
        std::printf("%s %zu %s: %s [%.2fs]\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                    o.detail.c_str(), secs);
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
