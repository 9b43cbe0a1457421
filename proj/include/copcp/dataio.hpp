#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace copcp {

using Index = Eigen::Index;
using IndexSet = std::vector<Index>;

/// A multi-target regression dataset: n rows, d features, m targets.
struct Dataset {
    Eigen::MatrixXd features;
    Eigen::MatrixXd targets;
    std::vector<std::string> feature_names;
    std::vector<std::string> target_names;

    Index rows() const { return features.rows(); }
    Index feature_dim() const { return features.cols(); }
    Index target_dim() const { return targets.cols(); }

    /// Throws DimensionMismatch / InvalidArgument when the invariants
    /// (equal row counts, n, d, m >= 1, finite entries, name counts) fail.
    void validate() const;

    /// Row subset in the order given by `idx`.
    Dataset subset(std::span<const Index> idx) const;
};

/// Per-column affine transform x -> (x - mean) / std.
struct ColumnScaler {
    Eigen::VectorXd mean;
    Eigen::VectorXd std;

    Eigen::MatrixXd transform(const Eigen::MatrixXd& x) const;
    Eigen::MatrixXd inverse_transform(const Eigen::MatrixXd& z) const;

    /// Fit on the listed rows only. Zero-variance columns get std = 1.
    static ColumnScaler fit(const Eigen::MatrixXd& x, std::span<const Index> rows);
};

struct ScalerParams {
    ColumnScaler features;
    ColumnScaler targets;
};

struct StandardizedData {
    Dataset data;
    ScalerParams scaler;
};

/// Standardize every feature and target column using statistics from `fit_idx`
/// rows only (population variance). Throws EmptyFitSet for an empty fit set.
StandardizedData standardize(const Dataset& data, std::span<const Index> fit_idx);

struct Fold {
    IndexSet train;
    IndexSet calib;
    IndexSet test;
};

struct SplitParams {
    int fold_count = 10;
    double calibration_fraction = 0.10;
    std::uint64_t seed = 0;
    /// Lower bound on the calibration set size (the harness passes max(m + 2, 8)).
    Index min_calibration = 0;
};

struct SplitPlan {
    int fold_count = 0;
    double calibration_fraction = 0.0;
    std::uint64_t seed = 0;
    std::vector<Fold> folds;
};

/// k-fold split with a seeded random calibration subset carved from each
/// fold's non-test rows. Throws TooFewRows.
SplitPlan make_folds(Index n, const SplitParams& params);

/// Linear targets plus Gaussian noise whose m components share one latent
/// factor: noise_j = sqrt(dependence) * z + sqrt(1 - dependence) * e_j, so the
/// pairwise noise correlation equals `dependence`. Features are standard
/// normal, coefficients standard normal, all drawn from `seed`.
Dataset synth_dataset(Index n, Index m, Index feature_dim, double dependence, std::uint64_t seed);

/// The (d x m) coefficient matrix `synth_dataset` draws for this seed, so
/// tests can build an oracle regressor.
Eigen::MatrixXd synth_coefficients(Index m, Index feature_dim, std::uint64_t seed);

/// Reads a headed numeric CSV. Targets are the named columns (in the given
/// order); every other column is a feature, in header order.
/// Throws EmptyFile, MissingColumn, NonNumericCell, Io.
Dataset load_csv(const std::filesystem::path& path, const std::vector<std::string>& target_columns);

/// Writes features then targets with a header row; values use max precision
/// so a load_csv round trip is exact.
void write_csv(const std::filesystem::path& path, const Dataset& data);

}  // namespace copcp
