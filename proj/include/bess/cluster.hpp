#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "bess/market_data.hpp"

namespace bess {

struct FeatureMatrix {
    std::vector<std::string> node_ids;
    Eigen::MatrixXd raw;       // N x D daily standard deviations
    Eigen::MatrixXd features;  // z-scored columns
    Eigen::RowVectorXd mean;   // per-column mean of raw
    Eigen::RowVectorXd scale;  // per-column sample standard deviation (1 for constant columns)
};

// Z-scores every column with its mean and sample standard deviation. Columns
// with zero spread become all-zero.
FeatureMatrix normalize_features(std::vector<std::string> node_ids, Eigen::MatrixXd raw);

// Sample standard deviation of each node's 24 hourly LMPs for every day of
// `month`. Throws ValidationError when the dataset misses part of the month.
FeatureMatrix build_features(const MarketDataset& data, Date month);

struct PcaResult {
    Eigen::MatrixXd scores;       // N x D' projections of the centered data
    Eigen::MatrixXd basis;        // D x D' orthonormal columns
    Eigen::RowVectorXd center;    // column means removed before projection
    Eigen::VectorXd eigenvalues;  // all covariance eigenvalues, descending
    double explained = 0.0;       // retained fraction of total variance
    bool degenerate = false;      // zero total variance: one all-zero component
};

// Keeps the fewest leading components whose cumulative explained variance
// reaches `min_explained`. Each basis column is signed so that its entry of
// largest magnitude is positive.
PcaResult pca_reduce(const Eigen::MatrixXd& features, double min_explained = 0.9);

struct KMeansOptions {
    int restarts = 10;
    int max_iterations = 300;
};

struct KMeansRun {
    std::vector<int> labels;
    Eigen::MatrixXd centroids;
    double inertia = 0.0;
    std::vector<double> history;  // inertia after every Lloyd iteration
    int iterations = 0;
    bool converged = false;
};

// Lloyd iterations from the given centroids until assignments stop changing.
// An emptied cluster is re-seeded at the point farthest from its centroid.
KMeansRun lloyd(const Eigen::MatrixXd& points, Eigen::MatrixXd centroids, int max_iterations = 300);

// k-means++ seeding drawn from `rng`.
Eigen::MatrixXd kmeans_plus_plus(const Eigen::MatrixXd& points, int k, std::uint64_t seed);

// Sum over points of the squared distance to the assigned centroid.
double inertia(const Eigen::MatrixXd& points, const std::vector<int>& labels,
               const Eigen::MatrixXd& centroids);

struct ClusterModel {
    int k = 0;
    std::vector<std::string> node_ids;
    std::vector<int> labels;  // renumbered in order of first appearance
    Eigen::MatrixXd centroids;
    double inertia = 0.0;
    std::vector<double> history;         // Lloyd history of the winning restart
    std::vector<double> restart_inertia;  // final inertia of every restart
    std::uint64_t seed = 0;
    int restarts = 0;
    // PCA metadata when fitted from node features.
    Eigen::MatrixXd pca_basis;
    double explained_variance = 1.0;
    std::vector<int> elbow_range;
    std::vector<double> elbow_inertia;

    nlohmann::json metadata() const;
};

// Best of `restarts` seeded runs by inertia. Requires 1 <= k <= N.
ClusterModel kmeans(const Eigen::MatrixXd& points, int k, std::uint64_t seed,
                    const KMeansOptions& options = {});

struct ElbowResult {
    int k = 0;
    std::vector<int> range;
    std::vector<double> inertia;  // best-of-restarts inertia per K in range
};

// Chooses the K in [k_min, k_max] with the largest second difference
// I(K-1) - 2 I(K) + I(K+1); the neighbours just outside the range are
// evaluated too (I(N+1) is taken as 0). Ties go to the smaller K.
ElbowResult elbow_select(const Eigen::MatrixXd& points, int k_min, int k_max, std::uint64_t seed,
                         const KMeansOptions& options = {});

struct ClusterOptions {
    double min_explained = 0.9;
    int k_min = 2;
    int k_max = 10;  // clipped to the node count
    std::uint64_t seed = 1;
    KMeansOptions kmeans;
};

// Features of `month` -> PCA -> elbow -> k-means.
ClusterModel cluster_nodes(const MarketDataset& data, Date month, const ClusterOptions& options = {});

// node_id,cluster
void write_cluster_csv(const ClusterModel& model, const std::string& path);

}  // namespace bess
