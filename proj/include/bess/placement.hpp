#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "bess/geo.hpp"

namespace bess {

struct PlacementProblem {
    std::vector<std::string> node_ids;
    std::vector<double> sigma_forecast;  // $/MWh
    std::vector<int> cluster;            // label per node
    int n_es = 5;
    int max_per_cluster = 1;
    double min_distance = 50.0;          // miles
    Eigen::MatrixXd distance;            // miles, N x N
    std::optional<double> big_m;         // default: max distance + min_distance + 1

    std::size_t size() const { return node_ids.size(); }
    double effective_big_m() const;

    // Throws InvalidInput on malformed data. Infeasibility is reported by the solver.
    void validate() const;

    static PlacementProblem build(std::vector<std::string> node_ids, std::vector<double> sigma,
                                  std::vector<int> cluster, const DistanceMatrix& distances, int n_es,
                                  int max_per_cluster, double min_distance);
};

struct PlacementOptions {
    // Above this many candidates the search is warm-started from a pre-filtered
    // problem that keeps the top nodes of each cluster.
    std::size_t prefilter_above = 200;
    // Report which constraint classes change the optimum (costs two extra solves).
    bool report_binding = true;
};

struct SolverStats {
    std::size_t nodes_explored = 0;
    std::size_t prunes = 0;
    std::size_t filter_width = 0;  // 0 when no pre-filter ran
    std::size_t widenings = 0;
};

struct PlacementPlan {
    std::vector<std::size_t> indices;   // ascending
    std::vector<std::string> selected;  // ids in index order
    double objective = 0.0;
    std::vector<std::pair<int, int>> cluster_counts;  // (cluster, count), by cluster
    double min_pair_distance = 0.0;                   // +inf with fewer than two nodes
    std::vector<std::string> binding;                 // "cluster", "distance"
    SolverStats stats;

    nlohmann::json to_json() const;
};

// Exact maximum of the forecast-volatility sum subject to the count, per-cluster
// and pairwise distance constraints. Among optimal sets (objectives within 1e-9
// relative) the lexicographically smallest sorted id list wins. Throws
// InfeasibleError with constraint() of "cardinality", "cluster" or "distance".
PlacementPlan solve_placement(const PlacementProblem& problem, const PlacementOptions& options = {});

// Distance constraint checked two ways for a binary assignment: directly on
// selected pairs, and by searching for pair variables that satisfy the linear
// system with the big-M constant.
struct LinearizationReport {
    bool bilinear_feasible = true;
    bool linear_feasible = true;
    std::vector<std::pair<std::size_t, std::size_t>> violating_pairs;
    bool count_ok = true;
    bool cluster_ok = true;

    bool agree() const { return bilinear_feasible == linear_feasible; }
};

LinearizationReport verify_linearization(const PlacementProblem& problem, const std::vector<int>& assignment);

}  // namespace bess
