#include "bess/placement.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <unordered_set>

#include <fmt/format.h>

#include "bess/errors.hpp"

namespace bess {

double PlacementProblem::effective_big_m() const {
    if (big_m) return *big_m;
    const double dmax = distance.size() > 0 ? distance.maxCoeff() : 0.0;
    return dmax + min_distance + 1.0;
}

void PlacementProblem::validate() const {
    const auto n = node_ids.size();
    if (sigma_forecast.size() != n || cluster.size() != n) {
        throw InvalidInput("placement inputs must have one entry per node");
    }
    if (distance.rows() != static_cast<Eigen::Index>(n) || distance.cols() != static_cast<Eigen::Index>(n)) {
        throw InvalidInput(fmt::format("distance matrix must be {0} x {0}", n));
    }
    std::unordered_set<std::string> seen;
    for (std::size_t i = 0; i < n; ++i) {
        if (!seen.insert(node_ids[i]).second) throw InvalidInput("duplicate node id " + node_ids[i]);
        if (!std::isfinite(sigma_forecast[i])) throw InvalidInput("non-finite forecast for " + node_ids[i]);
    }
    if (n_es < 1) throw InvalidInput("N_ES must be at least 1");
    if (max_per_cluster < 1) throw InvalidInput("per-cluster limit must be at least 1");
    if (!(min_distance >= 0.0) || !std::isfinite(min_distance)) {
        throw InvalidInput("minimum distance must be finite and non-negative");
    }
    for (std::size_t i = 0; i < n; ++i) {
        const auto ii = static_cast<Eigen::Index>(i);
        if (distance(ii, ii) != 0.0) throw InvalidInput("distance matrix diagonal must be zero");
        for (std::size_t j = i + 1; j < n; ++j) {
            const auto jj = static_cast<Eigen::Index>(j);
            const double d = distance(ii, jj);
            if (!std::isfinite(d) || d < 0.0) throw InvalidInput("distances must be finite and non-negative");
            if (d != distance(jj, ii)) throw InvalidInput("distance matrix must be symmetric");
        }
    }
    if (big_m) {
        const double dmax = n > 0 ? distance.maxCoeff() : 0.0;
        if (!(*big_m > dmax) || *big_m < min_distance) {
            throw InvalidInput("big-M must exceed every distance and the minimum distance");
        }
    }
}

PlacementProblem PlacementProblem::build(std::vector<std::string> node_ids, std::vector<double> sigma,
                                         std::vector<int> cluster, const DistanceMatrix& distances,
                                         int n_es, int max_per_cluster, double min_distance) {
    PlacementProblem p;
    p.distance = distances.subset(node_ids).matrix();
    p.node_ids = std::move(node_ids);
    p.sigma_forecast = std::move(sigma);
    p.cluster = std::move(cluster);
    p.n_es = n_es;
    p.max_per_cluster = max_per_cluster;
    p.min_distance = min_distance;
    return p;
}

namespace {

bool close(double a, double b) { return std::abs(a - b) <= 1e-9 * std::max(1.0, std::abs(b)); }

class Search {
public:
    Search(const PlacementProblem& p, std::vector<std::size_t> rank_order, SolverStats& stats)
        : p_(p), order_(std::move(rank_order)), stats_(stats) {
        rank_.assign(p.size(), std::numeric_limits<std::size_t>::max());
        for (std::size_t r = 0; r < order_.size(); ++r) rank_[order_[r]] = r;
    }

    // Seeds the search with a known feasible set.
    void offer(const std::vector<std::size_t>& set) { consider(set); }

    bool found() const { return !best_.empty(); }
    const std::vector<std::size_t>& best() const { return best_; }
    double best_value() const { return best_value_; }

    void run() {
        chosen_.clear();
        counts_.clear();
        descend(0, 0.0);
    }

    double value_of(std::vector<std::size_t> set) const {
        std::sort(set.begin(), set.end(), [&](std::size_t a, std::size_t b) { return rank_[a] < rank_[b]; });
        double v = 0.0;
        for (auto i : set) v += p_.sigma_forecast[i];
        return v;
    }

private:
    bool compatible(std::size_t i) const {
        auto it = counts_.find(p_.cluster[i]);
        if (it != counts_.end() && it->second >= p_.max_per_cluster) return false;
        for (auto j : chosen_) {
            if (p_.distance(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) < p_.min_distance) {
                return false;
            }
        }
        return true;
    }

    std::vector<std::string> ids_of(const std::vector<std::size_t>& set) const {
        std::vector<std::string> ids;
        for (auto i : set) ids.push_back(p_.node_ids[i]);
        std::sort(ids.begin(), ids.end());
        return ids;
    }

    void consider(const std::vector<std::size_t>& set) {
        const double v = value_of(set);
        if (best_.empty() || v > best_value_ + 1e-9 * std::max(1.0, std::abs(best_value_)) ||
            (close(v, best_value_) && ids_of(set) < ids_of(best_))) {
            best_ = set;
            std::sort(best_.begin(), best_.end());
            best_value_ = v;
        }
    }

    // Sum of the `need` largest forecasts at or after `pos` that fit the current
    // partial selection; nullopt when fewer than `need` fit.
    std::optional<double> bound(std::size_t pos, std::size_t need) const {
        double sum = 0.0;
        std::size_t got = 0;
        for (std::size_t r = pos; r < order_.size() && got < need; ++r) {
            if (compatible(order_[r])) {
                sum += p_.sigma_forecast[order_[r]];
                ++got;
            }
        }
        if (got < need) return std::nullopt;
        return sum;
    }

    void descend(std::size_t pos, double value) {
        const auto need = static_cast<std::size_t>(p_.n_es) - chosen_.size();
        if (need == 0) {
            consider(chosen_);
            return;
        }
        for (std::size_t r = pos; r < order_.size(); ++r) {
            const auto b = bound(r, need);
            if (!b) break;
            if (!best_.empty()) {
                const double ub = value + *b;
                if (ub < best_value_ - 1e-9 * std::max(1.0, std::abs(best_value_))) {
                    ++stats_.prunes;
                    break;
                }
            }
            const auto i = order_[r];
            if (!compatible(i)) continue;
            ++stats_.nodes_explored;
            chosen_.push_back(i);
            ++counts_[p_.cluster[i]];
            descend(r + 1, value + p_.sigma_forecast[i]);
            --counts_[p_.cluster[i]];
            chosen_.pop_back();
        }
    }

    const PlacementProblem& p_;
    std::vector<std::size_t> order_;
    std::vector<std::size_t> rank_;
    SolverStats& stats_;
    std::vector<std::size_t> chosen_;
    std::map<int, int> counts_;
    std::vector<std::size_t> best_;
    double best_value_ = 0.0;
};

std::vector<std::size_t> rank_order(const PlacementProblem& p) {
    std::vector<std::size_t> order(p.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (p.sigma_forecast[a] != p.sigma_forecast[b]) return p.sigma_forecast[a] > p.sigma_forecast[b];
        return p.node_ids[a] < p.node_ids[b];
    });
    return order;
}

PlacementPlan solve_checked(const PlacementProblem& p, const PlacementOptions& options) {
    const auto order = rank_order(p);
    PlacementPlan plan;
    Search full(p, order, plan.stats);

    if (p.size() > options.prefilter_above) {
        std::map<int, std::size_t> cluster_sizes;
        for (int c : p.cluster) ++cluster_sizes[c];
        std::size_t largest = 0;
        for (const auto& [c, s] : cluster_sizes) largest = std::max(largest, s);
        for (std::size_t width = static_cast<std::size_t>(p.n_es);; width *= 2) {
            plan.stats.filter_width = width;
            std::map<int, std::size_t> taken;
            std::vector<std::size_t> kept;
            for (auto i : order) {
                if (taken[p.cluster[i]]++ < width) kept.push_back(i);
            }
            Search filtered(p, kept, plan.stats);
            filtered.run();
            if (filtered.found()) {
                full.offer(filtered.best());
                break;
            }
            if (width >= largest) break;
            ++plan.stats.widenings;
        }
    }
    full.run();
    if (!full.found()) {
        throw InfeasibleError("distance", fmt::format("no {} nodes are pairwise at least {} miles apart within "
                                                      "the per-cluster limit",
                                                      p.n_es, p.min_distance));
    }
    plan.indices = full.best();
    plan.objective = full.best_value();
    std::map<int, int> counts;
    plan.min_pair_distance = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < plan.indices.size(); ++a) {
        plan.selected.push_back(p.node_ids[plan.indices[a]]);
        ++counts[p.cluster[plan.indices[a]]];
        for (std::size_t b = a + 1; b < plan.indices.size(); ++b) {
            plan.min_pair_distance =
                std::min(plan.min_pair_distance, p.distance(static_cast<Eigen::Index>(plan.indices[a]),
                                                            static_cast<Eigen::Index>(plan.indices[b])));
        }
    }
    plan.cluster_counts.assign(counts.begin(), counts.end());
    return plan;
}

}  // namespace

PlacementPlan solve_placement(const PlacementProblem& problem, const PlacementOptions& options) {
    problem.validate();
    const auto n = problem.size();
    if (static_cast<std::size_t>(problem.n_es) > n) {
        throw InfeasibleError("cardinality", fmt::format("cannot place {} units on {} candidate nodes",
                                                         problem.n_es, n));
    }
    std::map<int, int> sizes;
    for (int c : problem.cluster) ++sizes[c];
    long capacity = 0;
    for (const auto& [c, s] : sizes) capacity += std::min(s, problem.max_per_cluster);
    if (problem.n_es > capacity) {
        throw InfeasibleError("cluster", fmt::format("{} clusters with at most {} unit(s) each hold only {} units",
                                                     sizes.size(), problem.max_per_cluster, capacity));
    }
    auto plan = solve_checked(problem, options);
    if (options.report_binding) {
        auto relaxed = problem;
        relaxed.max_per_cluster = problem.n_es;
        if (solve_checked(relaxed, options).objective > plan.objective + 1e-9 * std::max(1.0, std::abs(plan.objective))) {
            plan.binding.emplace_back("cluster");
        }
        relaxed = problem;
        relaxed.min_distance = 0.0;
        relaxed.big_m.reset();
        if (solve_checked(relaxed, options).objective > plan.objective + 1e-9 * std::max(1.0, std::abs(plan.objective))) {
            plan.binding.emplace_back("distance");
        }
    }
    return plan;
}

nlohmann::json PlacementPlan::to_json() const {
    nlohmann::json j;
    j["selected"] = selected;
    j["objective"] = objective;
    nlohmann::json counts = nlohmann::json::object();
    for (const auto& [c, k] : cluster_counts) counts[std::to_string(c)] = k;
    j["cluster_counts"] = counts;
    j["min_pair_distance_miles"] = std::isfinite(min_pair_distance) ? nlohmann::json(min_pair_distance) : nlohmann::json();
    j["binding_constraints"] = binding;
    j["solver"] = {{"nodes_explored", stats.nodes_explored},
                   {"prunes", stats.prunes},
                   {"filter_width", stats.filter_width},
                   {"filter_widenings", stats.widenings}};
    return j;
}

LinearizationReport verify_linearization(const PlacementProblem& problem, const std::vector<int>& assignment) {
    problem.validate();
    const auto n = problem.size();
    if (assignment.size() != n) throw InvalidInput("assignment must have one entry per node");
    for (int v : assignment) {
        if (v != 0 && v != 1) throw InvalidInput("assignment entries must be 0 or 1");
    }
    LinearizationReport r;
    const double big_m = problem.effective_big_m();
    const double floor = problem.min_distance;
    std::map<int, int> counts;
    int total = 0;
    for (std::size_t i = 0; i < n; ++i) {
        total += assignment[i];
        counts[problem.cluster[i]] += assignment[i];
    }
    r.count_ok = total == problem.n_es;
    for (const auto& [c, k] : counts) r.cluster_ok = r.cluster_ok && k <= problem.max_per_cluster;

    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double d = problem.distance(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
            const int di = assignment[i], dj = assignment[j];
            // Pairwise product form: only a selected pair is constrained.
            if (di * dj == 1 && d < floor) {
                r.bilinear_feasible = false;
                r.violating_pairs.emplace_back(i, j);
            }
            // Linear form: some binary pair variable must satisfy all three rows.
            bool exists = false;
            for (int dij = 0; dij <= 1 && !exists; ++dij) {
                exists = dij >= di + dj - 1 && dij <= di && dij <= dj &&
                         dij * d + (1 - dij) * big_m >= floor;
            }
            if (!exists) r.linear_feasible = false;
        }
    }
    return r;
}

}  // namespace bess
