#include "bess/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <random>

#include <Eigen/Eigenvalues>
#include <fmt/format.h>

#include "bess/csv.hpp"
#include "bess/errors.hpp"
#include "bess/numeric.hpp"

namespace bess {

FeatureMatrix normalize_features(std::vector<std::string> node_ids, Eigen::MatrixXd raw) {
    if (static_cast<Eigen::Index>(node_ids.size()) != raw.rows()) {
        throw InvalidInput("feature rows do not match node ids");
    }
    if (!raw.allFinite()) throw InvalidInput("feature matrix has missing or non-finite entries");
    FeatureMatrix f;
    f.node_ids = std::move(node_ids);
    const auto n = raw.rows(), d = raw.cols();
    f.mean = Eigen::RowVectorXd::Zero(d);
    f.scale = Eigen::RowVectorXd::Ones(d);
    f.features = Eigen::MatrixXd::Zero(n, d);
    for (Eigen::Index j = 0; j < d; ++j) {
        std::vector<double> col(raw.col(j).data(), raw.col(j).data() + n);
        f.mean(j) = mean(col);
        const double s = sample_stddev(col);
        if (s > 0.0) f.scale(j) = s;
        for (Eigen::Index i = 0; i < n; ++i) {
            f.features(i, j) = s > 0.0 ? (raw(i, j) - f.mean(j)) / s : 0.0;
        }
    }
    f.raw = std::move(raw);
    return f;
}

FeatureMatrix build_features(const MarketDataset& data, Date month) {
    const Date first = month_start(month);
    const Hour begin = start_of(first), end = start_of(next_month(first));
    if (!data.window().contains(begin) || end > data.window().end) {
        throw ValidationError(fmt::format("dataset does not cover every day of {}", format_month(first)));
    }
    const auto offset = static_cast<std::size_t>((begin - data.window().begin).count());
    const int days = days_in_month(first);
    Eigen::MatrixXd raw(static_cast<Eigen::Index>(data.node_count()), days);
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < data.node_count(); ++i) {
        ids.push_back(data.nodes()[i].node_id);
        const auto lmp = data.lmp(i);
        for (int d = 0; d < days; ++d) {
            raw(static_cast<Eigen::Index>(i), d) =
                sample_stddev(lmp.subspan(offset + static_cast<std::size_t>(d) * 24, 24));
        }
    }
    return normalize_features(std::move(ids), std::move(raw));
}

PcaResult pca_reduce(const Eigen::MatrixXd& x, double min_explained) {
    if (x.rows() < 2) throw InvalidInput("PCA needs at least two rows");
    if (x.cols() < 1) throw InvalidInput("PCA needs at least one column");
    if (!(min_explained > 0.0 && min_explained <= 1.0)) {
        throw InvalidInput("min_explained must be in (0, 1]");
    }
    PcaResult r;
    r.center = x.colwise().mean();
    const Eigen::MatrixXd centered = x.rowwise() - r.center;
    const Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(x.rows() - 1);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
    if (eig.info() != Eigen::Success) throw Error("covariance eigendecomposition failed");
    const auto d = x.cols();
    r.eigenvalues.resize(d);
    Eigen::MatrixXd vectors(d, d);
    for (Eigen::Index k = 0; k < d; ++k) {
        r.eigenvalues(k) = std::max(0.0, eig.eigenvalues()(d - 1 - k));
        vectors.col(k) = eig.eigenvectors().col(d - 1 - k);
    }
    const double total = r.eigenvalues.sum();
    if (!(total > 0.0)) {
        r.degenerate = true;
        r.basis = Eigen::MatrixXd::Zero(d, 1);
        r.scores = Eigen::MatrixXd::Zero(x.rows(), 1);
        r.explained = 0.0;
        return r;
    }
    Eigen::Index keep = 0;
    double cumulative = 0.0;
    while (keep < d) {
        cumulative += r.eigenvalues(keep);
        ++keep;
        if (cumulative / total >= min_explained - 1e-12) break;
    }
    r.explained = std::min(1.0, cumulative / total);
    r.basis = vectors.leftCols(keep);
    for (Eigen::Index k = 0; k < keep; ++k) {
        Eigen::Index at = 0;
        r.basis.col(k).cwiseAbs().maxCoeff(&at);
        if (r.basis(at, k) < 0.0) r.basis.col(k) *= -1.0;
    }
    r.scores = centered * r.basis;
    return r;
}

double inertia(const Eigen::MatrixXd& points, const std::vector<int>& labels,
               const Eigen::MatrixXd& centroids) {
    CompensatedSum s;
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
        s.add((points.row(i) - centroids.row(labels[static_cast<std::size_t>(i)])).squaredNorm());
    }
    return s.value();
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

void fix_empty_clusters(const Eigen::MatrixXd& points, const Eigen::MatrixXd& centroids,
                        std::vector<int>& labels) {
    const auto k = centroids.rows();
    std::vector<int> count(static_cast<std::size_t>(k), 0);
    for (int l : labels) ++count[static_cast<std::size_t>(l)];
    for (Eigen::Index c = 0; c < k; ++c) {
        if (count[static_cast<std::size_t>(c)] > 0) continue;
        Eigen::Index far = -1;
        double far_d = -1.0;
        for (Eigen::Index i = 0; i < points.rows(); ++i) {
            const int l = labels[static_cast<std::size_t>(i)];
            if (count[static_cast<std::size_t>(l)] < 2) continue;
            const double d = (points.row(i) - centroids.row(l)).squaredNorm();
            if (d > far_d) {
                far_d = d;
                far = i;
            }
        }
        if (far < 0) throw Error("cannot re-seed an empty cluster");
        --count[static_cast<std::size_t>(labels[static_cast<std::size_t>(far)])];
        labels[static_cast<std::size_t>(far)] = static_cast<int>(c);
        ++count[static_cast<std::size_t>(c)];
    }
}

Eigen::MatrixXd cluster_means(const Eigen::MatrixXd& points, const std::vector<int>& labels, Eigen::Index k) {
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, points.cols());
    Eigen::VectorXd count = Eigen::VectorXd::Zero(k);
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
        sums.row(labels[static_cast<std::size_t>(i)]) += points.row(i);
        count(labels[static_cast<std::size_t>(i)]) += 1.0;
    }
    for (Eigen::Index c = 0; c < k; ++c) sums.row(c) /= count(c);
    return sums;
}

// A point changes cluster only for a strictly closer centroid.
std::vector<int> reassign(const Eigen::MatrixXd& points, const Eigen::MatrixXd& centroids,
                          const std::vector<int>& current) {
    std::vector<int> out(current);
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
        const auto ui = static_cast<std::size_t>(i);
        int best = out[ui];
        double best_d = best >= 0 ? (points.row(i) - centroids.row(best)).squaredNorm()
                                  : std::numeric_limits<double>::infinity();
        for (Eigen::Index c = 0; c < centroids.rows(); ++c) {
            const double d = (points.row(i) - centroids.row(c)).squaredNorm();
            if (d < best_d) {
                best_d = d;
                best = static_cast<int>(c);
            }
        }
        out[ui] = best;
    }
    return out;
}

}  // namespace

KMeansRun lloyd(const Eigen::MatrixXd& points, Eigen::MatrixXd centroids, int max_iterations) {
    const auto k = centroids.rows();
    if (k < 1 || k > points.rows()) throw InvalidInput("k must be between 1 and the point count");
    if (centroids.cols() != points.cols()) throw InvalidInput("centroid dimension mismatch");
    KMeansRun run;
    run.labels = reassign(points, centroids, std::vector<int>(static_cast<std::size_t>(points.rows()), -1));
    for (int it = 0; it < max_iterations; ++it) {
        fix_empty_clusters(points, centroids, run.labels);
        centroids = cluster_means(points, run.labels, k);
        run.history.push_back(inertia(points, run.labels, centroids));
        ++run.iterations;
        auto next = reassign(points, centroids, run.labels);
        if (next == run.labels) {
            run.converged = true;
            break;
        }
        run.labels = std::move(next);
    }
    if (!run.converged) {
        fix_empty_clusters(points, centroids, run.labels);
        centroids = cluster_means(points, run.labels, k);
        run.history.push_back(inertia(points, run.labels, centroids));
    }
    run.centroids = std::move(centroids);
    run.inertia = run.history.back();
    return run;
}

Eigen::MatrixXd kmeans_plus_plus(const Eigen::MatrixXd& points, int k, std::uint64_t seed) {
    const auto n = points.rows();
    if (k < 1 || k > n) throw InvalidInput("k must be between 1 and the point count");
    std::mt19937_64 rng(seed);
    std::vector<Eigen::Index> chosen{static_cast<Eigen::Index>(rng() % static_cast<std::uint64_t>(n))};
    Eigen::VectorXd d2(n);
    for (Eigen::Index i = 0; i < n; ++i) d2(i) = (points.row(i) - points.row(chosen[0])).squaredNorm();
    while (static_cast<int>(chosen.size()) < k) {
        const double total = d2.sum();
        Eigen::Index pick = -1;
        if (total > 0.0) {
            const double target = uniform01(rng) * total;
            double acc = 0.0;
            for (Eigen::Index i = 0; i < n; ++i) {
                acc += d2(i);
                if (d2(i) > 0.0 && acc > target) {
                    pick = i;
                    break;
                }
            }
            if (pick < 0) {
                for (Eigen::Index i = n; i-- > 0;) {
                    if (d2(i) > 0.0) {
                        pick = i;
                        break;
                    }
                }
            }
        } else {
            // Only duplicates remain: take any index not chosen yet.
            std::vector<Eigen::Index> rest;
            for (Eigen::Index i = 0; i < n; ++i) {
                if (std::find(chosen.begin(), chosen.end(), i) == chosen.end()) rest.push_back(i);
            }
            pick = rest[rng() % rest.size()];
        }
        chosen.push_back(pick);
        for (Eigen::Index i = 0; i < n; ++i) {
            d2(i) = std::min(d2(i), (points.row(i) - points.row(pick)).squaredNorm());
        }
    }
    Eigen::MatrixXd c(k, points.cols());
    for (int j = 0; j < k; ++j) c.row(j) = points.row(chosen[static_cast<std::size_t>(j)]);
    return c;
}

ClusterModel kmeans(const Eigen::MatrixXd& points, int k, std::uint64_t seed, const KMeansOptions& options) {
    const auto n = points.rows();
    if (k < 1 || k > n) throw InvalidInput(fmt::format("k = {} must be between 1 and {}", k, n));
    if (options.restarts < 1) throw InvalidInput("k-means needs at least one restart");
    if (!points.allFinite()) throw InvalidInput("k-means input has non-finite values");

    // Work on rows in lexicographic order so the result does not depend on the
    // order in which nodes were supplied.
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
        for (Eigen::Index j = 0; j < points.cols(); ++j) {
            if (points(a, j) != points(b, j)) return points(a, j) < points(b, j);
        }
        return false;
    });
    Eigen::MatrixXd sorted(n, points.cols());
    for (Eigen::Index i = 0; i < n; ++i) sorted.row(i) = points.row(order[static_cast<std::size_t>(i)]);

    ClusterModel model;
    model.k = k;
    model.seed = seed;
    model.restarts = options.restarts;
    KMeansRun best;
    bool have = false;
    for (int r = 0; r < options.restarts; ++r) {
        const std::uint64_t run_seed = splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(r)));
        auto run = lloyd(sorted, kmeans_plus_plus(sorted, k, run_seed), options.max_iterations);
        model.restart_inertia.push_back(run.inertia);
        if (!have || run.inertia < best.inertia) {
            best = std::move(run);
            have = true;
        }
    }
    // Undo the sort and renumber clusters by first appearance.
    std::vector<int> labels(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        labels[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] = best.labels[static_cast<std::size_t>(i)];
    }
    std::map<int, int> rename;
    for (int l : labels) rename.emplace(l, static_cast<int>(rename.size()));
    model.labels.resize(labels.size());
    model.centroids.resize(k, points.cols());
    for (std::size_t i = 0; i < labels.size(); ++i) model.labels[i] = rename.at(labels[i]);
    for (const auto& [old, now] : rename) model.centroids.row(now) = best.centroids.row(old);
    model.inertia = inertia(points, model.labels, model.centroids);
    model.history = best.history;
    return model;
}

ElbowResult elbow_select(const Eigen::MatrixXd& points, int k_min, int k_max, std::uint64_t seed,
                         const KMeansOptions& options) {
    const int n = static_cast<int>(points.rows());
    if (k_min < 1 || k_max < k_min || k_max > n) {
        throw InvalidInput(fmt::format("K range [{}, {}] invalid for {} points", k_min, k_max, n));
    }
    ElbowResult r;
    std::map<int, double> inert;
    auto get = [&](int k) {
        if (k > n) return 0.0;
        auto it = inert.find(k);
        if (it != inert.end()) return it->second;
        const double v = kmeans(points, k, seed, options).inertia;
        inert[k] = v;
        return v;
    };
    for (int k = k_min; k <= k_max; ++k) {
        r.range.push_back(k);
        r.inertia.push_back(get(k));
    }
    if (k_min == k_max) {
        r.k = k_min;
        return r;
    }
    double best = -std::numeric_limits<double>::infinity();
    for (int k = k_min; k <= k_max; ++k) {
        // K = 1 has no left neighbour; its curvature is scored as I(2) - I(1).
        const double left = k > 1 ? get(k - 1) : get(k);
        const double curvature = left - 2.0 * get(k) + get(k + 1);
        if (curvature > best) {
            best = curvature;
            r.k = k;
        }
    }
    return r;
}

nlohmann::json ClusterModel::metadata() const {
    nlohmann::json j;
    j["k"] = k;
    j["inertia"] = inertia;
    j["explained_variance"] = explained_variance;
    j["pca_components"] = pca_basis.cols();
    j["seed"] = seed;
    j["restarts"] = restarts;
    j["restart_inertia"] = restart_inertia;
    j["elbow_range"] = elbow_range;
    j["elbow_inertia"] = elbow_inertia;
    return j;
}

ClusterModel cluster_nodes(const MarketDataset& data, Date month, const ClusterOptions& options) {
    const auto features = build_features(data, month);
    const int n = static_cast<int>(data.node_count());
    Eigen::MatrixXd points;
    Eigen::MatrixXd basis;
    double explained = 1.0;
    if (n >= 2) {
        const auto pca = pca_reduce(features.features, options.min_explained);
        points = pca.scores;
        basis = pca.basis;
        explained = pca.explained;
    } else {
        points = features.features;
    }
    const int k_max = std::min(options.k_max, n);
    const int k_min = std::min(options.k_min, k_max);
    const auto elbow = elbow_select(points, k_min, k_max, options.seed, options.kmeans);
    auto model = kmeans(points, elbow.k, options.seed, options.kmeans);
    model.node_ids = features.node_ids;
    model.pca_basis = basis;
    model.explained_variance = explained;
    model.elbow_range = elbow.range;
    model.elbow_inertia = elbow.inertia;
    return model;
}

void write_cluster_csv(const ClusterModel& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path);
    out << "node_id,cluster\n";
    for (std::size_t i = 0; i < model.node_ids.size(); ++i) {
        out << csv::escape(model.node_ids[i]) << ',' << model.labels[i] << '\n';
    }
    if (!out) throw Error("failed writing " + path);
}

}  // namespace bess
