#include "bess/geo.hpp"

#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "bess/errors.hpp"

namespace bess {

double haversine_miles(LatLon a, LatLon b) {
    for (const auto& p : {a, b}) {
        if (!(p.lat >= -90.0 && p.lat <= 90.0) || !(p.lon >= -180.0 && p.lon <= 180.0)) {
            throw InvalidInput(fmt::format("coordinate ({}, {}) out of range", p.lat, p.lon));
        }
    }
    constexpr double rad = std::numbers::pi / 180.0;
    const double dlat = (b.lat - a.lat) * rad;
    const double dlon = (b.lon - a.lon) * rad;
    const double s1 = std::sin(dlat / 2.0);
    const double s2 = std::sin(dlon / 2.0);
    double h = s1 * s1 + std::cos(a.lat * rad) * std::cos(b.lat * rad) * s2 * s2;
    h = std::min(1.0, std::max(0.0, h));
    return 2.0 * kEarthRadiusMiles * std::asin(std::sqrt(h));
}

DistanceMatrix::DistanceMatrix(std::vector<std::string> ids, Eigen::MatrixXd miles)
    : ids_(std::move(ids)), miles_(std::move(miles)) {
    const auto n = static_cast<Eigen::Index>(ids_.size());
    if (miles_.rows() != n || miles_.cols() != n) {
        throw InvalidInput("distance matrix shape does not match node list");
    }
    for (std::size_t i = 0; i < ids_.size(); ++i) {
        if (!index_.emplace(ids_[i], i).second) {
            throw InvalidInput(fmt::format("duplicate node '{}' in distance matrix", ids_[i]));
        }
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        if (miles_(i, i) != 0.0) throw InvalidInput("distance matrix diagonal must be zero");
        for (Eigen::Index j = 0; j < n; ++j) {
            const double d = miles_(i, j);
            if (!std::isfinite(d) || d < 0.0) {
                throw InvalidInput("distances must be finite and non-negative");
            }
            if (d != miles_(j, i)) throw InvalidInput("distance matrix must be symmetric");
        }
    }
}

DistanceMatrix DistanceMatrix::from_registry(const std::vector<NodeRecord>& nodes, double factor) {
    if (!(factor > 0.0)) throw InvalidInput("distance factor must be positive");
    const auto n = static_cast<Eigen::Index>(nodes.size());
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
    std::vector<std::string> ids;
    for (Eigen::Index i = 0; i < n; ++i) {
        ids.push_back(nodes[i].node_id);
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double d = factor * haversine_miles({nodes[i].latitude, nodes[i].longitude},
                                                      {nodes[j].latitude, nodes[j].longitude});
            m(i, j) = d;
            m(j, i) = d;
        }
    }
    return DistanceMatrix(std::move(ids), std::move(m));
}

std::optional<std::size_t> DistanceMatrix::find(const std::string& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

double DistanceMatrix::between(const std::string& a, const std::string& b) const {
    const auto i = find(a), j = find(b);
    if (!i || !j) {
        throw InvalidInput(fmt::format("no distance between '{}' and '{}'", a, b));
    }
    return miles_(static_cast<Eigen::Index>(*i), static_cast<Eigen::Index>(*j));
}

DistanceMatrix DistanceMatrix::subset(const std::vector<std::string>& ids) const {
    std::vector<Eigen::Index> idx;
    for (const auto& id : ids) {
        auto i = find(id);
        if (!i) throw InvalidInput(fmt::format("node '{}' missing from distance matrix", id));
        idx.push_back(static_cast<Eigen::Index>(*i));
    }
    const auto n = static_cast<Eigen::Index>(idx.size());
    Eigen::MatrixXd m(n, n);
    for (Eigen::Index a = 0; a < n; ++a) {
        for (Eigen::Index b = 0; b < n; ++b) m(a, b) = miles_(idx[a], idx[b]);
    }
    return DistanceMatrix(ids, std::move(m));
}

}  // namespace bess
