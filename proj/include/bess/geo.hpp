#pragma once

#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

#include "bess/market_data.hpp"

namespace bess {

inline constexpr double kEarthRadiusMiles = 3958.8;

struct LatLon {
    double lat = 0.0;  // degrees
    double lon = 0.0;  // degrees
};

// Great-circle distance in miles. Throws InvalidInput for out-of-range coordinates.
double haversine_miles(LatLon a, LatLon b);

// Symmetric pairwise distances between named nodes, in miles.
class DistanceMatrix {
public:
    DistanceMatrix() = default;
    DistanceMatrix(std::vector<std::string> ids, Eigen::MatrixXd miles);

    // Haversine distances scaled by `factor` (1.2 approximates road travel).
    static DistanceMatrix from_registry(const std::vector<NodeRecord>& nodes, double factor = 1.0);

    const std::vector<std::string>& ids() const { return ids_; }
    std::size_t size() const { return ids_.size(); }
    const Eigen::MatrixXd& matrix() const { return miles_; }
    double operator()(std::size_t i, std::size_t j) const { return miles_(i, j); }

    std::optional<std::size_t> find(const std::string& id) const;
    // Throws InvalidInput when either id is unknown.
    double between(const std::string& a, const std::string& b) const;

    // Restriction to `ids`, in that order.
    DistanceMatrix subset(const std::vector<std::string>& ids) const;

private:
    std::vector<std::string> ids_;
    Eigen::MatrixXd miles_;
    std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace bess
