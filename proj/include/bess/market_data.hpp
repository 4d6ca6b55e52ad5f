#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "bess/timeutil.hpp"

namespace bess {

// A commercial pricing node.
struct NodeRecord {
    std::string node_id;
    std::string display_name;
    double latitude = 0.0;   // degrees, [-90, 90]
    double longitude = 0.0;  // degrees, [-180, 180]
    std::string zone;

    bool operator==(const NodeRecord&) const = default;
};

struct HourlyLmpSeries {
    std::string node_id;
    std::vector<Hour> timestamps;  // strictly increasing
    std::vector<double> lmp;       // $/MWh, may be negative
};

struct RegulationPriceSeries {
    std::vector<Hour> timestamps;
    std::vector<double> rmccp;  // $/MW per hour
    std::vector<double> rmpcp;  // $/MW per hour
    std::vector<double> mileage_rega;
    std::vector<double> mileage_regd;
};

// Raw AGC signals sampled every two seconds from `start`.
struct RegSignalTrace {
    Seconds start;
    std::vector<double> rega;
    std::vector<double> regd;

    std::size_t size() const { return regd.size(); }
};

inline constexpr int kSamplesPerHour = 1800;
inline constexpr double kSampleHours = 2.0 / 3600.0;

struct HourlyRegAggregate {
    std::vector<Hour> timestamps;
    std::vector<double> regd_up;    // MWh per MW offered
    std::vector<double> regd_down;  // MWh per MW offered
    std::vector<double> mileage_regd;
    std::vector<double> mileage_rega;
    std::vector<double> beta;       // 0 on flagged hours
    std::vector<Hour> flagged;      // hours with zero RegA mileage

    std::size_t size() const { return timestamps.size(); }
};

enum class BetaSource { kPublishedMileage, kSignalTrace };

// Aligned hourly market data over a window of whole hours. Index h of every
// series refers to window().begin + h hours. Immutable once constructed.
class MarketDataset {
public:
    struct Series {
        std::vector<std::vector<double>> lmp;  // [node][hour]
        std::vector<double> rmccp;
        std::vector<double> rmpcp;
        std::vector<double> mileage_rega;
        std::vector<double> mileage_regd;
        std::vector<double> regd_up;
        std::vector<double> regd_down;
        std::vector<double> beta;
    };

    MarketDataset(std::vector<NodeRecord> nodes, HourWindow window, Series series,
                  std::vector<Hour> flagged_hours = {});

    const std::vector<NodeRecord>& nodes() const { return nodes_; }
    std::size_t node_count() const { return nodes_.size(); }
    const HourWindow& window() const { return window_; }
    std::size_t hours() const { return static_cast<std::size_t>(window_.hours()); }
    Hour timestamp(std::size_t h) const { return window_.begin + std::chrono::hours{h}; }

    // Throws ValidationError for an unknown id.
    std::size_t node_index(const std::string& node_id) const;
    std::optional<std::size_t> find_node(const std::string& node_id) const;

    std::span<const double> lmp(std::size_t node) const { return series_.lmp.at(node); }
    std::span<const double> rmccp() const { return series_.rmccp; }
    std::span<const double> rmpcp() const { return series_.rmpcp; }
    std::span<const double> mileage_rega() const { return series_.mileage_rega; }
    std::span<const double> mileage_regd() const { return series_.mileage_regd; }
    std::span<const double> regd_up() const { return series_.regd_up; }
    std::span<const double> regd_down() const { return series_.regd_down; }
    std::span<const double> beta() const { return series_.beta; }
    const std::vector<Hour>& flagged_hours() const { return flagged_; }

    // Calendar days fully inside the window (window must start at midnight UTC).
    std::vector<Date> days() const;
    // Hour index of 00:00 UTC on `day`; throws if the day is not fully covered.
    std::size_t day_offset(Date day) const;

    // Copy restricted to a sub-window.
    MarketDataset slice(HourWindow window) const;

    bool operator==(const MarketDataset& other) const;

private:
    std::vector<NodeRecord> nodes_;
    std::unordered_map<std::string, std::size_t> index_;
    HourWindow window_;
    Series series_;
    std::vector<Hour> flagged_;
};

// ---- parsing and validation ----

std::vector<NodeRecord> load_registry(const std::string& path);
void validate_registry(const std::vector<NodeRecord>& nodes);

// Rows may appear in any order; each node's series is returned sorted.
std::vector<HourlyLmpSeries> load_lmp(const std::string& path);
RegulationPriceSeries load_regulation_prices(const std::string& path);
RegSignalTrace load_signal(const std::string& path);
HourlyRegAggregate load_reg_aggregate(const std::string& path);

// ---- regulation signal processing ----

// Total absolute movement: sum over consecutive samples of |s_i - s_{i-1}|.
double compute_mileage(std::span<const double> trace);

// Hourly RegD up/down energy fractions, mileages and mileage ratio from a 2-second
// trace covering whole hours. The first sample of each hour is differenced against
// the last sample of the previous hour when one exists, so hourly mileages sum to
// the mileage of the whole trace.
HourlyRegAggregate aggregate_regd_hourly(const RegSignalTrace& trace);

// ---- assembly ----

struct BuildOptions {
    HourWindow window;
    // Fill isolated single missing hours by linear interpolation instead of failing.
    bool fill_single_gaps = false;
    BetaSource beta_source = BetaSource::kPublishedMileage;
};

// Aligns all series to the window. Raises ValidationError naming the node and the
// missing hours when any series has a gap.
MarketDataset assemble_dataset(std::vector<NodeRecord> nodes,
                               const std::vector<HourlyLmpSeries>& lmp,
                               const RegulationPriceSeries& prices,
                               const HourlyRegAggregate& regulation, const BuildOptions& options);

struct DatasetFiles {
    std::string registry;
    std::vector<std::string> lmp;
    std::string regulation_prices;
    std::string signal;              // raw 2-second trace, or
    std::string regulation_hourly;   // pre-aggregated hourly RegD data
};

MarketDataset build_dataset(const DatasetFiles& files, const BuildOptions& options);

// Writes registry.csv, lmp.csv, regulation_prices.csv and regulation_hourly.csv
// into `dir` and returns the matching file set.
DatasetFiles write_dataset(const MarketDataset& dataset, const std::string& dir);

void write_signal(const RegSignalTrace& trace, const std::string& path);
void write_reg_aggregate(const HourlyRegAggregate& agg, const std::string& path);

// ---- synthetic data ----

// Congestion volatility per node as piecewise-linear knots over day index.
// A single knot gives a constant sigma.
struct VolatilityKnot {
    int day = 0;
    double sigma = 0.0;
};

struct VolatilityProfile {
    std::vector<std::vector<VolatilityKnot>> nodes;

    static VolatilityProfile constant(std::vector<double> sigmas);
    double sigma(std::size_t node, int day) const;
};

struct SyntheticOptions {
    std::uint64_t seed = 1;
    std::size_t node_count = 10;
    int days = 30;
    Date start = Date{std::chrono::year{2018} / 1 / 1};
    VolatilityProfile profile;             // empty: sigma drawn per node in [2, 40]
    std::vector<NodeRecord> nodes;         // empty: generated registry
    bool keep_trace = false;
};

struct SyntheticData {
    MarketDataset dataset;
    std::vector<double> system_price;  // common energy component of every node's LMP
    std::optional<RegSignalTrace> trace;
};

SyntheticData generate_synthetic(const SyntheticOptions& options);
MarketDataset generate_synthetic_dataset(std::uint64_t seed, std::size_t node_count, int days,
                                         const VolatilityProfile& profile);

}  // namespace bess
