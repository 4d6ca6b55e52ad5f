#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "bess/bess_model.hpp"
#include "bess/cluster.hpp"
#include "bess/dispatch.hpp"
#include "bess/forecast.hpp"
#include "bess/market_data.hpp"
#include "bess/revenue.hpp"

namespace bess {

struct SynthSettings {
    std::size_t nodes = 10;
    int days = 90;
    Date start = Date{std::chrono::year{2018} / 1 / 1};
    // When positive, each node's volatility follows a random walk with a knot
    // every `drift_days` days instead of staying constant.
    int drift_days = 0;
};

struct RunConfig {
    // Dataset directory with registry.csv, lmp.csv, regulation_prices.csv and
    // regulation_hourly.csv or signal.csv (each optionally gzip-compressed).
    std::string data_dir;
    // Raw inputs for `ingest`.
    DatasetFiles raw;
    bool fill_single_gaps = false;
    BetaSource beta_source = BetaSource::kPublishedMileage;

    std::string out_dir = "out";

    BessSpec bess;
    DispatchMode mode = DispatchMode::kJoint;
    DispatchGrid grid;

    std::optional<Date> window_start;  // inclusive
    std::optional<Date> window_end;    // inclusive

    int n_es = 5;
    int max_per_cluster = 1;
    double min_distance = 50.0;   // miles
    double road_factor = 1.0;     // multiplies great-circle distances
    std::optional<double> big_m;

    RelocationCostModel relocation;
    std::optional<ArimaOrders> arima_orders;
    bool allow_partial_months = false;
    ClusterOptions cluster;
    SynthSettings synth;

    std::uint64_t seed = 1;
    unsigned workers = 0;  // 0: one per logical CPU

    unsigned effective_workers() const;
};

// Layered configuration: built-in defaults, then an optional YAML file, then
// `key.path=value` overrides. Unknown keys and bad values raise ValidationError.
class ConfigLoader {
public:
    ConfigLoader();

    void merge_file(const std::string& path);
    void merge_text(const std::string& yaml);
    void set(const std::string& assignment);  // "dispatch.soc_step=0.25"
    void set(const std::string& key, const std::string& value);

    RunConfig resolve() const;
    // Fully resolved tree as YAML.
    std::string snapshot() const;

private:
    struct Impl;
    std::shared_ptr<Impl> impl_;
};

RunConfig default_config();

}  // namespace bess
