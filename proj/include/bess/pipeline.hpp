#pragma once

#include <string>
#include <vector>

#include "bess/cluster.hpp"
#include "bess/config.hpp"
#include "bess/forecast.hpp"
#include "bess/geo.hpp"
#include "bess/placement.hpp"
#include "bess/revenue.hpp"

namespace bess {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitPartialSweep = 2;

// Resolved configuration plus the YAML snapshot written next to every output.
struct Invocation {
    RunConfig config;
    std::string snapshot;
};

// Finds registry, lmp, regulation price and regulation hourly (or signal) files
// in `dir`, accepting a .gz suffix on any of them.
DatasetFiles locate_dataset(const std::string& dir);

// Loads the dataset in `config.data_dir`, restricted to the configured window.
MarketDataset load_dataset(const RunConfig& config);

DistanceMatrix node_distances(const RunConfig& config, const MarketDataset& data);

// Days of the dataset that fall inside the configured window.
std::vector<Date> analysis_days(const RunConfig& config, const MarketDataset& data);

DispatchSchedule solve_node_day(const MarketDataset& data, std::size_t node, Date day, const RunConfig& config);

struct SweepFailure {
    std::string node_id;
    Date date;
    std::string message;
};

struct SweepResult {
    RevenueLedger ledger;
    std::size_t computed = 0;
    std::size_t skipped = 0;
    std::vector<SweepFailure> failures;
};

// Dispatches every node-day in parallel. Completed rows are appended in task
// order to `manifest` and rows already present there are not recomputed.
SweepResult run_sweep(const MarketDataset& data, const RunConfig& config, const std::string& manifest);

struct PlacementRun {
    Date month;  // month the units are placed for
    std::vector<NodeForecast> forecasts;
    ClusterModel clusters;
    PlacementProblem problem;
    PlacementPlan plan;
};

// Forecast from months up to `last_month`, cluster on `last_month`, then place.
PlacementRun propose_placement(const MarketDataset& data, Date last_month, const RunConfig& config);

struct BacktestRow {
    Date month;
    std::vector<std::string> base_nodes;
    double base_revenue = 0.0;
    std::vector<std::string> proposed_nodes;
    double proposed_revenue = 0.0;
};

// For each evaluated month M: base case from the ledger of M-1, proposal from
// data up to M-1, both scored on the ledger of M.
std::vector<BacktestRow> run_backtest(const MarketDataset& data, const RevenueLedger& ledger,
                                      const std::vector<Date>& months, const RunConfig& config);

// Revenue of `nodes` summed over every day of `month` in the ledger. Throws
// ValidationError if a node-day is missing.
double realized_revenue(const RevenueLedger& ledger, const std::vector<std::string>& nodes, Date month);

void write_backtest_csv(const std::vector<BacktestRow>& rows, const std::string& path);

// Subcommands. Each writes under config.out_dir and returns an exit code;
// validation problems are thrown and mapped to exit codes by the caller.
int cmd_synth(const Invocation& inv);
int cmd_ingest(const Invocation& inv);
int cmd_sweep(const Invocation& inv);
int cmd_report(const Invocation& inv);
int cmd_forecast(const Invocation& inv, Date last_month);
int cmd_cluster(const Invocation& inv, Date month);
int cmd_place(const Invocation& inv, Date last_month);
int cmd_backtest(const Invocation& inv, const std::vector<Date>& months);

}  // namespace bess
