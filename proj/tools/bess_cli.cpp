#include <cstdlib>
#include <optional>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "bess/config.hpp"
#include "bess/errors.hpp"
#include "bess/pipeline.hpp"

namespace {

struct CommonOptions {
    std::string config;
    std::vector<std::string> overrides;
    std::string data;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> workers;
    bool quiet = false;
};

bess::Invocation make_invocation(const CommonOptions& o) {
    bess::ConfigLoader loader;
    if (!o.config.empty()) loader.merge_file(o.config);
    for (const auto& s : o.overrides) loader.set(s);
    if (!o.data.empty()) loader.set("data.dir", o.data);
    if (!o.out.empty()) loader.set("output.dir", o.out);
    if (o.seed) loader.set("seed", std::to_string(*o.seed));
    if (o.workers) loader.set("workers", std::to_string(*o.workers));
    return {loader.resolve(), loader.snapshot()};
}

std::vector<bess::Date> parse_months(const std::vector<std::string>& items) {
    std::vector<bess::Date> out;
    for (const auto& item : items) {
        std::size_t pos = 0;
        while (pos <= item.size()) {
            const auto comma = item.find(',', pos);
            const auto part = item.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
            if (!part.empty()) out.push_back(bess::parse_month(part));
            if (comma == std::string::npos) break;
            pos = comma + 1;
        }
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    spdlog::set_default_logger(spdlog::stderr_color_mt("bess"));
    spdlog::set_pattern("[%l] %v");

    CLI::App app{"Battery storage revenue analysis and placement"};
    app.require_subcommand(1);
    CommonOptions common;
    app.add_option("-c,--config", common.config, "YAML configuration file")->check(CLI::ExistingFile);
    app.add_option("--set", common.overrides, "Override a config key, e.g. dispatch.soc_step=0.25");
    app.add_option("--data", common.data, "Dataset directory (default: $BESS_DATA_ROOT or data/synthetic)");
    app.add_option("-o,--out", common.out, "Output directory");
    app.add_option("--seed", common.seed, "Random seed");
    app.add_option("-j,--workers", common.workers, "Worker threads for the sweep (0: all CPUs)");
    app.add_flag("-q,--quiet", common.quiet, "Only log warnings and errors");

    std::string month;
    std::vector<std::string> months;
    auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset into the output directory");
    auto* ingest = app.add_subcommand("ingest", "Validate and align raw market files into a dataset");
    auto* sweep = app.add_subcommand("sweep", "Dispatch every node-day and write the revenue ledger");
    auto* report = app.add_subcommand("report", "Revenue percentiles, deployment plans and node comparison");
    auto* forecast = app.add_subcommand("forecast", "Forecast next-month LMP volatility per node");
    forecast->add_option("--month", month, "Last observed month (YYYY-MM)")->required();
    auto* cluster = app.add_subcommand("cluster", "Cluster nodes by daily volatility in a month");
    cluster->add_option("--month", month, "Month to cluster (YYYY-MM)")->required();
    auto* place = app.add_subcommand("place", "Choose placement nodes for the month after --month");
    place->add_option("--month", month, "Last observed month (YYYY-MM)")->required();
    auto* backtest = app.add_subcommand("backtest", "Compare base-case and proposed placements");
    backtest->add_option("--months", months, "Evaluated months (YYYY-MM, comma separated)")->required();

    CLI11_PARSE(app, argc, argv);
    if (common.quiet) spdlog::set_level(spdlog::level::warn);

    try {
        const auto inv = make_invocation(common);
        if (*synth) return bess::cmd_synth(inv);
        if (*ingest) return bess::cmd_ingest(inv);
        if (*sweep) return bess::cmd_sweep(inv);
        if (*report) return bess::cmd_report(inv);
        if (*forecast) return bess::cmd_forecast(inv, bess::parse_month(month));
        if (*cluster) return bess::cmd_cluster(inv, bess::parse_month(month));
        if (*place) return bess::cmd_place(inv, bess::parse_month(month));
        if (*backtest) return bess::cmd_backtest(inv, parse_months(months));
    } catch (const bess::InfeasibleError& e) {
        spdlog::error("infeasible ({}): {}", e.constraint(), e.what());
        return bess::kExitValidation;
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
        return bess::kExitValidation;
    }
    return bess::kExitValidation;
}
