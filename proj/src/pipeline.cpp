#include "bess/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <random>
#include <sstream>
#include <thread>
#include <variant>

#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "bess/csv.hpp"
#include "bess/errors.hpp"
#include "bess/numeric.hpp"

namespace bess {
namespace fs = std::filesystem;

namespace {

std::optional<std::string> find_file(const std::string& dir, const std::string& name) {
    for (const auto& candidate : {name, name + ".gz"}) {
        const auto path = fs::path(dir) / candidate;
        if (fs::exists(path)) return path.string();
    }
    return std::nullopt;
}

void write_text_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << text;
    if (!out) throw Error("failed writing " + path.string());
}

void write_json(const fs::path& path, const nlohmann::json& j) { write_text_file(path, j.dump(2) + "\n"); }

fs::path prepare_output(const Invocation& inv, const std::string& command) {
    const fs::path out(inv.config.out_dir);
    fs::create_directories(out);
    write_text_file(out / (command + ".config.yaml"), inv.snapshot);
    return out;
}

Date previous_month(Date month) {
    const auto first = month_start(month);
    return month_start(Date{std::chrono::sys_days{first} - std::chrono::days{1}});
}

Date last_day(Date month) {
    return Date{std::chrono::sys_days{next_month(month_start(month))} - std::chrono::days{1}};
}

std::string join(const std::vector<std::string>& items, char sep) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i) out += sep;
        out += items[i];
    }
    return out;
}

HourWindow window_from_prices(const std::string& path) {
    const auto prices = load_regulation_prices(path);
    if (prices.timestamps.empty()) throw ValidationError("regulation price file has no rows: " + path);
    const auto [lo, hi] = std::minmax_element(prices.timestamps.begin(), prices.timestamps.end());
    return HourWindow{*lo, *hi + std::chrono::hours{1}};
}

// Drops a trailing line that was cut off mid-write.
void repair_manifest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::string text((std::istreambuf_iterator<char>(in)), {});
    in.close();
    if (text.empty() || text.back() == '\n') return;
    const auto cut = text.rfind('\n');
    text.resize(cut == std::string::npos ? 0 : cut + 1);
    spdlog::warn("dropping an incomplete last line from {}", path);
    write_text_file(path, text);
}

// Linear-interpolation quantile of sorted data.
double quantile(const std::vector<double>& sorted, double q) {
    if (sorted.empty()) return 0.0;
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(pos);
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

VolatilityProfile drifting_profile(const RunConfig& config) {
    std::mt19937_64 rng(config.seed ^ 0x5EED5EEDULL);
    std::uniform_real_distribution<double> start(2.0, 40.0);
    std::normal_distribution<double> step(0.0, 0.35);
    VolatilityProfile profile;
    for (std::size_t i = 0; i < config.synth.nodes; ++i) {
        std::vector<VolatilityKnot> knots;
        double log_sigma = std::log(start(rng));
        for (int day = 0; day <= config.synth.days; day += config.synth.drift_days) {
            knots.push_back({day, std::clamp(std::exp(log_sigma), 0.5, 120.0)});
            log_sigma += step(rng);
        }
        profile.nodes.push_back(std::move(knots));
    }
    return profile;
}

}  // namespace

DatasetFiles locate_dataset(const std::string& dir) {
    if (!fs::is_directory(dir)) throw ValidationError("dataset directory not found: " + dir);
    DatasetFiles files;
    auto need = [&](const std::string& name) {
        auto path = find_file(dir, name);
        if (!path) throw ValidationError(fmt::format("dataset directory {} has no {}", dir, name));
        return *path;
    };
    files.registry = need("registry.csv");
    files.lmp = {need("lmp.csv")};
    files.regulation_prices = need("regulation_prices.csv");
    if (auto hourly = find_file(dir, "regulation_hourly.csv")) {
        files.regulation_hourly = *hourly;
    } else if (auto signal = find_file(dir, "signal.csv")) {
        files.signal = *signal;
    } else {
        throw ValidationError(fmt::format("dataset directory {} has neither regulation_hourly.csv nor signal.csv", dir));
    }
    return files;
}

MarketDataset load_dataset(const RunConfig& config) {
    const auto files = locate_dataset(config.data_dir);
    BuildOptions options;
    options.window = window_from_prices(files.regulation_prices);
    options.fill_single_gaps = config.fill_single_gaps;
    options.beta_source = config.beta_source;
    return build_dataset(files, options);
}

DistanceMatrix node_distances(const RunConfig& config, const MarketDataset& data) {
    return DistanceMatrix::from_registry(data.nodes(), config.road_factor);
}

std::vector<Date> analysis_days(const RunConfig& config, const MarketDataset& data) {
    std::vector<Date> out;
    for (const auto& d : data.days()) {
        if (config.window_start && std::chrono::sys_days{d} < std::chrono::sys_days{*config.window_start}) continue;
        if (config.window_end && std::chrono::sys_days{d} > std::chrono::sys_days{*config.window_end}) continue;
        out.push_back(d);
    }
    return out;
}

DispatchSchedule solve_node_day(const MarketDataset& data, std::size_t node, Date day, const RunConfig& config) {
    return solve(DispatchProblem::from_dataset(data, node, day, config.bess, config.mode, config.grid));
}

SweepResult run_sweep(const MarketDataset& data, const RunConfig& config, const std::string& manifest) {
    SweepResult result;
    if (fs::exists(manifest)) {
        repair_manifest(manifest);
        result.ledger = RevenueLedger::read_csv(manifest);
    } else {
        write_text_file(manifest, std::string(RevenueLedger::csv_header()) + "\n");
    }

    struct Task {
        std::size_t node;
        Date day;
    };
    std::vector<Task> pending;
    for (std::size_t n = 0; n < data.node_count(); ++n) {
        for (const auto& day : analysis_days(config, data)) {
            if (result.ledger.contains(data.nodes()[n].node_id, day)) {
                ++result.skipped;
            } else {
                pending.push_back({n, day});
            }
        }
    }
    if (result.skipped > 0) spdlog::info("sweep: {} node-days already in {}", result.skipped, manifest);

    using Outcome = std::variant<CreditBreakdown, std::string>;
    std::vector<std::optional<Outcome>> outcomes(pending.size());
    std::mutex mutex;
    std::condition_variable ready;
    std::atomic<std::size_t> next{0};

    auto work = [&] {
        for (std::size_t i = next++; i < pending.size(); i = next++) {
            Outcome outcome;
            try {
                outcome = solve_node_day(data, pending[i].node, pending[i].day, config).breakdown;
            } catch (const std::exception& e) {
                outcome = std::string(e.what());
            }
            std::lock_guard lock(mutex);
            outcomes[i] = std::move(outcome);
            ready.notify_all();
        }
    };
    const auto workers = std::min<std::size_t>(config.effective_workers(), std::max<std::size_t>(1, pending.size()));
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);

    // Single collector: rows reach the manifest in task order.
    std::ofstream out(manifest, std::ios::binary | std::ios::app);
    if (!out) throw Error("cannot append to " + manifest);
    for (std::size_t i = 0; i < pending.size(); ++i) {
        Outcome outcome;
        {
            std::unique_lock lock(mutex);
            ready.wait(lock, [&] { return outcomes[i].has_value(); });
            outcome = std::move(*outcomes[i]);
            outcomes[i].reset();
        }
        const auto& id = data.nodes()[pending[i].node].node_id;
        if (const auto* credits = std::get_if<CreditBreakdown>(&outcome)) {
            result.ledger.insert(id, pending[i].day, *credits);
            out << RevenueLedger::csv_row({id, pending[i].day, *credits}) << '\n';
            out.flush();
            ++result.computed;
        } else {
            const auto& message = std::get<std::string>(outcome);
            spdlog::error("sweep: {} {} failed: {}", id, format_date(pending[i].day), message);
            result.failures.push_back({id, pending[i].day, message});
        }
    }
    for (auto& t : pool) t.join();
    return result;
}

PlacementRun propose_placement(const MarketDataset& data, Date last_month, const RunConfig& config) {
    PlacementRun run;
    run.month = next_month(month_start(last_month));
    ForecastOptions fopt;
    fopt.orders = config.arima_orders;
    fopt.allow_partial = config.allow_partial_months;
    run.forecasts = forecast_volatility(data, month_start(last_month), fopt);

    ClusterOptions copt = config.cluster;
    copt.seed = config.seed;
    run.clusters = cluster_nodes(data, month_start(last_month), copt);

    std::map<std::string, double> sigma;
    for (const auto& f : run.forecasts) sigma[f.node_id] = f.sigma_forecast;
    std::vector<std::string> ids;
    std::vector<double> sig;
    for (const auto& n : data.nodes()) {
        ids.push_back(n.node_id);
        sig.push_back(sigma.at(n.node_id));
    }
    run.problem = PlacementProblem::build(ids, sig, run.clusters.labels, node_distances(config, data), config.n_es,
                                          config.max_per_cluster, config.min_distance);
    run.problem.big_m = config.big_m;
    run.plan = solve_placement(run.problem);
    return run;
}

double realized_revenue(const RevenueLedger& ledger, const std::vector<std::string>& nodes, Date month) {
    CompensatedSum total;
    const auto first = month_start(month);
    for (const auto& id : nodes) {
        for (auto d = std::chrono::sys_days{first}; d < std::chrono::sys_days{next_month(first)}; d += std::chrono::days{1}) {
            const auto* row = ledger.find(id, Date{d});
            if (!row) {
                throw ValidationError(fmt::format("ledger has no row for {} on {}", id, format_date(Date{d})));
            }
            total.add(row->net);
        }
    }
    return total.value();
}

std::vector<BacktestRow> run_backtest(const MarketDataset& data, const RevenueLedger& ledger,
                                      const std::vector<Date>& months, const RunConfig& config) {
    if (months.empty()) throw ValidationError("backtest needs at least one month");
    std::vector<BacktestRow> rows;
    for (const auto& raw : months) {
        BacktestRow row;
        row.month = month_start(raw);
        const Date prior = previous_month(row.month);
        const DateRange prior_range{prior, last_day(prior)};
        const auto totals = aggregate(ledger, Grouping::kMonth, prior_range);
        const auto label = period_label(prior, Grouping::kMonth);
        if (std::find(totals.periods.begin(), totals.periods.end(), label) == totals.periods.end() ||
            totals.nodes.empty()) {
            throw ValidationError(fmt::format("backtest of {} needs ledger rows for the prior month {}",
                                              format_month(row.month), label));
        }
        bool any = false;
        for (const auto& e : ledger.entries()) any = any || prior_range.contains(e.date);
        if (!any) {
            throw ValidationError(fmt::format("backtest of {} needs ledger rows for the prior month {}",
                                              format_month(row.month), label));
        }
        row.base_nodes = base_case_select(totals, label, static_cast<std::size_t>(config.n_es));
        row.proposed_nodes = propose_placement(data, prior, config).plan.selected;
        row.base_revenue = realized_revenue(ledger, row.base_nodes, row.month);
        row.proposed_revenue = realized_revenue(ledger, row.proposed_nodes, row.month);
        spdlog::info("backtest {}: base {:.2f}, proposed {:.2f}", format_month(row.month), row.base_revenue,
                     row.proposed_revenue);
        rows.push_back(std::move(row));
    }
    return rows;
}

void write_backtest_csv(const std::vector<BacktestRow>& rows, const std::string& path) {
    std::ostringstream out;
    out << "month,base_nodes,base_revenue,proposed_nodes,proposed_revenue,difference\n";
    for (const auto& r : rows) {
        out << format_month(r.month) << ',' << join(r.base_nodes, ';') << ',' << csv::num(r.base_revenue) << ','
            << join(r.proposed_nodes, ';') << ',' << csv::num(r.proposed_revenue) << ','
            << csv::num(r.proposed_revenue - r.base_revenue) << '\n';
    }
    write_text_file(path, out.str());
}

// ---------------------------------------------------------------------------
// subcommands

int cmd_synth(const Invocation& inv) {
    const auto& c = inv.config;
    const auto out = prepare_output(inv, "synth");
    SyntheticOptions opt;
    opt.seed = c.seed;
    opt.node_count = c.synth.nodes;
    opt.days = c.synth.days;
    opt.start = c.synth.start;
    if (c.synth.drift_days > 0) opt.profile = drifting_profile(c);
    const auto data = generate_synthetic(opt).dataset;
    write_dataset(data, out.string());
    spdlog::info("synth: {} nodes x {} days written to {}", c.synth.nodes, c.synth.days, out.string());
    return kExitOk;
}

int cmd_ingest(const Invocation& inv) {
    const auto& c = inv.config;
    if (c.raw.registry.empty() || c.raw.lmp.empty() || c.raw.regulation_prices.empty()) {
        throw ValidationError("ingest needs data.registry, data.lmp and data.regulation_prices");
    }
    const auto out = prepare_output(inv, "ingest");
    BuildOptions options;
    options.window = window_from_prices(c.raw.regulation_prices);
    if (c.window_start) options.window.begin = std::max(options.window.begin, start_of(*c.window_start));
    if (c.window_end) {
        options.window.end = std::min(options.window.end,
                                      start_of(Date{std::chrono::sys_days{*c.window_end} + std::chrono::days{1}}));
    }
    options.fill_single_gaps = c.fill_single_gaps;
    options.beta_source = c.beta_source;
    const auto data = build_dataset(c.raw, options);
    const auto dir = out / "dataset";
    fs::create_directories(dir);
    write_dataset(data, dir.string());
    nlohmann::json summary;
    summary["nodes"] = data.node_count();
    summary["hours"] = data.hours();
    summary["first_hour"] = format_timestamp(Seconds{data.window().begin});
    summary["end_hour"] = format_timestamp(Seconds{data.window().end});
    summary["flagged_hours"] = data.flagged_hours().size();
    write_json(out / "ingest_summary.json", summary);
    spdlog::info("ingest: {} nodes, {} hours, {} flagged hours", data.node_count(), data.hours(),
                 data.flagged_hours().size());
    return kExitOk;
}

int cmd_sweep(const Invocation& inv) {
    const auto out = prepare_output(inv, "sweep");
    const auto data = load_dataset(inv.config);
    const auto result = run_sweep(data, inv.config, (out / "sweep_manifest.csv").string());
    result.ledger.write_csv((out / "ledger.csv").string());
    const auto failures = out / "sweep_failures.csv";
    fs::remove(failures);
    spdlog::info("sweep: {} computed, {} reused, {} failed", result.computed, result.skipped, result.failures.size());
    if (!result.failures.empty()) {
        std::ostringstream text;
        text << "node_id,date,error\n";
        for (const auto& f : result.failures) {
            text << csv::escape(f.node_id) << ',' << format_date(f.date) << ',' << csv::escape(f.message) << '\n';
        }
        write_text_file(failures, text.str());
        return kExitPartialSweep;
    }
    return kExitOk;
}

int cmd_report(const Invocation& inv) {
    const auto& c = inv.config;
    const auto out = prepare_output(inv, "report");
    const auto dir = out / "report";
    fs::create_directories(dir);
    const auto full = RevenueLedger::read_csv((out / "ledger.csv").string());
    if (full.empty()) throw ValidationError("ledger is empty");
    DateRange window = full.span();
    if (c.window_start) window.first = std::max(window.first, *c.window_start);
    if (c.window_end) window.last = std::min(window.last, *c.window_end);
    RevenueLedger ledger;
    for (const auto& e : full.entries()) {
        if (window.contains(e.date)) ledger.insert(e.node_id, e.date, e.credits);
    }
    if (ledger.empty()) throw ValidationError("ledger has no rows inside the analysis window");

    // Annual-style totals and percentile buckets.
    const auto totals = aggregate(ledger, Grouping::kYear);
    std::map<std::string, double> node_total;
    for (std::size_t i = 0; i < totals.nodes.size(); ++i) {
        CompensatedSum s;
        for (double v : totals.total[i]) s.add(v);
        node_total[totals.nodes[i]] = s.value();
    }
    const auto buckets = percentile_buckets(node_total);
    {
        std::ostringstream text;
        text << "node_id,total,bucket,percentile\n";
        for (const auto& [id, total] : node_total) {
            text << csv::escape(id) << ',' << csv::num(total) << ',' << buckets.at(id) << ','
                 << bucket_label(buckets.at(id)) << '\n';
        }
        write_text_file(dir / "percentiles.csv", text.str());
    }

    // Stationary and transportable schedules.
    const auto data = load_dataset(c);
    const auto distances = node_distances(c, data);
    nlohmann::json plans;
    plans["1L1Y"] = stationary_plan(ledger).to_json();
    for (const auto& [name, grouping] : {std::pair{"4L4S", Grouping::kSeason}, std::pair{"12L12M", Grouping::kMonth}}) {
        const auto t = aggregate(ledger, grouping);
        plans[name]["paper"] = transportable_plan(t, c.relocation, distances, PlanMode::kPaper).to_json();
        plans[name]["cost_aware"] = transportable_plan(t, c.relocation, distances, PlanMode::kCostAware).to_json();
    }
    write_json(dir / "plans.json", plans);

    // Best versus worst node.
    nlohmann::json summary;
    summary["window"] = {format_date(window.first), format_date(window.last)};
    summary["nodes"] = node_total.size();
    if (node_total.size() < 2) {
        summary["comparison"] = {{"notice", "fewer than two nodes; no top/bottom comparison"}};
        fs::remove(dir / "difference.csv");
        fs::remove(dir / "lmp_hourly_summary.csv");
    } else {
        std::vector<std::pair<double, std::string>> ranked;
        for (const auto& [id, total] : node_total) ranked.emplace_back(total, id);
        std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
            return a.first != b.first ? a.first > b.first : a.second < b.second;
        });
        const auto& top = ranked.front().second;
        const auto& bottom = ranked.back().second;
        const auto curve = daily_difference(ledger, top, bottom);
        nlohmann::json cmp;
        cmp["top"] = top;
        cmp["bottom"] = bottom;
        cmp["top_total"] = ranked.front().first;
        cmp["bottom_total"] = ranked.back().first;
        std::ostringstream text;
        text << "rank,date,difference,cumulative_share\n";
        for (std::size_t i = 0; i < curve.days.size(); ++i) {
            text << i + 1 << ',' << format_date(curve.days[i]) << ',' << csv::num(curve.difference[i]) << ','
                 << csv::num(curve.cumulative_share[i]) << '\n';
        }
        write_text_file(dir / "difference.csv", text.str());
        if (curve.days.empty()) {
            cmp["notice"] = "total daily difference is not positive";
        } else {
            const double fraction = curve.day_fraction_for_share(0.8);
            cmp["day_fraction_for_80pct"] = fraction;
            const auto top_days = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(curve.days.size())));
            cmp["top_days"] = top_days;

            // Hourly LMP distribution of the top node on the high-difference days and on the rest.
            const auto node = data.node_index(top);
            const auto lmp = data.lmp(node);
            std::map<std::string, std::vector<std::vector<double>>> by_hour;
            by_hour["top_days"].resize(24);
            by_hour["other_days"].resize(24);
            for (std::size_t i = 0; i < curve.days.size(); ++i) {
                const auto off = data.day_offset(curve.days[i]);
                auto& group = by_hour[i < top_days ? "top_days" : "other_days"];
                for (int h = 0; h < 24; ++h) group[h].push_back(lmp[off + h]);
            }
            std::ostringstream box;
            box << "group,hour,count,min,q1,median,q3,max\n";
            for (auto& [group, hours] : by_hour) {
                for (int h = 0; h < 24; ++h) {
                    auto v = hours[h];
                    if (v.empty()) continue;
                    std::sort(v.begin(), v.end());
                    box << group << ',' << h << ',' << v.size() << ',' << csv::num(v.front()) << ','
                        << csv::num(quantile(v, 0.25)) << ',' << csv::num(quantile(v, 0.5)) << ','
                        << csv::num(quantile(v, 0.75)) << ',' << csv::num(v.back()) << '\n';
                }
            }
            write_text_file(dir / "lmp_hourly_summary.csv", box.str());

            const auto sched_dir = dir / "schedules";
            fs::create_directories(sched_dir);
            for (std::size_t i = 0; i < std::min<std::size_t>(3, curve.days.size()); ++i) {
                const auto problem = DispatchProblem::from_dataset(data, node, curve.days[i], c.bess, c.mode, c.grid);
                std::ostringstream sched;
                write_schedule_csv(sched, problem, solve(problem));
                write_text_file(sched_dir / fmt::format("{}_{}.csv", top, format_date(curve.days[i])), sched.str());
            }
        }
        summary["comparison"] = cmp;
    }
    write_json(dir / "summary.json", summary);
    spdlog::info("report written to {}", dir.string());
    return kExitOk;
}

int cmd_forecast(const Invocation& inv, Date last_month) {
    const auto out = prepare_output(inv, "forecast");
    const auto data = load_dataset(inv.config);
    ForecastOptions opt;
    opt.orders = inv.config.arima_orders;
    opt.allow_partial = inv.config.allow_partial_months;
    const auto rows = forecast_volatility(data, month_start(last_month), opt);
    write_forecast_csv(rows, (out / fmt::format("forecast_{}.csv", format_month(next_month(month_start(last_month))))).string());
    return kExitOk;
}

int cmd_cluster(const Invocation& inv, Date month) {
    const auto out = prepare_output(inv, "cluster");
    const auto data = load_dataset(inv.config);
    ClusterOptions opt = inv.config.cluster;
    opt.seed = inv.config.seed;
    const auto model = cluster_nodes(data, month_start(month), opt);
    const auto stem = fmt::format("clusters_{}", format_month(month_start(month)));
    write_cluster_csv(model, (out / (stem + ".csv")).string());
    write_json(out / (stem + ".json"), model.metadata());
    return kExitOk;
}

int cmd_place(const Invocation& inv, Date last_month) {
    const auto out = prepare_output(inv, "place");
    const auto data = load_dataset(inv.config);
    const auto run = propose_placement(data, last_month, inv.config);
    nlohmann::json j;
    j["month"] = format_month(run.month);
    j["plan"] = run.plan.to_json();
    j["big_m"] = run.problem.effective_big_m();
    nlohmann::json nodes = nlohmann::json::array();
    for (std::size_t i = 0; i < run.forecasts.size(); ++i) {
        const auto& f = run.forecasts[i];
        nodes.push_back({{"node_id", f.node_id},
                         {"sigma_forecast", f.sigma_forecast},
                         {"orders", {f.orders.p, f.orders.d, f.orders.q}},
                         {"cluster", run.clusters.labels.at(data.node_index(f.node_id))}});
    }
    j["candidates"] = nodes;
    j["clustering"] = run.clusters.metadata();
    write_json(out / fmt::format("placement_{}.json", format_month(run.month)), j);
    spdlog::info("place {}: {}", format_month(run.month), join(run.plan.selected, ' '));
    return kExitOk;
}

int cmd_backtest(const Invocation& inv, const std::vector<Date>& months) {
    const auto out = prepare_output(inv, "backtest");
    const auto ledger = RevenueLedger::read_csv((out / "ledger.csv").string());
    const auto data = load_dataset(inv.config);
    const auto rows = run_backtest(data, ledger, months, inv.config);
    write_backtest_csv(rows, (out / "backtest.csv").string());
    nlohmann::json j = nlohmann::json::array();
    for (const auto& r : rows) {
        j.push_back({{"month", format_month(r.month)},
                     {"base", {{"nodes", r.base_nodes}, {"revenue", r.base_revenue}}},
                     {"proposed", {{"nodes", r.proposed_nodes}, {"revenue", r.proposed_revenue}}}});
    }
    write_json(out / "backtest.json", j);
    return kExitOk;
}

}  // namespace bess
