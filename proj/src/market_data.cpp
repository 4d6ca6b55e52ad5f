#include "bess/market_data.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include <fmt/format.h>

#include "bess/csv.hpp"
#include "bess/errors.hpp"
#include "bess/numeric.hpp"

namespace bess {
namespace {

const std::vector<std::string> kRegistryHeader{"node_id", "display_name", "latitude", "longitude",
                                               "zone"};
const std::vector<std::string> kLmpHeader{"node_id", "timestamp_utc", "lmp_usd_per_mwh"};
const std::vector<std::string> kPriceHeader{"timestamp_utc", "rmccp", "rmpcp", "mileage_rega",
                                            "mileage_regd"};
const std::vector<std::string> kSignalHeader{"timestamp_utc", "rega", "regd"};
const std::vector<std::string> kRegHourlyHeader{"timestamp_utc", "regd_up", "regd_down", "beta"};

Hour parse_hour(const csv::Reader& reader, const std::string& field) {
    Seconds t;
    try {
        t = parse_timestamp(field);
    } catch (const InvalidInput& e) {
        throw ParseError(reader.path(), reader.line(), e.what());
    }
    const Hour h = floor_hour(t);
    if (Seconds{h} != t) {
        throw ParseError(reader.path(), reader.line(),
                         fmt::format("timestamp '{}' is not on a whole hour", field));
    }
    return h;
}

void require_nonnegative(const csv::Reader& reader, double v, std::string_view column) {
    if (v < 0.0) {
        throw ParseError(reader.path(), reader.line(),
                         fmt::format("column {} must be non-negative, got {}", column, v));
    }
}

std::string describe_missing(const std::vector<Hour>& missing) {
    std::string out;
    const std::size_t shown = std::min<std::size_t>(missing.size(), 8);
    for (std::size_t i = 0; i < shown; ++i) {
        if (i) out += ", ";
        out += format_timestamp(Seconds{missing[i]});
    }
    if (missing.size() > shown) out += fmt::format(", ... ({} total)", missing.size());
    return out;
}

// Places `values` at their hours inside `window`. Missing hours are either
// interpolated (isolated single gaps, when allowed) or reported.
std::vector<double> align(const std::string& what, const std::vector<Hour>& stamps,
                          const std::vector<double>& values, const HourWindow& window,
                          bool fill_single_gaps) {
    const auto n = static_cast<std::size_t>(window.hours());
    std::vector<double> out(n, 0.0);
    std::vector<char> have(n, 0);
    for (std::size_t i = 0; i < stamps.size(); ++i) {
        if (!window.contains(stamps[i])) continue;
        const auto idx = static_cast<std::size_t>((stamps[i] - window.begin).count());
        out[idx] = values[i];
        have[idx] = 1;
    }
    std::vector<Hour> missing;
    for (std::size_t h = 0; h < n; ++h) {
        if (have[h]) continue;
        const bool isolated = h > 0 && h + 1 < n && have[h - 1] && have[h + 1];
        if (fill_single_gaps && isolated) {
            out[h] = 0.5 * (out[h - 1] + out[h + 1]);
        } else {
            missing.push_back(window.begin + std::chrono::hours{h});
        }
    }
    if (!missing.empty()) {
        throw ValidationError(fmt::format("{} has a coverage gap: missing {}", what,
                                          describe_missing(missing)));
    }
    return out;
}

void check_strictly_increasing(const std::string& what, const std::vector<Hour>& stamps) {
    for (std::size_t i = 1; i < stamps.size(); ++i) {
        if (stamps[i] <= stamps[i - 1]) {
            throw ValidationError(fmt::format("{}: duplicate or unordered timestamp {}", what,
                                              format_timestamp(Seconds{stamps[i]})));
        }
    }
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw InvalidInput(fmt::format("cannot write '{}'", path));
    return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// MarketDataset

MarketDataset::MarketDataset(std::vector<NodeRecord> nodes, HourWindow window, Series series,
                             std::vector<Hour> flagged_hours)
    : nodes_(std::move(nodes)), window_(window), series_(std::move(series)),
      flagged_(std::move(flagged_hours)) {
    validate_registry(nodes_);
    if (window_.end < window_.begin) throw InvalidInput("dataset window ends before it begins");
    const std::size_t n = hours();
    if (series_.lmp.size() != nodes_.size()) {
        throw InvalidInput("dataset needs exactly one LMP series per node");
    }
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        if (series_.lmp[i].size() != n) {
            throw InvalidInput(fmt::format("LMP series for {} is not aligned to the window",
                                           nodes_[i].node_id));
        }
        index_.emplace(nodes_[i].node_id, i);
    }
    for (const auto* v : {&series_.rmccp, &series_.rmpcp, &series_.mileage_rega,
                          &series_.mileage_regd, &series_.regd_up, &series_.regd_down,
                          &series_.beta}) {
        if (v->size() != n) throw InvalidInput("system series are not aligned to the window");
    }
}

std::optional<std::size_t> MarketDataset::find_node(const std::string& node_id) const {
    auto it = index_.find(node_id);
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

std::size_t MarketDataset::node_index(const std::string& node_id) const {
    auto found = find_node(node_id);
    if (!found) throw ValidationError(fmt::format("unknown node '{}'", node_id));
    return *found;
}

std::vector<Date> MarketDataset::days() const {
    if (hour_of_day(window_.begin) != 0) {
        throw InvalidInput("dataset window does not start at midnight UTC");
    }
    std::vector<Date> out;
    for (std::size_t h = 0; h + 24 <= hours(); h += 24) out.push_back(date_of(timestamp(h)));
    return out;
}

std::size_t MarketDataset::day_offset(Date day) const {
    const Hour begin = start_of(day);
    if (begin < window_.begin || begin + std::chrono::hours{24} > window_.end) {
        throw InvalidInput(fmt::format("day {} is not covered by the dataset", format_date(day)));
    }
    return static_cast<std::size_t>((begin - window_.begin).count());
}

MarketDataset MarketDataset::slice(HourWindow window) const {
    if (window.begin < window_.begin || window.end > window_.end || window.end < window.begin) {
        throw InvalidInput("slice window is outside the dataset window");
    }
    const auto off = static_cast<std::size_t>((window.begin - window_.begin).count());
    const auto n = static_cast<std::size_t>(window.hours());
    auto cut = [&](const std::vector<double>& v) {
        return std::vector<double>(v.begin() + static_cast<std::ptrdiff_t>(off),
                                   v.begin() + static_cast<std::ptrdiff_t>(off + n));
    };
    Series s;
    for (const auto& l : series_.lmp) s.lmp.push_back(cut(l));
    s.rmccp = cut(series_.rmccp);
    s.rmpcp = cut(series_.rmpcp);
    s.mileage_rega = cut(series_.mileage_rega);
    s.mileage_regd = cut(series_.mileage_regd);
    s.regd_up = cut(series_.regd_up);
    s.regd_down = cut(series_.regd_down);
    s.beta = cut(series_.beta);
    std::vector<Hour> flagged;
    for (Hour h : flagged_) {
        if (window.contains(h)) flagged.push_back(h);
    }
    return MarketDataset(nodes_, window, std::move(s), std::move(flagged));
}

bool MarketDataset::operator==(const MarketDataset& o) const {
    return nodes_ == o.nodes_ && window_.begin == o.window_.begin && window_.end == o.window_.end &&
           series_.lmp == o.series_.lmp && series_.rmccp == o.series_.rmccp &&
           series_.rmpcp == o.series_.rmpcp && series_.mileage_rega == o.series_.mileage_rega &&
           series_.mileage_regd == o.series_.mileage_regd && series_.regd_up == o.series_.regd_up &&
           series_.regd_down == o.series_.regd_down && series_.beta == o.series_.beta;
}

// ---------------------------------------------------------------------------
// loaders

void validate_registry(const std::vector<NodeRecord>& nodes) {
    std::set<std::string> seen;
    for (const auto& n : nodes) {
        if (n.node_id.empty()) throw ValidationError("empty node_id in registry");
        if (!seen.insert(n.node_id).second) {
            throw ValidationError(fmt::format("duplicate node_id '{}'", n.node_id));
        }
        if (!std::isfinite(n.latitude) || n.latitude < -90.0 || n.latitude > 90.0) {
            throw ValidationError(fmt::format("node {}: latitude {} out of range", n.node_id,
                                              n.latitude));
        }
        if (!std::isfinite(n.longitude) || n.longitude < -180.0 || n.longitude > 180.0) {
            throw ValidationError(fmt::format("node {}: longitude {} out of range", n.node_id,
                                              n.longitude));
        }
    }
}

std::vector<NodeRecord> load_registry(const std::string& path) {
    csv::Reader reader(path);
    reader.expect_header(kRegistryHeader);
    std::vector<NodeRecord> out;
    std::set<std::string> seen;
    std::vector<std::string> f;
    while (reader.next(f)) {
        NodeRecord r{f[0], f[1], reader.to_double(f[2], "latitude"),
                     reader.to_double(f[3], "longitude"), f[4]};
        if (r.node_id.empty()) throw ParseError(path, reader.line(), "empty node_id");
        if (!seen.insert(r.node_id).second) {
            throw ValidationError(fmt::format("{}:{}: duplicate node_id '{}'", path, reader.line(),
                                              r.node_id));
        }
        out.push_back(std::move(r));
    }
    validate_registry(out);
    return out;
}

std::vector<HourlyLmpSeries> load_lmp(const std::string& path) {
    csv::Reader reader(path);
    reader.expect_header(kLmpHeader);
    std::vector<HourlyLmpSeries> out;
    std::map<std::string, std::size_t> slot;
    std::vector<std::string> f;
    while (reader.next(f)) {
        auto [it, inserted] = slot.emplace(f[0], out.size());
        if (inserted) out.push_back(HourlyLmpSeries{f[0], {}, {}});
        auto& s = out[it->second];
        s.timestamps.push_back(parse_hour(reader, f[1]));
        s.lmp.push_back(reader.to_double(f[2], "lmp_usd_per_mwh"));
    }
    for (auto& s : out) {
        std::vector<std::size_t> order(s.timestamps.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::stable_sort(order.begin(), order.end(),
                         [&](auto a, auto b) { return s.timestamps[a] < s.timestamps[b]; });
        HourlyLmpSeries sorted{s.node_id, {}, {}};
        for (auto i : order) {
            sorted.timestamps.push_back(s.timestamps[i]);
            sorted.lmp.push_back(s.lmp[i]);
        }
        check_strictly_increasing(fmt::format("{}: node {}", path, s.node_id), sorted.timestamps);
        s = std::move(sorted);
    }
    return out;
}

RegulationPriceSeries load_regulation_prices(const std::string& path) {
    csv::Reader reader(path);
    reader.expect_header(kPriceHeader);
    RegulationPriceSeries out;
    std::vector<std::string> f;
    while (reader.next(f)) {
        out.timestamps.push_back(parse_hour(reader, f[0]));
        const double cap = reader.to_double(f[1], "rmccp");
        const double perf = reader.to_double(f[2], "rmpcp");
        const double ma = reader.to_double(f[3], "mileage_rega");
        const double md = reader.to_double(f[4], "mileage_regd");
        require_nonnegative(reader, cap, "rmccp");
        require_nonnegative(reader, perf, "rmpcp");
        require_nonnegative(reader, ma, "mileage_rega");
        require_nonnegative(reader, md, "mileage_regd");
        out.rmccp.push_back(cap);
        out.rmpcp.push_back(perf);
        out.mileage_rega.push_back(ma);
        out.mileage_regd.push_back(md);
    }
    check_strictly_increasing(path, out.timestamps);
    return out;
}

RegSignalTrace load_signal(const std::string& path) {
    csv::Reader reader(path);
    reader.expect_header(kSignalHeader);
    RegSignalTrace out;
    std::vector<std::string> f;
    Seconds prev{};
    bool first = true;
    while (reader.next(f)) {
        Seconds t;
        try {
            t = parse_timestamp(f[0]);
        } catch (const InvalidInput& e) {
            throw ParseError(path, reader.line(), e.what());
        }
        if (first) {
            out.start = t;
            first = false;
        } else if (t - prev != std::chrono::seconds{2}) {
            throw ParseError(path, reader.line(), "signal samples must be exactly 2 seconds apart");
        }
        prev = t;
        const double a = reader.to_double(f[1], "rega");
        const double d = reader.to_double(f[2], "regd");
        if (std::abs(a) > 1.0 || std::abs(d) > 1.0) {
            throw ParseError(path, reader.line(), "regulation signal outside [-1, 1]");
        }
        out.rega.push_back(a);
        out.regd.push_back(d);
    }
    return out;
}

HourlyRegAggregate load_reg_aggregate(const std::string& path) {
    csv::Reader reader(path);
    reader.expect_header(kRegHourlyHeader);
    HourlyRegAggregate out;
    std::vector<std::string> f;
    while (reader.next(f)) {
        out.timestamps.push_back(parse_hour(reader, f[0]));
        const double up = reader.to_double(f[1], "regd_up");
        const double down = reader.to_double(f[2], "regd_down");
        const double beta = reader.to_double(f[3], "beta");
        require_nonnegative(reader, up, "regd_up");
        require_nonnegative(reader, down, "regd_down");
        require_nonnegative(reader, beta, "beta");
        if (up > 1.0 || down > 1.0 || up + down > 1.0 + 1e-12) {
            throw ParseError(path, reader.line(), "regd_up + regd_down exceeds one hour of full deflection");
        }
        out.regd_up.push_back(up);
        out.regd_down.push_back(down);
        out.beta.push_back(beta);
    }
    check_strictly_increasing(path, out.timestamps);
    return out;
}

// ---------------------------------------------------------------------------
// regulation signals

double compute_mileage(std::span<const double> trace) {
    if (trace.size() < 2) throw InvalidInput("mileage needs at least two samples");
    CompensatedSum total;
    for (std::size_t i = 1; i < trace.size(); ++i) total.add(std::abs(trace[i] - trace[i - 1]));
    return total.value();
}

HourlyRegAggregate aggregate_regd_hourly(const RegSignalTrace& trace) {
    if (trace.rega.size() != trace.regd.size()) {
        throw InvalidInput("RegA and RegD traces differ in length");
    }
    const Hour first = floor_hour(trace.start);
    if (Seconds{first} != trace.start) {
        throw InvalidInput("signal trace does not start on a whole hour");
    }
    if (trace.size() == 0 || trace.size() % kSamplesPerHour != 0) {
        throw InvalidInput(fmt::format("signal trace of {} samples does not cover whole hours",
                                       trace.size()));
    }
    for (std::size_t i = 0; i < trace.size(); ++i) {
        if (!std::isfinite(trace.regd[i]) || !std::isfinite(trace.rega[i]) ||
            std::abs(trace.regd[i]) > 1.0 || std::abs(trace.rega[i]) > 1.0) {
            throw InvalidInput(fmt::format("signal sample {} outside [-1, 1]", i));
        }
    }
    HourlyRegAggregate out;
    const std::size_t n_hours = trace.size() / kSamplesPerHour;
    for (std::size_t h = 0; h < n_hours; ++h) {
        const std::size_t lo = h * kSamplesPerHour;
        const std::size_t hi = lo + kSamplesPerHour;
        CompensatedSum up, down, mil_d, mil_a;
        for (std::size_t i = lo; i < hi; ++i) {
            const double v = trace.regd[i];
            if (v > 0.0) up.add(v);
            if (v < 0.0) down.add(-v);
            if (i > 0) {
                mil_d.add(std::abs(trace.regd[i] - trace.regd[i - 1]));
                mil_a.add(std::abs(trace.rega[i] - trace.rega[i - 1]));
            }
        }
        const Hour stamp = first + std::chrono::hours{h};
        out.timestamps.push_back(stamp);
        out.regd_up.push_back(kSampleHours * up.value());
        out.regd_down.push_back(kSampleHours * down.value());
        out.mileage_regd.push_back(mil_d.value());
        out.mileage_rega.push_back(mil_a.value());
        if (mil_a.value() > 0.0) {
            out.beta.push_back(mil_d.value() / mil_a.value());
        } else {
            out.beta.push_back(0.0);
            out.flagged.push_back(stamp);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// assembly

MarketDataset assemble_dataset(std::vector<NodeRecord> nodes,
                               const std::vector<HourlyLmpSeries>& lmp,
                               const RegulationPriceSeries& prices,
                               const HourlyRegAggregate& regulation, const BuildOptions& options) {
    validate_registry(nodes);
    const HourWindow& w = options.window;
    if (w.end <= w.begin) throw InvalidInput("empty dataset window");

    std::map<std::string, const HourlyLmpSeries*> by_node;
    for (const auto& s : lmp) {
        if (s.timestamps.size() != s.lmp.size()) {
            throw InvalidInput(fmt::format("LMP series for {} has mismatched lengths", s.node_id));
        }
        if (!by_node.emplace(s.node_id, &s).second) {
            throw ValidationError(fmt::format("node {} has more than one LMP series", s.node_id));
        }
    }

    MarketDataset::Series series;
    for (const auto& node : nodes) {
        auto it = by_node.find(node.node_id);
        if (it == by_node.end()) {
            throw ValidationError(fmt::format("node {} has no LMP series", node.node_id));
        }
        series.lmp.push_back(align(fmt::format("LMP of node {}", node.node_id),
                                   it->second->timestamps, it->second->lmp, w,
                                   options.fill_single_gaps));
    }

    series.rmccp = align("RMCCP", prices.timestamps, prices.rmccp, w, options.fill_single_gaps);
    series.rmpcp = align("RMPCP", prices.timestamps, prices.rmpcp, w, options.fill_single_gaps);
    series.mileage_rega = align("RegA mileage", prices.timestamps, prices.mileage_rega, w,
                                options.fill_single_gaps);
    series.mileage_regd = align("RegD mileage", prices.timestamps, prices.mileage_regd, w,
                                options.fill_single_gaps);
    series.regd_up = align("RegD up fraction", regulation.timestamps, regulation.regd_up, w,
                           options.fill_single_gaps);
    series.regd_down = align("RegD down fraction", regulation.timestamps, regulation.regd_down, w,
                             options.fill_single_gaps);

    std::vector<Hour> flagged;
    const auto n = static_cast<std::size_t>(w.hours());
    if (options.beta_source == BetaSource::kSignalTrace) {
        series.beta = align("RegD/RegA mileage ratio", regulation.timestamps, regulation.beta, w,
                            options.fill_single_gaps);
        for (Hour h : regulation.flagged) {
            if (w.contains(h)) flagged.push_back(h);
        }
    } else {
        series.beta.resize(n);
        for (std::size_t h = 0; h < n; ++h) {
            if (series.mileage_rega[h] > 0.0) {
                series.beta[h] = series.mileage_regd[h] / series.mileage_rega[h];
            } else {
                series.beta[h] = 0.0;
                flagged.push_back(w.begin + std::chrono::hours{h});
            }
        }
    }
    return MarketDataset(std::move(nodes), w, std::move(series), std::move(flagged));
}

MarketDataset build_dataset(const DatasetFiles& files, const BuildOptions& options) {
    auto nodes = load_registry(files.registry);

    std::map<std::string, HourlyLmpSeries> merged;
    for (const auto& path : files.lmp) {
        for (auto& s : load_lmp(path)) {
            auto& dst = merged[s.node_id];
            dst.node_id = s.node_id;
            dst.timestamps.insert(dst.timestamps.end(), s.timestamps.begin(), s.timestamps.end());
            dst.lmp.insert(dst.lmp.end(), s.lmp.begin(), s.lmp.end());
        }
    }
    std::vector<HourlyLmpSeries> lmp;
    for (auto& [id, s] : merged) {
        std::vector<std::size_t> order(s.timestamps.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::stable_sort(order.begin(), order.end(),
                         [&](auto a, auto b) { return s.timestamps[a] < s.timestamps[b]; });
        HourlyLmpSeries sorted{id, {}, {}};
        for (auto i : order) {
            sorted.timestamps.push_back(s.timestamps[i]);
            sorted.lmp.push_back(s.lmp[i]);
        }
        check_strictly_increasing(fmt::format("LMP of node {}", id), sorted.timestamps);
        lmp.push_back(std::move(sorted));
    }

    const auto prices = load_regulation_prices(files.regulation_prices);
    HourlyRegAggregate regulation;
    if (!files.signal.empty()) {
        regulation = aggregate_regd_hourly(load_signal(files.signal));
    } else if (!files.regulation_hourly.empty()) {
        regulation = load_reg_aggregate(files.regulation_hourly);
    } else {
        throw InvalidInput("either a regulation signal file or an hourly regulation file is required");
    }
    return assemble_dataset(std::move(nodes), lmp, prices, regulation, options);
}

// ---------------------------------------------------------------------------
// writers

DatasetFiles write_dataset(const MarketDataset& ds, const std::string& dir) {
    std::filesystem::create_directories(dir);
    DatasetFiles files;
    files.registry = (std::filesystem::path(dir) / "registry.csv").string();
    files.lmp = {(std::filesystem::path(dir) / "lmp.csv").string()};
    files.regulation_prices = (std::filesystem::path(dir) / "regulation_prices.csv").string();
    files.regulation_hourly = (std::filesystem::path(dir) / "regulation_hourly.csv").string();

    {
        auto out = open_out(files.registry);
        out << "node_id,display_name,latitude,longitude,zone\n";
        for (const auto& n : ds.nodes()) {
            out << csv::escape(n.node_id) << ',' << csv::escape(n.display_name) << ','
                << csv::num(n.latitude) << ',' << csv::num(n.longitude) << ','
                << csv::escape(n.zone) << '\n';
        }
    }
    {
        auto out = open_out(files.lmp.front());
        out << "node_id,timestamp_utc,lmp_usd_per_mwh\n";
        for (std::size_t i = 0; i < ds.node_count(); ++i) {
            const auto id = csv::escape(ds.nodes()[i].node_id);
            const auto lmp = ds.lmp(i);
            for (std::size_t h = 0; h < ds.hours(); ++h) {
                out << id << ',' << format_timestamp(Seconds{ds.timestamp(h)}) << ','
                    << csv::num(lmp[h]) << '\n';
            }
        }
    }
    {
        auto out = open_out(files.regulation_prices);
        out << "timestamp_utc,rmccp,rmpcp,mileage_rega,mileage_regd\n";
        for (std::size_t h = 0; h < ds.hours(); ++h) {
            out << format_timestamp(Seconds{ds.timestamp(h)}) << ',' << csv::num(ds.rmccp()[h])
                << ',' << csv::num(ds.rmpcp()[h]) << ',' << csv::num(ds.mileage_rega()[h]) << ','
                << csv::num(ds.mileage_regd()[h]) << '\n';
        }
    }
    {
        auto out = open_out(files.regulation_hourly);
        out << "timestamp_utc,regd_up,regd_down,beta\n";
        for (std::size_t h = 0; h < ds.hours(); ++h) {
            out << format_timestamp(Seconds{ds.timestamp(h)}) << ',' << csv::num(ds.regd_up()[h])
                << ',' << csv::num(ds.regd_down()[h]) << ',' << csv::num(ds.beta()[h]) << '\n';
        }
    }
    return files;
}

void write_signal(const RegSignalTrace& trace, const std::string& path) {
    auto out = open_out(path);
    out << "timestamp_utc,rega,regd\n";
    for (std::size_t i = 0; i < trace.size(); ++i) {
        out << format_timestamp(trace.start + std::chrono::seconds{2 * i}) << ','
            << csv::num(trace.rega[i]) << ',' << csv::num(trace.regd[i]) << '\n';
    }
}

void write_reg_aggregate(const HourlyRegAggregate& agg, const std::string& path) {
    auto out = open_out(path);
    out << "timestamp_utc,regd_up,regd_down,beta\n";
    for (std::size_t h = 0; h < agg.size(); ++h) {
        out << format_timestamp(Seconds{agg.timestamps[h]}) << ',' << csv::num(agg.regd_up[h])
            << ',' << csv::num(agg.regd_down[h]) << ',' << csv::num(agg.beta[h]) << '\n';
    }
}

}  // namespace bess
