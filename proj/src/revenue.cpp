#include "bess/revenue.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <set>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "bess/csv.hpp"
#include "bess/errors.hpp"
#include "bess/numeric.hpp"

namespace bess {

using std::chrono::sys_days;

// ---- ledger ----

RevenueLedger::RevenueLedger(const RevenueLedger& other) {
    std::lock_guard lock(other.mutex_);
    rows_ = other.rows_;
}

RevenueLedger& RevenueLedger::operator=(const RevenueLedger& other) {
    if (this != &other) {
        std::scoped_lock lock(mutex_, other.mutex_);
        rows_ = other.rows_;
    }
    return *this;
}

void RevenueLedger::insert(const std::string& node_id, Date date, const CreditBreakdown& credits) {
    std::lock_guard lock(mutex_);
    if (!rows_.emplace(Key{node_id, sys_days{date}}, credits).second) {
        throw ValidationError(
            fmt::format("ledger already has an entry for {} on {}", node_id, format_date(date)));
    }
}

void RevenueLedger::merge(const RevenueLedger& other) {
    for (const auto& e : other.entries()) insert(e.node_id, e.date, e.credits);
}

const CreditBreakdown* RevenueLedger::find(const std::string& node_id, Date date) const {
    std::lock_guard lock(mutex_);
    auto it = rows_.find(Key{node_id, sys_days{date}});
    return it == rows_.end() ? nullptr : &it->second;
}

std::vector<LedgerEntry> RevenueLedger::entries() const {
    std::lock_guard lock(mutex_);
    std::vector<LedgerEntry> out;
    out.reserve(rows_.size());
    for (const auto& [key, credits] : rows_) out.push_back({key.first, Date{key.second}, credits});
    return out;
}

std::vector<std::string> RevenueLedger::node_ids() const {
    std::lock_guard lock(mutex_);
    std::vector<std::string> out;
    for (const auto& [key, credits] : rows_) {
        if (out.empty() || out.back() != key.first) out.push_back(key.first);
    }
    return out;
}

DateRange RevenueLedger::span() const {
    std::lock_guard lock(mutex_);
    if (rows_.empty()) throw InvalidInput("revenue ledger is empty");
    sys_days lo = rows_.begin()->first.second, hi = lo;
    for (const auto& [key, credits] : rows_) {
        lo = std::min(lo, key.second);
        hi = std::max(hi, key.second);
    }
    return {Date{lo}, Date{hi}};
}

bool RevenueLedger::operator==(const RevenueLedger& other) const {
    const auto a = entries(), b = other.entries();
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const auto &x = a[i].credits, &y = b[i].credits;
        if (a[i].node_id != b[i].node_id || a[i].date != b[i].date || x.net != y.net ||
            x.credit_energy != y.credit_energy || x.credit_capability != y.credit_capability ||
            x.credit_performance != y.credit_performance || x.cost_degradation != y.cost_degradation) {
            return false;
        }
    }
    return true;
}

void RevenueLedger::write_csv(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path);
    out << csv_header() << '\n';
    for (const auto& e : entries()) out << csv_row(e) << '\n';
    if (!out) throw Error("failed writing " + path);
}

const char* RevenueLedger::csv_header() { return "node_id,date,net,credit_e,credit_cap,credit_perf,cost_deg"; }

std::string RevenueLedger::csv_row(const LedgerEntry& e) {
    const auto& c = e.credits;
    return csv::escape(e.node_id) + ',' + format_date(e.date) + ',' + csv::num(c.net) + ',' +
           csv::num(c.credit_energy) + ',' + csv::num(c.credit_capability) + ',' +
           csv::num(c.credit_performance) + ',' + csv::num(c.cost_degradation);
}

RevenueLedger RevenueLedger::read_csv(const std::string& path) {
    csv::Reader in(path);
    in.expect_header({"node_id", "date", "net", "credit_e", "credit_cap", "credit_perf", "cost_deg"});
    RevenueLedger ledger;
    std::vector<std::string> f;
    while (in.next(f)) {
        Date day;
        try {
            day = parse_date(f[1]);
        } catch (const std::exception& e) {
            throw ParseError(path, in.line(), e.what());
        }
        const auto c = CreditBreakdown::make(in.to_double(f[3], "credit_e"),
                                             in.to_double(f[4], "credit_cap"),
                                             in.to_double(f[5], "credit_perf"),
                                             in.to_double(f[6], "cost_deg"));
        const double net = in.to_double(f[2], "net");
        if (std::abs(net - c.net) > 1e-6 * std::max(1.0, std::abs(net))) {
            throw ParseError(path, in.line(), "net does not equal the sum of its components");
        }
        try {
            ledger.insert(f[0], day, c);
        } catch (const ValidationError& e) {
            throw ParseError(path, in.line(), e.what());
        }
    }
    return ledger;
}

// ---- grouping ----

Grouping parse_grouping(const std::string& name) {
    if (name == "day") return Grouping::kDay;
    if (name == "month") return Grouping::kMonth;
    if (name == "season") return Grouping::kSeason;
    if (name == "year") return Grouping::kYear;
    throw InvalidInput(fmt::format("unknown grouping '{}' (day, month, season or year)", name));
}

std::string to_string(Grouping g) {
    switch (g) {
        case Grouping::kDay: return "day";
        case Grouping::kMonth: return "month";
        case Grouping::kSeason: return "season";
        case Grouping::kYear: return "year";
    }
    return "?";
}

namespace {

const char* kSeasonNames[] = {"spring", "summer", "autumn", "winter"};

int season_of(unsigned month) {
    if (month >= 3 && month <= 5) return 0;
    if (month >= 6 && month <= 8) return 1;
    if (month >= 9 && month <= 11) return 2;
    return 3;
}

// Sort key placing periods in schedule order.
std::pair<long, long> period_order(Date d, Grouping g) {
    const long y = static_cast<int>(d.year());
    const unsigned m = static_cast<unsigned>(d.month());
    switch (g) {
        case Grouping::kDay: return {sys_days{d}.time_since_epoch().count(), 0};
        case Grouping::kMonth: return {y, static_cast<long>((m + 9) % 12)};
        case Grouping::kSeason: return {y, season_of(m)};
        case Grouping::kYear: return {y, 0};
    }
    return {0, 0};
}

}  // namespace

std::string period_label(Date d, Grouping g) {
    switch (g) {
        case Grouping::kDay: return format_date(d);
        case Grouping::kMonth: return format_month(d);
        case Grouping::kSeason:
            return fmt::format("{}-{}", static_cast<int>(d.year()),
                               kSeasonNames[season_of(static_cast<unsigned>(d.month()))]);
        case Grouping::kYear: return fmt::format("{}", static_cast<int>(d.year()));
    }
    return {};
}

std::size_t PeriodTotals::node_index(const std::string& id) const {
    auto it = std::lower_bound(nodes.begin(), nodes.end(), id);
    if (it == nodes.end() || *it != id) throw InvalidInput(fmt::format("unknown node '{}'", id));
    return static_cast<std::size_t>(it - nodes.begin());
}

std::size_t PeriodTotals::period_index(const std::string& label) const {
    auto it = std::find(periods.begin(), periods.end(), label);
    if (it == periods.end()) throw InvalidInput(fmt::format("period '{}' not present", label));
    return static_cast<std::size_t>(it - periods.begin());
}

double PeriodTotals::at(const std::string& node, const std::string& period) const {
    return total[node_index(node)][period_index(period)];
}

PeriodTotals aggregate(const RevenueLedger& ledger, Grouping grouping,
                       std::optional<DateRange> window) {
    if (ledger.empty()) throw InvalidInput("cannot aggregate an empty ledger");
    const DateRange range = window ? *window : ledger.span();
    if (sys_days{range.last} < sys_days{range.first}) throw InvalidInput("empty date range");

    std::map<std::pair<long, long>, std::string> ordered;
    for (sys_days d = sys_days{range.first}; d <= sys_days{range.last}; d += std::chrono::days{1}) {
        ordered.emplace(period_order(Date{d}, grouping), period_label(Date{d}, grouping));
    }
    PeriodTotals out;
    out.grouping = grouping;
    out.nodes = ledger.node_ids();
    std::map<std::string, std::size_t> pidx;
    for (const auto& [key, label] : ordered) {
        pidx[label] = out.periods.size();
        out.periods.push_back(label);
    }
    std::vector<std::vector<CompensatedSum>> sums(out.nodes.size(),
                                                  std::vector<CompensatedSum>(out.periods.size()));
    std::size_t node = 0;
    for (const auto& e : ledger.entries()) {
        while (out.nodes[node] != e.node_id) ++node;
        if (!range.contains(e.date)) continue;
        sums[node][pidx.at(period_label(e.date, grouping))].add(e.credits.net);
    }
    out.total.resize(out.nodes.size());
    for (std::size_t i = 0; i < out.nodes.size(); ++i) {
        for (const auto& s : sums[i]) out.total[i].push_back(s.value());
    }
    return out;
}

// ---- rankings ----

std::map<std::string, int> percentile_buckets(const std::map<std::string, double>& totals) {
    std::vector<std::pair<double, std::string>> order;
    for (const auto& [id, v] : totals) order.emplace_back(v, id);
    std::sort(order.begin(), order.end());
    const std::size_t n = order.size();
    std::map<std::string, int> out;
    if (n == 1) {
        out[order[0].second] = 4;
        return out;
    }
    // Twice the average rank keeps tie arithmetic in integers.
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j + 1 < n && order[j + 1].first == order[i].first) ++j;
        const std::size_t twice_rank = i + j;
        const auto bucket = std::min<std::size_t>(4, (5 * twice_rank) / (2 * (n - 1)));
        for (std::size_t k = i; k <= j; ++k) out[order[k].second] = static_cast<int>(bucket);
        i = j + 1;
    }
    return out;
}

std::string bucket_label(int bucket) {
    if (bucket < 0 || bucket > 4) throw InvalidInput(fmt::format("bucket {} out of range", bucket));
    return fmt::format("{}-{}", bucket * 20, bucket * 20 + 20);
}

StationaryChoice stationary_best(const RevenueLedger& ledger, std::optional<DateRange> window) {
    if (ledger.empty()) throw InvalidInput("stationary_best needs a non-empty ledger");
    const DateRange range = window ? *window : ledger.span();
    std::map<std::string, CompensatedSum> sums;
    for (const auto& e : ledger.entries()) {
        auto& s = sums[e.node_id];
        if (range.contains(e.date)) s.add(e.credits.net);
    }
    StationaryChoice best{"", -std::numeric_limits<double>::infinity()};
    for (const auto& [id, s] : sums) {
        if (s.value() > best.total) best = {id, s.value()};
    }
    return best;
}

// ---- relocation and plans ----

void RelocationCostModel::validate() const {
    if (!(carrier_cost >= 0.0)) throw InvalidInput("carrier_cost must be non-negative");
    if (truck_count < 0) throw InvalidInput("truck_count must be non-negative");
    if (!(avg_speed > 0.0)) throw InvalidInput("avg_speed must be positive");
    if (!(max_distance >= 0.0)) throw InvalidInput("max_distance must be non-negative");
    if (!(labor_cost >= 0.0)) throw InvalidInput("labor_cost must be non-negative");
    if (!(interconnection_cost >= 0.0)) throw InvalidInput("interconnection_cost must be non-negative");
}

double RelocationCostModel::cost(double miles) const {
    if (!(miles >= 0.0)) throw InvalidInput("relocation distance must be non-negative");
    const double d = std::min(miles, max_distance);
    return truck_count * carrier_cost * (d / avg_speed) + labor_cost + interconnection_cost;
}

void finalize_plan(DeploymentPlan& plan) {
    double gross = 0.0, moves = 0.0;
    for (double g : plan.gross) gross += g;
    for (const auto& m : plan.moves) moves += m.cost;
    plan.gross_total = gross;
    plan.relocation_total = moves;
    plan.net = gross - moves;
}

nlohmann::json DeploymentPlan::to_json() const {
    nlohmann::json j;
    j["name"] = name;
    j["schedule"] = nlohmann::json::array();
    for (std::size_t p = 0; p < periods.size(); ++p) {
        j["schedule"].push_back({{"period", periods[p]}, {"node_id", nodes[p]}, {"gross", gross[p]}});
    }
    j["relocations"] = nlohmann::json::array();
    for (const auto& m : moves) {
        j["relocations"].push_back({{"period", periods[m.period]},
                                    {"from", m.from},
                                    {"to", m.to},
                                    {"miles", m.miles},
                                    {"cost", m.cost}});
    }
    j["gross_total"] = gross_total;
    j["relocation_total"] = relocation_total;
    j["net"] = net;
    return j;
}

namespace {

std::string plan_name(Grouping g) {
    switch (g) {
        case Grouping::kMonth: return "monthly";
        case Grouping::kSeason: return "seasonal";
        default: return to_string(g);
    }
}

void add_moves(DeploymentPlan& plan, const RelocationCostModel& cost, const DistanceMatrix& dist,
               bool allow_fallback) {
    for (std::size_t p = 1; p < plan.nodes.size(); ++p) {
        const auto& from = plan.nodes[p - 1];
        const auto& to = plan.nodes[p];
        if (from == to) continue;
        double miles;
        if (dist.find(from) && dist.find(to)) {
            miles = dist.between(from, to);
        } else if (allow_fallback) {
            spdlog::warn("no distance between {} and {}; charging the maximum distance", from, to);
            miles = cost.max_distance;
        } else {
            throw InvalidInput(fmt::format("no distance between '{}' and '{}'", from, to));
        }
        plan.moves.push_back({p, from, to, miles, cost.cost(miles)});
    }
}

}  // namespace

DeploymentPlan transportable_plan(const PeriodTotals& totals, const RelocationCostModel& cost,
                                  const DistanceMatrix& distances, PlanMode mode) {
    cost.validate();
    const std::size_t N = totals.nodes.size(), P = totals.periods.size();
    if (N == 0 || P == 0) throw InvalidInput("transportable plan needs nodes and periods");
    DeploymentPlan plan;
    plan.name = plan_name(totals.grouping) + (mode == PlanMode::kPaper ? "-paper" : "-cost-aware");
    plan.periods = totals.periods;

    std::vector<std::size_t> choice(P);
    if (mode == PlanMode::kPaper) {
        for (std::size_t p = 0; p < P; ++p) {
            std::size_t best = 0;
            for (std::size_t i = 1; i < N; ++i) {
                if (totals.total[i][p] > totals.total[best][p]) best = i;
            }
            choice[p] = best;
        }
    } else {
        Eigen::MatrixXd move(N, N);
        for (std::size_t a = 0; a < N; ++a) {
            for (std::size_t b = 0; b < N; ++b) {
                move(a, b) = a == b ? 0.0 : cost.cost(distances.between(totals.nodes[a], totals.nodes[b]));
            }
        }
        std::vector<std::vector<double>> value(P, std::vector<double>(N));
        std::vector<std::vector<std::size_t>> from(P, std::vector<std::size_t>(N, 0));
        for (std::size_t i = 0; i < N; ++i) value[0][i] = totals.total[i][0];
        for (std::size_t p = 1; p < P; ++p) {
            for (std::size_t i = 0; i < N; ++i) {
                // Staying put wins ties, then the smallest node id.
                std::size_t best = i;
                double best_v = value[p - 1][i];
                for (std::size_t m = 0; m < N; ++m) {
                    const double v = value[p - 1][m] - move(m, i);
                    if (v > best_v) {
                        best_v = v;
                        best = m;
                    }
                }
                value[p][i] = totals.total[i][p] + best_v;
                from[p][i] = best;
            }
        }
        std::size_t last = 0;
        for (std::size_t i = 1; i < N; ++i) {
            if (value[P - 1][i] > value[P - 1][last]) last = i;
        }
        for (std::size_t p = P; p-- > 0;) {
            choice[p] = last;
            if (p > 0) last = from[p][last];
        }
    }
    for (std::size_t p = 0; p < P; ++p) {
        plan.nodes.push_back(totals.nodes[choice[p]]);
        plan.gross.push_back(totals.total[choice[p]][p]);
    }
    add_moves(plan, cost, distances, mode == PlanMode::kPaper);
    finalize_plan(plan);
    return plan;
}

DeploymentPlan stationary_plan(const RevenueLedger& ledger, std::optional<DateRange> window) {
    const DateRange range = window ? *window : ledger.span();
    const auto best = stationary_best(ledger, range);
    DeploymentPlan plan;
    plan.name = "stationary";
    plan.periods = {format_date(range.first) + ".." + format_date(range.last)};
    plan.nodes = {best.node_id};
    plan.gross = {best.total};
    finalize_plan(plan);
    return plan;
}

std::vector<std::string> base_case_select(const PeriodTotals& totals, const std::string& period,
                                          std::size_t n) {
    const std::size_t p = totals.period_index(period);
    std::vector<std::size_t> idx(totals.nodes.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        return totals.total[a][p] > totals.total[b][p];
    });
    if (n > idx.size()) {
        spdlog::warn("base case asked for {} nodes but only {} exist; returning all", n, idx.size());
        n = idx.size();
    }
    std::vector<std::string> out;
    for (std::size_t k = 0; k < n; ++k) out.push_back(totals.nodes[idx[k]]);
    return out;
}

// ---- top/bottom comparison ----

double DifferenceCurve::day_fraction_for_share(double share) const {
    if (cumulative_share.empty()) throw InvalidInput("difference curve is empty");
    for (std::size_t k = 0; k < cumulative_share.size(); ++k) {
        if (cumulative_share[k] >= share) {
            return static_cast<double>(k + 1) / static_cast<double>(cumulative_share.size());
        }
    }
    return 1.0;
}

DifferenceCurve daily_difference(const RevenueLedger& ledger, const std::string& top,
                                 const std::string& bottom) {
    std::map<sys_days, double> diff;
    for (const auto& e : ledger.entries()) {
        if (e.node_id == top) diff[sys_days{e.date}] += e.credits.net;
        if (e.node_id == bottom) diff[sys_days{e.date}] -= e.credits.net;
    }
    std::vector<std::pair<double, sys_days>> rows;
    for (const auto& [d, v] : diff) rows.emplace_back(v, d);
    std::stable_sort(rows.begin(), rows.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    DifferenceCurve out;
    std::vector<double> running;
    double acc = 0.0;
    for (const auto& r : rows) {
        acc += r.first;
        running.push_back(acc);
    }
    if (rows.empty() || !(acc > 0.0)) return out;
    for (std::size_t k = 0; k < rows.size(); ++k) {
        out.days.push_back(Date{rows[k].second});
        out.difference.push_back(rows[k].first);
        out.cumulative_share.push_back(running[k] / acc);
    }
    return out;
}

}  // namespace bess
