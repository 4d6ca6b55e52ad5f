#pragma once

#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "bess/bess_model.hpp"
#include "bess/geo.hpp"
#include "bess/timeutil.hpp"

namespace bess {

struct LedgerEntry {
    std::string node_id;
    Date date;
    CreditBreakdown credits;
};

// Inclusive range of calendar days.
struct DateRange {
    Date first;
    Date last;

    bool contains(Date d) const {
        return std::chrono::sys_days{d} >= std::chrono::sys_days{first} &&
               std::chrono::sys_days{d} <= std::chrono::sys_days{last};
    }
};

// Daily net revenue and credit components per (node, date). Insertion is
// thread-safe; everything else is read-only.
class RevenueLedger {
public:
    RevenueLedger() = default;
    RevenueLedger(const RevenueLedger& other);
    RevenueLedger& operator=(const RevenueLedger& other);

    // Throws ValidationError if the key is already present.
    void insert(const std::string& node_id, Date date, const CreditBreakdown& credits);
    void merge(const RevenueLedger& other);

    const CreditBreakdown* find(const std::string& node_id, Date date) const;
    bool contains(const std::string& node_id, Date date) const { return find(node_id, date); }

    std::size_t size() const { return rows_.size(); }
    bool empty() const { return rows_.empty(); }

    // Sorted by node id, then date.
    std::vector<LedgerEntry> entries() const;
    std::vector<std::string> node_ids() const;
    DateRange span() const;  // throws InvalidInput when empty

    // node_id,date,net,credit_e,credit_cap,credit_perf,cost_deg
    void write_csv(const std::string& path) const;
    static RevenueLedger read_csv(const std::string& path);
    static const char* csv_header();  // without newline
    static std::string csv_row(const LedgerEntry& entry);  // without newline

    bool operator==(const RevenueLedger& other) const;

private:
    using Key = std::pair<std::string, std::chrono::sys_days>;
    std::map<Key, CreditBreakdown> rows_;
    mutable std::mutex mutex_;
};

enum class Grouping { kDay, kMonth, kSeason, kYear };

Grouping parse_grouping(const std::string& name);  // throws InvalidInput
std::string to_string(Grouping g);

// Spring Mar-May, summer Jun-Aug, autumn Sep-Nov, winter Jan, Feb and Dec of
// the same calendar year. Labels: 2018-03-01, 2018-03, 2018-spring, 2018.
std::string period_label(Date d, Grouping g);

// Per-node totals for each period touched by the window. Periods are ordered
// by year, then spring, summer, autumn, winter (months Mar..Dec, Jan, Feb), so a
// seasonal schedule maps onto a monthly one with the same relocations.
struct PeriodTotals {
    Grouping grouping = Grouping::kMonth;
    std::vector<std::string> nodes;          // sorted
    std::vector<std::string> periods;        // labels in schedule order
    std::vector<std::vector<double>> total;  // [node][period]

    std::size_t node_index(const std::string& id) const;
    std::size_t period_index(const std::string& label) const;
    double at(const std::string& node, const std::string& period) const;
};

// Throws InvalidInput for an empty ledger. Without a window the span of the
// ledger is used. Nodes without entries in a period total 0.
PeriodTotals aggregate(const RevenueLedger& ledger, Grouping grouping,
                       std::optional<DateRange> window = std::nullopt);

// Buckets 0..4 stand for percentiles 0-20, 20-40, 40-60, 60-80 and 80-100.
// Ranks are ascending with ties sharing their average rank; the bucket is
// floor(5 * rank / (N - 1)) capped at 4. A single node lands in bucket 4.
std::map<std::string, int> percentile_buckets(const std::map<std::string, double>& totals);
std::string bucket_label(int bucket);

struct StationaryChoice {
    std::string node_id;
    double total = 0.0;
};

// Best single node over the window; ties go to the smallest node id.
StationaryChoice stationary_best(const RevenueLedger& ledger,
                                 std::optional<DateRange> window = std::nullopt);

struct RelocationCostModel {
    double carrier_cost = 66.65;  // $/hour per truck
    int truck_count = 4;
    double avg_speed = 60.0;      // miles/hour
    double max_distance = 900.0;  // miles; longer moves are charged at this distance
    double labor_cost = 3000.0;
    double interconnection_cost = 2200.0;

    void validate() const;
    double cost(double miles) const;
};

enum class PlanMode { kPaper, kCostAware };

struct Relocation {
    std::size_t period = 0;  // index of the period the unit moves into
    std::string from;
    std::string to;
    double miles = 0.0;
    double cost = 0.0;
};

struct DeploymentPlan {
    std::string name;
    std::vector<std::string> periods;
    std::vector<std::string> nodes;  // location per period
    std::vector<double> gross;       // per period
    std::vector<Relocation> moves;
    double gross_total = 0.0;
    double relocation_total = 0.0;
    double net = 0.0;

    nlohmann::json to_json() const;
};

// Schedules one location per period. Paper mode takes the per-period argmax
// and charges for the resulting moves; cost-aware mode maximizes gross minus
// relocation cost exactly by dynamic programming.
DeploymentPlan transportable_plan(const PeriodTotals& totals, const RelocationCostModel& cost,
                                  const DistanceMatrix& distances, PlanMode mode);

// One-location plan over the whole window (1L1Y for a calendar year).
DeploymentPlan stationary_plan(const RevenueLedger& ledger,
                               std::optional<DateRange> window = std::nullopt);

// Fills gross_total, relocation_total and net from the per-period figures.
void finalize_plan(DeploymentPlan& plan);

// Top-n nodes by total in `period`, best first, ties by node id. When n exceeds
// the node count every node is returned and a warning is logged.
std::vector<std::string> base_case_select(const PeriodTotals& totals, const std::string& period,
                                          std::size_t n);

// Daily revenue difference between two nodes sorted in decreasing order, with
// the cumulative share of the total difference.
struct DifferenceCurve {
    std::vector<Date> days;
    std::vector<double> difference;
    std::vector<double> cumulative_share;  // last entry is exactly 1

    // Smallest fraction of days whose largest differences reach `share` of the total.
    double day_fraction_for_share(double share) const;
};

// Empty when the total difference is not positive.
DifferenceCurve daily_difference(const RevenueLedger& ledger, const std::string& top,
                                 const std::string& bottom);

}  // namespace bess
