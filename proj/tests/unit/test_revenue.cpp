#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <thread>

#include "bess/errors.hpp"
#include "bess/revenue.hpp"
#include "support.hpp"

using namespace bess;

namespace {

Date ymd(int y, unsigned m, unsigned d) {
    return Date{std::chrono::year{y} / std::chrono::month{m} / std::chrono::day{d}};
}

CreditBreakdown net_only(double v) { return CreditBreakdown::make(v, 0, 0, 0); }

// Ledger with one entry per node per day of 2018, net drawn from per-node
// regimes that change at random month boundaries.
RevenueLedger random_year_ledger(std::mt19937_64& rng, std::size_t nodes) {
    RevenueLedger ledger;
    std::uniform_real_distribution<double> level(0, 400), noise(-50, 50);
    for (std::size_t i = 0; i < nodes; ++i) {
        std::vector<double> monthly(12);
        for (auto& v : monthly) v = level(rng);
        for (auto d = std::chrono::sys_days{ymd(2018, 1, 1)};
             d <= std::chrono::sys_days{ymd(2018, 12, 31)}; d += std::chrono::days{1}) {
            const Date day{d};
            const auto m = static_cast<unsigned>(day.month()) - 1;
            ledger.insert("N" + std::to_string(i), day, net_only(monthly[m] + noise(rng)));
        }
    }
    return ledger;
}

DistanceMatrix line_distances(const std::vector<std::string>& ids, double spacing) {
    const auto n = static_cast<Eigen::Index>(ids.size());
    Eigen::MatrixXd m(n, n);
    for (Eigen::Index a = 0; a < n; ++a) {
        for (Eigen::Index b = 0; b < n; ++b) m(a, b) = spacing * std::abs(double(a - b));
    }
    return DistanceMatrix(ids, m);
}

RelocationCostModel flat_cost(double dollars) {
    RelocationCostModel c;
    c.carrier_cost = 0.0;
    c.labor_cost = dollars;
    c.interconnection_cost = 0.0;
    return c;
}

PeriodTotals table(std::vector<std::vector<double>> totals) {
    PeriodTotals t;
    for (std::size_t i = 0; i < totals.size(); ++i) t.nodes.push_back(std::string(1, char('A' + i)));
    for (std::size_t p = 0; p < totals[0].size(); ++p) t.periods.push_back("P" + std::to_string(p));
    t.total = std::move(totals);
    return t;
}

// Net of the best assignment over every node sequence.
double enumerate_plans(const PeriodTotals& t, const RelocationCostModel& c, const DistanceMatrix& d) {
    const std::size_t N = t.nodes.size(), P = t.periods.size();
    std::size_t count = 1;
    for (std::size_t p = 0; p < P; ++p) count *= N;
    double best = -1e300;
    for (std::size_t code = 0; code < count; ++code) {
        std::vector<std::size_t> seq(P);
        std::size_t x = code;
        for (std::size_t p = 0; p < P; ++p) {
            seq[p] = x % N;
            x /= N;
        }
        double v = 0.0;
        for (std::size_t p = 0; p < P; ++p) {
            v += t.total[seq[p]][p];
            if (p > 0 && seq[p] != seq[p - 1]) v -= c.cost(d.between(t.nodes[seq[p - 1]], t.nodes[seq[p]]));
        }
        best = std::max(best, v);
    }
    return best;
}

}  // namespace

TEST(Ledger, InsertFindAndDuplicate) {
    RevenueLedger l;
    l.insert("A", ymd(2018, 1, 1), net_only(10));
    EXPECT_TRUE(l.contains("A", ymd(2018, 1, 1)));
    EXPECT_FALSE(l.contains("A", ymd(2018, 1, 2)));
    EXPECT_THROW(l.insert("A", ymd(2018, 1, 1), net_only(3)), ValidationError);
    EXPECT_EQ(l.size(), 1u);
}

TEST(Ledger, CsvRoundTrip) {
    TempDir dir;
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-100, 500);
    RevenueLedger l;
    for (int n = 0; n < 3; ++n) {
        for (unsigned d = 1; d <= 5; ++d) {
            l.insert("node " + std::to_string(n), ymd(2018, 2, d),
                     CreditBreakdown::make(u(rng), u(rng), u(rng), std::abs(u(rng))));
        }
    }
    l.write_csv(dir.file("ledger.csv"));
    EXPECT_EQ(read_text(dir.file("ledger.csv")).rfind(
                  "node_id,date,net,credit_e,credit_cap,credit_perf,cost_deg\n", 0),
              0u);
    EXPECT_TRUE(RevenueLedger::read_csv(dir.file("ledger.csv")) == l);
}

TEST(Ledger, RejectsInconsistentNet) {
    TempDir dir;
    write_text(dir.file("l.csv"),
                     "node_id,date,net,credit_e,credit_cap,credit_perf,cost_deg\n"
                     "A,2018-01-01,99,10,0,0,0\n");
    EXPECT_THROW(RevenueLedger::read_csv(dir.file("l.csv")), ParseError);
}

TEST(Ledger, ConcurrentDisjointInsertion) {
    RevenueLedger l;
    std::vector<std::thread> workers;
    for (int w = 0; w < 4; ++w) {
        workers.emplace_back([&l, w] {
            for (unsigned d = 1; d <= 28; ++d) l.insert("W" + std::to_string(w), ymd(2018, 2, d), net_only(d));
        });
    }
    for (auto& t : workers) t.join();
    EXPECT_EQ(l.size(), 4u * 28u);
}

TEST(Aggregate, YearSum) {
    RevenueLedger l;
    l.insert("A", ymd(2018, 1, 1), net_only(10));
    l.insert("A", ymd(2018, 1, 2), net_only(20));
    const auto t = aggregate(l, Grouping::kYear);
    ASSERT_EQ(t.periods, std::vector<std::string>{"2018"});
    EXPECT_EQ(t.at("A", "2018"), 30.0);
}

TEST(Aggregate, SpringExcludesJune) {
    RevenueLedger l;
    l.insert("A", ymd(2018, 3, 15), net_only(4));
    l.insert("A", ymd(2018, 6, 15), net_only(7));
    const auto t = aggregate(l, Grouping::kSeason);
    EXPECT_EQ(t.at("A", "2018-spring"), 4.0);
    EXPECT_EQ(t.at("A", "2018-summer"), 7.0);
}

TEST(Aggregate, EmptyGroupIsZero) {
    RevenueLedger l;
    l.insert("A", ymd(2018, 1, 10), net_only(5));
    l.insert("B", ymd(2018, 3, 10), net_only(6));
    const auto t = aggregate(l, Grouping::kMonth);
    EXPECT_EQ(t.at("A", "2018-02"), 0.0);
    EXPECT_EQ(t.at("B", "2018-01"), 0.0);
    EXPECT_EQ(t.at("B", "2018-03"), 6.0);
}

TEST(Aggregate, WinterUsesSameCalendarYear) {
    RevenueLedger l;
    l.insert("A", ymd(2018, 1, 5), net_only(1));
    l.insert("A", ymd(2018, 2, 5), net_only(2));
    l.insert("A", ymd(2018, 12, 5), net_only(4));
    const auto t = aggregate(l, Grouping::kSeason);
    EXPECT_EQ(t.periods,
              (std::vector<std::string>{"2018-spring", "2018-summer", "2018-autumn", "2018-winter"}));
    EXPECT_EQ(t.at("A", "2018-winter"), 7.0);
}

TEST(Aggregate, MonthsInSeasonOrder) {
    RevenueLedger l;
    l.insert("A", ymd(2018, 1, 1), net_only(1));
    l.insert("A", ymd(2018, 12, 31), net_only(1));
    const auto t = aggregate(l, Grouping::kMonth);
    ASSERT_EQ(t.periods.size(), 12u);
    EXPECT_EQ(t.periods.front(), "2018-03");
    EXPECT_EQ(t.periods[9], "2018-12");
    EXPECT_EQ(t.periods.back(), "2018-02");
}

TEST(Aggregate, WindowRestrictsEntries) {
    RevenueLedger l;
    l.insert("A", ymd(2018, 1, 1), net_only(1));
    l.insert("A", ymd(2018, 1, 2), net_only(2));
    const auto t = aggregate(l, Grouping::kYear, DateRange{ymd(2018, 1, 2), ymd(2018, 1, 2)});
    EXPECT_EQ(t.at("A", "2018"), 2.0);
}

TEST(Aggregate, Errors) {
    EXPECT_THROW(aggregate(RevenueLedger{}, Grouping::kYear), InvalidInput);
    EXPECT_THROW(parse_grouping("fortnight"), InvalidInput);
    EXPECT_EQ(parse_grouping("season"), Grouping::kSeason);
}

TEST(Aggregate, SeasonTotalsMatchDirectSums) {
    std::mt19937_64 rng(5);
    const auto l = random_year_ledger(rng, 3);
    const auto t = aggregate(l, Grouping::kSeason);
    for (const auto& node : t.nodes) {
        double spring = 0.0;
        for (const auto& e : l.entries()) {
            const auto m = static_cast<unsigned>(e.date.month());
            if (e.node_id == node && m >= 3 && m <= 5) spring += e.credits.net;
        }
        EXPECT_NEAR(t.at(node, "2018-spring"), spring, 1e-9 * std::abs(spring));
    }
}

TEST(Percentile, Examples) {
    auto b = percentile_buckets({{"a", 1}, {"b", 2}, {"c", 3}, {"d", 4}, {"e", 5}});
    EXPECT_EQ(b["a"], 0);
    EXPECT_EQ(b["b"], 1);
    EXPECT_EQ(b["c"], 2);
    EXPECT_EQ(b["d"], 3);
    EXPECT_EQ(b["e"], 4);
    EXPECT_EQ(bucket_label(b["e"]), "80-100");

    auto same = percentile_buckets({{"a", 7}, {"b", 7}, {"c", 7}, {"d", 7}});
    for (const auto& [id, k] : same) EXPECT_EQ(k, same.begin()->second);

    EXPECT_EQ(percentile_buckets({{"solo", 3}}).at("solo"), 4);
}

TEST(Percentile, PopulationAndPermutationInvariance) {
    std::mt19937_64 rng(9);
    std::uniform_int_distribution<int> u(0, 20);  // coarse values force ties
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<std::pair<std::string, double>> rows;
        const int n = 2 + trial % 30;
        for (int i = 0; i < n; ++i) rows.emplace_back("n" + std::to_string(i), u(rng));
        std::map<std::string, double> totals(rows.begin(), rows.end());
        const auto b = percentile_buckets(totals);
        EXPECT_EQ(b.size(), totals.size());
        // Relabel nodes so the map iterates in a different order.
        std::map<std::string, double> renamed;
        for (const auto& [id, v] : totals) renamed["z" + std::to_string(1000 - std::stoi(id.substr(1)))] = v;
        const auto b2 = percentile_buckets(renamed);
        for (const auto& [id, v] : totals) {
            EXPECT_EQ(b.at(id), b2.at("z" + std::to_string(1000 - std::stoi(id.substr(1)))));
        }
        // Larger totals never land in a lower bucket.
        for (const auto& [i, vi] : totals) {
            for (const auto& [j, vj] : totals) {
                if (vi < vj) EXPECT_LE(b.at(i), b.at(j));
            }
        }
    }
}

TEST(Stationary, Examples) {
    RevenueLedger l;
    l.insert("A", ymd(2018, 1, 1), net_only(5));
    l.insert("B", ymd(2018, 1, 1), net_only(9));
    auto best = stationary_best(l);
    EXPECT_EQ(best.node_id, "B");
    EXPECT_EQ(best.total, 9.0);

    RevenueLedger tie;
    tie.insert("B", ymd(2018, 1, 1), net_only(7));
    tie.insert("A", ymd(2018, 1, 1), net_only(7));
    EXPECT_EQ(stationary_best(tie).node_id, "A");
    EXPECT_THROW(stationary_best(RevenueLedger{}), InvalidInput);
}

TEST(Stationary, MatchesExhaustiveMax) {
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> u(-20, 100);
    for (int trial = 0; trial < 20; ++trial) {
        RevenueLedger l;
        std::map<std::string, double> sums;
        for (int n = 0; n < 3; ++n) {
            for (unsigned m = 1; m <= 2; ++m) {
                for (unsigned d = 1; d <= 28; ++d) {
                    const double v = u(rng);
                    l.insert("N" + std::to_string(n), ymd(2018, m, d), net_only(v));
                    sums["N" + std::to_string(n)] += v;
                }
            }
        }
        auto it = std::max_element(sums.begin(), sums.end(),
                                   [](const auto& a, const auto& b) { return a.second < b.second; });
        const auto best = stationary_best(l);
        EXPECT_EQ(best.node_id, it->first);
        EXPECT_NEAR(best.total, it->second, 1e-9);
    }
}

TEST(Relocation, MaximumCostWithDefaults) {
    const RelocationCostModel c;
    EXPECT_EQ(c.cost(900.0), 9199.0);
    EXPECT_EQ(c.cost(2500.0), 9199.0);
    EXPECT_NEAR(c.cost(60.0), 4 * 66.65 + 5200.0, 1e-9);
    EXPECT_THROW(c.cost(-1.0), InvalidInput);
}

TEST(Transportable, TwoByTwoExample) {
    const auto t = table({{10, 2}, {3, 8}});
    const auto d = line_distances(t.nodes, 10.0);
    const auto plan = transportable_plan(t, flat_cost(1.0), d, PlanMode::kCostAware);
    EXPECT_EQ(plan.nodes, (std::vector<std::string>{"A", "B"}));
    EXPECT_EQ(plan.net, 17.0);
    ASSERT_EQ(plan.moves.size(), 1u);
    EXPECT_EQ(plan.moves[0].cost, 1.0);
    EXPECT_EQ(enumerate_plans(t, flat_cost(1.0), d), 17.0);
}

TEST(Transportable, ZeroCostBothModesTakeMaxima) {
    const auto t = table({{10, 2, 5}, {3, 8, 5}, {1, 1, 9}});
    const auto d = line_distances(t.nodes, 10.0);
    auto zero = flat_cost(0.0);
    const auto paper = transportable_plan(t, zero, d, PlanMode::kPaper);
    const auto aware = transportable_plan(t, zero, d, PlanMode::kCostAware);
    EXPECT_EQ(paper.net, 27.0);
    EXPECT_EQ(aware.net, 27.0);
}

TEST(Transportable, HugeCostCollapsesToSingleNode) {
    const auto t = table({{10, 2, 5}, {3, 8, 5}, {1, 1, 9}});
    const auto d = line_distances(t.nodes, 10.0);
    const auto plan = transportable_plan(t, flat_cost(1e9), d, PlanMode::kCostAware);
    EXPECT_TRUE(plan.moves.empty());
    EXPECT_EQ(plan.net, 17.0);  // node A: 10 + 2 + 5
}

TEST(Transportable, CostAwareMatchesEnumerationAndBeatsPaperMode) {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(0, 100), cost(0, 60);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t N = 2 + trial % 3, P = 1 + trial % 5;
        std::vector<std::vector<double>> v(N, std::vector<double>(P));
        for (auto& row : v) {
            for (auto& x : row) x = u(rng);
        }
        const auto t = table(v);
        const auto d = line_distances(t.nodes, 7.0);
        const auto c = flat_cost(cost(rng));
        const auto aware = transportable_plan(t, c, d, PlanMode::kCostAware);
        const auto paper = transportable_plan(t, c, d, PlanMode::kPaper);
        EXPECT_NEAR(aware.net, enumerate_plans(t, c, d), 1e-9);
        EXPECT_GE(aware.net, paper.net - 1e-9);
        EXPECT_EQ(aware.net, aware.gross_total - aware.relocation_total);
    }
}

TEST(Transportable, FinerGranularityNeverLoses) {
    std::mt19937_64 rng(33);
    for (int trial = 0; trial < 5; ++trial) {
        const auto l = random_year_ledger(rng, 4);
        const auto d = line_distances(l.node_ids(), 150.0);
        const RelocationCostModel c;
        const auto monthly = transportable_plan(aggregate(l, Grouping::kMonth), c, d, PlanMode::kCostAware);
        const auto seasonal = transportable_plan(aggregate(l, Grouping::kSeason), c, d, PlanMode::kCostAware);
        const auto fixed = stationary_plan(l);
        EXPECT_GE(monthly.net, seasonal.net - 1e-6);
        EXPECT_GE(seasonal.net, fixed.net - 1e-6);
    }
}

TEST(Transportable, MissingDistance) {
    const auto t = table({{10, 2}, {3, 8}});
    const auto d = line_distances({"A"}, 1.0);
    EXPECT_THROW(transportable_plan(t, flat_cost(1), d, PlanMode::kCostAware), InvalidInput);
    // Paper mode charges the maximum distance instead.
    const auto paper = transportable_plan(t, RelocationCostModel{}, d, PlanMode::kPaper);
    ASSERT_EQ(paper.moves.size(), 1u);
    EXPECT_EQ(paper.moves[0].cost, 9199.0);
}

TEST(Transportable, PlanJson) {
    const auto t = table({{10, 2}, {3, 8}});
    const auto plan = transportable_plan(t, flat_cost(1.0), line_distances(t.nodes, 1.0),
                                         PlanMode::kCostAware);
    const auto j = plan.to_json();
    EXPECT_EQ(j["net"].get<double>(), 17.0);
    EXPECT_EQ(j["schedule"].size(), 2u);
    EXPECT_EQ(j["relocations"][0]["to"], "B");
}

TEST(BaseCase, Examples) {
    auto t = table({{3}, {9}, {5}});
    EXPECT_EQ(base_case_select(t, "P0", 2), (std::vector<std::string>{"B", "C"}));
    EXPECT_EQ(base_case_select(t, "P0", 3).size(), 3u);
    EXPECT_EQ(base_case_select(t, "P0", 7).size(), 3u);
    EXPECT_THROW(base_case_select(t, "P9", 1), InvalidInput);
    auto tie = table({{4}, {4}, {1}});
    EXPECT_EQ(base_case_select(tie, "P0", 1), std::vector<std::string>{"A"});
}

TEST(BaseCase, MatchesSortOracle) {
    std::mt19937_64 rng(41);
    std::uniform_real_distribution<double> u(0, 1000);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<std::vector<double>> v(10, std::vector<double>(1));
        for (auto& row : v) row[0] = u(rng);
        const auto t = table(v);
        std::vector<std::pair<double, std::string>> sorted;
        for (std::size_t i = 0; i < 10; ++i) sorted.emplace_back(-v[i][0], t.nodes[i]);
        std::sort(sorted.begin(), sorted.end());
        std::vector<std::string> expect;
        for (int k = 0; k < 5; ++k) expect.push_back(sorted[k].second);
        EXPECT_EQ(base_case_select(t, "P0", 5), expect);
    }
}

TEST(DifferenceCurve, EndsAtOneAndMatchesHandFraction) {
    RevenueLedger l;
    // Two regimes: 2 days with a large gap, 8 days with a small one.
    for (unsigned d = 1; d <= 10; ++d) {
        l.insert("TOP", ymd(2018, 1, d), net_only(d <= 2 ? 400.0 : 110.0));
        l.insert("LOW", ymd(2018, 1, d), net_only(100.0));
    }
    const auto c = daily_difference(l, "TOP", "LOW");
    ASSERT_EQ(c.cumulative_share.size(), 10u);
    EXPECT_EQ(c.cumulative_share.back(), 1.0);
    // Total 680; the two big days give 600/680 = 88%, three days 610/680 = 89.7%
    // and four days 620/680 = 91.2%.
    EXPECT_DOUBLE_EQ(c.day_fraction_for_share(0.8), 0.2);
    EXPECT_DOUBLE_EQ(c.day_fraction_for_share(0.9), 0.4);
    EXPECT_TRUE(daily_difference(l, "LOW", "LOW").days.empty());
}
