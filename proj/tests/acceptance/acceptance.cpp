// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.
// Usage: acceptance [bundled-config.yaml]

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <fmt/ranges.h>
#include <spdlog/spdlog.h>

#include "bess/bess_model.hpp"
#include "bess/cluster.hpp"
#include "bess/config.hpp"
#include "bess/dispatch.hpp"
#include "bess/errors.hpp"
#include "bess/forecast.hpp"
#include "bess/pipeline.hpp"
#include "bess/placement.hpp"
#include "bess/revenue.hpp"
#include "fixtures.hpp"
#include "support.hpp"

using namespace bess;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

struct Criterion {
    int id;
    std::string name;
    double limit_seconds;  // 0: no runtime bound
    std::function<Outcome()> run;
};

// ---- independent checks on dispatch schedules ----

std::vector<std::string> check_schedule(const DispatchProblem& p, const DispatchSchedule& s) {
    constexpr double tol = 1e-9;
    std::vector<std::string> bad;
    const std::size_t T = p.lmp.size();
    if (s.p_e_ch.size() != T || s.p_e_dis.size() != T || s.p_reg.size() != T || s.soc.size() != T + 1) {
        bad.push_back("lengths");
        return bad;
    }
    const double pmax = p.spec.p_max;
    for (std::size_t t = 0; t < T; ++t) {
        const double ch = s.p_e_ch[t], dis = s.p_e_dis[t], reg = s.p_reg[t];
        if (ch < 0.0 || ch > pmax + tol) bad.push_back(fmt::format("h{} charge bound", t));
        if (dis < 0.0 || dis > pmax + tol) bad.push_back(fmt::format("h{} discharge bound", t));
        if (ch * dis != 0.0) bad.push_back(fmt::format("h{} simultaneous charge and discharge", t));
        if (reg < 0.0 || reg > pmax + tol) bad.push_back(fmt::format("h{} regulation bound", t));
        if (p.mode == DispatchMode::kEnergyOnly && reg != 0.0) bad.push_back(fmt::format("h{} regulation in energy-only", t));
        if (ch + reg > pmax + tol) bad.push_back(fmt::format("h{} charge + regulation", t));
        if (dis + reg > pmax + tol) bad.push_back(fmt::format("h{} discharge + regulation", t));
        double flow_ch = ch, flow_dis = dis;
        if (p.mode == DispatchMode::kJoint) {
            flow_ch += reg * p.regd_down[t];
            flow_dis += reg * p.regd_up[t];
        }
        const double next = s.soc[t] + (flow_ch * p.spec.eta_c - flow_dis / p.spec.eta_d) / p.spec.e_max;
        if (std::abs(next - s.soc[t + 1]) > tol) bad.push_back(fmt::format("h{} SOC transition", t));
    }
    for (std::size_t t = 0; t <= T; ++t) {
        if (s.soc[t] < -tol || s.soc[t] > 1.0 + tol) bad.push_back(fmt::format("SOC[{}] bound", t));
    }
    if (std::abs(s.soc[0] - p.spec.s0) > tol) bad.push_back("initial SOC");
    if (std::abs(s.soc[T] - s.soc[0]) > tol) bad.push_back("terminal SOC");
    return bad;
}

// Credits written out from the schedule and raw prices.
CreditBreakdown recompute_credits(const DispatchProblem& p, const DispatchSchedule& s) {
    const auto& b = p.spec;
    const double deg = b.deg_speed * b.storage_cost * 0.5 / (1.0 - b.soc_eol);
    long double energy = 0, cap = 0, perf = 0, wear = 0;
    for (std::size_t t = 0; t < p.lmp.size(); ++t) {
        energy += p.lmp[t] * (s.p_e_dis[t] - s.p_e_ch[t]);
        double flow_ch = s.p_e_ch[t], flow_dis = s.p_e_dis[t];
        if (p.mode == DispatchMode::kJoint) {
            cap += s.p_reg[t] * p.rmccp[t] * b.perf_score;
            perf += s.p_reg[t] * p.rmpcp[t] * p.beta[t] * b.perf_score;
            flow_ch += s.p_reg[t] * p.regd_down[t];
            flow_dis += s.p_reg[t] * p.regd_up[t];
        }
        wear += (flow_ch * b.eta_c + flow_dis / b.eta_d) * deg;
    }
    CreditBreakdown c;
    c.credit_energy = static_cast<double>(energy);
    c.credit_capability = static_cast<double>(cap);
    c.credit_performance = static_cast<double>(perf);
    c.cost_degradation = static_cast<double>(wear);
    c.net = static_cast<double>(energy + cap + perf - wear);
    return c;
}

DispatchProblem random_dispatch(std::mt19937_64& rng, DispatchMode mode) {
    std::uniform_real_distribution<double> lmp(-30, 120), cap(0, 40), perf(0, 5), beta(0, 3), frac(0, 0.3);
    std::uniform_int_distribution<int> horizon(1, 4), pick(0, 3);
    static const double kPower[] = {1.0, 2.0, 5.0, 10.0};
    static const double kEnergy[] = {1.0, 4.0, 10.0, 20.0};
    static const double kSoc[] = {0.0, 0.25, 0.5, 1.0};
    DispatchProblem p;
    p.spec.p_max = kPower[pick(rng)];
    p.spec.e_max = kEnergy[pick(rng)];
    p.spec.s0 = kSoc[pick(rng)];
    p.spec.eta_c = std::uniform_real_distribution<double>(0.85, 1.0)(rng);
    p.spec.eta_d = std::uniform_real_distribution<double>(0.85, 1.0)(rng);
    p.spec.deg_speed = std::uniform_real_distribution<double>(0.0, 6e-5)(rng);
    p.mode = mode;
    p.grid = {0.25 * p.spec.e_max, 0.25 * p.spec.p_max};
    const int T = horizon(rng);
    for (int t = 0; t < T; ++t) {
        p.lmp.push_back(lmp(rng));
        if (mode == DispatchMode::kJoint) {
            p.rmccp.push_back(cap(rng));
            p.rmpcp.push_back(perf(rng));
            p.beta.push_back(beta(rng));
            p.regd_up.push_back(frac(rng));
            p.regd_down.push_back(frac(rng));
        }
    }
    return p;
}

// ---- shared sweep for criteria 4 to 6 ----

Date day(int y, unsigned m, unsigned d) { return fixtures::day(y, m, d); }

// Ten nodes over January to March 2018. Three nodes take turns as the most
// volatile one, one per month; the rest stay quiet.
MarketDataset shifting_regimes() {
    VolatilityProfile profile;
    const double quiet[] = {9.0, 12.0, 7.0, 11.0, 14.0, 6.0, 10.0, 8.0, 13.0, 5.0};
    auto months = [](double jan, double feb, double mar) {
        return std::vector<VolatilityKnot>{{0, jan}, {30, jan}, {31, feb}, {58, feb}, {59, mar}, {89, mar}};
    };
    for (int i = 0; i < 10; ++i) {
        const double q = quiet[i];
        if (i == 0) profile.nodes.push_back(months(55.0, q, q));
        else if (i == 3) profile.nodes.push_back(months(q, 55.0, q));
        else if (i == 7) profile.nodes.push_back(months(q, q, 55.0));
        else profile.nodes.push_back(months(q, q, q));
    }
    SyntheticOptions opt;
    opt.seed = 2018;
    opt.node_count = 10;
    opt.days = 90;
    opt.start = day(2018, 1, 1);
    opt.profile = profile;
    return generate_synthetic(opt).dataset;
}

struct SweepRecord {
    std::size_t schedules = 0;
    std::size_t violations = 0;
    std::string first_violation;
    double worst_credit_gap = 0.0;
    RevenueLedger ledger;
};

const MarketDataset& sweep_data() {
    static const MarketDataset data = shifting_regimes();
    return data;
}

const SweepRecord& sweep() {
    static const SweepRecord record = [] {
        SweepRecord r;
        const auto& data = sweep_data();
        const BessSpec spec;
        for (std::size_t n = 0; n < data.node_count(); ++n) {
            for (const auto& d : data.days()) {
                for (auto mode : {DispatchMode::kEnergyOnly, DispatchMode::kJoint}) {
                    const auto p = DispatchProblem::from_dataset(data, n, d, spec, mode);
                    const auto s = solve(p);
                    ++r.schedules;
                    const auto bad = check_schedule(p, s);
                    r.violations += bad.size();
                    if (!bad.empty() && r.first_violation.empty()) {
                        r.first_violation = fmt::format("{} {}: {}", data.nodes()[n].node_id, format_date(d), bad.front());
                    }
                    const auto ref = recompute_credits(p, s);
                    for (double gap : {s.breakdown.net - ref.net, s.objective - ref.net,
                                       s.breakdown.credit_energy - ref.credit_energy,
                                       s.breakdown.credit_capability - ref.credit_capability,
                                       s.breakdown.credit_performance - ref.credit_performance,
                                       s.breakdown.cost_degradation - ref.cost_degradation}) {
                        r.worst_credit_gap = std::max(r.worst_credit_gap, std::abs(gap));
                    }
                    if (mode == DispatchMode::kJoint) r.ledger.insert(data.nodes()[n].node_id, d, s.breakdown);
                }
            }
        }
        return r;
    }();
    return record;
}

// ---- placement oracle ----

struct Enumerated {
    bool feasible = false;
    double objective = 0.0;
};

Enumerated enumerate(const PlacementProblem& p) {
    Enumerated best;
    const auto n = p.size();
    for (unsigned mask = 0; mask < (1u << n); ++mask) {
        if (std::popcount(mask) != p.n_es) continue;
        std::map<int, int> per_cluster;
        bool ok = true;
        double value = 0.0;
        for (std::size_t i = 0; i < n && ok; ++i) {
            if (!(mask >> i & 1u)) continue;
            value += p.sigma_forecast[i];
            ok = ++per_cluster[p.cluster[i]] <= p.max_per_cluster;
            for (std::size_t j = 0; j < i && ok; ++j) {
                ok = !(mask >> j & 1u) || p.distance(i, j) >= p.min_distance;
            }
        }
        if (ok && (!best.feasible || value > best.objective)) best = {true, value};
    }
    return best;
}

PlacementProblem random_placement(std::mt19937_64& rng) {
    std::uniform_int_distribution<int> size(1, 12);
    const int n = size(rng);
    const int n_es = std::uniform_int_distribution<int>(1, std::min(4, n))(rng);
    const int clusters = std::uniform_int_distribution<int>(1, 5)(rng);
    std::uniform_int_distribution<int> label(0, clusters - 1);
    std::uniform_real_distribution<double> sigma(0.0, 40.0), xy(0.0, 300.0);
    PlacementProblem p;
    std::vector<std::pair<double, double>> at;
    for (int i = 0; i < n; ++i) {
        p.node_ids.push_back(fmt::format("P{:02d}", i));
        p.sigma_forecast.push_back(std::round(sigma(rng) * 2.0) / 2.0);
        p.cluster.push_back(label(rng));
        at.emplace_back(xy(rng), xy(rng));
    }
    p.distance = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) p.distance(i, j) = std::hypot(at[i].first - at[j].first, at[i].second - at[j].second);
    p.n_es = n_es;
    p.max_per_cluster = std::uniform_int_distribution<int>(1, 2)(rng);
    p.min_distance = std::uniform_real_distribution<double>(20.0, 120.0)(rng);
    return p;
}

// ---- criteria ----

Outcome degradation() {
    const double rate = degradation_rate(BessSpec{});
    return {std::abs(rate - 7.5) <= 1e-12, fmt::format("DEG_rate = {:.17g} $/MWh", rate)};
}

Outcome relocation() {
    const double cost = RelocationCostModel{}.cost(900.0);
    return {cost == 9199.0, fmt::format("cost at 900 miles = {:.17g} $", cost)};
}

Outcome dispatch_oracle() {
    std::mt19937_64 rng(3);
    int mismatches = 0;
    for (int i = 0; i < 200; ++i) {
        const auto mode = i % 2 == 0 ? DispatchMode::kEnergyOnly : DispatchMode::kJoint;
        const auto p = random_dispatch(rng, mode);
        const double dp = mode == DispatchMode::kEnergyOnly ? solve_energy_only(p).objective : solve_joint(p).objective;
        const double oracle = brute_force_oracle(p, p.grid.power_step_mw, p.horizon()).objective;
        if (dp != oracle) ++mismatches;
    }
    return {mismatches == 0, fmt::format("200 instances (100 energy-only, 100 joint), {} objective mismatches", mismatches)};
}

Outcome schedule_validity() {
    const auto& r = sweep();
    std::string detail = fmt::format("{} schedules (10 nodes x 90 days, both modes), {} violations", r.schedules, r.violations);
    if (!r.first_violation.empty()) detail += "; first: " + r.first_violation;
    return {r.violations == 0 && r.schedules == 1800, detail};
}

Outcome credit_identity() {
    const auto& r = sweep();
    return {r.worst_credit_gap <= 1e-6, fmt::format("largest gap between solver and recomputed credits {:.3g} $", r.worst_credit_gap)};
}

Outcome transportable_ordering() {
    const auto& ledger = sweep().ledger;
    const auto distances = DistanceMatrix::from_registry(sweep_data().nodes());
    const RelocationCostModel cost;
    const auto year = stationary_plan(ledger);
    const auto season = transportable_plan(aggregate(ledger, Grouping::kSeason), cost, distances, PlanMode::kCostAware);
    const auto month = transportable_plan(aggregate(ledger, Grouping::kMonth), cost, distances, PlanMode::kCostAware);
    const bool ok = month.net > season.net && season.net > year.net;
    return {ok, fmt::format("12L12M {:.2f} > 4L4S {:.2f} > 1L1Y {:.2f} ({} and {} relocations)", month.net, season.net,
                            year.net, month.moves.size(), season.moves.size())};
}

Outcome placement_exactness() {
    std::mt19937_64 rng(7);
    int mismatches = 0, feasible = 0;
    for (int i = 0; i < 100; ++i) {
        const auto p = random_placement(rng);
        const auto truth = enumerate(p);
        bool solved = false;
        double objective = 0.0;
        try {
            objective = solve_placement(p).objective;
            solved = true;
        } catch (const InfeasibleError&) {
        }
        feasible += truth.feasible;
        const bool same = solved == truth.feasible &&
                          (!solved || std::abs(objective - truth.objective) <= 1e-9 * std::max(1.0, truth.objective));
        if (!same) ++mismatches;
    }
    return {mismatches == 0, fmt::format("100 problems ({} feasible), {} disagreements with enumeration", feasible, mismatches)};
}

Outcome linearization() {
    std::mt19937_64 rng(13);
    std::size_t assignments = 0;
    int disagreements = 0, wrong = 0;
    for (int trial = 0; trial < 30; ++trial) {
        auto p = random_placement(rng);
        const int n = static_cast<int>(std::min<std::size_t>(p.size(), 10));
        p.node_ids.resize(n);
        p.sigma_forecast.resize(n);
        p.cluster.resize(n);
        p.distance.conservativeResize(n, n);
        p.n_es = std::min(p.n_es, n);
        for (unsigned mask = 0; mask < (1u << n); ++mask) {
            std::vector<int> x(n);
            for (int i = 0; i < n; ++i) x[i] = mask >> i & 1u;
            const auto report = verify_linearization(p, x);
            ++assignments;
            if (!report.agree()) ++disagreements;
            bool spaced = true;
            for (int i = 0; i < n; ++i)
                for (int j = i + 1; j < n; ++j) spaced = spaced && !(x[i] && x[j] && p.distance(i, j) < p.min_distance);
            if (report.bilinear_feasible != spaced) ++wrong;
        }
    }
    return {disagreements == 0 && wrong == 0,
            fmt::format("{} assignments over 30 problems (N <= 10), {} disagreements, {} misclassified", assignments,
                        disagreements, wrong)};
}

Outcome arima_recovery() {
    std::mt19937_64 rng(300);
    std::normal_distribution<double> noise(0.0, 1.0);
    std::vector<double> y;
    double v = 0.0;
    for (int t = 0; t < 500; ++t) {
        v = 0.6 * v + noise(rng);
        if (t >= 200) y.push_back(v);
    }
    const double m = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
    double num = 0.0, den = 0.0;
    for (std::size_t t = 0; t < y.size(); ++t) {
        den += (y[t] - m) * (y[t] - m);
        if (t > 0) num += (y[t] - m) * (y[t - 1] - m);
    }
    const double yule_walker = num / den;
    const double phi = fit(y, {1, 0, 0}).phi.at(0);
    const bool ok = std::abs(phi - 0.6) <= 0.15 && std::abs(phi - yule_walker) <= 0.05;
    return {ok, fmt::format("fitted phi {:.4f}, Yule-Walker {:.4f}, truth 0.6", phi, yule_walker)};
}

// True when the two labelings induce the same partition.
bool same_partition(const std::vector<int>& a, const std::vector<int>& b) {
    std::map<int, int> ab, ba;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (ab.emplace(a[i], b[i]).first->second != b[i]) return false;
        if (ba.emplace(b[i], a[i]).first->second != a[i]) return false;
    }
    return true;
}

Outcome kmeans_properties() {
    std::mt19937_64 rng(17);
    int increases = 0;
    for (int run = 0; run < 1000; ++run) {
        const int n = std::uniform_int_distribution<int>(2, 60)(rng);
        const int dim = std::uniform_int_distribution<int>(1, 4)(rng);
        const int k = std::uniform_int_distribution<int>(1, std::min(8, n))(rng);
        Eigen::MatrixXd pts(n, dim);
        std::normal_distribution<double> g(0.0, 1.0);
        const int centers = std::uniform_int_distribution<int>(1, 5)(rng);
        for (int i = 0; i < n; ++i)
            for (int d = 0; d < dim; ++d) pts(i, d) = 4.0 * ((i % centers) + d % 2) + g(rng);
        Eigen::MatrixXd init;
        if (run % 2 == 0) {
            init = kmeans_plus_plus(pts, k, rng());
        } else {
            init.resize(k, dim);
            for (int c = 0; c < k; ++c)
                for (int d = 0; d < dim; ++d) init(c, d) = 10.0 * g(rng);
        }
        const auto result = lloyd(pts, init);
        for (std::size_t i = 1; i < result.history.size(); ++i) increases += result.history[i] > result.history[i - 1];
    }

    int wrong = 0;
    for (int trial = 0; trial < 10; ++trial) {
        const double sigma = 1.0;
        const double centers[3][2] = {{0.0, 0.0}, {10.0 * sigma, 0.0}, {5.0 * sigma, 10.0 * sigma}};
        std::normal_distribution<double> g(0.0, sigma);
        Eigen::MatrixXd pts(150, 2);
        std::vector<int> truth(150);
        for (int i = 0; i < 150; ++i) {
            truth[i] = i % 3;
            pts(i, 0) = centers[i % 3][0] + g(rng);
            pts(i, 1) = centers[i % 3][1] + g(rng);
        }
        if (!same_partition(kmeans(pts, 3, rng()).labels, truth)) ++wrong;
    }
    return {increases == 0 && wrong == 0,
            fmt::format("1000 Lloyd runs, {} inertia increases; {} of 10 three-blob sets misrecovered", increases, wrong)};
}

RunConfig backtest_config() {
    auto c = default_config();
    c.n_es = 1;
    c.workers = 1;
    c.window_start = day(2019, 1, 1);
    c.window_end = day(2019, 2, 28);
    return c;
}

double ledger_month_sum(const RevenueLedger& ledger, const std::string& node, Date month) {
    long double sum = 0;
    for (const auto& e : ledger.entries()) {
        if (e.node_id == node && e.date >= month && e.date < day(2019, 3, 1)) sum += e.credits.net;
    }
    return static_cast<double>(sum);
}

Outcome backtest_protocol() {
    const auto feb = day(2019, 2, 1);
    TempDir dir;

    auto c = backtest_config();
    const auto dominant = fixtures::dominant();
    const auto ledger_a = run_sweep(dominant, c, dir.file("a.csv")).ledger;
    const auto a = run_backtest(dominant, ledger_a, {feb}, c).at(0);
    const double sum_a = ledger_month_sum(ledger_a, "N000", feb);
    const bool same_set = a.base_nodes == a.proposed_nodes && a.base_nodes == std::vector<std::string>{"N000"};
    const bool sums = a.base_revenue == sum_a && a.proposed_revenue == sum_a;

    c.arima_orders = ArimaOrders{1, 1, 0};
    const auto shift = fixtures::regime_shift();
    const auto ledger_b = run_sweep(shift, c, dir.file("b.csv")).ledger;
    const auto b = run_backtest(shift, ledger_b, {feb}, c).at(0);

    return {same_set && sums && b.proposed_revenue >= b.base_revenue,
            fmt::format("dominant: {} vs {}, revenue {:.2f} = ledger {:.2f}; regime shift: proposed {} {:.2f} vs base {} {:.2f}",
                        fmt::join(a.proposed_nodes, ";"), fmt::join(a.base_nodes, ";"), a.base_revenue, sum_a,
                        fmt::join(b.proposed_nodes, ";"), b.proposed_revenue, fmt::join(b.base_nodes, ";"),
                        b.base_revenue)};
}

std::map<std::string, std::string> output_files(const fs::path& root) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(root)) {
        const auto ext = e.path().extension();
        if (e.is_regular_file() && (ext == ".csv" || ext == ".json")) {
            out[fs::relative(e.path(), root).string()] = read_text(e.path().string());
        }
    }
    return out;
}

Outcome determinism(const std::string& config_path) {
    TempDir dir;
    const auto data_dir = (fs::path(config_path).parent_path() / "synthetic").string();
    std::vector<std::map<std::string, std::string>> runs;
    for (const char* name : {"first", "second"}) {
        ConfigLoader loader;
        loader.merge_file(config_path);
        loader.set("data.dir", data_dir);
        loader.set("output.dir", dir.file(name));
        const Invocation inv{loader.resolve(), loader.snapshot()};
        const auto dec = day(2018, 12, 1);
        for (int rc : {cmd_sweep(inv), cmd_report(inv), cmd_forecast(inv, dec), cmd_cluster(inv, dec), cmd_place(inv, dec),
                       cmd_backtest(inv, {day(2019, 1, 1), day(2019, 2, 1), day(2019, 3, 1)})}) {
            if (rc != kExitOk) return {false, fmt::format("{} run exited with {}", name, rc)};
        }
        runs.push_back(output_files(dir.path() / name));
    }
    std::size_t differing = 0;
    for (const auto& [file, text] : runs[0]) {
        const auto it = runs[1].find(file);
        differing += it == runs[1].end() || it->second != text;
    }
    differing += runs[1].size() > runs[0].size() ? runs[1].size() - runs[0].size() : 0;
    return {differing == 0 && !runs[0].empty(),
            fmt::format("{} CSV/JSON outputs compared, {} differ", runs[0].size(), differing)};
}

}  // namespace

int main(int argc, char** argv) {
    spdlog::set_level(spdlog::level::warn);
    const std::string config = argc > 1 ? argv[1] : BESS_BUNDLED_CONFIG;

    const std::vector<Criterion> criteria = {
        {1, "degradation rate", 1e-3, degradation},
        {2, "relocation maximum", 0, relocation},
        {3, "dispatch oracle equivalence", 60, dispatch_oracle},
        {4, "schedule validity", 300, schedule_validity},
        {5, "credit identity", 0, credit_identity},
        {6, "transportable ordering", 0, transportable_ordering},
        {7, "placement exactness", 30, placement_exactness},
        {8, "linearization equivalence", 10, linearization},
        {9, "ARIMA recovery", 5, arima_recovery},
        {10, "k-means", 30, kmeans_properties},
        {11, "backtest protocol", 120, backtest_protocol},
        {12, "end-to-end determinism", 0, [&] { return determinism(config); }},
    };

    int failed = 0;
    for (const auto& c : criteria) {
        Outcome o;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("error: ") + e.what()};
        }
        const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (c.limit_seconds > 0 && seconds >= c.limit_seconds) {
            o.pass = false;
            o.detail += fmt::format("; over the {} s limit", c.limit_seconds);
        }
        failed += !o.pass;
        std::printf("%s [%2d] %s: %s (%.3f s)\n", o.pass ? "PASS" : "FAIL", c.id, c.name.c_str(), o.detail.c_str(), seconds);
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
