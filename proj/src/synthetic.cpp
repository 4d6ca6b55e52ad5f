#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include <fmt/format.h>

#include "bess/errors.hpp"
#include "bess/market_data.hpp"
#include "bess/numeric.hpp"

namespace bess {
namespace {

constexpr std::uint64_t kStreamSystem = 1;
constexpr std::uint64_t kStreamRegulation = 2;
constexpr std::uint64_t kStreamRegistry = 3;
constexpr std::uint64_t kStreamProfile = 4;
constexpr std::uint64_t kStreamNode = 100;

// Published prices carry whole cents.
double cents(double v) { return std::round(v * 100.0) / 100.0; }

std::mt19937_64 stream(std::uint64_t seed, std::uint64_t tag) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(tag), static_cast<std::uint32_t>(tag >> 32)};
    return std::mt19937_64(seq);
}

std::vector<NodeRecord> synthetic_registry(std::uint64_t seed, std::size_t count) {
    static const char* kZones[] = {"AEP", "PECO", "DOM", "COMED"};
    auto rng = stream(seed, kStreamRegistry);
    std::uniform_real_distribution<double> lat(37.0, 42.0);
    std::uniform_real_distribution<double> lon(-88.0, -75.0);
    std::vector<NodeRecord> out;
    for (std::size_t i = 0; i < count; ++i) {
        NodeRecord r;
        r.node_id = fmt::format("N{:03d}", i);
        r.display_name = fmt::format("SYNTH NODE {}", i);
        r.latitude = lat(rng);
        r.longitude = lon(rng);
        r.zone = kZones[i % 4];
        out.push_back(std::move(r));
    }
    return out;
}

}  // namespace

VolatilityProfile VolatilityProfile::constant(std::vector<double> sigmas) {
    VolatilityProfile p;
    for (double s : sigmas) p.nodes.push_back({VolatilityKnot{0, s}});
    return p;
}

double VolatilityProfile::sigma(std::size_t node, int day) const {
    const auto& knots = nodes.at(node);
    if (knots.empty()) return 0.0;
    if (day <= knots.front().day) return knots.front().sigma;
    for (std::size_t k = 1; k < knots.size(); ++k) {
        if (day <= knots[k].day) {
            const auto& a = knots[k - 1];
            const auto& b = knots[k];
            const double t = static_cast<double>(day - a.day) / static_cast<double>(b.day - a.day);
            return a.sigma + t * (b.sigma - a.sigma);
        }
    }
    return knots.back().sigma;
}

SyntheticData generate_synthetic(const SyntheticOptions& opt) {
    if (opt.node_count < 1) throw InvalidInput("synthetic dataset needs at least one node");
    if (opt.days < 1) throw InvalidInput("synthetic dataset needs at least one day");

    std::vector<NodeRecord> nodes =
        opt.nodes.empty() ? synthetic_registry(opt.seed, opt.node_count) : opt.nodes;
    if (nodes.size() != opt.node_count) {
        throw InvalidInput("explicit registry size differs from node_count");
    }

    VolatilityProfile profile = opt.profile;
    if (profile.nodes.empty()) {
        auto rng = stream(opt.seed, kStreamProfile);
        std::uniform_real_distribution<double> u(2.0, 40.0);
        std::vector<double> sig;
        for (std::size_t i = 0; i < opt.node_count; ++i) sig.push_back(u(rng));
        profile = VolatilityProfile::constant(std::move(sig));
    }
    if (profile.nodes.size() != opt.node_count) {
        throw InvalidInput("volatility profile must list every node");
    }
    for (const auto& knots : profile.nodes) {
        for (std::size_t k = 0; k < knots.size(); ++k) {
            if (!(knots[k].sigma >= 0.0)) throw InvalidInput("volatility must be non-negative");
            if (k > 0 && knots[k].day <= knots[k - 1].day) {
                throw InvalidInput("volatility knots must have increasing days");
            }
        }
    }

    const std::size_t hours = static_cast<std::size_t>(opt.days) * 24;
    const HourWindow window{start_of(opt.start), start_of(opt.start) + std::chrono::hours{hours}};
    std::normal_distribution<double> normal(0.0, 1.0);

    // System energy price: diurnal shape, daily level shift and AR(1) hourly noise.
    std::vector<double> system(hours);
    {
        auto rng = stream(opt.seed, kStreamSystem);
        double ar = 0.0;
        double level = 0.0;
        for (std::size_t h = 0; h < hours; ++h) {
            const int hod = static_cast<int>(h % 24);
            if (hod == 0) level = 4.0 * normal(rng);
            ar = 0.7 * ar + 3.0 * normal(rng);
            system[h] = cents(32.0 + 12.0 * std::sin(2.0 * std::numbers::pi * (hod - 9) / 24.0) + level + ar);
        }
    }

    MarketDataset::Series series;
    for (std::size_t i = 0; i < opt.node_count; ++i) {
        auto rng = stream(opt.seed, kStreamNode + i);
        std::vector<double> lmp(hours);
        for (std::size_t h = 0; h < hours; ++h) {
            const double sigma = profile.sigma(i, static_cast<int>(h / 24));
            const double z = normal(rng);
            lmp[h] = cents(system[h] + sigma * z);
        }
        series.lmp.push_back(std::move(lmp));
    }

    // Regulation prices and a 2-second AGC trace, aggregated hour by hour.
    RegSignalTrace trace;
    trace.start = Seconds{window.begin};
    {
        auto rng = stream(opt.seed, kStreamRegulation);
        double rega = 0.0;
        double regd = 0.0;
        std::vector<double> hour_a(kSamplesPerHour), hour_d(kSamplesPerHour);
        double prev_a = 0.0, prev_d = 0.0;
        for (std::size_t h = 0; h < hours; ++h) {
            const int hod = static_cast<int>(h % 24);
            const double cap = 14.0 + 6.0 * std::sin(2.0 * std::numbers::pi * (hod - 7) / 24.0) +
                               4.0 * normal(rng);
            const double perf = 1.5 + 0.8 * normal(rng);
            series.rmccp.push_back(cents(std::max(0.0, cap)));
            series.rmpcp.push_back(cents(std::max(0.0, perf)));

            for (int s = 0; s < kSamplesPerHour; ++s) {
                rega = std::clamp(rega + 0.02 * normal(rng), -1.0, 1.0);
                regd = std::clamp(0.97 * regd + 0.06 * normal(rng), -1.0, 1.0);
                hour_a[s] = rega;
                hour_d[s] = regd;
            }
            CompensatedSum up, down, mil_a, mil_d;
            for (int s = 0; s < kSamplesPerHour; ++s) {
                const double d = hour_d[s];
                if (d > 0.0) up.add(d);
                if (d < 0.0) down.add(-d);
                if (s > 0 || h > 0) {
                    const double pa = s > 0 ? hour_a[s - 1] : prev_a;
                    const double pd = s > 0 ? hour_d[s - 1] : prev_d;
                    mil_d.add(std::abs(d - pd));
                    mil_a.add(std::abs(hour_a[s] - pa));
                }
            }
            prev_a = hour_a.back();
            prev_d = hour_d.back();
            series.regd_up.push_back(kSampleHours * up.value());
            series.regd_down.push_back(kSampleHours * down.value());
            series.mileage_rega.push_back(mil_a.value());
            series.mileage_regd.push_back(mil_d.value());
            series.beta.push_back(mil_a.value() > 0.0 ? mil_d.value() / mil_a.value() : 0.0);
            if (opt.keep_trace) {
                trace.rega.insert(trace.rega.end(), hour_a.begin(), hour_a.end());
                trace.regd.insert(trace.regd.end(), hour_d.begin(), hour_d.end());
            }
        }
    }

    std::vector<Hour> flagged;
    for (std::size_t h = 0; h < hours; ++h) {
        if (series.mileage_rega[h] == 0.0) flagged.push_back(window.begin + std::chrono::hours{h});
    }
    SyntheticData out{MarketDataset(std::move(nodes), window, std::move(series), std::move(flagged)),
                      std::move(system), std::nullopt};
    if (opt.keep_trace) out.trace = std::move(trace);
    return out;
}

MarketDataset generate_synthetic_dataset(std::uint64_t seed, std::size_t node_count, int days,
                                         const VolatilityProfile& profile) {
    SyntheticOptions opt;
    opt.seed = seed;
    opt.node_count = node_count;
    opt.days = days;
    opt.profile = profile;
    return generate_synthetic(opt).dataset;
}

}  // namespace bess
