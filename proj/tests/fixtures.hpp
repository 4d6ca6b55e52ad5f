#pragma once

#include <chrono>

#include "bess/market_data.hpp"

// Backtest fixtures: four nodes from 2017-01-01 through 2019-02-28 with the
// backtest month February 2019 and its prior month January 2019.
namespace fixtures {

inline bess::Date day(int y, unsigned m, unsigned d) {
    return bess::Date{std::chrono::year{y} / std::chrono::month{m} / std::chrono::day{d}};
}

inline constexpr int kFixtureDays = 789;

inline int day_index(bess::Date d) {
    return static_cast<int>((std::chrono::sys_days{d} - std::chrono::sys_days{day(2017, 1, 1)}).count());
}

inline bess::MarketDataset make(const bess::VolatilityProfile& profile, std::uint64_t seed) {
    bess::SyntheticOptions opt;
    opt.seed = seed;
    opt.node_count = profile.nodes.size();
    opt.days = kFixtureDays;
    opt.start = day(2017, 1, 1);
    opt.profile = profile;
    return bess::generate_synthetic(opt).dataset;
}

// Node N000 is far more volatile than the others in every month.
inline bess::MarketDataset dominant(std::uint64_t seed = 11) {
    return make(bess::VolatilityProfile::constant({60.0, 12.0, 10.0, 8.0}), seed);
}

// N000 holds steady at 42 $/MWh; N001 is quiet until November 2018, then climbs
// about 14 $/MWh per month: below N000 on average in January 2019, well above
// it in February.
inline bess::MarketDataset regime_shift(std::uint64_t seed = 11) {
    bess::VolatilityProfile p;
    p.nodes.push_back({{0, 42.0}});
    const int ramp = day_index(day(2018, 11, 1));
    const int end = kFixtureDays;
    const double slope = 14.0 / 30.0;
    p.nodes.push_back({{0, 4.0}, {ramp, 4.0}, {end, 4.0 + slope * (end - ramp)}});
    p.nodes.push_back({{0, 10.0}});
    p.nodes.push_back({{0, 7.0}});
    return make(p, seed);
}

}  // namespace fixtures
