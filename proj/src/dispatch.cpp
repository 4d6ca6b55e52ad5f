#include "bess/dispatch.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "bess/csv.hpp"
#include "bess/errors.hpp"

namespace bess {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Number of grid steps of size `step` in `total`; throws unless it divides exactly.
std::size_t grid_count(double total, double step, const char* what) {
    if (!(step > 0.0) || !std::isfinite(step)) {
        throw InvalidInput(fmt::format("{} step must be positive", what));
    }
    const double ratio = total / step;
    const double n = std::round(ratio);
    if (n < 1.0 || std::abs(ratio - n) > 1e-9 * std::max(1.0, n)) {
        throw InvalidInput(fmt::format("{} step {} does not divide {}", what, step, total));
    }
    return static_cast<std::size_t>(n);
}

// Shared discretization: SOC levels k * e_max / n_soc and regulation offers
// j * p_max / n_reg. Energy-market power is whatever makes the SOC transition
// land exactly on the next grid level.
struct Lattice {
    std::size_t n_soc = 0;
    std::size_t n_reg = 0;  // number of nonzero regulation levels
    std::size_t k0 = 0;
    bool snapped = false;
    double soc_step_mwh = 0.0;

    Lattice(const DispatchProblem& p, double power_step) {
        n_soc = grid_count(p.spec.e_max, p.grid.soc_step_mwh, "SOC");
        soc_step_mwh = p.spec.e_max / static_cast<double>(n_soc);
        n_reg = p.mode == DispatchMode::kJoint ? grid_count(p.spec.p_max, power_step, "power") : 0;
        const double k = std::round(p.spec.s0 * static_cast<double>(n_soc));
        k0 = static_cast<std::size_t>(k);
        snapped = std::abs(k / static_cast<double>(n_soc) - p.spec.s0) > 1e-12;
    }

    double soc(std::size_t k) const { return static_cast<double>(k) / static_cast<double>(n_soc); }
    double reg(const DispatchProblem& p, std::size_t j) const {
        return n_reg == 0 ? 0.0 : p.spec.p_max * static_cast<double>(j) / static_cast<double>(n_reg);
    }
};

struct Action {
    double p_e_ch = 0.0;
    double p_e_dis = 0.0;
    double p_reg = 0.0;
    double charge = 0.0;     // total cell-side charging power
    double discharge = 0.0;  // total discharging power
};

// Energy offers that move the battery from level `from` to level `to` while
// providing `p_reg` of regulation. Returns false when limits are violated.
bool derive_action(const DispatchProblem& p, const Lattice& lat, std::size_t t, std::size_t from,
                   std::size_t to, double p_reg, Action& a) {
    const auto& s = p.spec;
    const double reg_ch = p_reg * p.regd_down[t];
    const double reg_dis = p_reg * p.regd_up[t];
    const double delta = (static_cast<double>(to) - static_cast<double>(from)) * lat.soc_step_mwh;
    const double residual = delta - (reg_ch * s.eta_c - reg_dis / s.eta_d);
    a.p_reg = p_reg;
    if (residual >= 0.0) {
        a.p_e_ch = residual / s.eta_c;
        a.p_e_dis = 0.0;
    } else {
        a.p_e_ch = 0.0;
        a.p_e_dis = -residual * s.eta_d;
    }
    const double limit = s.p_max * (1.0 + 1e-12);
    if (a.p_e_ch + p_reg > limit || a.p_e_dis + p_reg > limit) return false;
    a.charge = a.p_e_ch + reg_ch;
    a.discharge = a.p_e_dis + reg_dis;
    return true;
}

double action_value(const DispatchProblem& p, std::size_t t, const Action& a, double deg_rate) {
    const HourPrices prices{p.lmp[t], p.mode == DispatchMode::kJoint ? p.rmccp[t] : 0.0,
                            p.mode == DispatchMode::kJoint ? p.rmpcp[t] : 0.0,
                            p.mode == DispatchMode::kJoint ? p.beta[t] : 0.0};
    return hourly_net(a.p_e_ch, a.p_e_dis, a.p_reg, a.charge, a.discharge, prices, p.spec, deg_rate);
}

DispatchSchedule run_dp(const DispatchProblem& p) {
    p.validate();
    const Lattice lat(p, p.grid.power_step_mw);
    const double deg_rate = degradation_rate(p.spec);
    const std::size_t T = p.horizon();
    const std::size_t S = lat.n_soc + 1;
    const std::size_t R = lat.n_reg + 1;

    // value[t][k]: best value from hour t at level k; wear[t][k]: throughput of
    // that continuation, used to break exact ties towards less cycling.
    std::vector<std::vector<double>> value(T + 1, std::vector<double>(S, kNegInf));
    std::vector<std::vector<double>> wear(T + 1, std::vector<double>(S, 0.0));
    struct Choice {
        std::size_t reg = 0;
        std::size_t next = 0;
    };
    std::vector<std::vector<Choice>> choice(T, std::vector<Choice>(S));
    value[T][lat.k0] = 0.0;

    for (std::size_t t = T; t-- > 0;) {
        for (std::size_t k = 0; k < S; ++k) {
            double best = kNegInf;
            double best_wear = 0.0;
            Choice best_choice;
            for (std::size_t j = 0; j < R; ++j) {
                const double p_reg = lat.reg(p, j);
                for (std::size_t k2 = 0; k2 < S; ++k2) {
                    if (value[t + 1][k2] == kNegInf) continue;
                    Action a;
                    if (!derive_action(p, lat, t, k, k2, p_reg, a)) continue;
                    const double v = action_value(p, t, a, deg_rate) + value[t + 1][k2];
                    const double w = a.charge + a.discharge + wear[t + 1][k2];
                    if (v > best || (v == best && w < best_wear)) {
                        best = v;
                        best_wear = w;
                        best_choice = {j, k2};
                    }
                }
            }
            value[t][k] = best;
            wear[t][k] = best_wear;
            choice[t][k] = best_choice;
        }
    }

    DispatchSchedule out;
    out.s0_snapped = lat.snapped;
    out.objective = value[0][lat.k0];
    out.soc.push_back(lat.soc(lat.k0));
    std::size_t k = lat.k0;
    for (std::size_t t = 0; t < T; ++t) {
        const Choice c = choice[t][k];
        Action a;
        derive_action(p, lat, t, k, c.next, lat.reg(p, c.reg), a);
        out.p_e_ch.push_back(a.p_e_ch);
        out.p_e_dis.push_back(a.p_e_dis);
        out.p_reg.push_back(a.p_reg);
        k = c.next;
        out.soc.push_back(lat.soc(k));
    }
    out.breakdown = evaluate_schedule(p, out);
    return out;
}

}  // namespace

void DispatchProblem::validate() const {
    spec.validate();
    const std::size_t T = horizon();
    if (T == 0) throw InvalidInput("dispatch horizon is empty");
    for (double v : lmp) {
        if (!std::isfinite(v)) throw InvalidInput("non-finite LMP in dispatch problem");
    }
    const bool joint = mode == DispatchMode::kJoint;
    auto check = [&](const std::vector<double>& v, const char* name, bool nonneg, bool unit) {
        if (v.size() != T) {
            throw InvalidInput(fmt::format("{} has {} entries, expected {}", name, v.size(), T));
        }
        for (double x : v) {
            if (!std::isfinite(x) || (nonneg && x < 0.0) || (unit && x > 1.0)) {
                throw InvalidInput(fmt::format("{} value {} out of range", name, x));
            }
        }
    };
    // Regulation energy fractions drive the SOC in both modes only when offered,
    // but joint mode needs the full regulation data set.
    if (joint) {
        if (rmccp.empty() || rmpcp.empty() || beta.empty() || regd_up.empty() || regd_down.empty()) {
            throw InvalidInput("joint dispatch requires regulation prices and signals");
        }
        check(rmccp, "rmccp", false, false);
        check(rmpcp, "rmpcp", false, false);
        check(beta, "beta", true, false);
        check(regd_up, "regd_up", true, true);
        check(regd_down, "regd_down", true, true);
    } else {
        if (!regd_up.empty()) check(regd_up, "regd_up", true, true);
        if (!regd_down.empty()) check(regd_down, "regd_down", true, true);
    }
    grid_count(spec.e_max, grid.soc_step_mwh, "SOC");
    if (joint) grid_count(spec.p_max, grid.power_step_mw, "power");
}

DispatchProblem DispatchProblem::from_dataset(const MarketDataset& data, std::size_t node, Date day,
                                              const BessSpec& spec, DispatchMode mode,
                                              const DispatchGrid& grid) {
    const std::size_t off = data.day_offset(day);
    auto take = [&](std::span<const double> s) {
        return std::vector<double>(s.begin() + static_cast<std::ptrdiff_t>(off),
                                   s.begin() + static_cast<std::ptrdiff_t>(off + 24));
    };
    DispatchProblem p;
    p.spec = spec;
    p.mode = mode;
    p.grid = grid;
    p.lmp = take(data.lmp(node));
    p.rmccp = take(data.rmccp());
    p.rmpcp = take(data.rmpcp());
    p.beta = take(data.beta());
    p.regd_up = take(data.regd_up());
    p.regd_down = take(data.regd_down());
    return p;
}

DispatchSchedule solve_energy_only(const DispatchProblem& problem) {
    if (problem.mode != DispatchMode::kEnergyOnly) {
        throw InvalidInput("solve_energy_only needs an energy-only problem");
    }
    auto p = problem;
    // The battery never sees regulation energy without an offer.
    if (p.regd_up.empty()) p.regd_up.assign(p.horizon(), 0.0);
    if (p.regd_down.empty()) p.regd_down.assign(p.horizon(), 0.0);
    return run_dp(p);
}

DispatchSchedule solve_joint(const DispatchProblem& problem) {
    if (problem.mode != DispatchMode::kJoint) throw InvalidInput("solve_joint needs a joint problem");
    return run_dp(problem);
}

DispatchSchedule solve(const DispatchProblem& problem) {
    return problem.mode == DispatchMode::kJoint ? solve_joint(problem) : solve_energy_only(problem);
}

DispatchSchedule brute_force_oracle(const DispatchProblem& problem, double power_step,
                                    std::size_t horizon) {
    if (horizon == 0 || horizon > 6 || horizon > problem.horizon()) {
        throw InvalidInput("oracle horizon must be between 1 and min(6, problem horizon)");
    }
    DispatchProblem p = problem;
    auto cut = [&](std::vector<double>& v) {
        if (v.size() > horizon) v.resize(horizon);
    };
    for (auto* v : {&p.lmp, &p.rmccp, &p.rmpcp, &p.beta, &p.regd_up, &p.regd_down}) cut(*v);
    if (p.regd_up.empty()) p.regd_up.assign(horizon, 0.0);
    if (p.regd_down.empty()) p.regd_down.assign(horizon, 0.0);
    p.grid.power_step_mw = power_step;
    p.validate();

    const Lattice lat(p, power_step);
    const double deg_rate = degradation_rate(p.spec);
    const std::size_t per_hour = (lat.n_reg + 1) * (lat.n_soc + 1);
    double sequences = std::pow(static_cast<double>(per_hour), static_cast<double>(horizon));
    if (sequences > 1e8) {
        throw InvalidInput(fmt::format("oracle would enumerate {:.3g} sequences (limit 1e8)", sequences));
    }

    std::vector<Action> path(horizon), best_path;
    std::vector<std::size_t> levels(horizon + 1);
    std::vector<double> hour_value(horizon);
    double best = kNegInf;
    levels[0] = lat.k0;

    // Depth-first walk over every action sequence.
    auto walk = [&](auto&& self, std::size_t t) -> void {
        if (t == horizon) {
            if (levels[horizon] != lat.k0) return;
            double total = 0.0;
            for (std::size_t u = horizon; u-- > 0;) total = hour_value[u] + total;
            if (total > best) {
                best = total;
                best_path = path;
            }
            return;
        }
        for (std::size_t j = 0; j <= lat.n_reg; ++j) {
            for (std::size_t k2 = 0; k2 <= lat.n_soc; ++k2) {
                Action a;
                if (!derive_action(p, lat, t, levels[t], k2, lat.reg(p, j), a)) continue;
                path[t] = a;
                levels[t + 1] = k2;
                hour_value[t] = action_value(p, t, a, deg_rate);
                self(self, t + 1);
            }
        }
    };
    walk(walk, 0);

    DispatchSchedule out;
    out.s0_snapped = lat.snapped;
    out.objective = best;
    double soc = lat.soc(lat.k0);
    out.soc.push_back(soc);
    for (std::size_t t = 0; t < horizon; ++t) {
        const auto& a = best_path[t];
        out.p_e_ch.push_back(a.p_e_ch);
        out.p_e_dis.push_back(a.p_e_dis);
        out.p_reg.push_back(a.p_reg);
        soc += (a.charge * p.spec.eta_c - a.discharge / p.spec.eta_d) / p.spec.e_max;
        out.soc.push_back(soc);
    }
    out.breakdown = evaluate_schedule(p, out);
    return out;
}

std::vector<HourThroughput> throughput(const DispatchProblem& p, const DispatchSchedule& s) {
    std::vector<HourThroughput> out(s.p_e_ch.size());
    for (std::size_t t = 0; t < out.size(); ++t) {
        const double up = t < p.regd_up.size() ? p.regd_up[t] : 0.0;
        const double down = t < p.regd_down.size() ? p.regd_down[t] : 0.0;
        out[t].charge = s.p_e_ch[t] + s.p_reg[t] * down;
        out[t].discharge = s.p_e_dis[t] + s.p_reg[t] * up;
    }
    return out;
}

CreditBreakdown evaluate_schedule(const DispatchProblem& p, const DispatchSchedule& s) {
    const std::size_t T = s.p_e_ch.size();
    const std::span<const double> lmp(p.lmp.data(), T);
    const double energy = energy_credit(s.p_e_ch, s.p_e_dis, lmp);
    RegulationCredit reg;
    if (p.mode == DispatchMode::kJoint) {
        reg = regulation_credit(s.p_reg, std::span<const double>(p.rmccp.data(), T),
                                std::span<const double>(p.rmpcp.data(), T),
                                std::span<const double>(p.beta.data(), T), p.spec.perf_score);
    }
    const auto flow = throughput(p, s);
    std::vector<double> ch(T), dis(T);
    for (std::size_t t = 0; t < T; ++t) {
        ch[t] = flow[t].charge;
        dis[t] = flow[t].discharge;
    }
    return CreditBreakdown::make(energy, reg.capability, reg.performance,
                                 degradation_cost(ch, dis, p.spec));
}

std::vector<std::string> validate_schedule(const DispatchProblem& p, const DispatchSchedule& s,
                                           double tol) {
    std::vector<std::string> bad;
    const std::size_t T = s.p_e_ch.size();
    if (T == 0 || s.p_e_dis.size() != T || s.p_reg.size() != T || s.soc.size() != T + 1 ||
        T > p.lmp.size()) {
        bad.push_back("schedule vectors have inconsistent lengths");
        return bad;
    }
    const auto& spec = p.spec;
    const double pmax = spec.p_max + tol;
    for (std::size_t t = 0; t < T; ++t) {
        const double ch = s.p_e_ch[t], dis = s.p_e_dis[t], reg = s.p_reg[t];
        if (ch < -tol || ch > pmax) bad.push_back(fmt::format("h{}: p_e_ch {} outside [0, p_max]", t, ch));
        if (dis < -tol || dis > pmax) bad.push_back(fmt::format("h{}: p_e_dis {} outside [0, p_max]", t, dis));
        if (ch != 0.0 && dis != 0.0) {
            bad.push_back(fmt::format("h{}: simultaneous charge {} and discharge {}", t, ch, dis));
        }
        if (reg < -tol || reg > pmax) bad.push_back(fmt::format("h{}: p_reg {} outside [0, p_max]", t, reg));
        if (p.mode == DispatchMode::kEnergyOnly && reg != 0.0) {
            bad.push_back(fmt::format("h{}: regulation offer in energy-only mode", t));
        }
        if (ch + reg > pmax) bad.push_back(fmt::format("h{}: p_e_ch + p_reg = {} > p_max", t, ch + reg));
        if (dis + reg > pmax) bad.push_back(fmt::format("h{}: p_e_dis + p_reg = {} > p_max", t, dis + reg));

        const double up = t < p.regd_up.size() ? p.regd_up[t] : 0.0;
        const double down = t < p.regd_down.size() ? p.regd_down[t] : 0.0;
        const double total_ch = ch + reg * down;
        const double total_dis = dis + reg * up;
        const double expect = s.soc[t] + (total_ch * spec.eta_c - total_dis / spec.eta_d) / spec.e_max;
        if (std::abs(expect - s.soc[t + 1]) > tol) {
            bad.push_back(fmt::format("h{}: SOC transition {} -> {} but flows give {}", t, s.soc[t],
                                      s.soc[t + 1], expect));
        }
    }
    for (std::size_t t = 0; t <= T; ++t) {
        if (s.soc[t] < -tol || s.soc[t] > 1.0 + tol) {
            bad.push_back(fmt::format("SOC[{}] = {} outside [0, 1]", t, s.soc[t]));
        }
    }
    if (!s.s0_snapped && std::abs(s.soc[0] - spec.s0) > tol) {
        bad.push_back(fmt::format("SOC[0] = {} differs from s0 = {}", s.soc[0], spec.s0));
    }
    if (std::abs(s.soc[T] - s.soc[0]) > tol) {
        bad.push_back(fmt::format("terminal SOC {} differs from initial {}", s.soc[T], s.soc[0]));
    }
    return bad;
}

void write_schedule_csv(std::ostream& out, const DispatchProblem& p, const DispatchSchedule& s) {
    out << "hour,p_e_ch,p_e_dis,p_reg,soc_end,lmp\n";
    for (std::size_t t = 0; t < s.p_e_ch.size(); ++t) {
        out << t << ',' << csv::num(s.p_e_ch[t]) << ',' << csv::num(s.p_e_dis[t]) << ','
            << csv::num(s.p_reg[t]) << ',' << csv::num(s.soc[t + 1]) << ',' << csv::num(p.lmp[t])
            << '\n';
    }
}

}  // namespace bess
