#pragma once

#include <cstddef>
#include <ostream>
#include <string>
#include <vector>

#include "bess/bess_model.hpp"
#include "bess/market_data.hpp"

namespace bess {

enum class DispatchMode { kEnergyOnly, kJoint };

// Discretization of the daily problem. The SOC grid step must divide e_max and
// the power step must divide p_max.
struct DispatchGrid {
    double soc_step_mwh = 0.5;
    double power_step_mw = 0.5;
};

// One node-day. Every series has one entry per hour of the horizon (24 for a
// market day; shorter horizons are accepted for testing).
struct DispatchProblem {
    BessSpec spec;
    std::vector<double> lmp;
    std::vector<double> rmccp;
    std::vector<double> rmpcp;
    std::vector<double> beta;
    std::vector<double> regd_up;
    std::vector<double> regd_down;
    DispatchMode mode = DispatchMode::kJoint;
    DispatchGrid grid;

    std::size_t horizon() const { return lmp.size(); }

    // Throws InvalidInput on inconsistent lengths, bad spec or off-lattice grid.
    void validate() const;

    // Extracts the 24 hours of `day` for node `node` from the dataset.
    static DispatchProblem from_dataset(const MarketDataset& data, std::size_t node, Date day,
                                        const BessSpec& spec, DispatchMode mode,
                                        const DispatchGrid& grid = {});
};

struct DispatchSchedule {
    std::vector<double> p_e_ch;
    std::vector<double> p_e_dis;
    std::vector<double> p_reg;
    std::vector<double> soc;  // horizon + 1 fractions, soc[0] = S_0
    CreditBreakdown breakdown;
    // Optimal value of the discretized problem as accumulated by the solver.
    double objective = 0.0;
    // True when spec.s0 was off the SOC grid and had to be rounded.
    bool s0_snapped = false;
};

DispatchSchedule solve_energy_only(const DispatchProblem& problem);
DispatchSchedule solve_joint(const DispatchProblem& problem);
DispatchSchedule solve(const DispatchProblem& problem);

// Exhaustive search over every action sequence of the first `horizon` hours on the
// same lattice as the solver (SOC grid of the problem, regulation offers on a
// `power_step` grid), with S_horizon = S_0. Refuses more than 1e8 sequences.
DispatchSchedule brute_force_oracle(const DispatchProblem& problem, double power_step,
                                    std::size_t horizon);

// Energy and regulation throughput per hour as seen by the battery cells.
struct HourThroughput {
    double charge = 0.0;     // p_e_ch + p_reg * regd_down
    double discharge = 0.0;  // p_e_dis + p_reg * regd_up
};
std::vector<HourThroughput> throughput(const DispatchProblem& problem,
                                       const DispatchSchedule& schedule);

// Credits recomputed from the schedule with the closed-form credit formulas.
CreditBreakdown evaluate_schedule(const DispatchProblem& problem, const DispatchSchedule& schedule);

// Re-checks every operating constraint from the raw numbers. Returns one message
// per violation; empty means the schedule is valid.
std::vector<std::string> validate_schedule(const DispatchProblem& problem,
                                           const DispatchSchedule& schedule, double tol = 1e-9);

// hour,p_e_ch,p_e_dis,p_reg,soc_end,lmp
void write_schedule_csv(std::ostream& out, const DispatchProblem& problem,
                        const DispatchSchedule& schedule);

}  // namespace bess
