#pragma once

#include <span>

namespace bess {

// Battery parameterization. Defaults describe a 10 MW / 10 MWh unit with 95%
// one-way efficiencies, degradation speed 3e-5 per MWh, storage cost 1e5 $/MWh
// and 80% state at end of life, starting each day half full.
struct BessSpec {
    double p_max = 10.0;        // MW
    double e_max = 10.0;        // MWh
    double eta_c = 0.95;        // charging efficiency
    double eta_d = 0.95;        // discharging efficiency
    double deg_speed = 3e-5;    // fraction of life per MWh
    double storage_cost = 1e5;  // $/MWh
    double soc_eol = 0.8;       // state at end of life
    double s0 = 0.5;            // initial SOC fraction
    double perf_score = 1.0;    // regulation performance score

    // Throws InvalidInput naming the first out-of-range field.
    void validate() const;
};

struct CreditBreakdown {
    double credit_energy = 0.0;
    double credit_capability = 0.0;
    double credit_performance = 0.0;
    double cost_degradation = 0.0;
    double net = 0.0;

    // Fills `net` from the four components.
    static CreditBreakdown make(double energy, double capability, double performance,
                                double degradation);
};

struct RegulationCredit {
    double capability = 0.0;
    double performance = 0.0;
};

// Linearized cost per MWh of throughput: (deg_speed * storage_cost * 0.5) / (1 - soc_eol).
double degradation_rate(const BessSpec& spec);

// Arbitrage credit: sum of p_dis*lmp minus sum of p_ch*lmp over the horizon.
double energy_credit(std::span<const double> p_ch, std::span<const double> p_dis,
                     std::span<const double> lmp);

// Capability credit sums p_reg*rmccp*rho; performance credit sums p_reg*rmpcp*beta*rho.
RegulationCredit regulation_credit(std::span<const double> p_reg, std::span<const double> rmccp,
                                   std::span<const double> rmpcp, std::span<const double> beta,
                                   double rho);

// Sums (p_ch*eta_c + p_dis/eta_d) * degradation_rate(spec). The powers are the
// total battery throughput including regulation energy.
double degradation_cost(std::span<const double> p_ch, std::span<const double> p_dis,
                        const BessSpec& spec);

// Net value of a single hour. Both the dispatch solver and its brute-force
// oracle price hours through this function so their objectives are comparable.
struct HourPrices {
    double lmp = 0.0;
    double rmccp = 0.0;
    double rmpcp = 0.0;
    double beta = 0.0;
};

double hourly_net(double p_e_ch, double p_e_dis, double p_reg, double p_ch_total,
                  double p_dis_total, const HourPrices& prices, const BessSpec& spec,
                  double deg_rate);

}  // namespace bess
