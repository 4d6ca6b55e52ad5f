#include "bess/bess_model.hpp"

#include <cmath>

#include <fmt/format.h>

#include "bess/errors.hpp"
#include "bess/numeric.hpp"

namespace bess {
namespace {

void require(bool ok, const char* field, double value, const char* range) {
    if (!ok) throw InvalidInput(fmt::format("BessSpec.{} = {} must be {}", field, value, range));
}

void same_length(std::size_t a, std::size_t b, const char* what) {
    if (a != b) throw InvalidInput(fmt::format("{}: sequence lengths differ ({} vs {})", what, a, b));
}

}  // namespace

void BessSpec::validate() const {
    require(std::isfinite(p_max) && p_max > 0.0, "p_max", p_max, "> 0");
    require(std::isfinite(e_max) && e_max > 0.0, "e_max", e_max, "> 0");
    require(eta_c > 0.0 && eta_c <= 1.0, "eta_c", eta_c, "in (0, 1]");
    require(eta_d > 0.0 && eta_d <= 1.0, "eta_d", eta_d, "in (0, 1]");
    require(std::isfinite(deg_speed) && deg_speed >= 0.0, "deg_speed", deg_speed, ">= 0");
    require(std::isfinite(storage_cost) && storage_cost >= 0.0, "storage_cost", storage_cost, ">= 0");
    require(soc_eol >= 0.0 && soc_eol < 1.0, "soc_eol", soc_eol, "in [0, 1)");
    require(s0 >= 0.0 && s0 <= 1.0, "s0", s0, "in [0, 1]");
    require(perf_score >= 0.0 && perf_score <= 1.0, "perf_score", perf_score, "in [0, 1]");
}

CreditBreakdown CreditBreakdown::make(double energy, double capability, double performance,
                                      double degradation) {
    CreditBreakdown b;
    b.credit_energy = energy;
    b.credit_capability = capability;
    b.credit_performance = performance;
    b.cost_degradation = degradation;
    b.net = energy + capability + performance - degradation;
    return b;
}

double degradation_rate(const BessSpec& spec) {
    if (!(spec.soc_eol < 1.0)) {
        throw InvalidInput(fmt::format("soc_eol = {} leaves no usable life", spec.soc_eol));
    }
    return (spec.deg_speed * spec.storage_cost * 0.5) / (1.0 - spec.soc_eol);
}

double energy_credit(std::span<const double> p_ch, std::span<const double> p_dis,
                     std::span<const double> lmp) {
    same_length(p_ch.size(), lmp.size(), "energy_credit");
    same_length(p_dis.size(), lmp.size(), "energy_credit");
    CompensatedSum sold, bought;
    for (std::size_t t = 0; t < lmp.size(); ++t) {
        sold.add(p_dis[t] * lmp[t]);
        bought.add(p_ch[t] * lmp[t]);
    }
    return sold.value() - bought.value();
}

RegulationCredit regulation_credit(std::span<const double> p_reg, std::span<const double> rmccp,
                                   std::span<const double> rmpcp, std::span<const double> beta,
                                   double rho) {
    same_length(p_reg.size(), rmccp.size(), "regulation_credit");
    same_length(p_reg.size(), rmpcp.size(), "regulation_credit");
    same_length(p_reg.size(), beta.size(), "regulation_credit");
    if (!(rho >= 0.0 && rho <= 1.0)) throw InvalidInput("performance score must be in [0, 1]");
    CompensatedSum cap, perf;
    for (std::size_t t = 0; t < p_reg.size(); ++t) {
        cap.add(p_reg[t] * rmccp[t] * rho);
        perf.add(p_reg[t] * rmpcp[t] * beta[t] * rho);
    }
    return {cap.value(), perf.value()};
}

double degradation_cost(std::span<const double> p_ch, std::span<const double> p_dis,
                        const BessSpec& spec) {
    same_length(p_ch.size(), p_dis.size(), "degradation_cost");
    const double rate = degradation_rate(spec);
    CompensatedSum throughput;
    for (std::size_t t = 0; t < p_ch.size(); ++t) {
        throughput.add(p_ch[t] * spec.eta_c + p_dis[t] / spec.eta_d);
    }
    return throughput.value() * rate;
}

double hourly_net(double p_e_ch, double p_e_dis, double p_reg, double p_ch_total,
                  double p_dis_total, const HourPrices& prices, const BessSpec& spec,
                  double deg_rate) {
    const double energy = p_e_dis * prices.lmp - p_e_ch * prices.lmp;
    const double capability = p_reg * prices.rmccp * spec.perf_score;
    const double performance = p_reg * prices.rmpcp * prices.beta * spec.perf_score;
    const double degradation = (p_ch_total * spec.eta_c + p_dis_total / spec.eta_d) * deg_rate;
    return energy + capability + performance - degradation;
}

}  // namespace bess
