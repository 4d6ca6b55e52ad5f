#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bess/market_data.hpp"

namespace bess {

struct MonthlySigma {
    std::vector<Date> months;  // first day of each month
    std::vector<double> sigma;
};

// Sample standard deviation of hourly values per calendar month. `hourly[h]` is
// the value at start + h hours. Partial first or last months raise
// ValidationError unless `allow_partial` is set.
MonthlySigma monthly_sigma(std::span<const double> hourly, Hour start, bool allow_partial = false);
MonthlySigma monthly_sigma(const HourlyLmpSeries& lmp, HourWindow window, bool allow_partial = false);

// Monthly sigma of the hourly mean LMP across all nodes.
MonthlySigma system_monthly_sigma(const MarketDataset& data, bool allow_partial = false);

// c = max(0, -min_t(sigma_node - sigma_system)) + 1.
double default_offset(std::span<const double> sigma_node, std::span<const double> sigma_system);

// y_t = log(sigma_node - sigma_system + c). Throws DomainError naming the
// month (or index) whose argument is not positive.
std::vector<double> transform(std::span<const double> sigma_node,
                              std::span<const double> sigma_system, double c,
                              std::span<const Date> months = {});
double inverse_transform(double y, double sigma_system, double c);

struct VolatilitySeries {
    std::string node_id;
    std::vector<Date> months;
    std::vector<double> sigma_node;
    std::vector<double> sigma_system;
    double c = 0.0;
    std::vector<double> y;
};

VolatilitySeries make_volatility_series(std::string node_id, const MonthlySigma& node,
                                        const MonthlySigma& system,
                                        std::optional<double> c = std::nullopt);

struct ArimaOrders {
    int p = 0;
    int d = 0;
    int q = 0;

    bool operator==(const ArimaOrders&) const = default;
};

// phi(B) (1-B)^d y_t = mu + theta(B) e_t, fitted by conditional sum of squares.
struct ArimaSpec {
    ArimaOrders orders;
    double mu = 0.0;
    std::vector<double> phi;
    std::vector<double> theta;
    double sigma2 = 0.0;       // SSE / residual count
    double sse = 0.0;
    std::size_t residuals = 0;  // terms in the conditional sum
    double aicc = 0.0;
    int iterations = 0;         // optimizer iterations (0 for closed-form fits)
};

// The residual recursion starts at t = p of the differenced series with earlier
// shocks set to zero; the sum of squares skips a further `skip` leading terms.
// Throws InvalidInput when the differenced series is shorter than 10*(p+q+1),
// DomainError when the AR part is not stationary, and ConvergenceError when
// the optimizer does not settle.
ArimaSpec fit(std::span<const double> y, ArimaOrders orders, std::size_t skip = 0);

// Grid p, q in {0,1,2}, d in {0,1}; minimum AICc, ties to smaller p+q then
// smaller d. Orders whose fit fails are skipped.
ArimaOrders select_orders(std::span<const double> y);

// One-step-ahead forecast of y.
double forecast_next(const ArimaSpec& spec, std::span<const double> y);

// exp(y_hat) + sigma_system_next - c.
double forecast_sigma(const ArimaSpec& spec, std::span<const double> y, double sigma_system_next,
                      double c);

struct NodeForecast {
    std::string node_id;
    Date month;  // month being forecast
    double sigma_forecast = 0.0;
    ArimaOrders orders;
    double c = 0.0;
};

struct ForecastOptions {
    std::optional<ArimaOrders> orders;  // fixed orders instead of AICc selection
    bool allow_partial = false;
};

// Forecasts every node's sigma for the month after `last_month` from all
// complete months of the dataset up to and including `last_month`. The system
// sigma of `last_month` stands in for the next month's.
std::vector<NodeForecast> forecast_volatility(const MarketDataset& data, Date last_month,
                                              const ForecastOptions& options = {});

// node_id,month,sigma_forecast,p,d,q,c
void write_forecast_csv(const std::vector<NodeForecast>& rows, const std::string& path);

}  // namespace bess
