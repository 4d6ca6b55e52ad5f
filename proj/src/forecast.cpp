#include "bess/forecast.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <fmt/format.h>
#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>

#include "bess/csv.hpp"
#include "bess/errors.hpp"
#include "bess/numeric.hpp"

namespace bess {

// ---- monthly volatility ----

MonthlySigma monthly_sigma(std::span<const double> hourly, Hour start, bool allow_partial) {
    MonthlySigma out;
    std::size_t h = 0;
    while (h < hourly.size()) {
        const Date month = month_start(date_of(start + std::chrono::hours{h}));
        const Hour month_begin = start_of(month);
        const Hour month_end = start_of(next_month(month));
        const auto first = static_cast<std::size_t>((std::max(month_begin, start) - start).count());
        const auto last = std::min(hourly.size(), static_cast<std::size_t>((month_end - start).count()));
        const bool complete = month_begin >= start && last == static_cast<std::size_t>((month_end - start).count());
        if (!complete && !allow_partial) {
            throw ValidationError(fmt::format("month {} is incomplete ({} of {} hours)", format_month(month),
                                              last - first, (month_end - month_begin).count()));
        }
        out.months.push_back(month);
        out.sigma.push_back(sample_stddev(hourly.subspan(first, last - first)));
        h = last;
    }
    return out;
}

MonthlySigma monthly_sigma(const HourlyLmpSeries& lmp, HourWindow window, bool allow_partial) {
    std::vector<double> values;
    Hour expect = window.begin;
    for (std::size_t i = 0; i < lmp.timestamps.size(); ++i) {
        const Hour t = lmp.timestamps[i];
        if (!window.contains(t)) continue;
        if (t != expect) {
            throw ValidationError(fmt::format("LMP of node {} has a gap at {}", lmp.node_id,
                                              format_timestamp(Seconds{expect})));
        }
        values.push_back(lmp.lmp[i]);
        expect += std::chrono::hours{1};
    }
    if (expect != window.end) {
        throw ValidationError(fmt::format("LMP of node {} ends before {}", lmp.node_id,
                                          format_timestamp(Seconds{window.end})));
    }
    return monthly_sigma(values, window.begin, allow_partial);
}

MonthlySigma system_monthly_sigma(const MarketDataset& data, bool allow_partial) {
    std::vector<double> avg(data.hours());
    for (std::size_t h = 0; h < data.hours(); ++h) {
        CompensatedSum s;
        for (std::size_t i = 0; i < data.node_count(); ++i) s.add(data.lmp(i)[h]);
        avg[h] = s.value() / static_cast<double>(data.node_count());
    }
    return monthly_sigma(avg, data.window().begin, allow_partial);
}

double default_offset(std::span<const double> sigma_node, std::span<const double> sigma_system) {
    if (sigma_node.size() != sigma_system.size() || sigma_node.empty()) {
        throw InvalidInput("sigma series must be non-empty and of equal length");
    }
    double lowest = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < sigma_node.size(); ++t) {
        lowest = std::min(lowest, sigma_node[t] - sigma_system[t]);
    }
    return std::max(0.0, -lowest) + 1.0;
}

std::vector<double> transform(std::span<const double> sigma_node,
                              std::span<const double> sigma_system, double c,
                              std::span<const Date> months) {
    if (sigma_node.size() != sigma_system.size()) {
        throw InvalidInput("sigma series must have equal length");
    }
    std::vector<double> y(sigma_node.size());
    for (std::size_t t = 0; t < y.size(); ++t) {
        const double arg = sigma_node[t] - sigma_system[t] + c;
        if (!(arg > 0.0)) {
            const std::string where =
                t < months.size() ? format_month(months[t]) : fmt::format("index {}", t);
            throw DomainError(fmt::format("log argument {} is not positive in month {}", arg, where));
        }
        y[t] = std::log(arg);
    }
    return y;
}

double inverse_transform(double y, double sigma_system, double c) {
    return std::exp(y) + sigma_system - c;
}

VolatilitySeries make_volatility_series(std::string node_id, const MonthlySigma& node,
                                        const MonthlySigma& system, std::optional<double> c) {
    if (node.months != system.months) {
        throw InvalidInput(fmt::format("node {} and system sigma cover different months", node_id));
    }
    VolatilitySeries v;
    v.node_id = std::move(node_id);
    v.months = node.months;
    v.sigma_node = node.sigma;
    v.sigma_system = system.sigma;
    v.c = c ? *c : default_offset(node.sigma, system.sigma);
    v.y = bess::transform(v.sigma_node, v.sigma_system, v.c, v.months);
    return v;
}

// ---- ARIMA by conditional sum of squares ----

namespace {

std::vector<double> difference(std::span<const double> y, int d) {
    std::vector<double> w(y.begin(), y.end());
    for (int k = 0; k < d; ++k) {
        if (w.size() < 2) return {};
        for (std::size_t t = 0; t + 1 < w.size(); ++t) w[t] = w[t + 1] - w[t];
        w.pop_back();
    }
    return w;
}

// Residuals of the ARMA recursion on the differenced series, starting at t = p.
std::vector<double> residuals(const std::vector<double>& w, int p, int q, double mu,
                              const double* phi, const double* theta) {
    const std::size_t n = w.size();
    std::vector<double> e(n, 0.0);
    for (std::size_t t = static_cast<std::size_t>(p); t < n; ++t) {
        double pred = mu;
        for (int i = 1; i <= p; ++i) pred += phi[i - 1] * w[t - static_cast<std::size_t>(i)];
        for (int j = 1; j <= q; ++j) {
            if (t >= static_cast<std::size_t>(p + j)) pred += theta[j - 1] * e[t - static_cast<std::size_t>(j)];
        }
        e[t] = w[t] - pred;
    }
    return e;
}

double sse_of(const std::vector<double>& w, int p, int q, std::size_t from, const double* params) {
    const auto e = residuals(w, p, q, params[0], params + 1, params + 1 + p);
    double s = 0.0;
    for (std::size_t t = from; t < e.size(); ++t) s += e[t] * e[t];
    return std::isfinite(s) ? s : std::numeric_limits<double>::max();
}

// True when every root of 1 - phi_1 B - ... - phi_p B^p lies outside the unit circle.
bool ar_stationary(std::span<const double> phi) {
    const auto p = static_cast<Eigen::Index>(phi.size());
    if (p == 0) return true;
    Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(p, p);
    for (Eigen::Index i = 0; i < p; ++i) companion(0, i) = phi[static_cast<std::size_t>(i)];
    for (Eigen::Index i = 1; i < p; ++i) companion(i, i - 1) = 1.0;
    const Eigen::VectorXcd roots = companion.eigenvalues();
    for (Eigen::Index i = 0; i < p; ++i) {
        if (!(std::abs(roots(i)) < 1.0 - 1e-9)) return false;
    }
    return true;
}

// The MA polynomial 1 + theta_1 B + ... is invertible when the AR-style check
// passes for -theta.
bool ma_invertible(std::span<const double> theta) {
    std::vector<double> neg(theta.begin(), theta.end());
    for (auto& t : neg) t = -t;
    return ar_stationary(neg);
}

struct Objective {
    const std::vector<double>* w;
    int p;
    int q;
    std::size_t from;
};

double gsl_objective(const gsl_vector* x, void* data) {
    const auto* o = static_cast<const Objective*>(data);
    const double* params = gsl_vector_const_ptr(x, 0);
    const auto p = static_cast<std::size_t>(o->p), q = static_cast<std::size_t>(o->q);
    // Barrier on the admissible region: stationary AR part, invertible MA part.
    if (!ar_stationary({params + 1, p}) || !ma_invertible({params + 1 + p, q})) {
        return std::numeric_limits<double>::max();
    }
    return sse_of(*o->w, o->p, o->q, o->from, params);
}

// Unchecked CSS fit: parameter vector [mu, phi..., theta...] and its SSE.
struct RawFit {
    std::vector<double> params;
    double sse = 0.0;
    int iterations = 0;
};

RawFit least_squares_ar(const std::vector<double>& w, int p, std::size_t from) {
    const auto n = static_cast<Eigen::Index>(w.size() - from);
    Eigen::MatrixXd X(n, p + 1);
    Eigen::VectorXd b(n);
    for (Eigen::Index r = 0; r < n; ++r) {
        const auto t = static_cast<std::size_t>(r) + from;
        X(r, 0) = 1.0;
        for (int i = 1; i <= p; ++i) X(r, i) = w[t - static_cast<std::size_t>(i)];
        b(r) = w[t];
    }
    const Eigen::VectorXd beta = X.colPivHouseholderQr().solve(b);
    RawFit f;
    f.params.assign(beta.data(), beta.data() + beta.size());
    f.sse = sse_of(w, p, 0, from, f.params.data());
    return f;
}

RawFit nelder_mead(const std::vector<double>& w, int p, int q, std::size_t from,
                   std::vector<double> start) {
    Objective obj{&w, p, q, from};
    const std::size_t k = start.size();
    gsl_multimin_function fn{&gsl_objective, k, &obj};
    gsl_vector* x = gsl_vector_alloc(k);
    gsl_vector* step = gsl_vector_alloc(k);
    const double scale = std::max(1e-3, 0.1 * sample_stddev(w));
    for (std::size_t i = 0; i < k; ++i) {
        gsl_vector_set(x, i, start[i]);
        gsl_vector_set(step, i, i == 0 ? scale : 0.1);
    }
    gsl_multimin_fminimizer* s = gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, k);
    gsl_multimin_fminimizer_set(s, &fn, x, step);

    // Converged when the simplex is small, or when the best SSE has stopped
    // moving for a long stretch (flat ridges of near-cancelling AR and MA terms).
    constexpr int kMaxIterations = 20000;
    constexpr int kStallIterations = 1000;
    int iter = 0;
    int status = GSL_CONTINUE;
    int restarts = 0;
    double best = gsl_multimin_fminimizer_minimum(s);
    int stalled = 0;
    while (iter < kMaxIterations) {
        ++iter;
        if (gsl_multimin_fminimizer_iterate(s) != GSL_SUCCESS) break;
        const double now = gsl_multimin_fminimizer_minimum(s);
        if (best - now > 1e-13 * std::max(1.0, std::abs(best))) {
            stalled = 0;
        } else if (++stalled >= kStallIterations) {
            status = GSL_SUCCESS;
            break;
        }
        best = std::min(best, now);
        status = gsl_multimin_test_size(gsl_multimin_fminimizer_size(s), 1e-7);
        if (status == GSL_SUCCESS) {
            // One restart from the optimum guards against a collapsed simplex.
            if (restarts++ > 0) break;
            gsl_vector_memcpy(x, gsl_multimin_fminimizer_x(s));
            gsl_multimin_fminimizer_set(s, &fn, x, step);
            status = GSL_CONTINUE;
            stalled = 0;
        }
    }
    RawFit f;
    f.params.resize(k);
    for (std::size_t i = 0; i < k; ++i) f.params[i] = gsl_vector_get(gsl_multimin_fminimizer_x(s), i);
    f.sse = gsl_multimin_fminimizer_minimum(s);
    f.iterations = iter;
    const double size = gsl_multimin_fminimizer_size(s);
    gsl_multimin_fminimizer_free(s);
    gsl_vector_free(x);
    gsl_vector_free(step);
    if (status != GSL_SUCCESS) {
        throw ConvergenceError(fmt::format("CSS fit of ARMA({},{}) did not converge after {} iterations "
                                           "(SSE {}, simplex size {})",
                                           p, q, iter, f.sse, size),
                               iter, f.sse, size);
    }
    return f;
}

// Fits (p, q) on the differenced series; MA fits start from the fit with one
// fewer MA term so the SSE can only go down as q grows.
RawFit fit_raw(const std::vector<double>& w, int p, int q, std::size_t from) {
    if (q == 0) return least_squares_ar(w, p, from);
    RawFit prev = fit_raw(w, p, q - 1, from);
    prev.params.push_back(0.0);
    const double start_sse = sse_of(w, p, q, from, prev.params.data());
    RawFit next = nelder_mead(w, p, q, from, prev.params);
    if (!(next.sse <= start_sse)) {
        next.params = prev.params;
        next.sse = start_sse;
    }
    next.iterations += prev.iterations;
    return next;
}

}  // namespace

ArimaSpec fit(std::span<const double> y, ArimaOrders orders, std::size_t skip) {
    const auto [p, d, q] = orders;
    if (p < 0 || d < 0 || q < 0) throw InvalidInput("ARIMA orders must be non-negative");
    for (double v : y) {
        if (!std::isfinite(v)) throw InvalidInput("series contains a non-finite value");
    }
    const auto w = difference(y, d);
    const std::size_t need = 10 * static_cast<std::size_t>(p + q + 1);
    if (w.size() < need) {
        throw InvalidInput(fmt::format("ARIMA({},{},{}) needs {} points after differencing, got {}", p, d,
                                       q, need, w.size()));
    }
    const std::size_t from = static_cast<std::size_t>(p) + skip;
    if (from + 1 >= w.size()) throw InvalidInput("conditioning window leaves no residuals");
    const RawFit raw = fit_raw(w, p, q, from);

    ArimaSpec s;
    s.orders = orders;
    s.mu = raw.params[0];
    s.phi.assign(raw.params.begin() + 1, raw.params.begin() + 1 + p);
    s.theta.assign(raw.params.begin() + 1 + p, raw.params.end());
    s.sse = raw.sse;
    s.residuals = w.size() - from;
    s.sigma2 = s.sse / static_cast<double>(s.residuals);
    s.iterations = raw.iterations;
    for (double t : s.theta) {
        if (!std::isfinite(t)) throw DomainError("MA coefficient is not finite");
    }
    if (!ma_invertible(s.theta)) {
        throw DomainError(fmt::format("ARIMA({},{},{}) fit has a non-invertible MA part", p, d, q));
    }
    if (!ar_stationary(s.phi)) {
        throw DomainError(fmt::format("ARIMA({},{},{}) fit has a non-stationary AR part", p, d, q));
    }
    const double m = static_cast<double>(s.residuals);
    const double k = static_cast<double>(p + q + 2);  // mu, coefficients and the variance
    if (m - k - 1.0 <= 0.0) throw InvalidInput("too few residuals for AICc");
    const double loglik = -0.5 * m * (std::log(2.0 * M_PI * std::max(s.sigma2, 1e-300)) + 1.0);
    s.aicc = -2.0 * loglik + 2.0 * k + 2.0 * k * (k + 1.0) / (m - k - 1.0);
    return s;
}

ArimaOrders select_orders(std::span<const double> y) {
    if (y.size() < 24) {
        throw InvalidInput(fmt::format("order selection needs at least 24 points, got {}", y.size()));
    }
    std::vector<ArimaOrders> grid;
    for (int p = 0; p <= 2; ++p) {
        for (int d = 0; d <= 1; ++d) {
            for (int q = 0; q <= 2; ++q) grid.push_back({p, d, q});
        }
    }
    // Visit candidates in tie-break order so a strict improvement is required to move on.
    std::stable_sort(grid.begin(), grid.end(), [](const ArimaOrders& a, const ArimaOrders& b) {
        if (a.p + a.q != b.p + b.q) return a.p + a.q < b.p + b.q;
        return a.d < b.d;
    });
    std::optional<ArimaOrders> best;
    double best_aicc = std::numeric_limits<double>::infinity();
    std::string last_error;
    // Every candidate sums residuals over the same original time indices so the
    // criteria are comparable.
    constexpr int kMaxP = 2, kMaxD = 1;
    for (const auto& o : grid) {
        try {
            const auto s = fit(y, o, static_cast<std::size_t>(kMaxP - o.p + kMaxD - o.d));
            if (s.aicc < best_aicc) {
                best_aicc = s.aicc;
                best = o;
            }
        } catch (const Error& e) {
            last_error = e.what();
        }
    }
    if (!best) throw InvalidInput("every ARIMA order failed to fit: " + last_error);
    return *best;
}

double forecast_next(const ArimaSpec& spec, std::span<const double> y) {
    const auto [p, d, q] = spec.orders;
    const auto w = difference(y, d);
    if (w.size() < static_cast<std::size_t>(std::max(p, 1))) {
        throw InvalidInput("history too short to forecast");
    }
    const auto e = residuals(w, p, q, spec.mu, spec.phi.data(), spec.theta.data());
    const std::size_t n = w.size();
    double next = spec.mu;
    for (int i = 1; i <= p; ++i) next += spec.phi[i - 1] * w[n - static_cast<std::size_t>(i)];
    for (int j = 1; j <= q; ++j) {
        if (n >= static_cast<std::size_t>(p + j)) next += spec.theta[j - 1] * e[n - static_cast<std::size_t>(j)];
    }
    // Undo the differencing: y_n = w_n - sum_k (-1)^k C(d,k) y_{n-k}.
    double binom = 1.0;
    for (int k = 1; k <= d; ++k) {
        binom = binom * (d - k + 1) / k;
        const double sign = (k % 2 == 1) ? 1.0 : -1.0;
        next += sign * binom * y[y.size() - static_cast<std::size_t>(k)];
    }
    return next;
}

double forecast_sigma(const ArimaSpec& spec, std::span<const double> y, double sigma_system_next,
                      double c) {
    return inverse_transform(forecast_next(spec, y), sigma_system_next, c);
}

std::vector<NodeForecast> forecast_volatility(const MarketDataset& data, Date last_month,
                                              const ForecastOptions& options) {
    const Date target_last = month_start(last_month);
    const auto system = system_monthly_sigma(data, options.allow_partial);
    auto cut = [&](MonthlySigma m) {
        std::size_t keep = 0;
        while (keep < m.months.size() &&
               std::chrono::sys_days{m.months[keep]} <= std::chrono::sys_days{target_last}) {
            ++keep;
        }
        if (keep == 0 || m.months[keep - 1] != target_last) {
            throw InvalidInput(fmt::format("dataset does not cover month {}", format_month(target_last)));
        }
        m.months.resize(keep);
        m.sigma.resize(keep);
        return m;
    };
    const auto sys = cut(system);
    std::vector<NodeForecast> out;
    for (std::size_t i = 0; i < data.node_count(); ++i) {
        const auto node = cut(monthly_sigma(data.lmp(i), data.window().begin, options.allow_partial));
        const auto series = make_volatility_series(data.nodes()[i].node_id, node, sys);
        const ArimaOrders orders = options.orders ? *options.orders : select_orders(series.y);
        const auto spec = fit(series.y, orders);
        NodeForecast f;
        f.node_id = series.node_id;
        f.month = next_month(target_last);
        f.sigma_forecast = forecast_sigma(spec, series.y, sys.sigma.back(), series.c);
        f.orders = orders;
        f.c = series.c;
        out.push_back(f);
    }
    return out;
}

void write_forecast_csv(const std::vector<NodeForecast>& rows, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path);
    out << "node_id,month,sigma_forecast,p,d,q,c\n";
    for (const auto& r : rows) {
        out << csv::escape(r.node_id) << ',' << format_month(r.month) << ',' << csv::num(r.sigma_forecast)
            << ',' << r.orders.p << ',' << r.orders.d << ',' << r.orders.q << ',' << csv::num(r.c) << '\n';
    }
    if (!out) throw Error("failed writing " + path);
}

}  // namespace bess
