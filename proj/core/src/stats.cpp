#include "pxlog/stats.hpp"

#include <algorithm>
#include <vector>
#include <cmath>
#include <functional>
#include <limits>
#include <string>

#include "pxlog/errors.hpp"
#include "pxlog/special.hpp"

namespace pxlog {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_pair(std::span<const double> x, std::span<const double> y, std::size_t min_n,
                  const char* who) {
    if (x.size() != y.size())
        throw StatError(std::string(who) + ": length mismatch (" + std::to_string(x.size()) + " vs " +
                        std::to_string(y.size()) + ")");
    if (x.size() < min_n)
        throw StatError(std::string(who) + ": need at least " + std::to_string(min_n) + " pairs, got " +
                        std::to_string(x.size()));
}

double mean_of(std::span<const double> v) {
    long double s = 0.0L;
    for (const double x : v) s += x;
    return static_cast<double>(s / static_cast<long double>(v.size()));
}

// ---- adaptive Simpson with width-proportional error budgets ----

struct QuadStats {
    long evals = 0;
    int unresolved = 0;
};

double adapt_step(const std::function<double(double)>& f, double a, double b, double fa, double fm,
                  double fb, double whole, double budget, int depth, QuadStats& qs) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = f(lm);
    const double frm = f(rm);
    qs.evals += 2;
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (std::fabs(delta) <= 15.0 * budget) return left + right + delta / 15.0;
    if (depth <= 0) {
        qs.unresolved++;
        return left + right + delta / 15.0;
    }
    return adapt_step(f, a, m, fa, flm, fm, left, 0.5 * budget, depth - 1, qs) +
           adapt_step(f, m, b, fm, frm, fb, right, 0.5 * budget, depth - 1, qs);
}

// Composite first pass on a fixed grid (so narrow likelihood spikes cannot be
// skipped), then per-panel adaptive refinement. Each panel receives an equal
// absolute error budget derived from the rough total, which keeps integrable
// endpoint kinks from starving the recursion.
double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double rel_tol,
                        QuadStats& qs) {
    constexpr int kPanels = 512;
    std::vector<double> edge_f(kPanels + 1), mid_f(kPanels);
    double rough = 0.0;
    for (int i = 0; i <= kPanels; ++i)
        edge_f[static_cast<std::size_t>(i)] = f(a + (b - a) * i / kPanels);
    qs.evals += kPanels + 1;
    for (int i = 0; i < kPanels; ++i) {
        const double x0 = a + (b - a) * i / kPanels;
        const double x1 = a + (b - a) * (i + 1) / kPanels;
        mid_f[static_cast<std::size_t>(i)] = f(0.5 * (x0 + x1));
        rough += (x1 - x0) / 6.0 *
                 (edge_f[static_cast<std::size_t>(i)] + 4.0 * mid_f[static_cast<std::size_t>(i)] +
                  edge_f[static_cast<std::size_t>(i) + 1]);
    }
    qs.evals += kPanels;

    const double panel_budget = std::max(rel_tol * std::fabs(rough), 1e-15) / kPanels;
    double total = 0.0;
    for (int i = 0; i < kPanels; ++i) {
        const double x0 = a + (b - a) * i / kPanels;
        const double x1 = a + (b - a) * (i + 1) / kPanels;
        const double whole =
            (x1 - x0) / 6.0 *
            (edge_f[static_cast<std::size_t>(i)] + 4.0 * mid_f[static_cast<std::size_t>(i)] +
             edge_f[static_cast<std::size_t>(i) + 1]);
        total += adapt_step(f, x0, x1, edge_f[static_cast<std::size_t>(i)],
                            mid_f[static_cast<std::size_t>(i)], edge_f[static_cast<std::size_t>(i) + 1],
                            whole, panel_budget, 30, qs);
    }
    return total;
}

// log of the rho-marginal likelihood of an observed r at sample size n,
// up to a rho-free constant.
double log_reduced_likelihood(double rho, double r, int n) {
    const double x = 0.5 * (1.0 + rho * r);
    return 0.5 * (n - 1) * std::log1p(-rho * rho) + 0.5 * (3 - 2 * n) * std::log1p(-rho * r) +
           std::log(hyp2f1(0.5, 0.5, n - 0.5, x));
}

}  // namespace

double pearson(std::span<const double> x, std::span<const double> y) {
    require_pair(x, y, 3, "pearson");
    const double mx = mean_of(x);
    const double my = mean_of(y);
    long double sxx = 0.0L, syy = 0.0L, sxy = 0.0L;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const long double dx = x[i] - mx;
        const long double dy = y[i] - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if (sxx <= 0.0L || syy <= 0.0L)
        throw StatError("pearson: correlation undefined for zero-variance input");
    return static_cast<double>(sxy / std::sqrt(sxx * syy));
}

PValue p_two_tailed_ex(double r, int n) {
    if (n < 3) throw StatError("p_two_tailed: need n >= 3");
    if (std::fabs(r) > 1.0) throw StatError("p_two_tailed: |r| > 1");
    if (std::fabs(r) == 1.0) return {0.0, true};
    const double df = n - 2;
    const double t = r * std::sqrt(df / (1.0 - r * r));
    return {student_t_two_tailed(t, df), false};
}

double p_two_tailed(double r, int n) { return p_two_tailed_ex(r, n).p; }

double jzs_bf(double r, int n) {
    if (n < 3) throw StatError("jzs_bf: need n >= 3");
    if (std::fabs(r) > 1.0) throw StatError("jzs_bf: |r| > 1");
    if (std::fabs(r) >= 1.0 - 1e-9) return kInf;

    // Scale by the likelihood peak so exp() stays in range at large n|r|.
    double log_peak = -kInf;
    for (int i = 0; i <= 200; ++i) {
        const double rho = -0.999 + 1.998 * i / 200.0;
        log_peak = std::max(log_peak, log_reduced_likelihood(rho, r, n));
    }

    const auto integrand = [&](double rho) -> double {
        if (rho <= -1.0 || rho >= 1.0) return 0.0;
        return std::exp(log_reduced_likelihood(rho, r, n) - log_peak);
    };

    QuadStats qs;
    const double integral = adaptive_simpson(integrand, -1.0, 1.0, 1e-9, qs);
    if (qs.unresolved > 0)
        throw StatError("jzs_bf: quadrature did not converge (r=" + std::to_string(r) +
                        ", n=" + std::to_string(n) + ", evals=" + std::to_string(qs.evals) +
                        ", unresolved panels=" + std::to_string(qs.unresolved) + ")");
    const double log_l0 = log_reduced_likelihood(0.0, r, n);
    return 0.5 * integral * std::exp(log_peak - log_l0);
}

double jzs_bf_closed(double r, int n) {
    if (n < 3) throw StatError("jzs_bf_closed: need n >= 3");
    if (std::fabs(r) >= 1.0) return kInf;
    // kappa = 1 stretched-beta closed form (hypergeometric representation).
    const double lg = std::lgamma(0.5 * (n + 1)) - std::lgamma(0.5 * (n + 2));
    const double h = hyp2f1(0.5 * (n - 1), 0.5 * (n - 1), 0.5 * (n + 2), r * r);
    return std::exp(-std::log(2.0) + 0.5 * std::log(M_PI) + lg) * h;
}

LinFit linfit_rmse(std::span<const double> x, std::span<const double> y) {
    require_pair(x, y, 3, "linfit_rmse");
    const double mx = mean_of(x);
    const double my = mean_of(y);
    long double sxx = 0.0L, sxy = 0.0L;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const long double dx = x[i] - mx;
        sxx += dx * dx;
        sxy += dx * (y[i] - my);
    }
    if (sxx <= 0.0L) throw StatError("linfit_rmse: zero variance in x");
    LinFit fit;
    fit.slope = static_cast<double>(sxy / sxx);
    fit.intercept = my - fit.slope * mx;
    long double sse = 0.0L;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const long double e = y[i] - (fit.intercept + fit.slope * x[i]);
        sse += e * e;
    }
    fit.rmse = static_cast<double>(std::sqrt(sse / static_cast<long double>(x.size())));
    return fit;
}

ICCResult icc_2_1(const std::vector<std::vector<double>>& matrix) {
    const std::size_t n = matrix.size();
    if (n < 2) throw StatError("icc_2_1: need >= 2 subjects");
    const std::size_t k = matrix.front().size();
    if (k < 2) throw StatError("icc_2_1: need >= 2 sessions");
    for (const auto& row : matrix)
        if (row.size() != k)
            throw StatError("icc_2_1: incomplete matrix (listwise completeness required)");

    long double grand = 0.0L;
    for (const auto& row : matrix)
        for (const double v : row) grand += v;
    grand /= static_cast<long double>(n * k);

    std::vector<long double> row_mean(n, 0.0L), col_mean(k, 0.0L);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < k; ++j) {
            row_mean[i] += matrix[i][j];
            col_mean[j] += matrix[i][j];
        }
    for (auto& m : row_mean) m /= static_cast<long double>(k);
    for (auto& m : col_mean) m /= static_cast<long double>(n);

    long double ssr = 0.0L, ssc = 0.0L, sst = 0.0L;
    for (std::size_t i = 0; i < n; ++i) ssr += (row_mean[i] - grand) * (row_mean[i] - grand);
    ssr *= static_cast<long double>(k);
    for (std::size_t j = 0; j < k; ++j) ssc += (col_mean[j] - grand) * (col_mean[j] - grand);
    ssc *= static_cast<long double>(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < k; ++j) sst += (matrix[i][j] - grand) * (matrix[i][j] - grand);
    const long double sse = sst - ssr - ssc;

    const double msr = static_cast<double>(ssr / static_cast<long double>(n - 1));
    const double msc = static_cast<double>(ssc / static_cast<long double>(k - 1));
    const double mse = std::max(0.0, static_cast<double>(sse / static_cast<long double>((n - 1) * (k - 1))));

    const double denom = msr + (static_cast<double>(k) - 1.0) * mse +
                         static_cast<double>(k) / static_cast<double>(n) * (msc - mse);
    if (denom == 0.0) throw StatError("icc_2_1: degenerate matrix (no variance at all)");

    ICCResult res;
    res.n = static_cast<int>(n);
    res.k = static_cast<int>(k);
    res.icc = (msr - mse) / denom;
    if (mse == 0.0) {
        res.f = kInf;
        res.p = 0.0;
    } else {
        res.f = msr / mse;
        res.p = f_sf(res.f, static_cast<double>(n - 1), static_cast<double>((n - 1) * (k - 1)));
    }
    return res;
}

CorrResult correlate(std::span<const double> x, std::span<const double> y) {
    CorrResult res;
    res.r = pearson(x, y);
    res.n = static_cast<int>(x.size());
    const PValue pv = p_two_tailed_ex(res.r, res.n);
    res.p = pv.p;
    res.p_is_limit = pv.limit;
    res.bf10 = jzs_bf(res.r, res.n);
    res.rmse = linfit_rmse(x, y).rmse;
    return res;
}

}  // namespace pxlog
