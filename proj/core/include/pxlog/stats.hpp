#pragma once

#include <span>
#include <vector>

namespace pxlog {

struct PValue {
    double p{1.0};
    bool limit{false};  // |r| = 1 degenerate case, p reported as the 0 limit
};

struct CorrResult {
    double r{0.0};
    int n{0};
    double p{1.0};
    bool p_is_limit{false};
    double bf10{1.0};
    double rmse{0.0};  // RMSE of the OLS fit of y on x
};

struct ICCResult {
    double icc{0.0};
    int n{0};  // subjects
    int k{0};  // sessions
    double f{0.0};
    double p{1.0};
};

struct LinFit {
    double slope{0.0};
    double intercept{0.0};
    double rmse{0.0};
};

// Product-moment correlation. Requires length >= 3 and nonzero variance on
// both sides (StatError otherwise).
double pearson(std::span<const double> x, std::span<const double> y);

// Two-tailed p for H0: rho = 0 via t = r*sqrt(n-2)/sqrt(1-r^2) on n-2 df.
PValue p_two_tailed_ex(double r, int n);
double p_two_tailed(double r, int n);

// JZS-family correlation Bayes factor: uniform (stretched beta, kappa = 1)
// prior on rho, evaluated by adaptive quadrature of the reduced likelihood to
// relative error < 1e-6. Returns +inf as |r| -> 1. The closed hypergeometric
// form is jzs_bf_closed(), kept as the independent cross-check.
double jzs_bf(double r, int n);
double jzs_bf_closed(double r, int n);

LinFit linfit_rmse(std::span<const double> x, std::span<const double> y);

// ICC(2,1): two-way random effects, absolute agreement, single measurement.
// Matrix is subjects x sessions, listwise complete. p from F = MSR/MSE on
// (n-1, (n-1)(k-1)) df.
ICCResult icc_2_1(const std::vector<std::vector<double>>& matrix);

// Full (r, n, p, BF, RMSE) bundle for one variable pairing.
CorrResult correlate(std::span<const double> x, std::span<const double> y);

}  // namespace pxlog
