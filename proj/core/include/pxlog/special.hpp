#pragma once

namespace pxlog {

// Regularized incomplete beta I_x(a, b), continued-fraction evaluation.
// Relative accuracy ~1e-14 over a, b in (0, ~1e4), x in [0, 1].
double reg_inc_beta(double a, double b, double x);

// Upper tail P(T > t) of Student's t with df degrees of freedom.
double student_t_sf(double t, double df);

// Two-tailed P(|T| > |t|).
double student_t_two_tailed(double t, double df);

// Upper tail P(F > f) of the F distribution with (d1, d2) degrees of freedom.
double f_sf(double f, double d1, double d2);

// Gauss hypergeometric 2F1(a, b; c; x) by power series, 0 <= x < 1 (and x = 1
// when c - a - b > 0). Throws StatError if the series fails to converge.
double hyp2f1(double a, double b, double c, double x);

}  // namespace pxlog
