#pragma once

namespace llmconf::special {

// Regularized incomplete beta I_x(a, b), evaluated with a modified Lentz
// continued fraction.
double incomplete_beta(double a, double b, double x);

// Two-sided tail probability P(|T| >= |t|) for Student's t with `df`
// (real, > 0) degrees of freedom.
double student_t_two_sided(double t, double df);

// Upper tail of the standard normal, P(Z >= z).
double normal_sf(double z);

}  // namespace llmconf::special
