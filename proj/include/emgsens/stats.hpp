#pragma once

#include <vector>

namespace emgsens {

double normal_cdf(double x);

// Two-tailed p against the standard normal, clipped into (0, 1].
double p_two_tailed_normal(double t);

// Two-tailed p against Student's t with df degrees of freedom.
double p_two_tailed_student(double t, double df);

// Regularized incomplete beta I_x(a, b).
double incomplete_beta(double a, double b, double x);

// Linear-interpolation quantile (the "type 7" convention). Copies and sorts.
double quantile(std::vector<double> v, double q);

}  // namespace emgsens
