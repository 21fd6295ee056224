#pragma once

#include <cstdint>

namespace fedcert {

// Regularized incomplete beta I_x(a, b) for a, b > 0 and x in [0, 1].
// Modified Lentz continued fraction; throws NumericError if it fails to
// converge within 500 iterations.
double reg_inc_beta(double x, double a, double b);

// Smallest x with I_x(a, b) >= p, located by bisection to within 1e-10.
double beta_quantile(double p, double a, double b);

// One-sided Clopper-Pearson lower confidence bound for a binomial
// proportion: the alpha quantile of Beta(successes, total - successes + 1),
// 0 when successes == 0.
double clopper_pearson_lower(std::int64_t successes, std::int64_t total, double alpha);

}  // namespace fedcert
