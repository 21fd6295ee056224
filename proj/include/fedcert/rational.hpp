#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <cstdint>
#include <string>

#include "fedcert/common.hpp"

namespace fedcert {

// Certificate arithmetic is exact: label probabilities are integer counts
// over C(n,k), and the certified-level inequality is evaluated in rationals
// so no floating-point rounding can flip a comparison.
using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

// C(n, k) exactly; 0 outside 0 <= k <= n.
BigInt binomial(std::int64_t n, std::int64_t k);

// Exact value of a finite double (every finite double is dyadic).
Rational rational_of(double x);

BigInt floor_rat(const Rational& x);
BigInt ceil_rat(const Rational& x);

double to_double(const Rational& x);

std::string to_string(const Rational& x);

}  // namespace fedcert
