#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <string>
#include <string_view>

namespace sparsedom {

/// Exact rational coordinate / value. Always canonical (gmp normalises).
using Rational = mpq_class;

Rational make_rational(std::int64_t num, std::int64_t den = 1);

/// 2^e for any integer e.
Rational pow2(int e);

/// "num/den" (or "num" when den == 1).
std::string to_string(Rational const& q);

/// Parses "num/den", an integer, or a finite decimal such as "-0.125" or
/// "3e-2". Decimals are converted exactly. Throws std::invalid_argument.
Rational parse_rational(std::string_view text);

/// Exact conversion of a finite double.
Rational from_double(double x);

inline double to_double(Rational const& q) { return q.get_d(); }

/// Shortest round-trip decimal for a double.
std::string format_double(double x);

inline Rational abs(Rational const& q) { return q < 0 ? Rational(-q) : q; }

} // namespace sparsedom
