#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cstdint>
#include <string>

namespace patlim {

using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

// Parses "num/den" or "num". Throws std::invalid_argument on malformed input.
Rational parse_rational(const std::string& text);

// Writes r as "num/den" (or "num" when the denominator is 1).
std::string format_rational(const Rational& r);

double to_double(const Rational& r);

// floor(r * n) for a nonnegative integer n.
std::int64_t floor_times(const Rational& r, std::int64_t n);

}  // namespace patlim
