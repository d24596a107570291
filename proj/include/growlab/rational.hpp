#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include <boost/multiprecision/cpp_int.hpp>

namespace growlab {

using Rational = boost::multiprecision::cpp_rational;
using BigInt = boost::multiprecision::cpp_int;

/// Parses "0.05", "-3", "1e-2" or "1/20" into an exact rational.
Rational parse_rational(std::string_view text);

/// Exact rational equal to the shortest decimal that round-trips `x`,
/// so 0.05 maps to 1/20 rather than the binary double's expansion.
Rational decimal_rational(double x);

std::string to_string(const Rational& q);

/// The integer value of q; throws when q is not an integer in int64 range.
std::int64_t to_int64(const Rational& q);

}  // namespace growlab
