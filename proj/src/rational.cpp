#include "growlab/rational.hpp"

#include <array>
#include <charconv>
#include <cmath>

#include "growlab/common.hpp"

namespace growlab {

Rational parse_rational(std::string_view text) {
  auto fail = [&] { return DomainError("not a rational number: '" + std::string(text) + "'"); };
  if (text.empty()) throw fail();
  if (auto slash = text.find('/'); slash != std::string_view::npos) {
    BigInt num(std::string(text.substr(0, slash)));
    BigInt den(std::string(text.substr(slash + 1)));
    if (den == 0) throw fail();
    return Rational(num, den);
  }
  bool negative = false;
  std::size_t pos = 0;
  if (text[pos] == '+' || text[pos] == '-') negative = text[pos++] == '-';
  BigInt mantissa = 0;
  long long scale = 0;
  bool seen_digit = false;
  bool after_point = false;
  for (; pos < text.size(); ++pos) {
    const char c = text[pos];
    if (c >= '0' && c <= '9') {
      mantissa = mantissa * 10 + (c - '0');
      if (after_point) --scale;
      seen_digit = true;
    } else if (c == '.' && !after_point) {
      after_point = true;
    } else {
      break;
    }
  }
  if (!seen_digit) throw fail();
  if (pos < text.size()) {
    if (text[pos] != 'e' && text[pos] != 'E') throw fail();
    long long exponent = 0;
    auto tail = text.substr(pos + 1);
    if (!tail.empty() && tail.front() == '+') tail.remove_prefix(1);
    auto [ptr, ec] = std::from_chars(tail.data(), tail.data() + tail.size(), exponent);
    if (ec != std::errc{} || ptr != tail.data() + tail.size()) throw fail();
    scale += exponent;
  }
  Rational q(mantissa);
  BigInt ten_pow = boost::multiprecision::pow(BigInt(10), static_cast<unsigned>(scale < 0 ? -scale : scale));
  q = scale < 0 ? q / Rational(ten_pow) : q * Rational(ten_pow);
  return negative ? Rational(-q) : q;
}

Rational decimal_rational(double x) {
  if (!std::isfinite(x)) throw DomainError("cannot convert a non-finite value to a rational");
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  return parse_rational(std::string_view(buf.data(), ptr - buf.data()));
}

std::string to_string(const Rational& q) {
  return boost::multiprecision::numerator(q).str() +
         (boost::multiprecision::denominator(q) == 1 ? "" : "/" + boost::multiprecision::denominator(q).str());
}

std::int64_t to_int64(const Rational& q) {
  if (boost::multiprecision::denominator(q) != 1) throw DomainError("expected an integer, got " + to_string(q));
  const BigInt n = boost::multiprecision::numerator(q);
  if (n > BigInt(INT64_MAX) || n < BigInt(INT64_MIN)) throw DomainError("integer out of 64-bit range: " + n.str());
  return n.convert_to<std::int64_t>();
}

}  // namespace growlab
