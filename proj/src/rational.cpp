#include "patlim/rational.hpp"

#include <stdexcept>

namespace patlim {

namespace {

BigInt parse_integer(const std::string& s) {
    if (s.empty()) throw std::invalid_argument("empty integer literal");
    std::size_t start = (s[0] == '-' || s[0] == '+') ? 1 : 0;
    if (start == s.size()) throw std::invalid_argument("malformed integer: " + s);
    for (std::size_t i = start; i < s.size(); ++i)
        if (s[i] < '0' || s[i] > '9') throw std::invalid_argument("malformed integer: " + s);
    BigInt v(s[0] == '+' ? s.substr(1) : s);
    return v;
}

}  // namespace

Rational parse_rational(const std::string& text) {
    auto slash = text.find('/');
    if (slash == std::string::npos) return Rational(parse_integer(text));
    BigInt num = parse_integer(text.substr(0, slash));
    BigInt den = parse_integer(text.substr(slash + 1));
    if (den == 0) throw std::invalid_argument("zero denominator: " + text);
    return Rational(num, den);
}

std::string format_rational(const Rational& r) {
    auto num = boost::multiprecision::numerator(r);
    auto den = boost::multiprecision::denominator(r);
    if (den == 1) return num.str();
    return num.str() + "/" + den.str();
}

double to_double(const Rational& r) { return r.convert_to<double>(); }

std::int64_t floor_times(const Rational& r, std::int64_t n) {
    BigInt num = boost::multiprecision::numerator(r) * n;
    BigInt den = boost::multiprecision::denominator(r);
    BigInt q = num / den;
    if (num < 0 && q * den != num) q -= 1;
    return q.convert_to<std::int64_t>();
}

}  // namespace patlim
