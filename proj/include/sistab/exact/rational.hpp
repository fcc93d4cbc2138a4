#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace sistab {

using Integer = boost::multiprecision::cpp_int;
// Always stored reduced with positive denominator (boost maintains this).
using Rational = boost::multiprecision::cpp_rational;

inline Integer rat_num(const Rational& r) { return boost::multiprecision::numerator(r); }
inline Integer rat_den(const Rational& r) { return boost::multiprecision::denominator(r); }

// floor/ceil toward the integer lattice; cpp_int division truncates toward zero.
inline Integer rational_floor(const Rational& r) {
    Integer n = rat_num(r), d = rat_den(r);
    Integer q = n / d;
    if (n < 0 && q * d != n) --q;
    return q;
}

inline Integer rational_ceil(const Rational& r) {
    Integer n = rat_num(r), d = rat_den(r);
    Integer q = n / d;
    if (n > 0 && q * d != n) ++q;
    return q;
}

inline double to_double(const Rational& r) { return r.template convert_to<double>(); }
inline double to_double(const Integer& n) { return n.template convert_to<double>(); }

// log of a positive big integer without overflow: split off the high bits.
inline double log_integer(const Integer& n) {
    if (n <= 0) throw std::domain_error("log_integer: nonpositive argument");
    const unsigned bits = static_cast<unsigned>(boost::multiprecision::msb(n));
    if (bits <= 52) return std::log(to_double(n));
    const unsigned shift = bits - 52;
    Integer hi = n >> shift;
    return std::log(to_double(hi)) + static_cast<double>(shift) * std::log(2.0);
}

inline double log_rational(const Rational& r) {
    return log_integer(rat_num(r)) - log_integer(rat_den(r));
}

inline Integer factorial_integer(long n) {
    if (n < 0) throw std::domain_error("factorial of negative");
    Integer f = 1;
    for (long i = 2; i <= n; ++i) f *= i;
    return f;
}

inline Integer binomial_integer(long n, long k) {
    if (k < 0 || k > n) return 0;
    if (k > n - k) k = n - k;
    Integer r = 1;
    for (long i = 1; i <= k; ++i) {
        r *= (n - k + i);
        r /= i;  // exact at every step: r is C(n-k+i, i)
    }
    return r;
}

inline std::string rational_to_string(const Rational& r) {
    if (rat_den(r) == 1) return rat_num(r).str();
    return rat_num(r).str() + "/" + rat_den(r).str();
}

inline Rational rational_from_string(const std::string& s) {
    auto slash = s.find('/');
    if (slash == std::string::npos) return Rational(Integer(s));
    return Rational(Integer(s.substr(0, slash)), Integer(s.substr(slash + 1)));
}

}  // namespace sistab
