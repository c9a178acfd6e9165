#pragma once

#include <cstdint>
#include <string>

#include <boost/rational.hpp>

namespace swis {

/// Exact arithmetic for probabilities, compression ratios and schedule
/// averages. int64 numerators are ample: every quantity here has a
/// denominator dividing 2^B or a small weight-count product.
using Rational = boost::rational<std::int64_t>;

/// Accepts "3", "5/2" or "2.5" (up to 18 significant digits).
/// Throws ParseError on malformed input, RangeError on a zero denominator.
Rational parse_rational(const std::string& text);

/// "5/2" for non-integers, plain "3" when the denominator is 1.
std::string to_string(const Rational& r);

inline double to_double(const Rational& r) {
    return double(r.numerator()) / double(r.denominator());
}

} // namespace swis
