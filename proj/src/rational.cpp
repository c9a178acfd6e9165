#include "swis/rational.hpp"

#include <charconv>
#include <cmath>

#include "swis/errors.hpp"

namespace swis {

namespace {

std::int64_t parse_int(std::string_view s, const std::string& ctx) {
    std::int64_t v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size())
        throw ParseError("bad number '" + std::string(s) + "' in " + ctx);
    return v;
}

} // namespace

Rational parse_rational(const std::string& text) {
    if (text.empty()) throw ParseError("empty rational");

    if (const auto slash = text.find('/'); slash != std::string::npos) {
        const auto num = parse_int(std::string_view(text).substr(0, slash), text);
        const auto den = parse_int(std::string_view(text).substr(slash + 1), text);
        if (den == 0) throw RangeError("zero denominator in '" + text + "'");
        return Rational(num, den);
    }

    if (const auto dot = text.find('.'); dot != std::string::npos) {
        const std::string digits = text.substr(0, dot) + text.substr(dot + 1);
        const std::size_t frac_digits = text.size() - dot - 1;
        if (frac_digits == 0) throw ParseError("trailing dot in '" + text + "'");
        if (digits.size() > 18) throw RangeError("too many digits in '" + text + "'");
        std::int64_t den = 1;
        for (std::size_t i = 0; i < frac_digits; ++i) den *= 10;
        return Rational(parse_int(digits, text), den);
    }

    return Rational(parse_int(text, text));
}

std::string to_string(const Rational& r) {
    if (r.denominator() == 1) return std::to_string(r.numerator());
    return std::to_string(r.numerator()) + "/" + std::to_string(r.denominator());
}

} // namespace swis
