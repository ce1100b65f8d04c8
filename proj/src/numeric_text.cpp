#include "macek/numeric_text.hpp"

#include <charconv>
#include <limits>
#include <system_error>

#include "macek/errors.hpp"

namespace macek {

std::string format_probability(double p) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), p);
    if (ec != std::errc()) throw Error(ErrorCode::io_error, "probability formatting failed");
    std::string s(buf, end);
    // Shortest round-trip form, then pad the fraction to six digits. The
    // exponent form only appears for values far below any threshold; it
    // round-trips exactly, so it is kept as is.
    if (s.find('e') != std::string::npos || s.find('E') != std::string::npos) return s;
    auto dot = s.find('.');
    if (dot == std::string::npos) {
        s += '.';
        dot = s.size() - 1;
    }
    std::size_t frac = s.size() - dot - 1;
    while (frac < 6) {
        s += '0';
        ++frac;
    }
    return s;
}

double parse_probability(const std::string& text) {
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size()) {
        throw Error(ErrorCode::io_error, "bad probability literal '" + text + "'");
    }
    return value;
}

std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t n) {
    if (n == 0) throw Error(ErrorCode::invalid_config, "uniform_below(0)");
    const std::uint64_t max = std::numeric_limits<std::uint64_t>::max();
    const std::uint64_t limit = max - max % n;
    std::uint64_t x;
    do {
        x = rng();
    } while (x >= limit);
    return x % n;
}

double uniform_real(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace macek
