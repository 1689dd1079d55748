#pragma once

#include "slmreg/error.hpp"

#include <cctype>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <string>
#include <string_view>

namespace slmreg {

/// Sample-size rule value(N) = scale * N^exponent.
///
/// Bandwidths and tempering parameters use negative exponents
/// (h = N^{-1/3}); block sizes use [scale * N^{1/2}].
struct PowerRule {
    double scale = 1.0;
    double exponent = 0.0;

    double operator()(double n) const { return scale * std::pow(n, exponent); }

    /// floor(scale * N^exponent), the integer-part convention for block sizes.
    std::size_t floor_at(std::size_t n) const {
        const double v = (*this)(static_cast<double>(n));
        // Guard against 2*sqrt(100) evaluating to 19.999999...
        return static_cast<std::size_t>(std::floor(v + 1e-9));
    }

    std::string label() const {
        char buf[64];
        if (exponent == 0.0) {
            std::snprintf(buf, sizeof buf, "%g", scale);
        } else if (scale == 1.0) {
            std::snprintf(buf, sizeof buf, "N^%g", exponent);
        } else {
            std::snprintf(buf, sizeof buf, "%g*N^%g", scale, exponent);
        }
        return buf;
    }

    friend bool operator==(const PowerRule&, const PowerRule&) = default;
};

namespace detail {

inline std::string strip(std::string_view text) {
    std::string out;
    for (char c : text) {
        if (!std::isspace(static_cast<unsigned char>(c)) && c != '[' && c != ']') {
            out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        }
    }
    return out;
}

// "0.25", "-1/3", "1/5"
inline double parse_number(const std::string& text) {
    require(!text.empty(), "empty number in rule");
    const auto slash = text.find('/');
    std::size_t used = 0;
    if (slash == std::string::npos) {
        const double v = std::stod(text, &used);
        require(used == text.size(), "malformed number '" + text + "'");
        return v;
    }
    const std::string num = text.substr(0, slash);
    const std::string den = text.substr(slash + 1);
    const double a = std::stod(num, &used);
    require(used == num.size(), "malformed fraction '" + text + "'");
    const double b = std::stod(den, &used);
    require(used == den.size() && b != 0.0, "malformed fraction '" + text + "'");
    return a / b;
}

}  // namespace detail

/// Parses rules such as "N^-1/3", "n^(-0.2)", "1/N", "1/sqrt(N)", "4*N^0.5", "[4N^0.5]", "0.1".
inline PowerRule parse_power_rule(std::string_view text) {
    const std::string s = detail::strip(text);
    detail::require(!s.empty(), "empty rule");
    try {
        if (s == "1/n") return {1.0, -1.0};
        if (s == "1/sqrt(n)" || s == "n^-1/2" || s == "n^(-1/2)") return {1.0, -0.5};
        const auto pos = s.find('n');
        if (pos == std::string::npos) {
            return {detail::parse_number(s), 0.0};
        }
        double scale = 1.0;
        if (pos > 0) {
            std::string lead = s.substr(0, pos);
            if (lead.back() == '*') lead.pop_back();
            scale = detail::parse_number(lead);
        }
        std::string tail = s.substr(pos + 1);
        if (tail.empty()) return {scale, 1.0};
        detail::require(tail.front() == '^', "expected '^' after N");
        tail.erase(0, 1);
        if (!tail.empty() && tail.front() == '(' && tail.back() == ')') {
            tail = tail.substr(1, tail.size() - 2);
        }
        return {scale, detail::parse_number(tail)};
    } catch (const std::logic_error&) {
        throw ValidationError("cannot parse rule '" + std::string(text) + "'");
    }
}

}  // namespace slmreg
