#pragma once

// Flat "key = value" text format shared by fractal descriptions and run configs.
// Blank lines and '#' comments are ignored; later keys override earlier ones.

#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "errors.hpp"

namespace fspde {

using KeyValues = std::map<std::string, std::string>;

namespace detail {

inline std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(first, last - first + 1));
}

inline std::vector<std::string> split_tokens(std::string_view s, std::string_view separators = " ,;\t") {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && separators.find(s[i]) != std::string_view::npos) ++i;
        std::size_t j = i;
        while (j < s.size() && separators.find(s[j]) == std::string_view::npos) ++j;
        if (j > i) out.emplace_back(s.substr(i, j - i));
        i = j;
    }
    return out;
}

}  // namespace detail

inline KeyValues parse_key_values(std::string_view text) {
    KeyValues kv;
    std::istringstream in{std::string(text)};
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const auto body = detail::trim(line);
        if (body.empty()) continue;
        const auto eq = body.find('=');
        if (eq == std::string::npos)
            throw UsageError("line " + std::to_string(lineno) + ": expected 'key = value'");
        auto key = detail::trim(std::string_view(body).substr(0, eq));
        if (key.empty()) throw UsageError("line " + std::to_string(lineno) + ": empty key");
        kv[key] = detail::trim(std::string_view(body).substr(eq + 1));
    }
    return kv;
}

inline KeyValues load_key_values(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_key_values(buf.str());
}

inline double parse_double(const std::string& token) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(token, &used);
    } catch (const std::exception&) {
        throw UsageError("not a number: '" + token + "'");
    }
    if (used != token.size()) {
        // Allow simple rationals such as "3/5".
        const auto slash = token.find('/');
        if (slash != std::string::npos)
            return parse_double(token.substr(0, slash)) / parse_double(token.substr(slash + 1));
        throw UsageError("not a number: '" + token + "'");
    }
    return v;
}

inline long long parse_integer(const std::string& token) {
    long long v = 0;
    const auto* end = token.data() + token.size();
    auto [ptr, ec] = std::from_chars(token.data(), end, v);
    if (ec != std::errc{} || ptr != end) throw UsageError("not an integer: '" + token + "'");
    return v;
}

inline std::vector<double> parse_double_list(std::string_view s) {
    std::vector<double> out;
    for (const auto& tok : detail::split_tokens(s)) out.push_back(parse_double(tok));
    return out;
}

inline std::vector<long long> parse_integer_list(std::string_view s) {
    std::vector<long long> out;
    for (const auto& tok : detail::split_tokens(s, " ,;\t()[]")) out.push_back(parse_integer(tok));
    return out;
}

}  // namespace fspde
