#pragma once

// Named drift/diffusion coefficients u -> c(t, u) and initial conditions.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "keyvalue.hpp"

namespace fspde {

/// "zero", "const:c", "linear:c" (c u) or "table:z0:v0,z1:v1,..." (piecewise
/// linear in u, extended linearly beyond the end nodes). Time-homogeneous.
class Coefficient {
public:
    enum class Kind { zero, constant, linear, table };

    Coefficient() = default;

    static Coefficient zero() { return {}; }
    static Coefficient constant(double c) { return Coefficient(Kind::constant, c); }
    static Coefficient linear(double c) { return Coefficient(Kind::linear, c); }
    static Coefficient table(std::vector<std::pair<double, double>> nodes) {
        if (nodes.size() < 2) throw UsageError("coefficient table needs at least two nodes");
        std::sort(nodes.begin(), nodes.end());
        for (std::size_t i = 1; i < nodes.size(); ++i)
            if (!(nodes[i].first > nodes[i - 1].first)) throw UsageError("coefficient table nodes must be distinct");
        for (const auto& [z, v] : nodes)
            if (!std::isfinite(z) || !std::isfinite(v)) throw UsageError("coefficient table must be finite");
        Coefficient c(Kind::table, 0.0);
        c.nodes_ = std::move(nodes);
        return c;
    }

    static Coefficient parse(const std::string& text) {
        const auto t = detail::trim(text);
        if (t == "zero" || t == "0") return zero();
        const auto colon = t.find(':');
        const auto head = t.substr(0, colon);
        const auto rest = colon == std::string::npos ? std::string{} : t.substr(colon + 1);
        if (head == "const" && !rest.empty()) return constant(parse_double(rest));
        if (head == "linear" && !rest.empty()) return linear(parse_double(rest));
        if (head == "table" && !rest.empty()) {
            std::vector<std::pair<double, double>> nodes;
            for (const auto& item : detail::split_tokens(rest, ", ;")) {
                const auto c = item.find(':');
                if (c == std::string::npos) throw UsageError("table node '" + item + "' must be z:value");
                nodes.emplace_back(parse_double(item.substr(0, c)), parse_double(item.substr(c + 1)));
            }
            return table(std::move(nodes));
        }
        throw UsageError("unknown coefficient '" + text + "'");
    }

    Kind kind() const noexcept { return kind_; }
    double parameter() const noexcept { return c_; }
    bool is_constant() const noexcept { return kind_ == Kind::zero || kind_ == Kind::constant; }
    bool is_zero() const noexcept {
        return kind_ == Kind::zero || ((kind_ == Kind::constant || kind_ == Kind::linear) && c_ == 0.0);
    }

    double operator()(double /*t*/, double u) const {
        switch (kind_) {
            case Kind::zero: return 0.0;
            case Kind::constant: return c_;
            case Kind::linear: return c_ * u;
            case Kind::table: return interpolate(u);
        }
        return 0.0;
    }

    /// Global Lipschitz constant in u.
    double lipschitz() const {
        switch (kind_) {
            case Kind::zero:
            case Kind::constant: return 0.0;
            case Kind::linear: return std::abs(c_);
            case Kind::table: {
                double l = 0.0;
                for (std::size_t i = 1; i < nodes_.size(); ++i) l = std::max(l, std::abs(segment_slope(i)));
                return l;
            }
        }
        return 0.0;
    }

    /// L_g = inf_{z != 0} |g(z)/z|.
    double linear_growth_lower() const {
        switch (kind_) {
            case Kind::zero:
            case Kind::constant: return 0.0;
            case Kind::linear: return std::abs(c_);
            case Kind::table: {
                // On each linear piece a/z + b is monotone, so the infimum sits
                // at a node, at an asymptote, or at the limit z -> 0.
                double best = std::min(std::abs(segment_slope(1)), std::abs(segment_slope(nodes_.size() - 1)));
                for (const auto& [z, v] : nodes_)
                    if (z != 0.0) best = std::min(best, std::abs(v / z));
                if (interpolate(0.0) == 0.0) {
                    const double eps = 1e-9 * (1.0 + std::abs(nodes_.front().first) + std::abs(nodes_.back().first));
                    best = std::min({best, std::abs(interpolate(eps) / eps), std::abs(interpolate(-eps) / eps)});
                }
                return best;
            }
        }
        return 0.0;
    }

    std::string str() const {
        auto num = [](double v) {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.17g", v);
            return std::string(buf);
        };
        switch (kind_) {
            case Kind::zero: return "zero";
            case Kind::constant: return "const:" + num(c_);
            case Kind::linear: return "linear:" + num(c_);
            case Kind::table: {
                std::string s = "table:";
                for (std::size_t i = 0; i < nodes_.size(); ++i)
                    s += (i ? "," : "") + num(nodes_[i].first) + ":" + num(nodes_[i].second);
                return s;
            }
        }
        return {};
    }

private:
    Coefficient(Kind k, double c) : kind_(k), c_(c) {
        if (!std::isfinite(c)) throw UsageError("coefficient parameter must be finite");
    }

    double segment_slope(std::size_t i) const {
        return (nodes_[i].second - nodes_[i - 1].second) / (nodes_[i].first - nodes_[i - 1].first);
    }

    double interpolate(double u) const {
        std::size_t i = 1;
        while (i + 1 < nodes_.size() && u > nodes_[i].first) ++i;
        return nodes_[i - 1].second + segment_slope(i) * (u - nodes_[i - 1].first);
    }

    Kind kind_ = Kind::zero;
    double c_ = 0.0;
    std::vector<std::pair<double, double>> nodes_;
};

}  // namespace fspde
