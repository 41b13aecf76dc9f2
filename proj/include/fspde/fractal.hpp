#pragma once

// Combinatorial description of a p.c.f. self-similar set with a regular
// harmonic structure: contraction count, resistance weights, the level-0
// conductance form on the boundary V0, and the gluing relations between the
// corners of the first-level cells.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "errors.hpp"
#include "keyvalue.hpp"

namespace fspde {

struct SimilarityDimension {
    double hausdorff = 0.0;  // d_H, unique root of sum r_i^x = 1
    double spectral = 0.0;   // d_s = 2 d_H / (d_H + 1)
    double residual = 0.0;
};

/// Solves sum_i r_i^x = 1 for x > 0 by bisection on [1e-6, 64].
inline SimilarityDimension solve_similarity_dimension(std::span<const double> weights) {
    if (weights.size() < 2) throw InvalidSpecError("at least two resistance weights are required");
    for (double r : weights)
        if (!(r > 0.0 && r < 1.0)) throw InvalidSpecError("resistance weights must lie in (0,1)");

    auto residual = [&](double x) {
        double s = 0.0;
        for (double r : weights) s += std::pow(r, x);
        return s - 1.0;
    };
    double lo = 1e-6, hi = 64.0;
    if (residual(lo) < 0.0 || residual(hi) > 0.0)
        throw InvalidSpecError("similarity dimension not bracketed by [1e-6, 64]");
    for (int it = 0; it < 200 && hi - lo > 0.0; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) break;
        (residual(mid) > 0.0 ? lo : hi) = mid;
    }
    SimilarityDimension out;
    out.hausdorff = std::abs(residual(lo)) < std::abs(residual(hi)) ? lo : hi;
    out.residual = residual(out.hausdorff);
    out.spectral = 2.0 * out.hausdorff / (out.hausdorff + 1.0);
    if (std::abs(out.residual) > 1e-12) throw InvalidSpecError("similarity dimension solve did not reach 1e-12");
    return out;
}

/// Identification psi_{map_a}(corner_a) == psi_{map_b}(corner_b).
struct Gluing {
    std::size_t map_a = 0;
    std::size_t corner_a = 0;
    std::size_t map_b = 0;
    std::size_t corner_b = 0;
};

class FractalSpec {
public:
    FractalSpec() = default;

    /// `fixed_maps[p]` names the contraction whose fixed point is boundary corner p.
    /// When empty, corner p is taken to be the fixed point of map p (requires N == |V0|).
    FractalSpec(std::string name, std::vector<double> weights, std::size_t v0_size,
                std::vector<double> v0_conductances, std::vector<Gluing> gluings,
                std::vector<std::size_t> fixed_maps = {})
        : name_(std::move(name)), weights_(std::move(weights)), v0_size_(v0_size),
          conductances_(std::move(v0_conductances)), gluings_(std::move(gluings)),
          fixed_maps_(std::move(fixed_maps)) {
        if (fixed_maps_.empty()) {
            if (weights_.size() != v0_size_)
                throw InvalidSpecError("fixed_points must be given when n_maps != v0_size");
            fixed_maps_.resize(v0_size_);
            std::iota(fixed_maps_.begin(), fixed_maps_.end(), std::size_t{0});
        }
        validate();
        dims_ = solve_similarity_dimension(weights_);
    }

    const std::string& name() const noexcept { return name_; }
    std::size_t n_maps() const noexcept { return weights_.size(); }
    std::span<const double> resistance_weights() const noexcept { return weights_; }
    double weight(std::size_t i) const { return weights_.at(i); }
    std::size_t boundary_size() const noexcept { return v0_size_; }
    double conductance(std::size_t p, std::size_t q) const { return conductances_.at(p * v0_size_ + q); }
    std::span<const double> v0_conductances() const noexcept { return conductances_; }
    const std::vector<Gluing>& gluings() const noexcept { return gluings_; }
    std::size_t fixed_map(std::size_t corner) const { return fixed_maps_.at(corner); }
    const std::vector<std::size_t>& fixed_maps() const noexcept { return fixed_maps_; }

    double hausdorff_dimension() const noexcept { return dims_.hausdorff; }
    double spectral_dimension() const noexcept { return dims_.spectral; }
    double r_min() const { return *std::min_element(weights_.begin(), weights_.end()); }

    /// mu-weight r_i^{d_H} of a single first-level cell.
    double measure_weight(std::size_t i) const { return std::pow(weights_.at(i), dims_.hausdorff); }

private:
    void validate() const {
        const std::size_t n = weights_.size();
        if (n < 2) throw InvalidSpecError("n_maps must be at least 2");
        for (double r : weights_)
            if (!(r > 0.0 && r < 1.0)) throw InvalidSpecError("resistance weights must lie in (0,1)");
        if (v0_size_ < 2) throw InvalidSpecError("v0_size must be at least 2");
        if (conductances_.size() != v0_size_ * v0_size_)
            throw InvalidSpecError("conductance matrix must have v0_size^2 entries");
        for (std::size_t p = 0; p < v0_size_; ++p) {
            if (conductances_[p * v0_size_ + p] != 0.0) throw InvalidSpecError("conductance diagonal must be zero");
            for (std::size_t q = 0; q < v0_size_; ++q) {
                const double c = conductances_[p * v0_size_ + q];
                if (c < 0.0 || c != conductances_[q * v0_size_ + p])
                    throw InvalidSpecError("conductances must be symmetric and nonnegative");
            }
        }
        // Connected support on V0.
        std::vector<bool> seen(v0_size_, false);
        std::vector<std::size_t> stack{0};
        seen[0] = true;
        while (!stack.empty()) {
            const auto p = stack.back();
            stack.pop_back();
            for (std::size_t q = 0; q < v0_size_; ++q)
                if (!seen[q] && conductances_[p * v0_size_ + q] > 0.0) seen[q] = true, stack.push_back(q);
        }
        if (std::find(seen.begin(), seen.end(), false) != seen.end())
            throw InvalidSpecError("conductance graph on V0 is not connected");
        for (const auto& g : gluings_) {
            if (g.map_a >= n || g.map_b >= n || g.corner_a >= v0_size_ || g.corner_b >= v0_size_)
                throw InvalidSpecError("gluing relation out of range");
            if (g.map_a == g.map_b) throw InvalidSpecError("gluing relation must join distinct cells");
        }
        if (fixed_maps_.size() != v0_size_) throw InvalidSpecError("one fixed map per boundary corner required");
        for (auto m : fixed_maps_)
            if (m >= n) throw InvalidSpecError("fixed map out of range");
    }

    std::string name_;
    std::vector<double> weights_;
    std::size_t v0_size_ = 0;
    std::vector<double> conductances_;
    std::vector<Gluing> gluings_;
    std::vector<std::size_t> fixed_maps_;
    SimilarityDimension dims_;
};

/// Sierpinski gasket: three maps, r = 3/5, unit triangle, psi_i(q_j) = psi_j(q_i).
inline FractalSpec sierpinski_gasket() {
    std::vector<Gluing> glue;
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = i + 1; j < 3; ++j) glue.push_back({i, j, j, i});
    return FractalSpec("gasket", {0.6, 0.6, 0.6}, 3, {0, 1, 1, 1, 0, 1, 1, 1, 0}, std::move(glue));
}

/// Unit interval: two maps, r = 1/2, psi_0(1) = psi_1(0).
inline FractalSpec unit_interval() {
    return FractalSpec("interval", {0.5, 0.5}, 2, {0, 1, 1, 0}, {{0, 1, 1, 0}});
}

inline FractalSpec builtin_fractal(const std::string& name) {
    if (name == "gasket" || name == "sierpinski") return sierpinski_gasket();
    if (name == "interval") return unit_interval();
    throw InvalidSpecError("unknown built-in fractal '" + name + "'");
}

/// Keys: name, n_maps, weights, v0_size, conductances (row-major), gluings
/// (quadruples "map corner map corner"), optional fixed_points (one map per corner).
inline FractalSpec parse_fractal_spec(const KeyValues& kv) {
    auto require = [&](const char* key) -> const std::string& {
        auto it = kv.find(key);
        if (it == kv.end()) throw InvalidSpecError(std::string("fractal spec missing key '") + key + "'");
        return it->second;
    };
    try {
        const auto n_maps = static_cast<std::size_t>(parse_integer(require("n_maps")));
        auto weights = parse_double_list(require("weights"));
        if (weights.size() == 1 && n_maps > 1) weights.assign(n_maps, weights.front());
        if (weights.size() != n_maps) throw InvalidSpecError("weights must list n_maps values");
        const auto v0 = static_cast<std::size_t>(parse_integer(require("v0_size")));
        auto cond = parse_double_list(require("conductances"));
        std::vector<Gluing> glue;
        if (auto it = kv.find("gluings"); it != kv.end()) {
            const auto ints = parse_integer_list(it->second);
            if (ints.size() % 4 != 0) throw InvalidSpecError("gluings must be a list of quadruples");
            for (std::size_t i = 0; i < ints.size(); i += 4) {
                for (std::size_t k = 0; k < 4; ++k)
                    if (ints[i + k] < 0) throw InvalidSpecError("gluing indices must be nonnegative");
                glue.push_back({static_cast<std::size_t>(ints[i]), static_cast<std::size_t>(ints[i + 1]),
                                static_cast<std::size_t>(ints[i + 2]), static_cast<std::size_t>(ints[i + 3])});
            }
        }
        std::vector<std::size_t> fixed;
        if (auto it = kv.find("fixed_points"); it != kv.end())
            for (auto m : parse_integer_list(it->second)) {
                if (m < 0) throw InvalidSpecError("fixed_points must be nonnegative");
                fixed.push_back(static_cast<std::size_t>(m));
            }
        const auto name = kv.count("name") ? kv.at("name") : std::string("custom");
        return FractalSpec(name, std::move(weights), v0, std::move(cond), std::move(glue), std::move(fixed));
    } catch (const UsageError& e) {
        throw InvalidSpecError(e.what());
    }
}

/// Resolves a built-in name or a path to a key-value fractal file.
inline FractalSpec load_fractal(const std::string& name_or_path) {
    if (name_or_path == "gasket" || name_or_path == "sierpinski" || name_or_path == "interval")
        return builtin_fractal(name_or_path);
    return parse_fractal_spec(load_key_values(name_or_path));
}

// ---------------------------------------------------------------------------
// Words, cells and partitions

/// Finite word over the map alphabet {0, ..., N-1}; the empty word addresses F itself.
struct Word {
    std::vector<std::size_t> letters;

    std::size_t length() const noexcept { return letters.size(); }
    bool is_prefix_of(const Word& other) const {
        return letters.size() <= other.letters.size() &&
               std::equal(letters.begin(), letters.end(), other.letters.begin());
    }
    Word child(std::size_t letter) const {
        Word w = *this;
        w.letters.push_back(letter);
        return w;
    }
    /// Digits concatenated; '.'-separated when some letter exceeds 9.
    std::string str() const {
        const bool wide = std::any_of(letters.begin(), letters.end(), [](auto l) { return l > 9; });
        std::string s;
        for (std::size_t i = 0; i < letters.size(); ++i) {
            if (wide && i > 0) s += '.';
            s += std::to_string(letters[i]);
        }
        return s;
    }
    auto operator<=>(const Word&) const = default;
};

/// r_w = prod r_{w_i}.
inline double resistance_scale(const FractalSpec& spec, const Word& w) {
    double r = 1.0;
    for (auto l : w.letters) r *= spec.weight(l);
    return r;
}

/// mu(F_w) = prod r_{w_i}^{d_H}.
inline double cell_measure(const FractalSpec& spec, const Word& w) {
    double m = 1.0;
    for (auto l : w.letters) {
        if (l >= spec.n_maps()) throw AddressError("word letter out of range");
        m *= spec.measure_weight(l);
    }
    return m;
}

struct Partition {
    int level = 0;
    std::vector<Word> words;  // lexicographic order

    std::size_t max_length() const {
        std::size_t m = 0;
        for (const auto& w : words) m = std::max(m, w.length());
        return m;
    }
};

/// Lambda_n: words with r_{w_1..w_{m-1}} > 2^{-n} >= r_w; Lambda_0 = {empty word}.
inline Partition build_partition(const FractalSpec& spec, int n) {
    if (n < 0) throw DomainError("partition level must be nonnegative");
    Partition part{n, {}};
    if (n == 0) {
        part.words.push_back(Word{});
        return part;
    }
    const double scale = std::ldexp(1.0, -n);
    // Depth-first over words whose scale is still above 2^{-n}.
    std::vector<std::pair<Word, double>> stack{{Word{}, 1.0}};
    while (!stack.empty()) {
        auto [w, r] = std::move(stack.back());
        stack.pop_back();
        for (std::size_t i = spec.n_maps(); i-- > 0;) {
            const double rc = r * spec.weight(i);
            if (scale >= rc)
                part.words.push_back(w.child(i));
            else
                stack.emplace_back(w.child(i), rc);
        }
    }
    std::sort(part.words.begin(), part.words.end());
    return part;
}

struct PartitionAudit {
    std::size_t words = 0;
    std::size_t prefix_violations = 0;      // one word a prefix of another
    double measure_sum = 0.0;               // 1 for an exact cover
    std::size_t refinement_violations = 0;  // words without a prefix in the coarser partition
    std::size_t bound_violations = 0;       // r_min^{d_H} 2^{-d_H n} < mu(F_w) <= 2^{-d_H n} fails

    bool ok() const { return prefix_violations == 0 && refinement_violations == 0 && bound_violations == 0 && std::abs(measure_sum - 1.0) < 1e-12; }
};

/// Checks Lambda_n against its defining properties; `coarser` is Lambda_{n-1} or null.
inline PartitionAudit audit_partition(const FractalSpec& spec, const Partition& part, const Partition* coarser = nullptr) {
    PartitionAudit a;
    a.words = part.words.size();
    const double dh = spec.hausdorff_dimension();
    const double upper = std::pow(2.0, -dh * part.level);
    const double lower = std::pow(spec.r_min(), dh) * upper;
    for (std::size_t i = 0; i < part.words.size(); ++i) {
        const auto& w = part.words[i];
        // Sorted order puts every extension of w directly after it.
        if (i + 1 < part.words.size() && w.is_prefix_of(part.words[i + 1])) ++a.prefix_violations;
        const double mu = cell_measure(spec, w);
        a.measure_sum += mu;
        if (!(mu > lower && mu <= upper * (1.0 + 1e-12))) ++a.bound_violations;
        if (coarser) {
            const bool has = std::any_of(coarser->words.begin(), coarser->words.end(), [&](const Word& c) { return c.is_prefix_of(w); });
            if (!has) ++a.refinement_violations;
        }
    }
    return a;
}

}  // namespace fspde
