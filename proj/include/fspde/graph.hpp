#pragma once

// Level-m graph approximation of a fractal: vertices are the corners of the
// N^m level-m cells with glued duplicates merged, edges carry the rescaled
// level-0 conductances r_w^{-1} A_pq, and vertex masses lump each cell's
// measure equally onto its corners.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "errors.hpp"
#include "fractal.hpp"

namespace fspde {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

struct Edge {
    std::size_t u = 0;
    std::size_t v = 0;
    double conductance = 0.0;
};

inline constexpr int default_max_level = 24;
// Level-m cell count N^m above this is refused (gasket level 8).
inline constexpr std::size_t default_cell_budget = 6561;

class GraphApproximation {
public:
    const FractalSpec& spec() const noexcept { return spec_; }
    int level() const noexcept { return level_; }
    std::size_t vertex_count() const noexcept { return masses_.size(); }
    std::size_t cell_count() const noexcept { return cell_count_; }

    const std::vector<Edge>& edges() const noexcept { return edges_; }
    const std::vector<double>& masses() const noexcept { return masses_; }
    Vector mass_vector() const { return Eigen::Map<const Vector>(masses_.data(), masses_.size()); }
    double mass(std::size_t v) const { return masses_.at(v); }

    const std::string& address(std::size_t v) const { return addresses_.at(v); }
    bool is_boundary(std::size_t v) const { return boundary_corner_.at(v) >= 0; }
    /// Index p of the V0 corner sitting at vertex v, or -1.
    int boundary_corner(std::size_t v) const { return boundary_corner_.at(v); }
    std::size_t boundary_vertex(std::size_t corner) const { return boundary_vertices_.at(corner); }

    /// Vertex id of corner p of the level-m cell with index `cell`.
    std::size_t cell_vertex(std::size_t cell, std::size_t corner) const {
        return cell_vertices_.at(cell * spec_.boundary_size() + corner);
    }
    /// Level-m cells whose closure contains vertex v.
    const std::vector<std::size_t>& cells_at(std::size_t v) const { return vertex_cells_.at(v); }

    Word cell_word(std::size_t cell) const {
        Word w;
        w.letters.resize(static_cast<std::size_t>(level_));
        for (int i = level_; i-- > 0;) {
            w.letters[static_cast<std::size_t>(i)] = cell % spec_.n_maps();
            cell /= spec_.n_maps();
        }
        return w;
    }

    /// Resolves "word:corner" (word possibly shorter than the level) to a vertex id.
    std::size_t resolve(const Word& word, std::size_t corner) const {
        if (word.length() > static_cast<std::size_t>(level_))
            throw AddressError("address deeper than graph level " + std::to_string(level_));
        if (corner >= spec_.boundary_size()) throw AddressError("corner index out of range");
        std::size_t cell = 0;
        for (auto l : word.letters) {
            if (l >= spec_.n_maps()) throw AddressError("word letter out of range");
            cell = cell * spec_.n_maps() + l;
        }
        for (auto k = word.length(); k < static_cast<std::size_t>(level_); ++k)
            cell = cell * spec_.n_maps() + spec_.fixed_map(corner);
        return cell_vertex(cell, corner);
    }

    std::size_t resolve(const std::string& address) const {
        const auto colon = address.find(':');
        if (colon == std::string::npos) {
            try {
                const auto id = parse_integer(address);
                if (id < 0 || static_cast<std::size_t>(id) >= vertex_count()) throw AddressError("vertex id out of range");
                return static_cast<std::size_t>(id);
            } catch (const UsageError&) {
                throw AddressError("malformed address '" + address + "'");
            }
        }
        Word w;
        const auto word_part = address.substr(0, colon);
        try {
            if (word_part.find('.') != std::string::npos) {
                for (auto v : parse_integer_list(std::string(word_part)))
                    w.letters.push_back(static_cast<std::size_t>(v));
            } else {
                for (char c : word_part) {
                    if (c < '0' || c > '9') throw AddressError("malformed address '" + address + "'");
                    w.letters.push_back(static_cast<std::size_t>(c - '0'));
                }
            }
            return resolve(w, static_cast<std::size_t>(parse_integer(address.substr(colon + 1))));
        } catch (const UsageError&) {
            throw AddressError("malformed address '" + address + "'");
        }
    }

    /// Energy E_m(u,u) = sum over edges c_xy (u_x - u_y)^2.
    double energy(const Vector& u) const {
        double e = 0.0;
        for (const auto& ed : edges_) {
            const double d = u[ed.u] - u[ed.v];
            e += ed.conductance * d * d;
        }
        return e;
    }

    /// Graph Laplacian H with H_xy = -c_xy and zero row sums.
    Eigen::SparseMatrix<double> laplacian() const {
        std::vector<Eigen::Triplet<double>> t;
        t.reserve(4 * edges_.size());
        for (const auto& e : edges_) {
            t.emplace_back(e.u, e.v, -e.conductance);
            t.emplace_back(e.v, e.u, -e.conductance);
            t.emplace_back(e.u, e.u, e.conductance);
            t.emplace_back(e.v, e.v, e.conductance);
        }
        Eigen::SparseMatrix<double> h(vertex_count(), vertex_count());
        h.setFromTriplets(t.begin(), t.end());
        return h;
    }

    bool connected() const {
        std::vector<std::vector<std::size_t>> adj(vertex_count());
        for (const auto& e : edges_)
            if (e.conductance > 0.0) adj[e.u].push_back(e.v), adj[e.v].push_back(e.u);
        std::vector<bool> seen(vertex_count(), false);
        std::vector<std::size_t> stack{0};
        seen[0] = true;
        std::size_t count = 1;
        while (!stack.empty()) {
            const auto x = stack.back();
            stack.pop_back();
            for (auto y : adj[x])
                if (!seen[y]) seen[y] = true, ++count, stack.push_back(y);
        }
        return count == vertex_count();
    }

private:
    friend GraphApproximation build_graph(const FractalSpec&, int, int);

    FractalSpec spec_;
    int level_ = 0;
    std::size_t cell_count_ = 0;
    std::vector<std::size_t> cell_vertices_;
    std::vector<std::vector<std::size_t>> vertex_cells_;
    std::vector<std::string> addresses_;
    std::vector<int> boundary_corner_;
    std::vector<std::size_t> boundary_vertices_;
    std::vector<double> masses_;
    std::vector<Edge> edges_;
};

namespace detail {

struct DisjointSets {
    std::vector<std::size_t> parent;
    explicit DisjointSets(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), std::size_t{0}); }
    std::size_t find(std::size_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    }
    // The smaller label becomes the root so each class is represented by its minimum.
    void unite(std::size_t a, std::size_t b) {
        a = find(a), b = find(b);
        if (a == b) return;
        if (a < b) parent[b] = a;
        else parent[a] = b;
    }
};

}  // namespace detail

/// Builds the level-m approximation; levels beyond `max_level` or with more
/// than `default_cell_budget` cells are refused.
inline GraphApproximation build_graph(const FractalSpec& spec, int m, int max_level = default_max_level) {
    if (m < 0) throw DomainError("graph level must be nonnegative");
    if (m > max_level) throw ResourceError("graph level " + std::to_string(m) + " exceeds budget " + std::to_string(max_level));
    const std::size_t n = spec.n_maps();
    const std::size_t v0 = spec.boundary_size();
    std::size_t cells = 1;
    for (int k = 0; k < m; ++k) {
        cells *= n;
        if (cells > default_cell_budget)
            throw ResourceError("graph level " + std::to_string(m) + " too deep for memory budget (" + std::to_string(default_cell_budget) + " cells)");
    }

    GraphApproximation g;
    g.spec_ = spec;
    g.level_ = m;
    g.cell_count_ = cells;

    // Label (cell, corner) -> cell * v0 + corner. Gluing at depth k between
    // children i and j of prefix u identifies corner p of u i f_p^{m-k}
    // with corner q of u j f_q^{m-k}.
    detail::DisjointSets sets(cells * v0);
    std::size_t prefixes = 1;
    for (int k = 1; k <= m; ++k) {
        const int tail = m - k;
        for (std::size_t u = 0; u < prefixes; ++u) {
            for (const auto& gl : spec.gluings()) {
                std::size_t a = u * n + gl.map_a;
                std::size_t b = u * n + gl.map_b;
                for (int s = 0; s < tail; ++s) {
                    a = a * n + spec.fixed_map(gl.corner_a);
                    b = b * n + spec.fixed_map(gl.corner_b);
                }
                sets.unite(a * v0 + gl.corner_a, b * v0 + gl.corner_b);
            }
        }
        prefixes *= n;
    }

    // Vertex ids in order of each class's minimal label.
    constexpr auto none = static_cast<std::size_t>(-1);
    std::vector<std::size_t> id_of_root(cells * v0, none);
    g.cell_vertices_.resize(cells * v0);
    for (std::size_t label = 0; label < cells * v0; ++label) {
        const auto root = sets.find(label);
        if (id_of_root[root] == none) {
            id_of_root[root] = g.addresses_.size();
            const auto cell = label / v0;
            g.addresses_.push_back(g.cell_word(cell).str() + ":" + std::to_string(label % v0));
        }
        g.cell_vertices_[label] = id_of_root[root];
    }
    const std::size_t nv = g.addresses_.size();

    g.boundary_corner_.assign(nv, -1);
    g.boundary_vertices_.resize(v0);
    for (std::size_t p = 0; p < v0; ++p) {
        std::size_t cell = 0;
        for (int k = 0; k < m; ++k) cell = cell * n + spec.fixed_map(p);
        const auto v = g.cell_vertices_[cell * v0 + p];
        g.boundary_corner_[v] = static_cast<int>(p);
        g.boundary_vertices_[p] = v;
    }

    g.masses_.assign(nv, 0.0);
    g.vertex_cells_.assign(nv, {});
    std::map<std::pair<std::size_t, std::size_t>, double> conductance;
    for (std::size_t cell = 0; cell < cells; ++cell) {
        const Word w = g.cell_word(cell);
        const double inv_r = 1.0 / resistance_scale(spec, w);
        const double share = cell_measure(spec, w) / static_cast<double>(v0);
        for (std::size_t p = 0; p < v0; ++p) {
            const auto vp = g.cell_vertices_[cell * v0 + p];
            g.masses_[vp] += share;
            g.vertex_cells_[vp].push_back(cell);
            for (std::size_t q = p + 1; q < v0; ++q) {
                const double a = spec.conductance(p, q);
                if (a <= 0.0) continue;
                const auto vq = g.cell_vertices_[cell * v0 + q];
                if (vp == vq) throw InvalidSpecError("gluing collapses two corners of one cell");
                conductance[{std::min(vp, vq), std::max(vp, vq)}] += inv_r * a;
            }
        }
    }
    g.edges_.reserve(conductance.size());
    for (const auto& [key, c] : conductance) g.edges_.push_back({key.first, key.second, c});

    if (!g.connected()) throw InvalidSpecError("graph approximation is disconnected");
    return g;
}

/// Position in [0,1] of a vertex of the built-in interval (maps x -> (x + i)/2).
inline double interval_coordinate(const GraphApproximation& g, std::size_t v) {
    if (g.spec().name() != "interval") throw InvalidSpecError("interval coordinates need the built-in interval");
    const auto cell = g.cells_at(v).front();
    const Word w = g.cell_word(cell);
    double x = 0.0, scale = 0.5;
    for (auto l : w.letters) x += scale * static_cast<double>(l), scale *= 0.5;
    const double corner = g.cell_vertex(cell, 0) == v ? 0.0 : 1.0;
    return x + 2.0 * scale * corner;
}

/// Effective resistance between two vertices from one grounded Laplacian solve.
inline double effective_resistance(const GraphApproximation& g, std::size_t x, std::size_t y) {
    const auto nv = g.vertex_count();
    if (x >= nv || y >= nv) throw AddressError("vertex id out of range");
    if (x == y) return 0.0;
    if (!g.connected()) throw InvalidSpecError("graph approximation is disconnected");
    // Ground y: drop its row and column.
    auto reduced = [y](std::size_t v) { return v < y ? v : v - 1; };
    std::vector<Eigen::Triplet<double>> t;
    for (const auto& e : g.edges()) {
        const bool uy = e.u == y, vy = e.v == y;
        if (!uy) t.emplace_back(reduced(e.u), reduced(e.u), e.conductance);
        if (!vy) t.emplace_back(reduced(e.v), reduced(e.v), e.conductance);
        if (!uy && !vy) {
            t.emplace_back(reduced(e.u), reduced(e.v), -e.conductance);
            t.emplace_back(reduced(e.v), reduced(e.u), -e.conductance);
        }
    }
    Eigen::SparseMatrix<double> h(nv - 1, nv - 1);
    h.setFromTriplets(t.begin(), t.end());
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(h);
    if (solver.info() != Eigen::Success) throw NumericalRefusal("grounded Laplacian factorization failed");
    Vector rhs = Vector::Zero(static_cast<Eigen::Index>(nv - 1));
    rhs[static_cast<Eigen::Index>(reduced(x))] = 1.0;
    const Vector pot = solver.solve(rhs);
    return pot[static_cast<Eigen::Index>(reduced(x))];
}

/// All-pairs effective resistance via the inverse of the Laplacian grounded at vertex 0.
class ResistanceMetric {
public:
    explicit ResistanceMetric(const GraphApproximation& g) {
        const auto nv = static_cast<Eigen::Index>(g.vertex_count());
        Matrix h = Matrix::Zero(nv, nv);
        for (const auto& e : g.edges()) {
            const auto u = static_cast<Eigen::Index>(e.u), v = static_cast<Eigen::Index>(e.v);
            h(u, u) += e.conductance;
            h(v, v) += e.conductance;
            h(u, v) -= e.conductance;
            h(v, u) -= e.conductance;
        }
        green_ = Matrix::Zero(nv, nv);
        if (nv > 1) {
            Eigen::LLT<Matrix> llt(h.bottomRightCorner(nv - 1, nv - 1));
            if (llt.info() != Eigen::Success) throw InvalidSpecError("graph approximation is disconnected");
            green_.bottomRightCorner(nv - 1, nv - 1) = llt.solve(Matrix::Identity(nv - 1, nv - 1));
        }
    }

    double operator()(std::size_t x, std::size_t y) const {
        const auto i = static_cast<Eigen::Index>(x), j = static_cast<Eigen::Index>(y);
        if (x == y) return 0.0;
        return green_(i, i) + green_(j, j) - green_(i, j) - green_(j, i);
    }
    std::size_t size() const noexcept { return static_cast<std::size_t>(green_.rows()); }

private:
    Matrix green_;
};

// ---------------------------------------------------------------------------
// n-neighbourhoods and delta-approximants

struct Neighbourhood {
    std::vector<Word> cells;  // cells of Lambda_n whose closure contains x
    double mass = 0.0;        // mu(D_n(x))
};

namespace detail {

// The unique member of `part` that is a prefix of `w`.
inline const Word* partition_prefix(const std::set<Word>& part, const Word& w) {
    Word prefix;
    if (part.count(prefix)) return &*part.find(prefix);
    for (auto l : w.letters) {
        prefix.letters.push_back(l);
        if (auto it = part.find(prefix); it != part.end()) return &*it;
    }
    return nullptr;
}

inline void require_resolved(const GraphApproximation& g, const Partition& part) {
    if (part.max_length() > static_cast<std::size_t>(g.level()))
        throw AddressError("partition level " + std::to_string(part.level) + " needs graph level >= " +
                           std::to_string(part.max_length()));
}

}  // namespace detail

inline Neighbourhood neighbourhood(const GraphApproximation& g, const Partition& part, std::size_t x) {
    if (x >= g.vertex_count()) throw AddressError("vertex id out of range");
    detail::require_resolved(g, part);
    const std::set<Word> words(part.words.begin(), part.words.end());
    std::set<Word> hit;
    for (auto cell : g.cells_at(x)) {
        const auto* w = detail::partition_prefix(words, g.cell_word(cell));
        if (!w) throw AddressError("partition does not cover the graph cells");
        hit.insert(*w);
    }
    Neighbourhood nb;
    nb.cells.assign(hit.begin(), hit.end());
    for (const auto& w : nb.cells) nb.mass += cell_measure(g.spec(), w);
    return nb;
}

inline Neighbourhood neighbourhood(const GraphApproximation& g, int n, std::size_t x) {
    return neighbourhood(g, build_partition(g.spec(), n), x);
}

/// Vertex representation of mu(D)^{-1} 1_D for D = D_n(x). Vertices interior
/// to D carry mu(D)^{-1}; a vertex on the rim of D carries mu(D)^{-1} times
/// the fraction of its lumped mass that comes from cells inside D, so that
/// sum_v m_v f_v = 1 exactly.
inline Vector delta_approximant(const GraphApproximation& g, const Partition& part, std::size_t x) {
    const auto nb = neighbourhood(g, part, x);
    const std::set<Word> inside(nb.cells.begin(), nb.cells.end());
    const std::set<Word> words(part.words.begin(), part.words.end());
    const auto v0 = g.spec().boundary_size();
    Vector in_mass = Vector::Zero(static_cast<Eigen::Index>(g.vertex_count()));
    for (std::size_t cell = 0; cell < g.cell_count(); ++cell) {
        const Word w = g.cell_word(cell);
        const auto* owner = detail::partition_prefix(words, w);
        if (!owner || !inside.count(*owner)) continue;
        const double share = cell_measure(g.spec(), w) / static_cast<double>(v0);
        for (std::size_t p = 0; p < v0; ++p) in_mass[static_cast<Eigen::Index>(g.cell_vertex(cell, p))] += share;
    }
    Vector f(in_mass.size());
    for (Eigen::Index v = 0; v < f.size(); ++v) {
        double fraction = in_mass[v] / g.mass(static_cast<std::size_t>(v));
        if (std::abs(fraction - 1.0) < 1e-12) fraction = 1.0;
        f[v] = fraction / nb.mass;
    }
    return f;
}

inline Vector delta_approximant(const GraphApproximation& g, int n, std::size_t x) {
    return delta_approximant(g, build_partition(g.spec(), n), x);
}

}  // namespace fspde
