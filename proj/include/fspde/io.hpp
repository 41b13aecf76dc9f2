#pragma once

// Output plumbing: CSV tables with 17-significant-digit floats, sorted-key JSON
// reports, SVG log-log plots and a run manifest with SHA-256 digests.
// Everything is rendered into memory first and written in one pass at the end.

#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "errors.hpp"
#include "graph.hpp"
#include "laplacian.hpp"
#include "simulator.hpp"

#ifndef FSPDE_VERSION
#define FSPDE_VERSION "0.1.0"
#endif

namespace fspde {

using Json = nlohmann::json;

inline std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// JSON cannot hold non-finite numbers; those become null.
inline Json json_number(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

class CsvTable {
public:
    explicit CsvTable(const std::vector<std::string>& header) : columns_(header.size()) { row_strings(header); }

    CsvTable& cell(const std::string& s) {
        pending_.push_back(s);
        return *this;
    }
    CsvTable& cell(double v) { return cell(format_double(v)); }
    CsvTable& cell(std::size_t v) { return cell(std::to_string(v)); }
    CsvTable& cell(int v) { return cell(std::to_string(v)); }
    void end_row() {
        if (pending_.size() != columns_) throw Error("CSV row has wrong column count");
        row_strings(pending_);
        pending_.clear();
    }
    const std::string& str() const noexcept { return text_; }

private:
    void row_strings(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) text_ += ',';
            text_ += cells[i];
        }
        text_ += '\n';
    }
    std::size_t columns_;
    std::vector<std::string> pending_;
    std::string text_;
};

inline std::string vertices_csv(const GraphApproximation& g) {
    CsvTable t({"id", "address", "mass", "is_boundary"});
    for (std::size_t v = 0; v < g.vertex_count(); ++v) {
        t.cell(v).cell(g.address(v)).cell(g.masses()[v]).cell(g.is_boundary(v) ? 1 : 0);
        t.end_row();
    }
    return t.str();
}

/// One row per mode: k (1-based), lambda, then phi_k at every vertex id.
inline std::string spectrum_csv(const Spectrum& sp) {
    std::vector<std::string> header{"k", "lambda"};
    for (std::size_t v = 0; v < sp.vertex_count(); ++v) header.push_back("phi_" + std::to_string(v));
    CsvTable t(header);
    const auto& phi = sp.eigenvectors();
    for (std::size_t k = 0; k < sp.size(); ++k) {
        t.cell(k + 1).cell(sp.eigenvalue(k));
        for (std::size_t v = 0; v < sp.vertex_count(); ++v)
            t.cell(phi(static_cast<Eigen::Index>(v), static_cast<Eigen::Index>(k)));
        t.end_row();
    }
    return t.str();
}

struct KernelRow {
    double t;
    std::size_t x, y;
    double value, tail_bound;
};

inline std::string kernel_csv(const std::vector<KernelRow>& rows) {
    CsvTable t({"t", "x_id", "y_id", "value", "tail_bound"});
    for (const auto& r : rows) {
        t.cell(r.t).cell(r.x).cell(r.y).cell(r.value).cell(r.tail_bound);
        t.end_row();
    }
    return t.str();
}

/// Snapshot fields of every path; `stride` thins vertices.
inline std::string trajectory_csv(const Ensemble& ens, std::size_t stride = 1) {
    CsvTable t({"path", "t", "vertex_id", "value"});
    for (const auto& tr : ens.paths)
        for (std::size_t s = 0; s < tr.snapshots.size(); ++s)
            for (Eigen::Index v = 0; v < tr.snapshots[s].size(); v += static_cast<Eigen::Index>(stride)) {
                t.cell(tr.path).cell(ens.snapshot_times[s]).cell(static_cast<std::size_t>(v)).cell(tr.snapshots[s][v]);
                t.end_row();
            }
    return t.str();
}

/// Probe series of every path, one row per (path, t, probe).
inline std::string probe_csv(const Ensemble& ens) {
    CsvTable t({"path", "t", "vertex_id", "value"});
    for (const auto& tr : ens.paths)
        for (Eigen::Index r = 0; r < tr.probe_values.rows(); ++r)
            for (Eigen::Index i = 0; i < tr.probe_values.cols(); ++i) {
                t.cell(tr.path).cell(ens.probe_times[static_cast<std::size_t>(r)]).cell(ens.probes[static_cast<std::size_t>(i)]).cell(tr.probe_values(r, i));
                t.end_row();
            }
    return t.str();
}

struct MomentRow {
    double t, p, estimate, stderr_;
    std::size_t n_eff;
};

inline std::string moments_csv(const std::vector<MomentRow>& rows) {
    CsvTable t({"t", "p", "estimate", "stderr", "n_eff"});
    for (const auto& r : rows) {
        t.cell(r.t).cell(r.p).cell(r.estimate).cell(r.stderr_).cell(r.n_eff);
        t.end_row();
    }
    return t.str();
}

/// E|u(t,x)|^p averaged over probes, for every probe time with no censored path.
inline std::vector<MomentRow> ensemble_moments(const Ensemble& ens, double p) {
    std::vector<MomentRow> rows;
    for (std::size_t r = 0; r < ens.probe_times.size(); ++r) {
        std::vector<double> per_path;
        for (const auto& tr : ens.paths) {
            double s = 0.0;
            for (Eigen::Index i = 0; i < tr.probe_values.cols(); ++i)
                s += std::pow(std::abs(tr.probe_values(static_cast<Eigen::Index>(r), i)), p);
            per_path.push_back(s / static_cast<double>(tr.probe_values.cols()));
        }
        const double n = static_cast<double>(per_path.size());
        double mean = 0.0, var = 0.0;
        for (double v : per_path) mean += v;
        mean /= n;
        if (!std::isfinite(mean)) break;
        for (double v : per_path) var += (v - mean) * (v - mean);
        const double se = per_path.size() > 1 ? std::sqrt(var / (n - 1.0) / n) : 0.0;
        rows.push_back({ens.probe_times[r], p, mean, se, per_path.size()});
    }
    return rows;
}

inline std::string sha256_hex(const std::string& data) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1) throw Error("SHA-256 failed");
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned i = 0; i < len; ++i) {
        out += hex[md[i] >> 4];
        out += hex[md[i] & 15];
    }
    return out;
}

// ---------------------------------------------------------------------------
// SVG plots

struct PlotSeries {
    std::string label;
    std::vector<double> x, y;
    bool line = false;  // otherwise markers
};

inline std::string svg_loglog(const std::string& title, const std::string& xlabel, const std::string& ylabel,
                              const std::vector<PlotSeries>& series) {
    double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
    for (const auto& s : series)
        for (std::size_t i = 0; i < s.x.size(); ++i)
            if (s.x[i] > 0 && s.y[i] > 0 && std::isfinite(s.x[i]) && std::isfinite(s.y[i])) {
                x0 = std::min(x0, std::log10(s.x[i])), x1 = std::max(x1, std::log10(s.x[i]));
                y0 = std::min(y0, std::log10(s.y[i])), y1 = std::max(y1, std::log10(s.y[i]));
            }
    if (!(x1 >= x0)) x0 = 0, x1 = 1;
    if (!(y1 >= y0)) y0 = 0, y1 = 1;
    if (x1 - x0 < 1e-9) x0 -= 0.5, x1 += 0.5;
    if (y1 - y0 < 1e-9) y0 -= 0.5, y1 += 0.5;
    const double w = 640, h = 440, ml = 70, mr = 160, mt = 40, mb = 50;
    auto px = [&](double v) { return ml + (std::log10(v) - x0) / (x1 - x0) * (w - ml - mr); };
    auto py = [&](double v) { return h - mb - (std::log10(v) - y0) / (y1 - y0) * (h - mt - mb); };
    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
    std::ostringstream o;
    o.precision(6);
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    o << "<text x=\"" << ml << "\" y=\"20\" font-size=\"14\">" << title << "</text>\n";
    o << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << w - ml - mr << "\" height=\"" << h - mt - mb
      << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int e = static_cast<int>(std::ceil(x0)); e <= static_cast<int>(std::floor(x1)); ++e) {
        const double xv = px(std::pow(10.0, e));
        o << "<line x1=\"" << xv << "\" y1=\"" << h - mb << "\" x2=\"" << xv << "\" y2=\"" << h - mb + 5 << "\" stroke=\"black\"/>";
        o << "<text x=\"" << xv << "\" y=\"" << h - mb + 18 << "\" text-anchor=\"middle\">1e" << e << "</text>\n";
    }
    for (int e = static_cast<int>(std::ceil(y0)); e <= static_cast<int>(std::floor(y1)); ++e) {
        const double yv = py(std::pow(10.0, e));
        o << "<line x1=\"" << ml - 5 << "\" y1=\"" << yv << "\" x2=\"" << ml << "\" y2=\"" << yv << "\" stroke=\"black\"/>";
        o << "<text x=\"" << ml - 8 << "\" y=\"" << yv + 4 << "\" text-anchor=\"end\">1e" << e << "</text>\n";
    }
    o << "<text x=\"" << (ml + w - mr) / 2 << "\" y=\"" << h - 10 << "\" text-anchor=\"middle\">" << xlabel << "</text>\n";
    o << "<text x=\"15\" y=\"" << (mt + h - mb) / 2 << "\" transform=\"rotate(-90 15 " << (mt + h - mb) / 2
      << ")\" text-anchor=\"middle\">" << ylabel << "</text>\n";
    for (std::size_t k = 0; k < series.size(); ++k) {
        const auto& s = series[k];
        const char* c = colors[k % 6];
        if (s.line) {
            o << "<polyline fill=\"none\" stroke=\"" << c << "\" points=\"";
            for (std::size_t i = 0; i < s.x.size(); ++i)
                if (s.x[i] > 0 && s.y[i] > 0) o << px(s.x[i]) << ',' << py(s.y[i]) << ' ';
            o << "\"/>\n";
        } else {
            for (std::size_t i = 0; i < s.x.size(); ++i)
                if (s.x[i] > 0 && s.y[i] > 0)
                    o << "<circle cx=\"" << px(s.x[i]) << "\" cy=\"" << py(s.y[i]) << "\" r=\"2.5\" fill=\"" << c << "\"/>\n";
        }
        const double ly = mt + 15 + 18 * static_cast<double>(k);
        o << "<rect x=\"" << w - mr + 10 << "\" y=\"" << ly - 8 << "\" width=\"10\" height=\"10\" fill=\"" << c << "\"/>";
        o << "<text x=\"" << w - mr + 25 << "\" y=\"" << ly + 1 << "\">" << s.label << "</text>\n";
    }
    o << "</svg>\n";
    return o.str();
}

// ---------------------------------------------------------------------------
// Output set and manifest

class OutputSet {
public:
    OutputSet(std::string command, Json config, std::uint64_t seed = 0)
        : command_(std::move(command)), config_(std::move(config)), seed_(seed) {}

    void add(const std::string& name, std::string content) { files_.push_back({name, std::move(content)}); }
    void add_json(const std::string& name, const Json& j) { add(name, j.dump(2) + "\n"); }
    void set_summary(Json s) { summary_ = std::move(s); }
    void set_extra(const std::string& key, Json v) { extra_[key] = std::move(v); }

    Json manifest() const {
        Json m;
        m["command"] = command_;
        m["config"] = config_;
        m["seed"] = seed_;
        m["code_version"] = FSPDE_VERSION;
        m["timestamp"] = timestamp();
        Json files = Json::array();
        for (const auto& f : files_)
            files.push_back({{"path", f.name}, {"sha256", sha256_hex(f.content)}, {"bytes", f.content.size()}});
        m["files"] = files;
        m["summary"] = summary_.is_null() ? Json::object() : summary_;
        for (const auto& [k, v] : extra_.items()) m[k] = v;
        return m;
    }

    /// Writes every file plus manifest.json into `dir`; returns the manifest.
    Json commit(const std::filesystem::path& dir) const {
        std::filesystem::create_directories(dir);
        for (const auto& f : files_) write_file(dir / f.name, f.content);
        Json m = manifest();
        write_file(dir / "manifest.json", m.dump(2) + "\n");
        return m;
    }

    static void write_file(const std::filesystem::path& p, const std::string& content) {
        std::ofstream out(p, std::ios::binary);
        if (!out) throw UsageError("cannot write '" + p.string() + "'");
        out << content;
        if (!out) throw UsageError("failed writing '" + p.string() + "'");
    }

private:
    static std::string timestamp() {
        const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
        std::tm tm{};
        gmtime_r(&now, &tm);
        char buf[32];
        std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
        return buf;
    }

    struct File {
        std::string name;
        std::string content;
    };
    std::string command_;
    Json config_;
    std::uint64_t seed_;
    std::vector<File> files_;
    Json summary_;
    Json extra_ = Json::object();
};

inline Json to_json(const KeyValues& kv) {
    Json j = Json::object();
    for (const auto& [k, v] : kv) j[k] = v;
    return j;
}

inline KeyValues key_values_from_json(const Json& j) {
    KeyValues kv;
    for (const auto& [k, v] : j.items()) kv[k] = v.is_string() ? v.get<std::string>() : v.dump();
    return kv;
}

}  // namespace fspde
