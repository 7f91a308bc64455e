#include "momdyn/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace momdyn {

const std::vector<double>& Table::column(const std::string& name) const {
    for (std::size_t c = 0; c < header.size(); ++c)
        if (header[c] == name) return columns[c];
    throw std::invalid_argument("table has no column " + name);
}

static std::string fmt(double v) {
    if (std::isnan(v)) return "nan";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_table(const std::string& path, const Table& t) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::invalid_argument("cannot write " + path);
    for (std::size_t c = 0; c < t.header.size(); ++c) out << (c ? "," : "") << t.header[c];
    out << '\n';
    for (std::size_t r = 0; r < t.rows(); ++r) {
        for (std::size_t c = 0; c < t.columns.size(); ++c) out << (c ? "," : "") << fmt(t.columns[c][r]);
        out << '\n';
    }
}

Table read_table(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot read " + path);
    Table t;
    std::string line;
    if (!std::getline(in, line)) throw std::invalid_argument("empty table " + path);
    std::stringstream hs(line);
    for (std::string cell; std::getline(hs, cell, ',');) t.header.push_back(cell);
    t.columns.assign(t.header.size(), {});
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::size_t c = 0;
        for (std::string cell; std::getline(ss, cell, ','); ++c) {
            if (c >= t.columns.size()) throw std::invalid_argument("ragged table " + path);
            t.columns[c].push_back(cell == "nan" ? std::numeric_limits<double>::quiet_NaN() : std::stod(cell));
        }
        if (c != t.columns.size()) throw std::invalid_argument("ragged table " + path);
    }
    return t;
}

Table trajectory_table(const Trajectory& tr) {
    Table t;
    if (tr.aggregated) {
        t.header = {"t", "mean", "q10", "q90"};
        t.columns = {tr.times, tr.mean, tr.q10, tr.q90};
    } else {
        t.header = {"t", "value"};
        t.columns = {tr.times, tr.values};
    }
    return t;
}

Table solution_table(const VolterraSolution& sol) {
    Table t;
    t.header = {"t", "F", "psi"};
    t.columns = {sol.grid, sol.F, sol.psi};
    return t;
}

void write_json(const std::string& path, const nlohmann::json& j) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::invalid_argument("cannot write " + path);
    out << j.dump(2) << '\n';
}

nlohmann::json read_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot read " + path);
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument("invalid JSON in " + path + ": " + e.what());
    }
}

std::string sidecar_path(const std::string& path) {
    return std::filesystem::path(path).replace_extension(".json").string();
}

std::string render_svg(const std::vector<SvgSeries>& lines, const std::vector<double>& band_x,
                       const std::vector<double>& band_lo, const std::vector<double>& band_hi,
                       const std::string& title) {
    const double W = 640, H = 420, L = 70, Rm = 20, Tm = 40, B = 50;
    double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
    double ymin = xmin, ymax = -xmin;
    auto take = [&](double x, double y) {
        if (!std::isfinite(x) || !std::isfinite(y) || !(y > 0.0)) return;
        xmin = std::min(xmin, x);
        xmax = std::max(xmax, x);
        ymin = std::min(ymin, y);
        ymax = std::max(ymax, y);
    };
    for (const auto& s : lines)
        for (std::size_t i = 0; i < s.x.size(); ++i) take(s.x[i], s.y[i]);
    for (std::size_t i = 0; i < band_x.size(); ++i) {
        take(band_x[i], band_lo[i]);
        take(band_x[i], band_hi[i]);
    }
    if (!std::isfinite(xmin)) {
        xmin = 0;
        xmax = 1;
        ymin = 0.1;
        ymax = 1;
    }
    if (xmax == xmin) xmax = xmin + 1;
    double lymin = std::floor(std::log10(ymin)), lymax = std::ceil(std::log10(ymax));
    if (lymax == lymin) lymax = lymin + 1;
    auto px = [&](double x) { return L + (x - xmin) / (xmax - xmin) * (W - L - Rm); };
    auto py = [&](double y) { return Tm + (lymax - std::log10(y)) / (lymax - lymin) * (H - Tm - B); };

    std::ostringstream o;
    o.precision(6);
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    o << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << title << "</text>\n";
    o << "<rect x=\"" << L << "\" y=\"" << Tm << "\" width=\"" << W - L - Rm << "\" height=\"" << H - Tm - B
      << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (double e = lymin; e <= lymax + 1e-9; e += 1.0) {
        const double y = py(std::pow(10.0, e));
        o << "<line x1=\"" << L - 5 << "\" y1=\"" << y << "\" x2=\"" << L << "\" y2=\"" << y << "\" stroke=\"black\"/>";
        o << "<text x=\"" << L - 8 << "\" y=\"" << y + 4 << "\" text-anchor=\"end\">1e" << static_cast<int>(e) << "</text>\n";
    }
    for (int i = 0; i <= 5; ++i) {
        const double xv = xmin + (xmax - xmin) * i / 5.0, x = px(xv);
        o << "<line x1=\"" << x << "\" y1=\"" << H - B << "\" x2=\"" << x << "\" y2=\"" << H - B + 5 << "\" stroke=\"black\"/>";
        o << "<text x=\"" << x << "\" y=\"" << H - B + 18 << "\" text-anchor=\"middle\">" << xv << "</text>\n";
    }
    o << "<text x=\"" << (L + W - Rm) / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">epochs t</text>\n";
    if (!band_x.empty()) {
        o << "<polygon fill=\"#1f77b4\" fill-opacity=\"0.2\" stroke=\"none\" points=\"";
        for (std::size_t i = 0; i < band_x.size(); ++i)
            if (band_hi[i] > 0.0 && std::isfinite(band_hi[i])) o << px(band_x[i]) << "," << py(band_hi[i]) << " ";
        for (std::size_t i = band_x.size(); i-- > 0;)
            if (band_lo[i] > 0.0 && std::isfinite(band_lo[i])) o << px(band_x[i]) << "," << py(band_lo[i]) << " ";
        o << "\"/>\n";
    }
    int row = 0;
    for (const auto& s : lines) {
        o << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < s.x.size(); ++i)
            if (s.y[i] > 0.0 && std::isfinite(s.y[i])) o << px(s.x[i]) << "," << py(s.y[i]) << " ";
        o << "\"/>\n";
        if (!s.label.empty()) {
            const double ly = Tm + 16 + 16 * row++;
            o << "<line x1=\"" << W - Rm - 120 << "\" y1=\"" << ly - 4 << "\" x2=\"" << W - Rm - 100 << "\" y2=\"" << ly - 4
              << "\" stroke=\"" << s.color << "\" stroke-width=\"2\"/>";
            o << "<text x=\"" << W - Rm - 95 << "\" y=\"" << ly << "\">" << s.label << "</text>\n";
        }
    }
    o << "</svg>\n";
    return o.str();
}

}  // namespace momdyn
