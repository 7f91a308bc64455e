// CSV/JSON/SVG artifacts.
#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "momdyn/momentum.hpp"
#include "momdyn/volterra.hpp"

namespace momdyn {

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<double>> columns;

    const std::vector<double>& column(const std::string& name) const;
    std::size_t rows() const { return columns.empty() ? 0 : columns.front().size(); }
};

// Header row, comma separated, '.' decimal, LF newlines, %.17g values.
void write_table(const std::string& path, const Table& t);
Table read_table(const std::string& path);

Table trajectory_table(const Trajectory& tr);
Table solution_table(const VolterraSolution& sol);

void write_json(const std::string& path, const nlohmann::json& j);
nlohmann::json read_json(const std::string& path);

// path with its extension replaced by ".json".
std::string sidecar_path(const std::string& path);

struct SvgSeries {
    std::vector<double> x, y;
    std::string color = "#1f77b4";
    std::string label;
};

// Static log-y line plot; `band_lo`/`band_hi` (optional) are shaded.
std::string render_svg(const std::vector<SvgSeries>& lines, const std::vector<double>& band_x,
                       const std::vector<double>& band_lo, const std::vector<double>& band_hi,
                       const std::string& title);

}  // namespace momdyn
