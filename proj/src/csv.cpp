#include "qhd/csv.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace qhd {

namespace {

std::string fmt(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("csv: cannot open '" + path + "' for writing");
    return out;
}

}  // namespace

void write_timeseries_csv(const std::string& path,
                          const std::vector<TimeSeriesRecord>& records) {
    std::ofstream out = open_out(path);
    out << "t,mass,variance,sigma2,alpha\n";
    const size_t n = records.size();
    for (size_t i = 0; i < n; ++i) {
        const TimeSeriesRecord& r = records[i];
        out << fmt(r.t) << ',' << fmt(r.mass) << ',' << fmt(r.variance) << ','
            << fmt(r.sigma2) << ',';
        if (i > 0 && i + 1 < n) {
            const TimeSeriesRecord& a = records[i - 1];
            const TimeSeriesRecord& b = records[i + 1];
            if (a.t > 0.0 && b.t > a.t && a.sigma2 > 0.0 && b.sigma2 > 0.0)
                out << fmt(std::log(b.sigma2 / a.sigma2) / std::log(b.t / a.t));
        }
        out << '\n';
    }
}

void write_snapshots_csv(const std::string& path,
                         const std::vector<TimeSeriesRecord>& records) {
    bool any = false;
    for (const auto& r : records) any = any || r.snapshot.has_value();
    if (!any) return;

    std::ofstream out = open_out(path);
    out << "t,x,rho\n";
    for (const auto& r : records) {
        if (!r.snapshot) continue;
        const DensityField& rho = *r.snapshot;
        for (int i = 0; i < rho.size(); ++i)
            out << fmt(r.t) << ',' << fmt(rho.grid.x(i)) << ',' << fmt(rho.v[i]) << '\n';
    }
}

std::vector<TimeSeriesRecord> read_timeseries_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("csv: cannot open '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("csv: empty file '" + path + "'");
    if (line.rfind("t,mass,variance,sigma2", 0) != 0)
        throw std::runtime_error("csv: unexpected header in '" + path + "'");

    std::vector<TimeSeriesRecord> records;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string cell;
        TimeSeriesRecord r;
        double* fields[4] = {&r.t, &r.mass, &r.variance, &r.sigma2};
        for (int k = 0; k < 4; ++k) {
            if (!std::getline(ss, cell, ','))
                throw std::runtime_error("csv: short row at line " + std::to_string(lineno));
            try {
                *fields[k] = std::stod(cell);
            } catch (const std::exception&) {
                throw std::runtime_error("csv: bad number at line " + std::to_string(lineno));
            }
        }
        records.push_back(std::move(r));
    }
    return records;
}

void write_xy_csv(const std::string& path, const std::string& header,
                  const std::vector<std::pair<double, double>>& rows) {
    std::ofstream out = open_out(path);
    out << header << '\n';
    for (const auto& [x, y] : rows) out << fmt(x) << ',' << fmt(y) << '\n';
}

void write_svg_polyline(const std::string& path,
                        const std::vector<std::pair<double, double>>& rows,
                        const std::string& x_label, const std::string& y_label) {
    if (rows.empty()) throw std::invalid_argument("svg: no data");
    double x0 = rows[0].first, x1 = rows[0].first;
    double y0 = rows[0].second, y1 = rows[0].second;
    for (const auto& [x, y] : rows) {
        x0 = std::min(x0, x);
        x1 = std::max(x1, x);
        y0 = std::min(y0, y);
        y1 = std::max(y1, y);
    }
    if (x1 == x0) x1 = x0 + 1.0;
    if (y1 == y0) y1 = y0 + 1.0;

    const double W = 640, H = 480, M = 60;  // canvas and margin
    auto px = [&](double x) { return M + (x - x0) / (x1 - x0) * (W - 2 * M); };
    auto py = [&](double y) { return H - M - (y - y0) / (y1 - y0) * (H - 2 * M); };

    std::ofstream out = open_out(path);
    out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << W << "' height='" << H
        << "' viewBox='0 0 " << W << ' ' << H << "'>\n"
        << "<rect width='100%' height='100%' fill='white'/>\n"
        << "<line x1='" << M << "' y1='" << H - M << "' x2='" << W - M << "' y2='" << H - M
        << "' stroke='black'/>\n"
        << "<line x1='" << M << "' y1='" << H - M << "' x2='" << M << "' y2='" << M
        << "' stroke='black'/>\n";
    out << "<polyline fill='none' stroke='steelblue' stroke-width='1.5' points='";
    for (const auto& [x, y] : rows) out << px(x) << ',' << py(y) << ' ';
    out << "'/>\n";
    out << "<text x='" << W / 2 << "' y='" << H - M / 3 << "' text-anchor='middle'>"
        << x_label << "</text>\n";
    out << "<text x='" << M / 3 << "' y='" << H / 2 << "' text-anchor='middle' transform='rotate(-90 "
        << M / 3 << ' ' << H / 2 << ")'>" << y_label << "</text>\n";
    out << "<text x='" << M << "' y='" << H - M + 16 << "' font-size='11'>" << fmt(x0)
        << "</text>\n"
        << "<text x='" << W - M << "' y='" << H - M + 16 << "' text-anchor='end' font-size='11'>"
        << fmt(x1) << "</text>\n"
        << "<text x='" << M - 4 << "' y='" << H - M << "' text-anchor='end' font-size='11'>"
        << fmt(y0) << "</text>\n"
        << "<text x='" << M - 4 << "' y='" << M << "' text-anchor='end' font-size='11'>"
        << fmt(y1) << "</text>\n";
    out << "</svg>\n";
}

}  // namespace qhd
