#pragma once

#include <string>
#include <vector>

#include "qhd/solver.hpp"

namespace qhd {

/// Writes the run records as CSV with header `t,mass,variance,sigma2,alpha`.
/// alpha is the centered log-log slope of sigma2 against t, left blank where
/// it is undefined (series ends, t <= 0, sigma2 <= 0).  All numbers are
/// written with round-trip (%.17g) precision.
void write_timeseries_csv(const std::string& path,
                          const std::vector<TimeSeriesRecord>& records);

/// Writes every stored snapshot as rows `t,x,rho` to a sidecar file.
/// Does nothing (and writes no file) when no record carries a snapshot.
void write_snapshots_csv(const std::string& path,
                         const std::vector<TimeSeriesRecord>& records);

/// Reads a file produced by write_timeseries_csv (alpha is ignored;
/// snapshots are not restored).
std::vector<TimeSeriesRecord> read_timeseries_csv(const std::string& path);

/// Writes a two-column CSV with the given header line.
void write_xy_csv(const std::string& path, const std::string& header,
                  const std::vector<std::pair<double, double>>& rows);

/// Renders a minimal SVG polyline chart of the rows (x ascending); axes are
/// linear, the view box fits the data.  Purely a convenience artifact: the
/// CSV stays the normative output.
void write_svg_polyline(const std::string& path,
                        const std::vector<std::pair<double, double>>& rows,
                        const std::string& x_label, const std::string& y_label);

}  // namespace qhd
