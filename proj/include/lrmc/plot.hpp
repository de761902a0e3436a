// Copyright 2026 The lrmc Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "lrmc/core/format.hpp"
#include "lrmc/experiments.hpp"

namespace lrmc {

/// Raised when a CSV does not match the expected experiment schema.
class schema_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

struct Csv {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name) const {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw schema_error("CSV lacks column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
  }
};

inline Csv read_csv(std::istream& is, const std::string& expected_header) {
  Csv csv;
  std::string line;
  if (!std::getline(is, line)) throw schema_error("CSV is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != expected_header) {
    throw schema_error("CSV header '" + line + "' does not match '" + expected_header + "'");
  }
  csv.header = split(line, ',');
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split(line, ',');
    if (fields.size() != csv.header.size()) {
      throw schema_error("CSV row has " + std::to_string(fields.size()) + " fields, expected " +
                         std::to_string(csv.header.size()));
    }
    csv.rows.push_back(std::move(fields));
  }
  if (csv.rows.empty()) throw schema_error("CSV has no data rows");
  return csv;
}

inline double field(const std::vector<std::string>& row, std::size_t col) {
  auto v = parse_double(row[col]);
  if (!v) throw schema_error("malformed number '" + row[col] + "'");
  return *v;
}

inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

inline const char* palette(std::size_t i) {
  static constexpr const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                           "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};
  return colors[i % 8];
}

constexpr double kWidth = 640, kHeight = 420, kLeft = 70, kRight = 150, kTop = 20,
                 kBottom = 50;

}  // namespace detail

/// Convergence CSV to SVG: one polyline per (algorithm, lambda) series,
/// relative error on a log-scale y axis, legend on the right.
inline std::string render_lines(std::istream& csv_in) {
  using namespace detail;
  const Csv csv = read_csv(csv_in, "algorithm,lambda,k,rel_err,dist,balancing,seconds");
  const std::size_t ca = csv.column("algorithm"), cl = csv.column("lambda"),
                    ck = csv.column("k"), ce = csv.column("rel_err");
  std::vector<std::string> order;
  std::map<std::string, std::vector<std::pair<double, double>>> series;
  double kmax = 1.0, lo = 1e300, hi = 0.0;
  for (const auto& row : csv.rows) {
    std::string name = row[ca];
    if (name == "RGD") name += " lambda=" + row[cl];
    if (!series.count(name)) order.push_back(name);
    const double k = field(row, ck), e = field(row, ce);
    kmax = std::max(kmax, k);
    if (e > 0.0 && std::isfinite(e)) {
      lo = std::min(lo, e);
      hi = std::max(hi, e);
    }
    series[name].emplace_back(k, e);
  }
  if (hi == 0.0) {
    lo = 1e-16;
    hi = 1.0;
  }
  const double ylo = std::floor(std::log10(lo)), yhi = std::ceil(std::log10(hi));
  const double yspan = std::max(yhi - ylo, 1.0);
  const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
  auto px = [&](double k) { return kLeft + pw * k / kmax; };
  auto py = [&](double e) {
    const double le = e > 0.0 ? std::clamp(std::log10(e), ylo, ylo + yspan) : ylo;
    return kTop + ph * (1.0 - (le - ylo) / yspan);
  };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
      << kHeight << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  svg << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << pw << "\" height=\""
      << ph << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (double d = ylo; d <= ylo + yspan + 1e-9; d += 1.0) {
    const double y = py(std::pow(10.0, d));
    svg << "<line x1=\"" << kLeft - 4 << "\" y1=\"" << num(y) << "\" x2=\"" << kLeft
        << "\" y2=\"" << num(y) << "\" stroke=\"black\"/>"
        << "<text x=\"" << kLeft - 6 << "\" y=\"" << num(y + 4)
        << "\" text-anchor=\"end\">1e" << static_cast<int>(d) << "</text>\n";
  }
  svg << "<text x=\"" << kLeft + pw / 2 << "\" y=\"" << kHeight - 12
      << "\" text-anchor=\"middle\">iteration k (max " << static_cast<long long>(kmax)
      << ")</text>\n";
  svg << "<text x=\"14\" y=\"" << kTop + ph / 2 << "\" transform=\"rotate(-90 14 "
      << kTop + ph / 2 << ")\" text-anchor=\"middle\">relative error</text>\n";
  for (std::size_t s = 0; s < order.size(); ++s) {
    svg << "<polyline fill=\"none\" stroke=\"" << palette(s) << "\" stroke-width=\"1.5\" points=\"";
    for (const auto& [k, e] : series[order[s]]) svg << num(px(k)) << ',' << num(py(e)) << ' ';
    svg << "\"/>\n";
    const double ly = kTop + 16.0 * static_cast<double>(s + 1);
    svg << "<line x1=\"" << kWidth - kRight + 10 << "\" y1=\"" << ly << "\" x2=\""
        << kWidth - kRight + 30 << "\" y2=\"" << ly << "\" stroke=\"" << palette(s)
        << "\" stroke-width=\"2\"/><text x=\"" << kWidth - kRight + 34 << "\" y=\"" << ly + 4
        << "\">" << order[s] << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

/// Phase CSV to SVG: gray cells (white = all fail, black = all succeed) on a
/// p by r grid, with the 0.5 contour as a red polyline.
inline std::string render_heatmap(std::istream& csv_in) {
  using namespace detail;
  const Csv csv = read_csv(csv_in, "p,r,trials,successes,rate");
  const std::size_t cp = csv.column("p"), cr = csv.column("r"), ct = csv.column("trials"),
                    cs = csv.column("successes");
  std::vector<double> rates;
  std::vector<std::size_t> ranks;
  for (const auto& row : csv.rows) {
    rates.push_back(field(row, cp));
    ranks.push_back(static_cast<std::size_t>(field(row, cr)));
  }
  std::sort(rates.begin(), rates.end());
  rates.erase(std::unique(rates.begin(), rates.end()), rates.end());
  std::sort(ranks.begin(), ranks.end());
  ranks.erase(std::unique(ranks.begin(), ranks.end()), ranks.end());

  PhaseGrid grid;
  grid.rates = rates;
  grid.ranks = ranks;
  grid.trials = static_cast<std::size_t>(field(csv.rows.front(), ct));
  if (grid.trials == 0) throw schema_error("phase CSV has trials = 0");
  grid.successes.assign(ranks.size(), std::vector<std::size_t>(rates.size(), 0));
  std::vector<std::vector<bool>> seen(ranks.size(), std::vector<bool>(rates.size(), false));
  for (const auto& row : csv.rows) {
    const auto pi = static_cast<std::size_t>(
        std::lower_bound(rates.begin(), rates.end(), field(row, cp)) - rates.begin());
    const auto ri = static_cast<std::size_t>(
        std::lower_bound(ranks.begin(), ranks.end(), static_cast<std::size_t>(field(row, cr))) -
        ranks.begin());
    if (static_cast<std::size_t>(field(row, ct)) != grid.trials) {
      throw schema_error("phase CSV mixes trial counts");
    }
    grid.successes[ri][pi] = static_cast<std::size_t>(field(row, cs));
    seen[ri][pi] = true;
  }
  for (const auto& r : seen)
    if (std::find(r.begin(), r.end(), false) != r.end()) {
      throw schema_error("phase CSV does not cover a full p x r grid");
    }

  const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
  const double cw = pw / static_cast<double>(rates.size());
  const double ch = ph / static_cast<double>(ranks.size());
  auto px_index = [&](double fi) { return kLeft + cw * (fi + 0.5); };
  auto py_index = [&](double fr) { return kTop + ph - ch * (fr + 0.5); };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
      << kHeight << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  for (std::size_t ri = 0; ri < ranks.size(); ++ri)
    for (std::size_t pi = 0; pi < rates.size(); ++pi) {
      const int level = static_cast<int>(std::lround(255.0 * (1.0 - grid.rate(ri, pi))));
      svg << "<rect x=\"" << num(kLeft + cw * static_cast<double>(pi)) << "\" y=\""
          << num(kTop + ph - ch * static_cast<double>(ri + 1)) << "\" width=\"" << num(cw)
          << "\" height=\"" << num(ch) << "\" fill=\"rgb(" << level << ',' << level << ','
          << level << ")\"/>\n";
    }
  for (std::size_t pi = 0; pi < rates.size(); ++pi)
    svg << "<text x=\"" << num(px_index(static_cast<double>(pi))) << "\" y=\""
        << kTop + ph + 14 << "\" text-anchor=\"middle\">" << format_double(rates[pi])
        << "</text>\n";
  for (std::size_t ri = 0; ri < ranks.size(); ++ri)
    svg << "<text x=\"" << kLeft - 6 << "\" y=\"" << num(py_index(static_cast<double>(ri)) + 4)
        << "\" text-anchor=\"end\">" << ranks[ri] << "</text>\n";
  svg << "<text x=\"" << kLeft + pw / 2 << "\" y=\"" << kHeight - 12
      << "\" text-anchor=\"middle\">sampling rate p</text>\n";
  svg << "<text x=\"14\" y=\"" << kTop + ph / 2 << "\" transform=\"rotate(-90 14 "
      << kTop + ph / 2 << ")\" text-anchor=\"middle\">rank r</text>\n";

  // Contour: p_cross mapped onto the cell-centre axis by interpolating
  // between grid indices.
  svg << "<polyline fill=\"none\" stroke=\"#d62728\" stroke-width=\"2\" points=\"";
  const auto contour = extract_contour(grid);
  for (std::size_t ri = 0; ri < contour.size(); ++ri) {
    if (!contour[ri].p_cross) continue;
    const double p = *contour[ri].p_cross;
    auto it = std::lower_bound(rates.begin(), rates.end(), p);
    double fi = 0.0;
    if (it == rates.end()) {
      fi = static_cast<double>(rates.size() - 1);
    } else if (it != rates.begin()) {
      const std::size_t hi = static_cast<std::size_t>(it - rates.begin());
      fi = static_cast<double>(hi - 1) + (p - rates[hi - 1]) / (rates[hi] - rates[hi - 1]);
    }
    svg << num(px_index(fi)) << ',' << num(py_index(static_cast<double>(ri))) << ' ';
  }
  svg << "\"/>\n</svg>\n";
  return svg.str();
}

}  // namespace lrmc
