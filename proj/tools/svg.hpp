#pragma once

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "tphenotype/data.hpp"

namespace tphenotype::plot {

/// Static SVG with one panel per (feature, cluster): every member series is
/// drawn as a polyline over normalised time.
inline void write_cluster_trajectories(const std::string& path, const Dataset& ds,
                                       const std::vector<int>& assignments, int k) {
  if (ds.size() != assignments.size())
    throw std::invalid_argument("write_cluster_trajectories: assignment count mismatch");

  constexpr int kPanelW = 260, kPanelH = 170, kMargin = 42, kGap = 18;
  const int rows = ds.dim_x;
  const int width = kMargin + k * (kPanelW + kGap);
  const int height = kMargin / 2 + rows * (kPanelH + kGap) + kMargin / 2;
  static const char* kColors[] = {"#c23b22", "#2b6cb0", "#2f855a", "#b7791f",
                                  "#6b46c1", "#c05621", "#319795", "#97266d"};

  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_cluster_trajectories: cannot open " + path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" viewBox=\"0 0 " << width << " " << height << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  for (int f = 0; f < ds.dim_x; ++f) {
    // Common y-range per feature row.
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (const TimeSeries& s : ds.items)
      for (const std::vector<double>& row : s.x) {
        lo = std::min(lo, row[static_cast<std::size_t>(f)]);
        hi = std::max(hi, row[static_cast<std::size_t>(f)]);
      }
    if (!(hi > lo)) {
      lo -= 1.0;
      hi += 1.0;
    }
    const double pad = 0.05 * (hi - lo);
    lo -= pad;
    hi += pad;

    for (int c = 0; c < k; ++c) {
      const double x0 = kMargin + c * (kPanelW + kGap);
      const double y0 = kMargin / 2.0 + f * (kPanelH + kGap);
      out << "<rect x=\"" << x0 << "\" y=\"" << y0 << "\" width=\"" << kPanelW << "\" height=\""
          << kPanelH << "\" fill=\"none\" stroke=\"#999\" stroke-width=\"1\"/>\n";
      out << "<text x=\"" << x0 + 4 << "\" y=\"" << y0 + 14
          << "\" font-family=\"sans-serif\" font-size=\"11\" fill=\"#333\">cluster " << c
          << " / x" << f + 1 << "</text>\n";
      const char* color = kColors[c % 8];
      for (std::size_t i = 0; i < ds.size(); ++i) {
        if (assignments[i] != c) continue;
        const TimeSeries& s = ds.items[i];
        out << "<polyline fill=\"none\" stroke=\"" << color
            << "\" stroke-width=\"1\" stroke-opacity=\"0.35\" points=\"";
        char buf[64];
        for (std::size_t j = 0; j < s.t.size(); ++j) {
          const double px = x0 + s.t[j] * kPanelW;
          const double py =
              y0 + kPanelH - (s.x[j][static_cast<std::size_t>(f)] - lo) / (hi - lo) * kPanelH;
          std::snprintf(buf, sizeof(buf), "%.2f,%.2f ", px, py);
          out << buf;
        }
        out << "\"/>\n";
      }
    }
  }
  out << "</svg>\n";
}

}  // namespace tphenotype::plot
