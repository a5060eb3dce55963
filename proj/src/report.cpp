#include "gazedec/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "gazedec/errors.hpp"

namespace gazedec {

namespace {

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), pattern, v);
  return buf;
}

// Blue (low) to red (high) ramp.
std::string cell_color(double v, double lo, double hi) {
  double t = hi > lo ? (v - lo) / (hi - lo) : 0.5;
  t = std::clamp(t, 0.0, 1.0);
  const int r = static_cast<int>(std::lround(40 + 190 * t));
  const int g = static_cast<int>(std::lround(70 + 40 * (1.0 - t)));
  const int b = static_cast<int>(std::lround(40 + 190 * (1.0 - t)));
  char buf[16];
  std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", r, g, b);
  return buf;
}

}  // namespace

void write_grid_svg(const GridReport& rep, const std::filesystem::path& path) {
  constexpr int kCell = 110;
  constexpr int kMarginLeft = 70;
  constexpr int kMarginTop = 40;
  constexpr int kMarginBottom = 50;
  const int width = kMarginLeft + rep.regions_yaw * kCell + 20;
  const int height = kMarginTop + rep.regions_pitch * kCell + kMarginBottom;

  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const GridCell& c : rep.cells) {
    if (std::isnan(c.mean_error)) continue;
    lo = std::min(lo, c.mean_error);
    hi = std::max(hi, c.mean_error);
  }

  std::ofstream out(path);
  if (!out) throw IoError("cannot write svg: " + path.string());
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
      << height << "\" font-family=\"sans-serif\">\n";
  out << "<text x=\"" << kMarginLeft << "\" y=\"22\" font-size=\"14\">"
      << "mean error (deg, white) / subjects that benefit (yellow); calibration-free "
      << fmt("%.2f", rep.calibration_free_error) << " deg</text>\n";

  for (int rp = 0; rp < rep.regions_pitch; ++rp) {
    for (int ry = 0; ry < rep.regions_yaw; ++ry) {
      const GridCell& c = rep.cells[static_cast<std::size_t>(rp * rep.regions_yaw + ry)];
      // pitch increases upwards: bottom row is the lowest pitch region
      const int x = kMarginLeft + ry * kCell;
      const int y = kMarginTop + (rep.regions_pitch - 1 - rp) * kCell;
      const bool missing = std::isnan(c.mean_error);
      out << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << kCell << "\" height=\""
          << kCell << "\" fill=\"" << (missing ? std::string("#777777") : cell_color(c.mean_error, lo, hi))
          << "\" stroke=\"white\"/>\n";
      if (missing) {
        out << "<text x=\"" << x + kCell / 2 << "\" y=\"" << y + kCell / 2 + 5
            << "\" fill=\"white\" font-size=\"14\" text-anchor=\"middle\">n/a</text>\n";
      } else {
        out << "<text x=\"" << x + kCell / 2 << "\" y=\"" << y + kCell / 2 - 4
            << "\" fill=\"white\" font-size=\"18\" text-anchor=\"middle\">"
            << fmt("%.2f", c.mean_error) << "</text>\n";
        out << "<text x=\"" << x + kCell / 2 << "\" y=\"" << y + kCell / 2 + 20
            << "\" fill=\"#ffd24d\" font-size=\"15\" text-anchor=\"middle\">" << c.benefit_count
            << "/" << c.subjects_counted << "</text>\n";
      }
    }
  }

  for (int ry = 0; ry <= rep.regions_yaw; ++ry) {
    const double yaw = rep.spec.yaw_min + ry * rep.spec.region;
    out << "<text x=\"" << kMarginLeft + ry * kCell << "\" y=\""
        << kMarginTop + rep.regions_pitch * kCell + 18
        << "\" font-size=\"12\" text-anchor=\"middle\">" << fmt("%g", yaw) << "</text>\n";
  }
  out << "<text x=\"" << kMarginLeft + rep.regions_yaw * kCell / 2 << "\" y=\""
      << kMarginTop + rep.regions_pitch * kCell + 38
      << "\" font-size=\"13\" text-anchor=\"middle\">yaw (deg)</text>\n";
  for (int rp = 0; rp <= rep.regions_pitch; ++rp) {
    const double pitch = rep.spec.pitch_min + rp * rep.spec.region;
    out << "<text x=\"" << kMarginLeft - 8 << "\" y=\""
        << kMarginTop + (rep.regions_pitch - rp) * kCell + 4
        << "\" font-size=\"12\" text-anchor=\"end\">" << fmt("%g", pitch) << "</text>\n";
  }
  out << "<text x=\"14\" y=\"" << kMarginTop + rep.regions_pitch * kCell / 2
      << "\" font-size=\"13\" transform=\"rotate(-90 14 "
      << kMarginTop + rep.regions_pitch * kCell / 2 << ")\" text-anchor=\"middle\">pitch (deg)</text>\n";
  out << "</svg>\n";
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace gazedec
