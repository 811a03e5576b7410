#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace vnsim {

// Minimal native log-log plot: one polyline with markers, decade ticks, an
// optional slope annotation, and a sidecar CSV holding the exact numbers.
inline void write_loglog_svg(const std::string& path, const std::vector<double>& xs,
                             const std::vector<double>& ys, const std::string& title,
                             const std::string& xlabel, const std::string& ylabel,
                             double slope = std::numeric_limits<double>::quiet_NaN()) {
  if (xs.size() != ys.size() || xs.empty())
    throw std::invalid_argument("write_loglog_svg: need matched nonempty series");
  for (size_t i = 0; i < xs.size(); ++i)
    if (!(xs[i] > 0.0) || !(ys[i] > 0.0))
      throw std::invalid_argument("write_loglog_svg: log axes need positive data");

  const int W = 560, H = 420, ml = 70, mr = 20, mt = 40, mb = 50;
  double lx0 = std::log10(xs[0]), lx1 = lx0, ly0 = std::log10(ys[0]), ly1 = ly0;
  for (size_t i = 0; i < xs.size(); ++i) {
    lx0 = std::min(lx0, std::log10(xs[i]));
    lx1 = std::max(lx1, std::log10(xs[i]));
    ly0 = std::min(ly0, std::log10(ys[i]));
    ly1 = std::max(ly1, std::log10(ys[i]));
  }
  if (lx1 - lx0 < 1e-9) { lx0 -= 0.5; lx1 += 0.5; }
  if (ly1 - ly0 < 1e-9) { ly0 -= 0.5; ly1 += 0.5; }
  const double padx = 0.05 * (lx1 - lx0), pady = 0.05 * (ly1 - ly0);
  lx0 -= padx; lx1 += padx; ly0 -= pady; ly1 += pady;

  auto px = [&](double x) { return ml + (std::log10(x) - lx0) / (lx1 - lx0) * (W - ml - mr); };
  auto py = [&](double y) { return H - mb - (std::log10(y) - ly0) / (ly1 - ly0) * (H - mt - mb); };

  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path);
  char buf[512];
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
     << "\" viewBox=\"0 0 " << W << " " << H << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  std::snprintf(buf, sizeof buf,
                "<rect x=\"%d\" y=\"%d\" width=\"%d\" height=\"%d\" fill=\"none\" "
                "stroke=\"black\"/>\n",
                ml, mt, W - ml - mr, H - mt - mb);
  os << buf;

  // Decade ticks and gridlines.
  for (int d = static_cast<int>(std::ceil(lx0)); d <= static_cast<int>(std::floor(lx1)); ++d) {
    const double x = px(std::pow(10.0, d));
    std::snprintf(buf, sizeof buf,
                  "<line x1=\"%.1f\" y1=\"%d\" x2=\"%.1f\" y2=\"%d\" stroke=\"#cccccc\"/>\n"
                  "<text x=\"%.1f\" y=\"%d\" font-size=\"11\" text-anchor=\"middle\">1e%d</text>\n",
                  x, mt, x, H - mb, x, H - mb + 16, d);
    os << buf;
  }
  for (int d = static_cast<int>(std::ceil(ly0)); d <= static_cast<int>(std::floor(ly1)); ++d) {
    const double y = py(std::pow(10.0, d));
    std::snprintf(buf, sizeof buf,
                  "<line x1=\"%d\" y1=\"%.1f\" x2=\"%d\" y2=\"%.1f\" stroke=\"#cccccc\"/>\n"
                  "<text x=\"%d\" y=\"%.1f\" font-size=\"11\" text-anchor=\"end\">1e%d</text>\n",
                  ml, y, W - mr, y, ml - 6, y + 4, d);
    os << buf;
  }

  os << "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.5\" points=\"";
  for (size_t i = 0; i < xs.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.2f,%.2f ", px(xs[i]), py(ys[i]));
    os << buf;
  }
  os << "\"/>\n";
  for (size_t i = 0; i < xs.size(); ++i) {
    std::snprintf(buf, sizeof buf,
                  "<circle cx=\"%.2f\" cy=\"%.2f\" r=\"3\" fill=\"#1f77b4\"/>\n", px(xs[i]),
                  py(ys[i]));
    os << buf;
  }

  std::snprintf(buf, sizeof buf,
                "<text x=\"%d\" y=\"%d\" font-size=\"14\" text-anchor=\"middle\">%s</text>\n",
                W / 2, mt - 14, title.c_str());
  os << buf;
  std::snprintf(buf, sizeof buf,
                "<text x=\"%d\" y=\"%d\" font-size=\"12\" text-anchor=\"middle\">%s</text>\n",
                W / 2, H - 10, xlabel.c_str());
  os << buf;
  std::snprintf(buf, sizeof buf,
                "<text x=\"16\" y=\"%d\" font-size=\"12\" text-anchor=\"middle\" "
                "transform=\"rotate(-90 16 %d)\">%s</text>\n",
                H / 2, H / 2, ylabel.c_str());
  os << buf;
  if (std::isfinite(slope)) {
    std::snprintf(buf, sizeof buf,
                  "<text x=\"%d\" y=\"%d\" font-size=\"12\" fill=\"#d62728\">slope = %.2f</text>\n",
                  ml + 10, mt + 18, slope);
    os << buf;
  }
  os << "</svg>\n";

  // Sidecar CSV with the exact plotted numbers.
  std::ofstream cs(path + ".csv");
  if (!cs) throw std::runtime_error("cannot open " + path + ".csv");
  cs << xlabel << "," << ylabel << "\n";
  for (size_t i = 0; i < xs.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", xs[i], ys[i]);
    cs << buf;
  }
}

}  // namespace vnsim
