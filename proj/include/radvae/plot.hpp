#pragma once

// Standalone SVG renderings of Pd curves and Doppler maps.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "radvae/experiment.hpp"

namespace radvae {

namespace detail {

inline std::string svg_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

inline void write_text_file(const std::string& path, const std::string& body) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open '" + path + "' for writing");
  os << body;
  if (!os) throw std::runtime_error("write failed for '" + path + "'");
}

inline constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                           "#ff7f0e", "#17becf", "#8c564b", "#e377c2"};

}  // namespace detail

/// Pd versus SNR, one polyline per curve, y axis fixed to [0, 1].
inline std::string render_pd_svg(const std::vector<PdCurve>& curves, std::string_view title = "") {
  if (curves.empty()) throw std::invalid_argument("plot: no curves");
  double xmin = INFINITY, xmax = -INFINITY;
  for (const auto& c : curves)
    for (const auto& r : c.rows) {
      xmin = std::min(xmin, r.snr_db);
      xmax = std::max(xmax, r.snr_db);
    }
  if (!(xmax > xmin)) {
    xmin -= 1.0;
    xmax += 1.0;
  }
  const double W = 640, H = 420, L = 60, R = 150, T = 40, B = 50;
  const double pw = W - L - R, ph = H - T - B;
  auto X = [&](double v) { return L + (v - xmin) / (xmax - xmin) * pw; };
  auto Y = [&](double v) { return T + (1.0 - v) * ph; };

  std::ostringstream o;
  o.setf(std::ios::fixed);
  o.precision(2);
  o << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
    << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
    << "\" viewBox=\"0 0 " << W << ' ' << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
    << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!title.empty())
    o << "<text x=\"" << L + pw / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
      << detail::svg_escape(title) << "</text>\n";
  for (int i = 0; i <= 5; ++i) {
    const double v = i / 5.0;
    o << "<line x1=\"" << L << "\" y1=\"" << Y(v) << "\" x2=\"" << L + pw << "\" y2=\"" << Y(v)
      << "\" stroke=\"#ddd\"/>\n"
      << "<text x=\"" << L - 6 << "\" y=\"" << Y(v) + 4 << "\" text-anchor=\"end\">" << v
      << "</text>\n";
  }
  for (int i = 0; i <= 5; ++i) {
    const double v = xmin + (xmax - xmin) * i / 5.0;
    o << "<text x=\"" << X(v) << "\" y=\"" << T + ph + 18 << "\" text-anchor=\"middle\">" << v
      << "</text>\n";
  }
  o << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << pw << "\" height=\"" << ph
    << "\" fill=\"none\" stroke=\"black\"/>\n"
    << "<text x=\"" << L + pw / 2 << "\" y=\"" << H - 10
    << "\" text-anchor=\"middle\">SNR (dB)</text>\n"
    << "<text x=\"16\" y=\"" << T + ph / 2 << "\" transform=\"rotate(-90 16 " << T + ph / 2
    << ")\" text-anchor=\"middle\">Pd</text>\n";

  for (std::size_t k = 0; k < curves.size(); ++k) {
    const auto& c = curves[k];
    const char* color = detail::kPalette[k % std::size(detail::kPalette)];
    o << "<polyline class=\"series\" data-detector=\"" << to_string(c.detector)
      << "\" fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.8\" points=\"";
    for (std::size_t j = 0; j < c.rows.size(); ++j)
      o << (j ? " " : "") << X(c.rows[j].snr_db) << ',' << Y(std::clamp(c.rows[j].pd, 0.0, 1.0));
    o << "\"/>\n";
    const double ly = T + 14 + 18.0 * static_cast<double>(k);
    o << "<line x1=\"" << L + pw + 12 << "\" y1=\"" << ly << "\" x2=\"" << L + pw + 32
      << "\" y2=\"" << ly << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n"
      << "<text x=\"" << L + pw + 38 << "\" y=\"" << ly + 4 << "\">"
      << detail::svg_escape(to_string(c.detector)) << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

/// Heat map of pd[d][snr] (rows: Doppler bin, columns: SNR), grey scale
/// from 0 (white) to 1 (black).
inline std::string render_doppler_svg(const DopplerMap& map, std::string_view title = "") {
  if (map.pd.empty() || map.snr_db.empty()) throw std::invalid_argument("plot: empty map");
  const double cell = 18, L = 60, T = 40;
  const double W = L + cell * static_cast<double>(map.snr_db.size()) + 40;
  const double H = T + cell * static_cast<double>(map.pd.size()) + 50;
  std::ostringstream o;
  o.setf(std::ios::fixed);
  o.precision(2);
  o << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
    << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
    << "\" font-family=\"sans-serif\" font-size=\"10\">\n"
    << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    << "<text x=\"" << L << "\" y=\"20\" font-size=\"13\">"
    << detail::svg_escape(title.empty() ? std::string(to_string(map.detector)) : std::string(title))
    << "</text>\n";
  for (std::size_t d = 0; d < map.pd.size(); ++d) {
    const double y = T + cell * static_cast<double>(d);
    o << "<text x=\"" << L - 4 << "\" y=\"" << y + cell * 0.7 << "\" text-anchor=\"end\">" << d
      << "</text>\n";
    for (std::size_t j = 0; j < map.snr_db.size(); ++j) {
      const double v = std::clamp(map.pd[d][j], 0.0, 1.0);
      const int g = static_cast<int>(std::lround(255.0 * (1.0 - v)));
      o << "<rect x=\"" << L + cell * static_cast<double>(j) << "\" y=\"" << y << "\" width=\""
        << cell << "\" height=\"" << cell << "\" fill=\"rgb(" << g << ',' << g << ',' << g
        << ")\"><title>d=" << d << " snr=" << map.snr_db[j] << " pd=" << v
        << "</title></rect>\n";
    }
  }
  const double yb = T + cell * static_cast<double>(map.pd.size());
  for (std::size_t j = 0; j < map.snr_db.size(); j += 5)
    o << "<text x=\"" << L + cell * (static_cast<double>(j) + 0.5) << "\" y=\"" << yb + 14
      << "\" text-anchor=\"middle\">" << map.snr_db[j] << "</text>\n";
  o << "<text x=\"" << L << "\" y=\"" << yb + 34 << "\">SNR (dB) vs Doppler bin</text>\n"
    << "</svg>\n";
  return o.str();
}

inline void emit_plot(const std::vector<PdCurve>& curves, const std::string& path,
                      std::string_view title = "") {
  detail::write_text_file(path, render_pd_svg(curves, title));
}

inline void emit_plot(const DopplerMap& map, const std::string& path, std::string_view title = "") {
  detail::write_text_file(path, render_doppler_svg(map, title));
}

/// Rebuilds Doppler maps (one per scenario/detector) from curve rows.
inline std::vector<DopplerMap> maps_from_curves(const std::vector<PdCurve>& curves) {
  std::vector<DopplerMap> maps;
  for (const auto& c : curves) {
    auto it = std::find_if(maps.begin(), maps.end(), [&](const DopplerMap& m) {
      return m.detector == c.detector && m.scenario == c.scenario;
    });
    if (it == maps.end()) {
      DopplerMap m;
      m.detector = c.detector;
      m.scenario = c.scenario;
      for (const auto& r : c.rows) m.snr_db.push_back(r.snr_db);
      m.n_trials = c.rows.empty() ? 0 : c.rows.front().n_trials;
      maps.push_back(std::move(m));
      it = std::prev(maps.end());
    }
    if (it->pd.size() <= c.doppler_bin) it->pd.resize(c.doppler_bin + 1);
    auto& row = it->pd[c.doppler_bin];
    row.clear();
    for (const auto& r : c.rows) row.push_back(r.pd);
  }
  return maps;
}

}  // namespace radvae
