#include "grposim/svg.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "grposim/errors.hpp"

namespace grposim {

namespace {

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                          "#9467bd", "#8c564b", "#17becf", "#7f7f7f"};

std::string num(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

}  // namespace

void write_line_chart(const std::string& path, const std::string& title,
                      const std::vector<double>& x,
                      const std::vector<SvgSeries>& series) {
  const double width = 860, height = 420;
  const double ml = 70, mr = 170, mt = 40, mb = 45;
  const double pw = width - ml - mr, ph = height - mt - mb;

  double xmin = 0, xmax = 1, ymin = 0, ymax = 1;
  if (!x.empty()) {
    xmin = *std::min_element(x.begin(), x.end());
    xmax = *std::max_element(x.begin(), x.end());
  }
  bool have_y = false;
  for (const auto& s : series) {
    for (double v : s.values) {
      if (!std::isfinite(v)) continue;
      if (!have_y) {
        ymin = ymax = v;
        have_y = true;
      } else {
        ymin = std::min(ymin, v);
        ymax = std::max(ymax, v);
      }
    }
  }
  if (xmax <= xmin) xmax = xmin + 1;
  if (ymax <= ymin) ymax = ymin + 1;

  auto px = [&](double v) { return ml + (v - xmin) / (xmax - xmin) * pw; };
  auto py = [&](double v) { return mt + ph - (v - ymin) / (ymax - ymin) * ph; };

  std::ofstream out(path);
  if (!out) throw DataError("svg: cannot write " + path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
      << "\" height=\"" << height << "\" viewBox=\"0 0 " << width << " "
      << height << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << ml << "\" y=\"24\" font-family=\"sans-serif\" "
         "font-size=\"15\" font-weight=\"bold\">"
      << title << "</text>\n";

  // frame and gridlines
  out << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << pw
      << "\" height=\"" << ph << "\" fill=\"none\" stroke=\"#555\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double fy = ymin + (ymax - ymin) * i / 4.0;
    const double gy = py(fy);
    out << "<line x1=\"" << ml << "\" y1=\"" << gy << "\" x2=\"" << ml + pw
        << "\" y2=\"" << gy << "\" stroke=\"#ddd\"/>\n";
    out << "<text x=\"" << ml - 8 << "\" y=\"" << gy + 4
        << "\" font-family=\"sans-serif\" font-size=\"11\" "
           "text-anchor=\"end\">"
        << num(fy) << "</text>\n";
    const double fx = xmin + (xmax - xmin) * i / 4.0;
    out << "<text x=\"" << px(fx) << "\" y=\"" << mt + ph + 18
        << "\" font-family=\"sans-serif\" font-size=\"11\" "
           "text-anchor=\"middle\">"
        << num(fx) << "</text>\n";
  }

  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* color = kPalette[s % (sizeof(kPalette) / sizeof(*kPalette))];
    out << "<polyline fill=\"none\" stroke=\"" << color
        << "\" stroke-width=\"1.5\" points=\"";
    const auto& vals = series[s].values;
    const std::size_t n = std::min(vals.size(), x.size());
    for (std::size_t i = 0; i < n; ++i) {
      if (!std::isfinite(vals[i])) continue;
      out << num(px(x[i])) << ',' << num(py(vals[i])) << ' ';
    }
    out << "\"/>\n";
    const double ly = mt + 16 + 18 * static_cast<double>(s);
    out << "<line x1=\"" << ml + pw + 10 << "\" y1=\"" << ly << "\" x2=\""
        << ml + pw + 30 << "\" y2=\"" << ly << "\" stroke=\"" << color
        << "\" stroke-width=\"2\"/>\n";
    out << "<text x=\"" << ml + pw + 36 << "\" y=\"" << ly + 4
        << "\" font-family=\"sans-serif\" font-size=\"12\">" << series[s].name
        << "</text>\n";
  }
  out << "</svg>\n";
}

}  // namespace grposim
