#ifndef GRPOSIM_SVG_HPP_
#define GRPOSIM_SVG_HPP_

#include <string>
#include <vector>

namespace grposim {

struct SvgSeries {
  std::string name;
  std::vector<double> values;  // y per x index
};

// Minimal standalone line chart (one polyline per series, axes and legend).
void write_line_chart(const std::string& path, const std::string& title,
                      const std::vector<double>& x,
                      const std::vector<SvgSeries>& series);

}  // namespace grposim

#endif  // GRPOSIM_SVG_HPP_
