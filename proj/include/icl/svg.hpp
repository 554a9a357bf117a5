#pragma once

#include <string>
#include <vector>

namespace icl {

struct Series {
  std::string name;
  std::vector<double> ys;
};

// small static plot writers for experiment reports; fixed-size SVG output
void write_bar_chart(const std::string& path, const std::string& title,
                     const std::vector<std::string>& labels, const std::vector<double>& values,
                     const std::string& y_axis);

void write_line_chart(const std::string& path, const std::string& title,
                      const std::vector<std::string>& x_labels, const std::vector<Series>& series,
                      const std::string& y_axis);

}  // namespace icl
