#include "icl/svg.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace icl {

namespace {

constexpr int kWidth = 720;
constexpr int kHeight = 420;
constexpr int kLeft = 64;
constexpr int kRight = 24;
constexpr int kTop = 48;
constexpr int kBottom = 56;

const char* kPalette[] = {"#3465a4", "#cc4125", "#6aa84f", "#e69138", "#8e7cc3", "#45818e"};

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '&') out += "&amp;";
    else if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else out += c;
  }
  return out;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(4);
  os << v;
  return os.str();
}

void open_svg(std::ofstream& os, const std::string& title) {
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
     << kHeight << "\" viewBox=\"0 0 " << kWidth << " " << kHeight << "\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
     << "<text x=\"" << kWidth / 2 << "\" y=\"28\" text-anchor=\"middle\" "
     << "font-family=\"sans-serif\" font-size=\"16\">" << escape(title) << "</text>\n";
}

void axis_frame(std::ofstream& os, double max_v, const std::string& y_axis) {
  const int x0 = kLeft, x1 = kWidth - kRight, y0 = kHeight - kBottom, y1 = kTop;
  os << "<line x1=\"" << x0 << "\" y1=\"" << y0 << "\" x2=\"" << x1 << "\" y2=\"" << y0
     << "\" stroke=\"black\"/>\n"
     << "<line x1=\"" << x0 << "\" y1=\"" << y0 << "\" x2=\"" << x0 << "\" y2=\"" << y1
     << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    double v = max_v * i / 4.0;
    int y = y0 - static_cast<int>((y0 - y1) * i / 4.0);
    os << "<line x1=\"" << x0 - 4 << "\" y1=\"" << y << "\" x2=\"" << x0 << "\" y2=\"" << y
       << "\" stroke=\"black\"/>\n"
       << "<text x=\"" << x0 - 8 << "\" y=\"" << y + 4
       << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << fmt(v)
       << "</text>\n";
  }
  os << "<text x=\"16\" y=\"" << (y0 + y1) / 2 << "\" text-anchor=\"middle\" "
     << "font-family=\"sans-serif\" font-size=\"12\" transform=\"rotate(-90 16 "
     << (y0 + y1) / 2 << ")\">" << escape(y_axis) << "</text>\n";
}

}  // namespace

void write_bar_chart(const std::string& path, const std::string& title,
                     const std::vector<std::string>& labels, const std::vector<double>& values,
                     const std::string& y_axis) {
  if (labels.size() != values.size())
    throw std::invalid_argument("write_bar_chart: label/value size mismatch");
  std::ofstream os(path);
  if (!os) throw std::runtime_error("write_bar_chart: cannot open " + path);

  double max_v = 0.0;
  for (double v : values) max_v = std::max(max_v, v);
  if (max_v <= 0.0) max_v = 1.0;
  max_v *= 1.1;

  open_svg(os, title);
  axis_frame(os, max_v, y_axis);
  const int x0 = kLeft, x1 = kWidth - kRight, y0 = kHeight - kBottom, y1 = kTop;
  const int n = static_cast<int>(values.size());
  const double slot = static_cast<double>(x1 - x0) / n;
  for (int i = 0; i < n; ++i) {
    double h = (y0 - y1) * values[static_cast<size_t>(i)] / max_v;
    double bx = x0 + slot * i + slot * 0.15;
    double bw = slot * 0.7;
    os << "<rect x=\"" << fmt(bx) << "\" y=\"" << fmt(y0 - h) << "\" width=\"" << fmt(bw)
       << "\" height=\"" << fmt(h) << "\" fill=\"" << kPalette[i % 6] << "\"/>\n"
       << "<text x=\"" << fmt(bx + bw / 2) << "\" y=\"" << y0 + 16
       << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">"
       << escape(labels[static_cast<size_t>(i)]) << "</text>\n"
       << "<text x=\"" << fmt(bx + bw / 2) << "\" y=\"" << fmt(y0 - h - 4)
       << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">"
       << fmt(values[static_cast<size_t>(i)]) << "</text>\n";
  }
  os << "</svg>\n";
}

void write_line_chart(const std::string& path, const std::string& title,
                      const std::vector<std::string>& x_labels, const std::vector<Series>& series,
                      const std::string& y_axis) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("write_line_chart: cannot open " + path);

  double max_v = 0.0;
  for (const Series& s : series) {
    if (s.ys.size() != x_labels.size())
      throw std::invalid_argument("write_line_chart: series length mismatch");
    for (double v : s.ys) max_v = std::max(max_v, v);
  }
  if (max_v <= 0.0) max_v = 1.0;
  max_v *= 1.1;

  open_svg(os, title);
  axis_frame(os, max_v, y_axis);
  const int x0 = kLeft, x1 = kWidth - kRight, y0 = kHeight - kBottom, y1 = kTop;
  const int n = static_cast<int>(x_labels.size());
  auto px = [&](int i) {
    return n == 1 ? (x0 + x1) / 2.0 : x0 + static_cast<double>(x1 - x0) * i / (n - 1);
  };
  auto py = [&](double v) { return y0 - (y0 - y1) * v / max_v; };

  for (int i = 0; i < n; ++i)
    os << "<text x=\"" << fmt(px(i)) << "\" y=\"" << y0 + 16
       << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">"
       << escape(x_labels[static_cast<size_t>(i)]) << "</text>\n";

  for (size_t si = 0; si < series.size(); ++si) {
    const char* color = kPalette[si % 6];
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (int i = 0; i < n; ++i)
      os << fmt(px(i)) << "," << fmt(py(series[si].ys[static_cast<size_t>(i)])) << " ";
    os << "\"/>\n";
    for (int i = 0; i < n; ++i)
      os << "<circle cx=\"" << fmt(px(i)) << "\" cy=\""
         << fmt(py(series[si].ys[static_cast<size_t>(i)])) << "\" r=\"3\" fill=\"" << color
         << "\"/>\n";
    os << "<text x=\"" << x0 + 10 << "\" y=\"" << kTop + 16 * static_cast<int>(si)
       << "\" font-family=\"sans-serif\" font-size=\"12\" fill=\"" << color << "\">"
       << escape(series[si].name) << "</text>\n";
  }
  os << "</svg>\n";
}

}  // namespace icl
