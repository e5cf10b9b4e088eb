#pragma once

#include <sstream>
#include <string>
#include <string_view>

namespace varlm::svg {

/// Escapes &, <, >, " for use in SVG text and attributes.
std::string escape(std::string_view s);

/// Fixed-precision number formatting so emitted files are byte-stable.
std::string num(double v, int precision = 2);

/// Minimal SVG document builder.
class Canvas {
 public:
  Canvas(double width, double height);

  void rect(double x, double y, double w, double h, std::string_view fill);
  void circle(double cx, double cy, double r, std::string_view fill);
  void cross(double cx, double cy, double r, std::string_view stroke);
  void line(double x1, double y1, double x2, double y2, std::string_view stroke);
  void text(double x, double y, std::string_view s, int size = 12, std::string_view anchor = "start");

  std::string str() const;

 private:
  double width_;
  double height_;
  std::ostringstream body_;
};

}  // namespace varlm::svg
