#include "varlm/svg.hpp"

#include <cstdio>

namespace varlm::svg {

std::string escape(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

std::string num(double v, int precision) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", precision, v);
  std::string s(buf);
  if (s == "-0.00" || s == "-0.0" || s == "-0") s.erase(0, 1);
  return s;
}

Canvas::Canvas(double width, double height) : width_(width), height_(height) {}

void Canvas::rect(double x, double y, double w, double h, std::string_view fill) {
  body_ << "<rect x=\"" << num(x) << "\" y=\"" << num(y) << "\" width=\"" << num(w)
        << "\" height=\"" << num(h) << "\" fill=\"" << fill << "\"/>\n";
}

void Canvas::circle(double cx, double cy, double r, std::string_view fill) {
  body_ << "<circle cx=\"" << num(cx) << "\" cy=\"" << num(cy) << "\" r=\"" << num(r)
        << "\" fill=\"" << fill << "\"/>\n";
}

void Canvas::cross(double cx, double cy, double r, std::string_view stroke) {
  body_ << "<path class=\"cross\" d=\"M" << num(cx - r) << ' ' << num(cy - r) << " L" << num(cx + r)
        << ' ' << num(cy + r) << " M" << num(cx - r) << ' ' << num(cy + r) << " L" << num(cx + r)
        << ' ' << num(cy - r) << "\" stroke=\"" << stroke << "\" stroke-width=\"1.5\" fill=\"none\"/>\n";
}

void Canvas::line(double x1, double y1, double x2, double y2, std::string_view stroke) {
  body_ << "<line x1=\"" << num(x1) << "\" y1=\"" << num(y1) << "\" x2=\"" << num(x2) << "\" y2=\""
        << num(y2) << "\" stroke=\"" << stroke << "\"/>\n";
}

void Canvas::text(double x, double y, std::string_view s, int size, std::string_view anchor) {
  body_ << "<text x=\"" << num(x) << "\" y=\"" << num(y) << "\" font-size=\"" << size
        << "\" font-family=\"sans-serif\" text-anchor=\"" << anchor << "\">" << escape(s)
        << "</text>\n";
}

std::string Canvas::str() const {
  std::ostringstream out;
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(width_, 0) << "\" height=\""
      << num(height_, 0) << "\" viewBox=\"0 0 " << num(width_, 0) << ' ' << num(height_, 0)
      << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << body_.str() << "</svg>\n";
  return out.str();
}

}  // namespace varlm::svg
