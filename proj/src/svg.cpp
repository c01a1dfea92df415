#include "emgsens/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace emgsens {

SvgDoc::SvgDoc(double width, double height) : width_(width), height_(height) {}

std::string SvgDoc::num(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string SvgDoc::esc(const std::string& s) {
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

void SvgDoc::comment(const std::string& text) {
  body_ += "<!-- " + esc(text) + " -->\n";
}

void SvgDoc::rect(double x, double y, double w, double h,
                  const std::string& fill, const std::string& stroke,
                  double stroke_width) {
  body_ += "<rect x=\"" + num(x) + "\" y=\"" + num(y) + "\" width=\"" + num(w) +
           "\" height=\"" + num(h) + "\" fill=\"" + fill + "\"";
  if (stroke != "none") {
    body_ += " stroke=\"" + stroke + "\" stroke-width=\"" + num(stroke_width) + "\"";
  }
  body_ += "/>\n";
}

void SvgDoc::line(double x1, double y1, double x2, double y2,
                  const std::string& stroke, double stroke_width) {
  body_ += "<line x1=\"" + num(x1) + "\" y1=\"" + num(y1) + "\" x2=\"" + num(x2) +
           "\" y2=\"" + num(y2) + "\" stroke=\"" + stroke + "\" stroke-width=\"" +
           num(stroke_width) + "\"/>\n";
}

void SvgDoc::circle(double cx, double cy, double r, const std::string& fill,
                    double opacity) {
  body_ += "<circle cx=\"" + num(cx) + "\" cy=\"" + num(cy) + "\" r=\"" + num(r) +
           "\" fill=\"" + fill + "\"";
  if (opacity < 1.0) body_ += " fill-opacity=\"" + num(opacity) + "\"";
  body_ += "/>\n";
}

void SvgDoc::text(double x, double y, const std::string& content, double size,
                  const std::string& anchor, const std::string& fill,
                  double rotate_deg) {
  body_ += "<text x=\"" + num(x) + "\" y=\"" + num(y) + "\" font-size=\"" +
           num(size) + "\" font-family=\"sans-serif\" text-anchor=\"" + anchor +
           "\" fill=\"" + fill + "\"";
  if (rotate_deg != 0.0) {
    body_ += " transform=\"rotate(" + num(rotate_deg) + " " + num(x) + " " +
             num(y) + ")\"";
  }
  body_ += ">" + esc(content) + "</text>\n";
}

std::string SvgDoc::finish() const {
  std::string out = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(width_) +
         "\" height=\"" + num(height_) + "\" viewBox=\"0 0 " + num(width_) +
         " " + num(height_) + "\">\n";
  out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out += body_;
  out += "</svg>\n";
  return out;
}

std::string SvgDoc::heat_color(double t) {
  t = std::clamp(t, 0.0, 1.0);
  const int r = 255;
  const int g = static_cast<int>(std::lround(245.0 * (1.0 - t)));
  const int b = static_cast<int>(std::lround(240.0 * (1.0 - t)));
  char buf[16];
  std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", r, g, b);
  return buf;
}

std::string SvgDoc::diverging_color(double t) {
  t = std::clamp(t, -1.0, 1.0);
  int r, g, b;
  if (t >= 0.0) {
    r = 255;
    g = static_cast<int>(std::lround(255.0 - 200.0 * t));
    b = static_cast<int>(std::lround(255.0 - 215.0 * t));
  } else {
    r = static_cast<int>(std::lround(255.0 + 215.0 * t));
    g = static_cast<int>(std::lround(255.0 + 180.0 * t));
    b = 255;
  }
  char buf[16];
  std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", r, g, b);
  return buf;
}

}  // namespace emgsens
