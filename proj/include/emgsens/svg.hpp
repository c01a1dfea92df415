#pragma once

#include <string>

namespace emgsens {

// Minimal SVG document builder; deterministic numeric formatting keeps
// repeated runs byte-identical.
class SvgDoc {
 public:
  SvgDoc(double width, double height);

  void comment(const std::string& text);
  void rect(double x, double y, double w, double h, const std::string& fill,
            const std::string& stroke = "none", double stroke_width = 0.0);
  void line(double x1, double y1, double x2, double y2,
            const std::string& stroke, double stroke_width = 1.0);
  void circle(double cx, double cy, double r, const std::string& fill,
              double opacity = 1.0);
  void text(double x, double y, const std::string& content, double size = 12.0,
            const std::string& anchor = "start", const std::string& fill = "#222",
            double rotate_deg = 0.0);

  std::string finish() const;

  static std::string esc(const std::string& s);
  static std::string num(double v);

  // White -> red sequential map for t in [0, 1].
  static std::string heat_color(double t);
  // Blue -> white -> red diverging map for t in [-1, 1].
  static std::string diverging_color(double t);

 private:
  double width_;
  double height_;
  std::string body_;
};

}  // namespace emgsens
