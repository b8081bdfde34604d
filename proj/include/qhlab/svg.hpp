#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>
#include <vector>

namespace qhlab {

// Minimal static SVG plotting: polyline curves and scatter marks on a
// fixed-size canvas with linear axes.
class SvgPlot {
public:
    SvgPlot(std::string title, std::string xlabel, std::string ylabel)
        : title_(std::move(title)),
          xlabel_(std::move(xlabel)),
          ylabel_(std::move(ylabel)) {}

    void add_curve(const std::vector<double>& x, const std::vector<double>& y,
                   const std::string& color, const std::string& label = "") {
        curves_.push_back({x, y, color, label, false});
        grow_bounds(x, y);
    }
    void add_points(const std::vector<double>& x, const std::vector<double>& y,
                    const std::string& color, const std::string& label = "") {
        curves_.push_back({x, y, color, label, true});
        grow_bounds(x, y);
    }

    void write(const std::string& path) const {
        const double W = 640, H = 480, ml = 70, mr = 20, mt = 40, mb = 50;
        double x0 = xmin_, x1 = xmax_, y0 = ymin_, y1 = ymax_;
        if (!(x1 > x0)) x1 = x0 + 1.0;
        if (!(y1 > y0)) y1 = y0 + 1.0;
        auto px = [&](double x) {
            return ml + (x - x0) / (x1 - x0) * (W - ml - mr);
        };
        auto py = [&](double y) {
            return H - mb - (y - y0) / (y1 - y0) * (H - mt - mb);
        };
        std::ofstream os(path);
        char buf[256];
        os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" "
              "height=\"480\" viewBox=\"0 0 640 480\">\n"
              "<rect width=\"640\" height=\"480\" fill=\"white\"/>\n";
        std::snprintf(buf, sizeof buf,
                      "<text x=\"320\" y=\"24\" text-anchor=\"middle\" "
                      "font-size=\"16\">%s</text>\n",
                      title_.c_str());
        os << buf;
        std::snprintf(buf, sizeof buf,
                      "<text x=\"320\" y=\"470\" text-anchor=\"middle\" "
                      "font-size=\"13\">%s</text>\n",
                      xlabel_.c_str());
        os << buf;
        std::snprintf(buf, sizeof buf,
                      "<text x=\"16\" y=\"240\" text-anchor=\"middle\" "
                      "font-size=\"13\" transform=\"rotate(-90 16 240)\">%s"
                      "</text>\n",
                      ylabel_.c_str());
        os << buf;
        // frame + ticks
        std::snprintf(buf, sizeof buf,
                      "<rect x=\"%.1f\" y=\"%.1f\" width=\"%.1f\" "
                      "height=\"%.1f\" fill=\"none\" stroke=\"black\"/>\n",
                      ml, mt, W - ml - mr, H - mt - mb);
        os << buf;
        for (int i = 0; i <= 4; ++i) {
            const double fx = x0 + (x1 - x0) * i / 4.0;
            const double fy = y0 + (y1 - y0) * i / 4.0;
            std::snprintf(buf, sizeof buf,
                          "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"middle\" "
                          "font-size=\"11\">%.3g</text>\n",
                          px(fx), H - mb + 16, fx);
            os << buf;
            std::snprintf(buf, sizeof buf,
                          "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"end\" "
                          "font-size=\"11\">%.3g</text>\n",
                          ml - 6, py(fy) + 4, fy);
            os << buf;
        }
        int li = 0;
        for (const auto& c : curves_) {
            if (c.scatter) {
                for (std::size_t i = 0; i < c.x.size(); ++i) {
                    std::snprintf(buf, sizeof buf,
                                  "<circle cx=\"%.2f\" cy=\"%.2f\" r=\"4\" "
                                  "fill=\"%s\"/>\n",
                                  px(c.x[i]), py(c.y[i]), c.color.c_str());
                    os << buf;
                }
            } else {
                os << "<polyline fill=\"none\" stroke=\"" << c.color
                   << "\" stroke-width=\"1.5\" points=\"";
                for (std::size_t i = 0; i < c.x.size(); ++i) {
                    std::snprintf(buf, sizeof buf, "%.2f,%.2f ", px(c.x[i]),
                                  py(c.y[i]));
                    os << buf;
                }
                os << "\"/>\n";
            }
            if (!c.label.empty()) {
                std::snprintf(buf, sizeof buf,
                              "<text x=\"%.1f\" y=\"%.1f\" font-size=\"12\" "
                              "fill=\"%s\">%s</text>\n",
                              W - mr - 180.0, mt + 18.0 + 16.0 * li,
                              c.color.c_str(), c.label.c_str());
                os << buf;
                ++li;
            }
        }
        os << "</svg>\n";
    }

private:
    struct Curve {
        std::vector<double> x, y;
        std::string color, label;
        bool scatter = false;
    };
    void grow_bounds(const std::vector<double>& x,
                     const std::vector<double>& y) {
        for (double v : x) {
            xmin_ = std::min(xmin_, v);
            xmax_ = std::max(xmax_, v);
        }
        for (double v : y) {
            ymin_ = std::min(ymin_, v);
            ymax_ = std::max(ymax_, v);
        }
    }
    std::string title_, xlabel_, ylabel_;
    std::vector<Curve> curves_;
    double xmin_ = 1e300, xmax_ = -1e300, ymin_ = 1e300, ymax_ = -1e300;
};

// |u(t,x)|^2 heat map as an SVG pixel raster (downsampled)
inline void write_heatmap_svg(const std::string& path,
                              const std::vector<std::vector<double>>& rows,
                              double t0, double t1, double xmin, double xmax) {
    const std::size_t nt = rows.size();
    const std::size_t nx = nt ? rows.front().size() : 0;
    double vmax = 1e-300;
    for (const auto& r : rows)
        for (double v : r) vmax = std::max(vmax, v);
    std::ofstream os(path);
    const double W = 640, H = 480, ml = 60, mt = 30, mb = 40, mr = 20;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" "
          "height=\"480\" viewBox=\"0 0 640 480\">\n"
          "<rect width=\"640\" height=\"480\" fill=\"white\"/>\n";
    char buf[256];
    const double cw = (W - ml - mr) / static_cast<double>(nx);
    const double ch = (H - mt - mb) / static_cast<double>(nt);
    for (std::size_t i = 0; i < nt; ++i)
        for (std::size_t j = 0; j < nx; ++j) {
            const double v = rows[i][j] / vmax;
            if (v < 1e-4) continue;
            const int shade = static_cast<int>(255.0 * (1.0 - v));
            std::snprintf(buf, sizeof buf,
                          "<rect x=\"%.2f\" y=\"%.2f\" width=\"%.2f\" "
                          "height=\"%.2f\" fill=\"rgb(%d,%d,255)\"/>\n",
                          ml + cw * static_cast<double>(j),
                          H - mb - ch * static_cast<double>(i + 1), cw + 0.5,
                          ch + 0.5, shade, shade);
            os << buf;
        }
    std::snprintf(buf, sizeof buf,
                  "<text x=\"320\" y=\"20\" text-anchor=\"middle\" "
                  "font-size=\"14\">|u(t,x)|^2, t in [%.3g, %.3g], x in "
                  "[%.3g, %.3g]</text>\n",
                  t0, t1, xmin, xmax);
    os << buf << "</svg>\n";
}

} // namespace qhlab
