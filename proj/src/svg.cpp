#include "sgq/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "sgq/common.hpp"

namespace sgq {

namespace {
constexpr double kWidth = 640, kHeight = 420;
constexpr double kLeft = 64, kRight = 24, kTop = 40, kBottom = 52;

std::string fmt(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}
}  // namespace

SvgChart::SvgChart(std::string title, std::string x_label, std::string y_label)
    : title_(std::move(title)), x_label_(std::move(x_label)), y_label_(std::move(y_label)) {}

void SvgChart::add_series(const std::string& name, const std::string& color, const std::vector<double>& x,
                          const std::vector<double>& y, bool dashed) {
    series_.push_back({name, color, x, y, dashed});
}

void SvgChart::set_x_range(double lo, double hi) {
    x_lo_ = lo;
    x_hi_ = hi;
    x_fixed_ = true;
}

void SvgChart::set_y_range(double lo, double hi) {
    y_lo_ = lo;
    y_hi_ = hi;
    y_fixed_ = true;
}

void SvgChart::write(const std::filesystem::path& path) const {
    double x_lo = x_lo_, x_hi = x_hi_, y_lo = y_lo_, y_hi = y_hi_;
    if (!x_fixed_ || !y_fixed_) {
        bool any = false;
        double xl = 0, xh = 1, yl = 0, yh = 1;
        for (const auto& s : series_) {
            for (std::size_t i = 0; i < s.x.size(); ++i) {
                if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
                if (!any) {
                    xl = xh = s.x[i];
                    yl = yh = s.y[i];
                    any = true;
                } else {
                    xl = std::min(xl, s.x[i]);
                    xh = std::max(xh, s.x[i]);
                    yl = std::min(yl, s.y[i]);
                    yh = std::max(yh, s.y[i]);
                }
            }
        }
        if (!x_fixed_) {
            x_lo = xl;
            x_hi = xh > xl ? xh : xl + 1;
        }
        if (!y_fixed_) {
            double pad = 0.05 * (yh - yl);
            if (pad <= 0) pad = 0.5;
            y_lo = yl - pad;
            y_hi = yh + pad;
        }
    }

    auto px = [&](double x) { return kLeft + (x - x_lo) / (x_hi - x_lo) * (kWidth - kLeft - kRight); };
    auto py = [&](double y) { return kHeight - kBottom - (y - y_lo) / (y_hi - y_lo) * (kHeight - kTop - kBottom); };

    std::ofstream f(path);
    if (!f) throw DataError("cannot write SVG: " + path.string());
    f << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" viewBox=\"0 0 " << kWidth << " " << kHeight << "\">\n";
    f << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    f << "<text x=\"" << kWidth / 2 << "\" y=\"22\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"15\">"
      << title_ << "</text>\n";

    // axes
    f << "<path d=\"M " << kLeft << " " << kTop << " L " << kLeft << " " << kHeight - kBottom << " L " << kWidth - kRight
      << " " << kHeight - kBottom << "\" fill=\"none\" stroke=\"black\" stroke-width=\"1\"/>\n";
    for (int i = 0; i <= 5; ++i) {
        double tx = x_lo + (x_hi - x_lo) * i / 5.0;
        double ty = y_lo + (y_hi - y_lo) * i / 5.0;
        f << "<line x1=\"" << px(tx) << "\" y1=\"" << kHeight - kBottom << "\" x2=\"" << px(tx) << "\" y2=\""
          << kHeight - kBottom + 4 << "\" stroke=\"black\"/>\n";
        f << "<text x=\"" << px(tx) << "\" y=\"" << kHeight - kBottom + 18
          << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << fmt(tx) << "</text>\n";
        f << "<line x1=\"" << kLeft - 4 << "\" y1=\"" << py(ty) << "\" x2=\"" << kLeft << "\" y2=\"" << py(ty)
          << "\" stroke=\"black\"/>\n";
        f << "<text x=\"" << kLeft - 8 << "\" y=\"" << py(ty) + 4
          << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << fmt(ty) << "</text>\n";
    }
    f << "<text x=\"" << (kLeft + kWidth - kRight) / 2 << "\" y=\"" << kHeight - 14
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">" << x_label_ << "</text>\n";
    f << "<text x=\"16\" y=\"" << (kTop + kHeight - kBottom) / 2
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" transform=\"rotate(-90 16 "
      << (kTop + kHeight - kBottom) / 2 << ")\">" << y_label_ << "</text>\n";

    for (const auto& s : series_) {
        f << "<path d=\"";
        bool pen_down = false;
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) {
                pen_down = false;
                continue;
            }
            double cx = std::clamp(px(s.x[i]), 0.0, kWidth);
            double cy = std::clamp(py(s.y[i]), 0.0, kHeight);
            f << (pen_down ? "L " : "M ") << fmt(cx) << " " << fmt(cy) << " ";
            pen_down = true;
        }
        f << "\" fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.6\""
          << (s.dashed ? " stroke-dasharray=\"6 4\"" : "") << "/>\n";
    }

    // legend
    double ly = kTop + 8;
    for (const auto& s : series_) {
        double lx = kWidth - kRight - 170;
        f << "<line x1=\"" << lx << "\" y1=\"" << ly << "\" x2=\"" << lx + 26 << "\" y2=\"" << ly << "\" stroke=\""
          << s.color << "\" stroke-width=\"2\"" << (s.dashed ? " stroke-dasharray=\"6 4\"" : "") << "/>\n";
        f << "<text x=\"" << lx + 32 << "\" y=\"" << ly + 4 << "\" font-family=\"sans-serif\" font-size=\"12\">" << s.name
          << "</text>\n";
        ly += 18;
    }
    f << "</svg>\n";
}

}  // namespace sgq
