#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace sgq {

// Minimal path-based SVG line chart; no plotting dependency.
class SvgChart {
  public:
    SvgChart(std::string title, std::string x_label, std::string y_label);

    void add_series(const std::string& name, const std::string& color, const std::vector<double>& x,
                    const std::vector<double>& y, bool dashed = false);
    void set_x_range(double lo, double hi);
    void set_y_range(double lo, double hi);

    void write(const std::filesystem::path& path) const;

  private:
    struct Series {
        std::string name, color;
        std::vector<double> x, y;
        bool dashed;
    };
    std::string title_, x_label_, y_label_;
    std::vector<Series> series_;
    double x_lo_ = 0, x_hi_ = 1, y_lo_ = 0, y_hi_ = 1;
    bool x_fixed_ = false, y_fixed_ = false;
};

}  // namespace sgq
