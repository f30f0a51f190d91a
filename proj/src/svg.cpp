#include "skillmem/svg.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <sstream>

#include "skillmem/error.hpp"

namespace skillmem {

namespace {

constexpr double kWidth = 720, kHeight = 440;
constexpr double kLeft = 60, kRight = 150, kTop = 40, kBottom = 50;
constexpr std::array<const char*, 8> kColors = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                                "#9467bd", "#8c564b", "#e377c2", "#17becf"};

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

}  // namespace

std::string svg_line_chart(const std::vector<SvgSeries>& series, const std::string& title, const std::string& x_label,
                           const std::string& y_label, double y_min, double y_max) {
    if (!(y_max > y_min)) throw Error("chart y range is empty");
    std::size_t n = 1;
    for (const auto& s : series) n = std::max(n, s.y.size());
    const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
    auto px = [&](std::size_t i) { return kLeft + (n > 1 ? pw * static_cast<double>(i) / static_cast<double>(n - 1) : 0.0); };
    auto py = [&](double v) { return kTop + ph * (1.0 - (std::clamp(v, y_min, y_max) - y_min) / (y_max - y_min)); };

    std::ostringstream o;
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    o << "<text x=\"" << kWidth / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << escape(title) << "</text>\n";
    o << "<line x1=\"" << kLeft << "\" y1=\"" << kTop + ph << "\" x2=\"" << kLeft + pw << "\" y2=\"" << kTop + ph
      << "\" stroke=\"black\"/>\n";
    o << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\"" << kTop + ph
      << "\" stroke=\"black\"/>\n";
    for (int k = 0; k <= 4; ++k) {
        const double v = y_min + (y_max - y_min) * k / 4.0;
        o << "<text x=\"" << kLeft - 6 << "\" y=\"" << num(py(v) + 4) << "\" text-anchor=\"end\">" << num(v) << "</text>\n";
        o << "<line x1=\"" << kLeft << "\" y1=\"" << num(py(v)) << "\" x2=\"" << kLeft + pw << "\" y2=\"" << num(py(v))
          << "\" stroke=\"#ddd\"/>\n";
    }
    o << "<text x=\"" << kLeft << "\" y=\"" << kTop + ph + 18 << "\" text-anchor=\"middle\">1</text>\n";
    o << "<text x=\"" << kLeft + pw << "\" y=\"" << kTop + ph + 18 << "\" text-anchor=\"middle\">" << n << "</text>\n";
    o << "<text x=\"" << kLeft + pw / 2 << "\" y=\"" << kHeight - 12 << "\" text-anchor=\"middle\">" << escape(x_label)
      << "</text>\n";
    o << "<text x=\"16\" y=\"" << kTop + ph / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
      << kTop + ph / 2 << ")\">" << escape(y_label) << "</text>\n";

    for (std::size_t k = 0; k < series.size(); ++k) {
        const char* color = kColors[k % kColors.size()];
        o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < series[k].y.size(); ++i) o << (i ? " " : "") << num(px(i)) << ',' << num(py(series[k].y[i]));
        o << "\"/>\n";
        const double ly = kTop + 10 + 18.0 * static_cast<double>(k);
        o << "<line x1=\"" << kLeft + pw + 12 << "\" y1=\"" << ly << "\" x2=\"" << kLeft + pw + 32 << "\" y2=\"" << ly
          << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
        o << "<text x=\"" << kLeft + pw + 38 << "\" y=\"" << ly + 4 << "\">" << escape(series[k].name) << "</text>\n";
    }
    o << "</svg>\n";
    return o.str();
}

}  // namespace skillmem
