#include "spo2cam/svgplot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "spo2cam/errors.hpp"

namespace spo2cam {

namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                    "#ff7f0e", "#8c564b"};
constexpr int kPaletteSize = 6;

std::string esc(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

std::string px(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

// Step of 1/2/5 x 10^k giving roughly `target` intervals over `range`.
double nice_step(double range, int target) {
    const double raw = range / target;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    const double norm = raw / mag;
    double step = 10.0;
    if (norm <= 1.5) step = 1.0;
    else if (norm <= 3.0) step = 2.0;
    else if (norm <= 7.0) step = 5.0;
    return step * mag;
}

std::vector<double> ticks_for(double lo, double hi) {
    const double step = nice_step(hi - lo, 5);
    std::vector<double> t;
    double v = std::ceil(lo / step) * step;
    for (; v <= hi + step * 1e-9; v += step) {
        // Snap values that should be round (e.g. 0) onto the grid exactly.
        const double snapped = std::round(v / step) * step;
        t.push_back(std::abs(snapped) < step * 1e-9 ? 0.0 : snapped);
    }
    return t;
}

}  // namespace

std::string render_line_chart(const std::string& title, const std::string& x_label,
                              const std::string& y_label,
                              const std::vector<SvgSeries>& series, int width,
                              int height) {
    if (series.empty()) throw LengthMismatch("line chart: no series");
    double x_lo = std::numeric_limits<double>::infinity(), x_hi = -x_lo;
    double y_lo = x_lo, y_hi = -x_lo;
    for (std::size_t i = 0; i < series.size(); ++i) {
        const auto& s = series[i];
        if (s.x.size() != s.y.size())
            throw LengthMismatch("line chart: series '" + s.label + "' has " +
                                 std::to_string(s.x.size()) + " x values but " +
                                 std::to_string(s.y.size()) + " y values");
        if (s.x.empty())
            throw LengthMismatch("line chart: series '" + s.label + "' is empty");
        for (std::size_t k = 0; k < s.x.size(); ++k) {
            if (!std::isfinite(s.x[k]) || !std::isfinite(s.y[k])) continue;
            x_lo = std::min(x_lo, s.x[k]);
            x_hi = std::max(x_hi, s.x[k]);
            y_lo = std::min(y_lo, s.y[k]);
            y_hi = std::max(y_hi, s.y[k]);
        }
    }
    if (!std::isfinite(x_lo) || !std::isfinite(y_lo))
        throw LengthMismatch("line chart: no finite points");
    if (x_hi - x_lo < 1e-12) { x_lo -= 1.0; x_hi += 1.0; }
    if (y_hi - y_lo < 1e-12) { y_lo -= 1.0; y_hi += 1.0; }
    // Breathing room above and below the data.
    const double y_pad = 0.05 * (y_hi - y_lo);
    y_lo -= y_pad;
    y_hi += y_pad;

    const double ml = 62, mr = 18, mt = 34, mb = 46;
    const double pw = width - ml - mr, ph = height - mt - mb;
    const auto sx = [&](double v) { return ml + (v - x_lo) / (x_hi - x_lo) * pw; };
    const auto sy = [&](double v) { return mt + (y_hi - v) / (y_hi - y_lo) * ph; };

    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
        << "\" height=\"" << height << "\" viewBox=\"0 0 " << width << ' ' << height
        << "\" font-family=\"sans-serif\">\n";
    out << "<rect width=\"" << width << "\" height=\"" << height
        << "\" fill=\"white\"/>\n";
    out << "<text x=\"" << px(ml + pw / 2) << "\" y=\"20\" text-anchor=\"middle\" "
           "font-size=\"14\">"
        << esc(title) << "</text>\n";

    for (double t : ticks_for(y_lo, y_hi)) {
        const double y = sy(t);
        out << "<line x1=\"" << px(ml) << "\" y1=\"" << px(y) << "\" x2=\""
            << px(ml + pw) << "\" y2=\"" << px(y)
            << "\" stroke=\"#e0e0e0\" stroke-width=\"1\"/>\n";
        out << "<text x=\"" << px(ml - 6) << "\" y=\"" << px(y + 4)
            << "\" text-anchor=\"end\" font-size=\"11\">" << num(t) << "</text>\n";
    }
    for (double t : ticks_for(x_lo, x_hi)) {
        const double x = sx(t);
        out << "<line x1=\"" << px(x) << "\" y1=\"" << px(mt + ph) << "\" x2=\""
            << px(x) << "\" y2=\"" << px(mt + ph + 5)
            << "\" stroke=\"#444444\" stroke-width=\"1\"/>\n";
        out << "<text x=\"" << px(x) << "\" y=\"" << px(mt + ph + 18)
            << "\" text-anchor=\"middle\" font-size=\"11\">" << num(t) << "</text>\n";
    }
    out << "<line x1=\"" << px(ml) << "\" y1=\"" << px(mt) << "\" x2=\"" << px(ml)
        << "\" y2=\"" << px(mt + ph) << "\" stroke=\"#444444\" stroke-width=\"1\"/>\n";
    out << "<line x1=\"" << px(ml) << "\" y1=\"" << px(mt + ph) << "\" x2=\""
        << px(ml + pw) << "\" y2=\"" << px(mt + ph)
        << "\" stroke=\"#444444\" stroke-width=\"1\"/>\n";
    out << "<text x=\"" << px(ml + pw / 2) << "\" y=\"" << px(height - 8)
        << "\" text-anchor=\"middle\" font-size=\"12\">" << esc(x_label)
        << "</text>\n";
    out << "<text x=\"16\" y=\"" << px(mt + ph / 2)
        << "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 16 "
        << px(mt + ph / 2) << ")\">" << esc(y_label) << "</text>\n";

    for (std::size_t i = 0; i < series.size(); ++i) {
        const auto& s = series[i];
        const std::string color =
            s.color.empty() ? kPalette[i % kPaletteSize] : s.color;
        out << "<polyline fill=\"none\" stroke=\"" << esc(color)
            << "\" stroke-width=\"1.5\" points=\"";
        bool first = true;
        for (std::size_t k = 0; k < s.x.size(); ++k) {
            if (!std::isfinite(s.x[k]) || !std::isfinite(s.y[k])) continue;
            if (!first) out << ' ';
            out << px(sx(s.x[k])) << ',' << px(sy(s.y[k]));
            first = false;
        }
        out << "\"/>\n";
    }

    double ly = mt + 14;
    for (std::size_t i = 0; i < series.size(); ++i) {
        const auto& s = series[i];
        const std::string color =
            s.color.empty() ? kPalette[i % kPaletteSize] : s.color;
        const double lx = ml + pw - 150;
        out << "<line x1=\"" << px(lx) << "\" y1=\"" << px(ly - 4) << "\" x2=\""
            << px(lx + 24) << "\" y2=\"" << px(ly - 4) << "\" stroke=\"" << esc(color)
            << "\" stroke-width=\"1.5\"/>\n";
        out << "<text x=\"" << px(lx + 30) << "\" y=\"" << px(ly)
            << "\" font-size=\"11\">" << esc(s.label) << "</text>\n";
        ly += 16;
    }
    out << "</svg>\n";
    return out.str();
}

void save_svg(const std::filesystem::path& path, const std::string& svg) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
        out << svg;
        if (!out) throw IoError("failed writing " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw IoError("cannot rename " + tmp.string() + " to " + path.string());
}

}  // namespace spo2cam
