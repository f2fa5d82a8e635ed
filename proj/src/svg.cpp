#include "mcqeval/svg.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "mcqeval/text.hpp"

namespace mcqeval {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 420.0;
constexpr double kMarginLeft = 64.0;
constexpr double kMarginRight = 20.0;
constexpr double kMarginTop = 20.0;
constexpr double kMarginBottom = 52.0;

struct Axis {
    double lo = 0.0;
    double hi = 1.0;

    double scale(double v, double pix_lo, double pix_hi) const {
        if (hi == lo) return (pix_lo + pix_hi) / 2.0;
        return pix_lo + (v - lo) / (hi - lo) * (pix_hi - pix_lo);
    }
};

Axis padded_axis(double lo, double hi) {
    if (lo > hi) std::swap(lo, hi);
    double pad = (hi - lo) * 0.05;
    if (pad == 0.0) pad = std::max(1.0, std::abs(lo) * 0.05);
    return {lo - pad, hi + pad};
}

std::string num(double v) {
    return format_double(v);
}

void open_svg(std::ostream& out) {
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(kWidth)
        << "\" height=\"" << num(kHeight) << "\" viewBox=\"0 0 " << num(kWidth) << " "
        << num(kHeight) << "\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
}

void axes_frame(std::ostream& out, const char* x_label, const char* y_label) {
    const double x0 = kMarginLeft, x1 = kWidth - kMarginRight;
    const double y0 = kHeight - kMarginBottom, y1 = kMarginTop;
    out << "<line x1=\"" << num(x0) << "\" y1=\"" << num(y0) << "\" x2=\"" << num(x1)
        << "\" y2=\"" << num(y0) << "\" stroke=\"black\"/>\n"
        << "<line x1=\"" << num(x0) << "\" y1=\"" << num(y0) << "\" x2=\"" << num(x0)
        << "\" y2=\"" << num(y1) << "\" stroke=\"black\"/>\n"
        << "<text x=\"" << num((x0 + x1) / 2) << "\" y=\"" << num(kHeight - 12)
        << "\" text-anchor=\"middle\" font-size=\"13\">" << x_label << "</text>\n"
        << "<text x=\"16\" y=\"" << num((y0 + y1) / 2)
        << "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 16 "
        << num((y0 + y1) / 2) << ")\">" << y_label << "</text>\n";
}

void tick_labels(std::ostream& out, const Axis& axis, bool vertical) {
    const double x0 = kMarginLeft, x1 = kWidth - kMarginRight;
    const double y0 = kHeight - kMarginBottom, y1 = kMarginTop;
    const int ticks = 5;
    for (int i = 0; i <= ticks; ++i) {
        const double v = axis.lo + (axis.hi - axis.lo) * i / ticks;
        const double rounded = std::round(v * 100.0) / 100.0;
        if (vertical) {
            const double y = axis.scale(v, y0, y1);
            out << "<line x1=\"" << num(x0 - 4) << "\" y1=\"" << num(y) << "\" x2=\""
                << num(x0) << "\" y2=\"" << num(y) << "\" stroke=\"black\"/>\n"
                << "<text x=\"" << num(x0 - 8) << "\" y=\"" << num(y + 4)
                << "\" text-anchor=\"end\" font-size=\"11\">" << num(rounded) << "</text>\n";
        } else {
            const double x = axis.scale(v, x0, x1);
            out << "<line x1=\"" << num(x) << "\" y1=\"" << num(y0) << "\" x2=\"" << num(x)
                << "\" y2=\"" << num(y0 + 4) << "\" stroke=\"black\"/>\n"
                << "<text x=\"" << num(x) << "\" y=\"" << num(y0 + 18)
                << "\" text-anchor=\"middle\" font-size=\"11\">" << num(rounded)
                << "</text>\n";
        }
    }
}

void hline(std::ostream& out, const Axis& y_axis, double value, const char* dash,
           const char* color) {
    const double x0 = kMarginLeft, x1 = kWidth - kMarginRight;
    const double y0 = kHeight - kMarginBottom, y1 = kMarginTop;
    const double y = y_axis.scale(value, y0, y1);
    out << "<line x1=\"" << num(x0) << "\" y1=\"" << num(y) << "\" x2=\"" << num(x1)
        << "\" y2=\"" << num(y) << "\" stroke=\"" << color << "\" stroke-dasharray=\"" << dash
        << "\"/>\n";
}

} // namespace

void write_bland_altman_svg(std::ostream& out, const std::vector<LengthBiasPoint>& points,
                            const BiasSummary& all, const std::optional<BiasSummary>& errors) {
    double x_lo = 0.0, x_hi = 1.0, y_lo = 0.0, y_hi = 1.0;
    if (!points.empty()) {
        x_lo = x_hi = points.front().mean_len;
        y_lo = y_hi = points.front().diff;
        for (const auto& p : points) {
            x_lo = std::min(x_lo, p.mean_len);
            x_hi = std::max(x_hi, p.mean_len);
            y_lo = std::min(y_lo, p.diff);
            y_hi = std::max(y_hi, p.diff);
        }
    }
    y_lo = std::min(y_lo, all.loa_low);
    y_hi = std::max(y_hi, all.loa_high);
    const Axis x_axis = padded_axis(x_lo, x_hi);
    const Axis y_axis = padded_axis(y_lo, y_hi);
    const double px0 = kMarginLeft, px1 = kWidth - kMarginRight;
    const double py0 = kHeight - kMarginBottom, py1 = kMarginTop;

    open_svg(out);
    axes_frame(out, "mean of correct and median wrong option length (chars)",
               "correct minus median wrong length (chars)");
    tick_labels(out, x_axis, false);
    tick_labels(out, y_axis, true);
    hline(out, y_axis, all.mean_diff, "", "black");
    hline(out, y_axis, all.loa_low, "6 4", "black");
    hline(out, y_axis, all.loa_high, "6 4", "black");
    if (errors) hline(out, y_axis, errors->mean_diff, "2 3", "red");

    // black beneath red so the error overlay stays visible
    for (const auto& p : points) {
        if (p.in_error_set) continue;
        out << "<circle cx=\"" << num(x_axis.scale(p.mean_len, px0, px1)) << "\" cy=\""
            << num(y_axis.scale(p.diff, py0, py1)) << "\" r=\"2.2\" fill=\"black\"/>\n";
    }
    for (const auto& p : points) {
        if (!p.in_error_set) continue;
        out << "<circle cx=\"" << num(x_axis.scale(p.mean_len, px0, px1)) << "\" cy=\""
            << num(y_axis.scale(p.diff, py0, py1)) << "\" r=\"2.2\" fill=\"red\"/>\n";
    }
    out << "</svg>\n";
}

void write_histogram_svg(std::ostream& out, const std::vector<HistogramBin>& all_bins,
                         const std::vector<HistogramBin>& error_bins, double bin_width) {
    double x_lo = 0.0, x_hi = bin_width;
    std::size_t max_count = 1;
    if (!all_bins.empty()) {
        x_lo = all_bins.front().bin_low;
        x_hi = all_bins.back().bin_low + bin_width;
        for (const auto& b : all_bins) max_count = std::max(max_count, b.count);
    }
    const Axis x_axis = padded_axis(x_lo, x_hi);
    const Axis y_axis{0.0, static_cast<double>(max_count) * 1.05};
    const double px0 = kMarginLeft, px1 = kWidth - kMarginRight;
    const double py0 = kHeight - kMarginBottom, py1 = kMarginTop;

    open_svg(out);
    axes_frame(out, "correct minus median wrong length (chars)", "count");
    tick_labels(out, x_axis, false);
    tick_labels(out, y_axis, true);

    const auto bar = [&](const HistogramBin& b, const char* fill, const char* opacity) {
        const double x = x_axis.scale(b.bin_low, px0, px1);
        const double w = x_axis.scale(b.bin_low + bin_width, px0, px1) - x;
        const double y = y_axis.scale(static_cast<double>(b.count), py0, py1);
        out << "<rect x=\"" << num(x) << "\" y=\"" << num(y) << "\" width=\"" << num(w)
            << "\" height=\"" << num(py0 - y) << "\" fill=\"" << fill << "\" fill-opacity=\""
            << opacity << "\" stroke=\"" << fill << "\"/>\n";
    };
    for (const auto& b : all_bins) bar(b, "black", "0.55");
    for (const auto& b : error_bins) bar(b, "red", "0.65");
    out << "</svg>\n";
}

} // namespace mcqeval
