#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "pendusim/cli.hpp"
#include "pendusim/errors.hpp"

namespace pendusim {

namespace {

struct Series {
    std::string label;
    std::vector<double> y;
    bool dashed{false};
};

const char *const kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                               "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

std::string fmt(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", x);
    return buf;
}

/// Axis ticks at 1, 2 or 5 times a power of ten.
std::vector<double> ticks(double lo, double hi) {
    const double span = hi - lo;
    const double raw = span / 5.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double stepv = mag;
    for (double m : {1.0, 2.0, 5.0, 10.0})
        if (m * mag >= raw) {
            stepv = m * mag;
            break;
        }
    std::vector<double> out;
    for (double v = std::ceil(lo / stepv) * stepv; v <= hi + 1e-9 * span; v += stepv)
        out.push_back(std::abs(v) < 1e-12 * span ? 0.0 : v);
    return out;
}

void write_plot(const std::string &path, const std::string &title, const std::string &unit,
                const std::vector<double> &t, const std::vector<Series> &series) {
    const double W = 900, H = 320, left = 70, right = 150, top = 30, bottom = 40;
    const double pw = W - left - right, ph = H - top - bottom;

    double lo = INFINITY, hi = -INFINITY;
    for (const auto &s : series)
        for (double v : s.y)
            if (std::isfinite(v)) {
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
    if (!std::isfinite(lo)) {
        lo = -1.0;
        hi = 1.0;
    }
    const double pad = std::max(0.05 * (hi - lo), 1e-9);
    lo -= pad;
    hi += pad;
    const double t0 = t.empty() ? 0.0 : t.front();
    const double t1 = t.empty() || t.back() <= t0 ? t0 + 1.0 : t.back();
    auto X = [&](double v) { return left + pw * (v - t0) / (t1 - t0); };
    auto Y = [&](double v) { return top + ph * (hi - v) / (hi - lo); };

    std::ofstream out(path);
    if (!out)
        throw InvalidConfig("cannot write '" + path + "'");
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
        << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
        << "<text x=\"" << left << "\" y=\"18\" font-size=\"14\">" << title << "</text>\n";
    for (double v : ticks(lo, hi))
        out << "<line x1=\"" << left << "\" x2=\"" << left + pw << "\" y1=\"" << Y(v) << "\" y2=\""
            << Y(v) << "\" stroke=\"#e5e5e5\"/>\n<text x=\"" << left - 6 << "\" y=\"" << Y(v) + 4
            << "\" text-anchor=\"end\">" << fmt(v) << "</text>\n";
    for (double v : ticks(t0, t1))
        out << "<text x=\"" << X(v) << "\" y=\"" << top + ph + 16 << "\" text-anchor=\"middle\">"
            << fmt(v) << "</text>\n";
    out << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
        << "\" fill=\"none\" stroke=\"black\"/>\n"
        << "<text x=\"" << left + pw / 2 << "\" y=\"" << H - 6
        << "\" text-anchor=\"middle\">t [s]</text>\n"
        << "<text transform=\"translate(16," << top + ph / 2
        << ") rotate(-90)\" text-anchor=\"middle\">" << unit << "</text>\n";

    // thin long runs to about 1500 vertices per line
    const std::size_t stride = std::max<std::size_t>(1, t.size() / 1500);
    for (std::size_t k = 0; k < series.size(); ++k) {
        const auto &s = series[k];
        const char *color = kColors[k % std::size(kColors)];
        out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\"";
        if (s.dashed)
            out << " stroke-dasharray=\"6,4\"";
        out << " points=\"";
        for (std::size_t i = 0; i < t.size(); i += stride)
            if (std::isfinite(s.y[i]))
                out << X(t[i]) << ',' << Y(s.y[i]) << ' ';
        out << "\"/>\n";
        const double ly = top + 14 + 18 * static_cast<double>(k);
        out << "<line x1=\"" << left + pw + 12 << "\" x2=\"" << left + pw + 36 << "\" y1=\"" << ly
            << "\" y2=\"" << ly << "\" stroke=\"" << color << "\" stroke-width=\"2\""
            << (s.dashed ? " stroke-dasharray=\"6,4\"" : "") << "/>\n<text x=\""
            << left + pw + 42 << "\" y=\"" << ly + 4 << "\">" << s.label << "</text>\n";
    }
    out << "</svg>\n";
}

} // namespace

std::vector<std::string> write_svg_plots(const std::string &dir, const Scenario &scenario,
                                         const Trajectory &traj) {
    std::filesystem::create_directories(dir);
    const auto &recs = traj.records;
    std::vector<double> t;
    for (const auto &r : recs)
        t.push_back(r.t);
    auto column = [&](auto get) {
        std::vector<double> y;
        for (const auto &r : recs)
            y.push_back(get(r));
        return y;
    };
    auto constant = [&](double v) { return std::vector<double>(recs.size(), v); };
    const Setpoint &sp = scenario.controller.setpoint;
    const std::string tag = scenario.name + " (" + to_string(scenario.controller.kind) + ")";

    std::vector<Series> outer;
    outer.push_back({"gamma", column([](const Record &r) { return r.q[dof::yaw]; })});
    for (int i = 0; i < traj.link_count; ++i)
        outer.push_back({"q_r" + std::to_string(i + 1),
                         column([&](const Record &r) { return r.q[dof::arm + i]; })});
    outer.push_back({"gamma_des", constant(sp.gamma_des), true});
    for (int i = 0; i < traj.link_count && i < sp.q_r_des.size(); ++i)
        outer.push_back({"q_r" + std::to_string(i + 1) + "_des", constant(sp.q_r_des[i]), true});

    const std::vector<Series> com = {
        {"x_c,x", column([](const Record &r) { return r.xc[0]; })},
        {"x_c,y", column([](const Record &r) { return r.xc[1]; })}};
    const std::vector<Series> movers = {
        {"q_m1", column([](const Record &r) { return r.q[dof::mover1]; })},
        {"q_m2", column([](const Record &r) { return r.q[dof::mover2]; })},
        {"q_m1*", constant(sp.q_m_star[0]), true},
        {"q_m2*", constant(sp.q_m_star[1]), true}};
    const std::vector<Series> attitude = {
        {"roll", column([](const Record &r) { return r.q[dof::roll]; })},
        {"pitch", column([](const Record &r) { return r.q[dof::pitch]; })}};

    const std::filesystem::path d(dir);
    write_plot((d / "q_r_gamma.svg").string(), tag + ": joints and yaw", "rad", t, outer);
    write_plot((d / "x_c.svg").string(), tag + ": center of mass", "m", t, com);
    write_plot((d / "q_m.svg").string(), tag + ": moving masses", "m", t, movers);
    write_plot((d / "phi.svg").string(), tag + ": platform attitude", "rad", t, attitude);
    return {"q_r_gamma.svg", "x_c.svg", "q_m.svg", "phi.svg"};
}

} // namespace pendusim
