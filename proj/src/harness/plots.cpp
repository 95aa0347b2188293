#include "marlsig/harness/plots.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include <fmt/format.h>

#include "marlsig/harness/stats.hpp"

namespace marlsig::harness {

namespace {

constexpr double kWidth = 720.0;
constexpr double kHeight = 420.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 20.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 70.0;

const char* const kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

std::string escape(const std::string& s) {
  std::string out;
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

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();

  void add(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void finish() {
    if (!std::isfinite(lo)) {
      lo = 0.0;
      hi = 1.0;
    }
    if (hi - lo < 1e-12) {
      lo -= 0.5;
      hi += 0.5;
    }
  }
};

class Canvas {
 public:
  Canvas(const std::string& title, const std::string& xlabel, const std::string& ylabel, Range y) : y_(y) {
    out_ += fmt::format(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0:.0f}\" height=\"{1:.0f}\" viewBox=\"0 0 {0:.0f} {1:.0f}\" "
        "font-family=\"sans-serif\" font-size=\"12\">\n",
        kWidth, kHeight);
    out_ += fmt::format("<rect width=\"{:.0f}\" height=\"{:.0f}\" fill=\"white\"/>\n", kWidth, kHeight);
    out_ += fmt::format("<text x=\"{:.1f}\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">{}</text>\n", kWidth / 2,
                        escape(title));
    out_ += fmt::format(
        "<line x1=\"{0:.1f}\" y1=\"{1:.1f}\" x2=\"{0:.1f}\" y2=\"{2:.1f}\" stroke=\"black\"/>\n"
        "<line x1=\"{0:.1f}\" y1=\"{2:.1f}\" x2=\"{3:.1f}\" y2=\"{2:.1f}\" stroke=\"black\"/>\n",
        kLeft, kTop, kHeight - kBottom, kWidth - kRight);
    for (int k = 0; k <= 4; ++k) {
      const double v = y_.lo + (y_.hi - y_.lo) * k / 4.0;
      const double py = py_of(v);
      out_ += fmt::format(
          "<line x1=\"{0:.1f}\" y1=\"{1:.1f}\" x2=\"{2:.1f}\" y2=\"{1:.1f}\" stroke=\"#dddddd\"/>\n"
          "<text x=\"{3:.1f}\" y=\"{4:.1f}\" text-anchor=\"end\">{5}</text>\n",
          kLeft, py, kWidth - kRight, kLeft - 6, py + 4, fmt::format("{:.4g}", v));
    }
    out_ += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"middle\">{}</text>\n",
                        kLeft + (kWidth - kLeft - kRight) / 2, kHeight - 12, escape(xlabel));
    out_ += fmt::format(
        "<text x=\"16\" y=\"{0:.1f}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {0:.1f})\">{1}</text>\n",
        kTop + (kHeight - kTop - kBottom) / 2, escape(ylabel));
  }

  double py_of(double v) const {
    return kTop + (kHeight - kTop - kBottom) * (1.0 - (v - y_.lo) / (y_.hi - y_.lo));
  }

  void add(const std::string& s) { out_ += s; }

  std::string finish() {
    out_ += "</svg>\n";
    return out_;
  }

 private:
  Range y_;
  std::string out_;
};

double plot_width() { return kWidth - kLeft - kRight; }

}  // namespace

std::string svg_line_plot(const std::string& title, const std::string& xlabel, const std::string& ylabel,
                          const std::vector<Series>& series) {
  Range xr, yr;
  for (const auto& s : series) {
    for (double x : s.x) xr.add(x);
    for (double y : s.y) yr.add(y);
  }
  xr.finish();
  yr.finish();
  Canvas c(title, xlabel, ylabel, yr);
  auto px = [&](double x) { return kLeft + plot_width() * (x - xr.lo) / (xr.hi - xr.lo); };
  for (int k = 0; k <= 4; ++k) {
    const double v = xr.lo + (xr.hi - xr.lo) * k / 4.0;
    c.add(fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"middle\">{}</text>\n", px(v),
                      kHeight - kBottom + 16, fmt::format("{:.4g}", v)));
  }
  for (std::size_t s = 0; s < series.size(); ++s) {
    const auto& ser = series[s];
    const char* color = kPalette[s % std::size(kPalette)];
    std::string points;
    for (std::size_t k = 0; k < std::min(ser.x.size(), ser.y.size()); ++k) {
      if (!std::isfinite(ser.y[k])) continue;
      points += fmt::format("{:.1f},{:.1f} ", px(ser.x[k]), c.py_of(ser.y[k]));
    }
    if (!points.empty()) points.pop_back();
    c.add(fmt::format("<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\" points=\"{}\"/>\n", color, points));
    c.add(fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" fill=\"{}\">{}</text>\n", kLeft + 10, kTop + 14 + 14 * s, color,
                      escape(ser.label)));
  }
  return c.finish();
}

std::string svg_box_plot(const std::string& title, const std::string& ylabel, const std::vector<BoxGroup>& groups) {
  Range yr;
  for (const auto& g : groups)
    for (double v : g.values) yr.add(v);
  yr.finish();
  Canvas c(title, "", ylabel, yr);
  const double slot = groups.empty() ? plot_width() : plot_width() / static_cast<double>(groups.size());
  for (std::size_t k = 0; k < groups.size(); ++k) {
    const auto& g = groups[k];
    const double cx = kLeft + slot * (static_cast<double>(k) + 0.5);
    c.add(fmt::format("<text x=\"{0:.1f}\" y=\"{1:.1f}\" text-anchor=\"end\" transform=\"rotate(-30 {0:.1f} {1:.1f})\">{2}</text>\n",
                      cx, kHeight - kBottom + 16, escape(g.label)));
    if (g.values.empty()) continue;
    const Summary s = summarize(g.values);
    const double half = std::min(20.0, slot * 0.3);
    c.add(fmt::format("<line x1=\"{0:.1f}\" y1=\"{1:.1f}\" x2=\"{0:.1f}\" y2=\"{2:.1f}\" stroke=\"black\"/>\n", cx,
                      c.py_of(s.max), c.py_of(s.q3)));
    c.add(fmt::format("<line x1=\"{0:.1f}\" y1=\"{1:.1f}\" x2=\"{0:.1f}\" y2=\"{2:.1f}\" stroke=\"black\"/>\n", cx,
                      c.py_of(s.q1), c.py_of(s.min)));
    c.add(fmt::format(
        "<rect x=\"{:.1f}\" y=\"{:.1f}\" width=\"{:.1f}\" height=\"{:.1f}\" fill=\"#9ecae1\" stroke=\"black\"/>\n",
        cx - half, c.py_of(s.q3), 2 * half, std::max(0.0, c.py_of(s.q1) - c.py_of(s.q3))));
    c.add(fmt::format("<line x1=\"{0:.1f}\" y1=\"{2:.1f}\" x2=\"{1:.1f}\" y2=\"{2:.1f}\" stroke=\"black\" stroke-width=\"2\"/>\n",
                      cx - half, cx + half, c.py_of(s.median)));
    c.add(fmt::format("<rect class=\"mean\" x=\"{:.1f}\" y=\"{:.1f}\" width=\"6\" height=\"6\" fill=\"red\"/>\n", cx - 3,
                      c.py_of(s.mean) - 3));
  }
  return c.finish();
}

std::string svg_bar_chart(const std::string& title, const std::string& ylabel,
                          const std::vector<std::string>& series_labels, const std::vector<BarCategory>& categories) {
  Range yr;
  yr.add(0.0);
  for (const auto& cat : categories)
    for (double v : cat.values) yr.add(v);
  yr.finish();
  Canvas c(title, "", ylabel, yr);
  const double slot = categories.empty() ? plot_width() : plot_width() / static_cast<double>(categories.size());
  const std::size_t n = std::max<std::size_t>(1, series_labels.size());
  const double bar = slot * 0.7 / static_cast<double>(n);
  for (std::size_t k = 0; k < categories.size(); ++k) {
    const auto& cat = categories[k];
    const double x0 = kLeft + slot * static_cast<double>(k) + slot * 0.15;
    c.add(fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"middle\">{}</text>\n", x0 + slot * 0.35,
                      kHeight - kBottom + 16, escape(cat.label)));
    for (std::size_t s = 0; s < cat.values.size(); ++s) {
      const double v = cat.values[s];
      if (!std::isfinite(v)) continue;
      const double top = c.py_of(std::max(v, 0.0));
      const double base = c.py_of(std::min(v, 0.0));
      c.add(fmt::format("<rect x=\"{:.1f}\" y=\"{:.1f}\" width=\"{:.1f}\" height=\"{:.1f}\" fill=\"{}\"/>\n",
                        x0 + bar * static_cast<double>(s), top, bar * 0.95, base - top,
                        kPalette[s % std::size(kPalette)]));
    }
  }
  for (std::size_t s = 0; s < series_labels.size(); ++s)
    c.add(fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" fill=\"{}\">{}</text>\n", kLeft + 10, kTop + 14 + 14 * s,
                      kPalette[s % std::size(kPalette)], escape(series_labels[s])));
  return c.finish();
}

std::map<std::string, std::string> emit_plots(const std::vector<MetricRow>& rows) {
  std::map<std::string, std::string> files;
  std::set<std::string> labels;
  std::set<std::string> movements;
  std::set<std::string> side_movements;
  for (const auto& r : rows) {
    labels.insert(label_of(r.run_id));
    if (r.kind == "veh_delay") movements.insert(r.section);
    if (r.kind == "side_delay") side_movements.insert(r.section);
  }

  auto boxes = [&](const std::string& kind, const std::set<std::string>& sections) {
    std::vector<BoxGroup> groups;
    for (const auto& sec : sections)
      for (const auto& label : labels) {
        BoxGroup g{sec + " " + label, {}};
        for (const auto& r : rows)
          if (r.kind == kind && r.section == sec && label_of(r.run_id) == label) g.values.push_back(r.value);
        groups.push_back(std::move(g));
      }
    return groups;
  };
  files["vehicle_delay_box.svg"] = svg_box_plot("Vehicle delay by movement", "delay (s)", boxes("veh_delay", movements));
  files["side_street_delay_box.svg"] =
      svg_box_plot("Side-street delay within 300 s of bus check-in", "delay (s)", boxes("side_delay", side_movements));

  std::vector<std::string> series(labels.begin(), labels.end());
  std::vector<BarCategory> cats;
  for (const char* sec : {"Inter A_EB", "Inter B_EB", "Inter A&B_EB"}) {
    BarCategory cat{sec, {}};
    for (const auto& label : series) {
      std::vector<double> v;
      for (const auto& r : rows)
        if (r.kind == "bus_travel" && r.section == sec && label_of(r.run_id) == label) v.push_back(r.value);
      cat.values.push_back(v.empty() ? std::numeric_limits<double>::quiet_NaN() : mean(v));
    }
    cats.push_back(std::move(cat));
  }
  files["bus_travel_bars.svg"] = svg_bar_chart("Mean bus travel time by section", "travel time (s)", series, cats);
  return files;
}

}  // namespace marlsig::harness
