#include "rcov/plots.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "rcov/error.hpp"

namespace rcov {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 480.0;
constexpr double kPad = 50.0;

const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                          "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

const char* color(int i) { return kPalette[static_cast<std::size_t>(i) % std::size(kPalette)]; }

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

// Maps data coordinates to the plot area (y up).
struct Frame {
  double x0, x1, y0, y1;

  double px(double x) const { return kPad + (x - x0) / (x1 - x0) * (kWidth - 2 * kPad); }
  double py(double y) const { return kHeight - kPad - (y - y0) / (y1 - y0) * (kHeight - 2 * kPad); }
};

class Svg {
 public:
  Svg() {
    out_ << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
         << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
         << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n"
         << "<rect x=\"0\" y=\"0\" width=\"" << kWidth << "\" height=\"" << kHeight << "\" fill=\"white\"/>\n";
  }
  void raw(const std::string& s) { out_ << s << '\n'; }
  void text(double x, double y, const std::string& s, const char* anchor = "middle") {
    out_ << "<text x=\"" << num(x) << "\" y=\"" << num(y) << "\" font-family=\"sans-serif\" font-size=\"12\" "
         << "text-anchor=\"" << anchor << "\">" << s << "</text>\n";
  }
  void line(double x1, double y1, double x2, double y2, const char* stroke, const char* extra = "") {
    out_ << "<line x1=\"" << num(x1) << "\" y1=\"" << num(y1) << "\" x2=\"" << num(x2) << "\" y2=\"" << num(y2)
         << "\" stroke=\"" << stroke << "\" " << extra << "/>\n";
  }
  void polyline(const std::vector<std::pair<double, double>>& pts, const char* stroke, bool closed = false,
                const char* fill = "none") {
    if (pts.empty()) return;
    out_ << '<' << (closed ? "polygon" : "polyline") << " points=\"";
    for (const auto& [x, y] : pts) out_ << num(x) << ',' << num(y) << ' ';
    out_ << "\" fill=\"" << fill << "\" stroke=\"" << stroke << "\" stroke-width=\"1.2\"/>\n";
  }
  void axes(const Frame& f, const std::string& xlabel, const std::string& ylabel, bool integer_x = false) {
    line(kPad, kHeight - kPad, kWidth - kPad, kHeight - kPad, "black");
    line(kPad, kPad, kPad, kHeight - kPad, "black");
    text(kWidth / 2, kHeight - 12, xlabel);
    out_ << "<text x=\"14\" y=\"" << kHeight / 2 << "\" font-family=\"sans-serif\" font-size=\"12\" "
         << "text-anchor=\"middle\" transform=\"rotate(-90 14 " << kHeight / 2 << ")\">" << ylabel << "</text>\n";
    for (int t = 0; t <= 4; ++t) {
      const double xv = f.x0 + (f.x1 - f.x0) * t / 4.0, yv = f.y0 + (f.y1 - f.y0) * t / 4.0;
      text(f.px(xv), kHeight - kPad + 16, integer_x ? std::to_string(static_cast<long>(std::lround(xv))) : num(xv));
      text(kPad - 6, f.py(yv) + 4, num(yv), "end");
    }
  }
  void save(const std::filesystem::path& path) {
    out_ << "</svg>\n";
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error(ErrorKind::InvalidArgument, "cannot write " + path.string());
    f << out_.str();
  }

 private:
  std::ostringstream out_;
};

Frame padded(double x0, double x1, double y0, double y1) {
  if (x1 - x0 < 1e-9) x1 = x0 + 1.0;
  if (y1 - y0 < 1e-9) y1 = y0 + 1.0;
  return Frame{x0, x1, y0, y1};
}

void trajectory_plot(const std::map<int, std::vector<const TraceRecord*>>& by_robot, const PlotOptions& o,
                     const std::optional<Vec2>& base, const std::filesystem::path& path) {
  double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
  auto grow = [&](const Vec2& p) {
    x0 = std::min(x0, p.x());
    x1 = std::max(x1, p.x());
    y0 = std::min(y0, p.y());
    y1 = std::max(y1, p.y());
  };
  for (const auto& [id, rows] : by_robot)
    for (const TraceRecord* t : rows) grow(t->position);
  for (const VoronoiCell& c : o.final_cells)
    for (const Vec2& v : c.polygon) grow(v);
  // Equal aspect: widen the shorter side.
  const double span = std::max(x1 - x0, y1 - y0);
  const Frame f = padded(x0, x0 + span, y0, y0 + span);

  Svg svg;
  svg.text(kWidth / 2, 20, "Trajectories and final Voronoi cells");
  svg.axes(f, "x [m]", "y [m]");
  for (const VoronoiCell& c : o.final_cells) {
    std::vector<std::pair<double, double>> pts;
    for (const Vec2& v : c.polygon) pts.emplace_back(f.px(v.x()), f.py(v.y()));
    svg.polyline(pts, "#999999", true, "#f4f4f4");
  }
  for (const auto& [id, rows] : by_robot) {
    std::vector<std::pair<double, double>> pts;
    for (const TraceRecord* t : rows) pts.emplace_back(f.px(t->position.x()), f.py(t->position.y()));
    svg.polyline(pts, color(id));
    const Vec2 end = rows.back()->position;
    svg.raw("<circle cx=\"" + num(f.px(end.x())) + "\" cy=\"" + num(f.py(end.y())) + "\" r=\"4\" fill=\"" +
            color(id) + "\"/>");
  }
  if (base) {
    const double r = o.base_radius / (f.x1 - f.x0) * (kWidth - 2 * kPad);
    svg.raw("<circle cx=\"" + num(f.px(base->x())) + "\" cy=\"" + num(f.py(base->y())) + "\" r=\"" + num(r) +
            "\" fill=\"none\" stroke=\"black\" stroke-width=\"2\"/>");
    svg.text(f.px(base->x()), f.py(base->y()) - r - 4, "base");
  }
  svg.save(path);
}

void soc_plot(const std::map<int, std::vector<const TraceRecord*>>& by_robot, const std::vector<Event>& events,
              int k_max, const std::filesystem::path& path) {
  const Frame f = padded(0.0, std::max(1, k_max), 0.0, 1.0);
  Svg svg;
  svg.text(kWidth / 2, 20, "State of charge");
  const double bands[] = {0.0, 0.25, 0.5, 0.75, 1.0};
  const char* shades[] = {"#fde0dd", "#fdf2d0", "#e5f5e0", "#d6eaf8"};
  for (int b = 0; b < 4; ++b) {
    const double top = f.py(bands[b + 1]), bottom = f.py(bands[b]);
    svg.raw("<rect x=\"" + num(kPad) + "\" y=\"" + num(top) + "\" width=\"" + num(kWidth - 2 * kPad) + "\" height=\"" +
            num(bottom - top) + "\" fill=\"" + shades[b] + "\"/>");
  }
  svg.axes(f, "step k", "SOC", true);
  for (const Event& e : events)
    if (e.kind == EventKind::Departure)
      svg.line(f.px(e.k), f.py(0.0), f.px(e.k), f.py(1.0), "#555555", "stroke-dasharray=\"4 3\" class=\"departure\"");
  for (const auto& [id, rows] : by_robot) {
    std::vector<std::pair<double, double>> pts;
    for (const TraceRecord* t : rows) pts.emplace_back(f.px(t->k), f.py(std::clamp(t->soc, 0.0, 1.0)));
    svg.polyline(pts, color(id));
  }
  svg.save(path);
}

void cost_plot(const std::vector<TraceRecord>& traces, const std::filesystem::path& path) {
  std::map<int, double> cost;
  for (const TraceRecord& t : traces)
    if (t.cell_cost) cost[t.k] += *t.cell_cost;
  double y1 = 0.0;
  int k1 = 1;
  for (const auto& [k, c] : cost) {
    y1 = std::max(y1, c);
    k1 = std::max(k1, k);
  }
  const Frame f = padded(0.0, k1, 0.0, y1 > 0.0 ? 1.05 * y1 : 1.0);
  Svg svg;
  svg.text(kWidth / 2, 20, "Coverage cost");
  svg.axes(f, "step k", "cost [m^4]", true);
  std::vector<std::pair<double, double>> pts;
  for (const auto& [k, c] : cost) pts.emplace_back(f.px(k), f.py(c));
  svg.polyline(pts, "#1f77b4");
  svg.save(path);
}

}  // namespace

std::vector<std::filesystem::path> render_plots(const std::vector<TraceRecord>& traces,
                                                const std::vector<Event>& events,
                                                const std::filesystem::path& outdir, const PlotOptions& options) {
  if (traces.empty()) throw Error(ErrorKind::InvalidArgument, "cannot plot an empty trace");
  std::filesystem::create_directories(outdir);
  std::map<int, std::vector<const TraceRecord*>> by_robot;
  int k_max = 0;
  Vec2 charge_sum = Vec2::Zero();
  int charge_rows = 0;
  for (const TraceRecord& t : traces) {
    by_robot[t.robot].push_back(&t);
    k_max = std::max(k_max, t.k);
    if (t.mode == Mode::Recharge) {
      charge_sum += t.position;
      ++charge_rows;
    }
  }
  std::optional<Vec2> base = options.base;
  if (!base && charge_rows > 0) base = charge_sum / charge_rows;

  const std::vector<std::filesystem::path> paths{outdir / "trajectory.svg", outdir / "soc.svg",
                                                 outdir / "coverage_cost.svg"};
  trajectory_plot(by_robot, options, base, paths[0]);
  soc_plot(by_robot, events, k_max, paths[1]);
  cost_plot(traces, paths[2]);
  return paths;
}

}  // namespace rcov
