#pragma once

// CSV tables and SVG charts for surrogate reports.
//
// Every chart is drawn from a Table, and the same Table is what gets
// written as CSV. Numbers are stored with shortest round-trip formatting,
// so reading the CSV back reproduces the SVG byte for byte.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "armlab/analysis.hpp"
#include "armlab/errors.hpp"
#include "armlab/orchestrator.hpp"

namespace armlab {

inline std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline double parse_number(std::string_view s) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw IntegrityError("not a number: '" + std::string(s) + "'");
  }
  return v;
}

/// A rectangular string table with CSV (RFC 4180 quoting) I/O.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return i;
    }
    throw IntegrityError("missing column '" + std::string(name) + "'");
  }

  const std::string& cell(std::size_t row, std::string_view col) const {
    return rows.at(row).at(column(col));
  }
  double number(std::size_t row, std::string_view col) const { return parse_number(cell(row, col)); }

  std::string to_csv() const {
    auto quote = [](const std::string& s) {
      if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
      std::string q = "\"";
      for (char c : s) {
        if (c == '"') q += '"';
        q += c;
      }
      return q + "\"";
    };
    std::string out;
    auto emit = [&](const std::vector<std::string>& row) {
      for (std::size_t i = 0; i < row.size(); ++i) {
        if (i) out += ',';
        out += quote(row[i]);
      }
      out += '\n';
    };
    emit(header);
    for (const auto& r : rows) emit(r);
    return out;
  }

  static Table from_csv(std::string_view text) {
    std::vector<std::vector<std::string>> lines;
    std::vector<std::string> row;
    std::string field;
    bool quoted = false, any = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
      const char c = text[i];
      if (quoted) {
        if (c == '"' && i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else if (c == '"') {
          quoted = false;
        } else {
          field += c;
        }
      } else if (c == '"') {
        quoted = true;
        any = true;
      } else if (c == ',') {
        row.push_back(std::move(field));
        field.clear();
        any = true;
      } else if (c == '\n' || c == '\r') {
        if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
        if (any || !field.empty()) {
          row.push_back(std::move(field));
          lines.push_back(std::move(row));
        }
        row.clear();
        field.clear();
        any = false;
      } else {
        field += c;
        any = true;
      }
    }
    if (quoted) throw IntegrityError("unterminated quote in CSV");
    if (any || !field.empty()) {
      row.push_back(std::move(field));
      lines.push_back(std::move(row));
    }
    if (lines.empty()) throw IntegrityError("empty CSV");
    Table t;
    t.header = std::move(lines.front());
    for (std::size_t i = 1; i < lines.size(); ++i) {
      if (lines[i].size() != t.header.size()) throw IntegrityError("ragged CSV row");
      t.rows.push_back(std::move(lines[i]));
    }
    return t;
  }

  bool operator==(const Table&) const = default;
};

// ---------------------------------------------------------------------------
// Summary rows (the analysis CSV)

/// One line of the analysis CSV.
struct SummaryRow {
  std::string config;
  std::size_t num_arms = 0;
  std::size_t horizon = 0;
  std::size_t replicates = 0;
  std::size_t fails = 0;
  double sufffail_half = 0.0;
  double k_minfrac_T = 0.0;
  double medrew = 0.0;
  double greedyfrac = 0.0;
};

inline SummaryRow summary_row(const SurrogateReport& r) {
  return {r.config,        r.num_arms,      r.horizon, r.replicates, r.fails,
          r.sufffail_half(), r.k_minfrac_T(), r.medrew,  r.greedyfrac};
}

inline const std::vector<std::string>& analysis_columns() {
  static const std::vector<std::string> cols = {"config", "K",      "T",     "N",         "fails",
                                                "sufffail_half", "k_minfrac_T", "medrew", "greedyfrac"};
  return cols;
}

inline Table analysis_table(const std::vector<SummaryRow>& rows) {
  Table t{analysis_columns(), {}};
  for (const auto& r : rows) {
    t.rows.push_back({r.config, std::to_string(r.num_arms), std::to_string(r.horizon),
                      std::to_string(r.replicates), std::to_string(r.fails),
                      format_number(r.sufffail_half), format_number(r.k_minfrac_T),
                      format_number(r.medrew), format_number(r.greedyfrac)});
  }
  return t;
}

inline std::vector<SummaryRow> summary_rows(const Table& t) {
  std::vector<SummaryRow> out;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    SummaryRow r;
    r.config = t.cell(i, "config");
    r.num_arms = static_cast<std::size_t>(t.number(i, "K"));
    r.horizon = static_cast<std::size_t>(t.number(i, "T"));
    r.replicates = static_cast<std::size_t>(t.number(i, "N"));
    r.fails = static_cast<std::size_t>(t.number(i, "fails"));
    r.sufffail_half = t.number(i, "sufffail_half");
    r.k_minfrac_T = t.number(i, "k_minfrac_T");
    r.medrew = t.number(i, "medrew");
    r.greedyfrac = t.number(i, "greedyfrac");
    out.push_back(std::move(r));
  }
  return out;
}

// ---------------------------------------------------------------------------
// SVG primitives

namespace svg {

inline std::string escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&':
        out += "&amp;";
        break;
      case '<':
        out += "&lt;";
        break;
      case '>':
        out += "&gt;";
        break;
      case '"':
        out += "&quot;";
        break;
      default:
        out += c;
    }
  }
  return out;
}

inline std::string px(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

inline const char* color(std::size_t i) {
  static const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                   "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
  return kPalette[i % 10];
}

/// Plot area with linear axes; callers add marks in data coordinates.
class Frame {
 public:
  Frame(std::string title, std::string xlabel, std::string ylabel, double xmin, double xmax,
        double ymin, double ymax, double width = 640, double height = 440)
      : title_(std::move(title)), xlabel_(std::move(xlabel)), ylabel_(std::move(ylabel)),
        xmin_(xmin), xmax_(xmax == xmin ? xmin + 1 : xmax), ymin_(ymin),
        ymax_(ymax == ymin ? ymin + 1 : ymax), w_(width), h_(height) {}

  double x(double v) const { return kLeft + (v - xmin_) / (xmax_ - xmin_) * (w_ - kLeft - kRight); }
  double y(double v) const { return h_ - kBottom - (v - ymin_) / (ymax_ - ymin_) * (h_ - kTop - kBottom); }

  void polyline(const std::vector<std::pair<double, double>>& pts, const std::string& stroke,
                double width = 1.5, double opacity = 1.0) {
    if (pts.empty()) return;
    body_ += "<polyline fill=\"none\" stroke=\"" + stroke + "\" stroke-width=\"" + px(width) + "\"";
    if (opacity < 1.0) body_ += " stroke-opacity=\"" + px(opacity) + "\"";
    body_ += " points=\"";
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (i) body_ += ' ';
      body_ += px(x(pts[i].first)) + "," + px(y(pts[i].second));
    }
    body_ += "\"/>\n";
  }

  void circle(double vx, double vy, const std::string& fill, double r = 4) {
    body_ += "<circle cx=\"" + px(x(vx)) + "\" cy=\"" + px(y(vy)) + "\" r=\"" + px(r) +
             "\" fill=\"" + fill + "\"/>\n";
  }

  void square(double vx, double vy, const std::string& fill, double side = 9) {
    body_ += "<rect x=\"" + px(x(vx) - side / 2) + "\" y=\"" + px(y(vy) - side / 2) +
             "\" width=\"" + px(side) + "\" height=\"" + px(side) + "\" fill=\"" + fill + "\"/>\n";
  }

  /// Axis-aligned box between two data-space corners.
  void box(double x0, double y0, double x1, double y1, const std::string& fill) {
    const double left = std::min(x(x0), x(x1)), right = std::max(x(x0), x(x1));
    const double top = std::min(y(y0), y(y1)), bottom = std::max(y(y0), y(y1));
    body_ += "<rect x=\"" + px(left) + "\" y=\"" + px(top) + "\" width=\"" + px(right - left) +
             "\" height=\"" + px(bottom - top) + "\" fill=\"" + fill + "\"/>\n";
  }

  void label(double vx, double vy, const std::string& text, double dx = 6, double dy = -6) {
    body_ += "<text x=\"" + px(x(vx) + dx) + "\" y=\"" + px(y(vy) + dy) +
             "\" font-size=\"10\">" + escape(text) + "</text>\n";
  }

  void legend(const std::string& name, const std::string& fill) {
    legend_.emplace_back(name, fill);
  }

  std::string str() const {
    std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + px(w_) +
                    "\" height=\"" + px(h_) + "\" font-family=\"sans-serif\">\n";
    s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    s += "<text x=\"" + px(w_ / 2) + "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" +
         escape(title_) + "</text>\n";
    const double x0 = x(xmin_), x1 = x(xmax_), y0 = y(ymin_), y1 = y(ymax_);
    s += "<line x1=\"" + px(x0) + "\" y1=\"" + px(y0) + "\" x2=\"" + px(x1) + "\" y2=\"" + px(y0) +
         "\" stroke=\"black\"/>\n";
    s += "<line x1=\"" + px(x0) + "\" y1=\"" + px(y0) + "\" x2=\"" + px(x0) + "\" y2=\"" + px(y1) +
         "\" stroke=\"black\"/>\n";
    for (int i = 0; i <= kTicks; ++i) {
      const double xv = xmin_ + (xmax_ - xmin_) * i / kTicks;
      const double yv = ymin_ + (ymax_ - ymin_) * i / kTicks;
      s += "<line x1=\"" + px(x(xv)) + "\" y1=\"" + px(y0) + "\" x2=\"" + px(x(xv)) + "\" y2=\"" +
           px(y0 + 4) + "\" stroke=\"black\"/>\n";
      s += "<text x=\"" + px(x(xv)) + "\" y=\"" + px(y0 + 16) +
           "\" text-anchor=\"middle\" font-size=\"10\">" + tick(xv) + "</text>\n";
      s += "<line x1=\"" + px(x0 - 4) + "\" y1=\"" + px(y(yv)) + "\" x2=\"" + px(x0) + "\" y2=\"" +
           px(y(yv)) + "\" stroke=\"black\"/>\n";
      s += "<text x=\"" + px(x0 - 6) + "\" y=\"" + px(y(yv) + 3) +
           "\" text-anchor=\"end\" font-size=\"10\">" + tick(yv) + "</text>\n";
    }
    s += "<text x=\"" + px((x0 + x1) / 2) + "\" y=\"" + px(h_ - 10) +
         "\" text-anchor=\"middle\" font-size=\"12\">" + escape(xlabel_) + "</text>\n";
    s += "<text x=\"14\" y=\"" + px((y0 + y1) / 2) + "\" text-anchor=\"middle\" font-size=\"12\" "
         "transform=\"rotate(-90 14 " + px((y0 + y1) / 2) + ")\">" + escape(ylabel_) + "</text>\n";
    s += body_;
    double ly = kTop + 6;
    for (const auto& [name, fill] : legend_) {
      s += "<rect x=\"" + px(w_ - kRight - 120) + "\" y=\"" + px(ly - 8) +
           "\" width=\"10\" height=\"10\" fill=\"" + fill + "\"/>\n";
      s += "<text x=\"" + px(w_ - kRight - 105) + "\" y=\"" + px(ly + 1) + "\" font-size=\"10\">" +
           escape(name) + "</text>\n";
      ly += 14;
    }
    s += "</svg>\n";
    return s;
  }

 private:
  static constexpr double kLeft = 60, kRight = 20, kTop = 40, kBottom = 50;
  static constexpr int kTicks = 5;

  static std::string tick(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", std::abs(v) < 1e-12 ? 0.0 : v);
    return buf;
  }

  std::string title_, xlabel_, ylabel_;
  double xmin_, xmax_, ymin_, ymax_, w_, h_;
  std::string body_;
  std::vector<std::pair<std::string, std::string>> legend_;
};

}  // namespace svg

// ---------------------------------------------------------------------------
// Scatter: SuffFailFreq(T/2) vs K * MinFrac(T)

enum class MarkerClass { kLlm, kBaseline, kEpsSweep };

inline const char* to_string(MarkerClass m) {
  switch (m) {
    case MarkerClass::kLlm:
      return "llm";
    case MarkerClass::kBaseline:
      return "baseline";
    case MarkerClass::kEpsSweep:
      return "eps_sweep";
  }
  return "?";
}

/// Epsilon encoded in a label of the form "eps_greedy(<eps>)".
inline std::optional<double> sweep_epsilon(std::string_view label) {
  constexpr std::string_view prefix = "eps_greedy(";
  if (label.substr(0, prefix.size()) != prefix || label.back() != ')') return std::nullopt;
  try {
    return parse_number(label.substr(prefix.size(), label.size() - prefix.size() - 1));
  } catch (const IntegrityError&) {
    return std::nullopt;
  }
}

inline MarkerClass classify(std::string_view label) {
  if (sweep_epsilon(label)) return MarkerClass::kEpsSweep;
  if (label == "ucb" || label == "ts" || label == "greedy") return MarkerClass::kBaseline;
  return MarkerClass::kLlm;
}

struct ScatterPoint {
  std::string label;
  MarkerClass marker = MarkerClass::kLlm;
  std::optional<double> epsilon;
  double x = 0.0;  // SuffFailFreq(T/2)
  double y = 0.0;  // K * MinFrac(T)
};

/// One point per configuration; eps-greedy points sorted by epsilon.
/// Inputs must share a horizon.
inline Table scatter_table(const std::vector<SummaryRow>& rows) {
  if (rows.empty()) throw UsageError("scatter needs at least one configuration");
  for (const auto& r : rows) {
    if (r.horizon != rows.front().horizon) {
      throw UsageError("scatter inputs mix horizons " + std::to_string(rows.front().horizon) +
                       " and " + std::to_string(r.horizon));
    }
  }
  std::vector<ScatterPoint> pts;
  for (const auto& r : rows) {
    pts.push_back({r.config, classify(r.config), sweep_epsilon(r.config), r.sufffail_half, r.k_minfrac_T});
  }
  std::stable_sort(pts.begin(), pts.end(), [](const ScatterPoint& a, const ScatterPoint& b) {
    if (a.marker != b.marker) return a.marker < b.marker;
    if (a.epsilon && b.epsilon) return *a.epsilon < *b.epsilon;
    return false;
  });
  Table t{{"label", "marker", "epsilon", "x", "y"}, {}};
  for (const auto& p : pts) {
    t.rows.push_back({p.label, to_string(p.marker), p.epsilon ? format_number(*p.epsilon) : "",
                      format_number(p.x), format_number(p.y)});
  }
  return t;
}

inline std::vector<ScatterPoint> scatter_points(const Table& t) {
  std::vector<ScatterPoint> out;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    ScatterPoint p;
    p.label = t.cell(i, "label");
    p.marker = classify(p.label);
    if (const auto& e = t.cell(i, "epsilon"); !e.empty()) p.epsilon = parse_number(e);
    p.x = t.number(i, "x");
    p.y = t.number(i, "y");
    out.push_back(std::move(p));
  }
  return out;
}

inline std::string scatter_svg(const Table& t) {
  svg::Frame f("Suffix failures vs uniform-like failures", "SuffFailFreq(T/2)", "K * MinFrac(T)",
               0, 1, 0, 1);
  std::vector<std::pair<double, double>> trace;
  std::size_t llm = 0, base = 0;
  for (const auto& p : scatter_points(t)) {
    switch (p.marker) {
      case MarkerClass::kEpsSweep:
        trace.emplace_back(p.x, p.y);
        break;
      case MarkerClass::kBaseline:
        f.square(p.x, p.y, svg::color(1 + base++));
        f.label(p.x, p.y, p.label);
        break;
      case MarkerClass::kLlm:
        f.circle(p.x, p.y, svg::color(0));
        ++llm;
        break;
    }
  }
  if (!trace.empty()) {
    f.polyline(trace, "#7f7f7f", 1.5);
    for (const auto& [x, y] : trace) f.circle(x, y, "#7f7f7f", 3);
    f.legend("eps-Greedy sweep", "#7f7f7f");
  }
  if (llm) f.legend("LLM configurations", svg::color(0));
  return f.str();
}

// ---------------------------------------------------------------------------
// Summary table

inline Table summary_table(const std::vector<SummaryRow>& rows) {
  Table t{{"config", "sufffail_half", "k_minfrac_T", "medrew", "greedyfrac", "fails"}, {}};
  for (const auto& r : rows) {
    t.rows.push_back({r.config, format_number(r.sufffail_half), format_number(r.k_minfrac_T),
                      format_number(r.medrew), format_number(r.greedyfrac), std::to_string(r.fails)});
  }
  return t;
}

inline std::string summary_markdown(const std::vector<SummaryRow>& rows) {
  auto fixed = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return std::string(buf);
  };
  std::string md = "| config | SuffFailFreq(T/2) | K*MinFrac(T) | MedRew | GreedyFrac | fails |\n"
                   "|---|---|---|---|---|---|\n";
  for (const auto& r : rows) {
    md += "| " + r.config + " | " + fixed(r.sufffail_half) + " | " + fixed(r.k_minfrac_T) + " | " +
          fixed(r.medrew) + " | " + fixed(r.greedyfrac) + " | " + std::to_string(r.fails) + " |\n";
  }
  return md;
}

// ---------------------------------------------------------------------------
// Detail views

struct LabelledRun {
  std::string label;
  std::vector<Trajectory> trajectories;
};

inline Table histogram_table(const LabelledRun& run, std::size_t bins = 20) {
  const auto counts = best_arm_counts(run.trajectories);
  const std::size_t horizon = run.trajectories.empty() ? 0 : run.trajectories.front().instance.horizon;
  bins = std::max<std::size_t>(1, std::min(bins, horizon + 1));
  const double width = static_cast<double>(horizon + 1) / static_cast<double>(bins);
  std::vector<std::size_t> hist(bins, 0);
  for (auto c : counts) {
    ++hist[std::min(bins - 1, static_cast<std::size_t>(static_cast<double>(c) / width))];
  }
  Table t{{"label", "bin_lo", "bin_hi", "replicates"}, {}};
  for (std::size_t b = 0; b < bins; ++b) {
    t.rows.push_back({run.label, format_number(b * width), format_number((b + 1) * width),
                      std::to_string(hist[b])});
  }
  return t;
}

inline std::string histogram_svg(const Table& t) {
  double top = 1, right = 1;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    top = std::max(top, t.number(i, "replicates"));
    right = std::max(right, t.number(i, "bin_hi"));
  }
  const std::string label = t.rows.empty() ? "" : t.cell(0, "label");
  svg::Frame f("Best-arm plays per replicate: " + label, "times best arm chosen", "replicates", 0,
               right, 0, top);
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    f.box(t.number(i, "bin_lo"), 0, t.number(i, "bin_hi"), t.number(i, "replicates"), svg::color(0));
  }
  return f.str();
}

/// Long-format curve table: label, t, value.
inline Table curve_table(const std::vector<std::pair<std::string, std::vector<double>>>& curves) {
  Table t{{"label", "t", "value"}, {}};
  for (const auto& [label, values] : curves) {
    for (std::size_t i = 0; i < values.size(); ++i) {
      t.rows.push_back({label, std::to_string(i + 1), format_number(values[i])});
    }
  }
  return t;
}

inline std::string curve_svg(const Table& t, const std::string& title, const std::string& ylabel,
                             double ymin = 0, double ymax = 1) {
  std::vector<std::string> order;
  std::map<std::string, std::vector<std::pair<double, double>>> series;
  double xmax = 1;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& label = t.cell(i, "label");
    if (!series.count(label)) order.push_back(label);
    const double x = t.number(i, "t");
    xmax = std::max(xmax, x);
    series[label].emplace_back(x, t.number(i, "value"));
  }
  svg::Frame f(title, "t", ylabel, 0, xmax, ymin, ymax);
  for (std::size_t i = 0; i < order.size(); ++i) {
    f.polyline(series[order[i]], svg::color(i));
    f.legend(order[i], svg::color(i));
  }
  return f.str();
}

/// Arm chosen per round for the first few replicates, with arms in
/// canonical order so the best arm is always row 0 (drawn on top).
inline Table trace_table(const LabelledRun& run, std::size_t max_replicates = 8) {
  Table t{{"label", "replicate", "t", "arm"}, {}};
  std::size_t shown = 0;
  for (const auto& tr : run.trajectories) {
    if (!tr.complete()) continue;
    if (shown++ >= max_replicates) break;
    std::vector<std::size_t> canonical(tr.instance.num_arms());
    for (std::size_t c = 0; c < canonical.size(); ++c) canonical[tr.instance.permutation[c]] = c;
    for (const auto& r : tr.rounds) {
      t.rows.push_back({run.label, std::to_string(tr.replicate), std::to_string(r.t),
                        std::to_string(canonical[r.arm])});
    }
  }
  return t;
}

inline std::string trace_svg(const Table& t) {
  std::vector<std::string> reps;
  double xmax = 1, arms = 1;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    if (reps.empty() || reps.back() != t.cell(i, "replicate")) reps.push_back(t.cell(i, "replicate"));
    xmax = std::max(xmax, t.number(i, "t"));
    arms = std::max(arms, t.number(i, "arm") + 1);
  }
  const std::string label = t.rows.empty() ? "" : t.cell(0, "label");
  const double panels = std::max<double>(1, static_cast<double>(reps.size()));
  // One band per replicate; within a band, canonical arm 0 is the top row.
  svg::Frame f("Arm chosen per round: " + label, "t", "replicate / arm (best on top)", 0, xmax, 0,
               panels * (arms + 1));
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto band = static_cast<double>(
        std::find(reps.begin(), reps.end(), t.cell(i, "replicate")) - reps.begin());
    const double base = (panels - 1 - band) * (arms + 1);
    const double row = arms - 1 - t.number(i, "arm");
    const double x = t.number(i, "t");
    f.box(x - 1, base + row, x, base + row + 1, t.number(i, "arm") == 0 ? svg::color(0) : svg::color(7));
  }
  return f.str();
}

inline Table optimal_fraction_table(const LabelledRun& run, std::size_t max_replicates = 100) {
  Table t{{"label", "replicate", "t", "fraction"}, {}};
  const auto curves = optimal_fraction_curves(run.trajectories);
  std::vector<std::size_t> indices;
  for (const auto& tr : run.trajectories) {
    if (tr.complete()) indices.push_back(tr.replicate);
  }
  for (std::size_t i = 0; i < curves.size() && i < max_replicates; ++i) {
    for (std::size_t s = 0; s < curves[i].size(); ++s) {
      t.rows.push_back({run.label, std::to_string(indices[i]), std::to_string(s + 1),
                        format_number(curves[i][s])});
    }
  }
  return t;
}

inline std::string optimal_fraction_svg(const Table& t) {
  std::vector<std::string> order;
  std::map<std::string, std::vector<std::pair<double, double>>> series;
  double xmax = 1;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& rep = t.cell(i, "replicate");
    if (!series.count(rep)) order.push_back(rep);
    xmax = std::max(xmax, t.number(i, "t"));
    series[rep].emplace_back(t.number(i, "t"), t.number(i, "fraction"));
  }
  const std::string label = t.rows.empty() ? "" : t.cell(0, "label");
  svg::Frame f("Fraction of rounds on the best arm: " + label, "t", "fraction in [1, t]", 0, xmax, 0, 1);
  for (const auto& rep : order) f.polyline(series[rep], svg::color(0), 1.0, 0.35);
  return f.str();
}

/// A named CSV and the SVG drawn from it.
struct Artifact {
  std::string name;  // file stem
  Table table;
  std::string svg;
};

inline std::string file_stem(std::string_view label) {
  std::string out;
  for (char c : label) {
    out += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '.') ? c : '_';
  }
  return out;
}

/// Histogram, suffix-failure curve, cumulative reward, traces and
/// per-replicate optimal-fraction curves for one or more runs. The two
/// curve charts overlay all runs; the others are per run.
inline std::vector<Artifact> detail_view(const std::vector<LabelledRun>& runs) {
  std::vector<Artifact> out;
  std::vector<std::pair<std::string, std::vector<double>>> suff, reward;
  for (const auto& run : runs) {
    suff.emplace_back(run.label, suffix_failure_curve(run.trajectories));
    reward.emplace_back(run.label, cumulative_reward_curve(run.trajectories));
  }
  {
    Table t = curve_table(suff);
    out.push_back({"suffix_failure", t, curve_svg(t, "Suffix failure frequency", "SuffFailFreq(t)")});
  }
  {
    Table t = curve_table(reward);
    out.push_back({"cumulative_reward",
                   t,
                   curve_svg(t, "Cumulative time-averaged reward", "average reward up to t")});
  }
  for (const auto& run : runs) {
    const std::string stem = file_stem(run.label);
    Table h = histogram_table(run);
    out.push_back({"histogram_" + stem, h, histogram_svg(h)});
    Table tr = trace_table(run);
    out.push_back({"trace_" + stem, tr, trace_svg(tr)});
    Table of = optimal_fraction_table(run);
    out.push_back({"optimal_fraction_" + stem, of, optimal_fraction_svg(of)});
  }
  return out;
}

inline void write_artifact(const std::filesystem::path& dir, const Artifact& a) {
  std::filesystem::create_directories(dir);
  write_file_atomic(dir / (a.name + ".csv"), a.table.to_csv());
  write_file_atomic(dir / (a.name + ".svg"), a.svg);
}

}  // namespace armlab
