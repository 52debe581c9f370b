// Copyright 2026 The vidshuffle Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef VIDSHUFFLE_HARNESS_REPORT_HPP_
#define VIDSHUFFLE_HARNESS_REPORT_HPP_

// Tables and plots from experiment records: per-record CSV and JSON, SVG
// line plots for curve-shaped experiments, and the defense matrix table.

#include <cstdio>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "vidshuffle/harness/experiments.hpp"

namespace vidshuffle::harness {

struct Series {
  std::string name;
  std::vector<std::pair<double, double>> points;
};

struct PlotSpec {
  std::string title;
  std::string x_label;
  std::string y_label = "accuracy";
  double y_min = 0.0;
  double y_max = 1.0;
};

inline std::string fmt(double v, int digits = 4) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

inline std::string xml_escape(const std::string& s) {
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

/// Minimal SVG line chart.
inline std::string svg_line_plot(const PlotSpec& spec, const std::vector<Series>& series) {
  static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};
  constexpr double W = 480, H = 320, L = 60, R = 130, T = 36, B = 48;
  double x0 = 0, x1 = 1;
  bool first = true;
  for (const auto& s : series) {
    for (const auto& [x, y] : s.points) {
      if (first) {
        x0 = x1 = x;
        first = false;
      }
      x0 = std::min(x0, x);
      x1 = std::max(x1, x);
    }
  }
  if (x1 == x0) x1 = x0 + 1;
  const double yspan = spec.y_max > spec.y_min ? spec.y_max - spec.y_min : 1.0;
  auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
  auto py = [&](double y) { return H - B - (y - spec.y_min) / yspan * (H - T - B); };

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
    << "\" font-family=\"sans-serif\" font-size=\"11\">\n"
    << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    << "<text x=\"" << W / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"13\">"
    << xml_escape(spec.title) << "</text>\n";
  o << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B
    << "\" stroke=\"black\"/>\n"
    << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B
    << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double y = spec.y_min + yspan * i / 4;
    o << "<text x=\"" << L - 6 << "\" y=\"" << py(y) + 4 << "\" text-anchor=\"end\">" << fmt(y, 2)
      << "</text>\n<line x1=\"" << L << "\" y1=\"" << py(y) << "\" x2=\"" << W - R << "\" y2=\""
      << py(y) << "\" stroke=\"#ddd\"/>\n";
  }
  std::vector<double> xticks;
  for (const auto& s : series) {
    for (const auto& p : s.points) {
      if (std::find(xticks.begin(), xticks.end(), p.first) == xticks.end()) xticks.push_back(p.first);
    }
  }
  for (double x : xticks) {
    o << "<text x=\"" << px(x) << "\" y=\"" << H - B + 16 << "\" text-anchor=\"middle\">"
      << fmt(x, x == std::floor(x) ? 0 : 2) << "</text>\n";
  }
  o << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 10 << "\" text-anchor=\"middle\">"
    << xml_escape(spec.x_label) << "</text>\n"
    << "<text transform=\"translate(16," << (T + H - B) / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
    << xml_escape(spec.y_label) << "</text>\n";
  for (std::size_t k = 0; k < series.size(); ++k) {
    const char* color = kColors[k % 6];
    std::string pts;
    for (const auto& [x, y] : series[k].points) pts += fmt(px(x), 1) + "," + fmt(py(y), 1) + " ";
    o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"" << pts
      << "\"/>\n";
    for (const auto& [x, y] : series[k].points) {
      o << "<circle cx=\"" << fmt(px(x), 1) << "\" cy=\"" << fmt(py(y), 1) << "\" r=\"3\" fill=\""
        << color << "\"/>\n";
    }
    const double ly = T + 14 + 16.0 * k;
    o << "<line x1=\"" << W - R + 10 << "\" y1=\"" << ly << "\" x2=\"" << W - R + 28 << "\" y2=\""
      << ly << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n<text x=\"" << W - R + 32
      << "\" y=\"" << ly + 4 << "\">" << xml_escape(series[k].name) << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

/// group,accuracy,count
inline std::string aggregates_csv(const ExperimentRecord& rec) {
  std::map<std::string, int> counts;
  for (const auto& r : rec.rows) ++counts[r.group];
  std::string out = "group,accuracy,count\n";
  for (const auto& [g, a] : rec.aggregates) {
    out += "\"" + g + "\"," + fmt(a) + "," + std::to_string(counts[g]) + "\n";
  }
  return out;
}

inline const char* kToySubstitutionNote =
    "toy substitution: synthetic moving-object videos and a small 3D CNN stand in for the "
    "real-video benchmark; values are accuracies on the toy test split";

/// Defense-by-attack matrix as CSV, preceded by a comment header.
inline std::string matrix_csv(const ExperimentRecord& rec) {
  const json& d = rec.derived;
  std::string out = std::string("# ") + kToySubstitutionNote + "\n";
  const auto per_cell = std::count_if(rec.rows.begin(), rec.rows.end(),
                                      [](const Row& r) { return r.group == "No/Clean"; });
  out += "# videos per cell: " + std::to_string(per_cell) + ", dataset " +
         rec.config.value("dataset", "") + ", K=" +
         std::to_string(rec.config.at("defense").value("k", 0)) + ", sigma=" +
         fmt(rec.config.at("defense").value("sigma", 0.0), 1) + "\n";
  out += "defense";
  for (const auto& c : d.at("columns")) out += "," + c.get<std::string>();
  out += "\n";
  for (std::size_t r = 0; r < d.at("rows").size(); ++r) {
    out += d.at("rows")[r].get<std::string>();
    for (const auto& v : d.at("matrix")[r]) out += "," + fmt(v.get<double>());
    out += "\n";
  }
  return out;
}

inline std::string matrix_markdown(const ExperimentRecord& rec) {
  const json& d = rec.derived;
  std::string out = std::string("> ") + kToySubstitutionNote + "\n\n| Defense |";
  for (const auto& c : d.at("columns")) out += " " + c.get<std::string>() + " |";
  out += "\n|---|";
  for (std::size_t i = 0; i < d.at("columns").size(); ++i) out += "---|";
  out += "\n";
  for (std::size_t r = 0; r < d.at("rows").size(); ++r) {
    out += "| " + d.at("rows")[r].get<std::string>() + " |";
    for (const auto& v : d.at("matrix")[r]) out += " " + fmt(100.0 * v.get<double>(), 1) + " |";
    out += "\n";
  }
  return out;
}

namespace detail {

inline Series curve_series(const std::string& name, const json& curve) {
  Series s{name, {}};
  for (const auto& p : curve) s.points.emplace_back(p.at("n").get<double>(), p.at("accuracy").get<double>());
  return s;
}

inline Series frame_series(const std::string& name, const ExperimentRecord& rec,
                           const std::string& prefix) {
  Series s{name, {}};
  for (int f = 1;; ++f) {
    const auto it = rec.aggregates.find(prefix + "frame=" + std::to_string(f));
    if (it == rec.aggregates.end()) break;
    s.points.emplace_back(f, it->second);
  }
  return s;
}

}  // namespace detail

/// Plot for a record, if its experiment has a natural one.
inline std::optional<std::string> record_plot(const ExperimentRecord& rec) {
  const ExperimentConfig cfg = config_from_json(rec.config);
  const json& d = rec.derived;
  const std::string title = cfg.record_name();
  switch (cfg.experiment) {
    case ExperimentKind::kUniformizeClean:
      return svg_line_plot({title, "source frame f"}, {detail::frame_series("uniformized", rec, "")});
    case ExperimentKind::kRandomizeClean:
    case ExperimentKind::kToyRandomize: {
      std::vector<Series> s{detail::curve_series("frame chunks", d.at("chunk_curve"))};
      if (!d.at("row_curve").empty()) s.push_back(detail::curve_series("row chunks", d.at("row_curve")));
      return svg_line_plot({title, "chunk size N"}, s);
    }
    case ExperimentKind::kAttackRandomize:
      if (d.at("attacked_chunk_curve").empty()) return std::nullopt;
      return svg_line_plot({title, "chunk size N"},
                           {detail::curve_series("attacked", d.at("attacked_chunk_curve"))});
    case ExperimentKind::kAttackUniformize:
      return svg_line_plot({title, "source frame f"},
                           {detail::frame_series("clean", rec, "clean/"),
                            detail::frame_series("attacked", rec, "attacked/")});
    case ExperimentKind::kEnsembleSize: {
      Series c{"clean", {}}, a{"attacked", {}};
      for (const auto& s : d.at("sizes")) {
        c.points.emplace_back(s.at("k").get<double>(), s.at("clean").get<double>());
        a.points.emplace_back(s.at("k").get<double>(), s.at("attacked").get<double>());
      }
      return svg_line_plot({title, "ensemble size K"}, {c, a});
    }
    case ExperimentKind::kDefenseSweep: {
      std::vector<Series> s;
      for (int h2 : cfg.grid_h2) {
        Series ser{"h2=" + std::to_string(h2) + " attacked", {}};
        for (const auto& c : d.at("cells")) {
          if (c.at("h2").get<int>() == h2) {
            ser.points.emplace_back(c.at("h1").get<double>(), c.at("attacked").get<double>());
          }
        }
        if (!ser.points.empty()) s.push_back(ser);
      }
      return svg_line_plot({title, "h1"}, s);
    }
    case ExperimentKind::kMonotonicity: {
      Series s{"accuracy", {}};
      for (const auto& b : d.at("bins")) {
        s.points.emplace_back(b.at("ratio").get<double>(), b.at("accuracy").get<double>());
      }
      return svg_line_plot({title, "monotonic ratio"}, {s});
    }
    default: return std::nullopt;
  }
}

/// Writes <name>.csv, <name>.json and, where defined, <name>.svg (plus the
/// matrix tables) for every record in the workspace. Returns files written.
inline std::vector<fs::path> write_reports(const Workspace& ws) {
  std::vector<fs::path> written;
  const auto records = list_records(ws.records());
  if (records.empty()) throw MissingArtifact("no records under " + ws.records().string());
  fs::create_directories(ws.reports());
  json index = json::object();
  auto emit = [&](const std::string& file, const std::string& body) {
    const fs::path p = ws.reports() / file;
    io::write_file_atomic(p, body);
    written.push_back(p);
  };
  for (const auto& path : records) {
    const ExperimentRecord rec = load_record(path);
    const std::string name = path.stem().string();
    emit(name + ".csv", aggregates_csv(rec));
    emit(name + ".json", json{{"config", rec.config},
                              {"aggregates", rec.aggregates},
                              {"derived", rec.derived},
                              {"wall_clock_s", rec.wall_clock_s}}
                             .dump(2) + "\n");
    if (auto svg = record_plot(rec)) emit(name + ".svg", *svg);
    if (rec.config.value("experiment", "") == "defense_matrix") {
      emit(name + "_table.csv", matrix_csv(rec));
      emit(name + "_table.md", matrix_markdown(rec));
    }
    index[name] = rec.derived;
  }
  emit("summary.json", index.dump(2) + "\n");
  return written;
}

}  // namespace vidshuffle::harness

#endif  // VIDSHUFFLE_HARNESS_REPORT_HPP_
