#pragma once

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "symwalk/harness/trainer.hpp"

namespace symwalk::harness {

struct RunCurve {
  std::string cfg;   // e.g. "psl_b512"
  std::uint64_t seed = 0;
  std::vector<double> steps;
  std::vector<double> reward;
};

inline std::vector<std::pair<double, double>> read_metrics_curve(
    const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("compare: cannot read " + path);
  std::string line;
  std::getline(is, line);  // header
  std::vector<std::pair<double, double>> out;
  while (std::getline(is, line)) {
    std::istringstream ls(line);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(ls, field, ',')) fields.push_back(field);
    if (fields.size() < 3) continue;
    out.emplace_back(std::stod(fields[1]), std::stod(fields[2]));
  }
  return out;
}

// Linear interpolation onto a common step grid; only used when run grids
// disagree (they normally match by construction).
inline std::vector<double> resample(const std::vector<double>& xs,
                                    const std::vector<double>& ys,
                                    const std::vector<double>& grid) {
  std::vector<double> out(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double x = grid[i];
    auto it = std::lower_bound(xs.begin(), xs.end(), x);
    if (it == xs.begin()) {
      out[i] = ys.front();
    } else if (it == xs.end()) {
      out[i] = ys.back();
    } else {
      const std::size_t hi = it - xs.begin();
      const std::size_t lo = hi - 1;
      const double f = (x - xs[lo]) / (xs[hi] - xs[lo]);
      out[i] = ys[lo] + f * (ys[hi] - ys[lo]);
    }
  }
  return out;
}

struct CompareResult {
  std::vector<RunCurve> runs;
  std::map<std::string, RunCurve> means;  // per cfg label
  std::string csv_path;
  std::string svg_path;
};

namespace detail {

inline void write_svg(const CompareResult& res, const std::string& path) {
  double max_x = 1.0, max_y = 1.0, min_y = 0.0;
  for (const auto& r : res.runs) {
    for (double x : r.steps) max_x = std::max(max_x, x);
    for (double y : r.reward) {
      max_y = std::max(max_y, y);
      min_y = std::min(min_y, y);
    }
  }
  const double w = 720, h = 420, ml = 60, mb = 40, mt = 16, mr = 16;
  auto px = [&](double x) { return ml + (w - ml - mr) * x / max_x; };
  auto py = [&](double y) {
    return h - mb - (h - mb - mt) * (y - min_y) / (max_y - min_y + 1e-12);
  };
  std::map<std::string, std::string> colors;
  const std::vector<std::string> palette = {"#2a7e3e", "#c23b3b", "#2b5fc2",
                                            "#b8860b", "#7d3bc2", "#3bc2b8"};
  std::size_t ci = 0;
  for (const auto& [cfg, curve] : res.means)
    colors[cfg] = palette[ci++ % palette.size()];

  std::ofstream os(path, std::ios::trunc);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w
     << "\" height=\"" << h << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<line x1=\"" << ml << "\" y1=\"" << h - mb << "\" x2=\"" << w - mr
     << "\" y2=\"" << h - mb << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml
     << "\" y2=\"" << h - mb << "\" stroke=\"black\"/>\n";
  os << "<text x=\"" << (w / 2) << "\" y=\"" << h - 8
     << "\" font-size=\"12\" text-anchor=\"middle\">steps</text>\n";
  os << "<text x=\"14\" y=\"" << (h / 2)
     << "\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 14 "
     << (h / 2) << ")\">avg episode reward</text>\n";

  auto polyline = [&](const RunCurve& c, const std::string& color,
                      double opacity, double width) {
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\""
       << width << "\" stroke-opacity=\"" << opacity << "\" points=\"";
    for (std::size_t i = 0; i < c.steps.size(); ++i)
      os << px(c.steps[i]) << "," << py(c.reward[i]) << " ";
    os << "\"/>\n";
  };
  for (const auto& r : res.runs) polyline(r, colors[r.cfg], 0.3, 1.0);
  for (const auto& [cfg, curve] : res.means) polyline(curve, colors[cfg], 1.0, 2.2);

  double ly = mt + 14;
  for (const auto& [cfg, color] : colors) {
    os << "<line x1=\"" << ml + 10 << "\" y1=\"" << ly << "\" x2=\"" << ml + 34
       << "\" y2=\"" << ly << "\" stroke=\"" << color
       << "\" stroke-width=\"2.2\"/>\n";
    os << "<text x=\"" << ml + 40 << "\" y=\"" << ly + 4
       << "\" font-size=\"12\">" << cfg << "</text>\n";
    ly += 16;
  }
  os << "</svg>\n";
}

}  // namespace detail

// Runs the {variant x batch x seed} grid sequentially and writes the long
// comparison CSV (steps,cfg,run,reward; per-cfg mean rows use run=mean) plus
// an SVG plot of every curve.
inline CompareResult compare(const ExperimentConfig& base,
                             std::ostream* log = nullptr) {
  if (base.compare_seeds.size() < 2)
    throw ConfigError("compare: need >= 2 seeds per configuration");
  namespace fs = std::filesystem;
  fs::create_directories(base.out_dir);

  CompareResult res;
  for (int batch : base.compare_batches) {
    for (auto kind : base.compare_variants) {
      const std::string label =
          std::string(detail::kind_name(kind)) + "_b" + std::to_string(batch);
      for (auto seed : base.compare_seeds) {
        ExperimentConfig cfg = base;
        cfg.sym.kind = kind;
        cfg.batch_per_worker = batch;
        cfg.seed = seed;
        cfg.out_dir = base.out_dir + "/run_" + label + "_s" +
                      std::to_string(seed);
        cfg.resume.clear();
        if (log) *log << "[compare] " << label << " seed " << seed << "\n";
        const TrainResult tr = train(cfg, nullptr);
        RunCurve curve;
        curve.cfg = label;
        curve.seed = seed;
        for (const auto& [s, r] : read_metrics_curve(tr.metrics_path)) {
          curve.steps.push_back(s);
          curve.reward.push_back(r);
        }
        res.runs.push_back(std::move(curve));
      }
    }
  }

  // per-config means; resample if a grid ever disagrees
  std::map<std::string, std::vector<const RunCurve*>> by_cfg;
  for (const auto& r : res.runs) by_cfg[r.cfg].push_back(&r);
  for (const auto& [cfg_label, group] : by_cfg) {
    const std::vector<double>& grid = group.front()->steps;
    RunCurve mean;
    mean.cfg = cfg_label;
    mean.steps = grid;
    mean.reward.assign(grid.size(), 0.0);
    for (const RunCurve* r : group) {
      std::vector<double> y = (r->steps == grid)
                                  ? r->reward
                                  : resample(r->steps, r->reward, grid);
      for (std::size_t i = 0; i < grid.size(); ++i) mean.reward[i] += y[i];
    }
    for (auto& v : mean.reward) v /= group.size();
    res.means[cfg_label] = std::move(mean);
  }

  res.csv_path = base.out_dir + "/compare.csv";
  std::ofstream os(res.csv_path, std::ios::trunc);
  os << "steps,cfg,run,reward\n";
  char row[160];
  for (const auto& r : res.runs)
    for (std::size_t i = 0; i < r.steps.size(); ++i) {
      std::snprintf(row, sizeof(row), "%.0f,%s,%llu,%.6f\n", r.steps[i],
                    r.cfg.c_str(), static_cast<unsigned long long>(r.seed),
                    r.reward[i]);
      os << row;
    }
  for (const auto& [cfg_label, m] : res.means)
    for (std::size_t i = 0; i < m.steps.size(); ++i) {
      std::snprintf(row, sizeof(row), "%.0f,%s,mean,%.6f\n", m.steps[i],
                    cfg_label.c_str(), m.reward[i]);
      os << row;
    }

  res.svg_path = base.out_dir + "/compare.svg";
  detail::write_svg(res, res.svg_path);
  return res;
}

}  // namespace symwalk::harness
