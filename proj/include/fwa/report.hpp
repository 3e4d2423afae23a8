#pragma once

// Run outputs: CSV tables, summary JSON, and the post-run report with SVG charts.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fwa/core.hpp"
#include "fwa/simulation.hpp"
#include "fwa/training.hpp"

namespace fwa::report {

namespace fs = std::filesystem;
using json = nlohmann::json;

inline constexpr const char* kSliceHeader = "slice,service,fiveqi,budget_ms,samples,satisfied,dropped,phi,mean_delay_ms";
inline constexpr const char* kLedgerHeader = "hour,g,h_plus,h_minus,charge,discharge,level,L_cons,L,H";
inline constexpr const char* kSolutionHeader = "hour,z,F,H,rb_revenue,iterations,converged";
inline constexpr const char* kForecastHeader = "target,horizon,predicted,actual,abs_error";
inline constexpr const char* kCurveHeader = "step,loss,mean_reward,epsilon";

inline void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  require(!ec && fs::is_directory(dir), ErrorCode::Io, "cannot create directory '" + dir.string() + "'");
}

inline void write_slices(const fs::path& path, const RunMetrics& m) {
  csv::Writer w(path.string(), kSliceHeader);
  for (const auto& s : m.slices)
    w.line(csv::row(s.slice, s.service, s.fiveqi, s.budget_ms, s.samples, s.satisfied, s.dropped, s.phi(),
                    s.samples > 0 ? s.delay_sum_ms / s.samples : 0.0));
}

inline void write_ledger(const fs::path& path, const std::vector<EnergyLedger>& ledger) {
  csv::Writer w(path.string(), kLedgerHeader);
  for (const auto& l : ledger)
    w.line(csv::row(l.hour, l.solar_kwh, l.grid_in_kwh, l.surplus_kwh, l.charge_kwh, l.discharge_kwh, l.level_after_kwh,
                    l.consumption_kwh, l.available_kwh, l.cost));
}

inline void write_solutions(const fs::path& path, const std::vector<HourSolution>& sols) {
  csv::Writer w(path.string(), kSolutionHeader);
  for (const auto& s : sols) w.line(csv::row(s.hour, s.z, s.F, s.H, s.rb_revenue, s.iterations, s.converged ? 1 : 0));
}

// Forecast rows whose target hour lies beyond the run have an empty actual.
inline void write_forecasts(const fs::path& path, const RunMetrics& m, bool persistence) {
  csv::Writer w(path.string(), kForecastHeader);
  for (const auto& f : m.forecasts) {
    const int target = f.origin_hour + f.horizon;
    const double pred = persistence ? f.persistence : f.cl;
    if (target < static_cast<int>(m.solutions.size())) {
      const double actual = m.solutions[static_cast<std::size_t>(target)].F;
      w.line(csv::row(target, f.horizon, pred, actual, std::abs(pred - actual)));
    } else {
      w.line(csv::row(target, f.horizon, pred, "", ""));
    }
  }
}

inline void write_vodu_util(const fs::path& path, const RunMetrics& m) {
  csv::Writer w(path.string(), "vodu,mean_utilization");
  for (std::size_t d = 0; d < m.vodu_util_sum.size(); ++d)
    w.line(csv::row(static_cast<int>(d), m.vodu_util_n[d] > 0 ? m.vodu_util_sum[d] / m.vodu_util_n[d] : 0.0));
}

inline void write_rewards(const fs::path& path, const RunMetrics& m) {
  csv::Writer w(path.string(), "decision,r_s");
  for (std::size_t i = 0; i < m.loop2_rewards.size(); ++i) w.line(csv::row(static_cast<long>(i), m.loop2_rewards[i]));
}

inline void write_curve(const fs::path& path, const std::vector<CurveRow>& curve) {
  csv::Writer w(path.string(), kCurveHeader);
  for (const auto& r : curve) w.line(csv::row(r.step, r.loss, r.reward, r.epsilon));
}

struct EnergyTotals {
  double consumption = 0, solar = 0, grid = 0, surplus = 0, cost = 0, rb_revenue = 0;
  int hours = 0, solar_sufficient = 0;
};

inline EnergyTotals energy_totals(const RunMetrics& m) {
  EnergyTotals t;
  for (const auto& l : m.ledger) {
    t.consumption += l.consumption_kwh;
    t.solar += l.solar_kwh;
    t.grid += l.grid_in_kwh;
    t.surplus += l.surplus_kwh;
    t.cost += l.cost;
    ++t.hours;
    if (l.solar_kwh >= l.consumption_kwh) ++t.solar_sufficient;
  }
  for (const auto& s : m.solutions) t.rb_revenue += s.rb_revenue;
  return t;
}

inline json summary_json(const RunMetrics& m, std::uint64_t seed, const std::string& policy, int hours) {
  json j;
  j["seed"] = seed;
  j["policy"] = policy;
  j["hours"] = hours;
  j["ticks"] = m.ticks;
  j["samples"] = m.total_samples();
  j["satisfied"] = m.total_satisfied();
  j["aggregate_satisfaction"] = m.aggregate_satisfaction();
  j["mean_r_s"] = m.mean_loop2_reward();
  j["loop1_epochs"] = m.loop1_epochs;
  j["loop2_epochs"] = m.loop2_epochs;
  j["capacity_violations"] = m.capacity_violations;
  json slices = json::array();
  for (const auto& s : m.slices)
    slices.push_back({{"slice", s.slice}, {"fiveqi", s.fiveqi}, {"samples", s.samples}, {"phi", s.phi()}, {"dropped", s.dropped}});
  j["slices"] = slices;
  json util = json::array();
  for (std::size_t d = 0; d < m.vodu_util_sum.size(); ++d)
    util.push_back(m.vodu_util_n[d] > 0 ? m.vodu_util_sum[d] / m.vodu_util_n[d] : 0.0);
  j["vodu_utilization"] = util;
  const auto e = energy_totals(m);
  j["energy"] = {{"hours", e.hours},       {"consumption_kwh", e.consumption}, {"solar_kwh", e.solar},
                 {"grid_kwh", e.grid},     {"surplus_kwh", e.surplus},         {"cost", e.cost},
                 {"rb_revenue", e.rb_revenue}, {"solar_sufficient_hours", e.solar_sufficient}};
  if (!m.forecasts.empty()) {
    double se_cl = 0, se_p = 0;
    long n = 0;
    for (const auto& f : m.forecasts) {
      const int target = f.origin_hour + f.horizon;
      if (target >= static_cast<int>(m.solutions.size())) continue;
      const double a = m.solutions[static_cast<std::size_t>(target)].F;
      se_cl += (f.cl - a) * (f.cl - a);
      se_p += (f.persistence - a) * (f.persistence - a);
      ++n;
    }
    j["forecast"] = {{"scored", n}, {"mse_cl", n ? se_cl / n : 0.0}, {"mse_persistence", n ? se_p / n : 0.0}};
  }
  return j;
}

inline void write_json(const fs::path& path, const json& j) {
  std::ofstream os(path, std::ios::binary);
  require(os.good(), ErrorCode::Io, "cannot write '" + path.string() + "'");
  os << j.dump(2) << '\n';
}

// Everything a finished run leaves behind, except the loop CSVs streamed during the run.
inline void write_run(const fs::path& dir, const RunMetrics& m, std::uint64_t seed, const std::string& policy, int hours) {
  ensure_dir(dir);
  write_slices(dir / "slice_satisfaction.csv", m);
  write_ledger(dir / "ledger.csv", m.ledger);
  write_solutions(dir / "solutions.csv", m.solutions);
  write_forecasts(dir / "forecast.csv", m, false);
  write_forecasts(dir / "forecast_persistence.csv", m, true);
  write_vodu_util(dir / "vodu_utilization.csv", m);
  write_rewards(dir / "rewards.csv", m);
  write_json(dir / "summary.json", summary_json(m, seed, policy, hours));
}

// ---- SVG ----

namespace svg {

struct Series {
  std::string name;
  std::vector<double> y;
};

inline std::string esc(const std::string& s) {
  std::string o;
  for (char c : s) {
    switch (c) {
      case '<': o += "&lt;"; break;
      case '>': o += "&gt;"; break;
      case '&': o += "&amp;"; break;
      case '"': o += "&quot;"; break;
      default: o += c;
    }
  }
  return o;
}

inline const char* color(std::size_t i) {
  static const char* palette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2"};
  return palette[i % 7];
}

constexpr double W = 640, H = 360, L = 60, R = 20, T = 40, B = 40;

inline void frame(std::ostringstream& os, const std::string& title, double lo, double hi) {
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 " << W << ' ' << H
     << "\">\n";
  os << "<rect x=\"0\" y=\"0\" width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";
  os << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << esc(title) << "</text>\n";
  os << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
  os << "<text x=\"" << L - 6 << "\" y=\"" << H - B << "\" text-anchor=\"end\" font-size=\"11\">" << csv::num(lo) << "</text>\n";
  os << "<text x=\"" << L - 6 << "\" y=\"" << T + 4 << "\" text-anchor=\"end\" font-size=\"11\">" << csv::num(hi) << "</text>\n";
}

inline std::string line_chart(const std::string& title, const std::vector<Series>& series) {
  double lo = 0, hi = 0;
  std::size_t n = 0;
  bool first = true;
  for (const auto& s : series)
    for (double v : s.y) {
      if (!std::isfinite(v)) continue;
      lo = first ? v : std::min(lo, v);
      hi = first ? v : std::max(hi, v);
      first = false;
      n = std::max(n, s.y.size());
    }
  if (hi <= lo) hi = lo + 1;
  std::ostringstream os;
  os.imbue(std::locale::classic());
  frame(os, title, lo, hi);
  const double pw = W - L - R, ph = H - T - B;
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    os << "<polyline fill=\"none\" stroke=\"" << color(k) << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < s.y.size(); ++i) {
      if (!std::isfinite(s.y[i])) continue;
      const double x = L + (n > 1 ? pw * i / (n - 1) : pw / 2);
      const double y = T + ph * (1 - (s.y[i] - lo) / (hi - lo));
      os << csv::num(x) << ',' << csv::num(y) << ' ';
    }
    os << "\"/>\n";
    os << "<text x=\"" << W - R - 4 << "\" y=\"" << T + 14 * (k + 1) << "\" text-anchor=\"end\" font-size=\"11\" fill=\"" << color(k)
       << "\">" << esc(s.name) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

inline std::string bar_chart(const std::string& title, const std::vector<std::string>& labels, const std::vector<double>& values,
                             double hi = 1.0) {
  std::ostringstream os;
  os.imbue(std::locale::classic());
  frame(os, title, 0, hi);
  const double pw = W - L - R, ph = H - T - B;
  const double slot = labels.empty() ? pw : pw / labels.size();
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double v = std::clamp(values[i], 0.0, hi);
    const double h = ph * v / hi;
    const double x = L + slot * i + slot * 0.15;
    os << "<rect x=\"" << csv::num(x) << "\" y=\"" << csv::num(T + ph - h) << "\" width=\"" << csv::num(slot * 0.7) << "\" height=\""
       << csv::num(h) << "\" fill=\"" << color(i) << "\"/>\n";
    os << "<text x=\"" << csv::num(x + slot * 0.35) << "\" y=\"" << H - B + 16 << "\" text-anchor=\"middle\" font-size=\"11\">"
       << esc(labels[i]) << "</text>\n";
    os << "<text x=\"" << csv::num(x + slot * 0.35) << "\" y=\"" << csv::num(T + ph - h - 4)
       << "\" text-anchor=\"middle\" font-size=\"10\">" << csv::num(std::round(values[i] * 1000) / 1000) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace svg

inline void write_text(const fs::path& path, const std::string& s) {
  std::ofstream os(path, std::ios::binary);
  require(os.good(), ErrorCode::Io, "cannot write '" + path.string() + "'");
  os << s;
}

struct ReportSummary {
  int slices = 0;
  int hours = 0;
  double aggregate_satisfaction = 0;
  std::string text;
};

namespace detail {
inline std::vector<double> column(const csv::Table& t, const std::string& name) {
  const int c = t.column(name);
  require(c >= 0, ErrorCode::Parse, "missing column '" + name + "'");
  std::vector<double> out;
  for (const auto& r : t.rows) out.push_back(r[c].empty() ? std::nan("") : csv::to_double(r[c], name));
  return out;
}
}  // namespace detail

// Reads a finished run directory and writes report/ with the slice table, energy summary and utility series.
inline ReportSummary build_report(const fs::path& run_dir) {
  require(fs::is_directory(run_dir), ErrorCode::Io, "run directory '" + run_dir.string() + "' does not exist");
  const auto slices_path = run_dir / "slice_satisfaction.csv";
  require(fs::exists(slices_path), ErrorCode::Io, "missing input: " + slices_path.string());
  const auto st = csv::read(slices_path.string());
  const auto ledger_path = run_dir / "ledger.csv", sol_path = run_dir / "solutions.csv";
  csv::Table lt, so;
  if (fs::exists(ledger_path)) lt = csv::read(ledger_path.string());
  if (fs::exists(sol_path)) so = csv::read(sol_path.string());

  const fs::path out = run_dir / "report";
  ensure_dir(out);
  ReportSummary rs;
  std::ostringstream text;
  text.imbue(std::locale::classic());

  const auto samples = detail::column(st, "samples"), satisfied = detail::column(st, "satisfied"), phi = detail::column(st, "phi");
  const int slice_col = st.column("slice"), q_col = st.column("fiveqi");
  std::vector<std::string> labels;
  double n = 0, k = 0;
  csv::Writer table((out / "slice_table.csv").string(), "slice,fiveqi,samples,satisfied,phi");
  text << "slice  5qi  samples  satisfied  phi\n";
  for (std::size_t i = 0; i < st.rows.size(); ++i) {
    const auto& r = st.rows[i];
    table.line(csv::row(r[slice_col], r[q_col], r[st.column("samples")], r[st.column("satisfied")], phi[i]));
    labels.push_back("5QI " + r[q_col]);
    text << std::setw(5) << r[slice_col] << std::setw(5) << r[q_col] << std::setw(9) << r[st.column("samples")] << std::setw(11)
         << r[st.column("satisfied")] << "  " << std::fixed << std::setprecision(4) << phi[i] << '\n';
    n += samples[i];
    k += satisfied[i];
  }
  rs.slices = static_cast<int>(st.rows.size());
  rs.aggregate_satisfaction = n > 0 ? k / n : 1.0;
  text << "aggregate " << std::fixed << std::setprecision(4) << rs.aggregate_satisfaction << " (" << static_cast<long>(k) << "/"
       << static_cast<long>(n) << ")\n";
  write_text(out / "slice_satisfaction.svg", svg::bar_chart("Delay budget satisfaction per slice", labels, phi));

  if (!lt.rows.empty()) {
    const auto hour = detail::column(lt, "hour"), g = detail::column(lt, "g"), hp = detail::column(lt, "h_plus"),
               hm = detail::column(lt, "h_minus"), lc = detail::column(lt, "L_cons"), lvl = detail::column(lt, "level"),
               cost = detail::column(lt, "H");
    csv::Writer es((out / "energy_summary.csv").string(), "hour,demand_kwh,solar_kwh,grid_kwh,sold_kwh,level_kwh,cost");
    double tc = 0, tg = 0, ts = 0, td = 0;
    for (std::size_t i = 0; i < hour.size(); ++i) {
      es.line(csv::row(static_cast<int>(hour[i]), lc[i], g[i], hp[i], hm[i], lvl[i], cost[i]));
      tc += cost[i];
      tg += hp[i];
      ts += g[i];
      td += lc[i];
    }
    rs.hours = static_cast<int>(hour.size());
    text << "energy over " << rs.hours << " h: demand " << std::setprecision(3) << td << " kWh, solar " << ts << " kWh, grid " << tg
         << " kWh, cost " << tc << " $\n";
    write_text(out / "energy.svg", svg::line_chart("Energy demand and supply (kWh per hour)",
                                                   {{"demand", lc}, {"solar", g}, {"grid", hp}, {"storage level", lvl}}));
  }
  if (!so.rows.empty()) {
    const auto hour = detail::column(so, "hour"), H = detail::column(so, "H"), rev = detail::column(so, "rb_revenue");
    csv::Writer us((out / "utility_series.csv").string(), "hour,energy_cost,rb_revenue,utility,cumulative_utility");
    std::vector<double> util, cum;
    double c = 0;
    for (std::size_t i = 0; i < hour.size(); ++i) {
      const double u = rev[i] - H[i];
      c += u;
      util.push_back(u);
      cum.push_back(c);
      us.line(csv::row(static_cast<int>(hour[i]), H[i], rev[i], u, c));
    }
    text << "total utility " << std::setprecision(2) << c << " $\n";
    write_text(out / "utility.svg", svg::line_chart("Energy cost and total utility ($ per hour)", {{"energy cost", H}, {"utility", util}}));
  }
  rs.text = text.str();
  write_text(out / "summary.txt", rs.text);
  return rs;
}

}  // namespace fwa::report
