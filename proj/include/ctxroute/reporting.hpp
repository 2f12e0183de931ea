#pragma once

#include <cstdio>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ctxroute/metrics.hpp"
#include "ctxroute/sim.hpp"

namespace ctxroute {

namespace detail {

inline std::string fixed1(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.1f", v);
  return buf;
}

// Left-justified label column, right-justified numerics.
inline std::string pad_left(const std::string& s, size_t width) {
  return s.size() >= width ? s : std::string(width - s.size(), ' ') + s;
}
inline std::string pad_right(const std::string& s, size_t width) {
  return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

}  // namespace detail

inline std::string render_metrics_table(const std::vector<MetricsReport>& reports) {
  std::vector<std::vector<std::string>> rows;
  rows.push_back({"strategy", "M", "N_finish", "N_correct", "eta%", "rho%", "pass@1%",
                  "mean_turns", "mean_tokens"});
  for (const auto& r : reports) {
    rows.push_back({r.label, std::to_string(r.m), std::to_string(r.n_finish),
                    std::to_string(r.n_correct), r.search_efficiency.percent_1dp(),
                    r.terminal_precision ? r.terminal_precision->percent_1dp() : "-",
                    r.pass_at_1.percent_1dp(),
                    r.n_finish ? detail::fixed1(r.mean_turns) : "-",
                    r.n_finish ? detail::fixed1(r.mean_tokens) : "-"});
  }
  std::vector<size_t> widths(rows[0].size(), 0);
  for (const auto& row : rows)
    for (size_t i = 0; i < row.size(); ++i) widths[i] = std::max(widths[i], row[i].size());
  std::ostringstream out;
  for (const auto& row : rows) {
    for (size_t i = 0; i < row.size(); ++i) {
      if (i) out << "  ";
      out << (i == 0 ? detail::pad_right(row[i], widths[i])
                     : detail::pad_left(row[i], widths[i]));
    }
    out << "\n";
  }
  return out.str();
}

inline nlohmann::json metrics_to_json(const MetricsReport& r) {
  nlohmann::json j;
  j["label"] = r.label;
  j["m"] = r.m;
  j["n_finish"] = r.n_finish;
  j["n_correct"] = r.n_correct;
  j["excluded_unjudged"] = r.excluded_unjudged;
  j["eta"] = {{"num", r.search_efficiency.num},
              {"den", r.search_efficiency.den},
              {"pct", r.search_efficiency.percent_1dp()}};
  if (r.terminal_precision)
    j["rho"] = {{"num", r.terminal_precision->num},
                {"den", r.terminal_precision->den},
                {"pct", r.terminal_precision->percent_1dp()}};
  j["pass_at_1"] = {{"num", r.pass_at_1.num},
                    {"den", r.pass_at_1.den},
                    {"pct", r.pass_at_1.percent_1dp()}};
  if (r.n_finish) {
    j["mean_turns"] = r.mean_turns;
    j["mean_tokens"] = r.mean_tokens;
  }
  return j;
}

inline std::string render_aligned_table(const AlignedReport& rep) {
  std::ostringstream out;
  out << "aligned tasks (finished and judged under every strategy): "
      << rep.aligned_tasks.size() << "\n";
  if (rep.empty_alignment) {
    out << "  alignment set is empty; aligned precision undefined\n";
    return out.str();
  }
  size_t width = std::string("strategy").size();
  for (const auto& l : rep.labels) width = std::max(width, l.size());
  out << detail::pad_right("strategy", width) << "  aligned_correct  aligned_rho%\n";
  for (const auto& l : rep.labels) {
    const auto& p = rep.precision.at(l);
    out << detail::pad_right(l, width) << "  "
        << detail::pad_left(std::to_string(rep.aligned_correct.at(l)), 15) << "  "
        << detail::pad_left(p ? p->percent_1dp() : "-", 12) << "\n";
  }
  return out.str();
}

inline std::string render_transition_matrix(const TransitionMatrix& m) {
  std::ostringstream out;
  size_t width = 0;
  for (const auto& s : m.states) width = std::max(width, s.size());
  width = std::max(width, size_t(8));
  out << detail::pad_right("from\\to", width);
  for (const auto& s : m.states) out << "  " << detail::pad_left(s, width);
  out << "  " << detail::pad_left("n", 6) << "\n";
  for (size_t i = 0; i < m.states.size(); ++i) {
    out << detail::pad_right(m.states[i], width);
    auto row = m.row(i);
    for (size_t jcol = 0; jcol < m.states.size(); ++jcol)
      out << "  " << detail::pad_left(row ? (*row)[jcol].percent_1dp() : "-", width);
    out << "  " << detail::pad_left(std::to_string(m.row_totals[i]), 6) << "\n";
  }
  return out.str();
}

inline nlohmann::json transition_to_json(const TransitionMatrix& m) {
  nlohmann::json j;
  j["states"] = m.states;
  j["counts"] = m.counts;
  j["row_totals"] = m.row_totals;
  auto rows = nlohmann::json::array();
  for (size_t i = 0; i < m.states.size(); ++i) {
    auto row = m.row(i);
    if (!row) {
      rows.push_back(nullptr);
      continue;
    }
    auto jr = nlohmann::json::array();
    for (const auto& r : *row) jr.push_back({{"num", r.num}, {"den", r.den}});
    rows.push_back(jr);
  }
  j["rows"] = rows;
  return j;
}

inline std::string cost_scatter_csv(const CostReport& rep) {
  std::ostringstream out;
  out << "strategy,task_id,turns,total_tokens\n";
  for (const auto& p : rep.scatter)
    out << p.label << "," << p.task_id << "," << p.turns << "," << p.tokens << "\n";
  return out.str();
}

inline std::string sweep_csv(const std::vector<sim::CurveRow>& rows, const std::string& axis) {
  std::ostringstream out;
  out << "policy," << axis
      << ",m,n_finish,n_correct,eta_pct,rho_pct,pass1_pct,aligned_rho_pct,mean_turns,"
         "mean_tokens\n";
  for (const auto& r : rows) {
    out << r.policy << "," << r.axis_value << "," << r.report.m << "," << r.report.n_finish
        << "," << r.report.n_correct << "," << r.report.search_efficiency.percent_1dp() << ","
        << (r.report.terminal_precision ? r.report.terminal_precision->percent_1dp() : "") << ","
        << r.report.pass_at_1.percent_1dp() << ","
        << (r.aligned_precision_across_grid ? r.aligned_precision_across_grid->percent_1dp()
                                            : "")
        << "," << (r.report.n_finish ? detail::fixed1(r.report.mean_turns) : "") << ","
        << (r.report.n_finish ? detail::fixed1(r.report.mean_tokens) : "") << "\n";
  }
  return out.str();
}

}  // namespace ctxroute
