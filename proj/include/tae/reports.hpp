#pragma once

// Evaluation report artifacts: JSON (full curves + scalars + config echo),
// CSV scalar table with deltas, and threshold/value TSV plot data.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tae/metrics.hpp"

namespace tae {

struct NamedReport {
  std::string condition;
  MetricReport report;
};

namespace detail {

inline std::string iso_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

}  // namespace detail

inline void write_plot_tsv(const std::filesystem::path& path,
                           const std::vector<double>& values, double (*threshold)(std::size_t)) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw std::runtime_error("report: cannot open " + path.string());
  f << "threshold\tvalue\n";
  char row[64];
  for (std::size_t i = 0; i < values.size(); ++i) {
    std::snprintf(row, sizeof(row), "%.6f\t%.9f\n", threshold(i), values[i]);
    f << row;
  }
}

inline void write_report_curves(const std::filesystem::path& base, const std::string& condition,
                                const MetricReport& r) {
  const std::string stem = base.string() + "_" + condition;
  write_plot_tsv(stem + "_success.tsv", r.success, success_threshold);
  write_plot_tsv(stem + "_precision.tsv", r.precision, precision_threshold);
  write_plot_tsv(stem + "_norm_precision.tsv", r.norm_precision, norm_precision_threshold);
}

// Rows shaped like the benchmark comparison tables: scalar, delta vs the
// first row (percentage points), for each of the three metrics.
inline void write_comparison_csv(const std::filesystem::path& path,
                                 const std::vector<NamedReport>& rows) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw std::runtime_error("report: cannot open " + path.string());
  f << "condition,s_auc,delta_s,p,delta_p,normp,delta_np\n";
  char row[256];
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i].report;
    if (i == 0) {
      std::snprintf(row, sizeof(row), "%s,%.4f,-,%.4f,-,%.4f,-\n", rows[i].condition.c_str(),
                    r.auc, r.p20, r.normp);
    } else {
      const auto& base = rows[0].report;
      std::snprintf(row, sizeof(row), "%s,%.4f,%.1f,%.4f,%.1f,%.4f,%.1f\n",
                    rows[i].condition.c_str(), r.auc, (r.auc - base.auc) * 100.0, r.p20,
                    (r.p20 - base.p20) * 100.0, r.normp, (r.normp - base.normp) * 100.0);
    }
    f << row;
  }
}

inline void write_report_json(const std::filesystem::path& path,
                              const std::vector<NamedReport>& rows,
                              const nlohmann::ordered_json& config_echo) {
  nlohmann::ordered_json j;
  j["metadata"] = {{"generated_at", detail::iso_timestamp()}};
  j["config"] = config_echo;
  j["conditions"] = nlohmann::ordered_json::array();
  for (const auto& row : rows) {
    nlohmann::ordered_json c = metrics_to_json(row.report);
    c["condition"] = row.condition;
    j["conditions"].push_back(c);
  }
  if (rows.size() > 1) {
    const auto& base = rows[0].report;
    j["deltas_vs_" + rows[0].condition] = nlohmann::ordered_json::array();
    for (std::size_t i = 1; i < rows.size(); ++i) {
      j["deltas_vs_" + rows[0].condition].push_back(
          {{"condition", rows[i].condition},
           {"s_auc", rows[i].report.auc - base.auc},
           {"p", rows[i].report.p20 - base.p20},
           {"normp", rows[i].report.normp - base.normp}});
    }
  }
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw std::runtime_error("report: cannot open " + path.string());
  f << j.dump(2) << "\n";
}

}  // namespace tae
