#pragma once

// The component ablation experiment: train the enhancer in baseline, TA and
// TA+MC modes on the train split, then evaluate the reference tracker on the
// test split under four conditions (no enhancement plus the three modes).

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "tae/config.hpp"
#include "tae/dataset.hpp"
#include "tae/ope.hpp"
#include "tae/reports.hpp"
#include "tae/tracker.hpp"
#include "tae/train.hpp"

namespace tae {

struct AblationOptions {
  int template_size = 25;
  int search_radius = 8;
  int jobs = 1;
};

struct AblationResult {
  std::vector<NamedReport> rows;  // none, baseline, TA, TA+MC

  const MetricReport& condition(const std::string& name) const {
    for (const auto& r : rows)
      if (r.condition == name) return r.report;
    throw std::invalid_argument("ablation: unknown condition '" + name + "'");
  }
};

inline AblationResult run_ablation(const EngineConfig& base_cfg,
                                   const std::filesystem::path& dataset_root,
                                   const std::filesystem::path& out_dir,
                                   const AblationOptions& opts = {}) {
  std::filesystem::create_directories(out_dir);
  const auto train_records = load_dataset(dataset_root, "train");
  const auto test_records = load_dataset(dataset_root, "test");

  const TrackerFactory make_ncc = [&](const SequenceRecord&) {
    return ncc_tracker(opts.template_size, opts.search_radius);
  };

  AblationResult result;
  result.rows.push_back({"none", run_ope(test_records, make_ncc, std::nullopt, opts.jobs).report});

  const EnhanceMode modes[] = {EnhanceMode::kBaseline, EnhanceMode::kTargetAware,
                               EnhanceMode::kTargetAwareMultiCurve};
  std::vector<TrainResult> trained;
  for (EnhanceMode mode : modes) {
    EngineConfig cfg = base_cfg;
    cfg.mode = mode;
    std::string dir_name = std::string("train_") + to_string(mode);
    std::replace(dir_name.begin(), dir_name.end(), '+', '_');
    trained.push_back(train_run(cfg, train_records, out_dir / dir_name,
                                /*write_epoch_checkpoints=*/false));
    const EnhancerHandle enh{&trained.back().model, mode};
    result.rows.push_back(
        {to_string(mode), run_ope(test_records, make_ncc, enh, opts.jobs).report});
  }

  write_comparison_csv(out_dir / "ablation.csv", result.rows);
  write_report_json(out_dir / "ablation.json", result.rows, to_json(base_cfg));
  return result;
}

}  // namespace tae
