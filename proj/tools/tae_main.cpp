// tae: train, run and evaluate the target-aware low-light enhancement
// pipeline from the command line.

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "tae/tae.hpp"

namespace fs = std::filesystem;

namespace {

tae::EngineConfig load_engine_or_default(const std::string& path) {
  if (path.empty()) return tae::EngineConfig{};
  return tae::load_engine_config(path);
}

int cmd_train(const std::string& config_path, const std::string& dataset_flag,
              const std::string& out_dir) {
  tae::EngineConfig cfg = load_engine_or_default(config_path);
  const std::string dataset = dataset_flag.empty() ? cfg.paths.dataset : dataset_flag;
  if (dataset.empty()) throw std::runtime_error("train: no dataset (flag --dataset or paths.dataset)");
  const auto records = tae::load_dataset(dataset, "train");
  const auto result = tae::train_run(cfg, records, out_dir);
  std::printf("trained %d epoch(s) on %zu sequence(s); final checkpoint: %s\n", cfg.train.epochs,
              records.size(), result.final_checkpoint.string().c_str());
  return 0;
}

int cmd_enhance(const std::string& ckpt, const std::string& in_dir, const std::string& out_dir,
                const std::string& mode_flag, bool dump_mask, int jobs) {
  const tae::CheckpointData data = tae::read_checkpoint(ckpt);
  tae::EngineConfig cfg;
  if (!data.config_json.empty()) {
    cfg = tae::engine_config_from_json(tae::Json::parse(data.config_json));
  }
  tae::TaeModel model = tae::TaeModel::init(0, cfg.enhancement.alpha_source);
  model.load(data);
  const tae::EnhanceMode mode = mode_flag.empty() ? cfg.mode : tae::parse_mode(mode_flag);

  std::vector<fs::path> inputs;
  for (const auto& entry : fs::directory_iterator(in_dir)) {
    if (entry.is_regular_file() && tae::is_image_file(entry.path())) inputs.push_back(entry.path());
  }
  std::sort(inputs.begin(), inputs.end());
  if (inputs.empty()) throw std::runtime_error("enhance: no images in " + in_dir);
  fs::create_directories(out_dir);

  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::string first_error;
  std::mutex err_mutex;
  auto worker = [&]() {
    while (!failed) {
      const std::size_t i = next.fetch_add(1);
      if (i >= inputs.size()) break;
      try {
        const tae::Tensor image = tae::read_image(inputs[i]);
        const tae::EnhanceResult r = model.enhance(image, mode, nullptr);
        const fs::path out_path = fs::path(out_dir) / inputs[i].filename();
        tae::write_image(out_path, r.enhanced);
        if (dump_mask) {
          fs::path obj = out_path;
          obj.replace_extension(".obj.png");
          tae::write_gray_image(obj, r.objectness);
          fs::path mask = out_path;
          mask.replace_extension(".mask.png");
          tae::write_gray_image(mask, r.mask);
        }
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(err_mutex);
        if (first_error.empty()) first_error = e.what();
        failed = true;
      }
    }
  };
  const int workers = std::max(1, jobs);
  std::vector<std::thread> pool;
  for (int t = 0; t < workers; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (failed) throw std::runtime_error("enhance: " + first_error);
  std::printf("enhanced %zu image(s) in mode %s -> %s\n", inputs.size(), tae::to_string(mode),
              out_dir.c_str());
  return 0;
}

tae::TrackerFactory make_tracker_factory(const std::string& name, int template_size,
                                         int search_radius) {
  if (name == "ncc") {
    return [template_size, search_radius](const tae::SequenceRecord&) {
      return tae::ncc_tracker(template_size, search_radius);
    };
  }
  if (name == "oracle") {
    return [](const tae::SequenceRecord& seq) -> std::unique_ptr<tae::TrackerAdapter> {
      return std::make_unique<tae::OracleTracker>(seq.boxes);
    };
  }
  if (name == "static") {
    return [](const tae::SequenceRecord&) -> std::unique_ptr<tae::TrackerAdapter> {
      return std::make_unique<tae::StaticTracker>();
    };
  }
  throw std::runtime_error("unknown tracker '" + name + "' (ncc|oracle|static)");
}

int cmd_eval(const std::string& dataset, const std::string& split, const std::string& tracker_name,
             int template_size, int search_radius, const std::string& enhance_ckpt,
             const std::string& mode_flag, const std::string& report_path, int jobs,
             int attribute) {
  auto records = tae::load_dataset(dataset, split);
  if (attribute >= 0) {
    std::vector<tae::SequenceRecord> filtered;
    for (auto& r : records) {
      if (static_cast<std::size_t>(attribute) < r.attributes.size() && r.attributes[attribute]) {
        filtered.push_back(std::move(r));
      }
    }
    records = std::move(filtered);
    if (records.empty()) throw std::runtime_error("eval: no sequences carry attribute flag " +
                                                  std::to_string(attribute));
  }
  const tae::TrackerFactory factory = make_tracker_factory(tracker_name, template_size, search_radius);

  std::vector<tae::NamedReport> rows;
  tae::Json config_echo;
  tae::TaeModel model;
  if (!enhance_ckpt.empty()) {
    const tae::CheckpointData data = tae::read_checkpoint(enhance_ckpt);
    tae::EngineConfig cfg;
    if (!data.config_json.empty()) {
      cfg = tae::engine_config_from_json(tae::Json::parse(data.config_json));
    }
    model = tae::TaeModel::init(0, cfg.enhancement.alpha_source);
    model.load(data);
    const tae::EnhanceMode mode = mode_flag.empty() ? cfg.mode : tae::parse_mode(mode_flag);
    config_echo = tae::to_json(cfg);

    rows.push_back({tracker_name, tae::run_ope(records, factory, std::nullopt, jobs).report});
    const tae::EnhancerHandle enh{&model, mode};
    rows.push_back({tracker_name + "+enh", tae::run_ope(records, factory, enh, jobs).report});
  } else {
    rows.push_back({tracker_name, tae::run_ope(records, factory, std::nullopt, jobs).report});
  }

  const fs::path report(report_path);
  if (report.has_parent_path()) fs::create_directories(report.parent_path());
  tae::write_report_json(report, rows, config_echo);
  fs::path csv = report;
  csv.replace_extension(".csv");
  tae::write_comparison_csv(csv, rows);
  const fs::path base = report.parent_path() / report.stem();
  for (const auto& row : rows) tae::write_report_curves(base, row.condition, row.report);

  for (const auto& row : rows) {
    std::printf("%-12s  S_AUC %.4f  P %.4f  NormP %.4f\n", row.condition.c_str(), row.report.auc,
                row.report.p20, row.report.normp);
  }
  return 0;
}

int cmd_synth(const std::string& out_dir, const std::string& config_path) {
  tae::SynthConfig cfg;
  if (!config_path.empty()) cfg = tae::load_synth_config(config_path);
  tae::synth_dataset(cfg, out_dir);
  std::printf("generated %d train / %d test sequence(s) under %s\n", cfg.train_sequences,
              cfg.test_sequences, out_dir.c_str());
  return 0;
}

int cmd_ablate(const std::string& dataset, const std::string& out_dir,
               const std::string& config_path, int template_size, int search_radius, int jobs) {
  const tae::EngineConfig cfg = load_engine_or_default(config_path);
  tae::AblationOptions opts;
  opts.template_size = template_size;
  opts.search_radius = search_radius;
  opts.jobs = jobs;
  const tae::AblationResult result = tae::run_ablation(cfg, dataset, out_dir, opts);
  std::printf("%-10s  %6s  %6s  %6s\n", "condition", "S_AUC", "P", "NormP");
  for (const auto& row : result.rows) {
    std::printf("%-10s  %.4f  %.4f  %.4f\n", row.condition.c_str(), row.report.auc,
                row.report.p20, row.report.normp);
  }
  std::printf("table written to %s\n", (fs::path(out_dir) / "ablation.csv").string().c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"TAE target-aware low-light enhancement engine"};
  app.require_subcommand(1);

  std::string config_path, dataset, out_dir, ckpt, in_dir, mode_flag, report_path = "report.json";
  std::string tracker_name = "ncc", split = "test";
  bool dump_mask = false;
  int jobs = 1, template_size = 25, search_radius = 8, attribute = -1;

  auto* train = app.add_subcommand("train", "Train the enhancer");
  train->add_option("--config", config_path, "Engine config JSON");
  train->add_option("--dataset", dataset, "Dataset root (overrides paths.dataset)");
  train->add_option("--out", out_dir, "Checkpoint/stats output directory")->required();

  auto* enhance = app.add_subcommand("enhance", "Batch-enhance a directory of images");
  enhance->add_option("--ckpt", ckpt, "Checkpoint file")->required();
  enhance->add_option("--in", in_dir, "Input image directory")->required();
  enhance->add_option("--out", out_dir, "Output directory")->required();
  enhance->add_option("--mode", mode_flag, "baseline|TA|TA+MC (default: checkpoint config)");
  enhance->add_flag("--dump-mask", dump_mask, "Also write objectness/mask grayscale images");
  enhance->add_option("--jobs", jobs, "Worker threads");

  auto* eval = app.add_subcommand("eval", "One-pass tracking evaluation");
  eval->add_option("--dataset", dataset, "Dataset root")->required();
  eval->add_option("--split", split, "train|test (default test)");
  eval->add_option("--tracker", tracker_name, "ncc|oracle|static");
  eval->add_option("--template-size", template_size, "NCC template side, px");
  eval->add_option("--search-radius", search_radius, "NCC search radius, px");
  eval->add_option("--enhance", ckpt, "Checkpoint; evaluates with and without enhancement");
  eval->add_option("--mode", mode_flag, "Enhancement mode override");
  eval->add_option("--report", report_path, "Report JSON path");
  eval->add_option("--jobs", jobs, "Worker threads");
  eval->add_option("--attribute", attribute, "Keep only sequences with this attribute flag (0-11)");

  auto* synth = app.add_subcommand("synth", "Generate a synthetic benchmark");
  synth->add_option("--out", out_dir, "Output dataset root")->required();
  synth->add_option("--config", config_path, "Synth config JSON");

  auto* ablate = app.add_subcommand("ablate", "Run the component ablation experiment");
  ablate->add_option("--dataset", dataset, "Dataset root")->required();
  ablate->add_option("--out", out_dir, "Output directory")->required();
  ablate->add_option("--config", config_path, "Engine config JSON");
  ablate->add_option("--template-size", template_size, "NCC template side, px");
  ablate->add_option("--search-radius", search_radius, "NCC search radius, px");
  ablate->add_option("--jobs", jobs, "Worker threads");

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed()) return cmd_train(config_path, dataset, out_dir);
    if (enhance->parsed()) return cmd_enhance(ckpt, in_dir, out_dir, mode_flag, dump_mask, jobs);
    if (eval->parsed()) {
      return cmd_eval(dataset, split, tracker_name, template_size, search_radius, ckpt, mode_flag,
                      report_path, jobs, attribute);
    }
    if (synth->parsed()) return cmd_synth(out_dir, config_path);
    if (ablate->parsed()) {
      return cmd_ablate(dataset, out_dir, config_path, template_size, search_radius, jobs);
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "tae: error: %s\n", e.what());
    return 1;
  }
  return 0;
}
