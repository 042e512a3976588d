#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "tae/checkpoint.hpp"
#include "tae/config.hpp"
#include "tae/image_io.hpp"
#include "tae/model.hpp"
#include "tae/synth.hpp"

namespace fs = std::filesystem;

namespace {

const char* kCli = TAE_CLI_PATH;

fs::path fresh_dir(const std::string& tag) {
  const fs::path dir = fs::temp_directory_path() / ("tae_cli_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

int run(const std::string& args) {
  const std::string cmd = std::string(kCli) + " " + args + " >/dev/null 2>&1";
  return std::system(cmd.c_str());
}

std::string file_bytes(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
}

void write_small_synth_config(const fs::path& path, int train_seqs, int test_seqs, int frames) {
  tae::SynthConfig cfg;
  cfg.seed = 101;
  cfg.train_sequences = train_seqs;
  cfg.test_sequences = test_seqs;
  cfg.frames = frames;
  cfg.width = 48;
  cfg.height = 48;
  cfg.format = "ppm";
  tae::save_config(path, tae::to_json(cfg));
}

TEST(Cli, SynthThenOracleEvalHitsPerfectScore) {
  const fs::path dir = fresh_dir("synth_eval");
  const fs::path synth_cfg = dir / "synth.json";
  write_small_synth_config(synth_cfg, 1, 2, 8);
  ASSERT_EQ(run("synth --out " + (dir / "data").string() + " --config " + synth_cfg.string()), 0);
  ASSERT_TRUE(fs::exists(dir / "data" / "test.txt"));

  const fs::path report = dir / "report.json";
  ASSERT_EQ(run("eval --dataset " + (dir / "data").string() + " --tracker oracle --report " +
                report.string()),
            0);
  ASSERT_TRUE(fs::exists(report));
  const auto j = nlohmann::ordered_json::parse(file_bytes(report));
  const double auc = j["conditions"][0]["scalars"]["s_auc"].get<double>();
  EXPECT_NEAR(auc, 20.0 / 21.0, 1e-9);
  EXPECT_NEAR(j["conditions"][0]["scalars"]["p"].get<double>(), 1.0, 1e-12);
  // plot data files exist and carry the full grids
  EXPECT_TRUE(fs::exists(dir / "report_oracle_success.tsv"));
  EXPECT_TRUE(fs::exists(dir / "report_oracle_precision.tsv"));
  EXPECT_TRUE(fs::exists(dir / "report_oracle_norm_precision.tsv"));
}

TEST(Cli, TrainZeroEpochsEqualsInit) {
  const fs::path dir = fresh_dir("train0");
  const fs::path synth_cfg = dir / "synth.json";
  write_small_synth_config(synth_cfg, 2, 1, 4);
  ASSERT_EQ(run("synth --out " + (dir / "data").string() + " --config " + synth_cfg.string()), 0);

  tae::EngineConfig cfg;
  cfg.seed = 7;
  cfg.train.epochs = 0;
  cfg.train.input_size = 32;
  tae::save_config(dir / "engine.json", tae::to_json(cfg));
  ASSERT_EQ(run("train --config " + (dir / "engine.json").string() + " --dataset " +
                (dir / "data").string() + " --out " + (dir / "out").string()),
            0);

  const auto data = tae::read_checkpoint(dir / "out" / "ckpt_final.bin");
  tae::TaeModel loaded = tae::TaeModel::init(1234);
  loaded.load(data);
  const tae::TaeModel fresh = tae::TaeModel::init(cfg.seed);
  const auto got = loaded.named_params();
  const auto want = fresh.named_params();
  for (std::size_t k = 0; k < got.size(); ++k) {
    for (std::size_t i = 0; i < got[k].second.size(); ++i) {
      ASSERT_EQ(got[k].second[i], want[k].second[i]) << got[k].first;
    }
  }
}

TEST(Cli, EnhancePreservesCountAndDims) {
  const fs::path dir = fresh_dir("enhance");
  const fs::path in = dir / "in";
  fs::create_directories(in);
  for (int i = 0; i < 3; ++i) {
    tae::write_image(in / ("img_" + std::to_string(i) + ".ppm"),
                     tae::Tensor::full({3, 20, 26}, 0.05 + 0.01 * i));
  }
  tae::TaeModel model = tae::TaeModel::init(3);
  const fs::path ckpt = dir / "model.bin";
  tae::write_checkpoint(ckpt, model.named_params(), tae::to_json(tae::EngineConfig{}).dump());

  ASSERT_EQ(run("enhance --ckpt " + ckpt.string() + " --in " + in.string() + " --out " +
                (dir / "out").string() + " --mode TA+MC --dump-mask --jobs 2"),
            0);
  int count = 0;
  for (const auto& entry : fs::directory_iterator(dir / "out")) {
    if (entry.path().extension() == ".ppm") {
      ++count;
      const auto [w, h] = tae::read_image_size(entry.path());
      EXPECT_EQ(w, 26u);
      EXPECT_EQ(h, 20u);
    }
  }
  EXPECT_EQ(count, 3);
  EXPECT_TRUE(fs::exists(dir / "out" / "img_0.obj.png"));
  EXPECT_TRUE(fs::exists(dir / "out" / "img_0.mask.png"));
}

TEST(Cli, ErrorsUseParseablePrefix) {
  const fs::path dir = fresh_dir("errors");
  const std::string cmd = std::string(kCli) + " eval --dataset /nonexistent --report " +
                          (dir / "r.json").string() + " 2>" + (dir / "err.txt").string() +
                          " >/dev/null";
  EXPECT_NE(std::system(cmd.c_str()), 0);
  const std::string err = file_bytes(dir / "err.txt");
  EXPECT_EQ(err.rfind("tae: error: ", 0), 0u) << err;
}

TEST(Cli, ReportsAreByteReproducible) {
  const fs::path dir = fresh_dir("repro");
  const fs::path synth_cfg = dir / "synth.json";
  write_small_synth_config(synth_cfg, 1, 1, 6);
  ASSERT_EQ(run("synth --out " + (dir / "data").string() + " --config " + synth_cfg.string()), 0);
  ASSERT_EQ(run("eval --dataset " + (dir / "data").string() + " --tracker ncc --report " +
                (dir / "r1.json").string()),
            0);
  ASSERT_EQ(run("eval --dataset " + (dir / "data").string() + " --tracker ncc --report " +
                (dir / "r2.json").string()),
            0);
  // CSV and TSV outputs carry no timestamps and must match byte for byte
  EXPECT_EQ(file_bytes(dir / "r1.csv"), file_bytes(dir / "r2.csv"));
  EXPECT_EQ(file_bytes(dir / "r1_ncc_success.tsv"), file_bytes(dir / "r2_ncc_success.tsv"));
  // JSON matches after dropping the metadata timestamp
  auto j1 = nlohmann::ordered_json::parse(file_bytes(dir / "r1.json"));
  auto j2 = nlohmann::ordered_json::parse(file_bytes(dir / "r2.json"));
  j1.erase("metadata");
  j2.erase("metadata");
  EXPECT_EQ(j1.dump(), j2.dump());
}

TEST(Cli, SynthIsByteDeterministic) {
  const fs::path dir = fresh_dir("synthdet");
  const fs::path synth_cfg = dir / "synth.json";
  write_small_synth_config(synth_cfg, 1, 1, 3);
  ASSERT_EQ(run("synth --out " + (dir / "a").string() + " --config " + synth_cfg.string()), 0);
  ASSERT_EQ(run("synth --out " + (dir / "b").string() + " --config " + synth_cfg.string()), 0);
  for (const auto& entry : fs::recursive_directory_iterator(dir / "a")) {
    if (!entry.is_regular_file()) continue;
    const fs::path rel = fs::relative(entry.path(), dir / "a");
    ASSERT_EQ(file_bytes(entry.path()), file_bytes(dir / "b" / rel)) << rel;
  }
}

}  // namespace
