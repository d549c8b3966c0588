#include <gtest/gtest.h>

#include <fstream>

#include "irisvd/config.hpp"
#include "scratch_dir.hpp"

using namespace irisvd;

TEST(Config, DefaultsMatchPipelineConstants) {
  const PipelineConfig cfg;
  EXPECT_EQ(cfg.segmentation.threshold, 70);
  EXPECT_EQ(cfg.segmentation.min_area, 2500u);
  EXPECT_EQ(cfg.train.lr0, 0.2);
  EXPECT_EQ(cfg.train.lr_inc, 1.05);
  EXPECT_EQ(cfg.train.max_epochs, 50000u);
  EXPECT_EQ(cfg.train.mse_goal, 5e-7);
  EXPECT_EQ(cfg.train.min_grad, 1e-9);
  EXPECT_EQ(cfg.experiment.epoch_cap, 8000u);
  EXPECT_EQ(cfg.experiment.class_counts, (std::vector<std::size_t>{3, 4, 5, 6, 7, 8, 9, 10, 20, 40, 50}));
  EXPECT_EQ(cfg.experiment.dims, (std::vector<std::size_t>{3, 10, 20, 40}));
  EXPECT_EQ(cfg.templ.rows, 40);
  EXPECT_EQ(cfg.templ.block, 3);
}

TEST(Config, AppliesKeyValueText) {
  PipelineConfig cfg;
  apply_config_text(cfg,
                    "# comment\n"
                    "segmentation.threshold = 60\n"
                    "  train.lr0=0.5   # trailing\n"
                    "\n"
                    "experiment.dims = 3, 20\n"
                    "synth.bright_spot = true\n"
                    "iris.default_annulus_width = 55.5\n");
  EXPECT_EQ(cfg.segmentation.threshold, 60);
  EXPECT_EQ(cfg.train.lr0, 0.5);
  EXPECT_EQ(cfg.experiment.dims, (std::vector<std::size_t>{3, 20}));
  EXPECT_TRUE(cfg.synth.bright_spot);
  EXPECT_EQ(cfg.iris.default_annulus_width, 55.5);
}

TEST(Config, UnknownKeyIsNamed) {
  PipelineConfig cfg;
  try {
    apply_config_text(cfg, "segmentation.treshold = 60\n");
    FAIL();
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("segmentation.treshold"), std::string::npos);
    EXPECT_NE(msg.find("line 1"), std::string::npos);
  }
}

TEST(Config, BadValues) {
  PipelineConfig cfg;
  EXPECT_THROW(set_config_value(cfg, "segmentation.threshold", "abc"), ConfigError);
  EXPECT_THROW(set_config_value(cfg, "train.lr0", "0.2x"), ConfigError);
  EXPECT_THROW(set_config_value(cfg, "synth.jitter", "maybe"), ConfigError);
  EXPECT_THROW(set_config_value(cfg, "experiment.dims", ""), ConfigError);
  EXPECT_THROW(apply_config_text(cfg, "no equals sign\n"), ConfigError);
}

TEST(Config, EveryKeyIsSettable) {
  for (const auto& key : config_keys()) {
    PipelineConfig cfg;
    const bool is_bool = key == "synth.bright_spot" || key == "synth.jitter";
    EXPECT_NO_THROW(set_config_value(cfg, key, is_bool ? "false" : "3")) << key;
  }
  EXPECT_GE(config_keys().size(), 30u);
}

TEST(Config, FileLoading) {
  ScratchDir dir;
  std::ofstream(dir / "cfg.txt") << "features.k = 10\n";
  PipelineConfig cfg;
  apply_config_file(cfg, dir / "cfg.txt");
  EXPECT_EQ(cfg.k, 10u);
  EXPECT_THROW(apply_config_file(cfg, dir / "missing.txt"), IoError);
}
