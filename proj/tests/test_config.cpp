#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "omega/config.hpp"

using namespace omega;

namespace {

const char* kMinimal = R"({
  "task": { "type": "synthetic", "num_shared_classes": 4, "num_unknown_classes": 2 },
  "train": { "max_epochs": 5, "seed": 9 }
})";

}  // namespace

TEST_CASE("parse_config: defaults and explicit values") {
  ExperimentConfig cfg = parse_config(kMinimal);
  CHECK(cfg.task.type == TaskConfig::Type::kSynthetic);
  CHECK(cfg.task.synthetic.num_shared_classes == 4);
  CHECK(cfg.train.max_epochs == 5);
  CHECK(cfg.train.seed == 9);
  // Paper defaults survive untouched.
  CHECK(cfg.train.tau == 0.05);
  CHECK(cfg.train.eta1 == 0.05);
  CHECK(cfg.train.eta2 == 0.1);
  CHECK(cfg.train.margin == 0.5);
  CHECK(cfg.train.ratio == 0.15);
  CHECK(cfg.train.z_fraction == 0.5);
  CHECK(cfg.train.batch_size == 32);
  CHECK(cfg.train.base_lr == 0.01);
  CHECK(cfg.train.momentum == 0.9);
  CHECK(cfg.train.lr_gamma == 10.0);
  CHECK(cfg.train.lr_power == -0.75);
  CHECK(cfg.model.widths == std::vector<int>{64, 64});
  CHECK(cfg.model.embed_dim == 32);
}

TEST_CASE("parse_config: strictness") {
  CHECK_THROWS_AS(parse_config("not json"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"trian": {}})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"train": {"learning_rate": 0.1}})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"task": {"type": "imagenet"}})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"train": {"tau": "fast"}})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"train": {"ratio": 0.8}})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"train": {"tau": -1}})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"task": {"type": "csv"}})"), ConfigError);
}

TEST_CASE("parse_config: dotted overrides and seed flag") {
  ExperimentConfig cfg = parse_config(kMinimal, {"train.ratio=0", "train.eta2=0.0"});
  CHECK(cfg.train.ratio == 0.0);
  CHECK(cfg.train.eta2 == 0.0);

  ExperimentConfig seeded = parse_config(kMinimal, {}, 777);
  CHECK(seeded.train.seed == 777);

  // Overridden keys still live under the strict schema.
  CHECK_THROWS_AS(parse_config(kMinimal, {"train.bogus=1"}), ConfigError);
  CHECK_THROWS_AS(parse_config(kMinimal, {"train.ratio"}), ConfigError);

  ExperimentConfig str = parse_config(kMinimal, {"eval.out_dir=runs/x"});
  CHECK(str.eval.out_dir == "runs/x");
}

TEST_CASE("parse_config: batch/lr scaling rule") {
  // Batch override without an explicit lr scales by sqrt(batch/32).
  ExperimentConfig scaled = parse_config(kMinimal, {"train.batch_size=128"});
  CHECK(scaled.train.base_lr == doctest::Approx(0.01 * std::sqrt(4.0)).epsilon(1e-12));

  // An explicit lr suppresses the scaling.
  ExperimentConfig pinned =
      parse_config(kMinimal, {"train.batch_size=128", "train.base_lr=0.01"});
  CHECK(pinned.train.base_lr == 0.01);

  // batch_size = 32 spelled out changes nothing.
  ExperimentConfig same = parse_config(kMinimal, {"train.batch_size=32"});
  CHECK(same.train.base_lr == 0.01);
}

TEST_CASE("to_json_string round-trips through the strict parser") {
  ExperimentConfig cfg = parse_config(kMinimal, {"sweep.seeds=[1,2,3]", "train.ratio=0.2"});
  ExperimentConfig back = parse_config(cfg.to_json_string());
  CHECK(back.train.ratio == cfg.train.ratio);
  CHECK(back.train.seed == cfg.train.seed);
  CHECK(back.sweep.seeds == cfg.sweep.seeds);
  CHECK(back.task.synthetic.num_shared_classes == cfg.task.synthetic.num_shared_classes);
  CHECK(back.eval.out_dir == cfg.eval.out_dir);
}
