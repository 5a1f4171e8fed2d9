// Process-level checks of the CLI: exit codes, artifact layout, determinism.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "omega/data.hpp"

namespace fs = std::filesystem;

namespace {

const fs::path kWork = fs::temp_directory_path() / "omega_cli_tests";

int run(const std::string& args) {
  const std::string cmd = std::string(OMEGA_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

fs::path write_config(const std::string& name, const std::string& body) {
  fs::create_directories(kWork);
  const fs::path path = kWork / name;
  std::ofstream out(path);
  out << body;
  return path;
}

const char* kSmoke = R"({
  "task": { "type": "synthetic", "num_shared_classes": 3, "num_unknown_classes": 2,
            "input_dim": 6, "omega": 4.0, "openness": 0.4,
            "source_n_max": 60, "target_n_max": 40 },
  "model": { "widths": [16], "embed_dim": 8 },
  "train": { "batch_size": 8, "max_epochs": 2, "seed": 7 },
  "eval": { "cadence": 1, "out_dir": "PLACEHOLDER" }
})";

std::string smoke_config(const std::string& out_dir) {
  std::string body = kSmoke;
  body.replace(body.find("PLACEHOLDER"), 11, out_dir);
  return body;
}

}  // namespace

TEST_CASE("generate: artifacts, refusal without --force, determinism") {
  fs::remove_all(kWork);
  const fs::path cfg = write_config("gen.json", smoke_config((kWork / "unused").string()));
  const fs::path out1 = kWork / "gen1";
  const fs::path out2 = kWork / "gen2";

  CHECK(run("generate --config " + cfg.string() + " --out " + out1.string()) == 0);
  CHECK(fs::exists(out1 / "source.csv"));
  CHECK(fs::exists(out1 / "target.csv"));
  CHECK(fs::exists(out1 / "manifest.json"));

  // Occupied directory refused without --force.
  CHECK(run("generate --config " + cfg.string() + " --out " + out1.string()) == 3);
  CHECK(run("generate --config " + cfg.string() + " --out " + out1.string() + " --force") == 0);

  CHECK(run("generate --config " + cfg.string() + " --out " + out2.string()) == 0);
  CHECK(slurp(out1 / "source.csv") == slurp(out2 / "source.csv"));
  CHECK(slurp(out1 / "target.csv") == slurp(out2 / "target.csv"));

  // The manifest's realized imbalance matches a recount from the emitted CSV.
  const auto manifest = nlohmann::json::parse(slurp(out1 / "manifest.json"));
  omega::DomainDataset source =
      omega::load_feature_csv((out1 / "source.csv").string(), omega::Role::kSource, 3);
  std::vector<long> counts(3, 0);
  for (const int y : source.labels) ++counts[static_cast<std::size_t>(y - 1)];
  long lo = counts[0], hi = counts[0];
  for (const long c : counts) {
    lo = std::min(lo, c);
    hi = std::max(hi, c);
  }
  const double recounted = static_cast<double>(hi) / static_cast<double>(lo);
  CHECK(manifest.at("omega_realized_source").get<double>() == doctest::Approx(recounted));
  CHECK(recounted == doctest::Approx(4.0).epsilon(0.1));  // requested omega within rounding
}

TEST_CASE("train: smoke run emits the full artifact set") {
  const fs::path cfg = write_config("train.json", smoke_config((kWork / "run1").string()));
  CHECK(run("train --config " + cfg.string()) == 0);

  const fs::path dir = kWork / "run1";
  for (const char* name :
       {"config.json", "run_info.txt", "history.csv", "metrics.csv", "model.ckpt",
        "report.txt"}) {
    CHECK_MESSAGE(fs::exists(dir / name), name);
  }

  // One header plus max_epochs rows.
  std::istringstream history(slurp(dir / "history.csv"));
  std::string line;
  int rows = 0;
  while (std::getline(history, line)) ++rows;
  CHECK(rows == 3);

  CHECK(slurp(dir / "run_info.txt").find("seed 7") != std::string::npos);
}

TEST_CASE("train: --seed and --set reach the run, repeated seeds reproduce bytes") {
  const fs::path cfg = write_config("train2.json", smoke_config((kWork / "runA").string()));
  CHECK(run("train --config " + cfg.string() + " --seed 11 --set train.ratio=0") == 0);
  CHECK(slurp(kWork / "runA" / "run_info.txt").find("seed 11") != std::string::npos);
  CHECK(slurp(kWork / "runA" / "config.json").find("\"ratio\": 0") != std::string::npos);

  CHECK(run("train --config " + cfg.string() + " --seed 11 --set train.ratio=0 --out " +
            (kWork / "runB").string()) == 0);
  CHECK(slurp(kWork / "runA" / "metrics.csv") == slurp(kWork / "runB" / "metrics.csv"));
  CHECK(slurp(kWork / "runA" / "model.ckpt") == slurp(kWork / "runB" / "model.ckpt"));
}

TEST_CASE("train: cluster dumps behind the flag") {
  const fs::path cfg = write_config("train3.json", smoke_config((kWork / "runC").string()));
  CHECK(run("train --config " + cfg.string() + " --dump-clusters") == 0);
  CHECK(fs::exists(kWork / "runC" / "clusters" / "clusters_epoch_1.csv"));
  CHECK(fs::exists(kWork / "runC" / "clusters" / "clusters_epoch_2.csv"));
}

TEST_CASE("eval: evaluates a trained checkpoint") {
  const fs::path run_dir = kWork / "runE";
  const fs::path cfg = write_config("eval_train.json", smoke_config(run_dir.string()));
  CHECK(run("train --config " + cfg.string()) == 0);

  CHECK(run("eval --config " + cfg.string() + " --set eval.checkpoint=" +
            (run_dir / "model.ckpt").string() + " --out " + (kWork / "evalout").string()) == 0);
  CHECK(fs::exists(kWork / "evalout" / "eval_report.txt"));
  CHECK(slurp(kWork / "evalout" / "eval_report.txt").find("hos") != std::string::npos);

  // Missing checkpoint setting is a config error.
  CHECK(run("eval --config " + cfg.string()) == 2);
}

TEST_CASE("exit codes: config vs data vs usage errors") {
  const fs::path cfg = write_config("codes.json", smoke_config((kWork / "runX").string()));

  CHECK(run("train --config /nonexistent.json") == 2);
  CHECK(run("train --config " + cfg.string() + " --set train.bogus=1") == 2);
  CHECK(run("train --config " + cfg.string() + " --set train.ratio=0.9") == 2);
  CHECK(run("bogus-subcommand") == 2);
  CHECK(run("train") == 2);  // missing --config

  // CSV task pointing at missing files is a data error.
  const fs::path csv_cfg = write_config("csv.json", R"({
    "task": { "type": "csv", "num_shared_classes": 3,
              "source_csv": "/nonexistent/source.csv",
              "target_csv": "/nonexistent/target.csv" },
    "train": { "batch_size": 8, "max_epochs": 1 }
  })");
  CHECK(run("train --config " + csv_cfg.string()) == 3);
}

TEST_CASE("ablate: four-variant table plus optional sensitivity sweep") {
  const fs::path out = kWork / "ablate";
  std::string body = smoke_config(out.string());
  // One seed and a tiny r sweep keep this fast.
  body.insert(body.rfind('}'), R"(, "sweep": { "seeds": [3], "r": [0.0, 0.15] })");
  const fs::path cfg = write_config("ablate.json", body);

  CHECK(run("ablate --config " + cfg.string()) == 0);
  const std::string table = slurp(out / "ablation.csv");
  CHECK(table.find("baseline") != std::string::npos);
  CHECK(table.find("no_cl") != std::string::npos);
  CHECK(table.find("no_me") != std::string::npos);
  CHECK(table.find("full") != std::string::npos);

  std::istringstream lines(table);
  std::string line;
  int rows = 0;
  while (std::getline(lines, line)) ++rows;
  CHECK(rows == 5);  // header + the four variants

  CHECK(fs::exists(out / "sensitivity_r.csv"));
  CHECK(fs::exists(out / "full" / "seed_3" / "metrics.csv"));
}

TEST_CASE("train on generated CSVs matches the in-memory synthetic task") {
  const fs::path gen_dir = kWork / "gen_for_csv";
  const fs::path cfg = write_config("gen2.json", smoke_config((kWork / "runMem").string()));
  CHECK(run("generate --config " + cfg.string() + " --out " + gen_dir.string()) == 0);
  CHECK(run("train --config " + cfg.string()) == 0);

  const std::string csv_overrides =
      " --set task.type=csv --set task.source_csv=" + (gen_dir / "source.csv").string() +
      " --set task.target_csv=" + (gen_dir / "target.csv").string();
  CHECK(run("train --config " + cfg.string() + csv_overrides + " --out " +
            (kWork / "runCsv").string()) == 0);

  // Same seed, same data -> identical metric logs.
  CHECK(slurp(kWork / "runMem" / "metrics.csv") == slurp(kWork / "runCsv" / "metrics.csv"));
}
