#include "omega/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace omega {

namespace {

using nlohmann::json;

void check_keys(const json& obj, const std::vector<std::string>& allowed,
                const std::string& where) {
  for (const auto& [key, value] : obj.items()) {
    bool ok = false;
    for (const auto& a : allowed) {
      if (key == a) {
        ok = true;
        break;
      }
    }
    if (!ok) throw ConfigError("config: unknown key '" + where + key + "'");
  }
}

template <typename T>
void read(const json& obj, const char* key, T& out, const std::string& where) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("config: bad value for '" + where + key + "'");
  }
}

void apply_override(json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("--set expects KEY=VALUE, got '" + assignment + "'");
  }
  const std::string path = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);

  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;  // unquoted strings

  json* node = &doc;
  std::size_t start = 0;
  while (true) {
    const auto dot = path.find('.', start);
    const std::string key = path.substr(start, dot - start);
    if (key.empty()) throw ConfigError("--set: empty path segment in '" + path + "'");
    if (dot == std::string::npos) {
      (*node)[key] = value;
      break;
    }
    node = &(*node)[key];
    if (!node->is_object() && !node->is_null()) {
      throw ConfigError("--set: '" + path + "' descends into a non-object");
    }
    start = dot + 1;
  }
}

TaskConfig parse_task(const json& obj) {
  check_keys(obj,
             {"type", "num_shared_classes", "num_unknown_classes", "input_dim", "omega",
              "openness", "source_n_max", "target_n_max", "rotation_deg", "translation",
              "covariance_scale", "base_std", "min_separation_factor", "mean_spread",
              "unknown_hardness",
              "source_csv", "target_csv"},
             "task.");
  TaskConfig task;
  std::string type = "synthetic";
  read(obj, "type", type, "task.");
  if (type == "synthetic") {
    task.type = TaskConfig::Type::kSynthetic;
  } else if (type == "csv") {
    task.type = TaskConfig::Type::kCsv;
  } else {
    throw ConfigError("config: task.type must be 'synthetic' or 'csv'");
  }

  SyntheticTaskSpec& s = task.synthetic;
  read(obj, "num_shared_classes", s.num_shared_classes, "task.");
  read(obj, "num_unknown_classes", s.num_unknown_classes, "task.");
  read(obj, "input_dim", s.input_dim, "task.");
  read(obj, "omega", s.imbalance, "task.");
  read(obj, "openness", s.openness, "task.");
  long n = 0;
  if (obj.contains("source_n_max")) {
    read(obj, "source_n_max", n, "task.");
    s.source_n_max = n;
  }
  if (obj.contains("target_n_max")) {
    read(obj, "target_n_max", n, "task.");
    s.target_n_max = n;
  }
  double rotation_deg = s.rotation_radians * 180.0 / 3.14159265358979323846;
  read(obj, "rotation_deg", rotation_deg, "task.");
  s.rotation_radians = rotation_deg * 3.14159265358979323846 / 180.0;
  read(obj, "translation", s.translation, "task.");
  read(obj, "covariance_scale", s.covariance_scale, "task.");
  read(obj, "base_std", s.base_std, "task.");
  read(obj, "min_separation_factor", s.min_separation_factor, "task.");
  read(obj, "mean_spread", s.mean_spread, "task.");
  read(obj, "unknown_hardness", s.unknown_hardness, "task.");

  read(obj, "source_csv", task.source_csv, "task.");
  read(obj, "target_csv", task.target_csv, "task.");
  task.csv_num_shared = s.num_shared_classes;

  if (task.type == TaskConfig::Type::kCsv &&
      (task.source_csv.empty() || task.target_csv.empty())) {
    throw ConfigError("config: csv task needs task.source_csv and task.target_csv");
  }
  return task;
}

}  // namespace

ExperimentConfig parse_config(const std::string& text,
                              const std::vector<std::string>& overrides,
                              std::optional<std::uint64_t> seed_override) {
  json doc = json::parse(text, nullptr, false);
  if (doc.is_discarded()) throw ConfigError("config: not valid JSON");
  if (!doc.is_object()) throw ConfigError("config: top level must be an object");

  for (const std::string& assignment : overrides) apply_override(doc, assignment);

  check_keys(doc, {"task", "model", "train", "eval", "sweep"}, "");

  ExperimentConfig cfg;
  if (doc.contains("task")) cfg.task = parse_task(doc.at("task"));

  if (doc.contains("model")) {
    const json& m = doc.at("model");
    check_keys(m, {"widths", "embed_dim"}, "model.");
    read(m, "widths", cfg.model.widths, "model.");
    read(m, "embed_dim", cfg.model.embed_dim, "model.");
    if (cfg.model.embed_dim < 2) throw ConfigError("config: model.embed_dim must be >= 2");
  }

  bool batch_given = false;
  bool lr_given = false;
  if (doc.contains("train")) {
    const json& t = doc.at("train");
    check_keys(t,
               {"tau", "eta1", "eta2", "margin", "ratio", "z_fraction", "batch_size",
                "base_lr", "momentum", "lr_gamma", "lr_power", "max_epochs", "seed"},
               "train.");
    TrainConfig& tc = cfg.train;
    read(t, "tau", tc.tau, "train.");
    read(t, "eta1", tc.eta1, "train.");
    read(t, "eta2", tc.eta2, "train.");
    read(t, "margin", tc.margin, "train.");
    read(t, "ratio", tc.ratio, "train.");
    read(t, "z_fraction", tc.z_fraction, "train.");
    read(t, "batch_size", tc.batch_size, "train.");
    read(t, "base_lr", tc.base_lr, "train.");
    read(t, "momentum", tc.momentum, "train.");
    read(t, "lr_gamma", tc.lr_gamma, "train.");
    read(t, "lr_power", tc.lr_power, "train.");
    read(t, "max_epochs", tc.max_epochs, "train.");
    read(t, "seed", tc.seed, "train.");
    batch_given = t.contains("batch_size");
    lr_given = t.contains("base_lr");
  }

  if (doc.contains("eval")) {
    const json& e = doc.at("eval");
    check_keys(e, {"cadence", "out_dir", "checkpoint"}, "eval.");
    read(e, "cadence", cfg.eval.cadence, "eval.");
    read(e, "out_dir", cfg.eval.out_dir, "eval.");
    read(e, "checkpoint", cfg.eval.checkpoint, "eval.");
    if (cfg.eval.cadence < 0) throw ConfigError("config: eval.cadence must be >= 0");
  }

  if (doc.contains("sweep")) {
    const json& s = doc.at("sweep");
    check_keys(s, {"r", "omega", "seeds"}, "sweep.");
    read(s, "r", cfg.sweep.r, "sweep.");
    read(s, "omega", cfg.sweep.omega, "sweep.");
    read(s, "seeds", cfg.sweep.seeds, "sweep.");
  }

  if (seed_override) cfg.train.seed = *seed_override;

  // Batch/lr scaling rule: an overridden batch size without an explicit
  // learning rate scales the rate by sqrt(batch/32).
  if (batch_given && !lr_given && cfg.train.batch_size != 32) {
    cfg.train.base_lr *= std::sqrt(static_cast<double>(cfg.train.batch_size) / 32.0);
  }

  cfg.train.validate();
  return cfg;
}

ExperimentConfig load_config(const std::string& path,
                             const std::vector<std::string>& overrides,
                             std::optional<std::uint64_t> seed_override) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str(), overrides, seed_override);
}

std::string ExperimentConfig::to_json_string() const {
  json doc;
  json& t = doc["task"];
  t["type"] = task.type == TaskConfig::Type::kSynthetic ? "synthetic" : "csv";
  const SyntheticTaskSpec& s = task.synthetic;
  t["num_shared_classes"] = s.num_shared_classes;
  t["num_unknown_classes"] = s.num_unknown_classes;
  t["input_dim"] = s.input_dim;
  t["omega"] = s.imbalance;
  t["openness"] = s.openness;
  t["source_n_max"] = s.source_n_max;
  t["target_n_max"] = s.target_n_max;
  t["rotation_deg"] = s.rotation_radians * 180.0 / 3.14159265358979323846;
  t["translation"] = s.translation;
  t["covariance_scale"] = s.covariance_scale;
  t["base_std"] = s.base_std;
  t["min_separation_factor"] = s.min_separation_factor;
  t["mean_spread"] = s.mean_spread;
  t["unknown_hardness"] = s.unknown_hardness;
  if (!task.source_csv.empty()) t["source_csv"] = task.source_csv;
  if (!task.target_csv.empty()) t["target_csv"] = task.target_csv;

  doc["model"]["widths"] = model.widths;
  doc["model"]["embed_dim"] = model.embed_dim;

  json& tr = doc["train"];
  tr["tau"] = train.tau;
  tr["eta1"] = train.eta1;
  tr["eta2"] = train.eta2;
  tr["margin"] = train.margin;
  tr["ratio"] = train.ratio;
  tr["z_fraction"] = train.z_fraction;
  tr["batch_size"] = train.batch_size;
  tr["base_lr"] = train.base_lr;
  tr["momentum"] = train.momentum;
  tr["lr_gamma"] = train.lr_gamma;
  tr["lr_power"] = train.lr_power;
  tr["max_epochs"] = train.max_epochs;
  tr["seed"] = train.seed;

  doc["eval"]["cadence"] = eval.cadence;
  doc["eval"]["out_dir"] = eval.out_dir;
  if (!eval.checkpoint.empty()) doc["eval"]["checkpoint"] = eval.checkpoint;

  if (!sweep.r.empty()) doc["sweep"]["r"] = sweep.r;
  if (!sweep.omega.empty()) doc["sweep"]["omega"] = sweep.omega;
  if (!sweep.seeds.empty()) doc["sweep"]["seeds"] = sweep.seeds;

  return doc.dump(2) + "\n";
}

TaskPair resolve_task(const ExperimentConfig& cfg) {
  if (cfg.task.type == TaskConfig::Type::kSynthetic) {
    return make_synthetic_task(cfg.task.synthetic, cfg.train.seed);
  }
  TaskPair pair;
  pair.source = load_feature_csv(cfg.task.source_csv, Role::kSource, cfg.task.csv_num_shared);
  pair.target = load_feature_csv(cfg.task.target_csv, Role::kTarget, cfg.task.csv_num_shared);
  if (pair.source.inputs.cols() != pair.target.inputs.cols()) {
    throw DataError("resolve_task: source and target feature dimensions differ");
  }
  return pair;
}

}  // namespace omega
