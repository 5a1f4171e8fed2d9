#include "omega/checkpoint.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <vector>

namespace omega {

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_block(std::ofstream& out, const char* kind, const ParamBlock& block) {
  out << kind << ' ' << block.name << ' ' << block.rows << ' ' << block.cols << '\n';
  for (Eigen::Index r = 0; r < block.rows; ++r) {
    for (Eigen::Index c = 0; c < block.cols; ++c) {
      if (c) out << ' ';
      // Column-major storage, emitted row by row.
      out << fmt17(block.data[c * block.rows + r]);
    }
    out << '\n';
  }
}

}  // namespace

void save_checkpoint(const std::string& path, Model& model, const TrainConfig& cfg,
                     const VectorXd& thresholds) {
  require(thresholds.size() == model.classifier.num_classes(),
          "save_checkpoint: threshold length mismatch");
  std::ofstream out(path);
  if (!out) throw DataError("save_checkpoint: cannot open " + path + " for writing");
  out << kCheckpointMagic << '\n';

  out << "meta seed " << cfg.seed << '\n';
  out << "meta input_dim " << model.extractor.input_dim() << '\n';
  out << "meta widths";
  const auto& layers = model.extractor.layers();
  for (std::size_t l = 0; l + 1 < layers.size(); ++l) {
    out << ' ' << layers[l].weight.rows();
  }
  out << '\n';
  out << "meta embed_dim " << model.extractor.embed_dim() << '\n';
  out << "meta num_classes " << model.classifier.num_classes() << '\n';

  out << "hyper tau " << fmt17(cfg.tau) << '\n';
  out << "hyper eta1 " << fmt17(cfg.eta1) << '\n';
  out << "hyper eta2 " << fmt17(cfg.eta2) << '\n';
  out << "hyper margin " << fmt17(cfg.margin) << '\n';
  out << "hyper ratio " << fmt17(cfg.ratio) << '\n';
  out << "hyper z_fraction " << fmt17(cfg.z_fraction) << '\n';
  out << "hyper batch_size " << cfg.batch_size << '\n';
  out << "hyper base_lr " << fmt17(cfg.base_lr) << '\n';
  out << "hyper momentum " << fmt17(cfg.momentum) << '\n';
  out << "hyper lr_gamma " << fmt17(cfg.lr_gamma) << '\n';
  out << "hyper lr_power " << fmt17(cfg.lr_power) << '\n';
  out << "hyper max_epochs " << cfg.max_epochs << '\n';

  for (const ParamBlock& block : model.param_blocks()) write_block(out, "param", block);
  for (const ParamBlock& block : model.state_blocks()) write_block(out, "state", block);
  VectorXd q = thresholds;
  write_block(out, "state", {"thresholds.q", q.data(), q.size(), 1});
  out << "end\n";
  if (!out) throw DataError("save_checkpoint: write failed for " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("load_checkpoint: cannot open " + path);

  std::string line;
  if (!std::getline(in, line) || line != kCheckpointMagic) {
    throw DataError("load_checkpoint: " + path + " is not a " + kCheckpointMagic + " file");
  }

  std::map<std::string, std::string> meta;
  std::map<std::string, std::string> hyper;
  std::vector<std::pair<std::string, MatrixXd>> arrays;

  while (std::getline(in, line)) {
    if (line == "end") break;
    std::istringstream row(line);
    std::string kind;
    row >> kind;
    if (kind == "meta") {
      std::string key;
      row >> key;
      std::string rest;
      std::getline(row, rest);
      if (!rest.empty() && rest.front() == ' ') rest.erase(rest.begin());
      meta[key] = rest;
    } else if (kind == "hyper") {
      std::string key, value;
      row >> key >> value;
      hyper[key] = value;
    } else if (kind == "param" || kind == "state") {
      std::string name;
      Eigen::Index rows = 0, cols = 0;
      row >> name >> rows >> cols;
      if (rows <= 0 || cols <= 0) throw DataError("load_checkpoint: bad shape for " + name);
      MatrixXd m(rows, cols);
      for (Eigen::Index r = 0; r < rows; ++r) {
        if (!std::getline(in, line)) throw DataError("load_checkpoint: truncated array " + name);
        const char* ptr = line.data();
        const char* end = ptr + line.size();
        for (Eigen::Index c = 0; c < cols; ++c) {
          while (ptr < end && *ptr == ' ') ++ptr;
          double v = 0.0;
          const auto [next, ec] = std::from_chars(ptr, end, v);
          if (ec != std::errc{}) throw DataError("load_checkpoint: bad value in " + name);
          ptr = next;
          m(r, c) = v;
        }
      }
      arrays.emplace_back(kind + ":" + name, std::move(m));
    } else if (!kind.empty()) {
      throw DataError("load_checkpoint: unexpected record '" + kind + "'");
    }
  }

  auto meta_int = [&meta, &path](const std::string& key) {
    const auto it = meta.find(key);
    if (it == meta.end()) throw DataError("load_checkpoint: " + path + " missing meta " + key);
    return std::stoi(it->second);
  };

  Checkpoint ckpt;
  TrainConfig& cfg = ckpt.train;
  auto hyper_double = [&hyper](const std::string& key, double fallback) {
    const auto it = hyper.find(key);
    return it == hyper.end() ? fallback : std::stod(it->second);
  };
  cfg.tau = hyper_double("tau", cfg.tau);
  cfg.eta1 = hyper_double("eta1", cfg.eta1);
  cfg.eta2 = hyper_double("eta2", cfg.eta2);
  cfg.margin = hyper_double("margin", cfg.margin);
  cfg.ratio = hyper_double("ratio", cfg.ratio);
  cfg.z_fraction = hyper_double("z_fraction", cfg.z_fraction);
  cfg.batch_size = static_cast<int>(hyper_double("batch_size", cfg.batch_size));
  cfg.base_lr = hyper_double("base_lr", cfg.base_lr);
  cfg.momentum = hyper_double("momentum", cfg.momentum);
  cfg.lr_gamma = hyper_double("lr_gamma", cfg.lr_gamma);
  cfg.lr_power = hyper_double("lr_power", cfg.lr_power);
  cfg.max_epochs = static_cast<int>(hyper_double("max_epochs", cfg.max_epochs));
  if (meta.count("seed")) cfg.seed = std::stoull(meta["seed"]);

  std::vector<int> widths;
  {
    std::istringstream ws(meta.count("widths") ? meta["widths"] : std::string());
    int w = 0;
    while (ws >> w) widths.push_back(w);
  }

  Rng scratch(0);
  ckpt.model = make_model(meta_int("input_dim"), widths, meta_int("embed_dim"),
                          meta_int("num_classes"), cfg.tau, scratch);

  auto fill = [&arrays, &path](const std::string& key, const ParamBlock& block) {
    for (const auto& [name, values] : arrays) {
      if (name != key) continue;
      if (values.rows() != block.rows || values.cols() != block.cols) {
        throw DataError("load_checkpoint: shape mismatch for " + key);
      }
      for (Eigen::Index c = 0; c < block.cols; ++c) {
        for (Eigen::Index r = 0; r < block.rows; ++r) {
          block.data[c * block.rows + r] = values(r, c);
        }
      }
      return;
    }
    throw DataError("load_checkpoint: " + path + " missing array " + key);
  };
  for (const ParamBlock& block : ckpt.model.param_blocks()) fill("param:" + block.name, block);
  for (const ParamBlock& block : ckpt.model.state_blocks()) fill("state:" + block.name, block);
  ckpt.thresholds = VectorXd(ckpt.model.classifier.num_classes());
  fill("state:thresholds.q", {"thresholds.q", ckpt.thresholds.data(), ckpt.thresholds.size(), 1});
  return ckpt;
}

}  // namespace omega
