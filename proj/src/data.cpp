#include "omega/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "omega/rng.hpp"

namespace omega {

std::vector<long> pareto_counts(int num_classes, long n_max, double omega, bool reversed) {
  if (omega < 1.0) throw InvalidArgument("pareto_counts: omega must be >= 1");
  require(num_classes >= 1, "pareto_counts: need at least one class");
  require(n_max >= 1 && static_cast<double>(n_max) >= omega,
          "pareto_counts: n_max must be >= omega so the smallest class is nonempty");
  std::vector<long> counts(static_cast<std::size_t>(num_classes));
  for (int k = 0; k < num_classes; ++k) {
    const double t = num_classes == 1
                         ? 0.0
                         : static_cast<double>(k) / static_cast<double>(num_classes - 1);
    counts[static_cast<std::size_t>(k)] =
        std::lround(static_cast<double>(n_max) * std::pow(omega, -t));
  }
  if (reversed) std::reverse(counts.begin(), counts.end());
  return counts;
}

namespace {

// Rotation acting on consecutive coordinate pairs (0,1), (2,3), ...; an odd
// trailing axis is left alone.
MatrixXd plane_rotation(int dim, double angle) {
  MatrixXd rot = MatrixXd::Identity(dim, dim);
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  for (int a = 0; a + 1 < dim; a += 2) {
    rot(a, a) = c;
    rot(a, a + 1) = -s;
    rot(a + 1, a) = s;
    rot(a + 1, a + 1) = c;
  }
  return rot;
}

VectorXd random_unit(int dim, Rng& rng) {
  VectorXd v(dim);
  for (int i = 0; i < dim; ++i) v(i) = rng.normal();
  return l2_normalize(v);
}

double min_distance_to(const std::vector<VectorXd>& means, const VectorXd& candidate) {
  double best = std::numeric_limits<double>::infinity();
  for (const VectorXd& m : means) best = std::min(best, (m - candidate).norm());
  return best;
}

// Random orthogonal matrix from the QR of a Gaussian draw, columns
// sign-normalized so the result is a pure function of the rng stream.
MatrixXd random_rotation(int dim, Rng& rng) {
  MatrixXd gauss(dim, dim);
  for (int c = 0; c < dim; ++c) {
    for (int r = 0; r < dim; ++r) gauss(r, c) = rng.normal();
  }
  Eigen::HouseholderQR<MatrixXd> qr(gauss);
  MatrixXd q = qr.householderQ();
  MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int c = 0; c < dim; ++c) {
    if (r(c, c) < 0.0) q.col(c) = -q.col(c);
  }
  return q;
}

// Shared class means on a randomly rotated regular simplex with edge length
// `edge` (all pairs exactly `edge` apart), centered at the origin. Requires
// num_classes <= dim + 1.
std::vector<VectorXd> simplex_means(int num_classes, int dim, double edge, Rng& rng) {
  MatrixXd verts = MatrixXd::Zero(dim, num_classes);
  for (int k = 0; k < num_classes; ++k) verts(k, k) = 1.0;
  const VectorXd centroid = verts.rowwise().mean();
  verts.colwise() -= centroid;
  verts *= edge / std::sqrt(2.0);  // unit-simplex edge is sqrt(2)
  const MatrixXd rot = random_rotation(dim, rng);
  std::vector<VectorXd> means;
  for (int k = 0; k < num_classes; ++k) means.push_back(rot * verts.col(k));
  return means;
}

constexpr int kPlacementRetries = 100;

}  // namespace

TaskPair make_synthetic_task(const SyntheticTaskSpec& spec, std::uint64_t seed) {
  const int num_shared = spec.num_shared_classes;
  const int num_unknown = spec.num_unknown_classes;
  const int dim = spec.input_dim;
  require(num_shared >= 2, "make_synthetic_task: need at least two shared classes");
  require(num_unknown >= 0, "make_synthetic_task: negative unknown class count");
  require(dim >= 2, "make_synthetic_task: input_dim must be >= 2");
  require(spec.openness >= 0.0 && spec.openness < 1.0,
          "make_synthetic_task: openness outside [0, 1)");
  require(num_unknown > 0 || spec.openness == 0.0,
          "make_synthetic_task: nonzero openness needs private classes");
  require(spec.base_std > 0.0, "make_synthetic_task: base_std must be positive");

  Rng rng = SeedStream(seed).stream("data");

  const double max_std = spec.base_std * std::max(1.0, spec.covariance_scale);
  const double min_sep = spec.min_separation_factor * max_std;
  const double spread = std::max(1.0, spec.mean_spread);
  const double box = std::max(2.0, 1.5 * min_sep);

  // Class means: one randomly rotated regular simplex over the shared AND
  // private classes, edge spread * min_sep, so every pair of categories is
  // equally spaced and the spacing (hence the task difficulty) is pinned by
  // a single number. Unknown vertices are directionally ambiguous with
  // respect to every shared class, which is what makes them detectable by
  // entropy rather than by input magnitude. Falls back to rejection sampling
  // in a box when the simplex does not fit the ambient dimension.
  const int total_classes = num_shared + num_unknown;
  std::vector<VectorXd> all_means;
  if (total_classes <= dim + 1) {
    all_means = simplex_means(total_classes, dim, spread * min_sep, rng);
  } else {
    for (int attempt = 0;; ++attempt) {
      if (attempt >= kPlacementRetries) {
        throw DataError("make_synthetic_task: could not separate class means");
      }
      all_means.clear();
      for (int k = 0; k < total_classes; ++k) {
        VectorXd m(dim);
        for (int i = 0; i < dim; ++i) m(i) = rng.uniform(-box, box);
        all_means.push_back(std::move(m));
      }
      bool ok = true;
      for (int a = 0; a < total_classes && ok; ++a) {
        for (int b = a + 1; b < total_classes; ++b) {
          if ((all_means[a] - all_means[b]).norm() < min_sep) {
            ok = false;
            break;
          }
        }
      }
      if (ok) break;
    }
  }
  const std::vector<VectorXd> source_means(all_means.begin(), all_means.begin() + num_shared);

  const MatrixXd rot = plane_rotation(dim, spec.rotation_radians);
  const VectorXd shift = VectorXd::Constant(dim, spec.translation);
  std::vector<VectorXd> target_means;
  for (const VectorXd& m : source_means) target_means.push_back(rot * m + shift);

  // Private target means, in target coordinates. The first is pulled to just
  // outside the separation floor of a shared mean (hard unknown); the others
  // are pushed radially outward from the class layout (easy unknowns).
  std::vector<VectorXd> private_means;
  if (num_unknown > 0) {
    VectorXd target_centroid = VectorXd::Zero(dim);
    for (const VectorXd& m : target_means) target_centroid += m;
    target_centroid /= static_cast<double>(num_shared);

    const int anchor = static_cast<int>(rng.below(num_shared));
    const double hardness = std::clamp(spec.unknown_hardness, 0.0, 1.0);
    const double hard_gap = min_sep * (2.0 - hardness);
    for (int attempt = 0;; ++attempt) {
      if (attempt >= kPlacementRetries) {
        throw DataError("make_synthetic_task: could not place the hard private mean");
      }
      VectorXd candidate = target_means[anchor] + hard_gap * random_unit(dim, rng);
      if (min_distance_to(target_means, candidate) >= min_sep) {
        private_means.push_back(std::move(candidate));
        break;
      }
    }
    for (int z = 1; z < num_unknown; ++z) {
      const VectorXd base = rot * all_means[static_cast<std::size_t>(num_shared + z)] + shift;
      bool placed = false;
      for (int attempt = 0; attempt < kPlacementRetries; ++attempt) {
        // 1.0 keeps the simplex position; the outward factor makes it easy.
        const double outward = 1.4 + 0.2 * attempt / kPlacementRetries;
        VectorXd candidate = target_centroid + outward * (base - target_centroid) +
                             (attempt == 0 ? VectorXd::Zero(dim).eval()
                                           : (0.2 * min_sep * random_unit(dim, rng)).eval());
        if (min_distance_to(target_means, candidate) >= min_sep &&
            min_distance_to(private_means, candidate) >= min_sep) {
          private_means.push_back(std::move(candidate));
          placed = true;
          break;
        }
      }
      if (!placed) {
        throw DataError("make_synthetic_task: could not place private mean " +
                        std::to_string(z));
      }
    }
  }

  const std::vector<long> source_counts =
      pareto_counts(num_shared, spec.source_n_max, spec.imbalance, false);
  const std::vector<long> target_known_counts =
      pareto_counts(num_shared, spec.target_n_max, spec.imbalance, true);

  long known_total = 0;
  for (const long c : target_known_counts) known_total += c;
  long unknown_total = 0;
  if (num_unknown > 0 && spec.openness > 0.0) {
    unknown_total =
        std::lround(spec.openness / (1.0 - spec.openness) * static_cast<double>(known_total));
  }
  std::vector<long> unknown_counts(static_cast<std::size_t>(std::max(num_unknown, 0)), 0);
  for (long i = 0; i < unknown_total; ++i) {
    ++unknown_counts[static_cast<std::size_t>(i % num_unknown)];
  }

  auto sample_class = [&](MatrixXd& rows, std::vector<int>& labels, Eigen::Index& cursor,
                          const VectorXd& mean, double std_dev, long count, int label) {
    for (long i = 0; i < count; ++i) {
      for (int d = 0; d < dim; ++d) {
        rows(cursor, d) = mean(d) + std_dev * rng.normal();
      }
      labels[static_cast<std::size_t>(cursor)] = label;
      ++cursor;
    }
  };

  long source_total = 0;
  for (const long c : source_counts) source_total += c;
  DomainDataset source;
  source.role = Role::kSource;
  source.num_shared_classes = num_shared;
  source.inputs = MatrixXd(source_total, dim);
  source.labels.resize(static_cast<std::size_t>(source_total));
  Eigen::Index cursor = 0;
  for (int k = 0; k < num_shared; ++k) {
    sample_class(source.inputs, source.labels, cursor, source_means[k], spec.base_std,
                 source_counts[static_cast<std::size_t>(k)], k + 1);
  }

  const double target_std = spec.base_std * spec.covariance_scale;
  DomainDataset target;
  target.role = Role::kTarget;
  target.num_shared_classes = num_shared;
  target.inputs = MatrixXd(known_total + unknown_total, dim);
  target.labels.resize(static_cast<std::size_t>(known_total + unknown_total));
  cursor = 0;
  for (int k = 0; k < num_shared; ++k) {
    sample_class(target.inputs, target.labels, cursor, target_means[k], target_std,
                 target_known_counts[static_cast<std::size_t>(k)], k + 1);
  }
  for (int z = 0; z < num_unknown; ++z) {
    sample_class(target.inputs, target.labels, cursor, private_means[z], target_std,
                 unknown_counts[static_cast<std::size_t>(z)], num_shared + 1);
  }

  // Deterministic row shuffles so class blocks do not survive into batching.
  auto shuffle_rows = [&rng](DomainDataset& ds) {
    std::vector<int> order(static_cast<std::size_t>(ds.size()));
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    rng.shuffle(order);
    MatrixXd inputs(ds.inputs.rows(), ds.inputs.cols());
    std::vector<int> labels(order.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
      inputs.row(static_cast<Eigen::Index>(i)) = ds.inputs.row(order[i]);
      labels[i] = ds.labels[static_cast<std::size_t>(order[i])];
    }
    ds.inputs = std::move(inputs);
    ds.labels = std::move(labels);
  };
  shuffle_rows(source);
  shuffle_rows(target);

  return {std::move(source), std::move(target)};
}

DomainDataset load_feature_csv(const std::string& path, Role role, int num_shared_classes) {
  require(num_shared_classes >= 1, "load_feature_csv: num_shared_classes must be positive");
  std::ifstream in(path);
  if (!in) throw DataError("load_feature_csv: cannot open " + path);

  auto fail = [&path](long line, const std::string& what) -> DataError {
    return DataError("load_feature_csv: " + path + ":" + std::to_string(line) + ": " + what);
  };

  std::string line;
  if (!std::getline(in, line)) throw fail(1, "missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();

  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) header.push_back(cell);
  }
  if (header.size() < 2 || header.back() != "label") {
    throw fail(1, "header must be dim_0,...,dim_{d-1},label");
  }
  const int dim = static_cast<int>(header.size()) - 1;
  for (int d = 0; d < dim; ++d) {
    if (header[static_cast<std::size_t>(d)] != "dim_" + std::to_string(d)) {
      throw fail(1, "unexpected header column '" + header[static_cast<std::size_t>(d)] + "'");
    }
  }

  const int max_label = role == Role::kTarget ? num_shared_classes + 1 : num_shared_classes;
  std::vector<double> values;
  std::vector<int> labels;
  long line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const char* ptr = line.data();
    const char* end = ptr + line.size();
    int field = 0;
    for (; field < dim; ++field) {
      double v = 0.0;
      const auto [next, ec] = std::from_chars(ptr, end, v);
      if (ec != std::errc{}) throw fail(line_no, "bad number in column " + std::to_string(field));
      if (!std::isfinite(v)) throw fail(line_no, "non-finite value in column " + std::to_string(field));
      ptr = next;
      if (ptr >= end || *ptr != ',') throw fail(line_no, "expected ',' after column " + std::to_string(field));
      ++ptr;
      values.push_back(v);
    }
    int label = 0;
    const auto [next, ec] = std::from_chars(ptr, end, label);
    if (ec != std::errc{} || next != end) throw fail(line_no, "bad label field");
    if (label < 1 || label > max_label) {
      throw fail(line_no, "label " + std::to_string(label) + " outside {1.." +
                              std::to_string(max_label) + "} for this role");
    }
    labels.push_back(label);
  }
  if (labels.empty()) throw fail(line_no, "no samples");

  DomainDataset ds;
  ds.role = role;
  ds.num_shared_classes = num_shared_classes;
  ds.labels = std::move(labels);
  ds.inputs = MatrixXd(static_cast<Eigen::Index>(ds.labels.size()), dim);
  for (Eigen::Index i = 0; i < ds.inputs.rows(); ++i) {
    for (int d = 0; d < dim; ++d) {
      ds.inputs(i, d) = values[static_cast<std::size_t>(i) * dim + static_cast<std::size_t>(d)];
    }
  }
  return ds;
}

void write_feature_csv(const std::string& path, const DomainDataset& dataset) {
  std::ofstream out(path);
  if (!out) throw DataError("write_feature_csv: cannot open " + path + " for writing");
  const int dim = static_cast<int>(dataset.inputs.cols());
  for (int d = 0; d < dim; ++d) out << "dim_" << d << ",";
  out << "label\n";
  char buf[40];
  for (Eigen::Index i = 0; i < dataset.inputs.rows(); ++i) {
    for (int d = 0; d < dim; ++d) {
      std::snprintf(buf, sizeof(buf), "%.17g", dataset.inputs(i, d));
      out << buf << ',';
    }
    out << dataset.labels[static_cast<std::size_t>(i)] << '\n';
  }
  if (!out) throw DataError("write_feature_csv: write failed for " + path);
}

}  // namespace omega
