#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "omega/data.hpp"
#include "omega/evaluation.hpp"

using namespace omega;

namespace {

std::filesystem::path temp_file(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "omega_data_tests";
  std::filesystem::create_directories(dir);
  return dir / name;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path);
  out << content;
}

std::vector<long> label_counts(const DomainDataset& ds, int upto) {
  std::vector<long> counts(static_cast<std::size_t>(upto), 0);
  for (const int y : ds.labels) ++counts[static_cast<std::size_t>(y - 1)];
  return counts;
}

}  // namespace

TEST_CASE("pareto_counts: balanced, pinned, reversed, monotone") {
  const std::vector<long> balanced = pareto_counts(4, 100, 1.0, false);
  for (const long c : balanced) CHECK(c == 100);

  const std::vector<long> pinned = pareto_counts(3, 100, 100.0, false);
  CHECK(pinned == std::vector<long>{100, 10, 1});

  const std::vector<long> fwd = pareto_counts(5, 928, 10.0, false);
  std::vector<long> rev = pareto_counts(5, 928, 10.0, true);
  std::reverse(rev.begin(), rev.end());
  CHECK(fwd == rev);
  for (std::size_t i = 1; i < fwd.size(); ++i) CHECK(fwd[i] <= fwd[i - 1]);

  // Extreme ratio matches omega within rounding.
  const double realized = static_cast<double>(fwd.front()) / static_cast<double>(fwd.back());
  CHECK(std::abs(fwd.back() - std::lround(928.0 / 10.0)) <= 1);
  CHECK(realized == doctest::Approx(10.0).epsilon(0.02));

  CHECK_THROWS_AS(pareto_counts(3, 100, 0.5, false), InvalidArgument);
}

TEST_CASE("make_synthetic_task: degenerate no-shift case") {
  SyntheticTaskSpec spec;
  spec.num_shared_classes = 3;
  spec.num_unknown_classes = 0;
  spec.openness = 0.0;
  spec.imbalance = 1.0;
  spec.rotation_radians = 0.0;
  spec.translation = 0.0;
  spec.covariance_scale = 1.0;
  spec.source_n_max = 200;
  spec.target_n_max = 200;
  TaskPair task = make_synthetic_task(spec, 11);

  CHECK(task.source.size() == 600);
  CHECK(task.target.size() == 600);
  for (const int y : task.source.labels) CHECK(y <= 3);
  for (const int y : task.target.labels) CHECK(y <= 3);  // no private samples

  // Same mixture: per-class sample means agree within sampling error.
  for (int k = 1; k <= 3; ++k) {
    VectorXd src_mean = VectorXd::Zero(spec.input_dim);
    VectorXd tgt_mean = VectorXd::Zero(spec.input_dim);
    long ns = 0, nt = 0;
    for (Eigen::Index i = 0; i < task.source.size(); ++i) {
      if (task.source.labels[static_cast<std::size_t>(i)] == k) {
        src_mean += task.source.inputs.row(i).transpose();
        ++ns;
      }
    }
    for (Eigen::Index i = 0; i < task.target.size(); ++i) {
      if (task.target.labels[static_cast<std::size_t>(i)] == k) {
        tgt_mean += task.target.inputs.row(i).transpose();
        ++nt;
      }
    }
    src_mean /= static_cast<double>(ns);
    tgt_mean /= static_cast<double>(nt);
    CHECK((src_mean - tgt_mean).norm() < 0.15);  // ~6 sigma of the mean estimate
  }
}

TEST_CASE("make_synthetic_task: realized openness and imbalance") {
  SyntheticTaskSpec spec;  // defaults: K=5, 3 private, omega=10, openness 0.5
  TaskPair task = make_synthetic_task(spec, 3);

  CHECK(openness(task.target) >= 0.48);
  CHECK(openness(task.target) <= 0.52);

  const std::vector<long> src = label_counts(task.source, 5);
  long lo = src[0], hi = src[0];
  for (const long c : src) {
    lo = std::min(lo, c);
    hi = std::max(hi, c);
  }
  CHECK(std::abs(lo * spec.imbalance - hi) <= spec.imbalance);  // +-1 count on the tail

  // Source never contains the unknown label.
  for (const int y : task.source.labels) {
    CHECK(y >= 1);
    CHECK(y <= 5);
  }

  // RS-UT: the target's shared-class ordering opposes the source's.
  const std::vector<long> tgt = label_counts(task.target, 6);
  CHECK(src[0] > src[4]);
  CHECK(tgt[0] < tgt[4]);
}

TEST_CASE("make_synthetic_task: deterministic under the seed") {
  SyntheticTaskSpec spec;
  TaskPair a = make_synthetic_task(spec, 17);
  TaskPair b = make_synthetic_task(spec, 17);
  CHECK(a.source.inputs == b.source.inputs);
  CHECK(a.target.inputs == b.target.inputs);
  CHECK(a.source.labels == b.source.labels);
  CHECK(a.target.labels == b.target.labels);

  TaskPair c = make_synthetic_task(spec, 18);
  CHECK(a.source.inputs != c.source.inputs);
}

TEST_CASE("make_synthetic_task: infeasible separation fails loudly") {
  // Too many classes to pack into the plane at the required separation.
  SyntheticTaskSpec spec;
  spec.input_dim = 2;
  spec.num_shared_classes = 40;
  spec.source_n_max = 60;
  spec.target_n_max = 60;
  CHECK_THROWS_AS(make_synthetic_task(spec, 1), DataError);
}

TEST_CASE("feature CSV: load, validation, round trip") {
  const auto path = temp_file("ok.csv");
  write_file(path,
             "dim_0,dim_1,label\n"
             "0.5,-1.25,1\n"
             "0.125,3,2\n"
             "-2,0.75,3\n");
  DomainDataset ds = load_feature_csv(path.string(), Role::kTarget, 2);
  CHECK(ds.size() == 3);
  CHECK(ds.inputs(0, 1) == doctest::Approx(-1.25));
  CHECK(ds.labels == std::vector<int>{1, 2, 3});

  // Label K+1 is rejected in a source file, accepted in a target file.
  CHECK_THROWS_AS(load_feature_csv(path.string(), Role::kSource, 2), DataError);
  CHECK_NOTHROW(load_feature_csv(path.string(), Role::kSource, 3));

  // K+2 is out of range even for targets; the error names the line.
  const auto bad = temp_file("bad_label.csv");
  write_file(bad, "dim_0,dim_1,label\n0.5,0.5,4\n");
  try {
    load_feature_csv(bad.string(), Role::kTarget, 2);
    CHECK(false);
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find(":2:") != std::string::npos);
  }

  const auto mangled = temp_file("mangled.csv");
  write_file(mangled, "dim_0,dim_1,label\n0.5,oops,1\n");
  CHECK_THROWS_AS(load_feature_csv(mangled.string(), Role::kTarget, 2), DataError);

  const auto infinite = temp_file("inf.csv");
  write_file(infinite, "dim_0,dim_1,label\n0.5,inf,1\n");
  CHECK_THROWS_AS(load_feature_csv(infinite.string(), Role::kTarget, 2), DataError);

  const auto short_row = temp_file("short.csv");
  write_file(short_row, "dim_0,dim_1,label\n0.5,1\n");
  CHECK_THROWS_AS(load_feature_csv(short_row.string(), Role::kTarget, 2), DataError);

  const auto bad_header = temp_file("bad_header.csv");
  write_file(bad_header, "x,y,label\n0.5,0.5,1\n");
  CHECK_THROWS_AS(load_feature_csv(bad_header.string(), Role::kTarget, 2), DataError);

  CHECK_THROWS_AS(load_feature_csv("/nonexistent/nope.csv", Role::kSource, 2), DataError);

  // Round trip: write(load(f)) preserves samples, order and labels exactly.
  SyntheticTaskSpec spec;
  spec.source_n_max = 50;
  spec.target_n_max = 40;
  TaskPair task = make_synthetic_task(spec, 5);
  const auto rt = temp_file("roundtrip.csv");
  write_feature_csv(rt.string(), task.target);
  DomainDataset back = load_feature_csv(rt.string(), Role::kTarget, 5);
  CHECK(back.inputs == task.target.inputs);
  CHECK(back.labels == task.target.labels);
}
