#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <zlib.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "distsgd/dataio.hpp"
#include "distsgd/rng.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace distsgd;
using dataio::Dataset;
using dataio::ParseError;

namespace {

Dataset parse_string(const std::string& text,
                     std::optional<double> positive = {}) {
  std::istringstream in(text);
  return dataio::parse_libsvm_text(in, positive);
}

bool same_dataset(const Dataset& a, const Dataset& b) {
  if (a.dim != b.dim || a.samples.size() != b.samples.size()) return false;
  for (std::size_t k = 0; k < a.samples.size(); ++k) {
    if (a.samples[k].d != b.samples[k].d) return false;
    if (a.samples[k].u != b.samples[k].u) return false;
  }
  return true;
}

// Random dataset with nonzero stored values, so sparse serialization keeps
// the dimension.
Dataset random_dataset(rng::Stream& stream, int max_dim = 12,
                       int max_rows = 30) {
  Dataset ds;
  ds.dim = 1 + static_cast<int>(stream.next_below(max_dim));
  const int rows = 1 + static_cast<int>(stream.next_below(max_rows));
  for (int r = 0; r < rows; ++r) {
    losses::Sample s;
    s.d = stream.next_double() < 0.5 ? -1.0 : 1.0;
    s.u = Eigen::VectorXd::Zero(ds.dim);
    for (int j = 0; j < ds.dim; ++j)
      if (stream.next_double() < 0.4)
        s.u[j] = (stream.next_double() < 0.5 ? -1.0 : 1.0) *
                 (0.1 + stream.next_double());
    if (r == 0) s.u[ds.dim - 1] = 1.0;  // pin the dimension
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& name)
      : path(std::filesystem::temp_directory_path() / name) {
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
};

}  // namespace

TEST_CASE("basic parsing") {
  const auto ds = parse_string("+1 1:0.5 3:2\n-1 2:1\n");
  CHECK(ds.dim == 3);
  REQUIRE(ds.samples.size() == 2);
  CHECK(ds.samples[0].d == 1.0);
  CHECK(ds.samples[0].u[0] == 0.5);
  CHECK(ds.samples[0].u[1] == 0.0);
  CHECK(ds.samples[0].u[2] == 2.0);
  CHECK(ds.samples[1].d == -1.0);
  CHECK(ds.samples[1].u[1] == 1.0);
}

TEST_CASE("label remapping") {
  // {1,2}: the larger label becomes +1.
  const auto ds12 = parse_string("2 2:1\n1 1:1\n");
  CHECK(ds12.samples[0].d == 1.0);
  CHECK(ds12.samples[1].d == -1.0);

  const auto ds01 = parse_string("0 1:1\n1 1:2\n");
  CHECK(ds01.samples[0].d == -1.0);
  CHECK(ds01.samples[1].d == 1.0);

  // Multiclass defaults to class 2 vs rest (the covertype convention) and
  // otherwise needs an explicit positive class.
  const auto covertype_like = parse_string("1 1:1\n2 1:1\n3 1:1\n");
  CHECK(covertype_like.samples[0].d == -1.0);
  CHECK(covertype_like.samples[1].d == 1.0);
  CHECK(covertype_like.samples[2].d == -1.0);
  CHECK_THROWS_AS(parse_string("5 1:1\n6 1:1\n7 1:1\n"), std::invalid_argument);
  const auto one_vs_rest = parse_string("1 1:1\n2 1:1\n3 1:1\n", 3.0);
  CHECK(one_vs_rest.samples[0].d == -1.0);
  CHECK(one_vs_rest.samples[1].d == -1.0);
  CHECK(one_vs_rest.samples[2].d == 1.0);
  CHECK_THROWS_AS(parse_string("1 1:1\n2 1:1\n", 9.0), std::invalid_argument);
}

TEST_CASE("comments, blanks and the empty file") {
  const auto ds = parse_string("# header\n\n  \n+1 1:1\n# trailing\n");
  CHECK(ds.samples.size() == 1);
  const auto empty = parse_string("");
  CHECK(empty.samples.empty());
  CHECK(empty.dim == 0);
}

TEST_CASE("parse errors carry line numbers") {
  try {
    parse_string("+1 1:1\n+1 borked\n");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line == 2);
  }
  CHECK_THROWS_AS(parse_string("abc 1:1\n"), ParseError);
  CHECK_THROWS_AS(parse_string("+1 1:1 1:2\n"), ParseError);  // not increasing
  CHECK_THROWS_AS(parse_string("+1 3:1 2:2\n"), ParseError);  // decreasing
  CHECK_THROWS_AS(parse_string("+1 0:1\n"), ParseError);      // 1-based
  CHECK_THROWS_AS(parse_string("+1 1:xyz\n"), ParseError);
}

TEST_CASE("round trip through sparse text") {
  rng::Stream stream(606);
  for (int k = 0; k < 25; ++k) {
    const auto ds = random_dataset(stream);
    const auto reparsed = parse_string(dataio::to_libsvm(ds));
    CHECK(same_dataset(ds, reparsed));
  }
}

TEST_CASE("normalization modes") {
  Dataset ds = parse_string("+1 1:3 2:4\n-1 1:1\n");
  const auto unit = dataio::normalize(ds, dataio::Normalize::unit_norm);
  CHECK(unit.samples[0].u[0] == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(unit.samples[0].u[1] == doctest::Approx(0.8).epsilon(1e-15));
  CHECK(unit.samples[1].u.norm() == doctest::Approx(1.0));

  const auto same = dataio::normalize(ds, dataio::Normalize::none);
  CHECK(same_dataset(ds, same));

  // Constant features survive standardization untouched.
  Dataset constant = parse_string("+1 1:2 2:1\n-1 1:2 2:3\n");
  const auto std_ds = dataio::normalize(constant, dataio::Normalize::standardize);
  CHECK(std_ds.samples[0].u[0] == 2.0);
  CHECK(std_ds.samples[1].u[0] == 2.0);
  CHECK(std_ds.samples[0].u[1] == doctest::Approx(-1.0));
  CHECK(std_ds.samples[1].u[1] == doctest::Approx(1.0));

  // unit_norm leaves all-zero regressors alone.
  Dataset zero;
  zero.dim = 2;
  zero.samples.push_back({Eigen::VectorXd::Zero(2), 1.0});
  const auto z = dataio::normalize(zero, dataio::Normalize::unit_norm);
  CHECK(z.samples[0].u.norm() == 0.0);
}

TEST_CASE("partitioning") {
  rng::Stream stream(99);
  Dataset ds = random_dataset(stream, 4, 1);
  ds.samples.clear();
  for (int k = 0; k < 4; ++k)
    ds.samples.push_back({Eigen::VectorXd::Ones(4), 1.0});

  const auto rr = dataio::partition(ds, 2, dataio::Rule::round_robin, 2, 1);
  CHECK(rr.node_queues[0] == std::vector<int>{0, 2});
  CHECK(rr.node_queues[1] == std::vector<int>{1, 3});
  CHECK(!rr.recycled);

  const auto s1 = dataio::partition(ds, 2, dataio::Rule::shuffled, 2, 42);
  const auto s2 = dataio::partition(ds, 2, dataio::Rule::shuffled, 2, 42);
  CHECK(s1.node_queues == s2.node_queues);

  // Recycling: 3 samples over 2 nodes for 4 rounds wraps with a reshuffle.
  Dataset three = ds;
  three.samples.resize(3);
  const auto recycled = dataio::partition(three, 2, dataio::Rule::round_robin, 4, 7);
  CHECK(recycled.recycled);
  for (const auto& queue : recycled.node_queues) CHECK(queue.size() == 4);
  // Base assignment is still a disjoint cover.
  CHECK(recycled.node_queues[0][0] == 0);
  CHECK(recycled.node_queues[1][0] == 1);

  Dataset empty;
  CHECK_THROWS_AS(dataio::partition(empty, 2, dataio::Rule::round_robin, 1, 0),
                  std::invalid_argument);
}

TEST_CASE("round robin balance over random datasets") {
  rng::Stream stream(1234);
  for (int rep = 0; rep < 10; ++rep) {
    const auto ds = random_dataset(stream, 6, 40);
    const int n = 2 + static_cast<int>(stream.next_below(5));
    if (static_cast<int>(ds.samples.size()) < n) continue;
    const auto part = dataio::partition(ds, n, dataio::Rule::round_robin, 1, 0);
    std::size_t lo = ds.samples.size(), hi = 0;
    std::vector<bool> seen(ds.samples.size(), false);
    for (const auto& queue : part.node_queues) {
      lo = std::min(lo, queue.size());
      hi = std::max(hi, queue.size());
      for (int idx : queue) {
        CHECK(!seen[idx]);  // disjoint cover
        seen[idx] = true;
      }
    }
    CHECK(hi - lo <= 1);
    for (bool b : seen) CHECK(b);
  }
}

TEST_CASE("gzip input") {
  TempDir tmp("distsgd_dataio_gz");
  const std::string text = "+1 1:0.25 3:-2\n-1 2:7\n";
  const auto path = (tmp.path / "tiny.libsvm.gz").string();
  gzFile f = gzopen(path.c_str(), "wb");
  REQUIRE(f != nullptr);
  gzwrite(f, text.data(), static_cast<unsigned>(text.size()));
  gzclose(f);

  const auto ds = dataio::parse_libsvm(path);
  CHECK(ds.dim == 3);
  CHECK(ds.samples.size() == 2);
  CHECK(ds.samples[0].u[2] == -2.0);
  CHECK(same_dataset(ds, parse_string(text)));
}

TEST_CASE("benchmark files parse when provided") {
  // The covertype / quantum files are user-supplied (no downloads here);
  // point DISTSGD_DATASET_DIR at them to run this check.
  const char* dir = std::getenv("DISTSGD_DATASET_DIR");
  if (dir == nullptr) {
    MESSAGE("DISTSGD_DATASET_DIR not set; skipping benchmark-file check");
    return;
  }
  namespace fs = std::filesystem;
  const std::vector<std::pair<std::string, int>> expected{{"covtype", 54},
                                                          {"quantum", 78}};
  for (const auto& [stem, dim] : expected) {
    for (const auto& entry : fs::directory_iterator(dir)) {
      const auto name = entry.path().filename().string();
      if (name.rfind(stem, 0) != 0) continue;
      const auto ds = dataio::parse_libsvm(entry.path().string(),
                                           stem == "covtype" ? std::optional<double>(2.0)
                                                             : std::nullopt);
      CHECK(ds.dim == dim);
      CHECK(!ds.samples.empty());
    }
  }
}

TEST_CASE("file checksum is stable") {
  TempDir tmp("distsgd_dataio_sum");
  const auto path = (tmp.path / "x.txt").string();
  std::ofstream(path) << "abc";
  const auto a = dataio::file_checksum(path);
  CHECK(a == dataio::file_checksum(path));
  std::ofstream(path) << "abcd";
  CHECK(a != dataio::file_checksum(path));
}
