#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <random>

#include "deepkm/clustering.hpp"
#include "deepkm/data.hpp"
#include "deepkm/metrics.hpp"

using namespace deepkm;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    std::random_device rd;
    path = fs::temp_directory_path() / ("deepkm_data_" + std::to_string(rd()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

void write_bytes(const fs::path& path, const std::vector<unsigned char>& bytes) {
  std::ofstream out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

// Two 2x2 images: [0, 255, 51, 102] and [255, 0, 0, 255], labels 3 and 7.
std::vector<unsigned char> image_fixture() {
  return {0, 0, 8, 3, 0, 0, 0, 2, 0, 0, 0, 2, 0, 0, 0, 2, 0, 255, 51, 102, 255, 0, 0, 255};
}
std::vector<unsigned char> label_fixture(unsigned char count = 2) {
  return {0, 0, 8, 1, 0, 0, 0, count, 3, 7};
}

}  // namespace

TEST_CASE("IDX images and labels") {
  TempDir dir;
  write_bytes(dir.path / "img", image_fixture());
  write_bytes(dir.path / "lab", label_fixture());

  const Dataset d = load_idx(dir.path / "img", dir.path / "lab");
  REQUIRE(d.size() == 2);
  REQUIRE(d.dim() == 4);
  CHECK(d.features(0, 0) == 0.0);
  CHECK(d.features(0, 1) == 1.0);
  CHECK(d.features(0, 2) == doctest::Approx(0.2));
  CHECK(d.features(0, 3) == doctest::Approx(0.4));
  CHECK(d.features(1, 0) == 1.0);
  CHECK(*d.labels == std::vector<int>{3, 7});
  CHECK_FALSE(load_idx(dir.path / "img").has_labels());

  SUBCASE("label count mismatch") {
    write_bytes(dir.path / "lab3", label_fixture(3));
    CHECK_THROWS_AS(load_idx(dir.path / "img", dir.path / "lab3"), FormatError);
  }
  SUBCASE("bad magic names the offset") {
    auto bytes = image_fixture();
    bytes[3] = 9;
    write_bytes(dir.path / "bad", bytes);
    try {
      load_idx(dir.path / "bad");
      FAIL("expected a FormatError");
    } catch (const FormatError& e) {
      CHECK(std::string(e.what()).find("offset 0") != std::string::npos);
    }
  }
  SUBCASE("truncated payload") {
    auto bytes = image_fixture();
    bytes.pop_back();
    write_bytes(dir.path / "short", bytes);
    CHECK_THROWS_AS(load_idx(dir.path / "short"), FormatError);
  }
  SUBCASE("missing file") { CHECK_THROWS_AS(load_idx(dir.path / "nope"), IoError); }
  SUBCASE("gzip round trip") {
    write_idx(d, dir.path / "img.gz", dir.path / "lab.gz", 2, 2);
    const Dataset back = load_idx(dir.path / "img.gz", dir.path / "lab.gz");
    CHECK(back.features == d.features);
    CHECK(back.labels == d.labels);
    // The gzip stream really is compressed (starts with the gzip magic).
    std::ifstream in(dir.path / "img.gz", std::ios::binary);
    unsigned char magic[2] = {};
    in.read(reinterpret_cast<char*>(magic), 2);
    CHECK(magic[0] == 0x1f);
    CHECK(magic[1] == 0x8b);
  }
}

TEST_CASE("delimited text") {
  SUBCASE("trailing label column") {
    const Dataset d = parse_delimited("1,2,0\n3,4,1\n", {',', false, -1, false});
    REQUIRE(d.size() == 2);
    REQUIRE(d.dim() == 2);
    CHECK(d.features(1, 0) == 3.0);
    CHECK(*d.labels == std::vector<int>{0, 1});
  }
  SUBCASE("header, tabs, leading label, minmax") {
    const Dataset d = parse_delimited("y\ta\tb\n5\t0\t10\n6\t2\t20\n", {'\t', true, 0, true});
    CHECK(*d.labels == std::vector<int>{5, 6});
    CHECK(d.features(0, 0) == 0.0);
    CHECK(d.features(1, 0) == 1.0);
    CHECK(d.features(1, 1) == 1.0);
  }
  SUBCASE("unlabelled") {
    const Dataset d = parse_delimited("1.5,2\n", {});
    CHECK_FALSE(d.has_labels());
    CHECK(d.features(0, 0) == 1.5);
  }
  SUBCASE("ragged line names the line") {
    try {
      parse_delimited("1,2\n3\n", {});
      FAIL("expected a FormatError");
    } catch (const FormatError& e) {
      CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
  }
  SUBCASE("non-numeric cell") { CHECK_THROWS_AS(parse_delimited("1,x\n", {}), FormatError); }
  SUBCASE("empty input") { CHECK_THROWS_AS(parse_delimited("", {}), FormatError); }
  SUBCASE("file on disk") {
    TempDir dir;
    std::ofstream(dir.path / "pts.csv") << "0,0,1\n1,1,0\n";
    const Dataset d = load_delimited(dir.path / "pts.csv", {',', false, 2, false});
    CHECK(d.name == "pts.csv");
    CHECK(*d.labels == std::vector<int>{1, 0});
  }
}

TEST_CASE("blobs") {
  BlobsOptions o;
  o.n_per_cluster = 50;
  o.k = 4;
  o.dim = 10;
  o.separation = 6.0;
  o.noise_sigma = 0.5;
  o.seed = 7;
  const Dataset d = make_blobs(o);
  REQUIRE(d.size() == 200);
  CHECK(d.dim() == 10);
  std::vector<int> counts(4, 0);
  for (int l : *d.labels) ++counts[static_cast<std::size_t>(l)];
  for (int c : counts) CHECK(c == 50);

  const Dataset again = make_blobs(o);
  CHECK(again.features == d.features);
  o.seed = 8;
  CHECK(make_blobs(o).features != d.features);

  // Class means are at least the requested separation apart (noise is small).
  Matrix means = Matrix::Zero(4, 10);
  for (Index i = 0; i < d.size(); ++i) means.row((*d.labels)[static_cast<std::size_t>(i)]) += d.features.row(i) / 50.0;
  for (Index a = 0; a < 4; ++a)
    for (Index b = a + 1; b < 4; ++b) CHECK((means.row(a) - means.row(b)).norm() > 5.0);

  const KMeansResult km = kmeans(d.features, {4, 1, 100, 1e-9});
  CHECK(accuracy(km.assignment.labels, *d.labels) == 1.0);

  SUBCASE("noise-free centers are exactly separation apart") {
    BlobsOptions exact;
    exact.n_per_cluster = 1;
    exact.k = 5;
    exact.dim = 7;
    exact.separation = 3.0;
    exact.noise_sigma = 0.0;
    const Dataset c = make_blobs(exact);
    for (Index a = 0; a < 5; ++a)
      for (Index b = a + 1; b < 5; ++b) CHECK(std::abs((c.features.row(a) - c.features.row(b)).norm() - 3.0) < 1e-12);
    exact.k = 9;  // more clusters than dimensions: separation becomes a lower bound
    const Dataset many = make_blobs(exact);
    for (Index a = 0; a < 9; ++a)
      for (Index b = a + 1; b < 9; ++b) CHECK((many.features.row(a) - many.features.row(b)).norm() >= 3.0);
  }

  o.k = 0;
  CHECK_THROWS_AS(make_blobs(o), ConfigError);
}

TEST_CASE("subsample, concatenate, minmax") {
  BlobsOptions o;
  o.n_per_cluster = 10;
  o.k = 2;
  o.dim = 3;
  const Dataset d = make_blobs(o);
  const Dataset s = subsample(d, 5, 3);
  CHECK(s.size() == 5);
  CHECK(s.labels->size() == 5);
  CHECK(subsample(d, 5, 3).features == s.features);
  CHECK_THROWS_AS(subsample(d, 21, 3), ConfigError);

  const Dataset both = concatenate({d, s}, "both");
  CHECK(both.size() == 25);
  CHECK(both.features.bottomRows(5) == s.features);

  Matrix m(3, 2);
  m << 1, 5, 2, 5, 3, 5;
  minmax_normalize(m);
  CHECK(m(0, 0) == 0.0);
  CHECK(m(1, 0) == 0.5);
  CHECK(m(2, 0) == 1.0);
  CHECK(m.col(1).isZero());  // constant column maps to zero
}
