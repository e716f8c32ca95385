#include "vigal/dataio.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

using namespace vigal;

namespace {

std::vector<int> histogram(const Dataset& d) {
  std::vector<int> h(static_cast<std::size_t>(d.num_classes));
  for (ClassId c : d.labels) ++h[static_cast<std::size_t>(c)];
  return h;
}

}  // namespace

TEST(Blobs, CountBookkeeping) {
  DatasetSpec spec;
  spec.blobs.num_classes = 2;
  spec.blobs.points_per_class = 10;
  const Dataset d = generate(spec);
  EXPECT_EQ(d.size(), 20);
  EXPECT_EQ(histogram(d), (std::vector<int>{10, 10}));
  EXPECT_NO_THROW(d.validate());
}

TEST(Blobs, Deterministic) {
  DatasetSpec spec;
  spec.blobs.seed = 9;
  const Dataset a = generate(spec);
  const Dataset b = generate(spec);
  EXPECT_EQ(a.features, b.features);
  EXPECT_EQ(a.labels, b.labels);
  spec.blobs.seed = 10;
  EXPECT_NE(generate(spec).features, a.features);
}

TEST(Blobs, ScaledClassCounts) {
  const std::vector<int> counts{1196, 2830, 639, 1271, 1295};
  EXPECT_EQ(scaled_class_counts(counts, 0.1), (std::vector<int>{120, 283, 64, 127, 130}));
  DatasetSpec spec;
  spec.blobs.class_counts = counts;
  spec.blobs.count_scale = 0.1;
  EXPECT_EQ(histogram(generate(spec)), (std::vector<int>{120, 283, 64, 127, 130}));
}

TEST(Blobs, RoundHalfUp) {
  EXPECT_EQ(scaled_class_counts({5, 15, 25}, 0.1), (std::vector<int>{1, 2, 3}));
  EXPECT_THROW(scaled_class_counts({1}, 0.1), Error);
}

TEST(Rings, Shape) {
  DatasetSpec spec;
  spec.kind = DatasetKind::rings;
  spec.rings.num_rings = 3;
  spec.rings.points_per_ring = 7;
  const Dataset d = generate(spec);
  EXPECT_EQ(d.size(), 21);
  EXPECT_EQ(d.num_classes, 3);
  EXPECT_EQ(d.dim(), 2);
}

TEST(Csv, EncodesStringLabels) {
  std::istringstream in("x,y,label\n1,2,a\n3,4,b\n5,6,a\n");
  const Dataset d = parse_csv(in, "label");
  EXPECT_EQ(d.size(), 3);
  EXPECT_EQ(d.dim(), 2);
  EXPECT_EQ(d.num_classes, 2);
  EXPECT_EQ(d.labels, (std::vector<ClassId>{0, 1, 0}));
  EXPECT_EQ(d.label_names, (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(d.features(2, 1), 6.0);
}

TEST(Csv, PreservesDenseIntegerLabels) {
  std::istringstream in("label,x\n2,0\n0,1\n1,2\n2,3\n");
  EXPECT_EQ(parse_csv(in, "label").labels, (std::vector<ClassId>{2, 0, 1, 2}));
}

TEST(Csv, NonNumericCellNamesRowAndColumn) {
  std::istringstream in("x,y,label\n1,2,a\n3,oops,b\n");
  try {
    parse_csv(in, "label", "data.csv");
    FAIL() << "expected an error";
  } catch (const Error& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("row 3"), std::string::npos) << msg;
    EXPECT_NE(msg.find("'y'"), std::string::npos) << msg;
  }
}

TEST(Csv, Errors) {
  std::istringstream empty("");
  EXPECT_THROW(parse_csv(empty, "label"), Error);
  std::istringstream no_label("x,y\n1,2\n");
  EXPECT_THROW(parse_csv(no_label, "label"), Error);
  std::istringstream ragged("x,label\n1\n");
  EXPECT_THROW(parse_csv(ragged, "label"), Error);
  EXPECT_THROW(load_csv("/nonexistent/file.csv", "label"), Error);
}

TEST(Csv, RoundTrip) {
  DatasetSpec spec;
  spec.blobs.dimension = 4;
  spec.blobs.seed = 3;
  const Dataset d = generate(spec);
  std::stringstream buf;
  write_csv(d, buf);
  const Dataset back = parse_csv(buf, "label");
  EXPECT_EQ(back.labels, d.labels);
  EXPECT_LE((back.features - d.features).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Csv, FeatureTableForScoring) {
  const auto path = std::filesystem::temp_directory_path() / "vigal_feature_table.csv";
  std::ofstream(path) << "a,b,label\n1,0,x\n0,1,y\n";
  EXPECT_THROW(load_feature_csv(path.string()), Error);
  const auto m = load_feature_csv(path.string(), "label");
  EXPECT_EQ(m.rows(), 2);
  EXPECT_EQ(m.cols(), 2);
  std::filesystem::remove(path);
}

TEST(Split, Sizes) {
  DatasetSpec spec;
  spec.blobs.num_classes = 2;
  spec.blobs.points_per_class = 5;
  const Dataset d = generate(spec);
  const PoolState p = split(d, 0.2, 1);
  EXPECT_EQ(p.test.size(), 2U);
  EXPECT_EQ(p.unlabeled.size(), 8U);
  EXPECT_TRUE(p.labeled.empty());
  p.check_invariants(d);
}

TEST(Split, FloorRule) {
  Dataset d;
  d.features = FeatureMatrix::Zero(7, 1);
  d.labels = {0, 1, 0, 1, 0, 1, 0};
  d.num_classes = 2;
  EXPECT_EQ(split(d, 0.5, 0).test.size(), 3U);
}

TEST(Split, SeededAndCovering) {
  DatasetSpec spec;
  const Dataset d = generate(spec);
  const PoolState a = split(d, 0.3, 5);
  const PoolState b = split(d, 0.3, 5);
  EXPECT_EQ(a.test, b.test);
  EXPECT_NE(split(d, 0.3, 6).test, a.test);
  std::vector<PointId> all(a.test.begin(), a.test.end());
  all.insert(all.end(), a.unlabeled.begin(), a.unlabeled.end());
  std::sort(all.begin(), all.end());
  std::vector<PointId> expected(static_cast<std::size_t>(d.size()));
  std::iota(expected.begin(), expected.end(), 0);
  EXPECT_EQ(all, expected);
  a.check_invariants(d);
}
