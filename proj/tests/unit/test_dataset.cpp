#include <jawgrasp/dataset.hpp>
#include <jawgrasp/dataset_io.hpp>
#include <jawgrasp/errors.hpp>
#include <jawgrasp/rng.hpp>

#include <gtest/gtest.h>
#include <json.hpp>

#include "scenes.hpp"

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

using namespace jawgrasp;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / "jawgrasp_dataset_tests" / name;
  fs::remove_all(p);
  fs::create_directories(p.parent_path());
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::map<std::string, std::string> tree_contents(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) out[fs::relative(e.path(), root).generic_string()] = slurp(e.path());
  return out;
}

std::vector<ObjectMesh> three_objects() {
  std::vector<ObjectMesh> out;
  for (auto& o : desk_primitives())
    if (o.id == "box_block" || o.id == "cyl_can" || o.id == "sphere_ball") out.push_back(o);
  return out;
}

DatasetConfig small_config() {
  DatasetConfig c;
  c.samples_per_object = 1500;
  c.dense_samples = 10000;
  c.metrics.dense_samples = 10000;
  c.quota = 3;
  c.views.intrinsics.width = 320;
  c.views.intrinsics.height = 240;
  c.views.intrinsics.fx = c.views.intrinsics.fy = 262.5;
  c.views.intrinsics.cx = 159.5;
  c.views.intrinsics.cy = 119.5;
  return c;
}

}  // namespace

TEST(Labels, FixedScoreTable) {
  struct Row {
    double q;
    int l2;
    int l3;
  };
  const double pos = 1.0 / 0.6, best = 1.0 / 0.5, mid = 1.0 / 1.2;
  const std::vector<Row> table = {
      {0.0, 0, 0},          {0.5, 0, 0},
      {1.0 / 2.0, 0, 0},    {1.0 / 1.6, 0, 0},
      {mid, 0, 1},          {std::nextafter(mid, 0.0), 0, 0},
      {1.0, 0, 1},          {1.0 / 0.8, 0, 1},
      {1.5, 0, 1},          {pos, 0, 1},
      {std::nextafter(pos, 9.0), 1, 1},  {1.7, 1, 1},
      {std::nextafter(best, 0.0), 1, 1}, {best, 1, 2},
      {1.0 / 0.45, 1, 2},   {2.5, 1, 2},
      {2.5 + 0.01 * 3, 1, 2}, {1.0 / 1.2 + 0.01 * 0.5, 0, 1},
      {1.0 / 0.8 + 0.01 * 12, 0, 1}, {10.0, 1, 2},
  };
  ASSERT_EQ(table.size(), 20u);
  for (const auto& r : table) {
    EXPECT_EQ(label_two_class(r.q), r.l2) << r.q;
    EXPECT_EQ(label_three_class(r.q), r.l3) << r.q;
  }
}

TEST(BinSpec, FromGridAndExactLookup) {
  const BinSpec s = BinSpec::from_grid(FrictionGrid{}, 7);
  EXPECT_EQ(s.gammas, FrictionGrid{}.values);
  EXPECT_EQ(s.quota, 7u);
  EXPECT_EQ(s.bin_of(0.8), std::optional<std::size_t>(3));
  EXPECT_FALSE(s.bin_of(0.81));
  EXPECT_FALSE(s.bin_of(std::nullopt));
}

TEST(SelectBalanced, ExactQuotaPerBinAndSorted) {
  Rng rng(91);
  const BinSpec spec{{0.4, 0.8, 2.0}, 5};
  std::vector<std::optional<double>> g;
  for (int i = 0; i < 200; ++i) {
    const auto k = rng.below(4);
    g.push_back(k == 3 ? std::nullopt : std::optional<double>(spec.gammas[k]));
  }
  const auto idx = select_balanced(g, spec, 1);
  EXPECT_TRUE(std::is_sorted(idx.begin(), idx.end()));
  std::map<double, int> count;
  for (auto i : idx) {
    ASSERT_TRUE(g[i]);
    ++count[*g[i]];
  }
  for (double x : spec.gammas) EXPECT_EQ(count[x], 5);
  EXPECT_EQ(idx, select_balanced(g, spec, 1));
  EXPECT_NE(idx, select_balanced(g, spec, 2));
}

TEST(SelectBalanced, ShortBinThrows) {
  const BinSpec spec{{0.4, 0.8}, 3};
  const std::vector<std::optional<double>> g = {0.4, 0.4, 0.4, 0.8, 0.8};
  try {
    select_balanced(g, spec, 0);
    FAIL();
  } catch (const InsufficientBinError& e) {
    EXPECT_EQ(e.bin(), 1.0 / 0.8);
    EXPECT_EQ(e.have(), 2u);
    EXPECT_EQ(e.need(), 3u);
  }
}

TEST(ExtractLocalPoints, RejectsUpsamplesDownsamples) {
  const GripperModel m;
  GraspConfig g;
  Rng rng(92);
  auto cloud_with = [&](std::size_t n) {
    PointCloud c;
    for (std::size_t i = 0; i < n; ++i)
      c.points.emplace_back(rng.uniform(-0.02, 0.02), rng.uniform(-0.03, 0.03), rng.uniform(-0.009, 0.009));
    // Points outside the region never count.
    for (int i = 0; i < 500; ++i) c.points.emplace_back(0.0, 0.0, rng.uniform(0.02, 0.2));
    return c;
  };
  EXPECT_FALSE(extract_local_points(g, m, cloud_with(49), m.max_aperture, 1));
  for (std::size_t n : {50u, 321u, 999u, 1000u, 4321u}) {
    const PointCloud c = cloud_with(n);
    const auto crop = extract_local_points(g, m, c, m.max_aperture, 2);
    ASSERT_TRUE(crop) << n;
    EXPECT_EQ(crop->region_count, n);
    ASSERT_EQ(crop->points.rows(), 1000);
    const Box3 region = closing_region(m, m.max_aperture);
    std::set<std::array<double, 3>> distinct;
    for (Eigen::Index r = 0; r < crop->points.rows(); ++r) {
      const Vec3 p = crop->points.row(r).transpose();
      EXPECT_TRUE(region.contains(p));
      distinct.insert({p.x(), p.y(), p.z()});
    }
    EXPECT_EQ(distinct.size(), std::min<std::size_t>(n, 1000));
  }
}

TEST(AugmentOffset, AlwaysInsideRegion) {
  const GripperModel m;
  Rng rng(93);
  for (int trial = 0; trial < 2000; ++trial) {
    const double aperture = rng.uniform(0.01, m.max_aperture);
    const Box3 region = closing_region(m, aperture);
    PointSet pts(40, 3);
    for (Eigen::Index r = 0; r < pts.rows(); ++r)
      for (int k = 0; k < 3; ++k) pts(r, k) = rng.uniform(region.lo[k], region.hi[k]);
    const PointSet out = augment_offset(pts, m, aperture, rng.below(1u << 30));
    const Vec3 shift = (out.row(0) - pts.row(0)).transpose();
    for (Eigen::Index r = 0; r < out.rows(); ++r) {
      EXPECT_TRUE(region.contains(out.row(r).transpose()));
      EXPECT_LT(((out.row(r) - pts.row(r)).transpose() - shift).norm(), 1e-12);
    }
  }
}

TEST(SampleGraspCandidates, CenterAndClosingAxisFromContacts) {
  const GripperModel m;
  const auto grasps = sample_grasp_candidates(make_cylinder(0.03, 0.1, 32), m, 300, 5);
  ASSERT_FALSE(grasps.empty());
  for (const auto& s : grasps) {
    const Vec3 d = s.contacts.p2 - s.contacts.p1;
    EXPECT_LE(d.norm(), m.max_aperture);
    EXPECT_LT((s.grasp.center - 0.5 * (s.contacts.p1 + s.contacts.p2)).norm(), 1e-12);
    EXPECT_NEAR(std::abs(s.grasp.closing().dot(d.normalized())), 1.0, 1e-12);
    EXPECT_TRUE(is_rotation(s.grasp.rotation));
    EXPECT_GE(s.approach_angle, 0.0);
    EXPECT_LT(s.approach_angle, std::numbers::pi / 2);
  }
}

TEST(RenderViews, FullCloudIsUnionOfViews) {
  ViewSetup setup = small_config().views;
  const TriMesh mesh = make_box(0.05, 0.05, 0.1);
  const auto views = render_views(mesh, setup);
  ASSERT_EQ(views.size(), 4u);
  for (const auto& v : views) {
    ASSERT_FALSE(v.cloud.empty());
    for (const auto& p : v.cloud.points) EXPECT_LT(distance_to_surface(mesh, p), 1e-9);
  }
}

class DatasetPipeline : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    a_ = fresh_dir("a");
    b_ = fresh_dir("b");
    DatasetConfig c = small_config();
    summary_ = generate_dataset(three_objects(), c, 17, a_);
    c.threads = 2;
    generate_dataset(three_objects(), c, 17, b_);
  }
  static inline fs::path a_, b_;
  static inline DatasetSummary summary_;
};

TEST_F(DatasetPipeline, ExactQuotaPerBinPerView) {
  for (ViewKind v : {ViewKind::Single, ViewKind::Full}) {
    ASSERT_EQ(summary_.bins.at(v).size(), 7u);
    for (auto n : summary_.bins.at(v)) EXPECT_EQ(n, 3u);
  }
  const auto manifest = nlohmann::json::parse(slurp(a_ / "manifest.json"));
  EXPECT_EQ(manifest["seed"], 17);
  for (const auto& [view, counts] : manifest["bins"].items())
    for (const auto& n : counts) EXPECT_EQ(n, 3);
}

TEST_F(DatasetPipeline, ByteIdenticalAcrossThreadCounts) {
  const auto ta = tree_contents(a_);
  const auto tb = tree_contents(b_);
  EXPECT_GT(ta.size(), 5u);
  EXPECT_EQ(ta, tb);
}

TEST_F(DatasetPipeline, LoadRevalidatesAndSingleViewNeverExceedsFull) {
  const LoadedDataset d = load_dataset(a_);
  ASSERT_EQ(d.records.size(), 2u * 7u * 3u);
  std::map<std::pair<std::string, std::size_t>, std::map<ViewKind, std::size_t>> counts;
  const Box3 region = closing_region(d.gripper, d.gripper.max_aperture);
  for (const auto& r : d.records) {
    EXPECT_EQ(r.label2, label_two_class(r.score.q));
    EXPECT_EQ(r.label3, label_three_class(r.score.q));
    ASSERT_EQ(r.local_points.rows(), 1000);
    for (Eigen::Index i = 0; i < r.local_points.rows(); ++i) {
      const Vec3 p = r.local_points.row(i).transpose();
      EXPECT_TRUE((p.array() >= region.lo.array() - 1e-6).all() && (p.array() <= region.hi.array() + 1e-6).all());
    }
    counts[{r.object_id, r.grasp_index}][r.view] = r.region_count;
  }
  for (const auto& [key, by_view] : counts)
    if (by_view.size() == 2) EXPECT_LE(by_view.at(ViewKind::Single), by_view.at(ViewKind::Full));
  EXPECT_EQ(load_dataset(a_, {ViewKind::Single}).records.size(), 21u);
}

TEST_F(DatasetPipeline, TamperedLabelIsRejected) {
  const fs::path c = fresh_dir("tampered");
  fs::copy(a_, c, fs::copy_options::recursive);
  fs::path jsonl;
  for (const auto& e : fs::directory_iterator(c / "grasps")) {
    jsonl = e.path();
    if (fs::file_size(jsonl) > 0) break;
  }
  std::istringstream in(slurp(jsonl));
  std::string line;
  std::ostringstream out;
  bool first = true;
  while (std::getline(in, line)) {
    if (first) {
      auto j = nlohmann::json::parse(line);
      j["label3"] = (j["label3"].get<int>() + 1) % 3;
      line = j.dump();
      first = false;
    }
    out << line << '\n';
  }
  std::ofstream(jsonl, std::ios::binary) << out.str();
  EXPECT_THROW(load_dataset(c), Error);
}

TEST_F(DatasetPipeline, DifferentSeedChangesRecords) {
  const fs::path c = fresh_dir("c");
  generate_dataset(three_objects(), small_config(), 18, c);
  EXPECT_NE(tree_contents(a_), tree_contents(c));
  EXPECT_EQ(load_dataset(c).records.size(), 42u);
}

TEST(DatasetPipelineErrors, ShortBinWritesNothing) {
  const fs::path p = fresh_dir("short");
  DatasetConfig c = small_config();
  c.samples_per_object = 100;
  c.quota = 50;
  EXPECT_THROW(generate_dataset(three_objects(), c, 1, p), InsufficientBinError);
  EXPECT_FALSE(fs::exists(p / "manifest.json"));
}

TEST(TensorFile, RoundTripAndOffsets) {
  Rng rng(94);
  std::vector<DatasetRecord> recs(3);
  for (auto& r : recs) {
    r.local_points = PointSet::Zero(1000, 3);
    for (Eigen::Index i = 0; i < 1000; ++i)
      for (int k = 0; k < 3; ++k) r.local_points(i, k) = static_cast<float>(rng.uniform(-0.05, 0.05));
    r.score.q = static_cast<float>(rng.uniform(0, 3));
    r.label2 = label_two_class(r.score.q);
    r.label3 = label_three_class(r.score.q);
  }
  const fs::path p = fresh_dir("tensor") += ".bin";
  const auto offsets = write_tensor_file(p, recs);
  ASSERT_EQ(offsets.size(), 3u);
  EXPECT_EQ(offsets[0], kTensorHeaderBytes);
  EXPECT_EQ(fs::file_size(p), kTensorHeaderBytes + 3 * (4 + 12000 + 4 + 2));
  const auto back = read_tensor_file(p);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(back[i].points, recs[i].local_points);
    EXPECT_EQ(back[i].q, static_cast<float>(recs[i].score.q));
    EXPECT_EQ(back[i].label3, recs[i].label3);
    EXPECT_EQ(read_tensor_at(p, offsets[i]).points, recs[i].local_points);
  }
  const std::string head = slurp(p).substr(0, 4);
  EXPECT_EQ(head, "PGPD");
  fs::resize_file(p, fs::file_size(p) - 1);
  EXPECT_THROW(read_tensor_file(p), ParseError);
}
