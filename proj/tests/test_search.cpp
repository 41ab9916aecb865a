#include <gtest/gtest.h>

#include <numbers>
#include <random>

#include "landmarks/io.hpp"
#include "landmarks/search.hpp"
#include "scenarios.hpp"
#include "support.hpp"

using namespace landmarks;

namespace {

constexpr double kPi = std::numbers::pi;

std::string fixture(const std::string& name) { return std::string(LANDMARKS_DATA_DIR) + "/fixtures/" + name; }

Candidate at(double x, double error) {
  Candidate c;
  c.centroid = {x, 0, 0};
  c.error = error;
  return c;
}

/// A flat 5 mm grid patch in the z = 0 plane inside a box open above it.
PointCloud grid_patch(int n) {
  PointCloud c;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) c.points.push_back({(i + 0.5) * 0.005, (j + 0.5) * 0.005, 0.0});
  return c;
}

}  // namespace

TEST(CandidateError, PerfectOverlapIsZero) {
  const PointCloud patch = grid_patch(10);
  const OrientedBox box = OrientedBox::axis_aligned({0.025, 0.025, 0.02}, {0.06, 0.06, 0.06});
  EXPECT_EQ(candidate_error(patch, box, SpatialIndex(patch)), 0.0);
}

TEST(CandidateError, ShiftedSceneScoresTheShift) {
  const OrientedBox box = OrientedBox::axis_aligned({0, 0, 0}, {0.1, 0.1, 0.1});
  const PointCloud candidate{{{0, 0, 0}}};
  const PointCloud scene{{{0.01, 0, 0}}};
  EXPECT_DOUBLE_EQ(candidate_error(candidate, box, SpatialIndex(scene)), 0.01);
}

TEST(CandidateError, EmptyBoxFallsBackToNearestScenePoint) {
  const OrientedBox box = OrientedBox::axis_aligned({0, 0, 0}, {0.02, 0.02, 0.02});
  const PointCloud candidate{{{0, 0, 0}}};
  const PointCloud scene{{{0.03, 0, 0}}};
  EXPECT_DOUBLE_EQ(candidate_error(candidate, box, SpatialIndex(scene)), 0.03);
}

TEST(CandidateError, VisitedPointsAreCountedOnce) {
  // Both scene points claim candidate 0; candidate 1 is scored from the scene side.
  const OrientedBox box = OrientedBox::axis_aligned({0, 0, 0}, {0.1, 0.1, 0.1});
  const PointCloud candidate{{{0, 0, 0}, {0.04, 0, 0}}};
  const PointCloud scene{{{0.001, 0, 0}, {0, 0.002, 0}}};
  const double expected = (0.001 + 0.002 + std::hypot(0.039, 0.0)) / 3.0;
  EXPECT_NEAR(candidate_error(candidate, box, SpatialIndex(scene)), expected, 1e-15);
}

TEST(CandidateError, RejectsEmptyInputs) {
  const OrientedBox box = OrientedBox::axis_aligned({0, 0, 0}, {1, 1, 1});
  const PointCloud one{{{0, 0, 0}}};
  EXPECT_THROW(candidate_error(PointCloud{}, box, SpatialIndex(one)), Error);
  EXPECT_THROW(candidate_error(one, box, SpatialIndex()), Error);
}

TEST(CandidateError, MatchesNaiveOracleExactly) {
  std::mt19937_64 gen(51);
  std::uniform_int_distribution<int> sizes(1, 400);
  std::uniform_real_distribution<double> extent(0.05, 0.6);
  for (int trial = 0; trial < 300; ++trial) {
    const auto candidate = trial % 3 == 0 ? oracle::lattice_cloud(gen, sizes(gen), 3)
                                          : oracle::random_cloud(gen, sizes(gen), -0.3, 0.3);
    const auto scene = trial % 3 == 0 ? oracle::lattice_cloud(gen, sizes(gen), 4)
                                      : oracle::random_cloud(gen, sizes(gen), -0.5, 0.5);
    const Point3 size = trial % 3 == 0 ? Point3(4, 3, 5) : Point3(extent(gen), extent(gen), extent(gen));
    const OrientedBox box(oracle::random_transform(gen, 0.1, kPi), size);
    EXPECT_EQ(candidate_error(candidate, box, SpatialIndex(scene)), oracle::candidate_error(candidate, box, scene))
        << "trial " << trial;
  }
}

TEST(CandidateError, InvariantUnderRigidMotion) {
  std::mt19937_64 gen(52);
  for (int trial = 0; trial < 100; ++trial) {
    const auto candidate = oracle::random_cloud(gen, 150, -0.2, 0.2);
    const auto scene = oracle::random_cloud(gen, 300, -0.4, 0.4);
    const OrientedBox box(oracle::random_transform(gen, 0.05, kPi), {0.3, 0.25, 0.35});
    const auto T = oracle::random_transform(gen, 2.0, kPi);
    const double before = candidate_error(candidate, box, SpatialIndex(scene));
    const double after =
        candidate_error(transform_cloud(candidate, T), transform_box(box, T), SpatialIndex(transform_cloud(scene, T)));
    EXPECT_NEAR(after, before, 1e-9) << "trial " << trial;
  }
}

TEST(CandidateError, ClutterInEmptyBoxSpaceRaisesTheError) {
  const PointCloud patch = grid_patch(10);
  const OrientedBox box = OrientedBox::axis_aligned({0.025, 0.025, 0.03}, {0.06, 0.06, 0.08});
  PointCloud scene = patch;
  double previous = candidate_error(patch, box, SpatialIndex(scene));
  EXPECT_EQ(previous, 0.0);
  for (const auto& p : patch) {
    scene.points.push_back(p + Point3(0, 0, 0.03));
    const double now = candidate_error(patch, box, SpatialIndex(scene));
    EXPECT_GT(now, previous);
    previous = now;
  }
  EXPECT_NEAR(previous, 0.03 * 100 / 200, 1e-12);
}

TEST(CandidateError, ClutterOutsideTheBoxIsIgnored) {
  const PointCloud patch = grid_patch(10);
  const OrientedBox box = OrientedBox::axis_aligned({0.025, 0.025, 0.03}, {0.06, 0.06, 0.08});
  PointCloud scene = patch;
  for (const auto& p : patch) scene.points.push_back(p + Point3(0, 0, 0.2));
  EXPECT_EQ(candidate_error(patch, box, SpatialIndex(scene)), 0.0);
}

TEST(CandidateError, MarginsSeparateCornerFromEdge) {
  const auto s = scenario::corner_scores();
  EXPECT_LT(s.margin_corner, 0.0055);
  EXPECT_GT(s.margin_middle, 0.0055);
  EXPECT_LT(s.tight_corner, 0.0055);
  EXPECT_LT(s.tight_middle, 0.0055);
  EXPECT_NEAR(s.tight_corner, s.tight_middle, 0.001);
}

TEST(NonMaxSuppression, EmptyInput) { EXPECT_TRUE(non_max_suppression({}, 0.03).empty()); }

TEST(NonMaxSuppression, CloseCandidatesKeepTheBest) {
  const auto out = non_max_suppression({at(0.01, 0.004), at(0.0, 0.002)}, 0.03);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].error, 0.002);
}

TEST(NonMaxSuppression, DistantCandidatesBothSurviveInErrorOrder) {
  const auto out = non_max_suppression({at(0.05, 0.004), at(0.0, 0.002)}, 0.03);
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out[0].error, 0.002);
  EXPECT_EQ(out[1].error, 0.004);
}

TEST(NonMaxSuppression, RadiusIsClosed) {
  EXPECT_EQ(non_max_suppression({at(0.0, 0.001), at(0.03, 0.002)}, 0.03).size(), 1u);
}

TEST(NonMaxSuppression, EqualErrorsKeepTheEarlierCandidate) {
  auto a = at(0.0, 0.002), b = at(0.01, 0.002);
  a.ordinal = 7;
  b.ordinal = 3;
  const auto out = non_max_suppression({a, b}, 0.03);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].ordinal, 7u);
}

TEST(NonMaxSuppression, ChainSuppressesTheFarEnd) {
  // The far end is suppressed by its neighbour even though that neighbour
  // is itself suppressed.
  const auto out = non_max_suppression({at(0.0, 0.001), at(0.02, 0.002), at(0.04, 0.003)}, 0.03);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].error, 0.001);
}

TEST(NonMaxSuppression, RandomizedProperties) {
  std::mt19937_64 gen(53);
  std::uniform_real_distribution<double> pos(0.0, 0.3), err(0.0, 0.01);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<Candidate> in;
    const int n = 1 + trial % 60;
    for (int i = 0; i < n; ++i) {
      Candidate c;
      c.centroid = {pos(gen), pos(gen), pos(gen)};
      c.error = trial % 4 == 0 ? std::round(err(gen) * 500) / 500 : err(gen);
      c.ordinal = static_cast<std::size_t>(i);
      in.push_back(c);
    }
    const auto out = non_max_suppression(in, 0.05);
    ASSERT_FALSE(out.empty());
    double best = in[0].error;
    for (const auto& c : in) best = std::min(best, c.error);
    EXPECT_EQ(out[0].error, best);
    for (std::size_t i = 0; i < out.size(); ++i) {
      if (i > 0) {
        EXPECT_LE(out[i - 1].error, out[i].error);
      }
      for (std::size_t j = i + 1; j < out.size(); ++j)
        EXPECT_GT((out[i].centroid - out[j].centroid).norm(), 0.05);
    }
    // Every dropped candidate has a better candidate within the radius.
    for (const auto& c : in) {
      const bool kept = std::any_of(out.begin(), out.end(), [&](const Candidate& o) { return o.ordinal == c.ordinal; });
      if (kept) continue;
      const bool dominated = std::any_of(in.begin(), in.end(), [&](const Candidate& o) {
        return o.ordinal != c.ordinal && (o.centroid - c.centroid).norm() <= 0.05 &&
               (o.error < c.error || (o.error == c.error && o.ordinal < c.ordinal));
      });
      EXPECT_TRUE(dominated);
    }
    const auto again = non_max_suppression(out, 0.05);
    ASSERT_EQ(again.size(), out.size());
    for (std::size_t i = 0; i < out.size(); ++i) EXPECT_EQ(again[i].ordinal, out[i].ordinal);
  }
}

TEST(EvaluateSeed, SeedOnTheInstanceRecoversIt) {
  const Landmark knob = scenario::knob_landmark();
  const auto planted = scenario::planted_scene(knob, 61);
  const PointCloud scene = voxel_downsample(planted.cloud, 0.005);
  const PointCloud tmpl = voxel_downsample(knob.cloud, 0.005);
  const auto c = evaluate_seed(knob, tmpl, centroid(tmpl), SpatialIndex(scene), planted.anchor + Point3(0.005, 0, 0),
                               IcpParams{}, 4);
  EXPECT_EQ(c.ordinal, 4u);
  EXPECT_EQ(c.landmark_name, "knob");
  EXPECT_LT((c.centroid - planted.anchor).norm(), 0.002);
  EXPECT_LT(c.error, 0.0055);
}

TEST(FindLandmark, FindsItselfInTheCaptureScene) {
  const Landmark knob = io::load_landmark(io::read_file(fixture("knob.json")));
  const PointCloud scene = io::load_point_cloud(fixture("capture_scene.pcd")).cloud;
  const auto matches = find_landmark(scene, knob, SearchParams{});
  ASSERT_EQ(matches.size(), 1u);
  EXPECT_LT(matches[0].transform.translation().norm(), 0.005);
  EXPECT_LT(matches[0].transform.angle(), 2.0 * scenario::kDeg);
  EXPECT_EQ(matches[0].rank, 0u);
}

TEST(FindLandmark, FindsATranslatedCopy) {
  const Landmark knob = scenario::knob_landmark();
  const auto shift = RigidTransform::from_translation({0.15, -0.1, 0});
  synth::SceneSpec bg;
  bg.fixtures = {scenario::workspace_table(0.7)};
  bg.sensor = scenario::sensor();
  PointCloud scene = synth::generate_scene(bg, 62).cloud;
  for (const auto& p : knob.cloud) scene.points.push_back(shift(p));
  const auto matches = find_landmark(scene, knob, SearchParams{});
  ASSERT_EQ(matches.size(), 1u);
  EXPECT_LT((matches[0].transform.translation() - Point3(0.15, -0.1, 0)).norm(), 0.002);
  EXPECT_LT(matches[0].transform.angle(), 1.0 * scenario::kDeg);
}

TEST(FindLandmark, FindsThePlantedFixture) {
  const Landmark knob = io::load_landmark(io::read_file(fixture("knob.json")));
  const PointCloud scene = io::load_point_cloud(fixture("planted_scene.pcd")).cloud;
  const auto truth = io::json::parse(io::read_file(fixture("planted_truth.json")));
  const auto matches = find_landmark(scene, knob, SearchParams{});
  ASSERT_EQ(matches.size(), 1u);
  EXPECT_LT((matches[0].centroid - io::detail::vec3(truth["centroid"], "centroid")).norm(), 0.01);
}

TEST(FindLandmark, RejectsUnrelatedObjects) {
  const Landmark knob = scenario::knob_landmark();
  for (const std::uint64_t seed : {63, 64}) EXPECT_TRUE(find_landmark(scenario::distractor_scene(seed), knob, {}).empty());
  const PointCloud fixture_scene = io::load_point_cloud(fixture("distractor_scene.pcd")).cloud;
  EXPECT_TRUE(find_landmark(fixture_scene, io::load_landmark(io::read_file(fixture("knob.json"))), {}).empty());
}

TEST(FindLandmark, ThresholdIsStrict) {
  const Landmark knob = scenario::knob_landmark();
  const auto planted = scenario::planted_scene(knob, 65);
  const auto trace = find_landmark_traced(planted.cloud, knob, SearchParams{});
  ASSERT_FALSE(trace.survivors.empty());
  SearchParams at_best;
  at_best.error_threshold = trace.survivors[0].error;
  EXPECT_TRUE(find_landmark(planted.cloud, knob, at_best).empty());
  at_best.error_threshold = std::nextafter(trace.survivors[0].error, 1.0);
  EXPECT_EQ(find_landmark(planted.cloud, knob, at_best).size(), 1u);
}

TEST(FindLandmark, TraceIsConsistent) {
  const Landmark knob = scenario::knob_landmark();
  const auto planted = scenario::planted_scene(knob, 66);
  SearchParams params;
  params.sample_max = 200;
  const auto trace = find_landmark_traced(planted.cloud, knob, params);
  EXPECT_EQ(trace.candidates.size(), 200u);
  for (std::size_t i = 0; i < trace.candidates.size(); ++i) EXPECT_EQ(trace.candidates[i].ordinal, i);
  EXPECT_EQ(trace.template_cloud, voxel_downsample(knob.cloud, params.voxel_leaf));
  for (const auto& m : trace.matches) EXPECT_LT(m.error, params.error_threshold);
}

TEST(FindLandmark, ResultsDoNotDependOnThreadCount) {
  const Landmark knob = scenario::knob_landmark();
  const auto planted = scenario::planted_scene(knob, 67);
  SearchParams params;
  params.seed = 9;
  params.sample_max = 300;
  const auto one = find_landmark_traced(planted.cloud, knob, params, {1});
  const auto four = find_landmark_traced(planted.cloud, knob, params, {4});
  ASSERT_EQ(one.candidates.size(), four.candidates.size());
  for (std::size_t i = 0; i < one.candidates.size(); ++i) {
    EXPECT_EQ(one.candidates[i].error, four.candidates[i].error);
    EXPECT_EQ(one.candidates[i].transform.translation(), four.candidates[i].transform.translation());
  }
  ASSERT_EQ(one.matches.size(), four.matches.size());
}

TEST(FindLandmark, RejectsBadInput) {
  const Landmark knob = scenario::knob_landmark();
  SearchParams bad;
  bad.sample_fraction = 0.0;
  EXPECT_THROW(find_landmark(knob.cloud, knob, bad), ValidationError);
  const PointCloud outside{{{10, 10, 10}}};
  EXPECT_THROW(find_landmark(outside, knob, {}), Error);
  Landmark empty = knob;
  empty.cloud = {};
  EXPECT_THROW(find_landmark(knob.cloud, empty, {}), ValidationError);
}

TEST(TransferPose, IdentityMatchKeepsThePose) {
  Candidate c;
  const auto demo = RigidTransform::from_axis_angle(Point3::UnitX(), 0.3, {0.1, 0.2, 0.3});
  const auto out = transfer_pose(demo, c);
  EXPECT_LT((out.rotation() - demo.rotation()).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_EQ(out.translation(), demo.translation());
}

TEST(TransferPose, TranslatedMatchShiftsThePose) {
  Candidate c;
  c.transform = RigidTransform::from_translation({0.5, 0, 0});
  const auto out = transfer_pose(RigidTransform::from_translation({0.1, 0.2, 0.3}), c);
  EXPECT_LT((out.translation() - Point3(0.6, 0.2, 0.3)).norm(), 1e-15);
}

TEST(TransferPose, RotatedMatchRotatesAboutTheSceneOrigin) {
  Candidate c;
  c.transform = RigidTransform::from_axis_angle(Point3::UnitZ(), kPi / 2);
  const auto out = transfer_pose(RigidTransform::from_translation({1, 0, 0}), c);
  EXPECT_LT((out.translation() - Point3(0, 1, 0)).norm(), 1e-15);
}

TEST(TransferPose, FollowsTheObject) {
  // A grasp point on the landmark lands on the same point of the moved copy.
  std::mt19937_64 gen(54);
  for (int i = 0; i < 50; ++i) {
    Candidate c;
    c.transform = oracle::random_transform(gen, 1.0, kPi);
    const auto demo = oracle::random_transform(gen, 1.0, kPi);
    const Point3 local(0.01, -0.02, 0.03);
    EXPECT_LT((transfer_pose(demo, c)(local) - c.transform(demo(local))).norm(), 1e-12);
  }
}
