#include <doctest.h>

#include <algorithm>
#include <random>

#include "advdet/attack.hpp"
#include "advdet/baselines.hpp"
#include "advdet/error.hpp"
#include "test_support.hpp"

using namespace advdet;

TEST_CASE("msp_score inverts the maximum probability") {
  Eigen::VectorXd p(2);
  p << 1.0, 0.0;
  CHECK(msp_score(p) == doctest::Approx(0.0));
  p << 0.7, 0.3;
  CHECK(msp_score(p) == doctest::Approx(0.3));
  Eigen::VectorXd uniform(5);
  uniform.setConstant(0.2);
  CHECK(msp_score(uniform) == doctest::Approx(0.8));
}

namespace {

ReferenceIndex index_from(const std::vector<std::vector<Eigen::VectorXd>>& refs) {
  ReferenceIndex index;
  index.per_class = refs;
  return index;
}

Eigen::VectorXd vec1(double x) {
  Eigen::VectorXd v(1);
  v << x;
  return v;
}

}  // namespace

TEST_CASE("dist_score hand-constructed two-point case") {
  // Class 0 references at distance 1 and 2 from the probe (mean 1.5), class 1
  // at 0.4 and 0.6 (mean 0.5). Predicted class 0 scores 1.5 - 0.5 = 1.0.
  ReferenceIndex index = index_from({{vec1(1.0), vec1(2.0)},
                                     {vec1(-0.4), vec1(-0.6)}});
  DistConfig config{2};
  CHECK(dist_score(index, vec1(0.0), 0, config) == doctest::Approx(1.0));
  // Probe coincident with class 0: strongly negative (natural-like).
  ReferenceIndex tight = index_from({{vec1(0.0), vec1(0.0)},
                                     {vec1(5.0), vec1(6.0)}});
  CHECK(dist_score(tight, vec1(0.0), 0, config) < -4.0);
}

TEST_CASE("dist_score matches a brute-force recomputation") {
  std::mt19937 rng(31);
  std::normal_distribution<double> dist(0.0, 1.0);
  auto random_vec = [&](int dim) {
    Eigen::VectorXd v(dim);
    for (int i = 0; i < dim; ++i) v(i) = dist(rng);
    return v;
  };

  const int dim = 8;
  std::vector<std::vector<Eigen::VectorXd>> refs(3);
  for (int c = 0; c < 3; ++c) {
    const int n = 30 + static_cast<int>(rng() % 21);  // up to 50 points
    for (int i = 0; i < n; ++i) refs[c].push_back(random_vec(dim));
  }
  ReferenceIndex index = index_from(refs);

  for (int trial = 0; trial < 20; ++trial) {
    Eigen::VectorXd probe = random_vec(dim);
    const int predicted = static_cast<int>(rng() % 3);
    const int k = 1 + static_cast<int>(rng() % 30);

    // Oracle: full sort of all pairwise distances.
    std::vector<double> means(3);
    for (int c = 0; c < 3; ++c) {
      std::vector<double> d;
      for (const auto& r : refs[c]) d.push_back((r - probe).norm());
      std::sort(d.begin(), d.end());
      double acc = 0.0;
      for (int i = 0; i < k; ++i) acc += d[i];
      means[c] = acc / k;
    }
    double min_other = 1e300;
    for (int c = 0; c < 3; ++c) {
      if (c != predicted) min_other = std::min(min_other, means[c]);
    }
    const double expected = means[predicted] - min_other;
    CHECK(dist_score(index, probe, predicted, DistConfig{k}) ==
          doctest::Approx(expected).epsilon(1e-9));
  }
}

TEST_CASE("dist_score with k equal to the class size uses full means") {
  std::mt19937 rng(37);
  std::normal_distribution<double> dist(0.0, 1.0);
  std::vector<std::vector<Eigen::VectorXd>> refs(2);
  for (int c = 0; c < 2; ++c) {
    for (int i = 0; i < 12; ++i) {
      Eigen::VectorXd v(4);
      for (int j = 0; j < 4; ++j) v(j) = dist(rng);
      refs[c].push_back(v);
    }
  }
  ReferenceIndex index = index_from(refs);
  Eigen::VectorXd probe = Eigen::VectorXd::Zero(4);

  std::vector<double> full_means(2);
  for (int c = 0; c < 2; ++c) {
    double acc = 0.0;
    for (const auto& r : refs[c]) acc += (r - probe).norm();
    full_means[c] = acc / 12.0;
  }
  CHECK(dist_score(index, probe, 0, DistConfig{12}) ==
        doctest::Approx(full_means[0] - full_means[1]).epsilon(1e-12));

  SUBCASE("k larger than a class errors") {
    CHECK_THROWS_AS(dist_score(index, probe, 0, DistConfig{13}), Error);
  }
}

TEST_CASE("neighbor_augmented_score") {
  TokenSequence s = testsup::seq({"a", "b", "c", "d"});
  std::vector<MaskScheduleEntry> schedule{{0.3, 7}};

  SUBCASE("constant scorer is unchanged") {
    auto constant = [](const TokenSequence&) { return 0.42; };
    CHECK(neighbor_augmented_score(constant, s, schedule, 5) ==
          doctest::Approx(0.42).epsilon(1e-12));
  }

  SUBCASE("single rate-zero neighbor equals the base score") {
    VictimModel m = testsup::random_model();
    auto scorer = [&](const TokenSequence& t) { return msp_score(predict(m, t)); };
    std::vector<MaskScheduleEntry> identity{{0.0, 1}};
    CHECK(neighbor_augmented_score(scorer, s, identity, 5) ==
          doctest::Approx(scorer(s)).epsilon(1e-12));
  }

  SUBCASE("matches an explicit loop-and-average oracle") {
    VictimModel m = testsup::random_model(2, 256, 16, 107);
    auto scorer = [&](const TokenSequence& t) { return msp_score(predict(m, t)); };
    const double impl = neighbor_augmented_score(scorer, s, schedule, 19);

    auto neighbors = mask_neighbors(s, schedule, 19);
    double acc = scorer(s);
    for (const auto& n : neighbors) acc += scorer(n);
    const double oracle = acc / (1.0 + static_cast<double>(neighbors.size()));
    CHECK(impl == doctest::Approx(oracle).epsilon(1e-12));
  }

  SUBCASE("deterministic under a fixed seed") {
    VictimModel m = testsup::random_model();
    auto scorer = [&](const TokenSequence& t) { return msp_score(predict(m, t)); };
    CHECK(neighbor_augmented_score(scorer, s, schedule, 3) ==
          neighbor_augmented_score(scorer, s, schedule, 3));
  }
}

TEST_CASE("boundary_gap_diagnostic means per group") {
  VictimModel m = testsup::random_model(2, 256, 16, 109);

  SUBCASE("uniform model gives zero gaps") {
    VictimModel flat = m;
    flat.w1.setZero();
    flat.w2.setZero();
    ExampleGroups groups;
    groups.natural = {testsup::seq({"a"}), testsup::seq({"b", "c"})};
    BoundaryGapSummary summary = boundary_gap_diagnostic(flat, groups);
    REQUIRE(summary.natural.has_value());
    CHECK(*summary.natural == doctest::Approx(0.0));
    CHECK_FALSE(summary.detected.has_value());
    CHECK_FALSE(summary.failed.has_value());
    CHECK_FALSE(summary.overall.has_value());
  }

  SUBCASE("singleton groups equal the single gap, means match hand-averaging") {
    ExampleGroups groups;
    std::mt19937 rng(41);
    std::vector<double> gaps;
    for (int i = 0; i < 5; ++i) {
      TokenSequence s = testsup::random_seq(rng);
      groups.overall.push_back(s);
      gaps.push_back(boundary_gap(predict(m, s)));
    }
    groups.detected.push_back(groups.overall[0]);
    BoundaryGapSummary summary = boundary_gap_diagnostic(m, groups);
    REQUIRE(summary.detected.has_value());
    CHECK(*summary.detected == doctest::Approx(gaps[0]));
    REQUIRE(summary.overall.has_value());
    CHECK(*summary.overall == doctest::Approx(testsup::mean_of(gaps)));
  }
}

TEST_CASE("build_reference_index groups by gold label") {
  VictimModel m = testsup::random_model(2, 256, 16, 113);
  Dataset d;
  d.num_classes = 2;
  d.examples.push_back(testsup::example({"a", "b"}, 0, "i0"));
  d.examples.push_back(testsup::example({"c", "d"}, 1, "i1"));
  d.examples.push_back(testsup::example({"e", "f"}, 0, "i2"));
  ReferenceIndex index = build_reference_index(m, d);
  REQUIRE(index.per_class.size() == 2);
  CHECK(index.per_class[0].size() == 2);
  CHECK(index.per_class[1].size() == 1);
  CHECK(index.per_class[0][0] == features(m, d.examples[0].sequence));
}
