#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "advdet/error.hpp"
#include "advdet/eval.hpp"
#include "test_support.hpp"

using namespace advdet;

namespace {

std::vector<ScoredExample> scored_from(const std::vector<double>& nat,
                                       const std::vector<double>& adv) {
  std::vector<ScoredExample> out;
  int i = 0;
  for (double s : nat) out.push_back({"n" + std::to_string(i++), s, false});
  i = 0;
  for (double s : adv) out.push_back({"a" + std::to_string(i++), s, true});
  return out;
}

}  // namespace

TEST_CASE("choose_threshold on enumerable cases") {
  SUBCASE("ten natural scores at target 0.1 admit exactly one") {
    std::vector<double> nat;
    for (int i = 1; i <= 10; ++i) nat.push_back(i / 10.0);
    auto scored = scored_from(nat, {});
    const double t = choose_threshold(scored, 0.1);
    CHECK(t == doctest::Approx(1.0));
    // Exactly one natural example is at or above the threshold.
    std::size_t fp = 0;
    for (double s : nat) fp += s >= t ? 1 : 0;
    CHECK(fp == 1);
  }

  SUBCASE("target zero puts the threshold above every natural score") {
    auto scored = scored_from({0.2, 0.5, 0.9}, {1.5, 0.3});
    const double t = choose_threshold(scored, 0.0);
    CHECK(t > 0.9);
    CHECK(t == doctest::Approx(1.5));  // smallest observed score above
  }

  SUBCASE("all natural scores tied forces FPR zero") {
    auto scored = scored_from({0.5, 0.5, 0.5, 0.5}, {0.5, 0.7});
    const double t = choose_threshold(scored, 0.1);
    CHECK(t > 0.5);
    std::size_t fp = 0;
    for (int i = 0; i < 4; ++i) fp += 0.5 >= t ? 1 : 0;
    CHECK(fp == 0);
  }

  SUBCASE("no natural examples is an error") {
    auto scored = scored_from({}, {0.1, 0.2});
    CHECK_THROWS_AS(choose_threshold(scored, 0.1), Error);
  }
}

TEST_CASE("choose_threshold never exceeds the FPR target") {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> nat, adv;
    const int n_nat = 5 + static_cast<int>(rng() % 60);
    const int n_adv = 1 + static_cast<int>(rng() % 60);
    for (int i = 0; i < n_nat; ++i) nat.push_back(std::round(dist(rng) * 20) / 20);
    for (int i = 0; i < n_adv; ++i) adv.push_back(std::round(dist(rng) * 20) / 20);
    const double target = dist(rng) * 0.4;
    auto scored = scored_from(nat, adv);
    const double t = choose_threshold(scored, target);
    std::size_t fp = 0;
    for (double s : nat) fp += s >= t ? 1 : 0;
    CHECK(static_cast<double>(fp) / n_nat <= target + 1e-12);
  }
}

TEST_CASE("compute_metrics confusion arithmetic") {
  SUBCASE("perfect separation") {
    auto scored = scored_from({0.1, 0.2}, {0.8, 0.9});
    auto [tpr, f1] = compute_metrics(scored, 0.5);
    CHECK(tpr == doctest::Approx(1.0));
    CHECK(f1 == doctest::Approx(1.0));
  }

  SUBCASE("nothing flagged") {
    auto scored = scored_from({0.1, 0.2}, {0.3, 0.4});
    auto [tpr, f1] = compute_metrics(scored, 0.9);
    CHECK(tpr == 0.0);
    CHECK(f1 == 0.0);
  }

  SUBCASE("TP=8 FP=1 FN=2") {
    std::vector<double> adv(8, 0.9);
    adv.push_back(0.1);
    adv.push_back(0.2);
    std::vector<double> nat(9, 0.05);
    nat.push_back(0.95);
    auto scored = scored_from(nat, adv);
    auto [tpr, f1] = compute_metrics(scored, 0.5);
    CHECK(tpr == doctest::Approx(0.8));
    CHECK(f1 == doctest::Approx(0.8421052631578947));
  }
}

TEST_CASE("auc on enumerable cases") {
  SUBCASE("perfect separation") {
    CHECK(auc(scored_from({0.3, 0.1}, {0.9, 0.8})) == doctest::Approx(1.0));
  }
  SUBCASE("identical distributions give a half") {
    CHECK(auc(scored_from({0.5, 0.5}, {0.5, 0.5})) == doctest::Approx(0.5));
  }
  SUBCASE("three quarters") {
    CHECK(auc(scored_from({0.5, 0.1}, {0.9, 0.2})) == doctest::Approx(0.75));
  }
  SUBCASE("single class errors") {
    CHECK_THROWS_AS(auc(scored_from({}, {0.5})), Error);
    CHECK_THROWS_AS(auc(scored_from({0.5}, {})), Error);
  }
}

TEST_CASE("auc equals the pairwise oracle exactly") {
  std::mt19937 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> nat, adv;
    const int n_nat = 1 + static_cast<int>(rng() % 100);
    const int n_adv = 1 + static_cast<int>(rng() % 100);
    // Coarse grid forces plenty of ties.
    for (int i = 0; i < n_nat; ++i) nat.push_back((rng() % 12) / 12.0);
    for (int i = 0; i < n_adv; ++i) adv.push_back((rng() % 12) / 12.0);
    const double expected = testsup::pairwise_auc(adv, nat);
    CHECK(auc(scored_from(nat, adv)) == expected);
  }
}

TEST_CASE("auc is invariant under strictly increasing transforms") {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  std::vector<double> nat, adv;
  for (int i = 0; i < 40; ++i) nat.push_back(dist(rng));
  for (int i = 0; i < 40; ++i) adv.push_back(dist(rng));
  const double base = auc(scored_from(nat, adv));

  auto transform = [](std::vector<double> v, auto f) {
    for (double& x : v) x = f(x);
    return v;
  };
  auto expmap = [](double x) { return std::exp(3.0 * x); };
  auto logmap = [](double x) { return std::log(x + 1.1); };
  CHECK(auc(scored_from(transform(nat, expmap), transform(adv, expmap))) ==
        doctest::Approx(base).epsilon(1e-12));
  CHECK(auc(scored_from(transform(nat, logmap), transform(adv, logmap))) ==
        doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("evaluate_detector assembles a full report") {
  auto scored = scored_from({0.1, 0.2, 0.3, 0.35}, {0.8, 0.9, 0.25, 0.95});
  DetectionReport report = evaluate_detector("msp", scored, 0.1);
  CHECK(report.detector == "msp");
  CHECK(report.n_nat == 4);
  CHECK(report.n_adv == 4);
  CHECK(report.fpr_target == 0.1);
  std::size_t fp = 0;
  for (int i = 0; i < 4; ++i) fp += scored[i].adversariality >= report.threshold;
  CHECK(static_cast<double>(fp) / 4.0 <= 0.1);
  CHECK(report.auc == doctest::Approx(testsup::pairwise_auc(
                          {0.8, 0.9, 0.25, 0.95}, {0.1, 0.2, 0.3, 0.35})));
}

TEST_CASE("mu_du_map emits one CSV row per input") {
  SUBCASE("empty input is header-only") {
    CHECK(mu_du_map({}) == "id,mu,du,origin\n");
  }

  SUBCASE("origins and row count") {
    std::vector<std::tuple<std::string, UncertaintyScores, Origin>> rows;
    rows.emplace_back("a", UncertaintyScores{0.25, 0.5}, Origin::kNatural);
    rows.emplace_back("b", UncertaintyScores{0.1, 0.75}, Origin::kAdvRegular);
    rows.emplace_back("c", UncertaintyScores{0.0, 1.0}, Origin::kAdvFarBoundary);
    const std::string csv = mu_du_map(rows);
    CHECK(csv == "id,mu,du,origin\n"
                 "a,0.25,0.5,natural\n"
                 "b,0.1,0.75,adv\n"
                 "c,0,1,adv_fb\n");
  }
}

namespace {

std::vector<std::pair<std::string, UncertaintyScores>> points(
    const std::vector<std::pair<double, double>>& du_mu) {
  std::vector<std::pair<std::string, UncertaintyScores>> out;
  int i = 0;
  for (const auto& [du, mu] : du_mu) {
    out.emplace_back("p" + std::to_string(i++), UncertaintyScores{mu, du});
  }
  return out;
}

}  // namespace

TEST_CASE("ada_select quadrants") {
  SUBCASE("four corners land in four distinct quadrants") {
    auto scores = points({{0.1, 0.1}, {0.1, 0.9}, {0.9, 0.1}, {0.9, 0.9}});
    CHECK(ada_select(scores, Quadrant::kLDLM) == std::vector<std::string>{"p0"});
    CHECK(ada_select(scores, Quadrant::kLDHM) == std::vector<std::string>{"p1"});
    CHECK(ada_select(scores, Quadrant::kHDLM) == std::vector<std::string>{"p2"});
    CHECK(ada_select(scores, Quadrant::kHDHM) == std::vector<std::string>{"p3"});
  }

  SUBCASE("identical points all fall to the low-low side") {
    auto scores = points({{0.4, 0.2}, {0.4, 0.2}, {0.4, 0.2}});
    CHECK(ada_select(scores, Quadrant::kLDLM).size() == 3);
    CHECK(ada_select(scores, Quadrant::kHDHM).empty());
  }

  SUBCASE("quadrants partition arbitrary inputs") {
    std::mt19937 rng(13);
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    std::vector<std::pair<double, double>> du_mu;
    for (int i = 0; i < 57; ++i) du_mu.emplace_back(dist(rng), dist(rng));
    auto scores = points(du_mu);

    std::set<std::string> seen;
    std::size_t total = 0;
    for (Quadrant q : {Quadrant::kHDHM, Quadrant::kHDLM, Quadrant::kLDHM,
                       Quadrant::kLDLM}) {
      for (const std::string& id : ada_select(scores, q)) {
        CHECK(seen.insert(id).second);  // disjoint
        ++total;
      }
    }
    CHECK(total == scores.size());  // covering
  }

  SUBCASE("101 distinct points split 26/25/25/25") {
    // du ranks 0..100; mu = (2*du) mod 101 spreads ranks so the lower-median
    // rule yields the documented sizes.
    std::vector<std::pair<double, double>> du_mu;
    for (int i = 0; i <= 100; ++i) {
      du_mu.emplace_back(i / 100.0, ((2 * i) % 101) / 100.0);
    }
    auto scores = points(du_mu);
    CHECK(ada_select(scores, Quadrant::kLDLM).size() == 26);
    CHECK(ada_select(scores, Quadrant::kLDHM).size() == 25);
    CHECK(ada_select(scores, Quadrant::kHDLM).size() == 25);
    CHECK(ada_select(scores, Quadrant::kHDHM).size() == 25);
  }

  SUBCASE("fewer than two examples errors") {
    CHECK_THROWS_AS(ada_select(points({{0.5, 0.5}}), Quadrant::kLDLM), Error);
  }
}

TEST_CASE("retrain_with_augmentation") {
  Dataset train_set;
  train_set.num_classes = 2;
  train_set.split_tag = SplitTag::kTrain;
  std::mt19937 rng(17);
  for (int i = 0; i < 50; ++i) {
    std::vector<std::string> tokens;
    for (int j = 0; j < 5; ++j) {
      tokens.push_back("c" + std::to_string(i % 2) + "w" +
                       std::to_string(rng() % 8));
    }
    train_set.examples.push_back(
        testsup::example(tokens, i % 2, "t" + std::to_string(i)));
  }

  Dataset adv_corpus;
  adv_corpus.num_classes = 2;
  for (int i = 0; i < 6; ++i) {
    LabeledExample e = testsup::example({"adv", "w" + std::to_string(i)},
                                        i % 2, "t" + std::to_string(i));
    e.origin = Origin::kAdvRegular;
    adv_corpus.examples.push_back(e);
  }

  ModelConfig config;
  config.feature_dim = 256;
  config.hidden_dim = 8;
  config.num_classes = 2;
  config.learning_rate = 0.3;
  config.epochs = 3;
  config.seed = 19;

  SUBCASE("empty augment list reproduces the base model bit-for-bit") {
    VictimModel base = train(config, train_set);
    VictimModel retrained =
        retrain_with_augmentation(train_set, {}, adv_corpus, config);
    CHECK(base.w1 == retrained.w1);
    CHECK(base.b1 == retrained.b1);
    CHECK(base.w2 == retrained.w2);
    CHECK(base.b2 == retrained.b2);
  }

  SUBCASE("duplicate ids are rejected") {
    CHECK_THROWS_AS(retrain_with_augmentation(
                        train_set, {"t0#adv", "t0#adv"}, adv_corpus, config),
                    Error);
  }

  SUBCASE("unresolved ids are rejected") {
    CHECK_THROWS_AS(retrain_with_augmentation(train_set, {"missing#adv"},
                                              adv_corpus, config),
                    Error);
  }

  SUBCASE("augmenting with n examples changes the model") {
    VictimModel base = train(config, train_set);
    VictimModel retrained = retrain_with_augmentation(
        train_set, {"t0#adv", "t1#adv", "t2#adv"}, adv_corpus, config);
    CHECK(base.w1 != retrained.w1);
  }
}
