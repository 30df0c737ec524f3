#include <vector>

#include <Eigen/Dense>

#include "doctest.h"
#include "duti/eval.hpp"

using namespace duti;

TEST_CASE("precision-recall points come from ranking prefixes") {
  const std::vector<int> ranked = {3, 1, 2};
  const std::vector<int> bugs = {1, 5};
  const PrCurve c = pr_curve(ranked, bugs);
  REQUIRE(c.recall.size() == 3);
  REQUIRE(c.precision.size() == 3);
  CHECK(c.recall[0] == 0.0);
  CHECK(c.precision[0] == 0.0);
  CHECK(c.recall[1] == 0.5);
  CHECK(c.precision[1] == 0.5);
  CHECK(c.recall[2] == 0.5);
  CHECK(c.precision[2] == doctest::Approx(1.0 / 3.0));

  CHECK_THROWS_AS(pr_curve(ranked, {}), std::invalid_argument);
}

TEST_CASE("recall never decreases along the ranking") {
  const std::vector<int> ranked = {0, 4, 2, 6, 1, 3};
  const std::vector<int> bugs = {2, 3, 9};
  const PrCurve c = pr_curve(ranked, bugs);
  for (size_t j = 0; j + 1 < c.recall.size(); ++j)
    CHECK(c.recall[j] <= c.recall[j + 1]);
}

TEST_CASE("interpolation takes the best precision at or beyond the recall level") {
  const PrCurve c = pr_curve({3, 1, 2}, {1, 5});
  CHECK(interpolated_precision(c, 0.0) == 0.5);
  CHECK(interpolated_precision(c, 0.5) == 0.5);
  CHECK(interpolated_precision(c, 0.51) == 0.0);  // the curve never gets there
}

TEST_CASE("the recall grid has 21 evenly spaced points") {
  REQUIRE(kRecallGrid.size() == 21);
  CHECK(kRecallGrid.front() == 0.0);
  CHECK(kRecallGrid.back() == 1.0);
  for (size_t i = 0; i < kRecallGrid.size(); ++i)
    CHECK(kRecallGrid[i] == doctest::Approx(0.05 * i).epsilon(1e-12));
}

TEST_CASE("averaging and area agree with a hand computation") {
  // curve A finds one of two bugs: precision 0.5 up to recall 0.5, then nothing
  const PrCurve a = pr_curve({3, 1, 2}, {1, 5});
  // curve B is a perfect ranking of the same bugs
  const PrCurve b = pr_curve({1, 5}, {1, 5});

  const std::vector<double> avg = average_pr({a, b});
  REQUIRE(avg.size() == 21);
  for (size_t i = 0; i < avg.size(); ++i) {
    const double want = kRecallGrid[i] <= 0.5 ? 0.75 : 0.5;
    CHECK(avg[i] == doctest::Approx(want));
  }
  CHECK(pr_auc(avg) == doctest::Approx(0.625));

  const std::vector<double> perfect = average_pr({b, b});
  for (double v : perfect) CHECK(v == doctest::Approx(1.0));
  CHECK(pr_auc(perfect) == doctest::Approx(1.0));
}

TEST_CASE("fix curve counts correctly repaired bugs along the ranking") {
  Eigen::VectorXi truth(6);
  truth << 0, 2, 0, 1, 0, 2;
  const std::vector<int> ranked = {3, 1, 2};
  const std::vector<int> fixes = {1, 2, 1};
  const std::vector<int> bugs = {1, 5};

  const FixCurve fc = fix_curve(ranked, fixes, truth, bugs);
  REQUIRE(fc.examined.size() == 3);
  CHECK(fc.examined == std::vector<int>{1, 2, 3});
  // item 3 is not a bug; item 1 is a bug and its suggested label matches the
  // truth; item 2 is clean so the count stays flat
  CHECK(fc.correct == std::vector<int>{0, 1, 1});

  const FixCurve wrong = fix_curve({1}, {0}, truth, bugs);
  CHECK(wrong.correct == std::vector<int>{0});
}
