#include <doctest.h>

#include "gwm/error.hpp"
#include "gwm/eval.hpp"
#include "gwm/prng.hpp"
#include "gwm/scenes.hpp"

#include <json.hpp>

using namespace gwm;

namespace {

LabelMap map_from(std::initializer_list<int> labels, int w, int h) {
  LabelMap map(w, h);
  std::copy(labels.begin(), labels.end(), map.labels.begin());
  return map;
}

}  // namespace

TEST_CASE("jaccard basics") {
  LabelMap a(4, 2), b(4, 2);
  SUBCASE("both empty is a perfect frame") { CHECK(jaccard(a, b) == 1.0); }
  SUBCASE("identical nonempty masks") {
    a.labels = {1, 1, 0, 0, 1, 0, 0, 0};
    CHECK(jaccard(a, a) == 1.0);
  }
  SUBCASE("disjoint nonempty masks") {
    a.labels = {1, 1, 0, 0, 0, 0, 0, 0};
    b.labels = {0, 0, 1, 1, 0, 0, 0, 0};
    CHECK(jaccard(a, b) == 0.0);
  }
  SUBCASE("dimension mismatch") {
    LabelMap c(3, 2);
    CHECK_THROWS_AS(jaccard(a, c), Error);
  }
}

TEST_CASE("jaccard on the hand-counted 6x1 instance is 0.75") {
  const LabelMap pred = map_from({1, 1, 1, 0, 0, 0}, 6, 1);  // left half
  const LabelMap gt = map_from({1, 1, 1, 1, 0, 0}, 6, 1);    // left two-thirds
  CHECK(jaccard(pred, gt) == doctest::Approx(0.75));
  CHECK(jaccard(gt, pred) == doctest::Approx(0.75));  // symmetry
}

TEST_CASE("jaccard is invariant under simultaneous transposition") {
  Prng rng(301);
  LabelMap a(7, 5), b(7, 5), at(5, 7), bt(5, 7);
  for (int y = 0; y < 5; ++y)
    for (int x = 0; x < 7; ++x) {
      a.at(x, y) = static_cast<int>(rng.below(2));
      b.at(x, y) = static_cast<int>(rng.below(2));
      at.at(y, x) = a.at(x, y);
      bt.at(y, x) = b.at(x, y);
    }
  CHECK(jaccard(a, b) == jaccard(at, bt));
}

TEST_CASE("oracle assignment finds the exact best component subset") {
  SUBCASE("two components matching ground truth exactly") {
    LabelMap gt(6, 1);
    gt.labels = {1, 1, 1, 0, 0, 0};
    const SoftMasks masks = one_hot_masks(map_from({1, 1, 1, 0, 0, 0}, 6, 1), 2);
    const auto oracle = oracle_component_assignment(masks, gt);
    CHECK(oracle.j == 1.0);
    CHECK(oracle.foreground == std::vector<bool>{false, true});
  }
  SUBCASE("foreground split across components 1 and 3 of four") {
    LabelMap comp(8, 1);
    comp.labels = {1, 1, 3, 3, 0, 0, 2, 2};
    LabelMap gt(8, 1);
    gt.labels = {1, 1, 1, 1, 0, 0, 0, 0};
    const auto oracle = oracle_component_assignment(one_hot_masks(comp, 4), gt);
    CHECK(oracle.j == 1.0);
    CHECK(oracle.foreground == std::vector<bool>{false, true, false, true});
  }
  SUBCASE("oracle dominates every fixed assignment, exhaustively for K <= 4") {
    Prng rng(307);
    for (int trial = 0; trial < 10; ++trial) {
      const int k = 2 + static_cast<int>(rng.below(3));
      SoftMasks masks(k, 6, 5);
      LabelMap gt(6, 5);
      for (std::size_t u = 0; u < masks.pixels(); ++u) {
        masks.at(u, rng.below(k)) = 1.0;
        gt.labels[u] = static_cast<int>(rng.below(2));
      }
      const auto oracle = oracle_component_assignment(masks, gt);
      const LabelMap arg = masks.argmax();
      for (unsigned subset = 1; subset + 1 < (1u << k); ++subset) {
        LabelMap pred(6, 5);
        for (std::size_t u = 0; u < pred.labels.size(); ++u)
          pred.labels[u] = (subset >> arg.labels[u]) & 1u;
        CHECK(oracle.j >= jaccard(pred, gt) - 1e-12);
      }
    }
  }
  SUBCASE("K above 16 is rejected") {
    const SoftMasks masks(17, 2, 2);
    const LabelMap gt(2, 2);
    try {
      oracle_component_assignment(masks, gt);
      FAIL("expected KTooLarge");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::KTooLarge);
    }
  }
}

TEST_CASE("evaluate_run aggregates per-frame scores") {
  LabelMap gt(10, 1);
  gt.labels = {1, 1, 1, 1, 1, 0, 0, 0, 0, 0};

  SUBCASE("ground truth as predictions scores 1") {
    const std::vector<LabelMap> gts = {gt, gt};
    const auto report = evaluate_run(gts, gts);
    CHECK(report.mean == 1.0);
    CHECK(report.frames() == 2);
  }
  SUBCASE("all-background predictions score 0 on nonempty gt") {
    const std::vector<LabelMap> gts = {gt};
    const std::vector<LabelMap> preds = {LabelMap(10, 1)};
    CHECK(evaluate_run(gts, preds).mean == 0.0);
  }
  SUBCASE("mean of 0.6 and 0.8 is 0.7") {
    LabelMap p_06(10, 1), p_08(10, 1);
    p_06.labels = {1, 1, 1, 0, 0, 0, 0, 0, 0, 0};  // 3/5
    p_08.labels = {1, 1, 1, 1, 0, 0, 0, 0, 0, 0};  // 4/5
    const std::vector<LabelMap> gts = {gt, gt};
    const std::vector<LabelMap> preds = {p_06, p_08};
    const auto report = evaluate_run(gts, preds);
    CHECK(report.per_frame[0] == doctest::Approx(0.6));
    CHECK(report.per_frame[1] == doctest::Approx(0.8));
    CHECK(report.mean == doctest::Approx(0.7));
  }
}

TEST_CASE("report serialization carries per-frame values and the mean") {
  JaccardReport report;
  report.mode = "oracle";
  report.per_frame = {0.25, 0.75};
  report.mean = 0.5;
  const auto doc = nlohmann::json::parse(report.to_json());
  CHECK(doc.at("mode") == "oracle");
  CHECK(doc.at("frames") == 2);
  CHECK(doc.at("per_frame").size() == 2);
  CHECK(doc.at("mean") == doctest::Approx(0.5));
  const std::string table = report.to_table();
  CHECK(table.find("mean") != std::string::npos);
  CHECK(table.find("0.5000") != std::string::npos);
}
