#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "gwm/error.hpp"
#include "gwm/merging.hpp"
#include "gwm/prng.hpp"
#include "oracles.hpp"

using namespace gwm;

namespace {

FeatureMap random_features(Prng& rng, int w, int h, int dim = 4) {
  FeatureMap map;
  map.width = w;
  map.height = h;
  map.dim = dim;
  map.values.resize(static_cast<std::size_t>(w) * h * dim);
  for (double& v : map.values) v = rng.uniform(-1.0, 1.0);
  return map;
}

SoftMasks random_masks(Prng& rng, int k, int w, int h) {
  SoftMasks masks(k, w, h);
  for (std::size_t u = 0; u < masks.pixels(); ++u) {
    double sum = 0.0;
    for (int c = 0; c < k; ++c) {
      masks.at(u, c) = 0.01 + rng.uniform();
      sum += masks.at(u, c);
    }
    for (int c = 0; c < k; ++c) masks.at(u, c) /= sum;
  }
  return masks;
}

SegmentFeatures features_from_rows(const std::vector<std::vector<double>>& rows) {
  SegmentFeatures sf;
  sf.k = static_cast<int>(rows.size());
  sf.dim = static_cast<int>(rows[0].size());
  sf.mass.assign(sf.k, 1.0);
  sf.defined.assign(sf.k, true);
  for (const auto& row : rows) sf.means.insert(sf.means.end(), row.begin(), row.end());
  return sf;
}

bool same_partition(const std::vector<int>& a, const std::vector<int>& b) {
  bool direct = true, flipped = true;
  for (std::size_t i = 0; i < a.size(); ++i) {
    direct = direct && a[i] == b[i];
    flipped = flipped && a[i] == 1 - b[i];
  }
  return direct || flipped;
}

}  // namespace

TEST_CASE("pool_features: hard, uniform and random masks") {
  Prng rng(201);
  const FeatureMap features = random_features(rng, 6, 5);
  const std::size_t n = features.pixels();

  SUBCASE("hard one-segment mask pools to the plain mean") {
    SoftMasks masks(2, 6, 5);
    for (std::size_t u = 0; u < n; ++u) masks.at(u, u % 3 == 0 ? 0 : 1) = 1.0;
    const SegmentFeatures sf = pool_features(features, masks);
    std::vector<double> mean(features.dim, 0.0);
    std::size_t count = 0;
    for (std::size_t u = 0; u < n; ++u) {
      if (u % 3 != 0) continue;
      ++count;
      for (int j = 0; j < features.dim; ++j) mean[j] += features.at(u)[j];
    }
    for (int j = 0; j < features.dim; ++j)
      CHECK(sf.mean(0)[j] == doctest::Approx(mean[j] / count));
    CHECK(sf.mass[0] == doctest::Approx(static_cast<double>(count)));
  }

  SUBCASE("uniform masks pool every segment to the global mean") {
    SoftMasks masks(3, 6, 5);
    for (double& p : masks.probs) p = 1.0 / 3.0;
    const SegmentFeatures sf = pool_features(features, masks);
    for (int c = 1; c < 3; ++c)
      for (int j = 0; j < features.dim; ++j)
        CHECK(sf.mean(c)[j] == doctest::Approx(sf.mean(0)[j]));
  }

  SUBCASE("random soft masks match a naive double loop") {
    const SoftMasks masks = random_masks(rng, 3, 6, 5);
    const SegmentFeatures sf = pool_features(features, masks);
    for (int c = 0; c < 3; ++c) {
      double mass = 0.0;
      std::vector<double> sum(features.dim, 0.0);
      for (std::size_t u = 0; u < n; ++u) {
        mass += masks.at(u, c);
        for (int j = 0; j < features.dim; ++j) sum[j] += masks.at(u, c) * features.at(u)[j];
      }
      CHECK(sf.mass[c] == doctest::Approx(mass));
      for (int j = 0; j < features.dim; ++j)
        CHECK(sf.mean(c)[j] == doctest::Approx(sum[j] / mass));
    }
  }
}

TEST_CASE("affinity floors, diagonal and degeneracy") {
  const double eps = kAffinityEpsilon;
  SUBCASE("identical, orthogonal and opposite directions") {
    const SquareMatrix pi = affinity(features_from_rows({{1.0, 0.0}, {2.0, 0.0}, {0.0, 3.0},
                                                         {-1.0, 0.0}}));
    CHECK(pi.at(0, 1) == doctest::Approx(1.0));  // same direction, different scale
    CHECK(pi.at(0, 2) == eps);                   // orthogonal, cosine 0 floored
    CHECK(pi.at(0, 3) == eps);                   // opposite, negative floored
    for (int i = 0; i < 4; ++i) CHECK(pi.at(i, i) == 1.0);
  }
  SUBCASE("positive rescaling leaves the matrix unchanged") {
    Prng rng(203);
    std::vector<std::vector<double>> rows(4, std::vector<double>(5));
    for (auto& row : rows)
      for (double& v : row) v = rng.uniform(-1.0, 1.0);
    const SquareMatrix base = affinity(features_from_rows(rows));
    for (auto& row : rows)
      for (double& v : row) v *= 17.5;
    const SquareMatrix scaled = affinity(features_from_rows(rows));
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) CHECK(std::fabs(base.at(i, j) - scaled.at(i, j)) <= 1e-12);
  }
  SUBCASE("degenerate segments keep the graph connected at epsilon") {
    SegmentFeatures sf = features_from_rows({{1.0, 0.0}, {0.9, 0.1}, {0.0, 0.0}});
    sf.defined[2] = false;
    sf.mass[2] = 0.0;
    const SquareMatrix pi = affinity(sf);
    CHECK(pi.at(2, 2) == 1.0);
    CHECK(pi.at(0, 2) == eps);
    CHECK(pi.at(1, 2) == eps);
  }
  SUBCASE("fewer than two defined segments is an error") {
    SegmentFeatures sf = features_from_rows({{1.0, 0.0}, {0.5, 0.5}});
    sf.defined[1] = false;
    try {
      affinity(sf);
      FAIL("expected AllDegenerate");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::AllDegenerate);
    }
  }
}

TEST_CASE("spectral bipartition separates K = 2 and exact blocks") {
  SUBCASE("two segments always split") {
    Prng rng(207);
    for (int trial = 0; trial < 20; ++trial) {
      SquareMatrix pi(2);
      pi.at(0, 0) = pi.at(1, 1) = 1.0;
      const double v = rng.uniform(1e-12, 1.0);
      pi.at(0, 1) = pi.at(1, 0) = v;
      const auto colors = spectral_bipartition(pi);
      CHECK(colors[0] != colors[1]);
    }
  }
  SUBCASE("block affinity splits into its blocks") {
    SquareMatrix pi(4);
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) pi.at(i, j) = kAffinityEpsilon;
    pi.at(0, 0) = pi.at(1, 1) = pi.at(2, 2) = pi.at(3, 3) = 1.0;
    pi.at(0, 1) = pi.at(1, 0) = 1.0;
    pi.at(2, 3) = pi.at(3, 2) = 1.0;
    const auto colors = spectral_bipartition(pi);
    CHECK(colors[0] == colors[1]);
    CHECK(colors[2] == colors[3]);
    CHECK(colors[0] != colors[2]);
  }
}

TEST_CASE("bipartition is near the exhaustive normalized-cut minimum on random affinities") {
  Prng rng(211);
  int within_5_percent = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const SquareMatrix pi = test::random_segment_affinity(rng, 5);
    const auto colors = spectral_bipartition(pi);
    const double value = test::ncut_value(pi, colors);
    const double best = test::ncut_brute_force_min(pi);
    CHECK(value <= 2.0 * best);
    if (value <= 1.05 * best) ++within_5_percent;
  }
  CHECK(within_5_percent >= 90);
}

TEST_CASE("bipartition commutes with index permutations") {
  Prng rng(213);
  for (int trial = 0; trial < 20; ++trial) {
    const int k = 4 + static_cast<int>(rng.below(3));
    SquareMatrix pi(k);
    for (int i = 0; i < k; ++i) {
      pi.at(i, i) = 1.0;
      for (int j = i + 1; j < k; ++j) {
        const double v = std::max(kAffinityEpsilon, rng.uniform());
        pi.at(i, j) = v;
        pi.at(j, i) = v;
      }
    }
    std::vector<int> perm(k);
    for (int i = 0; i < k; ++i) perm[i] = i;
    for (int i = k - 1; i > 0; --i) std::swap(perm[i], perm[rng.below(i + 1)]);

    SquareMatrix shuffled(k);
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < k; ++j) shuffled.at(perm[i], perm[j]) = pi.at(i, j);

    const auto base = spectral_bipartition(pi);
    const auto moved = spectral_bipartition(shuffled);
    std::vector<int> mapped(k);
    for (int i = 0; i < k; ++i) mapped[i] = moved[perm[i]];
    CHECK(same_partition(base, mapped));
  }
}

TEST_CASE("select_foreground follows the border rule and its tie-breakers") {
  SUBCASE("interior side wins") {
    SoftMasks masks(2, 8, 8);
    for (int y = 0; y < 8; ++y)
      for (int x = 0; x < 8; ++x) {
        const bool inner = x > 1 && x < 6 && y > 1 && y < 6;
        masks.at(static_cast<std::size_t>(y) * 8 + x, inner ? 1 : 0) = 1.0;
      }
    const LabelMap fg = select_foreground({0, 1}, masks);
    CHECK(fg.at(3, 3) == 1);
    CHECK(fg.at(0, 0) == 0);
  }
  SUBCASE("equal border counts fall back to the smaller area") {
    // Vertical split 30% / 70%: both sides touch top and bottom borders
    // equally plus one full vertical edge each... use a 10-wide frame where
    // each side owns one vertical border and half of top/bottom.
    SoftMasks masks(2, 10, 6);
    for (int y = 0; y < 6; ++y)
      for (int x = 0; x < 10; ++x)
        masks.at(static_cast<std::size_t>(y) * 10 + x, x < 5 ? 0 : 1) = 1.0;
    // both sides: 5 top + 5 bottom + ... borders equal by symmetry; shrink
    // side 1's area by reassigning interior pixels only.
    for (int y = 1; y < 5; ++y)
      for (int x = 5; x < 9; ++x) {
        const std::size_t u = static_cast<std::size_t>(y) * 10 + x;
        masks.at(u, 1) = 0.0;
        masks.at(u, 0) = 1.0;
      }
    const LabelMap fg = select_foreground({0, 1}, masks);
    // side 1 is smaller (border counts equal), so it is foreground
    CHECK(fg.at(9, 0) == 1);
    CHECK(fg.at(0, 0) == 0);
  }
}

TEST_CASE("K = 2 merge is an argmax passthrough up to complement") {
  Prng rng(217);
  const FeatureMap features = random_features(rng, 8, 6, 6);
  const SoftMasks masks = random_masks(rng, 2, 8, 6);
  const LabelMap merged = merge_to_foreground(features, masks);
  const LabelMap argmax = masks.argmax();
  bool direct = true, flipped = true;
  for (std::size_t u = 0; u < merged.labels.size(); ++u) {
    direct = direct && merged.labels[u] == argmax.labels[u];
    flipped = flipped && merged.labels[u] == 1 - argmax.labels[u];
  }
  CHECK((direct || flipped));
}
