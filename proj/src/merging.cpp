#include "gwm/merging.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "gwm/error.hpp"

namespace gwm {

SegmentFeatures pool_features(const FeatureMap& features, const SoftMasks& masks,
                              std::optional<double> weight_floor) {
  if (features.width != masks.width || features.height != masks.height)
    throw Error(ErrorKind::DimensionMismatch, "features and masks dimensions disagree");

  const std::size_t n = masks.pixels();
  const double floor = weight_floor.value_or(kWeightFloorScale * static_cast<double>(n));

  SegmentFeatures out;
  out.k = masks.k;
  out.dim = features.dim;
  out.means.assign(static_cast<std::size_t>(masks.k) * features.dim, 0.0);
  out.mass.assign(masks.k, 0.0);
  out.defined.assign(masks.k, false);

  for (std::size_t u = 0; u < n; ++u) {
    const double* f = features.at(u);
    for (int c = 0; c < masks.k; ++c) {
      const double p = masks.at(u, c);
      if (p == 0.0) continue;
      out.mass[c] += p;
      double* mean = out.means.data() + static_cast<std::size_t>(c) * features.dim;
      for (int j = 0; j < features.dim; ++j) mean[j] += p * f[j];
    }
  }
  for (int c = 0; c < masks.k; ++c) {
    double* mean = out.means.data() + static_cast<std::size_t>(c) * features.dim;
    if (out.mass[c] >= floor) {
      out.defined[c] = true;
      for (int j = 0; j < features.dim; ++j) mean[j] /= out.mass[c];
    } else {
      std::fill(mean, mean + features.dim, 0.0);
    }
  }
  return out;
}

SquareMatrix affinity(const SegmentFeatures& features, double epsilon) {
  const int k = features.k;
  int defined_count = 0;
  std::vector<double> norms(k, 0.0);
  for (int c = 0; c < k; ++c) {
    if (!features.defined[c]) continue;
    double sq = 0.0;
    const double* mean = features.mean(c);
    for (int j = 0; j < features.dim; ++j) sq += mean[j] * mean[j];
    norms[c] = std::sqrt(sq);
    if (norms[c] > 0.0) ++defined_count;
  }
  if (defined_count < 2) throw Error(ErrorKind::AllDegenerate, "need two non-degenerate segments");

  SquareMatrix pi(k);
  for (int i = 0; i < k; ++i) {
    pi.at(i, i) = 1.0;
    for (int j = i + 1; j < k; ++j) {
      double value = epsilon;
      if (norms[i] > 0.0 && norms[j] > 0.0) {
        double dot = 0.0;
        const double* mi = features.mean(i);
        const double* mj = features.mean(j);
        for (int c = 0; c < features.dim; ++c) dot += mi[c] * mj[c];
        value = std::max(epsilon, dot / (norms[i] * norms[j]));
      }
      pi.at(i, j) = value;
      pi.at(j, i) = value;
    }
  }
  return pi;
}

std::vector<int> spectral_bipartition(const SquareMatrix& pi) {
  const int k = pi.n;
  if (k < 2) throw Error(ErrorKind::DimensionMismatch, "bipartition needs k >= 2");

  std::vector<double> degree(k, 0.0);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) degree[i] += pi.at(i, j);

  SquareMatrix laplacian(k);
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j) {
      const double norm = std::sqrt(degree[i] * degree[j]);
      laplacian.at(i, j) = (i == j ? 1.0 : 0.0) - pi.at(i, j) / norm;
    }
  }

  const EigenDecomposition eig = jacobi_eigen(laplacian);
  std::vector<double> indicator(k);
  for (int i = 0; i < k; ++i) indicator[i] = eig.vectors.at(i, 1) / std::sqrt(degree[i]);

  std::vector<int> colors(k, -1);
  for (int i = 0; i < k; ++i) {
    if (indicator[i] > 1e-12) colors[i] = 1;
    else if (indicator[i] < -1e-12) colors[i] = 0;
  }
  // Near-zero entries join the side they are more strongly tied to.
  for (int i = 0; i < k; ++i) {
    if (colors[i] != -1) continue;
    double pull[2] = {0.0, 0.0};
    for (int j = 0; j < k; ++j)
      if (j != i && colors[j] != -1) pull[colors[j]] += pi.at(i, j);
    colors[i] = pull[1] > pull[0] ? 1 : 0;
  }

  const int side_one = static_cast<int>(std::count(colors.begin(), colors.end(), 1));
  if (side_one == 0 || side_one == k) {
    // Degenerate sign split; divide at the median rank instead.
    std::vector<int> order(k);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      if (indicator[a] != indicator[b]) return indicator[a] < indicator[b];
      return a < b;
    });
    for (int rank = 0; rank < k; ++rank) colors[order[rank]] = rank < k / 2 ? 0 : 1;
  }
  return colors;
}

LabelMap select_foreground(const std::vector<int>& coloring, const SoftMasks& masks) {
  if (static_cast<int>(coloring.size()) != masks.k)
    throw Error(ErrorKind::DimensionMismatch, "coloring size does not match k");

  const LabelMap assignment = masks.argmax();
  const int w = masks.width;
  const int h = masks.height;

  std::size_t border[2] = {0, 0};
  std::size_t area[2] = {0, 0};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int side = coloring[assignment.at(x, y)];
      ++area[side];
      if (x == 0 || y == 0 || x == w - 1 || y == h - 1) ++border[side];
    }
  }

  int fg_side;
  if (border[0] != border[1]) fg_side = border[0] < border[1] ? 0 : 1;
  else if (area[0] != area[1]) fg_side = area[0] < area[1] ? 0 : 1;
  else fg_side = coloring[0];

  LabelMap fg(w, h);
  for (std::size_t u = 0; u < fg.labels.size(); ++u)
    fg.labels[u] = coloring[assignment.labels[u]] == fg_side ? 1 : 0;
  return fg;
}

LabelMap merge_to_foreground(const FeatureMap& features, const SoftMasks& masks, double epsilon) {
  const SegmentFeatures pooled = pool_features(features, masks);
  const SquareMatrix pi = affinity(pooled, epsilon);
  const std::vector<int> coloring = spectral_bipartition(pi);
  return select_foreground(coloring, masks);
}

}  // namespace gwm
