#pragma once

#include <optional>
#include <vector>

#include "gwm/energy.hpp"
#include "gwm/linalg.hpp"
#include "gwm/segmenter.hpp"

namespace gwm {

/// Probability-mass-weighted mean feature vector per segment. Segments whose
/// mass fell below the weight floor carry defined = false.
struct SegmentFeatures {
  int k = 0;
  int dim = 0;
  std::vector<double> means;    // k x dim, row-major; undefined rows are zero
  std::vector<double> mass;     // k
  std::vector<bool> defined;    // k

  const double* mean(int comp) const { return means.data() + static_cast<std::size_t>(comp) * dim; }
};

SegmentFeatures pool_features(const FeatureMap& features, const SoftMasks& masks,
                              std::optional<double> weight_floor = std::nullopt);

constexpr double kAffinityEpsilon = 1e-12;

/// K x K affinity: cosine similarity of unit-normalized segment means,
/// floored at epsilon so the graph stays connected. Degenerate segments get
/// epsilon off-diagonal and 1 on the diagonal. Throws AllDegenerate when
/// fewer than two segments are defined.
SquareMatrix affinity(const SegmentFeatures& features, double epsilon = kAffinityEpsilon);

/// Two-coloring of {0..K-1} by normalized cuts: the Fiedler vector of the
/// symmetric normalized Laplacian I - D^-1/2 Pi D^-1/2 (cyclic Jacobi, so the
/// result is deterministic), indicator x = D^-1/2 v, nodes colored by
/// sign(x). Entries with |x| < 1e-12 join the side with the larger total
/// affinity to them; if a side ends up empty the split falls back to the
/// median rank of x.
std::vector<int> spectral_bipartition(const SquareMatrix& pi);

/// Hard-assigns pixels to their argmax component, unions components per
/// color, and returns the binary foreground mask. The side occupying the
/// smaller share of image-border pixels is foreground; ties break to the
/// smaller total area, then to the side containing component 0.
LabelMap select_foreground(const std::vector<int>& coloring, const SoftMasks& masks);

/// Convenience: the whole merge stage for one frame (pool, affinity,
/// bipartition, side selection). With k == 2 the bipartition is necessarily
/// {0} vs {1}, so the result is the argmax passthrough.
LabelMap merge_to_foreground(const FeatureMap& features, const SoftMasks& masks,
                             double epsilon = kAffinityEpsilon);

}  // namespace gwm
