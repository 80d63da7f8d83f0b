#pragma once

#include <span>
#include <string>
#include <vector>

#include "gwm/energy.hpp"
#include "gwm/flowfield.hpp"

namespace gwm {

/// Intersection-over-union of two binary masks (nonzero = foreground).
/// Both empty counts as a perfect frame (J = 1). Throws DimensionMismatch.
double jaccard(const LabelMap& pred, const LabelMap& gt);

struct OracleAssignment {
  std::vector<bool> foreground;  // per component
  double j = 0.0;
};

/// Best foreground/background labeling of the K argmax components against a
/// binary ground truth: exhaustive search over the 2^K - 2 nontrivial
/// assignments, maximizing Jaccard. K is capped at 16 (KTooLarge beyond).
OracleAssignment oracle_component_assignment(const SoftMasks& masks, const LabelMap& gt_fg);

struct JaccardReport {
  std::string mode;  // "heuristic" or "oracle"
  std::vector<double> per_frame;
  double mean = 0.0;

  std::size_t frames() const { return per_frame.size(); }
  std::string to_json() const;
  std::string to_table() const;
};

/// Per-frame Jaccard of binary predictions against ground-truth foreground.
JaccardReport evaluate_run(std::span<const LabelMap> gt_foreground,
                           std::span<const LabelMap> predictions);

/// Per-frame oracle assignment of K-way soft masks against ground truth.
JaccardReport evaluate_run_oracle(std::span<const LabelMap> gt_foreground,
                                  std::span<const SoftMasks> predictions);

}  // namespace gwm
