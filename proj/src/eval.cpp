#include "gwm/eval.hpp"

#include <cstdio>

#include <json.hpp>

#include "gwm/error.hpp"
#include "gwm/parallel.hpp"

namespace gwm {

double jaccard(const LabelMap& pred, const LabelMap& gt) {
  if (pred.width != gt.width || pred.height != gt.height)
    throw Error(ErrorKind::DimensionMismatch, "mask dimensions disagree");
  std::size_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < pred.labels.size(); ++i) {
    const bool p = pred.labels[i] != 0;
    const bool g = gt.labels[i] != 0;
    inter += p && g;
    uni += p || g;
  }
  if (uni == 0) return 1.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

OracleAssignment oracle_component_assignment(const SoftMasks& masks, const LabelMap& gt_fg) {
  if (masks.k > 16) throw Error(ErrorKind::KTooLarge, "oracle search capped at k = 16");
  if (masks.width != gt_fg.width || masks.height != gt_fg.height)
    throw Error(ErrorKind::DimensionMismatch, "mask dimensions disagree");

  const LabelMap assignment = masks.argmax();
  std::vector<std::size_t> comp_area(masks.k, 0);
  std::vector<std::size_t> comp_overlap(masks.k, 0);
  std::size_t gt_area = 0;
  for (std::size_t u = 0; u < assignment.labels.size(); ++u) {
    const int c = assignment.labels[u];
    ++comp_area[c];
    if (gt_fg.labels[u] != 0) {
      ++comp_overlap[c];
      ++gt_area;
    }
  }

  const unsigned total = 1u << masks.k;
  OracleAssignment best;
  best.foreground.assign(masks.k, false);
  best.j = -1.0;
  for (unsigned subset = 1; subset + 1 < total; ++subset) {
    std::size_t inter = 0, pred_area = 0;
    for (int c = 0; c < masks.k; ++c) {
      if (subset & (1u << c)) {
        inter += comp_overlap[c];
        pred_area += comp_area[c];
      }
    }
    const std::size_t uni = pred_area + gt_area - inter;
    const double j = uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
    if (j > best.j) {
      best.j = j;
      for (int c = 0; c < masks.k; ++c) best.foreground[c] = (subset & (1u << c)) != 0;
    }
  }
  return best;
}

namespace {

JaccardReport finish(JaccardReport report) {
  double sum = 0.0;
  for (double v : report.per_frame) sum += v;
  report.mean = report.per_frame.empty() ? 0.0 : sum / static_cast<double>(report.per_frame.size());
  return report;
}

}  // namespace

JaccardReport evaluate_run(std::span<const LabelMap> gt_foreground,
                           std::span<const LabelMap> predictions) {
  if (gt_foreground.size() != predictions.size())
    throw Error(ErrorKind::DimensionMismatch, "frame counts disagree");
  JaccardReport report;
  report.mode = "heuristic";
  report.per_frame.resize(predictions.size());
  parallel_for(predictions.size(), [&](std::size_t t) {
    report.per_frame[t] = jaccard(predictions[t], gt_foreground[t]);
  });
  return finish(std::move(report));
}

JaccardReport evaluate_run_oracle(std::span<const LabelMap> gt_foreground,
                                  std::span<const SoftMasks> predictions) {
  if (gt_foreground.size() != predictions.size())
    throw Error(ErrorKind::DimensionMismatch, "frame counts disagree");
  JaccardReport report;
  report.mode = "oracle";
  report.per_frame.resize(predictions.size());
  parallel_for(predictions.size(), [&](std::size_t t) {
    report.per_frame[t] = oracle_component_assignment(predictions[t], gt_foreground[t]).j;
  });
  return finish(std::move(report));
}

std::string JaccardReport::to_json() const {
  nlohmann::json doc;
  doc["mode"] = mode;
  doc["frames"] = per_frame.size();
  doc["per_frame"] = per_frame;
  doc["mean"] = mean;
  return doc.dump(2);
}

std::string JaccardReport::to_table() const {
  std::string out = "frame   J\n";
  char line[64];
  for (std::size_t t = 0; t < per_frame.size(); ++t) {
    std::snprintf(line, sizeof line, "%5zu   %.4f\n", t, per_frame[t]);
    out += line;
  }
  std::snprintf(line, sizeof line, " mean   %.4f (%s)\n", mean, mode.c_str());
  out += line;
  return out;
}

}  // namespace gwm
