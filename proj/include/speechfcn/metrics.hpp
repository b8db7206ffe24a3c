// Confusion counts, per-class precision/recall/F1/accuracy, and the
// probability-combining ensembles.
#pragma once

#include <array>
#include <vector>

#include "speechfcn/common.hpp"
#include "speechfcn/model.hpp"

namespace speechfcn {

struct ConfusionCounts {
  long tp = 0, fp = 0, fn = 0, tn = 0;  // positive class = AD (label 1)
  long total() const { return tp + fp + fn + tn; }
};

inline ConfusionCounts confusion(const std::vector<int>& preds, const std::vector<int>& labels) {
  if (preds.size() != labels.size()) throw Error(ErrorKind::shape, "confusion: length mismatch");
  ConfusionCounts c;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1) throw Error(ErrorKind::data, "confusion: labels must be binary");
    if (labels[i] == 1)
      preds[i] == 1 ? ++c.tp : ++c.fn;
    else
      preds[i] == 1 ? ++c.fp : ++c.tn;
  }
  return c;
}

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double accuracy = 0.0;
  bool degenerate = false;  // some denominator was zero; affected metric reported as 0
};

namespace detail {

inline ClassMetrics metrics_one(long tp, long fp, long fn, long tn) {
  ClassMetrics m;
  const long n = tp + fp + fn + tn;
  m.accuracy = n > 0 ? static_cast<double>(tp + tn) / static_cast<double>(n) : 0.0;
  if (n == 0) m.degenerate = true;
  if (tp + fp > 0)
    m.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
  else
    m.degenerate = true;
  if (tp + fn > 0)
    m.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
  else
    m.degenerate = true;
  if (m.precision + m.recall > 0.0)
    m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
  else
    m.degenerate = true;
  return m;
}

}  // namespace detail

// Both Table-style rows: index 0 treats non-AD as positive, index 1 treats
// AD as positive. Accuracy is identical in both rows.
inline std::array<ClassMetrics, 2> metrics(const ConfusionCounts& c) {
  return {detail::metrics_one(c.tn, c.fn, c.fp, c.tp),  // non-AD as positive
          detail::metrics_one(c.tp, c.fp, c.fn, c.tn)};
}

namespace detail {

inline Prediction combine(const std::vector<const Prediction*>& inputs) {
  Prediction out = *inputs[0];  // time activations follow the first model
  double p0 = 0.0, p1 = 0.0;
  for (const Prediction* p : inputs) {
    p0 += p->probs[0];
    p1 += p->probs[1];
  }
  const double n = static_cast<double>(inputs.size());
  out.probs = {p0 / n, p1 / n};
  out.label = out.probs[1] > out.probs[0] ? 1 : 0;
  return out;
}

}  // namespace detail

// Per-class mean of two probability vectors.
inline Prediction ensemble_average(const Prediction& a, const Prediction& b) {
  return detail::combine({&a, &b});
}

// Per-class sum of three probability vectors, renormalized by 3 for
// reporting; the argmax is unaffected by the renormalization.
inline Prediction ensemble_sum(const Prediction& a, const Prediction& b, const Prediction& c) {
  return detail::combine({&a, &b, &c});
}

}  // namespace speechfcn
