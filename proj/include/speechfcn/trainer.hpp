// Training strategies: stratified two-fold split, mini-batch RMSProp loop
// with zero-padded batches, random mask augmentation, and epoch selection by
// validation accuracy or training loss.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include "speechfcn/common.hpp"
#include "speechfcn/featmap_io.hpp"
#include "speechfcn/manifest.hpp"
#include "speechfcn/model.hpp"
#include "speechfcn/optimizer.hpp"

namespace speechfcn {

enum class Selection { max_val_accuracy, min_train_loss };

struct TrainConfig {
  int batch_size = 8;
  int max_epochs = 1000;
  OptimizerConfig optimizer;
  std::uint64_t seed = 0;
  Selection selection = Selection::max_val_accuracy;
  bool augment_mask = false;
  std::pair<int, int> mask_len_range = {200, 400};
  // "After the model converges": epochs before this one are not considered
  // when selecting by validation accuracy.
  int convergence_epoch = 50;

  void validate() const {
    if (batch_size < 1) throw Error(ErrorKind::shape, "batch_size must be >= 1");
    if (max_epochs < 1) throw Error(ErrorKind::shape, "max_epochs must be >= 1");
    if (mask_len_range.first <= 0 || mask_len_range.second < mask_len_range.first)
      throw Error(ErrorKind::shape, "mask_len_range must satisfy 0 < lo <= hi");
    optimizer.validate();
  }
};

struct EpochRecord {
  int epoch = 0;  // 1-based
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  double val_accuracy = 0.0;
  bool has_val = false;
};

struct LabeledSample {
  std::string id;
  FeatureMap map;
  int label = 0;
};

struct TwoFoldSplit {
  DatasetManifest fold_a, fold_b;
  bool stratified = true;  // false when a single-class manifest forced a plain split
};

// Random stratified halves: each label's entries are shuffled and split in
// half; odd remainders alternate between the folds so the fold sizes differ
// by at most one.
inline TwoFoldSplit split_two_fold(const DatasetManifest& manifest, std::uint64_t seed) {
  if (manifest.entries.size() < 2) throw Error(ErrorKind::shape, "split_two_fold: need at least 2 entries");
  Rng rng(seed);

  std::vector<std::size_t> by_label[2];
  bool stratified = true;
  for (std::size_t i = 0; i < manifest.entries.size(); ++i) {
    const int l = manifest.entries[i].label;
    if (l != 0 && l != 1) throw Error(ErrorKind::data, "split_two_fold: labels must be binary");
    by_label[l].push_back(i);
  }
  if (by_label[0].empty() || by_label[1].empty()) {
    stratified = false;
    std::vector<std::size_t> all(manifest.entries.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    rng.shuffle(all);
    by_label[0] = std::move(all);
    by_label[1].clear();
  } else {
    rng.shuffle(by_label[0]);
    rng.shuffle(by_label[1]);
  }

  TwoFoldSplit split;
  split.stratified = stratified;
  bool extra_to_a = true;
  for (auto& group : by_label) {
    if (group.empty()) continue;
    std::size_t take_a = group.size() / 2;
    if (group.size() % 2 == 1) {
      if (extra_to_a) ++take_a;
      extra_to_a = !extra_to_a;
    }
    for (std::size_t i = 0; i < group.size(); ++i) {
      (i < take_a ? split.fold_a : split.fold_b).entries.push_back(manifest.entries[group[i]]);
    }
  }
  return split;
}

// Zeroes one contiguous column span. Mask length is uniform in
// mask_len_range when t exceeds the range's upper bound, otherwise clipped
// to t/2; the start position is uniform over the admissible range.
inline FeatureMap random_mask_augment(const FeatureMap& map, Rng& rng,
                                      std::pair<int, int> mask_len_range = {200, 400}) {
  FeatureMap out = map;
  long len;
  if (map.t > mask_len_range.second)
    len = rng.uniform_int(mask_len_range.first, mask_len_range.second);
  else
    len = map.t / 2;
  if (len <= 0) return out;
  const long start = rng.uniform_int(0, map.t - len);
  for (int r = 0; r < map.p; ++r)
    for (long j = start; j < start + len; ++j) out.at(r, j) = 0.0f;
  return out;
}

inline std::vector<LabeledSample> load_dataset(const DatasetManifest& manifest) {
  if (!manifest.all_labeled()) throw Error(ErrorKind::data, "dataset manifest has unlabeled entries");
  std::vector<LabeledSample> out;
  out.reserve(manifest.entries.size());
  for (const ManifestEntry& e : manifest.entries)
    out.push_back({e.id, load_feature_map(e.path), e.label});
  return out;
}

struct TrainResult {
  std::vector<EpochRecord> history;
  int best_epoch = 0;
  double best_criterion = 0.0;
};

// Trains the model in place and leaves it at the best-epoch snapshot.
// Per epoch: shuffle (reseeded as seed+epoch), batch with zero padding,
// optional fresh mask augmentation, one RMSProp step per batch. A snapshot
// is taken at every strict improvement of the selection criterion.
inline TrainResult train(FcnModel& model, const std::vector<LabeledSample>& train_set,
                         const std::vector<LabeledSample>* val_set, const TrainConfig& cfg) {
  cfg.validate();
  if (train_set.empty()) throw Error(ErrorKind::shape, "train: empty training fold");
  if (cfg.selection == Selection::max_val_accuracy && (val_set == nullptr || val_set->empty()))
    throw Error(ErrorKind::data, "train: validation-accuracy selection requires a validation fold");

  const auto params = model.parameters();
  auto snapshot = [&model]() {
    std::vector<Tensor> s;
    for (auto& [name, t] : model.named_tensors()) s.push_back(*t);
    return s;
  };
  auto restore = [&model](const std::vector<Tensor>& s) {
    std::size_t i = 0;
    for (auto& [name, t] : model.named_tensors()) *t = s[i++];
  };

  const int eligible_from = std::min(cfg.convergence_epoch, cfg.max_epochs);
  TrainResult result;
  std::vector<Tensor> best_state = snapshot();
  double best_val = -std::numeric_limits<double>::infinity();
  double best_loss = std::numeric_limits<double>::infinity();

  SoftmaxCrossEntropy<float> loss_layer;
  const long n = static_cast<long>(train_set.size());

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    Rng erng(cfg.seed + static_cast<std::uint64_t>(epoch));
    std::vector<long> order(static_cast<std::size_t>(n));
    for (long i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
    erng.shuffle(order);

    double loss_sum = 0.0;
    long correct = 0, seen = 0;
    int batch_index = 0;
    for (long start = 0; start < n; start += cfg.batch_size, ++batch_index) {
      const long end = std::min(n, start + cfg.batch_size);
      std::vector<FeatureMap> augmented;
      augmented.reserve(static_cast<std::size_t>(end - start));
      std::vector<const FeatureMap*> maps;
      std::vector<int> labels;
      for (long i = start; i < end; ++i) {
        const LabeledSample& s = train_set[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])];
        if (cfg.augment_mask) {
          augmented.push_back(random_mask_augment(s.map, erng, cfg.mask_len_range));
          maps.push_back(&augmented.back());
        } else {
          maps.push_back(&s.map);
        }
        labels.push_back(s.label);
      }

      auto [x, valid_lens] = pad_batch<float>(maps);
      model.zero_grad();
      const Tensor logits = model.forward_batch(x, valid_lens, Mode::train, false, true);
      const double loss = loss_layer.forward(logits, labels);
      if (!std::isfinite(loss))
        throw Error(ErrorKind::diverged, "training diverged (non-finite loss) at epoch " + std::to_string(epoch) +
                                             ", batch " + std::to_string(batch_index));
      loss_sum += loss * static_cast<double>(end - start);
      seen += end - start;
      const Tensor& probs = loss_layer.probs();
      for (long b = 0; b < end - start; ++b) {
        const int pred = probs.at(b, 1) > probs.at(b, 0) ? 1 : 0;
        if (pred == labels[static_cast<std::size_t>(b)]) ++correct;
      }

      model.backward(loss_layer.backward());
      for (ParameterT<float>* p : params) rmsprop_step(*p, cfg.optimizer);
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(seen);
    rec.train_accuracy = static_cast<double>(correct) / static_cast<double>(seen);

    if (val_set != nullptr && !val_set->empty()) {
      long val_correct = 0;
      for (const LabeledSample& s : *val_set) {
        const Prediction p = model.forward(s.map, Mode::infer);
        if (p.label == s.label) ++val_correct;
      }
      rec.val_accuracy = static_cast<double>(val_correct) / static_cast<double>(val_set->size());
      rec.has_val = true;
    }
    result.history.push_back(rec);

    if (cfg.selection == Selection::min_train_loss) {
      if (rec.train_loss < best_loss) {
        best_loss = rec.train_loss;
        result.best_epoch = epoch;
        best_state = snapshot();
      }
    } else if (epoch >= eligible_from && rec.val_accuracy > best_val) {
      best_val = rec.val_accuracy;
      result.best_epoch = epoch;
      best_state = snapshot();
    }
  }

  result.best_criterion = cfg.selection == Selection::min_train_loss ? best_loss : best_val;
  restore(best_state);
  return result;
}

// History CSV: epoch,train_loss,train_acc,val_acc (val_acc blank when the
// run had no validation fold).
inline void save_history_csv(const std::string& path, const std::vector<EpochRecord>& history) {
  std::ofstream f(path);
  if (!f) throw Error(ErrorKind::io, "cannot write " + path);
  f << "epoch,train_loss,train_acc,val_acc\n";
  char buf[160];
  for (const EpochRecord& r : history) {
    if (r.has_val)
      std::snprintf(buf, sizeof(buf), "%d,%.9g,%.6f,%.6f\n", r.epoch, r.train_loss, r.train_accuracy, r.val_accuracy);
    else
      std::snprintf(buf, sizeof(buf), "%d,%.9g,%.6f,\n", r.epoch, r.train_loss, r.train_accuracy);
    f << buf;
  }
  if (!f) throw Error(ErrorKind::io, "write failed for " + path);
}

}  // namespace speechfcn
