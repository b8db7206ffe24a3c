// The fully convolutional classifier: channel replication, backbone,
// frequency-axis GAP, 2-neuron 1-D head, time-axis GAP, softmax. Accepts any
// input length t >= 32 and keeps the per-timestep head output around for
// visualization.
#pragma once

#include <array>
#include <fstream>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "speechfcn/backbone.hpp"
#include "speechfcn/common.hpp"
#include "speechfcn/config_json.hpp"
#include "speechfcn/mfcc.hpp"
#include "speechfcn/ops.hpp"
#include "speechfcn/tensor.hpp"
#include "speechfcn/weights_io.hpp"

namespace speechfcn {

// Per-timestep class evidence tapped before the final time pooling.
// values is (t', 2); column 0 = non-AD, column 1 = AD.
template <class T>
struct TimeActivationsT {
  TensorT<T> values;
  long source_t = 0;
};

using TimeActivations = TimeActivationsT<float>;

template <class T>
struct PredictionT {
  std::array<double, 2> probs{};  // sums to 1 up to double rounding
  int label = 0;                  // 0 = non-AD, 1 = AD; ties predict 0
  TimeActivationsT<T> time_activations;
};

using Prediction = PredictionT<float>;

// Three identical channels, shape (3, p, t).
inline Tensor replicate_channels(const FeatureMap& map) {
  if (map.p <= 0 || map.t <= 0) throw Error(ErrorKind::shape, "replicate_channels: empty map");
  Tensor x({3, map.p, map.t});
  const long plane = static_cast<long>(map.p) * map.t;
  for (int c = 0; c < 3; ++c)
    for (long i = 0; i < plane; ++i) x[c * plane + i] = map.values[static_cast<std::size_t>(i)];
  return x;
}

// Batches feature maps to the max length with trailing zero columns and
// replicates channels; valid_lens records each original t.
template <class T = float>
std::pair<TensorT<T>, std::vector<long>> pad_batch(const std::vector<const FeatureMap*>& maps) {
  if (maps.empty()) throw Error(ErrorKind::shape, "pad_batch: empty batch");
  const int p = maps[0]->p;
  long t_max = 0;
  for (const FeatureMap* m : maps) {
    if (m->p != p) throw Error(ErrorKind::shape, "pad_batch: inconsistent coefficient count");
    t_max = std::max(t_max, m->t);
  }
  const long n = static_cast<long>(maps.size());
  TensorT<T> x({n, 3, p, t_max});
  std::vector<long> valid_lens(maps.size());
  for (long b = 0; b < n; ++b) {
    const FeatureMap& m = *maps[static_cast<std::size_t>(b)];
    valid_lens[static_cast<std::size_t>(b)] = m.t;
    for (int c = 0; c < 3; ++c)
      for (int r = 0; r < p; ++r)
        for (long j = 0; j < m.t; ++j) x.at(b, c, r, j) = static_cast<T>(m.at(r, j));
  }
  return {std::move(x), std::move(valid_lens)};
}

template <class T>
class FcnModelT {
 public:
  static constexpr long kTotalStride = 32;

  FcnModelT() = default;

  FcnModelT(const BackboneConfig& cfg, std::uint64_t init_seed, MfccConfig mfcc = MfccConfig())
      : cfg_(cfg), mfcc_(std::move(mfcc)) {
    cfg_.validate();
    Rng rng(init_seed);
    long in_ch = cfg_.input_channels;
    int index = 0;
    for (const BlockSpec& spec : cfg_.blocks) {
      Stage st;
      st.type = spec.type;
      st.stride = spec.stride;
      const long out_ch = cfg_.scaled(spec.out_channels);
      if (spec.type == BlockType::standard) {
        st.conv = Conv2dLayer<T>(out_ch, in_ch, 3, 3, spec.stride, Padding::same, rng);
        st.bn1 = BatchNormLayer<T>(out_ch);
      } else {
        st.dw = DepthwiseConv2dLayer<T>(in_ch, 3, 3, spec.stride, Padding::same, rng);
        st.bn1 = BatchNormLayer<T>(in_ch);
        st.pw = Conv2dLayer<T>(out_ch, in_ch, 1, 1, 1, Padding::same, rng);
        st.bn2 = BatchNormLayer<T>(out_ch);
      }
      st.name = spec.type == BlockType::standard ? "stem" : "block" + two_digits(index);
      stages_.push_back(std::move(st));
      in_ch = out_ch;
      ++index;
    }
    head_ = Conv1dLayer<T>(2, in_ch, 1, rng);
  }

  const BackboneConfig& config() const { return cfg_; }
  const MfccConfig& mfcc_config() const { return mfcc_; }
  MfccConfig& mfcc_config() { return mfcc_; }

  // Batched forward on (N, 3, p, W). Returns logits (N, 2). With masked_gap,
  // columns beyond each sample's valid width are re-zeroed after every
  // normalization so padded and unpadded runs agree exactly, and the final
  // time pooling averages only the ceil(valid/32) valid steps.
  TensorT<T> forward_batch(const TensorT<T>& x, const std::vector<long>& valid_lens, Mode mode, bool masked_gap,
                           bool cache) {
    if (x.rank() != 4) throw Error(ErrorKind::shape, "forward: input must be (N,3,p,t)");
    if (static_cast<long>(valid_lens.size()) != x.extent(0))
      throw Error(ErrorKind::shape, "forward: valid_lens size mismatch");
    for (std::size_t i = 0; i < valid_lens.size(); ++i)
      if (valid_lens[i] < 1 || valid_lens[i] > x.extent(3))
        throw Error(ErrorKind::shape, "forward: valid_len out of range");

    masked_ = masked_gap;
    cache_ = cache;
    TensorT<T> h = x;
    std::vector<long> valid = valid_lens;
    stage_valids_.clear();

    for (Stage& st : stages_) {
      if (st.type == BlockType::standard) {
        h = st.conv.forward(h, cache);
        shrink(valid, st.stride);
        h = st.bn1.forward(h, mode, cache);
        if (masked_gap) apply_time_mask(h, valid);
        h = st.act1.forward(h, cache);
      } else {
        h = st.dw.forward(h, cache);
        shrink(valid, st.stride);
        h = st.bn1.forward(h, mode, cache);
        if (masked_gap) apply_time_mask(h, valid);
        h = st.act1.forward(h, cache);
        h = st.pw.forward(h, cache);
        h = st.bn2.forward(h, mode, cache);
        if (masked_gap) apply_time_mask(h, valid);
        h = st.act2.forward(h, cache);
      }
      stage_valids_.push_back(valid);
    }

    // GAP over the frequency axis: (N, C, p', t') -> (N, C, t').
    backbone_h_ = h.extent(2);
    const long n = h.extent(0), c = h.extent(1), tp = h.extent(3);
    TensorT<T> pooled({n, c, tp});
    for (long b = 0; b < n; ++b)
      for (long ch = 0; ch < c; ++ch)
        for (long j = 0; j < tp; ++j) {
          double acc = 0.0;
          for (long r = 0; r < backbone_h_; ++r) acc += static_cast<double>(h.at(b, ch, r, j));
          pooled.at(b, ch, j) = static_cast<T>(acc / static_cast<double>(backbone_h_));
        }

    head_out_ = head_.forward(pooled, cache);  // (N, 2, t')

    // GAP over time -> logits.
    gap_steps_.assign(valid_lens.size(), tp);
    if (masked_gap)
      for (std::size_t i = 0; i < valid.size(); ++i) gap_steps_[i] = valid[i];
    TensorT<T> logits({n, 2});
    for (long b = 0; b < n; ++b)
      for (long k = 0; k < 2; ++k) {
        const long steps = gap_steps_[static_cast<std::size_t>(b)];
        double acc = 0.0;
        for (long j = 0; j < steps; ++j) acc += static_cast<double>(head_out_.at(b, k, j));
        logits.at(b, k) = static_cast<T>(acc / static_cast<double>(steps));
      }
    has_forward_ = true;
    return logits;
  }

  // Reverse pass; accumulates parameter gradients and discards the input
  // gradient. Requires a cached forward.
  void backward(const TensorT<T>& dlogits) {
    if (!has_forward_ || !cache_) throw Error(ErrorKind::state, "backward requires a cached forward pass");
    const long n = head_out_.extent(0), tp = head_out_.extent(2);

    TensorT<T> ghead({n, 2, tp});
    for (long b = 0; b < n; ++b)
      for (long k = 0; k < 2; ++k) {
        const long steps = gap_steps_[static_cast<std::size_t>(b)];
        const T g = static_cast<T>(static_cast<double>(dlogits.at(b, k)) / static_cast<double>(steps));
        for (long j = 0; j < steps; ++j) ghead.at(b, k, j) = g;
      }

    TensorT<T> gpooled = head_.backward(ghead);  // (N, C, t')

    const long c = gpooled.extent(1);
    TensorT<T> gh({n, c, backbone_h_, tp});
    for (long b = 0; b < n; ++b)
      for (long ch = 0; ch < c; ++ch)
        for (long j = 0; j < tp; ++j) {
          const T g = static_cast<T>(static_cast<double>(gpooled.at(b, ch, j)) / static_cast<double>(backbone_h_));
          for (long r = 0; r < backbone_h_; ++r) gh.at(b, ch, r, j) = g;
        }

    for (long i = static_cast<long>(stages_.size()) - 1; i >= 0; --i) {
      Stage& st = stages_[static_cast<std::size_t>(i)];
      const std::vector<long>& valid = stage_valids_[static_cast<std::size_t>(i)];
      if (st.type == BlockType::standard) {
        gh = st.act1.backward(gh);
        if (masked_) apply_time_mask(gh, valid);
        gh = st.bn1.backward(gh);
        gh = st.conv.backward(gh);
      } else {
        gh = st.act2.backward(gh);
        if (masked_) apply_time_mask(gh, valid);
        gh = st.bn2.backward(gh);
        gh = st.pw.backward(gh);
        gh = st.act1.backward(gh);
        if (masked_) apply_time_mask(gh, valid);
        gh = st.bn1.backward(gh);
        gh = st.dw.backward(gh);
      }
    }
  }

  // Single-sample inference/training entry point.
  PredictionT<T> forward(const FeatureMap& map, Mode mode, bool masked_gap = false, long valid_len = -1) {
    if (map.t < kTotalStride)
      throw Error(ErrorKind::too_short, "input too short: need t >= 32, got " + std::to_string(map.t));
    if (valid_len < 0) valid_len = map.t;
    if (valid_len > map.t) throw Error(ErrorKind::shape, "valid_len exceeds map length");

    std::vector<const FeatureMap*> one = {&map};
    auto [x, lens] = pad_batch<T>(one);
    lens[0] = valid_len;
    const TensorT<T> logits = forward_batch(x, lens, mode, masked_gap, false);

    PredictionT<T> pred;
    const std::vector<double> p =
        softmax(std::vector<double>{static_cast<double>(logits.at(0, 0)), static_cast<double>(logits.at(0, 1))});
    pred.probs = {p[0], p[1]};
    pred.label = p[1] > p[0] ? 1 : 0;
    pred.time_activations = time_activations_of(0, map.t);
    return pred;
  }

  // The (t', 2) head output of sample b from the most recent forward.
  TimeActivationsT<T> time_activations_of(long b, long source_t) const {
    if (!has_forward_) throw Error(ErrorKind::state, "no forward pass recorded");
    const long tp = head_out_.extent(2);
    TimeActivationsT<T> acts;
    acts.source_t = source_t;
    acts.values = TensorT<T>({tp, 2});
    for (long j = 0; j < tp; ++j)
      for (long k = 0; k < 2; ++k) acts.values.at(j, k) = head_out_.at(b, k, j);
    return acts;
  }

  std::vector<ParameterT<T>*> parameters() {
    std::vector<ParameterT<T>*> out;
    for (Stage& st : stages_) {
      if (st.type == BlockType::standard) {
        out.push_back(&st.conv.w);
        out.push_back(&st.bn1.gamma);
        out.push_back(&st.bn1.beta);
      } else {
        out.push_back(&st.dw.w);
        out.push_back(&st.bn1.gamma);
        out.push_back(&st.bn1.beta);
        out.push_back(&st.pw.w);
        out.push_back(&st.bn2.gamma);
        out.push_back(&st.bn2.beta);
      }
    }
    out.push_back(&head_.w);
    out.push_back(&head_.b);
    return out;
  }

  long backbone_param_count() {
    long n = 0;
    const auto params = parameters();
    for (std::size_t i = 0; i + 2 < params.size(); ++i) n += params[i]->value.size();
    return n;  // excludes head.w and head.b
  }

  long param_count() {
    long n = 0;
    for (ParameterT<T>* p : parameters()) n += p->value.size();
    return n;
  }

  void zero_grad() {
    for (ParameterT<T>* p : parameters()) p->zero_grad();
  }

  // Every tensor that defines the model state, in serialization order.
  std::vector<std::pair<std::string, TensorT<T>*>> named_tensors() {
    std::vector<std::pair<std::string, TensorT<T>*>> out;
    auto add_bn = [&out](const std::string& prefix, BatchNormLayer<T>& bn) {
      out.emplace_back(prefix + ".gamma", &bn.gamma.value);
      out.emplace_back(prefix + ".beta", &bn.beta.value);
      out.emplace_back(prefix + ".mean", &bn.running_mean);
      out.emplace_back(prefix + ".var", &bn.running_var);
    };
    for (Stage& st : stages_) {
      if (st.type == BlockType::standard) {
        out.emplace_back(st.name + ".conv.w", &st.conv.w.value);
        add_bn(st.name + ".bn1", st.bn1);
      } else {
        out.emplace_back(st.name + ".dw.w", &st.dw.w.value);
        add_bn(st.name + ".bn1", st.bn1);
        out.emplace_back(st.name + ".pw.w", &st.pw.w.value);
        add_bn(st.name + ".bn2", st.bn2);
      }
    }
    out.emplace_back("head.w", &head_.w.value);
    out.emplace_back("head.b", &head_.b.value);
    return out;
  }

 private:
  struct Stage {
    BlockType type = BlockType::depthwise_separable;
    long stride = 1;
    std::string name;
    Conv2dLayer<T> conv;          // standard block only
    DepthwiseConv2dLayer<T> dw;   // depthwise-separable only
    Conv2dLayer<T> pw;            // depthwise-separable only
    BatchNormLayer<T> bn1, bn2;   // standard block uses bn1 only
    Relu6Layer<T> act1, act2;
  };

  static std::string two_digits(int i) {
    std::string s = std::to_string(i);
    return s.size() < 2 ? "0" + s : s;
  }

  static void shrink(std::vector<long>& valid, long stride) {
    if (stride > 1)
      for (long& v : valid) v = (v + stride - 1) / stride;
  }

  // Zero the columns beyond each sample's valid width.
  static void apply_time_mask(TensorT<T>& x, const std::vector<long>& valid) {
    const long n = x.extent(0), c = x.extent(1), h = x.extent(2), w = x.extent(3);
    for (long b = 0; b < n; ++b) {
      const long v = valid[static_cast<std::size_t>(b)];
      if (v >= w) continue;
      for (long ch = 0; ch < c; ++ch)
        for (long r = 0; r < h; ++r) {
          T* row = x.data() + ((b * c + ch) * h + r) * w;
          for (long j = v; j < w; ++j) row[j] = T(0);
        }
    }
  }

  BackboneConfig cfg_;
  MfccConfig mfcc_;
  std::vector<Stage> stages_;
  Conv1dLayer<T> head_;

  // forward context
  TensorT<T> head_out_;
  std::vector<std::vector<long>> stage_valids_;
  std::vector<long> gap_steps_;
  long backbone_h_ = 0;
  bool masked_ = false;
  bool cache_ = false;
  bool has_forward_ = false;
};

using FcnModel = FcnModelT<float>;

// ---------------------------------------------------------------------------
// model save/load: "<base>.fcnw" weights plus "<base>.json" sidecar with the
// backbone and MFCC configuration snapshots.
// ---------------------------------------------------------------------------

inline void save_model(FcnModel& model, const std::string& base_path) {
  std::vector<std::pair<std::string, const Tensor*>> tensors;
  for (auto& [name, t] : model.named_tensors()) tensors.emplace_back(name, t);
  save_weights(base_path + ".fcnw", tensors);

  nlohmann::json j = {
      {"format", "speechfcn-model"},
      {"version", 1},
      {"backbone", to_json(model.config())},
      {"mfcc", to_json(model.mfcc_config())},
  };
  std::ofstream f(base_path + ".json");
  if (!f) throw Error(ErrorKind::io, "cannot write " + base_path + ".json");
  f << j.dump(2) << "\n";
}

inline FcnModel load_model(const std::string& base_path) {
  std::ifstream f(base_path + ".json");
  if (!f) throw Error(ErrorKind::io, "cannot open " + base_path + ".json");
  nlohmann::json j;
  try {
    f >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::format, base_path + ".json: " + e.what());
  }
  const BackboneConfig backbone = backbone_config_from_json(j.at("backbone"));
  const MfccConfig mfcc = mfcc_config_from_json(j.at("mfcc"));

  FcnModel model(backbone, 0, mfcc);
  auto loaded = load_weights(base_path + ".fcnw");
  std::map<std::string, Tensor*> by_name;
  for (auto& [name, t] : loaded) by_name[name] = &t;

  for (auto& [name, dst] : model.named_tensors()) {
    auto it = by_name.find(name);
    if (it == by_name.end()) throw Error(ErrorKind::data, "weight file is missing tensor '" + name + "'");
    if (it->second->shape() != dst->shape())
      throw Error(ErrorKind::data, "tensor '" + name + "': expected shape " + dst->shape_string() + ", file has " +
                                       it->second->shape_string());
    *dst = *it->second;
    by_name.erase(it);
  }
  if (!by_name.empty()) throw Error(ErrorKind::data, "weight file has unknown tensor '" + by_name.begin()->first + "'");
  return model;
}

}  // namespace speechfcn
