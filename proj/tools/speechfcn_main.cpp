// speechfcn command-line tool: extract | train | predict | evaluate | synth.
// Exit codes: 0 success, 1 usage, 2 data error, 3 numeric divergence.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "speechfcn/speechfcn.hpp"

namespace fs = std::filesystem;
using namespace speechfcn;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitDiverged = 3;

struct FileConfig {
  MfccConfig mfcc;
  TrainConfig train;
  BackboneConfig backbone;
};

TrainConfig train_config_from_json(const nlohmann::json& j) {
  TrainConfig c;
  c.batch_size = j.value("batch_size", c.batch_size);
  c.max_epochs = j.value("max_epochs", c.max_epochs);
  c.seed = j.value("seed", c.seed);
  c.augment_mask = j.value("augment_mask", c.augment_mask);
  c.convergence_epoch = j.value("convergence_epoch", c.convergence_epoch);
  if (j.contains("mask_len_range")) {
    const auto& r = j.at("mask_len_range");
    c.mask_len_range = {r.at(0).get<int>(), r.at(1).get<int>()};
  }
  if (j.contains("selection")) {
    const std::string s = j.at("selection").get<std::string>();
    if (s == "max_val_accuracy")
      c.selection = Selection::max_val_accuracy;
    else if (s == "min_train_loss")
      c.selection = Selection::min_train_loss;
    else
      throw Error(ErrorKind::data, "unknown selection: " + s);
  }
  if (j.contains("optimizer")) {
    const auto& o = j.at("optimizer");
    c.optimizer.learning_rate = o.value("learning_rate", c.optimizer.learning_rate);
    c.optimizer.decay = o.value("decay", c.optimizer.decay);
    c.optimizer.epsilon = o.value("epsilon", c.optimizer.epsilon);
  }
  return c;
}

FileConfig load_file_config(const std::string& path) {
  FileConfig c;
  if (path.empty()) return c;
  std::ifstream f(path);
  if (!f) throw Error(ErrorKind::io, "cannot open config " + path);
  nlohmann::json j;
  try {
    f >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::format, path + ": " + e.what());
  }
  if (j.contains("mfcc")) c.mfcc = mfcc_config_from_json(j.at("mfcc"));
  if (j.contains("train")) c.train = train_config_from_json(j.at("train"));
  if (j.contains("backbone")) c.backbone = backbone_config_from_json(j.at("backbone"));
  return c;
}

std::vector<fs::path> collect_inputs(const std::string& in, const std::vector<std::string>& extensions) {
  std::vector<fs::path> files;
  const fs::path p(in);
  if (fs::is_directory(p)) {
    for (const auto& entry : fs::directory_iterator(p)) {
      if (!entry.is_regular_file()) continue;
      std::string ext = entry.path().extension().string();
      std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char ch) { return std::tolower(ch); });
      if (std::find(extensions.begin(), extensions.end(), ext) != extensions.end()) files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
  } else if (fs::exists(p)) {
    files.push_back(p);
  }
  return files;
}

int cmd_extract(const std::string& in, const std::string& out, const std::string& config_path, bool standardize) {
  const FileConfig cfg = load_file_config(config_path);
  const auto files = collect_inputs(in, {".wav"});
  if (files.empty()) {
    std::cerr << "error: no input files under " << in << "\n";
    return kExitData;
  }
  fs::create_directories(out);

  DatasetManifest manifest;
  int failures = 0;
  for (const fs::path& f : files) {
    const std::string id = f.stem().string();
    try {
      const AudioSignal sig = load_wav(f.string(), cfg.mfcc.sample_rate_hz);
      FeatureMap map = extract_mfcc(sig, cfg.mfcc);
      if (standardize) standardize_map(map);
      const fs::path map_path = fs::path(out) / (id + ".mfcm");
      save_feature_map(map_path.string(), map);
      manifest.entries.push_back({id, id + ".mfcm", -1, -1});
      std::printf("%s p=%d t=%ld\n", id.c_str(), map.p, map.t);
    } catch (const Error& e) {
      std::cerr << "error: " << f.string() << ": " << e.what() << "\n";
      ++failures;
    }
  }
  if (!manifest.entries.empty()) {
    std::ofstream mf(fs::path(out) / "manifest.csv");
    mf << "id,path,label,fold\n";
    for (const ManifestEntry& e : manifest.entries) mf << e.id << "," << e.path << ",,\n";
  }
  return failures == 0 ? kExitOk : kExitData;
}

int cmd_train(const std::string& manifest_path, const std::string& strategy, std::optional<std::uint64_t> seed,
              const std::string& out, std::optional<double> alpha, bool augment, const std::string& config_path,
              std::optional<int> epochs, std::optional<double> lr, std::optional<int> batch_size,
              std::optional<int> convergence) {
  FileConfig cfg = load_file_config(config_path);
  if (seed) cfg.train.seed = *seed;
  if (alpha) cfg.backbone.width_multiplier = *alpha;
  if (augment) cfg.train.augment_mask = true;
  if (epochs) cfg.train.max_epochs = *epochs;
  if (lr) cfg.train.optimizer.learning_rate = static_cast<float>(*lr);
  if (batch_size) cfg.train.batch_size = *batch_size;
  if (convergence) cfg.train.convergence_epoch = *convergence;

  int strategy_index;
  if (strategy == "m1")
    strategy_index = 1;
  else if (strategy == "m2")
    strategy_index = 2;
  else if (strategy == "m3")
    strategy_index = 3;
  else {
    std::cerr << "error: unknown strategy " << strategy << " (expected m1|m2|m3)\n";
    return kExitUsage;
  }

  const DatasetManifest manifest = load_manifest(manifest_path);
  DatasetManifest fold_a, fold_b;
  if (manifest.has_folds()) {
    for (const ManifestEntry& e : manifest.entries) (e.fold == 0 ? fold_a : fold_b).entries.push_back(e);
  } else {
    const TwoFoldSplit split = split_two_fold(manifest, cfg.train.seed);
    if (!split.stratified) std::cerr << "warning: single-class manifest, split is not stratified\n";
    fold_a = split.fold_a;
    fold_b = split.fold_b;
  }

  std::vector<LabeledSample> train_set, val_set;
  const std::vector<LabeledSample>* val_ptr = nullptr;
  if (strategy_index == 1) {
    train_set = load_dataset(fold_a);
    val_set = load_dataset(fold_b);
    val_ptr = &val_set;
    cfg.train.selection = Selection::max_val_accuracy;
  } else if (strategy_index == 2) {
    train_set = load_dataset(fold_b);
    val_set = load_dataset(fold_a);
    val_ptr = &val_set;
    cfg.train.selection = Selection::max_val_accuracy;
  } else {
    train_set = load_dataset(manifest);
    cfg.train.selection = Selection::min_train_loss;
  }

  fs::create_directories(out);
  FcnModel model(cfg.backbone, cfg.train.seed + static_cast<std::uint64_t>(strategy_index), cfg.mfcc);
  const TrainResult result = train(model, train_set, val_ptr, cfg.train);

  const std::string base = (fs::path(out) / ("m" + std::to_string(strategy_index) + "_best")).string();
  save_model(model, base);
  save_history_csv((fs::path(out) / ("m" + std::to_string(strategy_index) + "_history.csv")).string(), result.history);
  std::printf("%s: best epoch %d (%s=%.6f), %zu samples, wrote %s.fcnw\n", strategy.c_str(), result.best_epoch,
              cfg.train.selection == Selection::min_train_loss ? "train_loss" : "val_acc", result.best_criterion,
              train_set.size(), base.c_str());
  return kExitOk;
}

std::string strip_weight_extension(const std::string& path) {
  const std::string ext = ".fcnw";
  if (path.size() > ext.size() && path.substr(path.size() - ext.size()) == ext)
    return path.substr(0, path.size() - ext.size());
  return path;
}

int cmd_predict(const std::string& model_list, const std::string& in, const std::string& out_path,
                const std::string& heatmap_dir, int class_index, bool masked_gap) {
  std::vector<std::string> bases;
  {
    std::string cur;
    for (char c : model_list) {
      if (c == ',') {
        if (!cur.empty()) bases.push_back(strip_weight_extension(cur));
        cur.clear();
      } else {
        cur += c;
      }
    }
    if (!cur.empty()) bases.push_back(strip_weight_extension(cur));
  }
  if (bases.empty() || bases.size() > 3) {
    std::cerr << "error: --model takes 1 to 3 weight files\n";
    return kExitUsage;
  }

  std::vector<FcnModel> models;
  for (const std::string& b : bases) models.push_back(load_model(b));
  const MfccConfig& mfcc = models[0].mfcc_config();
  for (const FcnModel& m : models)
    if (m.mfcc_config().sample_rate_hz != mfcc.sample_rate_hz || m.mfcc_config().hop != mfcc.hop ||
        m.mfcc_config().n_mfcc != mfcc.n_mfcc)
      throw Error(ErrorKind::data, "ensemble members disagree on the MFCC configuration");

  auto files = collect_inputs(in, {".mfcm", ".wav"});
  if (files.empty()) {
    std::cerr << "error: no input files under " << in << "\n";
    return kExitData;
  }

  std::ofstream out_file;
  if (!out_path.empty()) {
    out_file.open(out_path);
    if (!out_file) throw Error(ErrorKind::io, "cannot write " + out_path);
  }
  std::ostream& out = out_path.empty() ? std::cout : out_file;

  if (!heatmap_dir.empty()) fs::create_directories(heatmap_dir);

  for (const fs::path& f : files) {
    const std::string id = f.stem().string();
    FeatureMap map;
    if (f.extension() == ".wav")
      map = extract_mfcc(load_wav(f.string(), mfcc.sample_rate_hz), mfcc);
    else
      map = load_feature_map(f.string());

    std::vector<Prediction> preds;
    for (FcnModel& m : models) preds.push_back(m.forward(map, Mode::infer, masked_gap));
    Prediction combined = preds[0];
    if (preds.size() == 2) combined = ensemble_average(preds[0], preds[1]);
    if (preds.size() == 3) combined = ensemble_sum(preds[0], preds[1], preds[2]);

    nlohmann::json line = {
        {"id", id},
        {"label", combined.label},
        {"probs", {combined.probs[0], combined.probs[1]}},
    };
    out << line.dump() << "\n";

    if (!heatmap_dir.empty()) {
      // Heatmaps come from the first model's activations for ensembles.
      const Heatmap hm = heatmap(preds[0].time_activations, class_index);
      render(map, hm, mfcc, (fs::path(heatmap_dir) / (id + ".ppm")).string());
    }
  }
  return kExitOk;
}

int cmd_evaluate(const std::string& pred_path, const std::string& manifest_path, const std::string& out_csv) {
  std::ifstream pf(pred_path);
  if (!pf) throw Error(ErrorKind::io, "cannot open " + pred_path);
  const DatasetManifest manifest = load_manifest(manifest_path);
  std::map<std::string, int> truth;
  for (const ManifestEntry& e : manifest.entries) truth[e.id] = e.label;

  std::vector<int> preds, labels;
  std::vector<std::string> missing;
  std::string line;
  while (std::getline(pf, line)) {
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::format, pred_path + ": " + e.what());
    }
    const std::string id = j.at("id").get<std::string>();
    const auto it = truth.find(id);
    if (it == truth.end()) {
      missing.push_back(id);
      continue;
    }
    preds.push_back(j.at("label").get<int>());
    labels.push_back(it->second);
  }
  if (!missing.empty()) {
    std::string list;
    for (const std::string& id : missing) list += (list.empty() ? "" : ", ") + id;
    throw Error(ErrorKind::data, "prediction ids missing from manifest: " + list);
  }
  if (preds.empty()) throw Error(ErrorKind::data, pred_path + ": no predictions");

  const ConfusionCounts counts = confusion(preds, labels);
  const auto rows = metrics(counts);

  std::printf("Class   Prec.  Recall F1     Acc.\n");
  std::printf("non-AD  %.2f   %.2f   %.2f   %.4f\n", rows[0].precision, rows[0].recall, rows[0].f1, rows[0].accuracy);
  std::printf("AD      %.2f   %.2f   %.2f   %.4f\n", rows[1].precision, rows[1].recall, rows[1].f1, rows[1].accuracy);

  if (!out_csv.empty()) {
    std::ofstream cf(out_csv);
    if (!cf) throw Error(ErrorKind::io, "cannot write " + out_csv);
    cf << "class,precision,recall,f1,accuracy\n";
    char buf[160];
    std::snprintf(buf, sizeof(buf), "non-AD,%.6f,%.6f,%.6f,%.6f\n", rows[0].precision, rows[0].recall, rows[0].f1,
                  rows[0].accuracy);
    cf << buf;
    std::snprintf(buf, sizeof(buf), "AD,%.6f,%.6f,%.6f,%.6f\n", rows[1].precision, rows[1].recall, rows[1].f1,
                  rows[1].accuracy);
    cf << buf;
  }
  return kExitOk;
}

int cmd_synth(const std::string& out, std::uint64_t seed, int n_train, int n_test) {
  SynthConfig cfg;
  cfg.seed = seed;
  cfg.n_train = n_train;
  cfg.n_test = n_test;
  const SynthSummary s = generate_corpus(out, cfg);
  std::printf("synth: %d train + %d test wavs, %ld pause spans -> %s\n", s.n_train, s.n_test, s.pause_rows,
              out.c_str());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"MFCC feature maps + fully convolutional dementia-screening classifier"};
  app.require_subcommand(1);

  // extract
  std::string ex_in, ex_out, ex_config;
  bool ex_standardize = false;
  auto* extract = app.add_subcommand("extract", "Convert WAV files to MFCC feature maps");
  extract->add_option("--in", ex_in, "WAV file or directory")->required();
  extract->add_option("--out", ex_out, "output directory")->required();
  extract->add_option("--config", ex_config, "JSON config file");
  extract->add_flag("--standardize", ex_standardize, "per-map standardization");

  // train
  std::string tr_manifest, tr_strategy, tr_out = ".", tr_config;
  std::optional<std::uint64_t> tr_seed;
  std::optional<double> tr_alpha, tr_lr;
  std::optional<int> tr_epochs, tr_batch, tr_convergence;
  bool tr_augment = false;
  auto* train_cmd = app.add_subcommand("train", "Train one strategy (m1 | m2 | m3)");
  train_cmd->add_option("--manifest", tr_manifest, "dataset manifest CSV")->required();
  train_cmd->add_option("--strategy", tr_strategy, "m1 | m2 | m3")->required();
  train_cmd->add_option("--seed", tr_seed, "random seed");
  train_cmd->add_option("--out", tr_out, "output directory");
  train_cmd->add_option("--alpha", tr_alpha, "backbone width multiplier");
  train_cmd->add_flag("--augment", tr_augment, "random mask augmentation");
  train_cmd->add_option("--config", tr_config, "JSON config file");
  train_cmd->add_option("--epochs", tr_epochs, "max epochs");
  train_cmd->add_option("--lr", tr_lr, "learning rate");
  train_cmd->add_option("--batch-size", tr_batch, "mini-batch size");
  train_cmd->add_option("--convergence-epoch", tr_convergence, "first epoch eligible for val selection");

  // predict
  std::string pr_model, pr_in, pr_out, pr_heatmap;
  int pr_class_index = 1;
  bool pr_masked = false;
  auto* predict = app.add_subcommand("predict", "Classify feature maps or WAVs");
  predict->add_option("--model", pr_model, "weight file(s), comma separated (1-3)")->required();
  predict->add_option("--in", pr_in, "mfcm/wav file or directory")->required();
  predict->add_option("--out", pr_out, "JSON-lines output file (default stdout)");
  predict->add_option("--heatmap", pr_heatmap, "directory for heatmap renders");
  predict->add_option("--class-index", pr_class_index, "heatmap class row (0 or 1)");
  predict->add_flag("--masked-gap", pr_masked, "mask padded columns in the time pooling");

  // evaluate
  std::string ev_pred, ev_manifest, ev_out;
  auto* evaluate = app.add_subcommand("evaluate", "Score predictions against a manifest");
  evaluate->add_option("--pred", ev_pred, "JSON-lines predictions")->required();
  evaluate->add_option("--manifest", ev_manifest, "dataset manifest CSV")->required();
  evaluate->add_option("--out", ev_out, "metrics CSV path");

  // synth (hidden): self-contained synthetic corpus
  std::string sy_out;
  std::uint64_t sy_seed = 1;
  int sy_train = 60, sy_test = 20;
  auto* synth = app.add_subcommand("synth", "Generate the synthetic tone/pause corpus");
  synth->group("");  // hidden
  synth->add_option("--out", sy_out, "output directory")->required();
  synth->add_option("--seed", sy_seed, "random seed");
  synth->add_option("--n-train", sy_train, "training sample count");
  synth->add_option("--n-test", sy_test, "test sample count");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*extract) return cmd_extract(ex_in, ex_out, ex_config, ex_standardize);
    if (*train_cmd)
      return cmd_train(tr_manifest, tr_strategy, tr_seed, tr_out, tr_alpha, tr_augment, tr_config, tr_epochs, tr_lr,
                       tr_batch, tr_convergence);
    if (*predict) return cmd_predict(pr_model, pr_in, pr_out, pr_heatmap, pr_class_index, pr_masked);
    if (*evaluate) return cmd_evaluate(ev_pred, ev_manifest, ev_out);
    if (*synth) return cmd_synth(sy_out, sy_seed, sy_train, sy_test);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.kind() == ErrorKind::diverged ? kExitDiverged : kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}
