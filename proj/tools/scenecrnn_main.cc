// scenecrnn/tools/scenecrnn_main.cc

// Copyright 2026  The SceneCRNN Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

// Command-line front end: synthesize benchmark data, train, calibrate with an
// SVM, and evaluate with recording-level fusion.
//
// Exit codes: 0 success, 1 usage error, 2 runtime failure.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "scenecrnn/attention.h"
#include "scenecrnn/calibrate.h"
#include "scenecrnn/data.h"
#include "scenecrnn/infer.h"
#include "scenecrnn/metrics.h"
#include "scenecrnn/train.h"

namespace fs = std::filesystem;
using namespace scenecrnn;

namespace {

std::string default_cache_dir() {
  if (const char *env = std::getenv("SCENECRNN_CACHE")) return env;
  return "scenecrnn_cache";
}

dsp::FilterKind feature_kind(const std::string &name) {
  if (name == "logmel") return dsp::FilterKind::kMel;
  if (name == "loggam") return dsp::FilterKind::kGammatone;
  throw CLI::ValidationError("--features must be logmel or loggam");
}

struct SynthArgs {
  int64_t classes = 4;
  int64_t per_class = 10;
  int64_t test_per_class = 0;  // 0 = round(0.3 * per_class), at least 1
  double seconds = 30.0;
  int sample_rate = 22050;
  uint64_t seed = 1;
  std::string out = "synth_data";
};

int cmd_synth(const SynthArgs &args) {
  if (args.classes < 2) {
    std::cerr << "synth: at least two classes are required for the "
                 "between-class training scheme\n";
    return 1;
  }
  const int64_t test_per_class =
      args.test_per_class > 0
          ? args.test_per_class
          : std::max<int64_t>(1, static_cast<int64_t>(0.3 * args.per_class + 0.5));
  fs::create_directories(args.out);

  const auto specs = data::default_scene_specs(args.classes);
  const auto recordings = data::generate_synth_dataset(
      specs, args.per_class, test_per_class, args.sample_rate, args.seconds,
      args.seed);

  data::Dataset ds;
  for (const auto &spec : specs) ds.class_names.push_back(spec.name);
  for (const auto &rec : recordings) {
    const std::string file = rec.id + ".wav";
    write_wav_float32((fs::path(args.out) / file).string(), rec.clip);
    ds.items.push_back({rec.id, file, rec.label, rec.is_test});
  }
  const std::string manifest = (fs::path(args.out) / "manifest.csv").string();
  data::write_manifest(manifest, ds);
  std::cout << "wrote " << recordings.size() << " recordings and " << manifest
            << "\n";
  return 0;
}

struct TrainArgs {
  std::string manifest;
  std::string features = "logmel";
  std::string model = "att_crnn";
  int64_t epochs = 500;
  int64_t batch_size = 100;
  double lr = 1e-4;
  unsigned seed = 1;
  std::string checkpoint = "model.ckpt";
  std::string out = ".";
  std::string cache = default_cache_dir();
  int sample_rate = 22050;
  int64_t bands = 64;
  int64_t base_filters = 64;
  int64_t hidden = 128;
  int64_t att_size = 64;
};

int cmd_train(const TrainArgs &args) {
  dsp::DspConfig config;
  config.kind = feature_kind(args.features);
  config.bands = args.bands;

  std::cout << "config: model=" << args.model << " features=" << args.features
            << " epochs=" << args.epochs << " batch=" << args.batch_size
            << " lr=" << args.lr << " H=" << args.hidden
            << " att=" << args.att_size << " base_filters=" << args.base_filters
            << " seed=" << args.seed << "\n";

  const data::Dataset ds = data::load_manifest(args.manifest);
  const std::string manifest_dir = fs::path(args.manifest).parent_path().string();
  auto [train_set, test_set] = data::load_features(
      ds, manifest_dir, config, args.sample_rate, args.cache);
  std::cout << "features: " << train_set.items.size() << " train / "
            << test_set.items.size() << " test segments, image "
            << shape_str(train_set.image_shape) << "\n";

  train::ModelDims dims;
  dims.in_channels = train_set.image_shape[0];
  dims.freq_bins = train_set.image_shape[1];
  dims.steps = train_set.image_shape[2];
  dims.base_filters = args.base_filters;
  dims.hidden = args.hidden;
  dims.att_size = args.att_size;
  dims.classes = train_set.classes;

  train::Model model = train::Model::init(
      train::model_kind_from_name(args.model), dims, args.seed);

  train::TrainConfig tc;
  tc.epochs = args.epochs;
  tc.batch_size = args.batch_size;
  tc.learning_rate = args.lr;
  tc.seed = args.seed;
  const train::TrainResult result =
      train::train(model, train_set, test_set, tc);

  fs::create_directories(args.out);
  const std::string history_path =
      (fs::path(args.out) / "history.csv").string();
  result.history.write_csv(history_path);

  train::ModelBundle bundle;
  bundle.model = std::move(model);
  bundle.dsp = config;
  bundle.sample_rate = args.sample_rate;
  bundle.class_names = ds.class_names;
  train::save_model_bundle(args.checkpoint, bundle);

  std::cout << "best segment accuracy " << result.best_accuracy << " at epoch "
            << result.best_epoch << "; wrote " << args.checkpoint << " and "
            << history_path << "\n";
  return 0;
}

struct CalibrateArgs {
  std::string manifest;
  std::string checkpoint = "model.ckpt";
  std::string svm = "model.svm";
  std::string cache = default_cache_dir();
  double c_tradeoff = calibrate::kDefaultTradeoff;
};

int cmd_calibrate(const CalibrateArgs &args) {
  train::ModelBundle bundle = train::load_model_bundle(args.checkpoint);
  const data::Dataset ds =
      data::load_manifest(args.manifest, bundle.class_names);
  const std::string manifest_dir = fs::path(args.manifest).parent_path().string();
  auto [train_set, test_set] = data::load_features(
      ds, manifest_dir, bundle.dsp, bundle.sample_rate, args.cache);

  // Original training examples, no augmentation.
  const calibrate::LabeledFeatures features =
      calibrate::extract_features(bundle.model, train_set);
  const calibrate::SvmModel svm =
      calibrate::train_svm(features, args.c_tradeoff);
  calibrate::save_svm(args.svm, svm);

  int64_t correct = 0;
  for (int64_t i = 0; i < features.x.shape[0]; ++i) {
    const Tensor<double> p = calibrate::svm_predict_proba(
        svm, features.x.data() + i * features.x.shape[1], features.x.shape[1]);
    if (infer::argmax_label(p) == features.labels[static_cast<size_t>(i)])
      ++correct;
  }
  std::cout << "svm training accuracy "
            << static_cast<double>(correct) / features.x.shape[0] << "; wrote "
            << args.svm << "\n";
  return 0;
}

struct EvalArgs {
  std::string manifest;
  std::string checkpoint = "model.ckpt";
  std::string svm;
  std::string fuse_with;
  std::string fuse_svm;
  std::string out = ".";
  std::string cache = default_cache_dir();
  std::string dump_attention;
};

// Per-recording posteriors of one model over the test split.
struct ModelEval {
  std::vector<Tensor<double>> fused;              // per recording
  std::vector<std::vector<Tensor<double>>> segs;  // per recording, per segment
};

ModelEval eval_model(train::ModelBundle &bundle, const calibrate::SvmModel *svm,
                     const std::vector<AudioClip> &recordings) {
  const dsp::FeatureExtractor extractor(bundle.dsp, bundle.sample_rate);
  ModelEval out;
  for (const AudioClip &rec : recordings) {
    infer::RecordingPrediction pred =
        infer::classify_recording(bundle.model, svm, rec, extractor);
    out.fused.push_back(std::move(pred.fused));
    out.segs.push_back(std::move(pred.segment_posteriors));
  }
  return out;
}

int cmd_eval(const EvalArgs &args) {
  train::ModelBundle bundle = train::load_model_bundle(args.checkpoint);
  const data::Dataset ds =
      data::load_manifest(args.manifest, bundle.class_names);
  const std::string manifest_dir = fs::path(args.manifest).parent_path().string();

  std::optional<calibrate::SvmModel> svm;
  if (!args.svm.empty()) svm = calibrate::load_svm(args.svm);

  std::vector<AudioClip> recordings;
  std::vector<int> rec_labels;
  std::vector<std::string> rec_ids;
  for (const auto &item : ds.items) {
    if (!item.is_test) continue;
    const fs::path resolved = fs::path(item.path).is_absolute()
                                  ? fs::path(item.path)
                                  : fs::path(manifest_dir) / item.path;
    recordings.push_back(read_wav(resolved.string()));
    rec_labels.push_back(item.label);
    rec_ids.push_back(item.id);
  }
  if (recordings.empty()) throw std::runtime_error("eval: no test recordings");

  ModelEval primary = eval_model(bundle, svm ? &*svm : nullptr, recordings);

  if (!args.fuse_with.empty()) {
    train::ModelBundle other = train::load_model_bundle(args.fuse_with);
    if (other.class_names != bundle.class_names)
      throw std::runtime_error(
          "eval: --fuse-with checkpoint has a different class set");
    std::optional<calibrate::SvmModel> other_svm;
    if (!args.fuse_svm.empty()) other_svm = calibrate::load_svm(args.fuse_svm);
    const ModelEval secondary =
        eval_model(other, other_svm ? &*other_svm : nullptr, recordings);
    for (size_t r = 0; r < primary.fused.size(); ++r)
      primary.fused[r] = infer::fuse_models(primary.fused[r], secondary.fused[r]);
  }

  // Segment-level metrics.
  std::vector<int> seg_truth, seg_pred;
  for (size_t r = 0; r < primary.segs.size(); ++r)
    for (const auto &p : primary.segs[r]) {
      seg_truth.push_back(rec_labels[r]);
      seg_pred.push_back(infer::argmax_label(p));
    }
  const metrics::Summary seg =
      metrics::evaluate(seg_truth, seg_pred, bundle.model.dims.classes);

  // Recording-level metrics on the fused posteriors.
  std::vector<int> rec_pred;
  for (const auto &fused : primary.fused)
    rec_pred.push_back(infer::argmax_label(fused));
  const metrics::Summary rec =
      metrics::evaluate(rec_labels, rec_pred, bundle.model.dims.classes);

  fs::create_directories(args.out);
  const std::string pred_path = (fs::path(args.out) / "predictions.csv").string();
  {
    std::ofstream os(pred_path);
    os << "recording_id,predicted_class";
    for (const std::string &name : bundle.class_names) os << ",p_" << name;
    os << "\n";
    for (size_t r = 0; r < rec_ids.size(); ++r) {
      os << rec_ids[r] << ","
         << bundle.class_names[static_cast<size_t>(rec_pred[r])];
      for (int64_t c = 0; c < primary.fused[r].numel(); ++c)
        os << "," << primary.fused[r][c];
      os << "\n";
    }
  }

  if (!args.dump_attention.empty()) {
    if (bundle.model.kind != train::ModelKind::kAttCrnn)
      throw std::runtime_error("eval: attention dump needs an att_crnn checkpoint");
    fs::create_directories(args.dump_attention);
    const dsp::FeatureExtractor extractor(bundle.dsp, bundle.sample_rate);
    for (size_t r = 0; r < recordings.size(); ++r) {
      const auto images = extractor.recording_images(recordings[r]);
      for (size_t s = 0; s < images.size(); ++s) {
        ad::Tape<float> tape;
        layers::ParamBinding<float> binding(tape);
        std::vector<const Tensor<float> *> one{&images[s].data};
        ad::Node<float> *x =
            tape.constant(train::batch_images(one, images[s].data.shape));
        layers::ForwardOptions<float> opts;
        attention::AttCrnnOutput<float> diag;
        bundle.model.forward(binding, x, opts, nullptr, nullptr, &diag);
        attention::write_attention_csv(
            (fs::path(args.dump_attention) /
             (rec_ids[r] + ".seg" + std::to_string(s) + ".csv"))
                .string(),
            diag.a_tem->value, diag.a_spa->value, diag.mask->value);
      }
    }
  }

  std::cout << "segment_accuracy=" << seg.accuracy
            << " recording_accuracy=" << rec.accuracy
            << " macro_f1=" << rec.macro_f1
            << " macro_precision=" << rec.macro_precision << "\n"
            << "wrote " << pred_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"Acoustic scene classification with a convolutional-recurrent "
               "network and spatio-temporal attention pooling"};
  app.require_subcommand(1);

  SynthArgs synth_args;
  CLI::App *synth = app.add_subcommand("synth", "Generate a synthetic scene dataset");
  synth->add_option("--classes", synth_args.classes, "Number of scene classes");
  synth->add_option("--per-class", synth_args.per_class, "Recordings per class");
  synth->add_option("--test-per-class", synth_args.test_per_class,
                    "Test recordings per class (default 30%)");
  synth->add_option("--seconds", synth_args.seconds, "Recording length");
  synth->add_option("--sample-rate", synth_args.sample_rate, "Sample rate in Hz");
  synth->add_option("--seed", synth_args.seed, "Generator seed");
  synth->add_option("--out", synth_args.out, "Output directory");

  TrainArgs train_args;
  CLI::App *train_cmd = app.add_subcommand("train", "Train a model");
  train_cmd->add_option("--manifest", train_args.manifest, "Dataset manifest CSV")
      ->required();
  train_cmd->add_option("--features", train_args.features, "logmel or loggam");
  train_cmd->add_option("--model", train_args.model, "att_crnn or cnn_baseline");
  train_cmd->add_option("--epochs", train_args.epochs, "Training epochs");
  train_cmd->add_option("--batch-size", train_args.batch_size, "Minibatch size");
  train_cmd->add_option("--lr", train_args.lr, "Adam learning rate");
  train_cmd->add_option("--seed", train_args.seed, "Run seed");
  train_cmd->add_option("--checkpoint", train_args.checkpoint,
                        "Checkpoint output path");
  train_cmd->add_option("--out", train_args.out, "Output directory for history.csv");
  train_cmd->add_option("--cache", train_args.cache,
                        "Feature cache directory (env SCENECRNN_CACHE)");
  train_cmd->add_option("--sample-rate", train_args.sample_rate,
                        "Expected sample rate");
  train_cmd->add_option("--bands", train_args.bands, "Filterbank bands (M)");
  train_cmd->add_option("--base-filters", train_args.base_filters,
                        "First conv layer filter count");
  train_cmd->add_option("--hidden", train_args.hidden, "GRU hidden size (H)");
  train_cmd->add_option("--att-size", train_args.att_size, "Attention layer size");

  CalibrateArgs cal_args;
  CLI::App *cal = app.add_subcommand("calibrate", "Fit the SVM calibration stage");
  cal->add_option("--manifest", cal_args.manifest, "Dataset manifest CSV")->required();
  cal->add_option("--checkpoint", cal_args.checkpoint, "Trained checkpoint");
  cal->add_option("--svm", cal_args.svm, "SVM output path");
  cal->add_option("--cache", cal_args.cache, "Feature cache directory");
  cal->add_option("--svm-c", cal_args.c_tradeoff, "SVM trade-off parameter C");

  EvalArgs eval_args;
  CLI::App *eval_cmd = app.add_subcommand("eval", "Evaluate on the test split");
  eval_cmd->add_option("--manifest", eval_args.manifest, "Dataset manifest CSV")
      ->required();
  eval_cmd->add_option("--checkpoint", eval_args.checkpoint, "Trained checkpoint");
  eval_cmd->add_option("--svm", eval_args.svm, "SVM file for calibrated posteriors");
  eval_cmd->add_option("--fuse-with", eval_args.fuse_with,
                       "Second checkpoint for model fusion");
  eval_cmd->add_option("--fuse-svm", eval_args.fuse_svm,
                       "SVM file for the second checkpoint");
  eval_cmd->add_option("--out", eval_args.out,
                       "Output directory for predictions.csv");
  eval_cmd->add_option("--cache", eval_args.cache, "Feature cache directory");
  eval_cmd->add_option("--dump-attention", eval_args.dump_attention,
                       "Directory for per-segment attention CSV dumps");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return 1;
  }

  try {
    if (synth->parsed()) return cmd_synth(synth_args);
    if (train_cmd->parsed()) return cmd_train(train_args);
    if (cal->parsed()) return cmd_calibrate(cal_args);
    if (eval_cmd->parsed()) return cmd_eval(eval_args);
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
