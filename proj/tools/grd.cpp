// Copyright 2026 The grd Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// grd: command-line front end for graph-frequency replay detection.
//
//   grd synth-replay --out DIR [--seed S] [--pairs N] [--eval N] [--ir-length L] [--snr-db X | --clean]
//   grd extract --feature KIND --config C (--in WAV --out FEAT | --manifest LIST --out DIR) [--fa-model M]
//   grd align --in G.feat --in S.feat --out G2.feat --out S2.feat
//   grd train-fa --feature gfcc|gflc --config C --protocol P --in WAVDIR --out MODEL
//   grd train-gmm --config C --protocol P --in FEATDIR --gmm-genuine G --gmm-spoof S
//   grd score --gmm-genuine G --gmm-spoof S (--protocol P | --manifest LIST) [--in FEATDIR] --out SCORES
//   grd eval --in SCORES --protocol P [--out REPORT]
//
// Exit codes: 0 success, 1 runtime error, 2 usage error.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "grd/grd.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CommonArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  int jobs = 1;

  grd::PipelineConfig Load() const {
    try {
      grd::PipelineConfig cfg = config.empty() ? grd::PipelineConfig{} : grd::LoadConfig(config);
      if (seed) cfg.seed = *seed;
      cfg.Validate();
      return cfg;
    } catch (const grd::Error& e) {
      throw UsageError("config " + config + ": " + e.what());
    }
  }
};

void AddCommon(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config, "key=value pipeline configuration")->check(CLI::ExistingFile);
  cmd->add_option("--seed", args.seed, "root seed (overrides the config)");
  cmd->add_option("--jobs", args.jobs, "worker threads")->check(CLI::PositiveNumber);
}

std::vector<std::string> ReadManifest(const fs::path& path) {
  const auto bytes = grd::bin::ReadFile(path);
  std::vector<std::string> out;
  std::istringstream in{std::string(bytes.begin(), bytes.end())};
  for (std::string line; std::getline(in, line);) {
    const auto trimmed = grd::detail::Trim(line);
    if (!trimmed.empty() && trimmed.front() != '#') out.emplace_back(trimmed);
  }
  return out;
}

grd::FeatureKind KindOrUsage(const std::string& name) {
  auto kind = grd::ParseFeatureKind(name);
  if (!kind) throw UsageError("unknown feature kind '" + name + "'");
  return *kind;
}

bool IsDeviceKind(grd::FeatureKind k) { return k == grd::FeatureKind::kGfdcc || k == grd::FeatureKind::kGfldc; }

grd::FeatureKind BaseKindOf(grd::FeatureKind k) {
  switch (k) {
    case grd::FeatureKind::kGfdcc: return grd::FeatureKind::kGfcc;
    case grd::FeatureKind::kGfldc: return grd::FeatureKind::kGflc;
    default: return k;
  }
}

/// Front-end features for one file, device transform when a model is given,
/// CMVN last.
class Pipeline {
 public:
  Pipeline(const grd::PipelineConfig& cfg, grd::FeatureKind kind, std::optional<grd::FaModel> fa)
      : cmvn_(cfg.frontend.cmvn), fa_(std::move(fa)), extractor_(RawConfig(cfg), BaseKindOf(kind)) {
    if (fa_ && fa_->dim() != extractor_.dim()) {
      throw grd::Error(grd::ErrorKind::kDimension,
                       fmt::format("FA model dimension {} != feature dimension {}", fa_->dim(), extractor_.dim()));
    }
  }

  grd::FeatureMatrix Run(const grd::AudioSignal& sig) const {
    grd::FeatureMatrix m = extractor_.Extract(sig);
    if (fa_) m = grd::ExtractDeviceFeature(m, *fa_);
    return cmvn_ ? grd::Cmvn(m) : m;
  }

  grd::FeatureMatrix RunFile(const fs::path& wav) const { return Run(grd::ReadWav(wav)); }

 private:
  static grd::FrontendConfig RawConfig(const grd::PipelineConfig& cfg) {
    grd::FrontendConfig fe = cfg.frontend;
    fe.cmvn = false;
    return fe;
  }

  bool cmvn_;
  std::optional<grd::FaModel> fa_;
  grd::FeatureExtractor extractor_;
};

// ---------------------------------------------------------------------------

struct SynthArgs {
  std::string out;
  std::uint64_t seed = 0;
  grd::SyntheticReplaySpec spec;
  bool clean = false;
};

int RunSynth(const SynthArgs& a) {
  grd::SyntheticReplaySpec spec = a.spec;
  spec.seed = a.seed;
  if (a.clean) spec.snr_db = std::numeric_limits<double>::infinity();
  const auto corpus = grd::GenerateSyntheticCorpus(spec);
  const fs::path root(a.out);
  fs::create_directories(root / "wav");
  std::string manifest;
  for (const auto& u : corpus.utterances) {
    const auto path = root / "wav" / (u.id + ".wav");
    grd::WriteWav(u.audio, path);
    manifest += path.string() + "\n";
  }
  grd::bin::WriteTextAtomic(root / "train.txt", grd::RenderProtocol(corpus.train));
  grd::bin::WriteTextAtomic(root / "eval.txt", grd::RenderProtocol(corpus.eval));
  grd::bin::WriteTextAtomic(root / "all.lst", manifest);
  fmt::print("wrote {} utterances ({} train pairs, {} eval utterances) to {}\n", corpus.utterances.size(),
             corpus.train.size() / 2, corpus.eval.size(), root.string());
  return 0;
}

struct ExtractArgs {
  CommonArgs common;
  std::string feature;
  std::string fa_model;
  std::string in;
  std::string manifest;
  std::string out;
};

int RunExtract(const ExtractArgs& a) {
  const auto kind = KindOrUsage(a.feature);
  if (IsDeviceKind(kind) && a.fa_model.empty()) throw UsageError("--feature " + a.feature + " requires --fa-model");
  if (!IsDeviceKind(kind) && !a.fa_model.empty()) throw UsageError("--fa-model only applies to gfdcc/gfldc");
  if (a.in.empty() == a.manifest.empty()) throw UsageError("give exactly one of --in or --manifest");
  const auto cfg = a.common.Load();
  std::optional<grd::FaModel> fa;
  if (IsDeviceKind(kind)) fa = grd::ReadFaModel(a.fa_model);
  const Pipeline pipeline(cfg, kind, std::move(fa));

  if (!a.in.empty()) {
    grd::WriteFeatures(pipeline.RunFile(a.in), a.out);
    return 0;
  }
  const auto inputs = ReadManifest(a.manifest);
  const fs::path out_dir(a.out);
  fs::create_directories(out_dir);
  grd::ParallelFor(inputs.size(), a.common.jobs, [&](std::size_t i) {
    const fs::path wav(inputs[i]);
    grd::WriteFeatures(pipeline.RunFile(wav), out_dir / (wav.stem().string() + ".feat"));
  });
  grd::Log().info("extracted {} files", inputs.size());
  return 0;
}

struct AlignArgs {
  std::vector<std::string> in;
  std::vector<std::string> out;
};

int RunAlign(const AlignArgs& a) {
  const auto g = grd::ReadFeatures(a.in.at(0));
  const auto s = grd::ReadFeatures(a.in.at(1));
  const auto path = grd::DtwAlign(g, s);
  const auto [g2, s2] = grd::ExpandAlongPath(g, s, path);
  grd::WriteFeatures(g2, a.out.at(0));
  grd::WriteFeatures(s2, a.out.at(1));
  fmt::print("steps={} total_cost={:.6f}\n", path.steps.size(), path.total_cost);
  return 0;
}

struct TrainFaArgs {
  CommonArgs common;
  std::string feature = "gfcc";
  std::string protocol;
  std::string in;
  std::string out;
};

int RunTrainFa(const TrainFaArgs& a) {
  const auto kind = KindOrUsage(a.feature);
  if (IsDeviceKind(kind)) throw UsageError("train-fa takes gfcc or gflc features");
  const auto cfg = a.common.Load();
  const auto protocol = grd::ParseProtocol(a.protocol);

  // pair_id -> (genuine id, spoof id)
  std::map<std::string, std::pair<std::vector<std::string>, std::vector<std::string>>> groups;
  for (const auto& e : protocol) {
    if (!e.pair_id) {
      grd::Log().warn("utterance '{}' has no pair id, skipped", e.utterance_id);
      continue;
    }
    auto& g = groups[*e.pair_id];
    (e.label == grd::Label::kGenuine ? g.first : g.second).push_back(e.utterance_id);
  }
  std::vector<std::pair<std::string, std::string>> members;
  for (const auto& [pair_id, g] : groups) {
    if (g.first.size() != 1 || g.second.size() != 1) {
      grd::Log().warn("pair '{}' has {} genuine and {} spoof utterances, skipped", pair_id, g.first.size(),
                      g.second.size());
      continue;
    }
    members.emplace_back(g.first.front(), g.second.front());
  }
  if (members.empty()) throw grd::Error(grd::ErrorKind::kInvalidArgument, "no usable genuine/replay pairs in protocol");

  const Pipeline pipeline(
      [&] {
        auto raw = cfg;
        raw.frontend.cmvn = false;
        return raw;
      }(),
      kind, std::nullopt);
  const fs::path audio(a.in);
  std::vector<grd::ParallelPair> pairs(members.size());
  grd::ParallelFor(members.size(), a.common.jobs, [&](std::size_t i) {
    const auto g = pipeline.RunFile(audio / (members[i].first + ".wav"));
    const auto s = pipeline.RunFile(audio / (members[i].second + ".wav"));
    auto [g2, s2] = grd::ExpandAlongPath(g, s, grd::DtwAlign(g, s));
    pairs[i] = {std::move(g2), std::move(s2)};
  });

  const auto result = grd::TrainFa(pairs, {cfg.fa_rank, cfg.fa_iters, grd::DeriveSeed(cfg.seed, "fa")});
  grd::WriteFaModel(result.model, a.out);
  fmt::print("iter loglik\n");
  for (std::size_t i = 0; i < result.log_likelihood.size(); ++i) {
    fmt::print("{} {:.6f}\n", i, result.log_likelihood[i]);
  }
  fmt::print("pairs={} D={} Q={}\n", pairs.size(), result.model.dim(), result.model.rank());
  return 0;
}

grd::FeatureMatrix LoadFeature(const fs::path& dir, const std::string& id) { return grd::ReadFeatures(dir / (id + ".feat")); }

struct TrainGmmArgs {
  CommonArgs common;
  std::string protocol;
  std::string in;
  std::string gmm_genuine;
  std::string gmm_spoof;
};

int RunTrainGmm(const TrainGmmArgs& a) {
  const auto cfg = a.common.Load();
  const auto protocol = grd::ParseProtocol(a.protocol);
  std::vector<grd::FeatureMatrix> feats(protocol.size());
  grd::ParallelFor(protocol.size(), a.common.jobs,
                   [&](std::size_t i) { feats[i] = LoadFeature(a.in, protocol[i].utterance_id); });

  auto pool = [&](grd::Label label) {
    Eigen::Index frames = 0;
    Eigen::Index dim = -1;
    for (std::size_t i = 0; i < protocol.size(); ++i) {
      if (protocol[i].label != label) continue;
      frames += feats[i].frames();
      if (dim >= 0 && dim != feats[i].dim()) throw grd::Error(grd::ErrorKind::kDimension, "mixed feature dimensions");
      dim = feats[i].dim();
    }
    if (dim < 0) {
      throw grd::Error(grd::ErrorKind::kInvalidArgument,
                       fmt::format("no {} utterances in protocol", grd::LabelName(label)));
    }
    grd::RowMatrix data(frames, dim);
    Eigen::Index row = 0;
    for (std::size_t i = 0; i < protocol.size(); ++i) {
      if (protocol[i].label != label) continue;
      data.middleRows(row, feats[i].frames()) = feats[i].rows;
      row += feats[i].frames();
    }
    return data;
  };
  const auto genuine = pool(grd::Label::kGenuine);
  const auto spoof = pool(grd::Label::kSpoof);

  const grd::GmmTrainOptions gopt{cfg.gmm_components, cfg.gmm_iters, grd::DeriveSeed(cfg.seed, "gmm-genuine")};
  const grd::GmmTrainOptions sopt{cfg.gmm_components, cfg.gmm_iters, grd::DeriveSeed(cfg.seed, "gmm-spoof")};
  const auto g = grd::GmmEmTrain(genuine, gopt);
  const auto s = grd::GmmEmTrain(spoof, sopt);
  grd::WriteGmm(g.model, a.gmm_genuine);
  grd::WriteGmm(s.model, a.gmm_spoof);
  fmt::print("genuine frames={} loglik/frame={:.6f}\nspoof frames={} loglik/frame={:.6f}\n", genuine.rows(),
             g.log_likelihood.back() / static_cast<double>(genuine.rows()), spoof.rows(),
             s.log_likelihood.back() / static_cast<double>(spoof.rows()));
  return 0;
}

struct ScoreArgs {
  CommonArgs common;
  std::string gmm_genuine;
  std::string gmm_spoof;
  std::string protocol;
  std::string manifest;
  std::string in;
  std::string out;
};

int RunScore(const ScoreArgs& a) {
  if (a.protocol.empty() == a.manifest.empty()) throw UsageError("give exactly one of --protocol or --manifest");
  if (!a.protocol.empty() && a.in.empty()) throw UsageError("--protocol scoring needs --in FEATDIR");
  const auto genuine = grd::ReadGmm(a.gmm_genuine);
  const auto spoof = grd::ReadGmm(a.gmm_spoof);

  std::vector<std::pair<std::string, fs::path>> items;
  if (!a.protocol.empty()) {
    for (const auto& e : grd::ParseProtocol(a.protocol)) {
      items.emplace_back(e.utterance_id, fs::path(a.in) / (e.utterance_id + ".feat"));
    }
  } else {
    for (const auto& p : ReadManifest(a.manifest)) items.emplace_back(fs::path(p).stem().string(), p);
  }
  std::vector<grd::TrialScore> scores(items.size());
  grd::ParallelFor(items.size(), a.common.jobs, [&](std::size_t i) {
    scores[i] = {items[i].first, grd::ScoreLlr(genuine, spoof, grd::ReadFeatures(items[i].second))};
  });
  grd::bin::WriteTextAtomic(a.out, grd::RenderScores(scores));
  return 0;
}

struct EvalArgs {
  std::string in;
  std::string protocol;
  std::string out;
};

int RunEval(const EvalArgs& a) {
  const auto bytes = grd::bin::ReadFile(a.in);
  const auto scores = grd::ParseScoresText(std::string_view(bytes.data(), bytes.size()));
  const auto protocol = grd::ParseProtocol(a.protocol);
  const auto result = grd::ComputeEer(grd::JoinTrials(scores, protocol));
  const auto report = grd::FormatEerReport(result);
  fmt::print("{}\n", report);
  if (!a.out.empty()) grd::bin::WriteTextAtomic(a.out, report + "\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Graph-frequency device features for replay detection"};
  app.require_subcommand(1);

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth-replay", "generate a synthetic genuine/replay corpus");
  synth_cmd->add_option("--out", synth.out, "output directory")->required();
  synth_cmd->add_option("--seed", synth.seed, "root seed");
  synth_cmd->add_option("--pairs", synth.spec.n_pairs, "training pairs")->check(CLI::PositiveNumber);
  synth_cmd->add_option("--eval", synth.spec.n_eval, "evaluation utterances (even)")->check(CLI::PositiveNumber);
  synth_cmd->add_option("--ir-length", synth.spec.ir_length, "impulse response taps")->check(CLI::PositiveNumber);
  synth_cmd->add_option("--snr-db", synth.spec.snr_db, "additive noise SNR in dB");
  synth_cmd->add_option("--max-delay", synth.spec.max_delay, "longest replay lead-in in samples")
      ->check(CLI::NonNegativeNumber);
  synth_cmd->add_flag("--clean", synth.clean, "no additive noise (infinite SNR)");

  ExtractArgs extract;
  auto* extract_cmd = app.add_subcommand("extract", "extract feature files from WAV audio");
  AddCommon(extract_cmd, extract.common);
  extract_cmd->add_option("--feature", extract.feature, "gfcc, gflc, gfdcc or gfldc")->required();
  extract_cmd->add_option("--fa-model", extract.fa_model, "device FA model (gfdcc/gfldc)");
  extract_cmd->add_option("--in", extract.in, "input WAV");
  extract_cmd->add_option("--manifest", extract.manifest, "file with one WAV path per line");
  extract_cmd->add_option("--out", extract.out, "output file (--in) or directory (--manifest)")->required();

  AlignArgs align;
  auto* align_cmd = app.add_subcommand("align", "DTW-align two feature files and expand them to equal length");
  align_cmd->add_option("--in", align.in, "genuine then replay feature file")->required()->expected(2);
  align_cmd->add_option("--out", align.out, "expanded genuine then replay output")->required()->expected(2);

  TrainFaArgs train_fa;
  auto* train_fa_cmd = app.add_subcommand("train-fa", "train the device FA model on parallel pairs");
  AddCommon(train_fa_cmd, train_fa.common);
  train_fa_cmd->add_option("--feature", train_fa.feature, "gfcc or gflc");
  train_fa_cmd->add_option("--protocol", train_fa.protocol, "protocol with pair ids")->required();
  train_fa_cmd->add_option("--in", train_fa.in, "directory holding <utterance_id>.wav")->required();
  train_fa_cmd->add_option("--out", train_fa.out, "model output")->required();

  TrainGmmArgs train_gmm;
  auto* train_gmm_cmd = app.add_subcommand("train-gmm", "train genuine and spoof GMMs");
  AddCommon(train_gmm_cmd, train_gmm.common);
  train_gmm_cmd->add_option("--protocol", train_gmm.protocol, "labelled training protocol")->required();
  train_gmm_cmd->add_option("--in", train_gmm.in, "directory holding <utterance_id>.feat")->required();
  train_gmm_cmd->add_option("--gmm-genuine", train_gmm.gmm_genuine, "genuine model output")->required();
  train_gmm_cmd->add_option("--gmm-spoof", train_gmm.gmm_spoof, "spoof model output")->required();

  ScoreArgs score;
  auto* score_cmd = app.add_subcommand("score", "score utterances with the class GMMs");
  AddCommon(score_cmd, score.common);
  score_cmd->add_option("--gmm-genuine", score.gmm_genuine, "genuine model")->required();
  score_cmd->add_option("--gmm-spoof", score.gmm_spoof, "spoof model")->required();
  score_cmd->add_option("--protocol", score.protocol, "utterances to score");
  score_cmd->add_option("--manifest", score.manifest, "feature files to score");
  score_cmd->add_option("--in", score.in, "directory holding <utterance_id>.feat");
  score_cmd->add_option("--out", score.out, "score file output")->required();

  EvalArgs eval;
  auto* eval_cmd = app.add_subcommand("eval", "equal error rate of a score file");
  eval_cmd->add_option("--in", eval.in, "score file")->required();
  eval_cmd->add_option("--protocol", eval.protocol, "labelled protocol")->required();
  eval_cmd->add_option("--out", eval.out, "report output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*synth_cmd) return RunSynth(synth);
    if (*extract_cmd) return RunExtract(extract);
    if (*align_cmd) return RunAlign(align);
    if (*train_fa_cmd) return RunTrainFa(train_fa);
    if (*train_gmm_cmd) return RunTrainGmm(train_gmm);
    if (*score_cmd) return RunScore(score);
    if (*eval_cmd) return RunEval(eval);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}
