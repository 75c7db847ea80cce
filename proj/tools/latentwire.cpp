// Copyright 2026 The LatentWire Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


// latentwire: command-line driver for the training and testing pipeline.
//
//   synth -> ingest -> train-vae -> [quantize] -> compress -> train-clf -> eval
//   serve / send stream latent frames; bench times stages and models energy;
//   report aggregates reports.
//
// Exit codes: 0 success, 1 runtime failure, 2 usage error or missing input.
// Failures print one line on stderr: "error: <kind>: <message>".

#include <signal.h>

#include <CLI11.hpp>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <set>
#include <thread>

#include "latentwire/config.hpp"
#include "latentwire/dataset_file.hpp"
#include "latentwire/dsp.hpp"
#include "latentwire/energy.hpp"
#include "latentwire/error.hpp"
#include "latentwire/eval.hpp"
#include "latentwire/frame.hpp"
#include "latentwire/ingest.hpp"
#include "latentwire/model_file.hpp"
#include "latentwire/quant.hpp"
#include "latentwire/server.hpp"
#include "latentwire/synth.hpp"
#include "latentwire/vae.hpp"

namespace fs = std::filesystem;
using namespace latentwire;

namespace {

class UsageError : public Error {
 public:
  explicit UsageError(const std::string& what) : Error(what) {}
  const char* kind() const noexcept override { return "usage"; }
};

class MissingArtifact : public Error {
 public:
  explicit MissingArtifact(const fs::path& path, const std::string& hint)
      : Error("missing artifact " + path.string() + " (" + hint + ")") {}
  const char* kind() const noexcept override { return "missing-artifact"; }
};

// Flags shared by the subcommands; unset values leave the config alone.
struct Overrides {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> latent_dim;
  std::optional<std::string> split_by;
  std::optional<std::string> profile;
};

struct Context {
  PipelineConfig cfg;
  std::uint64_t hash = 0;

  std::string tag() const { return "l" + std::to_string(cfg.vae.latent_dim); }
  fs::path recording() const { return cfg.data_dir / (cfg.synth.patient_id + ".lwrc"); }
  fs::path annotations() const { return cfg.data_dir / (cfg.synth.patient_id + ".annotations.csv"); }
  fs::path dataset() const { return cfg.data_dir / "spectrograms.lwsd"; }
  fs::path vae_model() const { return cfg.models_dir / ("vae-" + tag() + ".lwmd"); }
  fs::path vae_f16() const { return cfg.models_dir / ("vae-" + tag() + "-f16.lwmd"); }
  fs::path encoder_f16() const { return cfg.models_dir / ("encoder-" + tag() + "-f16.lwmd"); }
  fs::path latents() const { return cfg.data_dir / ("latents-" + tag() + ".lwlf"); }
  fs::path classifier() const { return cfg.models_dir / ("classifier-" + tag() + ".lwmd"); }
  fs::path report(const std::string& name) const { return cfg.reports_dir / (name + ".txt"); }
};

Context make_context(const Overrides& o) {
  if (!fs::exists(o.config_path)) throw UsageError("config file " + o.config_path + " does not exist");
  Context c;
  try {
    c.cfg = load_config(o.config_path);
  } catch (const ParseError& e) {
    throw UsageError(std::string("invalid config: ") + e.what());
  } catch (const ValidationError& e) {
    throw UsageError(std::string("invalid config: ") + e.what());
  }
  if (o.seed) {
    c.cfg.seed = *o.seed;
    c.cfg.train.seed = *o.seed;
  }
  if (o.latent_dim) c.cfg.vae.latent_dim = *o.latent_dim;
  if (o.split_by) c.cfg.split_by = parse_split_by(*o.split_by);
  if (o.profile) c.cfg.profile = *o.profile;
  c.cfg.validate();
  c.hash = config_hash(c.cfg);
  return c;
}

void require(const fs::path& path, const std::string& hint) {
  if (!fs::exists(path)) throw MissingArtifact(path, hint);
}

void ensure_parent(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
}

void write_text(const fs::path& path, const std::string& text) {
  ensure_parent(path);
  write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

// Report fields every stage records for reproducibility.
eval::Report base_report(const Context& ctx, const std::string& command) {
  eval::Report r;
  r.set("format", "latentwire-report 1");
  r.set("command", command);
  r.set("config_hash", hash_hex(ctx.hash));
  r.set("latent_dim", std::to_string(ctx.cfg.vae.latent_dim));
  r.set("seed", std::to_string(ctx.cfg.seed));
  r.set("config", config_to_json(ctx.cfg, -1));
  return r;
}

void publish_report(const eval::Report& r, const fs::path& path) {
  ensure_parent(path);
  eval::save_report(r, path);
  std::cout << path.string() << '\n';
}

// ---------------------------------------------------------------------------

void cmd_synth(const Context& ctx) {
  const auto ds = ingest::synth_dataset(ctx.cfg.synth, stage_seed(ctx.cfg, 1));
  ensure_parent(ctx.recording());
  ingest::save_recording(ds.recording, ctx.recording());
  const int start = ingest::parse_time_of_day(ctx.cfg.recording_start);
  const std::string csv = "# config_hash: " + hash_hex(ctx.hash) + "\n" +
                          ingest::format_annotations(ctx.cfg.synth.patient_id, ds.events, start);
  write_text(ctx.annotations(), csv);
  std::cout << ctx.recording().string() << '\n' << ctx.annotations().string() << '\n';
}

struct IngestOptions {
  std::string recording;
  std::string annotations;
  std::string pgm_dir;
  int pgm_limit = 16;
};

void cmd_ingest(const Context& ctx, const IngestOptions& o) {
  const fs::path rec_path = o.recording.empty() ? ctx.recording() : fs::path(o.recording);
  const fs::path ann_path = o.annotations.empty() ? ctx.annotations() : fs::path(o.annotations);
  require(rec_path, "run synth or pass --recording");
  require(ann_path, "run synth or pass --annotations");
  const auto recording = rec_path.extension() == ".csv"
                             ? ingest::load_recording_csv(rec_path, ctx.cfg.synth.patient_id, ctx.cfg.synth.sample_rate_hz)
                             : ingest::load_recording(rec_path);
  const auto text = read_file(ann_path);
  const auto parsed = ingest::parse_annotations(std::string_view(reinterpret_cast<const char*>(text.data()), text.size()),
                                                ingest::parse_time_of_day(ctx.cfg.recording_start));
  for (const auto& r : parsed.rejected) std::cerr << "warning: annotation " << r << '\n';
  if (recording.channel_count() != ctx.cfg.vae.in_channels) {
    throw ValidationError("recording has " + std::to_string(recording.channel_count()) + " channels, vae.in_channels is " +
                          std::to_string(ctx.cfg.vae.in_channels));
  }

  auto ds = build_dataset(recording, parsed.events, ctx.cfg.window, ctx.cfg.stft, ctx.cfg.vae.f_model,
                          ctx.cfg.vae.t_model);
  ds.config_hash = ctx.hash;
  ensure_parent(ctx.dataset());
  save_dataset(ds, ctx.dataset());
  const auto labels = ds.labels();
  const auto positives = std::count(labels.begin(), labels.end(), 1);
  std::cerr << "ingest: " << ds.items.size() << " windows, " << positives << " seizure, " << parsed.events.size()
            << " events\n";
  if (!o.pgm_dir.empty()) {
    fs::create_directories(o.pgm_dir);
    for (std::size_t i = 0; i < ds.items.size() && static_cast<int>(i) < o.pgm_limit; ++i) {
      const auto path = fs::path(o.pgm_dir) / ("window" + std::to_string(i) + "_label" + std::to_string(labels[i]) + ".pgm");
      dsp::write_pgm(ds.items[i], 0, path);
    }
  }
  std::cout << ctx.dataset().string() << '\n';
}

SpectrogramDataset require_dataset(const Context& ctx) {
  require(ctx.dataset(), "run ingest first");
  return load_dataset(ctx.dataset());
}

void cmd_train_vae(const Context& ctx) {
  auto ds = require_dataset(ctx);
  auto report = base_report(ctx, "train-vae");
  eval::Report::Section hist{"history", {"epoch", "train_kl", "train_recon", "train_total", "val_kl", "val_recon", "val_total"}, {}};
  const auto result = vae::train<float>(ds.items, ctx.cfg.train, ctx.cfg.vae, [&](const vae::EpochStats& s) {
    std::cerr << "epoch " << s.epoch << " train " << s.train.total << " val " << s.validation.total << '\n';
    hist.rows.push_back({std::to_string(s.epoch), eval::format_double(s.train.kl), eval::format_double(s.train.recon),
                         eval::format_double(s.train.total), eval::format_double(s.validation.kl),
                         eval::format_double(s.validation.recon), eval::format_double(s.validation.total)});
  });
  ensure_parent(ctx.vae_model());
  model_file::save_model(result.model, ctx.vae_model(), ctx.hash);
  std::cout << ctx.vae_model().string() << '\n';
  const auto ratio = vae::compression_ratio(ctx.cfg.vae);
  report.set("epochs", std::to_string(result.history.size()));
  report.set("best_epoch", std::to_string(result.best_epoch));
  report.set("compression_ratio", std::to_string(ratio.numerator) + ":" + std::to_string(ratio.denominator));
  report.sections.push_back(std::move(hist));
  publish_report(report, ctx.report("train-vae-" + ctx.tag()));
}

void cmd_quantize(const Context& ctx, const std::string& model_arg) {
  const fs::path src = model_arg.empty() ? ctx.vae_model() : fs::path(model_arg);
  require(src, "run train-vae first");
  const auto stored = model_file::load_vae(src);
  const auto model = stored.working_model();
  const auto full = quant::quantize(model);
  const auto enc = quant::quantize(quant::extract_encoder(model));
  if (full.saturated > 0) std::cerr << "warning: " << full.saturated << " weights saturated to +-65504\n";
  model_file::save_model(full, ctx.vae_f16(), stored.header.config_hash);
  model_file::save_model(enc, ctx.encoder_f16(), stored.header.config_hash);
  const auto before = fs::file_size(src);
  const auto after = fs::file_size(ctx.vae_f16());
  std::cerr << "quantize: " << before << " -> " << after << " bytes ("
            << quant::size_reduction_percent(before, after) << "% smaller), encoder " << fs::file_size(ctx.encoder_f16())
            << " bytes\n";
  std::cout << ctx.vae_f16().string() << '\n' << ctx.encoder_f16().string() << '\n';
}

void cmd_compress(const Context& ctx, const std::string& model_arg, const std::string& csv) {
  const fs::path src = model_arg.empty() ? ctx.vae_model() : fs::path(model_arg);
  require(src, "run train-vae first");
  const auto ds = require_dataset(ctx);
  const auto stored = model_file::load_vae(src);
  const auto model = stored.working_model();
  if (model.config().latent_dim != ctx.cfg.vae.latent_dim) {
    throw ValidationError("model latent_dim " + std::to_string(model.config().latent_dim) + " differs from config " +
                          std::to_string(ctx.cfg.vae.latent_dim));
  }
  std::vector<const dsp::Spectrogram*> xs;
  for (const auto& s : ds.items) xs.push_back(&s);
  const auto encoded = vae::encode_batch(model, xs);
  Bytes stream;
  for (std::size_t i = 0; i < encoded.size(); ++i) {
    edgewire::append_frame(stream, edgewire::make_frame(ds.patient_id, i, encoded[i].mu, ctx.cfg.wire_precision));
  }
  ensure_parent(ctx.latents());
  write_file(ctx.latents(), stream);
  LatentMeta meta{ctx.hash, stored.header.config_hash, ds.patient_id, ctx.cfg.vae.latent_dim,
                  quant::to_string(ctx.cfg.wire_precision), ds.labels(), ds.groups};
  save_latent_meta(meta, ctx.latents());
  std::cerr << "compress: " << encoded.size() << " frames, " << stream.size() << " bytes\n";
  std::cout << ctx.latents().string() << '\n';
  if (!csv.empty()) {
    write_feature_csv(frames_to_features(edgewire::decode_frames(stream)), ds.labels(), csv);
    std::cout << csv << '\n';
  }
}

struct Features {
  gbdt::FeatureMatrix x;
  std::vector<int> labels;
  std::vector<int> groups;
};

Features latent_features(const Context& ctx) {
  require(ctx.latents(), "run compress first");
  require(meta_path(ctx.latents()), "run compress first");
  const auto meta = load_latent_meta(ctx.latents());
  const auto frames = edgewire::decode_frames(read_file(ctx.latents()));
  if (frames.size() != meta.labels.size()) throw ValidationError("latent file and its metadata disagree on frame count");
  return {frames_to_features(frames), meta.labels, meta.groups};
}

Features raw_features(const Context& ctx) {
  const auto ds = require_dataset(ctx);
  return {flatten(ds.items), ds.labels(), ds.groups};
}

void cmd_train_clf(const Context& ctx) {
  const auto f = latent_features(ctx);
  std::vector<Eigen::Index> all(f.labels.size());
  std::iota(all.begin(), all.end(), 0);
  const auto [fit_rows, es_rows] =
      eval::stratified_holdout(all, f.labels, ctx.cfg.early_stopping_fraction, stage_seed(ctx.cfg, 5));
  auto pick_y = [&](const std::vector<Eigen::Index>& rows) {
    std::vector<int> y;
    for (auto r : rows) y.push_back(f.labels[static_cast<std::size_t>(r)]);
    return y;
  };
  const gbdt::FeatureMatrix x_fit = f.x(fit_rows, Eigen::all);
  const gbdt::FeatureMatrix x_es = f.x(es_rows, Eigen::all);
  const auto model = gbdt::fit(x_fit, pick_y(fit_rows), ctx.cfg.gbdt, &x_es, pick_y(es_rows));
  const auto p = gbdt::predict_proba(model, f.x);
  const auto m = eval::confusion(std::span<const double>(p.data(), static_cast<std::size_t>(p.size())), f.labels,
                                 ctx.cfg.threshold);
  std::cerr << "train-clf: " << model.trees.size() << " trees (best round " << model.best_round
            << "), accuracy on all windows " << m.accuracy << '\n';
  ensure_parent(ctx.classifier());
  model_file::save_model(model, ctx.classifier(), ctx.hash);
  std::cout << ctx.classifier().string() << '\n';
}

void cmd_eval(const Context& ctx, const std::string& features) {
  require(ctx.classifier(), "run train-clf first");
  const auto classifier = model_file::load_gbdt(ctx.classifier());
  if (features != "latent" && features != "raw") throw UsageError("--features must be latent or raw");
  const auto f = features == "raw" ? raw_features(ctx) : latent_features(ctx);
  const auto seed = stage_seed(ctx.cfg, 6);
  const auto folds = ctx.cfg.split_by == SplitBy::Event ? eval::group_kfold(f.labels, f.groups, ctx.cfg.folds, seed)
                                                        : eval::kfold(f.labels, ctx.cfg.folds, seed, true);
  eval::PipelineOptions opt;
  opt.gbdt = classifier.params;
  opt.early_stopping_fraction = ctx.cfg.early_stopping_fraction;
  opt.seed = seed;
  opt.threshold = ctx.cfg.threshold;
  const auto result = eval::evaluate_pipeline(f.x, f.labels, folds, opt);
  auto report = base_report(ctx, "eval");
  report.set("features", features);
  report.set("feature_count", std::to_string(f.x.cols()));
  report.set("samples", std::to_string(f.labels.size()));
  report.set("split_by", to_string(ctx.cfg.split_by));
  eval::append_result(report, result);
  std::cerr << "eval (" << features << "): accuracy " << result.accuracy_mean << " +- " << result.accuracy_std
            << ", ROC AUC " << result.roc.area << ", PR AUC " << result.pr.area << '\n';
  publish_report(report, ctx.report(features == "raw" ? "eval-raw" : "eval-" + ctx.tag()));
}

volatile sig_atomic_t g_stop = 0;
extern "C" void on_signal(int) { g_stop = 1; }

void cmd_serve(const Context* ctx, const std::optional<std::string>& listen, const std::string& classifier_arg,
               bool no_classifier, double duration_s) {
  std::optional<gbdt::GbdtModel> classifier;
  if (!no_classifier) {
    const fs::path path = !classifier_arg.empty() ? fs::path(classifier_arg)
                          : ctx                   ? ctx->classifier()
                                                  : throw UsageError("serve needs --config or --classifier (or --no-classifier)");
    require(path, "run train-clf first or pass --no-classifier");
    classifier = model_file::load_gbdt(path);
  }
  const std::string address = edgewire::resolve_listen_address(listen, ctx ? ctx->cfg.listen : "");
  edgewire::Server server(address, [&](const edgewire::LatentFrame& f) -> std::optional<double> {
    if (!classifier) return std::nullopt;
    const std::vector<double> row(f.values.begin(), f.values.end());
    return gbdt::predict_proba(*classifier, row);
  });
  signal(SIGINT, on_signal);
  signal(SIGTERM, on_signal);
  server.start();
  std::cout << "listening on " << server.address() << std::endl;
  const auto t0 = std::chrono::steady_clock::now();
  while (!g_stop) {
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
    if (duration_s > 0 && std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() >= duration_s) break;
  }
  server.stop();
  std::cerr << "serve: " << server.frames_ok() << " frames ok, " << server.frames_rejected() << " rejected\n";
}

void cmd_send(const Context* ctx, const std::string& latents_arg, const std::optional<std::string>& address_arg,
              const std::string& export_path) {
  const fs::path path = !latents_arg.empty() ? fs::path(latents_arg)
                        : ctx                ? ctx->latents()
                                             : throw UsageError("send needs --config or --latents");
  require(path, "run compress first");
  const auto bytes = read_file(path);
  const auto frames = edgewire::decode_frames(bytes);
  if (!export_path.empty()) {
    ensure_parent(export_path);
    write_file(export_path, bytes);
    std::cerr << "send: exported " << frames.size() << " frames, " << bytes.size() << " bytes\n";
    std::cout << export_path << '\n';
    return;
  }
  const std::string address = edgewire::resolve_listen_address(address_arg, ctx ? ctx->cfg.listen : "");
  const auto stats = edgewire::send_stream(address, bytes);
  std::size_t ok = 0;
  for (const auto& r : stats.responses) ok += r.status == edgewire::Status::Ok;
  std::cout << "frames " << stats.frames << " bytes_sent " << stats.bytes_sent << " bytes_received "
            << stats.bytes_received << " ok " << ok << " wall_s " << eval::format_double(stats.wall_s) << '\n';
  if (ok != stats.responses.size()) throw ProtocolError(std::to_string(stats.responses.size() - ok) + " frames rejected by " + address);
}

void cmd_bench(const Context& ctx, int repetitions) {
  const auto ds = require_dataset(ctx);
  require(ctx.vae_model(), "run train-vae first");
  if (ds.items.empty()) throw ValidationError("dataset is empty");
  const auto model = model_file::load_vae(ctx.vae_model()).working_model();
  const auto profile = edgewire::profile_by_name(ctx.cfg.profile);
  auto report = base_report(ctx, "bench");
  eval::Report::Section stages{"stages", {"stage", "repetitions", "min_s", "median_s", "p95_s", "bytes_per_s"}, {}};
  auto record = [&](const std::string& name, const edgewire::BenchStats& s) {
    stages.rows.push_back({name, std::to_string(s.repetitions), eval::format_double(s.min_s),
                           eval::format_double(s.median_s), eval::format_double(s.p95_s),
                           s.bytes_per_s ? eval::format_double(*s.bytes_per_s) : "n/a"});
  };

  const auto synth = ingest::synth_dataset(ctx.cfg.synth, stage_seed(ctx.cfg, 1));
  const auto windows = ingest::segment(synth.recording, ctx.cfg.window);
  if (windows.empty()) throw ValidationError("recording shorter than one window");
  record("stft", edgewire::bench([&] { (void)dsp::to_spectrogram(windows.front(), ctx.cfg.stft); }, repetitions));
  const auto& x = ds.items.front();
  const auto enc = edgewire::bench([&] { (void)vae::encode(model, x); }, repetitions);
  record("encode", enc);
  const auto latent = vae::encode(model, x).mu;
  const auto frame = edgewire::make_frame(ds.patient_id, 0, latent, ctx.cfg.wire_precision);
  const auto frame_bytes = edgewire::frame_size(frame);
  record("frame-encode", edgewire::bench([&] { (void)edgewire::encode_frame(frame); }, repetitions, frame_bytes));
  if (fs::exists(ctx.classifier())) {
    const auto clf = model_file::load_gbdt(ctx.classifier());
    const std::vector<double> row(frame.values.begin(), frame.values.end());
    record("classify", edgewire::bench([&] { (void)gbdt::predict_proba(clf, row); }, repetitions));
  }

  const std::uint64_t n = ds.items.size();
  const std::uint64_t compressed = n * frame_bytes;
  const std::uint64_t raw = n * static_cast<std::uint64_t>(x.size()) * sizeof(float);
  const auto energy = edgewire::estimate_energy(profile, compressed, raw, enc.median_s * static_cast<double>(n));
  report.set("profile", profile.name);
  report.set("energy_mode", profile.measured ? "replication" : "parametric");
  report.set("windows", std::to_string(n));
  report.set("compressed_bytes", std::to_string(compressed));
  report.set("raw_bytes", std::to_string(raw));
  report.set("compute_j", eval::format_double(energy.compute_j));
  report.set("tx_j", eval::format_double(energy.tx_j));
  report.set("total_j", eval::format_double(energy.total_j));
  report.set("raw_tx_j", eval::format_double(energy.raw_tx_j));
  report.set("savings_pct", eval::format_double(energy.savings_pct));
  if (energy.compressed_power_w && energy.raw_power_w) {
    const double wh = edgewire::kReferenceBatteryWh;
    report.set("battery_wh", eval::format_double(wh));
    report.set("battery_raw", edgewire::format_hours(edgewire::battery_life_hours(wh, *energy.raw_power_w)));
    report.set("battery_compressed", edgewire::format_hours(edgewire::battery_life_hours(wh, *energy.compressed_power_w)));
  }
  report.sections.push_back(std::move(stages));
  std::cerr << "bench: total " << energy.total_j << " J vs raw " << energy.raw_tx_j << " J, savings "
            << energy.savings_pct << "%\n";
  publish_report(report, ctx.report("bench"));
}

void cmd_report(const Context* ctx, std::vector<std::string> inputs, bool force, const std::string& out_arg) {
  if (inputs.empty()) {
    if (!ctx) throw UsageError("report needs --config or report files");
    require(ctx->cfg.reports_dir, "run eval or bench first");
    for (const auto& e : fs::directory_iterator(ctx->cfg.reports_dir)) {
      if (e.path().extension() == ".txt" && e.path().filename() != "summary.txt") inputs.push_back(e.path().string());
    }
    std::sort(inputs.begin(), inputs.end());
  }
  if (inputs.empty()) throw MissingArtifact(ctx->cfg.reports_dir, "no reports to aggregate");
  std::vector<std::pair<std::string, eval::Report>> reports;
  for (const auto& p : inputs) {
    require(p, "report file");
    reports.emplace_back(p, eval::load_report(p));
  }
  std::set<std::string> hashes;
  for (const auto& [p, r] : reports) {
    const auto* h = r.get("config_hash");
    hashes.insert(h ? *h : "none");
  }
  if (hashes.size() > 1 && !force) {
    std::string list;
    for (const auto& h : hashes) list += (list.empty() ? "" : ", ") + h;
    throw ValidationError("reports have mismatched config hashes (" + list + "); pass --force to aggregate anyway");
  }
  eval::Report summary;
  summary.set("format", "latentwire-report 1");
  summary.set("command", "report");
  summary.set("config_hash", hashes.size() == 1 ? *hashes.begin() : "mixed");
  eval::Report::Section table{"reports", {"file", "command", "config_hash", "latent_dim", "features", "accuracy_mean",
                                          "accuracy_std", "roc_auc", "pr_auc", "savings_pct"}, {}};
  for (const auto& [p, r] : reports) {
    auto get = [&](const char* k) {
      const auto* v = r.get(k);
      return v ? *v : std::string("-");
    };
    table.rows.push_back({fs::path(p).filename().string(), get("command"), get("config_hash"), get("latent_dim"),
                          get("features"), get("accuracy_mean"), get("accuracy_std"), get("roc_auc"), get("pr_auc"),
                          get("savings_pct")});
  }
  summary.sections.push_back(table);
  const std::string text = eval::write_report(summary);
  std::cerr << text;
  const fs::path out = !out_arg.empty() ? fs::path(out_arg)
                       : ctx            ? ctx->report("summary")
                                        : fs::path("summary.txt");
  publish_report(summary, out);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"latentwire: latent-space compression pipeline for multichannel EEG"};
  app.require_subcommand(1);
  Overrides ov;
  auto add_common = [&](CLI::App* sub, bool config_required) {
    auto* opt = sub->add_option("--config", ov.config_path, "pipeline config (JSON)");
    if (config_required) opt->required();
    sub->add_option("--seed", ov.seed, "override the config seed");
    sub->add_option("--latent-dim", ov.latent_dim, "override vae.latent_dim")
        ->check(CLI::IsMember({16, 32, 64, 128, 256}));
    sub->add_option("--split-by", ov.split_by, "fold construction")->check(CLI::IsMember({"window", "event"}));
    sub->add_option("--profile", ov.profile, "device profile: jetson, raspi or custom:<path>");
  };

  auto* synth = app.add_subcommand("synth", "generate a synthetic recording and annotations");
  add_common(synth, true);

  IngestOptions ingest_opt;
  auto* ingest = app.add_subcommand("ingest", "window, label and transform a recording into spectrograms");
  add_common(ingest, true);
  ingest->add_option("--recording", ingest_opt.recording, "recording (.lwrc or .csv)");
  ingest->add_option("--annotations", ingest_opt.annotations, "annotation CSV");
  ingest->add_option("--pgm-dir", ingest_opt.pgm_dir, "export channel-0 spectrogram images");
  ingest->add_option("--pgm-limit", ingest_opt.pgm_limit, "number of images to export");

  auto* train_vae = app.add_subcommand("train-vae", "train the variational autoencoder");
  add_common(train_vae, true);

  std::string model_arg;
  auto* quantize = app.add_subcommand("quantize", "store the VAE and its encoder at half precision");
  add_common(quantize, true);
  quantize->add_option("--model", model_arg, "float32 VAE model file");

  std::string csv_arg;
  auto* compress = app.add_subcommand("compress", "encode every spectrogram into a latent frame");
  add_common(compress, true);
  compress->add_option("--model", model_arg, "VAE or encoder model file (f32 or f16)");
  compress->add_option("--csv", csv_arg, "also write the latents as a feature CSV");

  auto* train_clf = app.add_subcommand("train-clf", "train the boosted-tree classifier on latents");
  add_common(train_clf, true);

  std::string features = "latent";
  auto* evalc = app.add_subcommand("eval", "k-fold evaluation and metrics report");
  add_common(evalc, true);
  evalc->add_option("--features", features, "latent or raw (flattened spectrograms)")
      ->check(CLI::IsMember({"latent", "raw"}));

  std::optional<std::string> listen;
  std::string classifier_arg;
  bool no_classifier = false;
  double duration_s = 0;
  auto* serve = app.add_subcommand("serve", "receive latent frames and classify them");
  add_common(serve, false);
  serve->add_option("--listen", listen, "host:port (default $LATENTWIRE_LISTEN, then 127.0.0.1:7878)");
  serve->add_option("--classifier", classifier_arg, "classifier model file");
  serve->add_flag("--no-classifier", no_classifier, "acknowledge frames without classifying");
  serve->add_option("--duration", duration_s, "stop after this many seconds (0: until signalled)");

  std::string latents_arg, export_path;
  std::optional<std::string> address;
  auto* send = app.add_subcommand("send", "stream a latent file to a server");
  add_common(send, false);
  send->add_option("--latents", latents_arg, "latent file");
  send->add_option("--address", address, "host:port (default $LATENTWIRE_LISTEN, then 127.0.0.1:7878)");
  send->add_option("--export", export_path, "write the frame stream to a file instead of the network");

  int repetitions = 20;
  auto* bench = app.add_subcommand("bench", "time pipeline stages and model energy");
  add_common(bench, true);
  bench->add_option("--repetitions", repetitions, "timed runs per stage")->check(CLI::Range(3, 1000000));

  std::vector<std::string> report_inputs;
  bool force = false;
  std::string report_out;
  auto* report = app.add_subcommand("report", "aggregate reports");
  add_common(report, false);
  report->add_option("reports", report_inputs, "report files (default: every report in the reports directory)");
  report->add_flag("--force", force, "aggregate despite mismatched config hashes");
  report->add_option("--out", report_out, "summary path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "error: usage: " << e.what() << '\n';
    return 2;
  }

  try {
    auto* sub = app.get_subcommands().front();
    const std::string name = sub->get_name();
    std::optional<Context> ctx;
    if (!ov.config_path.empty()) ctx = make_context(ov);
    const Context* cp = ctx ? &*ctx : nullptr;

    if (name == "synth") cmd_synth(*ctx);
    else if (name == "ingest") cmd_ingest(*ctx, ingest_opt);
    else if (name == "train-vae") cmd_train_vae(*ctx);
    else if (name == "quantize") cmd_quantize(*ctx, model_arg);
    else if (name == "compress") cmd_compress(*ctx, model_arg, csv_arg);
    else if (name == "train-clf") cmd_train_clf(*ctx);
    else if (name == "eval") cmd_eval(*ctx, features);
    else if (name == "serve") cmd_serve(cp, listen, classifier_arg, no_classifier, duration_s);
    else if (name == "send") cmd_send(cp, latents_arg, address, export_path);
    else if (name == "bench") cmd_bench(*ctx, repetitions);
    else if (name == "report") cmd_report(cp, report_inputs, force, report_out);
    return 0;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.kind() << ": " << e.what() << '\n';
    return 2;
  } catch (const MissingArtifact& e) {
    std::cerr << "error: " << e.kind() << ": " << e.what() << '\n';
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.kind() << ": " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << e.what() << '\n';
    return 1;
  }
}
