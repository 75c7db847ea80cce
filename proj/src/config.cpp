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


#include "latentwire/config.hpp"

#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>

#include "latentwire/binary_io.hpp"
#include "latentwire/error.hpp"

namespace latentwire {

using nlohmann::json;

namespace {

// Reads known keys of one JSON object and rejects the rest.
class Fields {
 public:
  Fields(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw ParseError(where_ + ": expected an object");
  }
  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception&) {
      throw ParseError(where_ + "." + key + ": wrong type");
    }
  }
  const json* sub(const char* key) {
    seen_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }
  void finish() const {
    for (const auto& [k, v] : j_.items()) {
      if (!seen_.count(k)) throw ParseError(where_ + ": unknown key '" + k + "'");
    }
  }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

dsp::WindowFn parse_window_fn(const std::string& s) {
  if (s == "hann") return dsp::WindowFn::Hann;
  if (s == "rect") return dsp::WindowFn::Rect;
  throw ParseError("stft.window: expected hann or rect, got '" + s + "'");
}

quant::Precision parse_wire_precision(const std::string& s) {
  if (s == "f16") return quant::Precision::F16;
  if (s == "f32") return quant::Precision::F32;
  throw ParseError("wire.precision: expected f16 or f32, got '" + s + "'");
}

json science_json(const PipelineConfig& c) {
  json j;
  j["synth"] = {{"patient_id", c.synth.patient_id},
                {"duration_s", c.synth.duration_s},
                {"channel_count", c.synth.channel_count},
                {"sample_rate_hz", c.synth.sample_rate_hz},
                {"seizure_count", c.synth.seizure_count},
                {"seizure_duration_s", c.synth.seizure_duration_s},
                {"min_gap_s", c.synth.min_gap_s},
                {"spike_wave_hz", c.synth.spike_wave_hz},
                {"seizure_amplitude", c.synth.seizure_amplitude},
                {"recording_start", c.recording_start}};
  j["window"] = {{"window_s", c.window.window_s}, {"stride_s", c.window.stride_s}};
  j["stft"] = {{"fft_size", c.stft.fft_size},
               {"hop", c.stft.hop},
               {"window", c.stft.window_fn == dsp::WindowFn::Hann ? "hann" : "rect"}};
  j["vae"] = {{"latent_dim", c.vae.latent_dim},       {"in_channels", c.vae.in_channels},
              {"f_model", c.vae.f_model},             {"t_model", c.vae.t_model},
              {"base_channels", c.vae.base_channels}, {"blocks_per_stage", c.vae.blocks_per_stage},
              {"stages", c.vae.stages}};
  j["train"] = {{"lr", c.train.lr},
                {"batch_size", c.train.batch_size},
                {"kl_weight", c.train.kl_weight},
                {"patience", c.train.patience},
                {"max_epochs", c.train.max_epochs},
                {"validation_fraction", c.train.validation_fraction}};
  json g = {{"n_estimators", c.gbdt.n_estimators},
            {"max_depth", c.gbdt.max_depth},
            {"eta", c.gbdt.eta},
            {"reg_lambda", c.gbdt.reg_lambda},
            {"reg_alpha", c.gbdt.reg_alpha},
            {"early_stopping_rounds", c.gbdt.early_stopping_rounds},
            {"min_child_weight", c.gbdt.min_child_weight},
            {"min_split_gain", c.gbdt.min_split_gain}};
  g["scale_pos_weight"] = c.gbdt.scale_pos_weight ? json(*c.gbdt.scale_pos_weight) : json(nullptr);
  j["gbdt"] = g;
  j["eval"] = {{"folds", c.folds},
               {"split_by", to_string(c.split_by)},
               {"threshold", c.threshold},
               {"early_stopping_fraction", c.early_stopping_fraction}};
  j["wire"] = {{"precision", quant::to_string(c.wire_precision)}};
  j["seed"] = c.seed;
  return j;
}

}  // namespace

const char* to_string(SplitBy s) { return s == SplitBy::Window ? "window" : "event"; }

SplitBy parse_split_by(const std::string& text) {
  if (text == "window") return SplitBy::Window;
  if (text == "event") return SplitBy::Event;
  throw ValidationError("split-by must be window or event, got '" + text + "'");
}

void PipelineConfig::validate() const {
  vae.validate();
  train.validate();
  gbdt.validate();
  dsp::validate(stft);
  if (window.window_s <= 0 || window.stride_s <= 0) throw ValidationError("window: lengths must be positive");
  if (vae.in_channels != synth.channel_count) {
    throw ValidationError("vae.in_channels (" + std::to_string(vae.in_channels) + ") must equal synth.channel_count (" +
                          std::to_string(synth.channel_count) + ")");
  }
  if (folds < 2) throw ValidationError("eval.folds must be at least 2");
  if (!(threshold >= 0 && threshold <= 1)) throw ValidationError("eval.threshold must be in [0, 1]");
  if (!(early_stopping_fraction > 0 && early_stopping_fraction < 1)) {
    throw ValidationError("eval.early_stopping_fraction must be in (0, 1)");
  }
  ingest::parse_time_of_day(recording_start);
}

PipelineConfig config_from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("config: ") + e.what());
  }
  PipelineConfig c;
  Fields top(j, "config");
  if (const auto* p = top.sub("paths")) {
    Fields f(*p, "paths");
    std::string data = c.data_dir, models = c.models_dir, reports = c.reports_dir;
    f.get("data", data);
    f.get("models", models);
    f.get("reports", reports);
    f.finish();
    c.data_dir = data;
    c.models_dir = models;
    c.reports_dir = reports;
  }
  if (const auto* p = top.sub("synth")) {
    Fields f(*p, "synth");
    f.get("patient_id", c.synth.patient_id);
    f.get("duration_s", c.synth.duration_s);
    f.get("channel_count", c.synth.channel_count);
    f.get("sample_rate_hz", c.synth.sample_rate_hz);
    f.get("seizure_count", c.synth.seizure_count);
    f.get("seizure_duration_s", c.synth.seizure_duration_s);
    f.get("min_gap_s", c.synth.min_gap_s);
    f.get("spike_wave_hz", c.synth.spike_wave_hz);
    f.get("seizure_amplitude", c.synth.seizure_amplitude);
    f.get("recording_start", c.recording_start);
    f.finish();
  }
  if (const auto* p = top.sub("window")) {
    Fields f(*p, "window");
    f.get("window_s", c.window.window_s);
    f.get("stride_s", c.window.stride_s);
    f.finish();
  }
  if (const auto* p = top.sub("stft")) {
    Fields f(*p, "stft");
    std::string wf = "hann";
    f.get("fft_size", c.stft.fft_size);
    f.get("hop", c.stft.hop);
    f.get("window", wf);
    f.finish();
    c.stft.window_fn = parse_window_fn(wf);
  }
  if (const auto* p = top.sub("vae")) {
    Fields f(*p, "vae");
    f.get("latent_dim", c.vae.latent_dim);
    f.get("in_channels", c.vae.in_channels);
    f.get("f_model", c.vae.f_model);
    f.get("t_model", c.vae.t_model);
    f.get("base_channels", c.vae.base_channels);
    f.get("blocks_per_stage", c.vae.blocks_per_stage);
    f.get("stages", c.vae.stages);
    f.finish();
  }
  if (const auto* p = top.sub("train")) {
    Fields f(*p, "train");
    f.get("lr", c.train.lr);
    f.get("batch_size", c.train.batch_size);
    f.get("kl_weight", c.train.kl_weight);
    f.get("patience", c.train.patience);
    f.get("max_epochs", c.train.max_epochs);
    f.get("validation_fraction", c.train.validation_fraction);
    f.finish();
  }
  if (const auto* p = top.sub("gbdt")) {
    Fields f(*p, "gbdt");
    f.get("n_estimators", c.gbdt.n_estimators);
    f.get("max_depth", c.gbdt.max_depth);
    f.get("eta", c.gbdt.eta);
    f.get("reg_lambda", c.gbdt.reg_lambda);
    f.get("reg_alpha", c.gbdt.reg_alpha);
    f.get("early_stopping_rounds", c.gbdt.early_stopping_rounds);
    f.get("min_child_weight", c.gbdt.min_child_weight);
    f.get("min_split_gain", c.gbdt.min_split_gain);
    if (const auto* s = f.sub("scale_pos_weight"); s && !s->is_null()) {
      if (!s->is_number()) throw ParseError("gbdt.scale_pos_weight: wrong type");
      c.gbdt.scale_pos_weight = s->get<double>();
    }
    f.finish();
  }
  if (const auto* p = top.sub("eval")) {
    Fields f(*p, "eval");
    std::string split = to_string(c.split_by);
    f.get("folds", c.folds);
    f.get("split_by", split);
    f.get("threshold", c.threshold);
    f.get("early_stopping_fraction", c.early_stopping_fraction);
    f.finish();
    c.split_by = parse_split_by(split);
  }
  if (const auto* p = top.sub("wire")) {
    Fields f(*p, "wire");
    std::string precision = quant::to_string(c.wire_precision);
    f.get("precision", precision);
    f.get("listen", c.listen);
    f.finish();
    c.wire_precision = parse_wire_precision(precision);
  }
  top.get("profile", c.profile);
  top.get("seed", c.seed);
  top.finish();
  c.train.seed = c.seed;
  c.validate();
  return c;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return config_from_json(ss.str());
}

std::string config_to_json(const PipelineConfig& cfg, int indent) {
  json j = science_json(cfg);
  j["paths"] = {{"data", cfg.data_dir.string()}, {"models", cfg.models_dir.string()}, {"reports", cfg.reports_dir.string()}};
  j["wire"]["listen"] = cfg.listen;
  j["profile"] = cfg.profile;
  return j.dump(indent);
}

std::uint64_t config_hash(const PipelineConfig& cfg) { return fnv1a64(science_json(cfg).dump()); }

std::string hash_hex(std::uint64_t hash) {
  char buf[19];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash));
  return buf;
}

}  // namespace latentwire
