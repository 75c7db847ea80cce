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


#include "latentwire/dataset_file.hpp"

#include <fstream>
#include <json.hpp>
#include <sstream>

#include "latentwire/binary_io.hpp"
#include "latentwire/config.hpp"
#include "latentwire/error.hpp"
#include "latentwire/eval.hpp"

namespace latentwire {

namespace {

constexpr std::uint8_t kMagic[4] = {'L', 'W', 'S', 'D'};
constexpr std::uint8_t kVersion = 0x01;

}  // namespace

std::vector<int> SpectrogramDataset::labels() const {
  std::vector<int> out;
  out.reserve(items.size());
  for (const auto& s : items) out.push_back(s.label == ingest::Label::Seizure ? 1 : 0);
  return out;
}

SpectrogramDataset build_dataset(const ingest::Recording& recording, const std::vector<ingest::SeizureEvent>& events,
                                 const ingest::WindowSpec& window, const dsp::StftConfig& stft, int f_model,
                                 int t_model) {
  auto windows = ingest::segment(recording, window);
  SpectrogramDataset ds;
  ds.patient_id = recording.patient_id();
  for (const auto& w : windows) ds.window_starts.push_back(w.start_s);
  ds.groups = ingest::assign_events(ds.window_starts, window.window_s, events);
  for (auto& w : windows) {
    w.label = ingest::label(w, events);
    ds.items.push_back(dsp::resize_to_model(dsp::to_spectrogram(w, stft), f_model, t_model));
  }
  return ds;
}

void save_dataset(const SpectrogramDataset& ds, const std::filesystem::path& path) {
  if (ds.window_starts.size() != ds.items.size() || ds.groups.size() != ds.items.size()) {
    throw ShapeError("dataset: starts, groups and items differ in length");
  }
  ByteWriter w;
  w.bytes(kMagic);
  w.u8(kVersion);
  w.u64(ds.config_hash);
  w.str16(ds.patient_id);
  const auto& first = ds.items.empty() ? dsp::Spectrogram{} : ds.items.front();
  w.u32(static_cast<std::uint32_t>(first.channels));
  w.u32(static_cast<std::uint32_t>(first.freq_bins));
  w.u32(static_cast<std::uint32_t>(first.time_frames));
  w.u32(static_cast<std::uint32_t>(ds.items.size()));
  for (std::size_t i = 0; i < ds.items.size(); ++i) {
    const auto& s = ds.items[i];
    if (s.channels != first.channels || s.freq_bins != first.freq_bins || s.time_frames != first.time_frames) {
      throw ShapeError("dataset: item " + std::to_string(i) + " differs in shape");
    }
    w.f64(ds.window_starts[i]);
    w.u8(s.label == ingest::Label::Seizure ? 1 : 0);
    w.i32(ds.groups[i]);
    for (Eigen::Index k = 0; k < s.values.size(); ++k) w.f32(s.values[k]);
  }
  w.u32(crc32(w.data()));
  write_file(path, w.data());
}

SpectrogramDataset load_dataset(const std::filesystem::path& path) {
  const Bytes bytes = read_file(path);
  if (bytes.size() < 9 || !std::equal(kMagic, kMagic + 4, bytes.begin())) {
    throw ParseError(path.string() + " is not a spectrogram dataset");
  }
  if (bytes[4] != kVersion) {
    throw VersionError("dataset version " + std::to_string(bytes[4]) + " unsupported (supported versions: 1)");
  }
  const std::span<const std::uint8_t> all(bytes);
  ByteReader tail(all.last(4));
  if (tail.u32() != crc32(all.first(all.size() - 4))) throw IntegrityError(path.string() + ": CRC mismatch");
  ByteReader r(all.subspan(5, all.size() - 9));
  SpectrogramDataset ds;
  ds.config_hash = r.u64();
  ds.patient_id = r.str16();
  const int channels = static_cast<int>(r.u32());
  const int bins = static_cast<int>(r.u32());
  const int frames = static_cast<int>(r.u32());
  const auto count = r.u32();
  const auto n = static_cast<Eigen::Index>(channels) * bins * frames;
  for (std::uint32_t i = 0; i < count; ++i) {
    dsp::Spectrogram s;
    s.channels = channels;
    s.freq_bins = bins;
    s.time_frames = frames;
    ds.window_starts.push_back(r.f64());
    s.label = r.u8() ? ingest::Label::Seizure : ingest::Label::NonSeizure;
    ds.groups.push_back(r.i32());
    s.values.resize(n);
    for (Eigen::Index k = 0; k < n; ++k) s.values[k] = r.f32();
    ds.items.push_back(std::move(s));
  }
  if (r.remaining() != 0) throw ParseError(path.string() + ": trailing bytes");
  return ds;
}

std::filesystem::path meta_path(const std::filesystem::path& latent_file) {
  return latent_file.string() + ".meta.json";
}

void save_latent_meta(const LatentMeta& meta, const std::filesystem::path& latent_file) {
  nlohmann::json j = {{"config_hash", hash_hex(meta.config_hash)},
                      {"model_hash", hash_hex(meta.model_hash)},
                      {"patient_id", meta.patient_id},
                      {"latent_dim", meta.latent_dim},
                      {"precision", meta.precision},
                      {"labels", meta.labels},
                      {"groups", meta.groups}};
  const std::string text = j.dump(1) + "\n";
  write_file(meta_path(latent_file), std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

LatentMeta load_latent_meta(const std::filesystem::path& latent_file) {
  const auto path = meta_path(latent_file);
  const Bytes bytes = read_file(path);
  LatentMeta m;
  try {
    const auto j = nlohmann::json::parse(bytes.begin(), bytes.end());
    m.config_hash = std::stoull(j.at("config_hash").get<std::string>(), nullptr, 16);
    m.model_hash = std::stoull(j.at("model_hash").get<std::string>(), nullptr, 16);
    m.patient_id = j.at("patient_id").get<std::string>();
    m.latent_dim = j.at("latent_dim").get<int>();
    m.precision = j.at("precision").get<std::string>();
    m.labels = j.at("labels").get<std::vector<int>>();
    m.groups = j.at("groups").get<std::vector<int>>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  } catch (const std::invalid_argument&) {
    throw ParseError(path.string() + ": bad hash");
  }
  if (m.labels.size() != m.groups.size()) throw ParseError(path.string() + ": labels and groups differ in length");
  return m;
}

gbdt::FeatureMatrix frames_to_features(const std::vector<edgewire::LatentFrame>& frames) {
  const auto dim = frames.empty() ? 0 : frames.front().values.size();
  gbdt::FeatureMatrix x(static_cast<Eigen::Index>(frames.size()), static_cast<Eigen::Index>(dim));
  for (std::size_t i = 0; i < frames.size(); ++i) {
    if (frames[i].values.size() != dim) throw ShapeError("frame " + std::to_string(i) + " has a different latent_dim");
    for (std::size_t k = 0; k < dim; ++k) {
      x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = frames[i].values[k];
    }
  }
  return x;
}

gbdt::FeatureMatrix flatten(const std::vector<dsp::Spectrogram>& items) {
  const auto n = items.empty() ? 0 : items.front().size();
  gbdt::FeatureMatrix x(static_cast<Eigen::Index>(items.size()), n);
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (items[i].size() != n) throw ShapeError("item " + std::to_string(i) + " differs in size");
    x.row(static_cast<Eigen::Index>(i)) = items[i].values.cast<double>().matrix().transpose();
  }
  return x;
}

void write_feature_csv(const gbdt::FeatureMatrix& x, const std::vector<int>& labels,
                       const std::filesystem::path& path) {
  if (x.rows() != static_cast<Eigen::Index>(labels.size())) throw ShapeError("features and labels differ in length");
  std::ostringstream out;
  for (Eigen::Index k = 0; k < x.cols(); ++k) out << 'f' << k << ',';
  out << "label\n";
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index k = 0; k < x.cols(); ++k) out << eval::format_double(x(i, k)) << ',';
    out << labels[static_cast<std::size_t>(i)] << '\n';
  }
  const std::string text = out.str();
  write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

}  // namespace latentwire
