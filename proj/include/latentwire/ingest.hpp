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


#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace latentwire::ingest {

// Channel-major sample storage: row c holds every sample of channel c.
using SampleMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class Label : std::uint8_t { NonSeizure = 0, Seizure = 1 };

// A multichannel recording. Immutable once constructed; the constructor
// enforces rate > 0 and at least one channel.
class Recording {
 public:
  Recording(std::string patient_id, int sample_rate_hz, SampleMatrix samples);

  const std::string& patient_id() const { return patient_id_; }
  int sample_rate_hz() const { return sample_rate_hz_; }
  int channel_count() const { return static_cast<int>(samples_.rows()); }
  Eigen::Index sample_count() const { return samples_.cols(); }
  double duration_s() const { return static_cast<double>(sample_count()) / sample_rate_hz_; }
  const SampleMatrix& samples() const { return samples_; }

 private:
  std::string patient_id_;
  int sample_rate_hz_;
  SampleMatrix samples_;
};

struct SeizureEvent {
  double onset_s = 0;
  double offset_s = 0;

  double duration_s() const { return offset_s - onset_s; }
  friend bool operator==(const SeizureEvent&, const SeizureEvent&) = default;
};

// Minimum duration for an annotated event to count as a seizure.
inline constexpr double kMinSeizureSeconds = 10.0;

struct WindowSpec {
  double window_s = 10.0;
  double stride_s = 1.0;
};

struct LabeledWindow {
  double start_s = 0;
  double window_s = 0;
  SampleMatrix samples;
  Label label = Label::NonSeizure;
};

// Seconds since midnight for an "HH:MM:SS" string. Throws ParseError.
int parse_time_of_day(std::string_view text);
std::string format_time_of_day(int seconds_since_midnight);

struct AnnotationParse {
  std::string patient_id;
  std::vector<SeizureEvent> events;
  // One human-readable line per rejected row ("row N: ...").
  std::vector<std::string> rejected;
};

// Parses `patient_id, HH:MM:SS, HH:MM:SS` rows (header row optional, blank
// lines and '#' comments skipped). Onsets earlier than recording_start are
// taken to be on the following day, and an offset earlier than its onset is
// moved to the next day. Events shorter than kMinSeizureSeconds land in
// `rejected`; malformed rows throw ParseError naming the row.
AnnotationParse parse_annotations(std::string_view text, int recording_start_s);

// Inverse of parse_annotations for valid event lists.
std::string format_annotations(std::string_view patient_id, const std::vector<SeizureEvent>& events,
                               int recording_start_s);

// Sliding windows in start order; labels are left NonSeizure. Returns an
// empty sequence (and logs a warning to stderr) when the recording is shorter
// than one window. Window and stride must map to whole sample counts.
std::vector<LabeledWindow> segment(const Recording& recording, const WindowSpec& spec);

// Number of windows segment() produces, without materializing them.
std::size_t window_count(Eigen::Index sample_count, int sample_rate_hz, const WindowSpec& spec);

// Seizure iff [start, start + length] lies inside some event (closed intervals).
Label label(double start_s, double window_s, const std::vector<SeizureEvent>& events);
inline Label label(const LabeledWindow& w, const std::vector<SeizureEvent>& events) {
  return label(w.start_s, w.window_s, events);
}

// Index of the event each window belongs to for event-level fold splits:
// the event whose interval is nearest the window centre. All zeros when the
// event list is empty.
std::vector<int> assign_events(const std::vector<double>& window_starts, double window_s,
                               const std::vector<SeizureEvent>& events);

// Binary recording container ("LWRC", version 0x01, little-endian).
void save_recording(const Recording& recording, const std::filesystem::path& path);
Recording load_recording(const std::filesystem::path& path);

// CSV import: one row per sample, one column per channel, optional header.
Recording load_recording_csv(const std::filesystem::path& path, std::string patient_id,
                             int sample_rate_hz);

}  // namespace latentwire::ingest
