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


#include "latentwire/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>

#include "latentwire/binary_io.hpp"
#include "latentwire/error.hpp"

namespace latentwire::ingest {

namespace {

constexpr int kSecondsPerDay = 24 * 3600;
constexpr std::uint8_t kRecordingVersion = 0x01;
constexpr char kRecordingMagic[4] = {'L', 'W', 'R', 'C'};

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

Eigen::Index whole_samples(double seconds, int rate, const char* what) {
  const double exact = seconds * rate;
  const auto n = static_cast<Eigen::Index>(std::llround(exact));
  if (n <= 0 || std::abs(exact - static_cast<double>(n)) > 1e-9) {
    throw ValidationError(std::string(what) + " of " + std::to_string(seconds) +
                          " s is not a positive whole number of samples at " +
                          std::to_string(rate) + " Hz");
  }
  return n;
}

}  // namespace

Recording::Recording(std::string patient_id, int sample_rate_hz, SampleMatrix samples)
    : patient_id_(std::move(patient_id)), sample_rate_hz_(sample_rate_hz), samples_(std::move(samples)) {
  if (sample_rate_hz_ <= 0) throw ValidationError("sample rate must be positive");
  if (samples_.rows() < 1) throw ValidationError("recording needs at least one channel");
}

int parse_time_of_day(std::string_view text) {
  text = trim(text);
  int parts[3] = {0, 0, 0};
  if (text.size() != 8 || text[2] != ':' || text[5] != ':') {
    throw ParseError("malformed time '" + std::string(text) + "', expected HH:MM:SS");
  }
  for (int i = 0; i < 3; ++i) {
    const char* first = text.data() + 3 * i;
    auto [ptr, ec] = std::from_chars(first, first + 2, parts[i]);
    if (ec != std::errc() || ptr != first + 2) {
      throw ParseError("malformed time '" + std::string(text) + "', expected HH:MM:SS");
    }
  }
  if (parts[0] > 23 || parts[1] > 59 || parts[2] > 59) {
    throw ParseError("time out of range '" + std::string(text) + "'");
  }
  return parts[0] * 3600 + parts[1] * 60 + parts[2];
}

std::string format_time_of_day(int s) {
  s = ((s % kSecondsPerDay) + kSecondsPerDay) % kSecondsPerDay;
  char buf[16];
  std::snprintf(buf, sizeof buf, "%02d:%02d:%02d", s / 3600, (s / 60) % 60, s % 60);
  return buf;
}

AnnotationParse parse_annotations(std::string_view text, int recording_start_s) {
  AnnotationParse out;
  std::size_t row = 0;
  std::size_t pos = 0;
  bool first_content = true;
  while (pos <= text.size()) {
    const auto eol = text.find('\n', pos);
    std::string_view line = text.substr(pos, eol == std::string_view::npos ? std::string_view::npos : eol - pos);
    pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
    ++row;
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;

    const auto fields = split_csv(line);
    if (fields.size() != 3) {
      throw ParseError("row " + std::to_string(row) + ": expected 3 fields, got " +
                       std::to_string(fields.size()));
    }
    if (first_content) {
      first_content = false;
      // A header has no digits in its time columns.
      const bool header = std::none_of(fields[1].begin(), fields[1].end(),
                                       [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
      if (header) continue;
    }

    int start_tod = 0;
    int end_tod = 0;
    try {
      start_tod = parse_time_of_day(fields[1]);
      end_tod = parse_time_of_day(fields[2]);
    } catch (const ParseError& e) {
      throw ParseError("row " + std::to_string(row) + ": " + e.what());
    }

    if (out.patient_id.empty()) out.patient_id = std::string(fields[0]);

    int onset = start_tod - recording_start_s;
    if (onset < 0) onset += kSecondsPerDay;
    int duration = end_tod - start_tod;
    if (duration < 0) duration += kSecondsPerDay;
    if (duration == 0) {
      throw ValidationError("row " + std::to_string(row) + ": offset equals onset (" +
                            std::string(fields[1]) + ")");
    }
    if (duration < kMinSeizureSeconds) {
      out.rejected.push_back("row " + std::to_string(row) + ": duration " + std::to_string(duration) +
                             " s is shorter than the 10 s seizure minimum");
      continue;
    }
    out.events.push_back({static_cast<double>(onset), static_cast<double>(onset + duration)});
  }
  std::sort(out.events.begin(), out.events.end(),
            [](const SeizureEvent& a, const SeizureEvent& b) { return a.onset_s < b.onset_s; });
  return out;
}

std::string format_annotations(std::string_view patient_id, const std::vector<SeizureEvent>& events,
                               int recording_start_s) {
  std::ostringstream os;
  os << "patient_id,onset,offset\n";
  for (const auto& e : events) {
    const int on = recording_start_s + static_cast<int>(std::lround(e.onset_s));
    const int off = recording_start_s + static_cast<int>(std::lround(e.offset_s));
    os << patient_id << ',' << format_time_of_day(on) << ',' << format_time_of_day(off) << '\n';
  }
  return os.str();
}

std::size_t window_count(Eigen::Index sample_count, int sample_rate_hz, const WindowSpec& spec) {
  if (!(spec.stride_s > 0) || spec.stride_s > spec.window_s) {
    throw ValidationError("window spec needs 0 < stride <= window");
  }
  const auto win = whole_samples(spec.window_s, sample_rate_hz, "window");
  const auto hop = whole_samples(spec.stride_s, sample_rate_hz, "stride");
  if (sample_count < win) return 0;
  return static_cast<std::size_t>((sample_count - win) / hop + 1);
}

std::vector<LabeledWindow> segment(const Recording& recording, const WindowSpec& spec) {
  const int rate = recording.sample_rate_hz();
  const std::size_t count = window_count(recording.sample_count(), rate, spec);
  if (count == 0) {
    std::cerr << "warning: recording " << recording.patient_id() << " (" << recording.duration_s()
              << " s) is shorter than one " << spec.window_s << " s window\n";
    return {};
  }
  const auto win = whole_samples(spec.window_s, rate, "window");
  const auto hop = whole_samples(spec.stride_s, rate, "stride");
  std::vector<LabeledWindow> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const Eigen::Index first = static_cast<Eigen::Index>(i) * hop;
    LabeledWindow w;
    w.start_s = static_cast<double>(first) / rate;
    w.window_s = spec.window_s;
    w.samples = recording.samples().middleCols(first, win);
    out.push_back(std::move(w));
  }
  return out;
}

Label label(double start_s, double window_s, const std::vector<SeizureEvent>& events) {
  const double end_s = start_s + window_s;
  for (const auto& e : events) {
    if (start_s >= e.onset_s && end_s <= e.offset_s) return Label::Seizure;
  }
  return Label::NonSeizure;
}

std::vector<int> assign_events(const std::vector<double>& window_starts, double window_s,
                               const std::vector<SeizureEvent>& events) {
  std::vector<int> out(window_starts.size(), 0);
  if (events.empty()) return out;
  for (std::size_t i = 0; i < window_starts.size(); ++i) {
    const double centre = window_starts[i] + window_s / 2;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t e = 0; e < events.size(); ++e) {
      const double d = centre < events[e].onset_s    ? events[e].onset_s - centre
                       : centre > events[e].offset_s ? centre - events[e].offset_s
                                                     : 0.0;
      if (d < best) {
        best = d;
        out[i] = static_cast<int>(e);
      }
    }
  }
  return out;
}

void save_recording(const Recording& recording, const std::filesystem::path& path) {
  ByteWriter w;
  w.bytes({reinterpret_cast<const std::uint8_t*>(kRecordingMagic), 4});
  w.u8(kRecordingVersion);
  w.str16(recording.patient_id());
  w.u32(static_cast<std::uint32_t>(recording.sample_rate_hz()));
  w.u32(static_cast<std::uint32_t>(recording.channel_count()));
  w.u64(static_cast<std::uint64_t>(recording.sample_count()));
  const auto& s = recording.samples();
  for (Eigen::Index c = 0; c < s.rows(); ++c)
    for (Eigen::Index i = 0; i < s.cols(); ++i) w.f32(s(c, i));
  write_file(path, w.data());
}

Recording load_recording(const std::filesystem::path& path) {
  const Bytes data = read_file(path);
  ByteReader r(data);
  const auto magic = r.bytes(4);
  if (!std::equal(magic.begin(), magic.end(), kRecordingMagic)) {
    throw ParseError(path.string() + ": not a recording file (bad magic)");
  }
  const auto version = r.u8();
  if (version != kRecordingVersion) {
    throw VersionError(path.string() + ": recording version " + std::to_string(version) +
                       " unsupported (supported: 1)");
  }
  std::string patient = r.str16();
  const int rate = static_cast<int>(r.u32());
  const auto channels = static_cast<Eigen::Index>(r.u32());
  const auto length = static_cast<Eigen::Index>(r.u64());
  if (r.remaining() != static_cast<std::size_t>(channels * length * 4)) {
    throw ParseError(path.string() + ": payload size does not match header");
  }
  SampleMatrix samples(channels, length);
  for (Eigen::Index c = 0; c < channels; ++c)
    for (Eigen::Index i = 0; i < length; ++i) samples(c, i) = r.f32();
  return Recording(std::move(patient), rate, std::move(samples));
}

Recording load_recording_csv(const std::filesystem::path& path, std::string patient_id,
                             int sample_rate_hz) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::vector<float>> rows;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    const auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto fields = split_csv(t);
    std::vector<float> values;
    values.reserve(fields.size());
    bool numeric = true;
    for (auto f : fields) {
      float v = 0;
      auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
      if (ec != std::errc() || ptr != f.data() + f.size()) {
        numeric = false;
        break;
      }
      values.push_back(v);
    }
    if (!numeric) {
      if (rows.empty() && row == 1) continue;  // header
      throw ParseError(path.string() + ": row " + std::to_string(row) + " is not numeric");
    }
    if (!rows.empty() && values.size() != rows.front().size()) {
      throw ParseError(path.string() + ": row " + std::to_string(row) + " has " +
                       std::to_string(values.size()) + " columns, expected " +
                       std::to_string(rows.front().size()));
    }
    rows.push_back(std::move(values));
  }
  if (rows.empty()) throw ParseError(path.string() + ": no samples");
  SampleMatrix samples(static_cast<Eigen::Index>(rows.front().size()), static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t c = 0; c < rows[i].size(); ++c)
      samples(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(i)) = rows[i][c];
  return Recording(std::move(patient_id), sample_rate_hz, std::move(samples));
}

}  // namespace latentwire::ingest
