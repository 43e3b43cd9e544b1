#pragma once

#include <algorithm>
#include <cstddef>
#include <string>
#include <unordered_set>
#include <vector>

#include "dartk/error.hpp"

namespace dartk {

enum class MarkerKind { VolumeTrigger, CardiacPeak, Other };

struct Marker {
  MarkerKind kind = MarkerKind::Other;
  std::size_t position = 0;
  std::string description;

  bool operator==(const Marker&) const = default;
};

inline const char* marker_kind_name(MarkerKind k) {
  switch (k) {
    case MarkerKind::VolumeTrigger: return "volume_trigger";
    case MarkerKind::CardiacPeak: return "cardiac_peak";
    default: return "other";
  }
}

inline MarkerKind marker_kind_from_name(const std::string& s) {
  if (s == "volume_trigger") return MarkerKind::VolumeTrigger;
  if (s == "cardiac_peak") return MarkerKind::CardiacPeak;
  return MarkerKind::Other;
}

// Continuous multichannel EEG in microvolts, channel-major storage:
// data[c * n_samples + t].
struct Recording {
  std::vector<double> data;
  std::size_t n_channels = 0;
  std::size_t n_samples = 0;
  double sampling_rate = 0.0;
  std::vector<std::string> channel_labels;
  std::vector<Marker> markers;

  double* channel(std::size_t c) { return data.data() + c * n_samples; }
  const double* channel(std::size_t c) const {
    return data.data() + c * n_samples;
  }
  double& at(std::size_t c, std::size_t t) { return data[c * n_samples + t]; }
  double at(std::size_t c, std::size_t t) const {
    return data[c * n_samples + t];
  }
  double duration_s() const {
    return sampling_rate > 0 ? static_cast<double>(n_samples) / sampling_rate
                             : 0.0;
  }

  bool operator==(const Recording&) const = default;
};

inline void validate(const Recording& rec) {
  require(rec.data.size() == rec.n_channels * rec.n_samples,
          Errc::ShapeMismatch,
          "recording data length does not equal n_channels * n_samples");
  require(rec.sampling_rate > 0, Errc::InvalidConfig,
          "recording sampling rate must be positive");
  require(rec.channel_labels.size() == rec.n_channels, Errc::ShapeMismatch,
          "recording needs one label per channel");
  std::unordered_set<std::string> seen;
  for (const auto& l : rec.channel_labels)
    require(seen.insert(l).second, Errc::CorruptFile,
            "duplicate channel label '" + l + "'");
  for (const auto& m : rec.markers)
    require(m.position < rec.n_samples, Errc::CorruptFile,
            "marker position " + std::to_string(m.position) +
                " outside recording of " + std::to_string(rec.n_samples) +
                " samples");
}

inline void sort_markers(Recording& rec) {
  std::stable_sort(rec.markers.begin(), rec.markers.end(),
                   [](const Marker& a, const Marker& b) {
                     return a.position < b.position;
                   });
}

inline std::vector<std::size_t> marker_positions(const Recording& rec,
                                                 MarkerKind kind) {
  std::vector<std::size_t> out;
  for (const auto& m : rec.markers)
    if (m.kind == kind) out.push_back(m.position);
  return out;
}

// Restrict to `wanted` channels, in the order given by `wanted`.
inline Recording select_analysis_channels(
    const Recording& rec, const std::vector<std::string>& wanted) {
  Recording out;
  out.n_channels = wanted.size();
  out.n_samples = rec.n_samples;
  out.sampling_rate = rec.sampling_rate;
  out.channel_labels = wanted;
  out.markers = rec.markers;
  out.data.resize(out.n_channels * out.n_samples);
  for (std::size_t i = 0; i < wanted.size(); ++i) {
    auto it = std::find(rec.channel_labels.begin(), rec.channel_labels.end(),
                        wanted[i]);
    require(it != rec.channel_labels.end(), Errc::MissingChannel,
            "channel '" + wanted[i] + "' not present in recording");
    const std::size_t c =
        static_cast<std::size_t>(it - rec.channel_labels.begin());
    std::copy(rec.channel(c), rec.channel(c) + rec.n_samples,
              out.channel(i));
  }
  return out;
}

}  // namespace dartk
