#pragma once

#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "dartk/error.hpp"
#include "dartk/fir.hpp"
#include "dartk/interchange.hpp"
#include "dartk/recording.hpp"
#include "dartk/resample.hpp"

namespace dartk {

// One normalized window, channel-major [C, T], all |values| <= 1.
struct Segment {
  std::vector<double> data;
  std::size_t n_channels = 0;
  std::size_t n_samples = 0;
  std::string subject_id;
  std::size_t source_offset = 0;
  double norm_scale = 1.0;  // the max-abs microvolt value divided out

  double* channel(std::size_t c) { return data.data() + c * n_samples; }
  const double* channel(std::size_t c) const {
    return data.data() + c * n_samples;
  }
};

struct SegmentPair {
  Segment noisy;
  Segment clean;
};

struct PreprocessConfig {
  double target_hz = 250.0;
  FilterSpec filter;
  std::size_t win = 500;
  std::size_t stride = 250;
};

// Joint max-abs normalization over all channels and samples of one window.
// All-zero windows pass through with scale 1.
inline double normalize(std::vector<double>& window) {
  double peak = 0.0;
  for (double v : window) peak = std::max(peak, std::abs(v));
  if (peak == 0.0) return 1.0;
  for (double& v : window) v /= peak;
  return peak;
}

inline Segment cut_window(const Recording& rec, std::size_t offset,
                          std::size_t win, const std::string& subject_id) {
  Segment s;
  s.n_channels = rec.n_channels;
  s.n_samples = win;
  s.subject_id = subject_id;
  s.source_offset = offset;
  s.data.resize(rec.n_channels * win);
  for (std::size_t c = 0; c < rec.n_channels; ++c) {
    const double* src = rec.channel(c) + offset;
    std::copy(src, src + win, s.channel(c));
  }
  s.norm_scale = normalize(s.data);
  return s;
}

inline std::size_t segment_count(std::size_t n_samples, std::size_t win,
                                 std::size_t stride) {
  return n_samples >= win ? (n_samples - win) / stride + 1 : 0;
}

// Overlapping windows; each segment of a pair is normalized by its own
// max-abs so both sides land in [-1, 1].
inline std::vector<SegmentPair> segment(const Recording& noisy,
                                        const Recording& clean,
                                        std::size_t win, std::size_t stride,
                                        const std::string& subject_id = "") {
  require(noisy.n_samples == clean.n_samples &&
              noisy.n_channels == clean.n_channels,
          Errc::LengthMismatch,
          "noisy and clean recordings must be aligned sample for sample");
  require(noisy.sampling_rate == clean.sampling_rate, Errc::RateMismatch,
          "noisy and clean recordings must share a sampling rate");
  require(stride > 0, Errc::InvalidConfig, "stride must be positive");
  const std::size_t count = segment_count(noisy.n_samples, win, stride);
  std::vector<SegmentPair> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t off = i * stride;
    out.push_back({cut_window(noisy, off, win, subject_id),
                   cut_window(clean, off, win, subject_id)});
  }
  return out;
}

inline std::vector<SegmentPair> preprocess_pair(const Recording& noisy,
                                                const Recording& clean,
                                                const PreprocessConfig& cfg,
                                                const std::string& subject_id) {
  Recording n = resample(noisy, cfg.target_hz);
  Recording c = resample(clean, cfg.target_hz);
  n = bandpass_zero_phase(n, cfg.filter);
  c = bandpass_zero_phase(c, cfg.filter);
  return segment(n, c, cfg.win, cfg.stride, subject_id);
}

// ---------------------------------------------------------------------------
// Segment store: one binary file per subject (pairs back to back, noisy then
// clean, float64 LE channel-major) plus a JSON index with offsets and scales.

struct SubjectSegments {
  std::string subject_id;
  std::string condition = "default";
  std::vector<SegmentPair> pairs;
};

struct SegmentStore {
  std::size_t win = 500;
  std::size_t stride = 250;
  double sampling_rate = 250.0;
  std::size_t n_channels = 0;
  std::vector<SubjectSegments> subjects;

  std::size_t total_pairs() const {
    std::size_t n = 0;
    for (const auto& s : subjects) n += s.pairs.size();
    return n;
  }
};

inline constexpr const char* kSegmentStoreMagic = "DARTKSEG1";

inline void save_segment_store(const SegmentStore& store,
                               const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  nlohmann::json idx;
  idx["magic"] = kSegmentStoreMagic;
  idx["win"] = store.win;
  idx["stride"] = store.stride;
  idx["sampling_rate"] = store.sampling_rate;
  idx["n_channels"] = store.n_channels;
  auto& subs = idx["subjects"] = nlohmann::json::array();

  for (const auto& sub : store.subjects) {
    const std::string fname = sub.subject_id + "_" + sub.condition + ".seg";
    const fs::path bin = fs::path(dir) / fname;
    std::vector<double> blob;
    blob.reserve(sub.pairs.size() * 2 * store.n_channels * store.win);
    nlohmann::json jpairs = nlohmann::json::array();
    for (const auto& pr : sub.pairs) {
      require(pr.noisy.n_channels == store.n_channels &&
                  pr.noisy.n_samples == store.win &&
                  pr.clean.n_channels == store.n_channels &&
                  pr.clean.n_samples == store.win,
              Errc::ShapeMismatch, "segment shape differs from store shape");
      blob.insert(blob.end(), pr.noisy.data.begin(), pr.noisy.data.end());
      blob.insert(blob.end(), pr.clean.data.begin(), pr.clean.data.end());
      jpairs.push_back({{"offset", pr.noisy.source_offset},
                        {"noisy_scale", pr.noisy.norm_scale},
                        {"clean_scale", pr.clean.norm_scale}});
    }
    std::ofstream f(bin, std::ios::binary | std::ios::trunc);
    require(f.good(), Errc::IoFailure,
            "cannot open '" + bin.string() + "' for write");
    f.write(reinterpret_cast<const char*>(blob.data()),
            static_cast<std::streamsize>(blob.size() * sizeof(double)));
    require(f.good(), Errc::IoFailure, "short write to '" + bin.string() + "'");
    subs.push_back(
        {{"subject_id", sub.subject_id},
         {"condition", sub.condition},
         {"file", fname},
         {"n_pairs", sub.pairs.size()},
         {"pairs", jpairs},
         {"checksum_fnv1a64",
          detail::hex64(fnv1a64(blob.data(), blob.size() * sizeof(double)))}});
  }
  std::ofstream f(fs::path(dir) / "index.json", std::ios::trunc);
  require(f.good(), Errc::IoFailure, "cannot write segment index");
  f << idx.dump(2) << "\n";
  require(f.good(), Errc::IoFailure, "short write to segment index");
}

inline SegmentStore load_segment_store(const std::string& dir) {
  namespace fs = std::filesystem;
  const fs::path index = fs::path(dir) / "index.json";
  std::ifstream f(index);
  require(f.good(), Errc::IoFailure,
          "cannot open segment index '" + index.string() + "'");
  nlohmann::json idx;
  try {
    f >> idx;
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::CorruptFile, "bad segment index: " + std::string(e.what()));
  }
  require(idx.value("magic", "") == kSegmentStoreMagic, Errc::VersionMismatch,
          "'" + index.string() + "' is not a " +
              std::string(kSegmentStoreMagic) + " index");

  SegmentStore store;
  try {
    store.win = idx.at("win").get<std::size_t>();
    store.stride = idx.at("stride").get<std::size_t>();
    store.sampling_rate = idx.at("sampling_rate").get<double>();
    store.n_channels = idx.at("n_channels").get<std::size_t>();
    for (const auto& js : idx.at("subjects")) {
      SubjectSegments sub;
      sub.subject_id = js.at("subject_id").get<std::string>();
      sub.condition = js.value("condition", "default");
      const std::string fname = js.at("file").get<std::string>();
      const std::size_t n_pairs = js.at("n_pairs").get<std::size_t>();
      const std::size_t seg_len = store.n_channels * store.win;

      const fs::path bin = fs::path(dir) / fname;
      std::ifstream bf(bin, std::ios::binary | std::ios::ate);
      require(bf.good(), Errc::MissingCompanionFile,
              "cannot open segment payload '" + bin.string() + "'");
      const std::size_t nbytes = static_cast<std::size_t>(bf.tellg());
      require(nbytes == n_pairs * 2 * seg_len * sizeof(double),
              Errc::TruncatedData,
              "'" + bin.string() + "' does not hold " +
                  std::to_string(n_pairs) + " pairs");
      bf.seekg(0);
      std::vector<double> blob(n_pairs * 2 * seg_len);
      bf.read(reinterpret_cast<char*>(blob.data()),
              static_cast<std::streamsize>(nbytes));
      require(static_cast<std::size_t>(bf.gcount()) == nbytes, Errc::IoFailure,
              "short read from '" + bin.string() + "'");
      const std::string want = js.value("checksum_fnv1a64", "");
      const std::string got =
          detail::hex64(fnv1a64(blob.data(), blob.size() * sizeof(double)));
      require(want == got, Errc::ChecksumMismatch,
              "segment payload checksum mismatch in '" + bin.string() + "'");

      const auto& jpairs = js.at("pairs");
      require(jpairs.size() == n_pairs, Errc::CorruptFile,
              "pair metadata count mismatch");
      for (std::size_t i = 0; i < n_pairs; ++i) {
        SegmentPair pr;
        auto cut = [&](std::size_t block, Segment& s) {
          s.n_channels = store.n_channels;
          s.n_samples = store.win;
          s.subject_id = sub.subject_id;
          s.source_offset = jpairs[i].at("offset").get<std::size_t>();
          const double* src = blob.data() + (i * 2 + block) * seg_len;
          s.data.assign(src, src + seg_len);
        };
        cut(0, pr.noisy);
        cut(1, pr.clean);
        pr.noisy.norm_scale = jpairs[i].at("noisy_scale").get<double>();
        pr.clean.norm_scale = jpairs[i].at("clean_scale").get<double>();
        sub.pairs.push_back(std::move(pr));
      }
      store.subjects.push_back(std::move(sub));
    }
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::CorruptFile, "bad segment index: " + std::string(e.what()));
  }
  return store;
}

}  // namespace dartk
