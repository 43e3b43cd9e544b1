#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "dartk/error.hpp"
#include "dartk/hash.hpp"
#include "dartk/recording.hpp"

namespace dartk {

inline constexpr const char* kInterchangeMagic = "DARTK1";

// Writes `path` as raw little-endian float64 channel-major payload and
// `path + ".json"` as the metadata sidecar carrying a payload checksum.
inline void write_interchange(const Recording& rec, const std::string& path) {
  validate(rec);
  {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    require(f.good(), Errc::IoFailure, "cannot open '" + path + "' for write");
    f.write(reinterpret_cast<const char*>(rec.data.data()),
            static_cast<std::streamsize>(rec.data.size() * sizeof(double)));
    require(f.good(), Errc::IoFailure, "short write to '" + path + "'");
  }
  nlohmann::json j;
  j["magic"] = kInterchangeMagic;
  j["n_channels"] = rec.n_channels;
  j["n_samples"] = rec.n_samples;
  j["sampling_rate"] = rec.sampling_rate;
  j["channel_labels"] = rec.channel_labels;
  j["checksum_fnv1a64"] = detail::hex64(
      fnv1a64(rec.data.data(), rec.data.size() * sizeof(double)));
  auto& ms = j["markers"] = nlohmann::json::array();
  for (const auto& m : rec.markers)
    ms.push_back({{"kind", marker_kind_name(m.kind)},
                  {"position", m.position},
                  {"description", m.description}});
  std::ofstream f(path + ".json", std::ios::trunc);
  require(f.good(), Errc::IoFailure,
          "cannot open '" + path + ".json' for write");
  f << j.dump(2) << "\n";
  require(f.good(), Errc::IoFailure, "short write to '" + path + ".json'");
}

inline Recording read_interchange(const std::string& path) {
  const std::string sidecar = path + ".json";
  require(std::filesystem::exists(sidecar), Errc::MissingCompanionFile,
          "missing sidecar '" + sidecar + "'");
  nlohmann::json j;
  {
    std::ifstream f(sidecar);
    require(f.good(), Errc::IoFailure, "cannot open '" + sidecar + "'");
    try {
      f >> j;
    } catch (const nlohmann::json::exception& e) {
      fail(Errc::CorruptFile, "bad sidecar '" + sidecar + "': " + e.what());
    }
  }
  require(j.value("magic", "") == kInterchangeMagic, Errc::VersionMismatch,
          "sidecar '" + sidecar + "' is not a " +
              std::string(kInterchangeMagic) + " file");

  Recording rec;
  try {
    rec.n_channels = j.at("n_channels").get<std::size_t>();
    rec.n_samples = j.at("n_samples").get<std::size_t>();
    rec.sampling_rate = j.at("sampling_rate").get<double>();
    rec.channel_labels =
        j.at("channel_labels").get<std::vector<std::string>>();
    for (const auto& m : j.at("markers")) {
      Marker mk;
      mk.kind = marker_kind_from_name(m.at("kind").get<std::string>());
      mk.position = m.at("position").get<std::size_t>();
      mk.description = m.value("description", "");
      rec.markers.push_back(mk);
    }
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::CorruptFile, "bad sidecar '" + sidecar + "': " + e.what());
  }

  const std::size_t count = rec.n_channels * rec.n_samples;
  {
    std::ifstream f(path, std::ios::binary);
    require(f.good(), Errc::IoFailure, "cannot open '" + path + "'");
    rec.data.resize(count);
    f.read(reinterpret_cast<char*>(rec.data.data()),
           static_cast<std::streamsize>(count * sizeof(double)));
    require(static_cast<std::size_t>(f.gcount()) == count * sizeof(double),
            Errc::TruncatedData,
            "payload '" + path + "' shorter than sidecar declares");
    char extra;
    require(!f.read(&extra, 1), Errc::TruncatedData,
            "payload '" + path + "' longer than sidecar declares");
  }
  const std::string want = j.value("checksum_fnv1a64", "");
  const std::string got =
      detail::hex64(fnv1a64(rec.data.data(), count * sizeof(double)));
  require(want == got, Errc::ChecksumMismatch,
          "payload checksum " + got + " does not match sidecar " + want);
  validate(rec);
  return rec;
}

}  // namespace dartk
