#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "dartk/error.hpp"
#include "dartk/recording.hpp"

namespace dartk {
namespace bv {

inline std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

inline std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) {
    return static_cast<char>(std::tolower(c));
  });
  return s;
}

inline bool contains_ci(const std::string& hay, const std::string& needle) {
  return lower(hay).find(lower(needle)) != std::string::npos;
}

// INI-like sectioned key/value file. Keys are lowercased; values keep case.
struct IniFile {
  std::map<std::string, std::map<std::string, std::string>> sections;

  const std::string* find(const std::string& section,
                          const std::string& key) const {
    auto s = sections.find(lower(section));
    if (s == sections.end()) return nullptr;
    auto k = s->second.find(lower(key));
    if (k == s->second.end()) return nullptr;
    return &k->second;
  }

  std::string need(const std::string& section, const std::string& key,
                   const std::string& path) const {
    const std::string* v = find(section, key);
    require(v != nullptr, Errc::CorruptFile,
            "'" + path + "' is missing " + section + "/" + key);
    return *v;
  }
};

inline IniFile parse_ini(const std::string& path) {
  std::ifstream f(path);
  require(f.good(), Errc::IoFailure, "cannot open '" + path + "'");
  IniFile ini;
  std::string line, section;
  while (std::getline(f, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    line = trim(line);
    if (line.empty() || line[0] == ';' || line[0] == '#') continue;
    if (line.front() == '[' && line.back() == ']') {
      section = lower(trim(line.substr(1, line.size() - 2)));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    ini.sections[section][lower(trim(line.substr(0, eq)))] =
        trim(line.substr(eq + 1));
  }
  return ini;
}

inline std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

// Commas inside channel names are escaped as "\1" in the format.
inline std::string unescape_name(std::string s) {
  std::size_t p;
  while ((p = s.find("\\1")) != std::string::npos) s.replace(p, 2, ",");
  return s;
}

inline bool microvolt_unit(const std::string& unit) {
  return unit.empty() || unit == "uV" || unit == "\xC2\xB5V" ||
         unit == "\xB5V" || lower(unit) == "microvolts";
}

inline MarkerKind classify_marker(const std::string& type,
                                  const std::string& desc) {
  for (const std::string& s : {type, desc}) {
    if (contains_ci(s, "r128") || contains_ci(s, "scan") ||
        contains_ci(s, "volume") || contains_ci(s, "mri"))
      return MarkerKind::VolumeTrigger;
    if (contains_ci(s, "ecg") || contains_ci(s, "r-peak") ||
        contains_ci(s, "rpeak") || contains_ci(s, "qrs") ||
        contains_ci(s, "cardiac"))
      return MarkerKind::CardiacPeak;
  }
  return MarkerKind::Other;
}

}  // namespace bv

// Parses a BrainVision header triplet (.vhdr + marker file + binary data).
// Only BINARY MULTIPLEXED data in INT_16 or IEEE_FLOAT_32 is accepted.
inline Recording parse_brainvision(const std::string& header_path) {
  namespace fs = std::filesystem;
  require(fs::exists(header_path), Errc::IoFailure,
          "header '" + header_path + "' does not exist");
  const bv::IniFile hdr = bv::parse_ini(header_path);
  const fs::path dir = fs::path(header_path).parent_path();

  const std::string fmt =
      bv::lower(hdr.need("Common Infos", "DataFormat", header_path));
  require(fmt == "binary", Errc::UnsupportedEncoding,
          "only BINARY DataFormat is supported, got '" + fmt + "'");
  if (const std::string* o = hdr.find("Common Infos", "DataOrientation")) {
    require(bv::lower(*o) == "multiplexed", Errc::UnsupportedEncoding,
            "only MULTIPLEXED orientation is supported, got '" + *o + "'");
  }

  Recording rec;
  const std::string nch_s =
      hdr.need("Common Infos", "NumberOfChannels", header_path);
  const std::string si_s =
      hdr.need("Common Infos", "SamplingInterval", header_path);
  try {
    rec.n_channels = static_cast<std::size_t>(std::stoul(nch_s));
    rec.sampling_rate = 1e6 / std::stod(si_s);
  } catch (const std::exception&) {
    fail(Errc::CorruptFile, "'" + header_path + "' has malformed numbers");
  }
  require(rec.n_channels > 0, Errc::CorruptFile, "NumberOfChannels is zero");

  std::vector<double> resolution(rec.n_channels, 1.0);
  rec.channel_labels.resize(rec.n_channels);
  for (std::size_t c = 0; c < rec.n_channels; ++c) {
    const std::string key = "Ch" + std::to_string(c + 1);
    const std::string* v = hdr.find("Channel Infos", key);
    require(v != nullptr, Errc::CorruptFile,
            "'" + header_path + "' is missing Channel Infos/" + key);
    auto parts = bv::split_commas(*v);
    rec.channel_labels[c] =
        parts.empty() ? key : bv::unescape_name(bv::trim(parts[0]));
    if (parts.size() > 2 && !bv::trim(parts[2]).empty()) {
      try {
        resolution[c] = std::stod(bv::trim(parts[2]));
      } catch (const std::exception&) {
        fail(Errc::CorruptFile, "bad resolution for " + key);
      }
    }
    if (parts.size() > 3) {
      const std::string unit = bv::trim(parts[3]);
      require(bv::microvolt_unit(unit), Errc::UnsupportedEncoding,
              "channel " + key + " unit '" + unit +
                  "' is not microvolts; conversion unimplemented");
    }
  }

  const std::string binfmt =
      bv::lower(hdr.need("Binary Infos", "BinaryFormat", header_path));
  std::size_t sample_bytes;
  if (binfmt == "int_16") {
    sample_bytes = 2;
  } else if (binfmt == "ieee_float_32") {
    sample_bytes = 4;
  } else {
    fail(Errc::UnsupportedEncoding,
         "BinaryFormat '" + binfmt + "' is not INT_16 or IEEE_FLOAT_32");
  }

  const fs::path data_path =
      dir / bv::trim(hdr.need("Common Infos", "DataFile", header_path));
  require(fs::exists(data_path), Errc::MissingCompanionFile,
          "data file '" + data_path.string() + "' does not exist");
  std::ifstream df(data_path, std::ios::binary | std::ios::ate);
  require(df.good(), Errc::IoFailure,
          "cannot open '" + data_path.string() + "'");
  const std::size_t nbytes = static_cast<std::size_t>(df.tellg());
  df.seekg(0);
  const std::size_t frame = rec.n_channels * sample_bytes;
  require(nbytes % frame == 0, Errc::TruncatedData,
          "payload of " + std::to_string(nbytes) +
              " bytes is not a whole number of " + std::to_string(frame) +
              "-byte frames");
  rec.n_samples = nbytes / frame;

  std::vector<char> raw(nbytes);
  df.read(raw.data(), static_cast<std::streamsize>(nbytes));
  require(static_cast<std::size_t>(df.gcount()) == nbytes, Errc::IoFailure,
          "short read from '" + data_path.string() + "'");

  rec.data.resize(rec.n_channels * rec.n_samples);
  if (binfmt == "int_16") {
    const auto* p = reinterpret_cast<const std::int16_t*>(raw.data());
    for (std::size_t t = 0; t < rec.n_samples; ++t)
      for (std::size_t c = 0; c < rec.n_channels; ++c)
        rec.at(c, t) =
            static_cast<double>(p[t * rec.n_channels + c]) * resolution[c];
  } else {
    const auto* p = reinterpret_cast<const float*>(raw.data());
    for (std::size_t t = 0; t < rec.n_samples; ++t)
      for (std::size_t c = 0; c < rec.n_channels; ++c)
        rec.at(c, t) =
            static_cast<double>(p[t * rec.n_channels + c]) * resolution[c];
  }

  if (const std::string* mf = hdr.find("Common Infos", "MarkerFile")) {
    const fs::path marker_path = dir / bv::trim(*mf);
    require(fs::exists(marker_path), Errc::MissingCompanionFile,
            "marker file '" + marker_path.string() + "' does not exist");
    const bv::IniFile mrk = bv::parse_ini(marker_path.string());
    auto s = mrk.sections.find("marker infos");
    if (s != mrk.sections.end()) {
      for (const auto& [key, value] : s->second) {
        if (key.rfind("mk", 0) != 0) continue;
        auto parts = bv::split_commas(value);
        if (parts.size() < 3) continue;
        Marker m;
        const std::string type = bv::trim(parts[0]);
        m.description = bv::trim(parts[1]);
        long long pos;
        try {
          pos = std::stoll(bv::trim(parts[2]));
        } catch (const std::exception&) {
          fail(Errc::CorruptFile, "bad marker position in '" +
                                      marker_path.string() + "': " + value);
        }
        // Positions are 1-based data points in this format.
        m.position = pos > 0 ? static_cast<std::size_t>(pos - 1) : 0;
        m.kind = bv::classify_marker(type, m.description);
        if (m.position < rec.n_samples) rec.markers.push_back(m);
      }
    }
  }
  sort_markers(rec);
  validate(rec);
  return rec;
}

}  // namespace dartk
