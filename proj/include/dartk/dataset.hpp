#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "dartk/brainvision.hpp"
#include "dartk/error.hpp"
#include "dartk/interchange.hpp"
#include "dartk/recording.hpp"

namespace dartk {

enum class FileRole { Noisy, CleanReference };

struct ManifestEntry {
  std::string subject_id;
  std::string condition;
  FileRole role = FileRole::Noisy;
  std::string path;
  std::string format = "interchange";
};

struct Exclusion {
  std::string subject_id;
  std::string reason;
};

// Role-based catalog of paired noisy / clean-reference recordings. Excluded
// subjects may be described but are filtered out of every analysis listing.
struct DatasetManifest {
  std::vector<ManifestEntry> entries;
  std::vector<Exclusion> excluded;
  std::vector<std::string> channels;  // analysis subset; empty keeps all
  std::filesystem::path root;

  bool is_excluded(const std::string& subject_id) const {
    return std::any_of(excluded.begin(), excluded.end(),
                       [&](const Exclusion& e) {
                         return e.subject_id == subject_id;
                       });
  }

  std::vector<std::string> included_subjects() const {
    std::set<std::string> ids;
    for (const auto& e : entries)
      if (!is_excluded(e.subject_id)) ids.insert(e.subject_id);
    return {ids.begin(), ids.end()};
  }

  const ManifestEntry* find(const std::string& subject_id,
                            const std::string& condition,
                            FileRole role) const {
    for (const auto& e : entries)
      if (e.subject_id == subject_id && e.condition == condition &&
          e.role == role)
        return &e;
    return nullptr;
  }

  std::vector<std::string> conditions_of(const std::string& subject_id) const {
    std::set<std::string> cs;
    for (const auto& e : entries)
      if (e.subject_id == subject_id && e.role == FileRole::Noisy)
        cs.insert(e.condition);
    return {cs.begin(), cs.end()};
  }
};

inline FileRole role_from_name(const std::string& s) {
  if (s == "noisy") return FileRole::Noisy;
  if (s == "clean-reference" || s == "clean") return FileRole::CleanReference;
  fail(Errc::CorruptFile, "unknown manifest role '" + s + "'");
}

inline const char* role_name(FileRole r) {
  return r == FileRole::Noisy ? "noisy" : "clean-reference";
}

inline void validate(const DatasetManifest& m) {
  for (const auto& e : m.entries) {
    require(!e.subject_id.empty(), Errc::CorruptFile,
            "manifest entry with empty subject_id");
    require(e.format == "interchange" || e.format == "brainvision",
            Errc::CorruptFile,
            "manifest format '" + e.format + "' is not supported");
    if (e.role == FileRole::Noisy && !m.is_excluded(e.subject_id)) {
      require(m.find(e.subject_id, e.condition, FileRole::CleanReference) !=
                  nullptr,
              Errc::CorruptFile,
              "noisy entry " + e.subject_id + "/" + e.condition +
                  " has no clean-reference counterpart");
    }
  }
}

inline DatasetManifest load_manifest(const std::string& path) {
  std::ifstream f(path);
  require(f.good(), Errc::IoFailure, "cannot open manifest '" + path + "'");
  nlohmann::json j;
  try {
    f >> j;
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::CorruptFile, "bad manifest '" + path + "': " + e.what());
  }
  DatasetManifest m;
  m.root = std::filesystem::path(path).parent_path();
  try {
    for (const auto& s : j.at("subjects")) {
      ManifestEntry e;
      e.subject_id = s.at("subject_id").get<std::string>();
      e.condition = s.value("condition", "default");
      e.role = role_from_name(s.at("role").get<std::string>());
      e.path = s.at("path").get<std::string>();
      e.format = s.value("format", "interchange");
      m.entries.push_back(e);
    }
    if (j.contains("excluded"))
      for (const auto& x : j.at("excluded"))
        m.excluded.push_back(
            {x.at("subject_id").get<std::string>(), x.value("reason", "")});
    if (j.contains("channels"))
      m.channels = j.at("channels").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::CorruptFile, "bad manifest '" + path + "': " + e.what());
  }
  validate(m);
  return m;
}

inline void write_manifest(const DatasetManifest& m, const std::string& path) {
  validate(m);
  nlohmann::json j;
  auto& subs = j["subjects"] = nlohmann::json::array();
  for (const auto& e : m.entries)
    subs.push_back({{"subject_id", e.subject_id},
                    {"condition", e.condition},
                    {"role", role_name(e.role)},
                    {"path", e.path},
                    {"format", e.format}});
  auto& ex = j["excluded"] = nlohmann::json::array();
  for (const auto& x : m.excluded)
    ex.push_back({{"subject_id", x.subject_id}, {"reason", x.reason}});
  std::ofstream f(path, std::ios::trunc);
  require(f.good(), Errc::IoFailure, "cannot open '" + path + "' for write");
  f << j.dump(2) << "\n";
  require(f.good(), Errc::IoFailure, "short write to '" + path + "'");
}

inline Recording load_entry(const DatasetManifest& m,
                            const ManifestEntry& e) {
  const std::string full = (m.root / e.path).string();
  if (e.format == "brainvision") return parse_brainvision(full);
  return read_interchange(full);
}

struct RecordingPair {
  Recording noisy;
  Recording clean;
};

inline RecordingPair load_pair(const DatasetManifest& m,
                               const std::string& subject_id,
                               const std::string& condition) {
  const ManifestEntry* n = m.find(subject_id, condition, FileRole::Noisy);
  const ManifestEntry* c =
      m.find(subject_id, condition, FileRole::CleanReference);
  require(n != nullptr && c != nullptr, Errc::CorruptFile,
          "manifest has no noisy/clean pair for " + subject_id + "/" +
              condition);
  return {load_entry(m, *n), load_entry(m, *c)};
}

}  // namespace dartk
