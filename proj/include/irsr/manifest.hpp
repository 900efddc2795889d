#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "irsr/error.hpp"
#include "irsr/resample.hpp"

namespace irsr {

enum class Phase { validation, test };

inline std::string_view to_string(Phase p) { return p == Phase::validation ? "validation" : "test"; }

inline Phase parse_phase(std::string_view s) {
  if (s == "validation" || s == "val") return Phase::validation;
  if (s == "test") return Phase::test;
  throw ValidationError("unknown phase '" + std::string(s) + "'");
}

struct ManifestEntry {
  std::string image_id;
  std::filesystem::path lr_path;
  std::optional<std::filesystem::path> hr_path;
};

struct Manifest {
  Phase phase = Phase::validation;
  int scale = kScale;
  std::vector<ManifestEntry> entries;

  std::size_t size() const noexcept { return entries.size(); }

  void validate() const {
    if (entries.empty()) throw ValidationError("manifest is empty");
    std::set<std::string> seen;
    for (const auto& e : entries) {
      if (!seen.insert(e.image_id).second) {
        throw ValidationError("duplicate image id '" + e.image_id + "' in manifest");
      }
      if (!std::filesystem::exists(e.lr_path)) {
        throw IoError("missing LR file for '" + e.image_id + "': " + e.lr_path.string());
      }
      if (e.hr_path && !std::filesystem::exists(*e.hr_path)) {
        throw IoError("missing HR file for '" + e.image_id + "': " + e.hr_path->string());
      }
      if (phase == Phase::validation && !e.hr_path) {
        throw ValidationError("validation manifest entry '" + e.image_id + "' has no HR image");
      }
    }
  }

  bool has_ground_truth() const {
    return std::ranges::all_of(entries, [](const auto& e) { return e.hr_path.has_value(); });
  }
};

namespace detail {

inline std::map<std::string, std::filesystem::path> pngs_by_stem(const std::filesystem::path& dir) {
  std::map<std::string, std::filesystem::path> out;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".png") {
      out.emplace(e.path().stem().string(), e.path());
    }
  }
  return out;
}

}  // namespace detail

/// Pairs root/LR/*.png with root/HR/*.png by filename, in lexicographic order.
/// In the test phase HR images are optional.
inline Manifest build_manifest(const std::filesystem::path& root, Phase phase) {
  const auto lr_dir = root / "LR";
  const auto hr_dir = root / "HR";
  if (!std::filesystem::is_directory(lr_dir)) throw IoError("missing LR directory " + lr_dir.string());
  const bool has_hr_dir = std::filesystem::is_directory(hr_dir);
  if (phase == Phase::validation && !has_hr_dir) {
    throw IoError("missing HR directory " + hr_dir.string());
  }
  const auto lrs = detail::pngs_by_stem(lr_dir);
  const auto hrs = has_hr_dir ? detail::pngs_by_stem(hr_dir)
                              : std::map<std::string, std::filesystem::path>{};
  if (lrs.empty()) throw ValidationError("dataset " + root.string() + " contains no LR images");

  Manifest m;
  m.phase = phase;
  for (const auto& [id, lr] : lrs) {
    ManifestEntry e{id, lr, std::nullopt};
    if (auto it = hrs.find(id); it != hrs.end()) {
      e.hr_path = it->second;
    } else if (phase == Phase::validation) {
      throw ValidationError("LR image '" + id + "' has no matching HR image in " + hr_dir.string());
    }
    m.entries.push_back(std::move(e));
  }
  if (phase == Phase::validation) {
    for (const auto& [id, hr] : hrs) {
      if (!lrs.contains(id)) {
        throw ValidationError("HR image '" + id + "' has no matching LR image in " + lr_dir.string());
      }
    }
  }
  return m;
}

/// Explicit manifest: one `image_id,lr_path[,hr_path]` per line, paths
/// relative to the manifest file. Blank lines and '#' comments are skipped.
inline Manifest load_manifest_file(const std::filesystem::path& file, Phase phase) {
  std::ifstream in(file);
  if (!in) throw IoError("cannot read manifest " + file.string());
  const auto base = file.parent_path();
  Manifest m;
  m.phase = phase;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    for (std::string f; std::getline(ss, f, ',');) fields.push_back(f);
    if (fields.size() < 2 || fields.size() > 3) {
      throw ValidationError(file.string() + ":" + std::to_string(line_no) +
                            ": expected image_id,lr_path[,hr_path]");
    }
    if (fields[0] == "image_id") continue;  // header
    ManifestEntry e{fields[0], base / fields[1], std::nullopt};
    if (fields.size() == 3 && !fields[2].empty()) e.hr_path = base / fields[2];
    m.entries.push_back(std::move(e));
  }
  m.validate();
  return m;
}

}  // namespace irsr
