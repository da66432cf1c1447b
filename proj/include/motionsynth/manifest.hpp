#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "motionsynth/errors.hpp"

namespace motionsynth {

struct ManifestEntry {
  std::string file;  // relative to the manifest location
  int subject = 0;
  int action = 0;
  std::string split;  // train | val | test
};

struct DatasetManifest {
  double fps = 25.0;
  std::vector<ManifestEntry> entries;

  std::vector<ManifestEntry> split(const std::string& name) const;
  int action_count() const;
};

DatasetManifest load_manifest(const std::filesystem::path& path);
void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);

// Checks split names, that referenced files exist under base_dir, and that
// every action seen in val/test also appears in train.
void validate_manifest(const DatasetManifest& manifest, const std::filesystem::path& base_dir);

}  // namespace motionsynth
