#include "motionsynth/manifest.hpp"

#include <fstream>
#include <set>

#include <json.hpp>

namespace motionsynth {

using nlohmann::json;

std::vector<ManifestEntry> DatasetManifest::split(const std::string& name) const {
  std::vector<ManifestEntry> out;
  for (const auto& e : entries)
    if (e.split == name) out.push_back(e);
  return out;
}

int DatasetManifest::action_count() const {
  int hi = -1;
  for (const auto& e : entries) hi = std::max(hi, e.action);
  return hi + 1;
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(Err::io_error, "cannot open " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    fail(Err::corrupt_file, path.string() + ": " + e.what());
  }
  if (!doc.is_object() || !doc.contains("version")) fail(Err::corrupt_file, path.string() + ": not a manifest");
  if (doc["version"] != 1) fail(Err::version_mismatch, "unsupported manifest version");

  DatasetManifest m;
  m.fps = doc.value("fps", 25.0);
  for (const auto& e : doc.at("entries")) {
    ManifestEntry entry;
    entry.file = e.at("file").get<std::string>();
    entry.subject = e.at("subject").get<int>();
    entry.action = e.at("action").get<int>();
    entry.split = e.at("split").get<std::string>();
    m.entries.push_back(std::move(entry));
  }
  return m;
}

void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path) {
  json doc;
  doc["version"] = 1;
  doc["fps"] = manifest.fps;
  doc["entries"] = json::array();
  for (const auto& e : manifest.entries)
    doc["entries"].push_back({{"file", e.file}, {"subject", e.subject}, {"action", e.action}, {"split", e.split}});
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(Err::io_error, "cannot write " + path.string());
  out << doc.dump(2) << '\n';
}

void validate_manifest(const DatasetManifest& manifest, const std::filesystem::path& base_dir) {
  std::set<int> train_actions, other_actions;
  for (const auto& e : manifest.entries) {
    require(e.split == "train" || e.split == "val" || e.split == "test", Err::bad_config,
            "unknown split '" + e.split + "'");
    require(std::filesystem::exists(base_dir / e.file), Err::io_error,
            "missing sequence file " + (base_dir / e.file).string());
    (e.split == "train" ? train_actions : other_actions).insert(e.action);
  }
  for (int a : other_actions)
    require(train_actions.count(a) > 0, Err::bad_config,
            "action " + std::to_string(a) + " appears in val/test but not in train");
}

}  // namespace motionsynth
