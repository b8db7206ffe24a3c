// Dataset manifest CSV: header "id,path,label,fold"; fold (and, for
// not-yet-labeled extraction output, label) may be blank. Paths are resolved
// relative to the manifest file's directory.
#pragma once

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "speechfcn/common.hpp"

namespace speechfcn {

struct ManifestEntry {
  std::string id;
  std::string path;
  int label = -1;  // 0 = non-AD, 1 = AD, -1 = unlabeled
  int fold = -1;   // optional fold assignment, -1 = none
};

struct DatasetManifest {
  std::vector<ManifestEntry> entries;

  bool all_labeled() const {
    for (const ManifestEntry& e : entries)
      if (e.label != 0 && e.label != 1) return false;
    return true;
  }

  bool has_folds() const {
    if (entries.empty()) return false;
    for (const ManifestEntry& e : entries)
      if (e.fold != 0 && e.fold != 1) return false;
    return true;
  }
};

inline DatasetManifest load_manifest(const std::string& path, bool require_labels = true) {
  std::ifstream f(path);
  if (!f) throw Error(ErrorKind::io, "cannot open " + path);
  const std::filesystem::path base = std::filesystem::path(path).parent_path();

  std::string line;
  if (!std::getline(f, line)) throw Error(ErrorKind::format, path + ": empty manifest");
  auto split = [](const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string field;
    while (std::getline(ss, field, ',')) out.push_back(field);
    if (!s.empty() && s.back() == ',') out.push_back("");
    return out;
  };
  {
    const auto header = split(line);
    if (header.size() < 3 || header[0] != "id" || header[1] != "path" || header[2] != "label")
      throw Error(ErrorKind::format, path + ": expected header id,path,label,fold");
  }

  DatasetManifest m;
  std::set<std::string> seen;
  int line_no = 1;
  while (std::getline(f, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split(line);
    if (fields.size() < 3) throw Error(ErrorKind::format, path + ": bad row at line " + std::to_string(line_no));
    ManifestEntry e;
    e.id = fields[0];
    e.path = (base / fields[1]).string();
    if (!fields[2].empty()) {
      if (fields[2] != "0" && fields[2] != "1")
        throw Error(ErrorKind::data, path + ": label must be 0 or 1 at line " + std::to_string(line_no));
      e.label = fields[2][0] - '0';
    } else if (require_labels) {
      throw Error(ErrorKind::data, path + ": missing label at line " + std::to_string(line_no));
    }
    if (fields.size() > 3 && !fields[3].empty()) {
      if (fields[3] != "0" && fields[3] != "1")
        throw Error(ErrorKind::data, path + ": fold must be 0 or 1 at line " + std::to_string(line_no));
      e.fold = fields[3][0] - '0';
    }
    if (!seen.insert(e.id).second) throw Error(ErrorKind::data, path + ": duplicate id " + e.id);
    m.entries.push_back(std::move(e));
  }
  return m;
}

inline void save_manifest(const std::string& path, const DatasetManifest& m,
                          bool relative_to_manifest = false) {
  std::ofstream f(path);
  if (!f) throw Error(ErrorKind::io, "cannot write " + path);
  const std::filesystem::path base = std::filesystem::path(path).parent_path();
  f << "id,path,label,fold\n";
  for (const ManifestEntry& e : m.entries) {
    std::string p = e.path;
    if (relative_to_manifest) p = std::filesystem::relative(e.path, base).string();
    f << e.id << "," << p << ",";
    if (e.label == 0 || e.label == 1) f << e.label;
    f << ",";
    if (e.fold == 0 || e.fold == 1) f << e.fold;
    f << "\n";
  }
  if (!f) throw Error(ErrorKind::io, "write failed for " + path);
}

}  // namespace speechfcn
