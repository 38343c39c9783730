#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace nhsol {

std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::filesystem::path& path);

struct FileEntry {
  std::string path;  // relative to the output directory
  std::string sha256;
  std::uintmax_t bytes = 0;
};

struct StageStatus {
  std::string name;
  std::string status;  // ok | failed | diverged | skipped
  std::string detail;
};

// Single writer for one output directory; every file goes through write() so
// it lands in the manifest inventory.
class OutputDir {
 public:
  explicit OutputDir(std::filesystem::path dir);

  const std::filesystem::path& path() const { return dir_; }
  void write(const std::string& name, const std::string& contents);
  void stage(std::string name, std::string status, std::string detail = {});

  const std::vector<FileEntry>& files() const { return files_; }
  const std::vector<StageStatus>& stages() const { return stages_; }

  // manifest.json: the run description (command, config echo, overrides,
  // exit code) plus version, wall time, stages and the file inventory.
  void write_manifest(const nlohmann::json& run, double wall_seconds);

 private:
  std::filesystem::path dir_;
  std::vector<FileEntry> files_;
  std::vector<StageStatus> stages_;
};

inline constexpr const char* kManifestName = "manifest.json";

}  // namespace nhsol
