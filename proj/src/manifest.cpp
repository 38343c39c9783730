#include "nhsol/manifest.hpp"

#include <openssl/evp.h>

#include <fstream>
#include <memory>
#include <sstream>
#include <stdexcept>

namespace nhsol {

std::string sha256_hex(const std::string& bytes) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), md, &len) != 1)
    throw std::runtime_error("sha256 failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return sha256_hex(ss.str());
}

OutputDir::OutputDir(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::filesystem::create_directories(dir_);
}

void OutputDir::write(const std::string& name, const std::string& contents) {
  const auto target = dir_ / name;
  {
    std::ofstream out(target, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + target.string());
    out << contents;
    if (!out) throw std::runtime_error("write failed for " + target.string());
  }
  FileEntry e{name, sha256_hex(contents), contents.size()};
  for (auto& f : files_)
    if (f.path == name) {
      f = e;
      return;
    }
  files_.push_back(std::move(e));
}

void OutputDir::stage(std::string name, std::string status, std::string detail) {
  stages_.push_back({std::move(name), std::move(status), std::move(detail)});
}

void OutputDir::write_manifest(const nlohmann::json& run, double wall_seconds) {
  nlohmann::json j = run;
  j["tool"] = "nhsol";
  j["version"] = NHSOL_VERSION;
  j["wall_time_s"] = wall_seconds;
  j["stages"] = nlohmann::json::array();
  for (const auto& s : stages_) {
    nlohmann::json st{{"name", s.name}, {"status", s.status}};
    if (!s.detail.empty()) st["detail"] = s.detail;
    j["stages"].push_back(st);
  }
  j["files"] = nlohmann::json::array();
  for (const auto& f : files_)
    j["files"].push_back({{"path", f.path}, {"sha256", f.sha256}, {"bytes", f.bytes}});
  std::ofstream out(dir_ / kManifestName, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write manifest in " + dir_.string());
  out << j.dump(2) << '\n';
}

}  // namespace nhsol
