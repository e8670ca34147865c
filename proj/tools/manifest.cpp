#include "manifest.hpp"

#include <array>
#include <stdexcept>

#include <fmt/format.h>
#include <json.hpp>
#include <openssl/evp.h>

namespace influxrank::cli {

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  std::array<char, 1 << 16> buf;
  while (in) {
    in.read(buf.data(), buf.size());
    if (in.gcount() > 0) EVP_DigestUpdate(ctx, buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  std::array<unsigned char, EVP_MAX_MD_SIZE> md;
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md.data(), &len);
  EVP_MD_CTX_free(ctx);
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", md[i]);
  return hex;
}

OutputDir::OutputDir(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::filesystem::create_directories(dir_);
}

OutputDir::~OutputDir() {
  if (committed_) return;
  std::error_code ec;
  for (const auto& name : written_) std::filesystem::remove(dir_ / name, ec);
}

void OutputDir::write(const std::string& name, const std::function<void(std::ostream&)>& fill) {
  const auto target = dir_ / name;
  const auto tmp = dir_ / (name + ".partial");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + target.string());
    try {
      fill(out);
    } catch (...) {
      out.close();
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw;
    }
    out.flush();
    if (!out) throw std::runtime_error("write failed for " + target.string());
  }
  std::filesystem::rename(tmp, target);
  written_.push_back(name);
}

void OutputDir::adopt(const std::string& name) {
  if (!std::filesystem::exists(dir_ / name)) throw std::runtime_error("missing output " + name);
  written_.push_back(name);
}

void OutputDir::commit() {
  const auto path = dir_ / "manifest.json";
  nlohmann::json manifest = nlohmann::json::object();
  if (std::filesystem::exists(path)) {
    std::ifstream in(path);
    try {
      manifest = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception&) {
      manifest = nlohmann::json::object();
    }
  }
  auto& artifacts = manifest["artifacts"];
  if (!artifacts.is_object()) artifacts = nlohmann::json::object();
  for (const auto& name : written_) artifacts[name] = sha256_file(dir_ / name);
  const auto tmp = dir_ / "manifest.json.partial";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << manifest.dump(2) << '\n';
  }
  std::filesystem::rename(tmp, path);
  committed_ = true;
}

}  // namespace influxrank::cli
