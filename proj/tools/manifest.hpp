#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

namespace influxrank::cli {

/// Hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

/// Output files of one invocation. Files are written through a temporary name
/// and renamed; if the invocation fails, everything written so far is removed.
class OutputDir {
 public:
  explicit OutputDir(std::filesystem::path dir);
  ~OutputDir();

  const std::filesystem::path& path() const noexcept { return dir_; }

  /// Calls fill with a stream for `name`, then commits the file.
  void write(const std::string& name, const std::function<void(std::ostream&)>& fill);
  /// Registers a file produced by other means, already present in the directory.
  void adopt(const std::string& name);

  /// Merges the written files into manifest.json (name -> sha256, sorted).
  void commit();

 private:
  std::filesystem::path dir_;
  std::vector<std::string> written_;
  bool committed_ = false;
};

}  // namespace influxrank::cli
