#pragma once

// Small RAII temp-directory helper for tests that need real files.

#include <filesystem>
#include <fstream>
#include <random>
#include <string>

namespace trtest {

class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    std::string name = "textrepair-test-" + std::to_string(rd()) + "-" +
                       std::to_string(rd());
    path_ = std::filesystem::temp_directory_path() / name;
    std::filesystem::create_directories(path_);
  }

  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }

  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }

  std::string write(const std::string& name, const std::string& contents) const {
    auto p = path_ / name;
    std::ofstream out(p, std::ios::binary);
    out << contents;
    out.close();
    return p.string();
  }

  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in),
                     std::istreambuf_iterator<char>());
}

}  // namespace trtest
