#ifndef ROADTUBES_TESTS_TEMP_DIR_HPP
#define ROADTUBES_TESTS_TEMP_DIR_HPP

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

// Fresh directory under the system temp root, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    std::mt19937_64 eng(rd());
    for (int attempt = 0; attempt < 16; ++attempt) {
      std::ostringstream name;
      name << "roadtubes_" << tag << "_" << std::hex << eng();
      auto candidate = std::filesystem::temp_directory_path() / name.str();
      std::error_code ec;
      if (std::filesystem::create_directory(candidate, ec)) {
        path_ = candidate;
        return;
      }
    }
    throw std::runtime_error("could not create temp directory");
  }

  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }

  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }

  std::string file(const std::string& name) const {
    return (path_ / name).string();
  }

  std::string write(const std::string& name, const std::string& text) const {
    auto p = file(name);
    std::ofstream out(p, std::ios::binary);
    out << text;
    return p;
  }

  static std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
  }

 private:
  std::filesystem::path path_;
};

#endif
