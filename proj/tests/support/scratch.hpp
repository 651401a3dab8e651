#pragma once

#include <filesystem>
#include <random>
#include <string>

#include <unistd.h>

#include "infernet/random.hpp"
#include "infernet/tensor.hpp"

namespace testing {

// Fresh directory under the system temp dir, removed on destruction.
class ScratchDir {
 public:
  explicit ScratchDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("infernet_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~ScratchDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  ScratchDir(const ScratchDir&) = delete;
  ScratchDir& operator=(const ScratchDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline infernet::Tensor random_tensor(std::vector<int> dims, infernet::Rng& rng, float lo = -1.0f, float hi = 1.0f) {
  infernet::Tensor t(std::move(dims));
  for (float& v : t.data()) v = lo + static_cast<float>(infernet::uniform_unit(rng)) * (hi - lo);
  return t;
}

}  // namespace testing
