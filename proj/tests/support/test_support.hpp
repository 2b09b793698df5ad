#pragma once

#include <filesystem>
#include <optional>
#include <random>
#include <string>

#include "dvk/error.hpp"
#include "dvk/patch_grid.hpp"
#include "dvk/random.hpp"

namespace dvk::testing {

class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("dvk_test_" + std::to_string(rd()) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

template <typename F>
std::optional<ErrorCode> error_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return std::nullopt;
}

inline PatchGrid random_grid(Rng& rng, std::uint32_t rows, std::uint32_t cols, std::uint32_t dim,
                             bool with_attention = true, bool with_cls = false) {
  std::normal_distribution<float> normal(0.0f, 1.0f);
  std::uniform_real_distribution<float> unit(0.0f, 1.0f);
  PatchGrid g;
  g.rows = rows;
  g.cols = cols;
  g.dim = dim;
  g.embeddings.resize(std::size_t{rows} * cols * dim);
  for (auto& x : g.embeddings) x = normal(rng);
  // A zero draw in every component is practically impossible, but keep the
  // invariant unconditional.
  for (std::size_t c = 0; c < g.cell_count(); ++c) g.embeddings[c * dim] += 1e-3f;
  if (with_attention) {
    std::vector<float> a(g.cell_count());
    for (auto& x : a) x = unit(rng);
    g.attention = std::move(a);
  }
  if (with_cls) {
    std::vector<float> c(dim);
    for (auto& x : c) x = normal(rng);
    g.cls = std::move(c);
  }
  return g;
}

}  // namespace dvk::testing
