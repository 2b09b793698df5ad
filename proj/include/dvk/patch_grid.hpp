#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace dvk {

/// One frame's rows x cols grid of dim-dimensional patch embeddings, stored
/// row-major with the embedding dimension innermost. The optional attention
/// plane holds the per-patch [CLS] attention in [0, 1].
struct PatchGrid {
  std::uint32_t rows = 0;
  std::uint32_t cols = 0;
  std::uint32_t dim = 0;
  std::vector<float> embeddings;
  std::optional<std::vector<float>> attention;
  std::optional<std::vector<float>> cls;
  std::string frame_id;

  std::size_t cell_count() const { return std::size_t{rows} * cols; }
  std::size_t cell_index(std::uint32_t row, std::uint32_t col) const {
    return std::size_t{row} * cols + col;
  }
  std::span<const float> patch(std::size_t cell) const {
    return {embeddings.data() + cell * dim, dim};
  }
  std::span<float> patch(std::size_t cell) {
    return {embeddings.data() + cell * dim, dim};
  }
  std::span<const float> patch(std::uint32_t row, std::uint32_t col) const {
    return patch(cell_index(row, col));
  }

  bool operator==(const PatchGrid&) const = default;
};

/// Throws dvk::Error if any PatchGrid invariant is violated.
void validate(const PatchGrid& grid);

inline constexpr std::uint32_t kGridFlagAttention = 1u << 0;
inline constexpr std::uint32_t kGridFlagCls = 1u << 1;
inline constexpr std::size_t kGridHeaderBytes = 24;

std::vector<std::uint8_t> encode_grid(const PatchGrid& grid);
PatchGrid decode_grid(std::span<const std::uint8_t> bytes,
                      std::string frame_id = {});

void write_grid(const PatchGrid& grid, const std::filesystem::path& path);
/// The frame id of a loaded grid is the file stem.
PatchGrid read_grid(const std::filesystem::path& path);

}  // namespace dvk
