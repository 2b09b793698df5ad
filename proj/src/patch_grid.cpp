#include "dvk/patch_grid.hpp"

#include <cmath>
#include <cstring>
#include <limits>

#include "dvk/error.hpp"
#include "dvk/file_util.hpp"

namespace dvk {
namespace {

constexpr std::string_view kMagic = "DVKEMB01";

void check_finite(std::span<const float> values, const char* what) {
  for (float v : values) {
    if (!std::isfinite(v)) {
      throw Error(ErrorCode::NonFiniteValue, std::string("non-finite ") + what);
    }
  }
}

// rows*cols*dim floats plus optional planes, in bytes; nullopt on overflow.
std::optional<std::uint64_t> payload_bytes(std::uint32_t rows, std::uint32_t cols,
                                           std::uint32_t dim, std::uint32_t flags) {
  std::uint64_t cells = 0, values = 0, total = 0;
  if (__builtin_mul_overflow(std::uint64_t{rows}, std::uint64_t{cols}, &cells)) return {};
  if (__builtin_mul_overflow(cells, std::uint64_t{dim}, &values)) return {};
  if (flags & kGridFlagAttention) {
    if (__builtin_add_overflow(values, cells, &values)) return {};
  }
  if (flags & kGridFlagCls) {
    if (__builtin_add_overflow(values, std::uint64_t{dim}, &values)) return {};
  }
  if (__builtin_mul_overflow(values, std::uint64_t{4}, &total)) return {};
  if (total > std::numeric_limits<std::size_t>::max() / 2) return {};
  return total;
}

void read_floats(ByteReader& in, std::vector<float>& out, std::size_t n) {
  out.resize(n);
  const std::string_view raw = in.take_bytes(n * sizeof(float));
  std::memcpy(out.data(), raw.data(), raw.size());
}

}  // namespace

void validate(const PatchGrid& grid) {
  if (grid.rows == 0 || grid.cols == 0 || grid.dim == 0) {
    throw Error(ErrorCode::BadDims, "grid dimensions must be positive");
  }
  const std::size_t cells = grid.cell_count();
  if (grid.embeddings.size() != cells * grid.dim) {
    throw Error(ErrorCode::BadDims, "embedding buffer does not match dimensions");
  }
  check_finite(grid.embeddings, "embedding");
  for (std::size_t c = 0; c < cells; ++c) {
    double sq = 0.0;
    for (float v : grid.patch(c)) sq += double{v} * v;
    if (!(sq > 0.0)) {
      throw Error(ErrorCode::ZeroNormPatch,
                  "patch " + std::to_string(c) + " has zero norm");
    }
  }
  if (grid.attention) {
    if (grid.attention->size() != cells) {
      throw Error(ErrorCode::BadDims, "attention plane does not match grid");
    }
    check_finite(*grid.attention, "attention");
    for (float a : *grid.attention) {
      if (a < 0.0f || a > 1.0f) {
        throw Error(ErrorCode::AttentionOutOfRange, "attention outside [0, 1]");
      }
    }
  }
  if (grid.cls) {
    if (grid.cls->size() != grid.dim) {
      throw Error(ErrorCode::BadDims, "cls vector does not match dim");
    }
    check_finite(*grid.cls, "cls");
  }
}

std::vector<std::uint8_t> encode_grid(const PatchGrid& grid) {
  validate(grid);
  ByteWriter out;
  out.put_bytes(kMagic);
  out.put_u32(grid.rows);
  out.put_u32(grid.cols);
  out.put_u32(grid.dim);
  std::uint32_t flags = 0;
  if (grid.attention) flags |= kGridFlagAttention;
  if (grid.cls) flags |= kGridFlagCls;
  out.put_u32(flags);
  for (float v : grid.embeddings) out.put_f32(v);
  if (grid.attention) {
    for (float v : *grid.attention) out.put_f32(v);
  }
  if (grid.cls) {
    for (float v : *grid.cls) out.put_f32(v);
  }
  return std::move(out.bytes());
}

PatchGrid decode_grid(std::span<const std::uint8_t> bytes, std::string frame_id) {
  ByteReader in(bytes);
  if (!in.has(kMagic.size())) throw Error(ErrorCode::Truncated, "missing magic");
  if (in.take_bytes(kMagic.size()) != kMagic) {
    throw Error(ErrorCode::BadMagic, "not a DVKEMB01 file");
  }
  PatchGrid grid;
  grid.frame_id = std::move(frame_id);
  grid.rows = in.u32();
  grid.cols = in.u32();
  grid.dim = in.u32();
  const std::uint32_t flags = in.u32();
  if (grid.rows == 0 || grid.cols == 0 || grid.dim == 0) {
    throw Error(ErrorCode::BadDims, "zero grid dimension");
  }
  if (flags & ~(kGridFlagAttention | kGridFlagCls)) {
    throw Error(ErrorCode::BadFlags, "unknown flag bits");
  }
  const auto expected = payload_bytes(grid.rows, grid.cols, grid.dim, flags);
  if (!expected) throw Error(ErrorCode::BadDims, "grid size overflows");
  if (in.remaining() < *expected) throw Error(ErrorCode::Truncated, "payload truncated");
  if (in.remaining() > *expected) throw Error(ErrorCode::TrailingBytes, "bytes after payload");

  const std::size_t cells = grid.cell_count();
  read_floats(in, grid.embeddings, cells * grid.dim);
  if (flags & kGridFlagAttention) {
    grid.attention.emplace();
    read_floats(in, *grid.attention, cells);
  }
  if (flags & kGridFlagCls) {
    grid.cls.emplace();
    read_floats(in, *grid.cls, grid.dim);
  }
  validate(grid);
  return grid;
}

void write_grid(const PatchGrid& grid, const std::filesystem::path& path) {
  atomic_write(path, encode_grid(grid));
}

PatchGrid read_grid(const std::filesystem::path& path) {
  return decode_grid(read_file_bytes(path), path.stem().string());
}

}  // namespace dvk
