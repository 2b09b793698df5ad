#include "dvk/reference_set.hpp"

#include <cmath>
#include <string>
#include <string_view>

#include "dvk/error.hpp"
#include "dvk/file_util.hpp"

namespace dvk {
namespace {
constexpr std::string_view kMagic = "DVKREF01";
}  // namespace

void validate(const ReferenceSet& refs) {
  if (refs.dim == 0) throw Error(ErrorCode::BadDims, "reference dim must be positive");
  const auto& cfg = refs.config;
  if (cfg.keep < 1 || cfg.keep > cfg.clusters) {
    throw Error(ErrorCode::BadConfig, "require 1 <= m <= M");
  }
  if (!std::isfinite(cfg.tau) || cfg.tau < 0.0f || cfg.tau > 1.0f) {
    throw Error(ErrorCode::BadConfig, "tau outside [0, 1]");
  }
  if (refs.votes.size() != cfg.keep ||
      refs.centroids.size() != std::size_t{cfg.keep} * refs.dim) {
    throw Error(ErrorCode::BadDims, "centroid count does not equal m");
  }
  for (std::size_t k = 1; k < refs.votes.size(); ++k) {
    if (refs.votes[k] > refs.votes[k - 1]) {
      throw Error(ErrorCode::UnsortedVotes, "votes must be non-increasing");
    }
  }
  for (std::size_t k = 0; k < refs.size(); ++k) {
    double sq = 0.0;
    for (float v : refs.centroid(k)) {
      if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteValue, "non-finite centroid");
      sq += double{v} * v;
    }
    if (!(sq > 0.0)) {
      throw Error(ErrorCode::ZeroNorm, "centroid " + std::to_string(k) + " has zero norm");
    }
  }
}

std::vector<std::uint8_t> encode_refs(const ReferenceSet& refs) {
  validate(refs);
  ByteWriter out;
  out.put_bytes(kMagic);
  out.put_u32(refs.dim);
  out.put_u32(refs.config.keep);
  out.put_u32(refs.config.clusters);
  out.put_f32(refs.config.tau);
  out.put_u64(refs.config.seed);
  for (float v : refs.centroids) out.put_f32(v);
  for (std::uint32_t v : refs.votes) out.put_u32(v);
  return std::move(out.bytes());
}

ReferenceSet decode_refs(std::span<const std::uint8_t> bytes) {
  ByteReader in(bytes);
  if (!in.has(kMagic.size())) throw Error(ErrorCode::Truncated, "missing magic");
  if (in.take_bytes(kMagic.size()) != kMagic) {
    throw Error(ErrorCode::BadMagic, "not a DVKREF01 file");
  }
  ReferenceSet refs;
  refs.dim = in.u32();
  refs.config.keep = in.u32();
  refs.config.clusters = in.u32();
  refs.config.tau = in.f32();
  refs.config.seed = in.u64();
  if (refs.dim == 0) throw Error(ErrorCode::BadDims, "zero dim");
  if (refs.config.keep < 1 || refs.config.keep > refs.config.clusters) {
    throw Error(ErrorCode::BadConfig, "require 1 <= m <= M");
  }
  const std::uint64_t values = std::uint64_t{refs.config.keep} * refs.dim;
  const std::uint64_t expected = values * 4 + std::uint64_t{refs.config.keep} * 4;
  if (in.remaining() < expected) throw Error(ErrorCode::Truncated, "payload truncated");
  if (in.remaining() > expected) throw Error(ErrorCode::TrailingBytes, "bytes after payload");
  refs.centroids.resize(values);
  for (auto& v : refs.centroids) v = in.f32();
  refs.votes.resize(refs.config.keep);
  for (auto& v : refs.votes) v = in.u32();
  validate(refs);
  return refs;
}

void write_refs(const ReferenceSet& refs, const std::filesystem::path& path) {
  atomic_write(path, encode_refs(refs));
}

ReferenceSet read_refs(const std::filesystem::path& path) {
  return decode_refs(read_file_bytes(path));
}

}  // namespace dvk
