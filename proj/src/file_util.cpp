#include "dvk/file_util.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <system_error>
#include <unistd.h>

#include "dvk/error.hpp"

namespace dvk {
namespace fs = std::filesystem;

static_assert(std::endian::native == std::endian::little,
              "binary formats assume a little-endian host");

std::vector<std::uint8_t> read_file_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

void atomic_write(const fs::path& path, std::span<const std::uint8_t> bytes) {
  const fs::path tmp =
      path.string() + ".tmp." + std::to_string(static_cast<long>(::getpid()));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot open " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) {
      std::error_code ignored;
      fs::remove(tmp, ignored);
      throw Error(ErrorCode::Io, "write failed for " + tmp.string());
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw Error(ErrorCode::Io, "rename failed for " + path.string());
  }
}

void atomic_write_text(const fs::path& path, std::string_view text) {
  atomic_write(path, std::span<const std::uint8_t>(
                         reinterpret_cast<const std::uint8_t*>(text.data()),
                         text.size()));
}

StagingDir::StagingDir(fs::path destination)
    : destination_(std::move(destination)) {
  const fs::path parent = destination_.has_parent_path()
                              ? destination_.parent_path()
                              : fs::path(".");
  std::error_code ec;
  fs::create_directories(parent, ec);
  staging_ = parent / ("." + destination_.filename().string() + ".staging." +
                       std::to_string(static_cast<long>(::getpid())));
  fs::remove_all(staging_, ec);
  if (!fs::create_directories(staging_, ec) || ec) {
    throw Error(ErrorCode::Io, "cannot create " + staging_.string());
  }
}

StagingDir::~StagingDir() {
  if (!committed_) {
    std::error_code ec;
    fs::remove_all(staging_, ec);
  }
}

void StagingDir::commit() {
  std::error_code ec;
  if (!fs::exists(destination_)) {
    fs::rename(staging_, destination_, ec);
    if (ec) throw Error(ErrorCode::Io, "cannot publish " + destination_.string());
    committed_ = true;
    return;
  }
  for (const auto& entry : fs::directory_iterator(staging_)) {
    const fs::path target = destination_ / entry.path().filename();
    if (fs::is_directory(target) && entry.is_directory()) fs::remove_all(target, ec);
    fs::rename(entry.path(), target, ec);
    if (ec) throw Error(ErrorCode::Io, "cannot publish " + target.string());
  }
  fs::remove_all(staging_, ec);
  committed_ = true;
}

void ByteWriter::put_bytes(std::string_view s) {
  out_.insert(out_.end(), s.begin(), s.end());
}

void ByteWriter::put_u8(std::uint8_t v) { out_.push_back(v); }

void ByteWriter::put_u32(std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void ByteWriter::put_u64(std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void ByteWriter::put_f32(float v) { put_u32(std::bit_cast<std::uint32_t>(v)); }

std::string_view ByteReader::take_bytes(std::size_t n) {
  if (!has(n)) throw Error(ErrorCode::Truncated, "unexpected end of data");
  std::string_view s(reinterpret_cast<const char*>(data_.data() + pos_), n);
  pos_ += n;
  return s;
}

std::uint8_t ByteReader::u8() {
  if (!has(1)) throw Error(ErrorCode::Truncated, "unexpected end of data");
  return data_[pos_++];
}

std::uint32_t ByteReader::u32() {
  if (!has(4)) throw Error(ErrorCode::Truncated, "unexpected end of data");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(data_[pos_ + i]) << (8 * i);
  pos_ += 4;
  return v;
}

std::uint64_t ByteReader::u64() {
  if (!has(8)) throw Error(ErrorCode::Truncated, "unexpected end of data");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(data_[pos_ + i]) << (8 * i);
  pos_ += 8;
  return v;
}

float ByteReader::f32() { return std::bit_cast<float>(u32()); }

}  // namespace dvk
