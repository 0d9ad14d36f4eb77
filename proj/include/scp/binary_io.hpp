#pragma once

// Little-endian byte encoding shared by the SCPF, SCPH and SCPL formats.

#include <bit>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "scp/error.hpp"

namespace scp::io {

class ByteWriter {
 public:
  void bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const char*>(data);
    buf_.insert(buf_.end(), p, p + n);
  }

  void magic(std::string_view tag) { bytes(tag.data(), tag.size()); }

  template <class U>
    requires std::is_unsigned_v<U>
  void uint(U value) {
    for (std::size_t i = 0; i < sizeof(U); ++i) {
      buf_.push_back(static_cast<char>((value >> (8 * i)) & 0xFFu));
    }
  }

  void f32(float value) { uint(std::bit_cast<std::uint32_t>(value)); }
  void f64(double value) { uint(std::bit_cast<std::uint64_t>(value)); }

  void f32_array(std::span<const float> values) {
    if constexpr (std::endian::native == std::endian::little) {
      bytes(values.data(), values.size_bytes());
    } else {
      for (float v : values) f32(v);
    }
  }

  template <class U>
  void u32_array(std::span<const U> values) {
    for (auto v : values) uint(static_cast<std::uint32_t>(v));
  }

  std::size_t size() const { return buf_.size(); }
  const std::vector<char>& buffer() const { return buf_; }

  void write_file(const std::filesystem::path& path) const;

 private:
  std::vector<char> buf_;
};

inline void write_file(const std::filesystem::path& path, std::span<const char> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

inline void ByteWriter::write_file(const std::filesystem::path& path) const {
  io::write_file(path, buf_);
}

inline std::vector<char> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  const auto size = static_cast<std::size_t>(in.tellg());
  std::vector<char> buf(size);
  in.seekg(0);
  if (size > 0 && !in.read(buf.data(), static_cast<std::streamsize>(size))) {
    throw IoError("read failed for '" + path.string() + "'");
  }
  return buf;
}

/// Sequential reader over an in-memory file. Every short read raises a
/// FormatError naming the field, the byte offset, and expected vs actual length.
class ByteReader {
 public:
  ByteReader(std::span<const char> data, std::string source)
      : data_(data), source_(std::move(source)) {}

  std::size_t offset() const { return pos_; }
  std::size_t remaining() const { return data_.size() - pos_; }
  const std::string& source() const { return source_; }

  void require(std::size_t n, std::string_view what) const {
    if (remaining() < n) {
      throw FormatError(source_ + ": truncated " + std::string(what) + " at byte offset " +
                        std::to_string(pos_) + ": expected " + std::to_string(n) +
                        " bytes, found " + std::to_string(remaining()));
    }
  }

  void expect_magic(std::string_view tag) {
    require(tag.size(), "magic");
    if (std::memcmp(data_.data() + pos_, tag.data(), tag.size()) != 0) {
      throw FormatError(source_ + ": bad magic at byte offset " + std::to_string(pos_) +
                        ": expected '" + std::string(tag) + "', found '" +
                        printable(std::string(data_.data() + pos_, tag.size())) + "'");
    }
    pos_ += tag.size();
  }

  std::string tag4(std::string_view what) {
    require(4, what);
    std::string out(data_.data() + pos_, 4);
    pos_ += 4;
    return out;
  }

  template <class U>
    requires std::is_unsigned_v<U>
  U uint(std::string_view what) {
    require(sizeof(U), what);
    U value = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) {
      value |= static_cast<U>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    }
    pos_ += sizeof(U);
    return value;
  }

  float f32(std::string_view what) { return std::bit_cast<float>(uint<std::uint32_t>(what)); }
  double f64(std::string_view what) { return std::bit_cast<double>(uint<std::uint64_t>(what)); }

  void f32_array(std::span<float> out, std::string_view what) {
    require(out.size_bytes(), what);
    if constexpr (std::endian::native == std::endian::little) {
      std::memcpy(out.data(), data_.data() + pos_, out.size_bytes());
      pos_ += out.size_bytes();
    } else {
      for (auto& v : out) v = f32(what);
    }
  }

  void expect_end() const {
    if (remaining() != 0) {
      throw FormatError(source_ + ": " + std::to_string(remaining()) +
                        " trailing bytes after byte offset " + std::to_string(pos_));
    }
  }

 private:
  static std::string printable(std::string s) {
    for (auto& c : s) {
      if (static_cast<unsigned char>(c) < 0x20 || static_cast<unsigned char>(c) > 0x7e) c = '?';
    }
    return s;
  }

  std::span<const char> data_;
  std::string source_;
  std::size_t pos_ = 0;
};

}  // namespace scp::io
