#pragma once

// SCPL logit export: "SCPL" | n_items u64 | K u32 | f32[N*K] row-major,
// little-endian. Rows are pre-softmax head outputs on the clean view.

#include <cstdint>
#include <filesystem>
#include <string>

#include "scp/binary_io.hpp"
#include "scp/error.hpp"
#include "scp/linalg.hpp"

namespace scp {

inline std::vector<char> encode_scpl(const RowMatrix<float>& logits) {
  io::ByteWriter w;
  w.magic("SCPL");
  w.uint<std::uint64_t>(static_cast<std::uint64_t>(logits.rows()));
  w.uint<std::uint32_t>(static_cast<std::uint32_t>(logits.cols()));
  w.f32_array({logits.data(), static_cast<std::size_t>(logits.size())});
  return w.buffer();
}

inline void save_logits(const RowMatrix<float>& logits, const std::filesystem::path& path) {
  try {
    io::write_file(path, encode_scpl(logits));
  } catch (const IoError& e) {
    throw IoError(std::string("logit export failed: ") + e.what());
  }
}

inline RowMatrix<float> decode_scpl(std::span<const char> bytes, const std::string& source) {
  io::ByteReader r(bytes, source);
  r.expect_magic("SCPL");
  const auto n = r.uint<std::uint64_t>("n_items");
  const auto k = r.uint<std::uint32_t>("n_clusters");
  if (k != 0 && n > SIZE_MAX / sizeof(float) / k) {
    throw FormatError(source + ": header dimensions overflow the logit array size");
  }
  r.require(static_cast<std::size_t>(n) * k * sizeof(float), "logit array");
  RowMatrix<float> out(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k));
  r.f32_array({out.data(), static_cast<std::size_t>(out.size())}, "logit array");
  r.expect_end();
  if (!out.allFinite()) throw DataError(source + ": non-finite logit");
  return out;
}

inline RowMatrix<float> load_logits(const std::filesystem::path& path) {
  const auto bytes = io::read_file(path);
  return decode_scpl(bytes, path.string());
}

}  // namespace scp
