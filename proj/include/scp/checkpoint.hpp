#pragma once

// SCPH head checkpoint, little-endian:
//
//   "SCPH" | version u32 = 1 | activation u8 | dims 6 x u32
//   | parameters f32, layer by layer: weight (out x in, row-major), then bias
//   | zero or more sections: tag[4] | payload length u64 | payload
//
// Sections (each at most once):
//   "ADAM"  step_count u64 | beta1 f64 | beta2 f64 | eps f64
//           | first moments f32 | second moments f32   (parameter layout)
//   "CONF"  config_hash u64 | l2_normalize u8 | head_seed u64

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>

#include "scp/binary_io.hpp"
#include "scp/error.hpp"
#include "scp/head.hpp"
#include "scp/optim.hpp"

namespace scp {

inline constexpr std::uint32_t kScphVersion = 1;

struct Checkpoint {
  ClusterHead<float> head;
  std::optional<AdamState<float>> adam;
  std::uint64_t config_hash = 0;
  bool l2_normalize = false;
};

namespace detail {

inline void write_params(io::ByteWriter& w, const ParamSet<float>& p) {
  for (std::size_t b = 0; b < ParamSet<float>::kNumBlocks; ++b) w.f32_array(p.block(b));
}

inline void read_params(io::ByteReader& r, ParamSet<float>& p, std::string_view what) {
  for (std::size_t b = 0; b < ParamSet<float>::kNumBlocks; ++b) {
    r.f32_array(p.block(b), what);
  }
}

}  // namespace detail

inline std::vector<char> encode_scph(const Checkpoint& ck) {
  io::ByteWriter w;
  w.magic("SCPH");
  w.uint<std::uint32_t>(kScphVersion);
  w.uint<std::uint8_t>(static_cast<std::uint8_t>(ck.head.activation()));
  for (auto d : ck.head.dims()) w.uint<std::uint32_t>(static_cast<std::uint32_t>(d));
  detail::write_params(w, ck.head.params());

  if (ck.adam) {
    io::ByteWriter s;
    s.uint<std::uint64_t>(ck.adam->step_count);
    s.f64(ck.adam->hyper.beta1);
    s.f64(ck.adam->hyper.beta2);
    s.f64(ck.adam->hyper.eps);
    detail::write_params(s, ck.adam->m);
    detail::write_params(s, ck.adam->v);
    w.magic("ADAM");
    w.uint<std::uint64_t>(s.size());
    w.bytes(s.buffer().data(), s.size());
  }
  io::ByteWriter c;
  c.uint<std::uint64_t>(ck.config_hash);
  c.uint<std::uint8_t>(ck.l2_normalize ? 1 : 0);
  c.uint<std::uint64_t>(ck.head.seed());
  w.magic("CONF");
  w.uint<std::uint64_t>(c.size());
  w.bytes(c.buffer().data(), c.size());
  return w.buffer();
}

inline void save_checkpoint(const Checkpoint& ck, const std::filesystem::path& path) {
  io::write_file(path, encode_scph(ck));
}

inline Checkpoint decode_scph(std::span<const char> bytes, const std::string& source) {
  io::ByteReader r(bytes, source);
  r.expect_magic("SCPH");
  const auto version = r.uint<std::uint32_t>("version");
  if (version != kScphVersion) {
    throw FormatError(source + ": unsupported SCPH version " + std::to_string(version) +
                      " at byte offset 4 (expected " + std::to_string(kScphVersion) + ")");
  }
  const auto tag_offset = r.offset();
  const auto tag = r.uint<std::uint8_t>("activation tag");
  Activation act{};
  try {
    act = activation_from_tag(tag);
  } catch (const ConfigError& e) {
    throw FormatError(source + ": " + e.what() + " at byte offset " + std::to_string(tag_offset));
  }
  LayerDims dims{};
  for (auto& d : dims) {
    d = r.uint<std::uint32_t>("layer dims");
    if (d == 0) throw FormatError(source + ": zero layer width in header");
  }
  if (dims.back() < 2) throw FormatError(source + ": checkpoint has fewer than 2 clusters");
  r.require(parameter_count(dims) * sizeof(float), "parameter array");
  auto params = ParamSet<float>::zeros(dims);
  detail::read_params(r, params, "parameter array");
  if (!params.all_finite()) throw DataError(source + ": non-finite parameter in checkpoint");

  std::optional<AdamState<float>> adam;
  std::uint64_t config_hash = 0;
  bool l2 = false;
  std::uint64_t head_seed = 0;
  std::set<std::string> seen;
  while (r.remaining() > 0) {
    const auto section_offset = r.offset();
    const std::string stag = r.tag4("section tag");
    const auto length = r.uint<std::uint64_t>("section length");
    if (!seen.insert(stag).second) {
      throw FormatError(source + ": duplicate section '" + stag + "' at byte offset " +
                        std::to_string(section_offset));
    }
    r.require(length, "section '" + stag + "'");
    const auto start = r.offset();
    if (stag == "ADAM") {
      AdamState<float> st = AdamState<float>::for_dims(dims);
      st.step_count = r.uint<std::uint64_t>("adam step count");
      st.hyper.beta1 = r.f64("adam beta1");
      st.hyper.beta2 = r.f64("adam beta2");
      st.hyper.eps = r.f64("adam eps");
      detail::read_params(r, st.m, "adam first moments");
      detail::read_params(r, st.v, "adam second moments");
      adam = std::move(st);
    } else if (stag == "CONF") {
      config_hash = r.uint<std::uint64_t>("config hash");
      l2 = r.uint<std::uint8_t>("l2 flag") != 0;
      head_seed = r.uint<std::uint64_t>("head seed");
    } else {
      throw FormatError(source + ": unknown section '" + stag + "' at byte offset " +
                        std::to_string(section_offset));
    }
    if (r.offset() - start != length) {
      throw FormatError(source + ": section '" + stag + "' declares " + std::to_string(length) +
                        " bytes but holds " + std::to_string(r.offset() - start));
    }
  }
  return Checkpoint{ClusterHead<float>(dims, act, head_seed, std::move(params)), std::move(adam),
                    config_hash, l2};
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
  const auto bytes = io::read_file(path);
  return decode_scph(bytes, path.string());
}

}  // namespace scp
