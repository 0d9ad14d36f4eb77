#pragma once

// Frozen backbone embeddings: N items x V views x D dims, float32, with
// optional ground-truth labels. Stored on disk in the SCPF format:
//
//   "SCPF" | version u32 = 1 | flags u32 | n_items u64 | n_views u32 | dim u32
//   | f32[N*V*D] (item-major, then view, then dim)
//   | if flags.bit0: n_classes u32 | u32[N] labels
//
// flags: bit0 labels present, bit1 l2-normalized, bit2 view 0 is clean.
// All integers little-endian.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "scp/binary_io.hpp"
#include "scp/error.hpp"
#include "scp/linalg.hpp"

namespace scp {

inline constexpr std::uint32_t kScpfVersion = 1;

namespace scpf_flags {
inline constexpr std::uint32_t kLabels = 1u << 0;
inline constexpr std::uint32_t kL2Normalized = 1u << 1;
inline constexpr std::uint32_t kView0Clean = 1u << 2;
inline constexpr std::uint32_t kKnown = kLabels | kL2Normalized | kView0Clean;
}  // namespace scpf_flags

struct EmbeddingDataset {
  std::size_t n_items = 0;
  std::size_t n_views = 0;
  std::size_t dim = 0;
  std::vector<float> features;  // n_items * n_views * dim
  std::optional<std::vector<std::uint32_t>> labels;
  std::uint32_t n_classes = 0;
  bool l2_normalized = false;
  bool view0_is_clean = false;

  std::span<const float> view(std::size_t item, std::size_t v) const {
    return {features.data() + (item * n_views + v) * dim, dim};
  }
  std::span<float> view(std::size_t item, std::size_t v) {
    return {features.data() + (item * n_views + v) * dim, dim};
  }

  bool has_labels() const { return labels.has_value(); }

  /// N x D copy of one view for every item.
  RowMatrix<float> view_matrix(std::size_t v) const {
    RowMatrix<float> out(static_cast<Eigen::Index>(n_items), static_cast<Eigen::Index>(dim));
    for (std::size_t i = 0; i < n_items; ++i) {
      auto src = view(i, v);
      std::copy(src.begin(), src.end(), out.row(static_cast<Eigen::Index>(i)).data());
    }
    return out;
  }

  bool operator==(const EmbeddingDataset&) const = default;
};

struct LoadReport {
  std::string path;
  std::uint32_t version = 0;
  std::uint32_t flags = 0;
  std::size_t n_items = 0;
  std::size_t n_views = 0;
  std::size_t dim = 0;
  bool labels_present = false;
  std::uint32_t n_classes = 0;
  bool l2_normalized = false;
  bool view0_is_clean = false;

  std::string to_string() const {
    std::ostringstream os;
    os << "path=" << path << "\nversion=" << version << "\nflags=" << flags
       << "\nn_items=" << n_items << "\nn_views=" << n_views << "\ndim=" << dim
       << "\nlabels=" << (labels_present ? "yes" : "no") << "\nn_classes=" << n_classes
       << "\nl2_normalized=" << (l2_normalized ? "yes" : "no")
       << "\nview0_is_clean=" << (view0_is_clean ? "yes" : "no") << '\n';
    return os.str();
  }
};

/// Checks every dataset invariant; throws DataError on the first violation.
inline void validate(const EmbeddingDataset& ds) {
  if (ds.n_views == 0) throw DataError("dataset has zero views");
  if (ds.dim == 0) throw DataError("dataset has zero dimension");
  if (ds.features.size() != ds.n_items * ds.n_views * ds.dim) {
    throw DataError("feature array length " + std::to_string(ds.features.size()) +
                    " does not match N*V*D = " + std::to_string(ds.n_items * ds.n_views * ds.dim));
  }
  for (std::size_t j = 0; j < ds.features.size(); ++j) {
    if (!std::isfinite(ds.features[j])) {
      const std::size_t item = j / (ds.n_views * ds.dim);
      const std::size_t v = (j / ds.dim) % ds.n_views;
      throw DataError("non-finite feature at item " + std::to_string(item) + ", view " +
                      std::to_string(v) + ", dim " + std::to_string(j % ds.dim));
    }
  }
  if (ds.labels) {
    if (ds.labels->size() != ds.n_items) {
      throw DataError("label array has length " + std::to_string(ds.labels->size()) +
                      ", expected " + std::to_string(ds.n_items));
    }
    for (std::size_t i = 0; i < ds.n_items; ++i) {
      if ((*ds.labels)[i] >= ds.n_classes) {
        throw DataError("label " + std::to_string((*ds.labels)[i]) + " at item " +
                        std::to_string(i) + " is outside [0, " + std::to_string(ds.n_classes) + ")");
      }
    }
  }
  if (ds.l2_normalized) {
    for (std::size_t i = 0; i < ds.n_items; ++i) {
      for (std::size_t v = 0; v < ds.n_views; ++v) {
        double sq = 0.0;
        for (float x : ds.view(i, v)) sq += static_cast<double>(x) * x;
        if (std::abs(std::sqrt(sq) - 1.0) > 1e-4) {
          throw DataError("dataset is flagged l2-normalized but item " + std::to_string(i) +
                          ", view " + std::to_string(v) + " has norm " + std::to_string(std::sqrt(sq)));
        }
      }
    }
  }
}

inline std::vector<char> encode_scpf(const EmbeddingDataset& ds) {
  io::ByteWriter w;
  w.magic("SCPF");
  w.uint<std::uint32_t>(kScpfVersion);
  std::uint32_t flags = 0;
  if (ds.labels) flags |= scpf_flags::kLabels;
  if (ds.l2_normalized) flags |= scpf_flags::kL2Normalized;
  if (ds.view0_is_clean) flags |= scpf_flags::kView0Clean;
  w.uint<std::uint32_t>(flags);
  w.uint<std::uint64_t>(ds.n_items);
  w.uint<std::uint32_t>(static_cast<std::uint32_t>(ds.n_views));
  w.uint<std::uint32_t>(static_cast<std::uint32_t>(ds.dim));
  w.f32_array(ds.features);
  if (ds.labels) {
    w.uint<std::uint32_t>(ds.n_classes);
    w.u32_array(std::span<const std::uint32_t>(*ds.labels));
  }
  return w.buffer();
}

inline void save_scpf(const EmbeddingDataset& ds, const std::filesystem::path& path) {
  validate(ds);
  io::write_file(path, encode_scpf(ds));
}

inline EmbeddingDataset decode_scpf(std::span<const char> bytes, const std::string& source,
                                    LoadReport* report = nullptr) {
  io::ByteReader r(bytes, source);
  r.expect_magic("SCPF");
  const auto version_offset = r.offset();
  const auto version = r.uint<std::uint32_t>("version");
  if (version != kScpfVersion) {
    throw FormatError(source + ": unsupported SCPF version " + std::to_string(version) +
                      " at byte offset " + std::to_string(version_offset) + " (expected " +
                      std::to_string(kScpfVersion) + ")");
  }
  const auto flags_offset = r.offset();
  const auto flags = r.uint<std::uint32_t>("flags");
  if ((flags & ~scpf_flags::kKnown) != 0) {
    throw FormatError(source + ": unknown flag bits " + std::to_string(flags & ~scpf_flags::kKnown) +
                      " at byte offset " + std::to_string(flags_offset));
  }
  EmbeddingDataset ds;
  ds.n_items = static_cast<std::size_t>(r.uint<std::uint64_t>("n_items"));
  ds.n_views = r.uint<std::uint32_t>("n_views");
  ds.dim = r.uint<std::uint32_t>("dim");
  ds.l2_normalized = (flags & scpf_flags::kL2Normalized) != 0;
  ds.view0_is_clean = (flags & scpf_flags::kView0Clean) != 0;
  if (ds.n_views == 0 || ds.dim == 0) {
    throw FormatError(source + ": n_views and dim must be nonzero");
  }

  const std::size_t count = ds.n_items * ds.n_views * ds.dim;
  if ((ds.n_items != 0 && count / ds.n_items / ds.n_views != ds.dim) ||
      count > SIZE_MAX / sizeof(float)) {
    throw FormatError(source + ": header dimensions overflow the feature array size");
  }
  r.require(count * sizeof(float), "feature array");
  ds.features.resize(count);
  r.f32_array(ds.features, "feature array");

  if ((flags & scpf_flags::kLabels) != 0) {
    ds.n_classes = r.uint<std::uint32_t>("n_classes");
    r.require(ds.n_items * sizeof(std::uint32_t), "label array");
    std::vector<std::uint32_t> labels(ds.n_items);
    for (auto& l : labels) l = r.uint<std::uint32_t>("label array");
    ds.labels = std::move(labels);
  }
  r.expect_end();
  validate(ds);

  if (report) {
    *report = LoadReport{source,          version,         flags,          ds.n_items,
                         ds.n_views,      ds.dim,          ds.has_labels(), ds.n_classes,
                         ds.l2_normalized, ds.view0_is_clean};
  }
  return ds;
}

inline EmbeddingDataset load_scpf(const std::filesystem::path& path, LoadReport* report = nullptr) {
  const auto bytes = io::read_file(path);
  return decode_scpf(bytes, path.string(), report);
}

/// Scales every view vector to unit L2 norm (zero vectors are left as is).
inline void l2_normalize(EmbeddingDataset& ds) {
  for (std::size_t i = 0; i < ds.n_items; ++i) {
    for (std::size_t v = 0; v < ds.n_views; ++v) {
      auto x = ds.view(i, v);
      double sq = 0.0;
      for (float f : x) sq += static_cast<double>(f) * f;
      if (sq == 0.0) continue;
      const double inv = 1.0 / std::sqrt(sq);
      for (auto& f : x) f = static_cast<float>(f * inv);
    }
  }
  ds.l2_normalized = true;
}

/// Index-wise concatenation of two aligned datasets (the MIX variant).
inline EmbeddingDataset concat_features(const EmbeddingDataset& a, const EmbeddingDataset& b) {
  if (a.n_items != b.n_items) {
    throw AlignmentError("cannot concatenate datasets with different item counts (" +
                         std::to_string(a.n_items) + " vs " + std::to_string(b.n_items) + ")");
  }
  if (a.n_views != b.n_views) {
    throw AlignmentError("cannot concatenate datasets with different view counts (" +
                         std::to_string(a.n_views) + " vs " + std::to_string(b.n_views) + ")");
  }
  if (a.labels && b.labels) {
    for (std::size_t i = 0; i < a.n_items; ++i) {
      if ((*a.labels)[i] != (*b.labels)[i]) {
        throw AlignmentError("label arrays disagree at item " + std::to_string(i) +
                             "; datasets are not aligned");
      }
    }
  }
  EmbeddingDataset out;
  out.n_items = a.n_items;
  out.n_views = a.n_views;
  out.dim = a.dim + b.dim;
  out.features.resize(out.n_items * out.n_views * out.dim);
  for (std::size_t i = 0; i < out.n_items; ++i) {
    for (std::size_t v = 0; v < out.n_views; ++v) {
      auto dst = out.view(i, v);
      auto xa = a.view(i, v);
      auto xb = b.view(i, v);
      std::copy(xa.begin(), xa.end(), dst.begin());
      std::copy(xb.begin(), xb.end(), dst.begin() + static_cast<std::ptrdiff_t>(a.dim));
    }
  }
  if (a.labels) {
    out.labels = a.labels;
    out.n_classes = a.n_classes;
  } else if (b.labels) {
    out.labels = b.labels;
    out.n_classes = b.n_classes;
  }
  out.view0_is_clean = a.view0_is_clean && b.view0_is_clean;
  out.l2_normalized = false;
  return out;
}

}  // namespace scp
