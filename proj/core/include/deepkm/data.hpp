#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "deepkm/common.hpp"

namespace deepkm {

struct Dataset {
  std::string name;
  Matrix features;  // N x m
  std::optional<std::vector<int>> labels;

  Index size() const { return features.rows(); }
  Index dim() const { return features.cols(); }
  bool has_labels() const { return labels.has_value(); }

  /// Throws InputError on non-finite features or malformed labels.
  void validate() const;
};

/// Reads an IDX image file (magic 0x00000803, unsigned bytes, rank 3) and an
/// optional IDX label file (0x00000801). Pixels are scaled to [0, 1] and each
/// image is flattened row-major. Gzip-compressed files are detected by their
/// header and inflated transparently.
Dataset load_idx(const std::filesystem::path& images,
                 const std::optional<std::filesystem::path>& labels = std::nullopt);

/// Row-wise concatenation, e.g. MNIST train + test.
Dataset concatenate(const std::vector<Dataset>& parts, std::string name);

/// Writes features quantized to bytes (round(x * 255), clamped) and labels.
/// Files ending in ".gz" are written gzip-compressed.
void write_idx(const Dataset& dataset, const std::filesystem::path& images,
               const std::optional<std::filesystem::path>& labels, Index height, Index width);

struct DelimitedOptions {
  char delimiter = ',';
  bool skip_header = false;
  /// Column holding integer labels; negative values count from the end (-1 = last).
  std::optional<int> label_column;
  /// Scale every feature column to [0, 1] by its observed min and max.
  bool minmax = false;
};

Dataset load_delimited(const std::filesystem::path& path, const DelimitedOptions& options = {});

/// Parses already-read text; `source` is only used in error messages.
Dataset parse_delimited(const std::string& text, const DelimitedOptions& options,
                        const std::string& source = "<memory>");

struct BlobsOptions {
  int n_per_cluster = 500;
  int k = 4;
  int dim = 50;
  /// Distance between cluster centers (exact for k <= dim, a minimum otherwise).
  double separation = 6.0;
  double noise_sigma = 1.0;
  std::uint64_t seed = 0;
};

/// Isotropic Gaussian clusters. When k <= dim the centers form a randomly
/// rotated regular simplex, so every pair is exactly `separation` apart;
/// otherwise centers are rejection-sampled to be at least `separation` apart.
/// Rows are interleaved by cluster so that any prefix is roughly balanced.
Dataset make_blobs(const BlobsOptions& options);

/// Deterministic random subset of `count` rows (order of the kept rows preserved).
Dataset subsample(const Dataset& dataset, Index count, std::uint64_t seed);

/// Scales each feature column to [0, 1]; constant columns become 0.
void minmax_normalize(Matrix& features);

}  // namespace deepkm
