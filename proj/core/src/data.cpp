#include "deepkm/data.hpp"

#include <Eigen/QR>
#include <zlib.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

namespace deepkm {
namespace {

constexpr std::uint32_t kImageMagic = 0x00000803;
constexpr std::uint32_t kLabelMagic = 0x00000801;

std::vector<unsigned char> read_all(const std::filesystem::path& path) {
  gzFile file = gzopen(path.string().c_str(), "rb");
  if (file == nullptr) {
    throw IoError("cannot open " + path.string());
  }
  std::vector<unsigned char> bytes;
  unsigned char buffer[1 << 16];
  int got = 0;
  while ((got = gzread(file, buffer, sizeof(buffer))) > 0) {
    bytes.insert(bytes.end(), buffer, buffer + got);
  }
  int errnum = Z_OK;
  const char* message = gzerror(file, &errnum);
  const std::string detail = message ? message : "";
  gzclose(file);
  if (got < 0 || (errnum != Z_OK && errnum != Z_STREAM_END)) {
    throw FormatError(path.string() + ": read failed after " + std::to_string(bytes.size()) +
                      " bytes (" + detail + ")");
  }
  return bytes;
}

void write_all(const std::filesystem::path& path, const std::vector<unsigned char>& bytes) {
  const bool gzip = path.extension() == ".gz";
  gzFile file = gzopen(path.string().c_str(), gzip ? "wb9" : "wbT");
  if (file == nullptr) {
    throw IoError("cannot open " + path.string() + " for writing");
  }
  const int written = bytes.empty() ? 0 : gzwrite(file, bytes.data(), static_cast<unsigned>(bytes.size()));
  const int closed = gzclose(file);
  if (written != static_cast<int>(bytes.size()) || closed != Z_OK) {
    throw IoError("failed writing " + path.string());
  }
}

std::uint32_t read_be32(const std::vector<unsigned char>& bytes, std::size_t offset,
                        const std::filesystem::path& path) {
  if (offset + 4 > bytes.size()) {
    throw FormatError(path.string() + ": truncated header at offset " + std::to_string(offset));
  }
  return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

void put_be32(std::vector<unsigned char>& out, std::uint32_t value) {
  out.push_back(static_cast<unsigned char>(value >> 24));
  out.push_back(static_cast<unsigned char>(value >> 16));
  out.push_back(static_cast<unsigned char>(value >> 8));
  out.push_back(static_cast<unsigned char>(value));
}

void check_magic(std::uint32_t magic, std::uint32_t expected, const std::filesystem::path& path) {
  if (magic != expected) {
    std::ostringstream msg;
    msg << path.string() << ": bad IDX magic 0x" << std::hex << magic << " at offset 0, expected 0x"
        << expected;
    throw FormatError(msg.str());
  }
}

void check_payload(const std::vector<unsigned char>& bytes, std::size_t header, std::size_t payload,
                   const std::filesystem::path& path) {
  if (bytes.size() < header + payload) {
    throw FormatError(path.string() + ": truncated payload at offset " +
                      std::to_string(bytes.size()) + ", expected " +
                      std::to_string(header + payload) + " bytes");
  }
}

std::vector<std::string> split(const std::string& line, char delimiter) {
  std::vector<std::string> cells;
  std::string::size_type start = 0;
  while (true) {
    const auto end = line.find(delimiter, start);
    cells.push_back(line.substr(start, end == std::string::npos ? std::string::npos : end - start));
    if (end == std::string::npos) break;
    start = end + 1;
  }
  return cells;
}

std::string trim(const std::string& cell) {
  const auto first = cell.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = cell.find_last_not_of(" \t\r");
  return cell.substr(first, last - first + 1);
}

}  // namespace

void Dataset::validate() const {
  if (!features.allFinite()) {
    throw InputError(name + ": features contain non-finite values");
  }
  if (labels) {
    if (static_cast<Index>(labels->size()) != features.rows()) {
      throw InputError(name + ": " + std::to_string(labels->size()) + " labels for " +
                       std::to_string(features.rows()) + " samples");
    }
    for (int label : *labels) {
      if (label < 0) throw InputError(name + ": negative label");
    }
  }
}

Dataset load_idx(const std::filesystem::path& images,
                 const std::optional<std::filesystem::path>& labels) {
  const auto bytes = read_all(images);
  check_magic(read_be32(bytes, 0, images), kImageMagic, images);
  const std::size_t count = read_be32(bytes, 4, images);
  const std::size_t rows = read_be32(bytes, 8, images);
  const std::size_t cols = read_be32(bytes, 12, images);
  constexpr std::size_t header = 16;
  const std::size_t pixels = rows * cols;
  check_payload(bytes, header, count * pixels, images);

  Dataset dataset;
  dataset.name = images.filename().string();
  dataset.features.resize(static_cast<Index>(count), static_cast<Index>(pixels));
  for (std::size_t i = 0; i < count * pixels; ++i) {
    dataset.features.data()[i] = static_cast<double>(bytes[header + i]) / 255.0;
  }

  if (labels) {
    const auto label_bytes = read_all(*labels);
    check_magic(read_be32(label_bytes, 0, *labels), kLabelMagic, *labels);
    const std::size_t label_count = read_be32(label_bytes, 4, *labels);
    if (label_count != count) {
      throw FormatError(labels->string() + ": label count " + std::to_string(label_count) +
                        " at offset 4 does not match image count " + std::to_string(count));
    }
    check_payload(label_bytes, 8, label_count, *labels);
    dataset.labels.emplace(label_count);
    for (std::size_t i = 0; i < label_count; ++i) {
      (*dataset.labels)[i] = label_bytes[8 + i];
    }
  }
  return dataset;
}

Dataset concatenate(const std::vector<Dataset>& parts, std::string name) {
  if (parts.empty()) {
    throw InputError("concatenate: no datasets");
  }
  Index rows = 0;
  const Index dim = parts.front().dim();
  const bool labelled = parts.front().has_labels();
  for (const auto& part : parts) {
    if (part.dim() != dim) throw ShapeError("concatenate: feature dimensions differ");
    if (part.has_labels() != labelled) throw InputError("concatenate: mixed labelled/unlabelled parts");
    rows += part.size();
  }
  Dataset out;
  out.name = std::move(name);
  out.features.resize(rows, dim);
  if (labelled) out.labels.emplace();
  Index offset = 0;
  for (const auto& part : parts) {
    out.features.middleRows(offset, part.size()) = part.features;
    if (labelled) out.labels->insert(out.labels->end(), part.labels->begin(), part.labels->end());
    offset += part.size();
  }
  return out;
}

void write_idx(const Dataset& dataset, const std::filesystem::path& images,
               const std::optional<std::filesystem::path>& labels, Index height, Index width) {
  if (height * width != dataset.dim()) {
    throw ShapeError("write_idx: " + std::to_string(height) + "x" + std::to_string(width) +
                     " does not match feature dim " + std::to_string(dataset.dim()));
  }
  std::vector<unsigned char> out;
  out.reserve(16 + static_cast<std::size_t>(dataset.features.size()));
  put_be32(out, kImageMagic);
  put_be32(out, static_cast<std::uint32_t>(dataset.size()));
  put_be32(out, static_cast<std::uint32_t>(height));
  put_be32(out, static_cast<std::uint32_t>(width));
  for (Index i = 0; i < dataset.features.size(); ++i) {
    const double scaled = std::round(std::clamp(dataset.features.data()[i], 0.0, 1.0) * 255.0);
    out.push_back(static_cast<unsigned char>(scaled));
  }
  write_all(images, out);

  if (labels) {
    if (!dataset.labels) throw InputError("write_idx: dataset has no labels");
    std::vector<unsigned char> lab;
    put_be32(lab, kLabelMagic);
    put_be32(lab, static_cast<std::uint32_t>(dataset.labels->size()));
    for (int label : *dataset.labels) {
      if (label < 0 || label > 255) throw InputError("write_idx: label does not fit in a byte");
      lab.push_back(static_cast<unsigned char>(label));
    }
    write_all(*labels, lab);
  }
}

Dataset parse_delimited(const std::string& text, const DelimitedOptions& options,
                        const std::string& source) {
  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  std::size_t width = 0;
  std::size_t label_index = 0;

  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    if (options.skip_header && line_no == 1) continue;

    const auto cells = split(line, options.delimiter);
    if (width == 0) {
      width = cells.size();
      if (options.label_column) {
        const int col = *options.label_column;
        const int resolved = col < 0 ? static_cast<int>(width) + col : col;
        if (resolved < 0 || resolved >= static_cast<int>(width)) {
          throw FormatError(source + ": label column " + std::to_string(col) + " out of range on line " +
                            std::to_string(line_no));
        }
        label_index = static_cast<std::size_t>(resolved);
      }
    } else if (cells.size() != width) {
      throw FormatError(source + ": line " + std::to_string(line_no) + " has " +
                        std::to_string(cells.size()) + " fields, expected " + std::to_string(width));
    }

    std::vector<double> row;
    row.reserve(width);
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const std::string cell = trim(cells[c]);
      double value = 0.0;
      const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
      if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size() || !std::isfinite(value)) {
        throw FormatError(source + ": line " + std::to_string(line_no) + ", column " +
                          std::to_string(c + 1) + ": '" + cell + "' is not a number");
      }
      if (options.label_column && c == label_index) {
        if (value < 0 || value != std::floor(value)) {
          throw FormatError(source + ": line " + std::to_string(line_no) + ": label '" + cell +
                            "' is not a non-negative integer");
        }
        labels.push_back(static_cast<int>(value));
      } else {
        row.push_back(value);
      }
    }
    rows.push_back(std::move(row));
  }

  if (rows.empty()) {
    throw FormatError(source + ": no data rows");
  }
  Dataset dataset;
  dataset.name = source;
  const Index dim = static_cast<Index>(rows.front().size());
  if (dim == 0) {
    throw FormatError(source + ": no feature columns");
  }
  dataset.features.resize(static_cast<Index>(rows.size()), dim);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (Index c = 0; c < dim; ++c) {
      dataset.features(static_cast<Index>(r), c) = rows[r][static_cast<std::size_t>(c)];
    }
  }
  if (options.label_column) dataset.labels = std::move(labels);
  if (options.minmax) minmax_normalize(dataset.features);
  return dataset;
}

Dataset load_delimited(const std::filesystem::path& path, const DelimitedOptions& options) {
  const auto bytes = read_all(path);
  Dataset dataset = parse_delimited(std::string(bytes.begin(), bytes.end()), options, path.string());
  dataset.name = path.filename().string();
  return dataset;
}

namespace {

// Centers uniformly in a cube (grown when it proves too tight), each at least
// `separation` from all earlier ones.
void sample_separated_centers(Matrix& centers, const BlobsOptions& options, std::mt19937_64& rng) {
  double half_width = std::max(options.separation, 1e-9) *
                      std::max(1.0, std::pow(static_cast<double>(options.k), 1.0 / options.dim));
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  int placed = 0;
  int failures = 0;
  while (placed < options.k) {
    RowVector candidate(options.dim);
    for (int d = 0; d < options.dim; ++d) candidate[d] = half_width * unit(rng);
    bool ok = true;
    for (int j = 0; j < placed && ok; ++j) {
      ok = (centers.row(j) - candidate).norm() >= options.separation;
    }
    if (ok) {
      centers.row(placed++) = candidate;
    } else if (++failures % 1000 == 0) {
      half_width *= 1.5;
    }
  }
}

}  // namespace

Dataset make_blobs(const BlobsOptions& options) {
  if (options.n_per_cluster < 1 || options.k < 1 || options.dim < 1 || options.separation < 0.0 ||
      options.noise_sigma < 0.0) {
    throw ConfigError("make_blobs: counts must be positive and scales non-negative");
  }
  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  Matrix centers(options.k, options.dim);
  if (options.k <= options.dim) {
    // Scaled basis vectors are pairwise `separation` apart; the Q factor of a
    // Gaussian matrix rotates them in a random direction.
    Matrix gaussian(options.dim, options.dim);
    for (Index i = 0; i < gaussian.size(); ++i) gaussian.data()[i] = normal(rng);
    const Matrix rotation = Eigen::HouseholderQR<Matrix>(gaussian).householderQ();
    centers = (options.separation / std::sqrt(2.0)) * rotation.topRows(options.k);
  } else {
    sample_separated_centers(centers, options, rng);
  }

  const Index n = static_cast<Index>(options.n_per_cluster) * options.k;
  Dataset dataset;
  dataset.name = "blobs";
  dataset.features.resize(n, options.dim);
  dataset.labels.emplace(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    const int cluster = static_cast<int>(i % options.k);
    for (int d = 0; d < options.dim; ++d) {
      dataset.features(i, d) = centers(cluster, d) + options.noise_sigma * normal(rng);
    }
    (*dataset.labels)[static_cast<std::size_t>(i)] = cluster;
  }
  return dataset;
}

Dataset subsample(const Dataset& dataset, Index count, std::uint64_t seed) {
  if (count < 1 || count > dataset.size()) {
    throw ConfigError("subsample: requested " + std::to_string(count) + " of " +
                      std::to_string(dataset.size()) + " rows");
  }
  std::vector<Index> order(static_cast<std::size_t>(dataset.size()));
  std::iota(order.begin(), order.end(), Index{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  order.resize(static_cast<std::size_t>(count));
  std::sort(order.begin(), order.end());

  Dataset out;
  out.name = dataset.name;
  out.features.resize(count, dataset.dim());
  if (dataset.labels) out.labels.emplace();
  for (Index r = 0; r < count; ++r) {
    const Index src = order[static_cast<std::size_t>(r)];
    out.features.row(r) = dataset.features.row(src);
    if (dataset.labels) out.labels->push_back((*dataset.labels)[static_cast<std::size_t>(src)]);
  }
  return out;
}

void minmax_normalize(Matrix& features) {
  for (Index c = 0; c < features.cols(); ++c) {
    const double lo = features.col(c).minCoeff();
    const double hi = features.col(c).maxCoeff();
    if (hi > lo) {
      features.col(c) = (features.col(c).array() - lo) / (hi - lo);
    } else {
      features.col(c).setZero();
    }
  }
}

}  // namespace deepkm
