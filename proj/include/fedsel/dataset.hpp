/*
 * Copyright 2026 The fedsel Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Labeled datasets: storage, IDX (MNIST) ingestion, seeded synthetic Gaussian
// clusters, and per-vehicle views.

#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "fedsel/errors.hpp"
#include "fedsel/rng.hpp"

namespace fedsel {

// Row-major feature matrix plus labels.
struct Dataset {
  int dim = 0;
  int classes = 0;
  std::vector<float> features;
  std::vector<int> labels;

  std::size_t size() const noexcept { return labels.size(); }

  std::span<const float> row(std::size_t i) const {
    return {features.data() + i * static_cast<std::size_t>(dim), static_cast<std::size_t>(dim)};
  }

  std::vector<std::size_t> class_histogram() const {
    std::vector<std::size_t> h(static_cast<std::size_t>(classes), 0);
    for (int y : labels) ++h[static_cast<std::size_t>(y)];
    return h;
  }
};

// A vehicle's local data: indices into a shared source dataset.
class LocalDataset {
 public:
  LocalDataset() = default;

  LocalDataset(std::shared_ptr<const Dataset> source, std::vector<std::size_t> indices)
      : source_(std::move(source)), indices_(std::move(indices)) {
    if (!source_) throw InvalidArgument("local dataset without source");
    histogram_.assign(static_cast<std::size_t>(source_->classes), 0);
    for (std::size_t i : indices_) {
      if (i >= source_->size()) throw InvalidArgument("local dataset index out of range");
      ++histogram_[static_cast<std::size_t>(source_->labels[i])];
    }
  }

  static LocalDataset whole(std::shared_ptr<const Dataset> source) {
    std::vector<std::size_t> idx(source->size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    return LocalDataset(std::move(source), std::move(idx));
  }

  std::size_t size() const noexcept { return indices_.size(); }
  bool empty() const noexcept { return indices_.empty(); }
  std::span<const float> features(std::size_t k) const { return source_->row(indices_[k]); }
  int label(std::size_t k) const { return source_->labels[indices_[k]]; }
  int dim() const { return source_ ? source_->dim : 0; }
  const std::vector<std::size_t>& indices() const noexcept { return indices_; }
  const std::vector<std::size_t>& class_histogram() const noexcept { return histogram_; }
  const Dataset& source() const { return *source_; }

  int distinct_classes() const {
    return static_cast<int>(std::count_if(histogram_.begin(), histogram_.end(),
                                          [](std::size_t c) { return c > 0; }));
  }

 private:
  std::shared_ptr<const Dataset> source_;
  std::vector<std::size_t> indices_;
  std::vector<std::size_t> histogram_;
};

namespace idx {

inline constexpr std::uint32_t kImageMagic = 0x00000803;
inline constexpr std::uint32_t kLabelMagic = 0x00000801;

inline std::vector<unsigned char> slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline std::uint32_t be32(const std::vector<unsigned char>& b, std::size_t off,
                          const std::string& what) {
  if (off + 4 > b.size()) throw FormatError(what + ": truncated header", b.size());
  return (std::uint32_t{b[off]} << 24) | (std::uint32_t{b[off + 1]} << 16) |
         (std::uint32_t{b[off + 2]} << 8) | std::uint32_t{b[off + 3]};
}

struct Images {
  std::size_t count = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<float> pixels;  // scaled to [0, 1]
};

inline Images parse_images(const std::vector<unsigned char>& b, const std::string& name) {
  if (const auto magic = be32(b, 0, name); magic != kImageMagic) {
    throw FormatError(name + ": bad image magic", 0);
  }
  Images img;
  img.count = be32(b, 4, name);
  img.rows = be32(b, 8, name);
  img.cols = be32(b, 12, name);
  const std::size_t need = img.count * img.rows * img.cols;
  if (b.size() - 16 < need) throw FormatError(name + ": truncated pixel data", b.size());
  if (b.size() - 16 > need) throw FormatError(name + ": trailing bytes", 16 + need);
  img.pixels.resize(need);
  for (std::size_t i = 0; i < need; ++i) img.pixels[i] = static_cast<float>(b[16 + i]) / 255.0f;
  return img;
}

inline std::vector<int> parse_labels(const std::vector<unsigned char>& b, const std::string& name) {
  if (const auto magic = be32(b, 0, name); magic != kLabelMagic) {
    throw FormatError(name + ": bad label magic", 0);
  }
  const std::size_t n = be32(b, 4, name);
  if (b.size() - 8 < n) throw FormatError(name + ": truncated label data", b.size());
  if (b.size() - 8 > n) throw FormatError(name + ": trailing bytes", 8 + n);
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = b[8 + i];
  return labels;
}

inline void put_be32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int s = 24; s >= 0; s -= 8) out.push_back(static_cast<unsigned char>((v >> s) & 0xff));
}

inline std::vector<unsigned char> encode_images(const Images& img) {
  std::vector<unsigned char> out;
  put_be32(out, kImageMagic);
  put_be32(out, static_cast<std::uint32_t>(img.count));
  put_be32(out, static_cast<std::uint32_t>(img.rows));
  put_be32(out, static_cast<std::uint32_t>(img.cols));
  for (float p : img.pixels) {
    out.push_back(static_cast<unsigned char>(std::clamp(std::lround(p * 255.0f), 0L, 255L)));
  }
  return out;
}

inline std::vector<unsigned char> encode_labels(std::span<const int> labels) {
  std::vector<unsigned char> out;
  put_be32(out, kLabelMagic);
  put_be32(out, static_cast<std::uint32_t>(labels.size()));
  for (int y : labels) out.push_back(static_cast<unsigned char>(y));
  return out;
}

}  // namespace idx

inline std::vector<int> read_idx_labels(const std::filesystem::path& path) {
  return idx::parse_labels(idx::slurp(path), path.string());
}

// Pairs an IDX image file (magic 0x803, dims n x rows x cols) with an IDX
// label file (magic 0x801).
inline Dataset read_idx(const std::filesystem::path& images_path,
                        const std::filesystem::path& labels_path, int classes = 10) {
  const auto img = idx::parse_images(idx::slurp(images_path), images_path.string());
  auto labels = read_idx_labels(labels_path);
  if (labels.size() != img.count) {
    throw FormatError("label count " + std::to_string(labels.size()) + " in " +
                          labels_path.string() + " does not match image count " +
                          std::to_string(img.count),
                      4);
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= classes) throw FormatError(labels_path.string() + ": label out of range", 8 + i);
  }
  Dataset d;
  d.dim = static_cast<int>(img.rows * img.cols);
  d.classes = classes;
  d.features = std::move(img.pixels);
  d.labels = std::move(labels);
  return d;
}

inline void write_file(const std::filesystem::path& path, const std::vector<unsigned char>& bytes) {
  std::ofstream out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("cannot write " + path.string());
}

struct BlobSpec {
  int classes = 10;
  std::size_t per_class = 100;
  int dim = 784;
  double separation = 1.0;  // std-dev of class-mean coordinates
  double noise = 1.0;       // std-dev of samples around their class mean
};

// One Gaussian cluster per class; labels cycle 0, 1, ..., classes-1.
inline Dataset synthetic_blobs(const BlobSpec& spec, std::uint64_t seed) {
  if (spec.classes <= 0 || spec.per_class == 0 || spec.dim <= 0) {
    throw InvalidArgument("synthetic_blobs: all sizes must be positive");
  }
  Rng rng(seed, Stream::kData);
  std::vector<double> means(static_cast<std::size_t>(spec.classes) * spec.dim);
  for (double& m : means) m = spec.separation * rng.normal();
  Dataset d;
  d.dim = spec.dim;
  d.classes = spec.classes;
  const std::size_t n = spec.per_class * static_cast<std::size_t>(spec.classes);
  d.features.resize(n * spec.dim);
  d.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int y = static_cast<int>(i % spec.classes);
    d.labels[i] = y;
    for (int j = 0; j < spec.dim; ++j) {
      d.features[i * spec.dim + j] =
          static_cast<float>(means[static_cast<std::size_t>(y) * spec.dim + j] + spec.noise * rng.normal());
    }
  }
  return d;
}

inline Dataset synthetic_blobs(int classes, std::size_t per_class, int dim, std::uint64_t seed) {
  return synthetic_blobs(BlobSpec{classes, per_class, dim}, seed);
}

// Moves the last `test_per_class` samples of every class into a test split.
inline std::pair<Dataset, Dataset> train_test_split(const Dataset& d, std::size_t test_per_class) {
  auto remaining = d.class_histogram();
  std::vector<std::size_t> taken(remaining.size(), 0);
  Dataset train{d.dim, d.classes, {}, {}};
  Dataset test{d.dim, d.classes, {}, {}};
  std::vector<bool> to_test(d.size(), false);
  for (std::size_t i = d.size(); i-- > 0;) {
    const auto y = static_cast<std::size_t>(d.labels[i]);
    if (taken[y] < test_per_class) {
      ++taken[y];
      to_test[i] = true;
    }
  }
  for (std::size_t i = 0; i < d.size(); ++i) {
    Dataset& dst = to_test[i] ? test : train;
    const auto r = d.row(i);
    dst.features.insert(dst.features.end(), r.begin(), r.end());
    dst.labels.push_back(d.labels[i]);
  }
  return {std::move(train), std::move(test)};
}

}  // namespace fedsel
