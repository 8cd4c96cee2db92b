#include "phasornet/data.hpp"

#include <zlib.h>

#include <algorithm>
#include <fstream>
#include <iterator>

#include "phasornet/error.hpp"
#include "phasornet/rng.hpp"

namespace phasornet {

namespace fs = std::filesystem;

namespace {

constexpr std::uint32_t kImageMagic = 0x00000803;
constexpr std::uint32_t kLabelMagic = 0x00000801;

std::vector<std::uint8_t> read_gzip(const fs::path& path) {
  gzFile file = gzopen(path.c_str(), "rb");
  PHASORNET_CHECK(file != nullptr, "cannot open " + path.string());
  std::vector<std::uint8_t> out;
  std::uint8_t buffer[1 << 16];
  int n = 0;
  while ((n = gzread(file, buffer, sizeof(buffer))) > 0) {
    out.insert(out.end(), buffer, buffer + n);
  }
  int err = Z_OK;
  const char* msg = gzerror(file, &err);
  gzclose(file);
  PHASORNET_CHECK(n == 0 && (err == Z_OK || err == Z_STREAM_END),
                  path.string() + ": gzip error: " + msg);
  return out;
}

std::vector<std::uint8_t> read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  PHASORNET_CHECK(in.good(), "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (bytes.size() >= 2 && bytes[0] == 0x1f && bytes[1] == 0x8b) {
    return read_gzip(path);
  }
  return bytes;
}

std::uint32_t read_be32(const std::vector<std::uint8_t>& b, std::size_t off) {
  return (std::uint32_t{b[off]} << 24) | (std::uint32_t{b[off + 1]} << 16) |
         (std::uint32_t{b[off + 2]} << 8) | std::uint32_t{b[off + 3]};
}

void put_be32(std::vector<std::uint8_t>& b, std::uint32_t v) {
  b.push_back(static_cast<std::uint8_t>(v >> 24));
  b.push_back(static_cast<std::uint8_t>(v >> 16));
  b.push_back(static_cast<std::uint8_t>(v >> 8));
  b.push_back(static_cast<std::uint8_t>(v));
}

void check_payload(const fs::path& path, std::size_t expected,
                   std::size_t actual) {
  PHASORNET_CHECK(actual >= expected,
                  path.string() + ": truncated payload, expected " +
                      std::to_string(expected) + " bytes, got " +
                      std::to_string(actual));
}

fs::path find_variant(const fs::path& dir, const std::string& stem) {
  if (fs::exists(dir / stem)) return dir / stem;
  if (fs::exists(dir / (stem + ".gz"))) return dir / (stem + ".gz");
  // Some mirrors use a dot before the idx suffix.
  std::string dotted = stem;
  if (auto pos = dotted.find("-idx"); pos != std::string::npos) {
    dotted[pos] = '.';
    if (fs::exists(dir / dotted)) return dir / dotted;
    if (fs::exists(dir / (dotted + ".gz"))) return dir / (dotted + ".gz");
  }
  return {};
}

}  // namespace

ImageDataset::ImageDataset(std::string name, std::size_t n_pixels,
                           std::size_t n_classes, std::vector<float> pixels,
                           std::vector<std::uint8_t> labels)
    : name_(std::move(name)),
      n_pixels_(n_pixels),
      n_classes_(n_classes),
      pixels_(std::move(pixels)),
      labels_(std::move(labels)) {
  PHASORNET_CHECK(n_classes_ > 0, "dataset needs at least one class");
  PHASORNET_CHECK(pixels_.size() == n_pixels_ * labels_.size(),
                  "dataset: image and label counts differ");
  for (auto l : labels_) {
    PHASORNET_CHECK(l < n_classes_, "label out of range: " + std::to_string(l));
  }
  for (float p : pixels_) {
    PHASORNET_CHECK(p >= 0.0f && p <= 1.0f, "dataset intensity outside [0,1]");
  }
}

std::span<const float> ImageDataset::image(std::size_t i) const {
  PHASORNET_CHECK(i < size(), "image index out of range");
  return {pixels_.data() + i * n_pixels_, n_pixels_};
}

std::vector<double> ImageDataset::image_f64(std::size_t i) const {
  auto img = image(i);
  return {img.begin(), img.end()};
}

ImageDataset ImageDataset::head(std::size_t count) const {
  count = std::min(count, size());
  std::vector<float> px(pixels_.begin(),
                        pixels_.begin() + static_cast<std::ptrdiff_t>(count * n_pixels_));
  std::vector<std::uint8_t> lb(labels_.begin(),
                               labels_.begin() + static_cast<std::ptrdiff_t>(count));
  return ImageDataset(name_, n_pixels_, n_classes_, std::move(px), std::move(lb));
}

IdxImages load_idx_images(const fs::path& path) {
  const auto bytes = read_bytes(path);
  PHASORNET_CHECK(bytes.size() >= 16 && read_be32(bytes, 0) == kImageMagic,
                  path.string() + ": not an IDX image file");
  IdxImages out;
  out.count = read_be32(bytes, 4);
  out.rows = read_be32(bytes, 8);
  out.cols = read_be32(bytes, 12);
  const std::size_t n = out.count * out.rows * out.cols;
  check_payload(path, n, bytes.size() - 16);
  out.pixels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.pixels[i] = static_cast<float>(bytes[16 + i] / 255.0);
  }
  return out;
}

std::vector<std::uint8_t> load_idx_labels(const fs::path& path) {
  const auto bytes = read_bytes(path);
  PHASORNET_CHECK(bytes.size() >= 8 && read_be32(bytes, 0) == kLabelMagic,
                  path.string() + ": not an IDX label file");
  const std::size_t n = read_be32(bytes, 4);
  check_payload(path, n, bytes.size() - 8);
  return {bytes.begin() + 8, bytes.begin() + 8 + static_cast<std::ptrdiff_t>(n)};
}

ImageDataset load_idx_dataset(const fs::path& images, const fs::path& labels,
                              std::size_t n_classes, std::string name) {
  auto img = load_idx_images(images);
  auto lab = load_idx_labels(labels);
  PHASORNET_CHECK(img.count == lab.size(),
                  "image count " + std::to_string(img.count) +
                      " differs from label count " + std::to_string(lab.size()));
  return ImageDataset(std::move(name), img.rows * img.cols, n_classes,
                      std::move(img.pixels), std::move(lab));
}

bool has_mnist_files(const fs::path& dir) {
  for (const char* stem : {"train-images-idx3-ubyte", "train-labels-idx1-ubyte",
                           "t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte"}) {
    if (find_variant(dir, stem).empty()) return false;
  }
  return true;
}

MnistSplits load_mnist_dir(const fs::path& dir) {
  PHASORNET_CHECK(fs::is_directory(dir),
                  "dataset directory not found: " + dir.string());
  auto locate = [&](const std::string& stem) {
    fs::path p = find_variant(dir, stem);
    PHASORNET_CHECK(!p.empty(), "missing " + stem + " in " + dir.string());
    return p;
  };
  const std::string name = dir.filename().string();
  return {load_idx_dataset(locate("train-images-idx3-ubyte"),
                           locate("train-labels-idx1-ubyte"), 10, name + "/train"),
          load_idx_dataset(locate("t10k-images-idx3-ubyte"),
                           locate("t10k-labels-idx1-ubyte"), 10, name + "/test")};
}

ImageDataset synthetic_blobs(std::size_t n_classes, std::size_t n_pixels,
                             std::size_t samples_per_class, double spread,
                             std::uint64_t seed) {
  PHASORNET_CHECK(n_classes > 0 && n_pixels > 0 && samples_per_class > 0,
                  "synthetic_blobs: arguments must be positive");
  PHASORNET_CHECK(n_classes <= 256, "synthetic_blobs: at most 256 classes");
  PHASORNET_CHECK(spread >= 0.0, "synthetic_blobs: spread must be >= 0");
  Rng rng(seed);
  std::vector<std::vector<double>> prototypes(n_classes,
                                              std::vector<double>(n_pixels));
  for (auto& proto : prototypes) {
    for (auto& v : proto) v = rng.uniform();
  }
  std::vector<float> pixels;
  std::vector<std::uint8_t> labels;
  pixels.reserve(n_classes * samples_per_class * n_pixels);
  for (std::size_t s = 0; s < samples_per_class; ++s) {
    for (std::size_t c = 0; c < n_classes; ++c) {
      for (std::size_t j = 0; j < n_pixels; ++j) {
        const double noise = spread > 0.0 ? spread * rng.normal() : 0.0;
        pixels.push_back(
            static_cast<float>(std::clamp(prototypes[c][j] + noise, 0.0, 1.0)));
      }
      labels.push_back(static_cast<std::uint8_t>(c));
    }
  }
  return ImageDataset("blobs", n_pixels, n_classes, std::move(pixels),
                      std::move(labels));
}

std::vector<std::uint8_t> encode_idx_images(std::size_t count, std::size_t rows,
                                            std::size_t cols,
                                            std::span<const std::uint8_t> pixels) {
  PHASORNET_CHECK(pixels.size() == count * rows * cols,
                  "encode_idx_images: pixel count mismatch");
  std::vector<std::uint8_t> out;
  out.reserve(16 + pixels.size());
  put_be32(out, kImageMagic);
  put_be32(out, static_cast<std::uint32_t>(count));
  put_be32(out, static_cast<std::uint32_t>(rows));
  put_be32(out, static_cast<std::uint32_t>(cols));
  out.insert(out.end(), pixels.begin(), pixels.end());
  return out;
}

std::vector<std::uint8_t> encode_idx_labels(std::span<const std::uint8_t> labels) {
  std::vector<std::uint8_t> out;
  out.reserve(8 + labels.size());
  put_be32(out, kLabelMagic);
  put_be32(out, static_cast<std::uint32_t>(labels.size()));
  out.insert(out.end(), labels.begin(), labels.end());
  return out;
}

}  // namespace phasornet
