#pragma once

// Image datasets: IDX (MNIST / Fashion-MNIST) loaders and a synthetic
// Gaussian-blob generator for fast tests.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace phasornet {

struct IdxImages {
  std::size_t count = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<float> pixels;  // count * rows * cols, row-major, in [0, 1]
};

class ImageDataset {
 public:
  ImageDataset() = default;
  ImageDataset(std::string name, std::size_t n_pixels, std::size_t n_classes,
               std::vector<float> pixels, std::vector<std::uint8_t> labels);

  const std::string& name() const { return name_; }
  std::size_t size() const { return labels_.size(); }
  bool empty() const { return labels_.empty(); }
  std::size_t n_pixels() const { return n_pixels_; }
  std::size_t n_classes() const { return n_classes_; }

  std::span<const float> image(std::size_t i) const;
  std::vector<double> image_f64(std::size_t i) const;
  std::size_t label(std::size_t i) const { return labels_.at(i); }
  const std::vector<std::uint8_t>& labels() const { return labels_; }

  // First `count` samples (clamped to size()).
  ImageDataset head(std::size_t count) const;

 private:
  std::string name_;
  std::size_t n_pixels_ = 0;
  std::size_t n_classes_ = 0;
  std::vector<float> pixels_;
  std::vector<std::uint8_t> labels_;
};

// Reads an IDX3 unsigned-byte image file (optionally gzip-compressed) and
// scales pixels by 1/255.
IdxImages load_idx_images(const std::filesystem::path& path);

// Reads an IDX1 unsigned-byte label file (optionally gzip-compressed).
std::vector<std::uint8_t> load_idx_labels(const std::filesystem::path& path);

// Pairs an image file with a label file; every label must be < n_classes.
ImageDataset load_idx_dataset(const std::filesystem::path& images,
                              const std::filesystem::path& labels,
                              std::size_t n_classes, std::string name);

struct MnistSplits {
  ImageDataset train;
  ImageDataset test;
};

// Loads `train-images-idx3-ubyte[.gz]`, `train-labels-idx1-ubyte[.gz]`,
// `t10k-images-idx3-ubyte[.gz]` and `t10k-labels-idx1-ubyte[.gz]` from `dir`.
MnistSplits load_mnist_dir(const std::filesystem::path& dir);

// True when all four MNIST-layout files are present in `dir`.
bool has_mnist_files(const std::filesystem::path& dir);

// Each class is a random prototype in [0,1]^n_pixels; samples add Gaussian
// noise of std `spread`, clipped to [0,1]. Samples are interleaved by class.
ImageDataset synthetic_blobs(std::size_t n_classes, std::size_t n_pixels,
                             std::size_t samples_per_class, double spread,
                             std::uint64_t seed);

// Serializes to the IDX byte layout (uncompressed). Used by tests and tools
// that need to produce small fixture files.
std::vector<std::uint8_t> encode_idx_images(std::size_t count, std::size_t rows,
                                            std::size_t cols,
                                            std::span<const std::uint8_t> pixels);
std::vector<std::uint8_t> encode_idx_labels(
    std::span<const std::uint8_t> labels);

}  // namespace phasornet
