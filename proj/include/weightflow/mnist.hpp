#pragma once

#include <cstdint>
#include <filesystem>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace weightflow {

// Images as rows of `dim()` pixels scaled to [0, 1], one label per image.
struct Dataset {
    int rows = 0;
    int cols = 0;
    std::vector<double> pixels;
    std::vector<int> labels;
    std::string checksum;  // crc32 of the decoded image and label bytes, hex

    std::size_t size() const { return labels.size(); }
    int dim() const { return rows * cols; }
    std::span<const double> image(std::size_t k) const {
        return {pixels.data() + k * static_cast<std::size_t>(dim()), static_cast<std::size_t>(dim())};
    }
};

// Reads an IDX image file (magic 0x00000803) and label file (0x00000801);
// either may be gzip-compressed. Throws NotFound or FormatError.
Dataset parse_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path);

// Looks for train-images-idx3-ubyte[.gz] / train-labels-idx1-ubyte[.gz] in `dir`.
Dataset load_mnist_train(const std::filesystem::path& dir);

// Order-preserving subset with labels in `keep`. Throws InvalidInput if empty.
Dataset filter_digits(const Dataset& ds, const std::set<int>& keep);

// First `n` samples (all if n == 0 or n >= size()).
Dataset take_first(const Dataset& ds, std::size_t n);

// Shuffled index batches; the permutation is a pure function of (seed, epoch)
// and the last partial batch is kept.
std::vector<std::vector<std::size_t>> batches(std::size_t n, std::size_t batch_size, std::uint64_t seed, int epoch);

// Raw big-endian IDX writers (uncompressed), used for fixtures.
void write_idx_images(const std::filesystem::path& path, int count, int rows, int cols,
                      std::span<const std::uint8_t> bytes);
void write_idx_labels(const std::filesystem::path& path, std::span<const std::uint8_t> labels);

}  // namespace weightflow
