#include "weightflow/mnist.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>

#include <spdlog/spdlog.h>
#include <zlib.h>

#include "weightflow/error.hpp"
#include "weightflow/rng.hpp"

namespace weightflow {

namespace {

// Whole file, gunzipped if it starts with 0x1f 0x8b (zlib passes other files through).
std::vector<std::uint8_t> read_maybe_gzip(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw NotFound("missing file " + path.string());
    gzFile f = gzopen(path.string().c_str(), "rb");
    if (!f) throw NotFound("cannot open " + path.string());
    std::vector<std::uint8_t> out;
    std::uint8_t buf[1 << 16];
    int n;
    while ((n = gzread(f, buf, sizeof buf)) > 0) out.insert(out.end(), buf, buf + n);
    int err = 0;
    const char* msg = gzerror(f, &err);
    gzclose(f);
    if (n < 0 || (err != Z_OK && err != Z_STREAM_END))
        throw FormatError(path.string() + ": decompression failed: " + (msg ? msg : "?"));
    return out;
}

std::uint32_t be32(const std::vector<std::uint8_t>& b, std::size_t off) {
    return (std::uint32_t{b[off]} << 24) | (std::uint32_t{b[off + 1]} << 16) | (std::uint32_t{b[off + 2]} << 8) |
           std::uint32_t{b[off + 3]};
}

void put_be32(std::ofstream& out, std::uint32_t v) {
    const char b[4] = {static_cast<char>(v >> 24), static_cast<char>(v >> 16), static_cast<char>(v >> 8),
                       static_cast<char>(v)};
    out.write(b, 4);
}

}  // namespace

Dataset parse_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path) {
    const auto img = read_maybe_gzip(images_path);
    const auto lab = read_maybe_gzip(labels_path);

    if (img.size() < 16) throw FormatError(images_path.string() + ": truncated header");
    if (be32(img, 0) != 0x00000803) throw FormatError(images_path.string() + ": bad magic, expected 0x00000803");
    if (lab.size() < 8) throw FormatError(labels_path.string() + ": truncated header");
    if (be32(lab, 0) != 0x00000801) throw FormatError(labels_path.string() + ": bad magic, expected 0x00000801");

    const std::uint32_t n = be32(img, 4), rows = be32(img, 8), cols = be32(img, 12);
    const std::uint32_t n_labels = be32(lab, 4);
    if (n != n_labels) throw FormatError("image count " + std::to_string(n) + " != label count " + std::to_string(n_labels));
    if (rows == 0 || cols == 0 || rows > 4096 || cols > 4096) throw FormatError(images_path.string() + ": bad image shape");
    const std::size_t dim = std::size_t{rows} * cols;
    if (img.size() != 16 + std::size_t{n} * dim) throw FormatError(images_path.string() + ": size does not match header");
    if (lab.size() != 8 + std::size_t{n}) throw FormatError(labels_path.string() + ": size does not match header");

    Dataset ds;
    ds.rows = static_cast<int>(rows);
    ds.cols = static_cast<int>(cols);
    ds.pixels.resize(std::size_t{n} * dim);
    for (std::size_t k = 0; k < ds.pixels.size(); ++k) ds.pixels[k] = img[16 + k] / 255.0;
    ds.labels.resize(n);
    for (std::size_t k = 0; k < n; ++k) ds.labels[k] = lab[8 + k];

    uLong crc = crc32(0L, Z_NULL, 0);
    crc = crc32(crc, img.data(), static_cast<uInt>(img.size()));
    crc = crc32(crc, lab.data(), static_cast<uInt>(lab.size()));
    char hex[16];
    std::snprintf(hex, sizeof hex, "%08lx", static_cast<unsigned long>(crc));
    ds.checksum = hex;
    return ds;
}

Dataset load_mnist_train(const std::filesystem::path& dir) {
    auto pick = [&](const std::string& stem) {
        for (const auto& name : {stem + ".gz", stem})
            if (std::filesystem::exists(dir / name)) return dir / name;
        throw NotFound("no " + stem + "[.gz] in " + dir.string());
    };
    return parse_idx(pick("train-images-idx3-ubyte"), pick("train-labels-idx1-ubyte"));
}

Dataset filter_digits(const Dataset& ds, const std::set<int>& keep) {
    Dataset out;
    out.rows = ds.rows;
    out.cols = ds.cols;
    out.checksum = ds.checksum;
    for (std::size_t k = 0; k < ds.size(); ++k) {
        if (!keep.contains(ds.labels[k])) continue;
        out.labels.push_back(ds.labels[k]);
        const auto im = ds.image(k);
        out.pixels.insert(out.pixels.end(), im.begin(), im.end());
    }
    if (out.labels.empty()) throw InvalidInput("label filter kept no samples");
    spdlog::info("filter_digits: kept {} of {} samples", out.size(), ds.size());
    return out;
}

Dataset take_first(const Dataset& ds, std::size_t n) {
    if (n == 0 || n >= ds.size()) return ds;
    Dataset out = ds;
    out.labels.resize(n);
    out.pixels.resize(n * static_cast<std::size_t>(ds.dim()));
    return out;
}

std::vector<std::vector<std::size_t>> batches(std::size_t n, std::size_t batch_size, std::uint64_t seed, int epoch) {
    if (batch_size == 0) throw InvalidInput("batch_size must be >= 1");
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    auto rng = substream(seed, "shuffle", static_cast<std::uint64_t>(epoch));
    for (std::size_t k = n; k > 1; --k) std::swap(perm[k - 1], perm[uniform_index(rng, k)]);
    std::vector<std::vector<std::size_t>> out;
    for (std::size_t start = 0; start < n; start += batch_size)
        out.emplace_back(perm.begin() + static_cast<std::ptrdiff_t>(start),
                         perm.begin() + static_cast<std::ptrdiff_t>(std::min(n, start + batch_size)));
    return out;
}

void write_idx_images(const std::filesystem::path& path, int count, int rows, int cols,
                      std::span<const std::uint8_t> bytes) {
    if (bytes.size() != static_cast<std::size_t>(count) * rows * cols) throw InvalidInput("idx image byte count");
    std::ofstream out(path, std::ios::binary);
    put_be32(out, 0x00000803);
    put_be32(out, static_cast<std::uint32_t>(count));
    put_be32(out, static_cast<std::uint32_t>(rows));
    put_be32(out, static_cast<std::uint32_t>(cols));
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

void write_idx_labels(const std::filesystem::path& path, std::span<const std::uint8_t> labels) {
    std::ofstream out(path, std::ios::binary);
    put_be32(out, 0x00000801);
    put_be32(out, static_cast<std::uint32_t>(labels.size()));
    out.write(reinterpret_cast<const char*>(labels.data()), static_cast<std::streamsize>(labels.size()));
}

}  // namespace weightflow
