#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "weightflow/autoencoder.hpp"
#include "weightflow/drift.hpp"
#include "weightflow/matrix.hpp"

namespace weightflow {

namespace fs = std::filesystem;

// Tensor file: rows and cols as little-endian uint32, then rows*cols
// little-endian float64 in row-major order.
void write_tensor(const fs::path& path, const Matrix& m);
Matrix read_tensor(const fs::path& path);

// FNV-1a 64 of the bytes, as 16 hex digits.
std::string content_hash(std::string_view bytes);
std::string file_hash(const fs::path& path);

// Writes `text` only through a temporary file so readers never see a partial file.
void write_text(const fs::path& path, std::string_view text);
std::string read_text(const fs::path& path);

// Paths inside a run directory.
struct RunLayout {
    fs::path root;

    fs::path manifest() const { return root / "manifest.json"; }
    fs::path row_updates() const { return root / "row_updates.jsonl"; }
    fs::path epoch_dir(int epoch) const;
    fs::path layer_file(int epoch, int layer, std::string_view suffix = "") const;
    fs::path evolve_dir() const { return root / "evolve"; }
    fs::path density_file(int layer, int epoch) const;
    fs::path compare_dir() const { return root / "compare"; }
    fs::path terminal_dir() const { return root / "terminal"; }

    // `p` relative to the root, with forward slashes.
    std::string relative(const fs::path& p) const;
};

using json = nlohmann::ordered_json;

// manifest.json holds one section per command ("train", "evolve", ...).
// Each section has an "artifacts" object mapping run-relative paths to hashes.
json load_manifest(const RunLayout& run, bool verify = true);
void store_manifest(const RunLayout& run, const json& manifest);

// Checks every artifact of every section; throws FormatError on a mismatch
// and NotFound on a missing file.
void verify_artifacts(const RunLayout& run, const json& manifest);

// Hash entry for an artifact just written.
void record_artifact(json& section, const RunLayout& run, const fs::path& file);

// Digest of a JSON value's compact serialization.
std::string config_digest(const json& config);

json to_json(const ArchSpec& arch);
ArchSpec arch_from_json(const json& j);

// All layer weights and biases of a network at one epoch.
void write_network(const RunLayout& run, int epoch, const Network& net);
Network read_network(const RunLayout& run, int epoch, const ArchSpec& arch);

void write_snapshot(const RunLayout& run, const WeightSnapshot& s);
WeightSnapshot read_snapshot(const RunLayout& run, int epoch, int layer);

std::string row_update_line(const RowUpdateSample& s);
std::vector<RowUpdateSample> read_row_updates(const fs::path& path);

}  // namespace weightflow
