#include "weightflow/run_dir.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "weightflow/error.hpp"
#include "weightflow/rng.hpp"

namespace weightflow {

namespace {

void put_u32(std::string& out, std::uint32_t v) {
    for (int b = 0; b < 4; ++b) out.push_back(static_cast<char>((v >> (8 * b)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
    for (int b = 0; b < 8; ++b) out.push_back(static_cast<char>((v >> (8 * b)) & 0xff));
}

std::uint64_t get_le(const std::string& s, std::size_t at, int bytes) {
    std::uint64_t v = 0;
    for (int b = 0; b < bytes; ++b) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(s[at + b])) << (8 * b);
    return v;
}

}  // namespace

void write_text(const fs::path& path, std::string_view text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw Error("cannot write " + path.string());
        f.write(text.data(), static_cast<std::streamsize>(text.size()));
        if (!f) throw Error("write failed for " + path.string());
    }
    fs::rename(tmp, path);
}

std::string read_text(const fs::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw NotFound("missing file " + path.string());
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

void write_tensor(const fs::path& path, const Matrix& m) {
    std::string out;
    out.reserve(8 + 8 * m.size());
    put_u32(out, static_cast<std::uint32_t>(m.rows));
    put_u32(out, static_cast<std::uint32_t>(m.cols));
    for (double v : m.data) put_u64(out, std::bit_cast<std::uint64_t>(v));
    write_text(path, out);
}

Matrix read_tensor(const fs::path& path) {
    const std::string s = read_text(path);
    if (s.size() < 8) throw FormatError(path.string() + ": truncated tensor header");
    const auto rows = get_le(s, 0, 4), cols = get_le(s, 4, 4);
    if (s.size() != 8 + 8 * rows * cols)
        throw FormatError(fmt::format("{}: expected {} bytes for a {}x{} tensor, found {}", path.string(),
                                      8 + 8 * rows * cols, rows, cols, s.size()));
    Matrix m(static_cast<int>(rows), static_cast<int>(cols));
    for (std::size_t k = 0; k < m.size(); ++k) m.data[k] = std::bit_cast<double>(get_le(s, 8 + 8 * k, 8));
    return m;
}

std::string content_hash(std::string_view bytes) { return fmt::format("{:016x}", fnv1a64(bytes)); }

std::string file_hash(const fs::path& path) { return content_hash(read_text(path)); }

fs::path RunLayout::epoch_dir(int epoch) const { return root / fmt::format("epoch_{:03d}", epoch); }

fs::path RunLayout::layer_file(int epoch, int layer, std::string_view suffix) const {
    return epoch_dir(epoch) / fmt::format("layer_{}{}.bin", layer, suffix);
}

fs::path RunLayout::density_file(int layer, int epoch) const {
    return evolve_dir() / fmt::format("layer_{}", layer) / fmt::format("epoch_{:03d}.csv", epoch);
}

std::string RunLayout::relative(const fs::path& p) const { return p.lexically_relative(root).generic_string(); }

json load_manifest(const RunLayout& run, bool verify) {
    if (!fs::exists(run.manifest())) throw NotFound("no manifest.json in " + run.root.string());
    json m;
    try {
        m = json::parse(read_text(run.manifest()));
    } catch (const json::exception& e) {
        throw FormatError("manifest.json: " + std::string(e.what()));
    }
    if (verify) verify_artifacts(run, m);
    return m;
}

void store_manifest(const RunLayout& run, const json& manifest) { write_text(run.manifest(), manifest.dump(2) + "\n"); }

void verify_artifacts(const RunLayout& run, const json& manifest) {
    for (const auto& [name, section] : manifest.items()) {
        if (!section.is_object() || !section.contains("artifacts")) continue;
        for (const auto& [rel, hash] : section["artifacts"].items()) {
            const fs::path p = run.root / rel;
            if (!fs::exists(p)) throw NotFound("artifact " + rel + " listed in manifest is missing");
            if (file_hash(p) != hash.get<std::string>())
                throw FormatError("artifact " + rel + " does not match its manifest hash");
        }
    }
}

void record_artifact(json& section, const RunLayout& run, const fs::path& file) {
    section["artifacts"][run.relative(file)] = file_hash(file);
}

std::string config_digest(const json& config) { return content_hash(config.dump()); }

json to_json(const ArchSpec& a) {
    return json{{"input_dim", a.input_dim},
                {"encoder_hidden", a.encoder_hidden},
                {"latent", a.latent},
                {"decoder_hidden", a.decoder_hidden},
                {"activation", std::string(to_string(a.activation))},
                {"output_activation", std::string(to_string(a.output_activation))}};
}

ArchSpec arch_from_json(const json& j) {
    try {
        ArchSpec a;
        a.input_dim = j.at("input_dim").get<int>();
        a.encoder_hidden = j.at("encoder_hidden").get<std::vector<int>>();
        a.latent = j.at("latent").get<int>();
        a.decoder_hidden = j.at("decoder_hidden").get<std::vector<int>>();
        a.activation = parse_activation(j.at("activation").get<std::string>());
        a.output_activation = parse_activation(j.at("output_activation").get<std::string>());
        a.validate();
        return a;
    } catch (const json::exception& e) {
        throw FormatError("arch: " + std::string(e.what()));
    }
}

void write_network(const RunLayout& run, int epoch, const Network& net) {
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        const auto& layer = net.layers[l];
        write_tensor(run.layer_file(epoch, static_cast<int>(l)), layer.w);
        if (layer.has_bias) {
            Matrix b(1, static_cast<int>(layer.b.size()));
            b.data = layer.b;
            write_tensor(run.layer_file(epoch, static_cast<int>(l), "_bias"), b);
        }
    }
}

Network read_network(const RunLayout& run, int epoch, const ArchSpec& arch) {
    Network net = Network::initialize(arch, 0);
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        auto& layer = net.layers[l];
        Matrix w = read_tensor(run.layer_file(epoch, static_cast<int>(l)));
        if (w.rows != layer.w.rows || w.cols != layer.w.cols)
            throw FormatError(fmt::format("layer {} at epoch {} has shape {}x{}, expected {}x{}", l, epoch, w.rows,
                                          w.cols, layer.w.rows, layer.w.cols));
        layer.w = std::move(w);
        if (layer.has_bias) {
            Matrix b = read_tensor(run.layer_file(epoch, static_cast<int>(l), "_bias"));
            if (b.size() != layer.b.size()) throw FormatError(fmt::format("bias {} at epoch {} has wrong size", l, epoch));
            layer.b = std::move(b.data);
        }
    }
    return net;
}

void write_snapshot(const RunLayout& run, const WeightSnapshot& s) {
    write_tensor(run.layer_file(s.epoch, s.layer_id), s.matrix);
    Matrix m(s.matrix.rows, s.matrix.cols), v(s.matrix.rows, s.matrix.cols);
    m.data = s.adam_m;
    v.data = s.adam_v;
    write_tensor(run.layer_file(s.epoch, s.layer_id, "_adam_m"), m);
    write_tensor(run.layer_file(s.epoch, s.layer_id, "_adam_v"), v);
}

WeightSnapshot read_snapshot(const RunLayout& run, int epoch, int layer) {
    WeightSnapshot s;
    s.epoch = epoch;
    s.layer_id = layer;
    s.matrix = read_tensor(run.layer_file(epoch, layer));
    s.adam_m = read_tensor(run.layer_file(epoch, layer, "_adam_m")).data;
    s.adam_v = read_tensor(run.layer_file(epoch, layer, "_adam_v")).data;
    if (s.adam_m.size() != s.matrix.size() || s.adam_v.size() != s.matrix.size())
        throw FormatError(fmt::format("optimizer state of layer {} at epoch {} has the wrong shape", layer, epoch));
    return s;
}

std::string row_update_line(const RowUpdateSample& s) {
    json j{{"epoch", static_cast<int>(s.epoch_time) + 1},
           {"layer", s.layer},
           {"row", s.row},
           {"pos", {s.position.x, s.position.y}},
           {"update", {s.update.x, s.update.y}}};
    return j.dump();
}

std::vector<RowUpdateSample> read_row_updates(const fs::path& path) {
    std::istringstream in(read_text(path));
    std::vector<RowUpdateSample> out;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            const json j = json::parse(line);
            RowUpdateSample s;
            s.epoch_time = j.at("epoch").get<int>() - 1;
            s.layer = j.at("layer").get<int>();
            s.row = j.at("row").get<int>();
            s.position = Vec2{j.at("pos").at(0).get<double>(), j.at("pos").at(1).get<double>()};
            s.update = Vec2{j.at("update").at(0).get<double>(), j.at("update").at(1).get<double>()};
            out.push_back(s);
        } catch (const json::exception& e) {
            throw FormatError(fmt::format("{}:{}: {}", path.string(), lineno, e.what()));
        }
    }
    return out;
}

}  // namespace weightflow
