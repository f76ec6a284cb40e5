#include "weightflow/grid_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "weightflow/error.hpp"

namespace weightflow {

namespace {

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

void write_grid_csv(const std::filesystem::path& path, const Grid2D& grid, std::span<const double> values,
                    double time) {
    if (values.size() != grid.size()) throw InvalidInput("csv values do not match grid");
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw NotFound("cannot open " + path.string() + " for writing");
    out << "# grid " << fmt17(grid.x_min()) << ' ' << fmt17(grid.x_max()) << ' ' << fmt17(grid.y_min()) << ' '
        << fmt17(grid.y_max()) << ' ' << grid.nx() << ' ' << grid.ny() << ' ' << fmt17(time) << '\n';
    for (int i = 0; i < grid.nx(); ++i)
        for (int j = 0; j < grid.ny(); ++j) out << i << ',' << j << ',' << fmt17(values[grid.index(i, j)]) << '\n';
}

void write_density_csv(const std::filesystem::path& path, const Density& d) {
    write_grid_csv(path, d.grid(), d.values(), d.time());
}

void write_potential_csv(const std::filesystem::path& path, const PotentialField& v) {
    write_grid_csv(path, v.grid(), v.values(), v.time());
}

Density read_density_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw NotFound("missing grid csv " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw FormatError(path.string() + ": empty file");
    std::istringstream hdr(line);
    std::string hash, tag;
    double x0, x1, y0, y1, t;
    int nx, ny;
    if (!(hdr >> hash >> tag >> x0 >> x1 >> y0 >> y1 >> nx >> ny >> t) || hash != "#" || tag != "grid")
        throw FormatError(path.string() + ": bad grid header");
    Grid2D grid(x0, x1, y0, y1, nx, ny);
    std::vector<double> values(grid.size(), 0.0);
    std::vector<char> seen(grid.size(), 0);
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        int i, j;
        double v;
        char c1, c2;
        std::istringstream row(line);
        if (!(row >> i >> c1 >> j >> c2 >> v) || c1 != ',' || c2 != ',')
            throw FormatError(path.string() + ": bad row '" + line + "'");
        if (i < 0 || i >= nx || j < 0 || j >= ny) throw FormatError(path.string() + ": cell index out of range");
        values[grid.index(i, j)] = v;
        seen[grid.index(i, j)] = 1;
        ++rows;
    }
    if (rows != grid.size() || std::find(seen.begin(), seen.end(), 0) != seen.end())
        throw FormatError(path.string() + ": expected " + std::to_string(grid.size()) + " distinct rows");
    return Density(grid, std::move(values), t);
}

const std::array<Rgb, 256>& viridis_ramp() {
    static const std::array<Rgb, 256> ramp = [] {
        constexpr std::array<std::array<double, 3>, 9> anchors{{{68, 1, 84},
                                                               {71, 44, 122},
                                                               {59, 82, 139},
                                                               {44, 113, 142},
                                                               {33, 145, 140},
                                                               {39, 173, 129},
                                                               {92, 200, 99},
                                                               {170, 220, 50},
                                                               {253, 231, 37}}};
        std::array<Rgb, 256> r{};
        for (int k = 0; k < 256; ++k) {
            const double pos = k / 255.0 * 8.0;
            const int a = std::min(static_cast<int>(pos), 7);
            const double f = pos - a;
            auto lerp = [&](int c) {
                return static_cast<std::uint8_t>(std::lround(anchors[a][c] * (1.0 - f) + anchors[a + 1][c] * f));
            };
            r[k] = Rgb{lerp(0), lerp(1), lerp(2)};
        }
        return r;
    }();
    return ramp;
}

Image heatmap(const Grid2D& grid, std::span<const double> values, int scale, double vmax) {
    if (values.size() != grid.size()) throw InvalidInput("heatmap values do not match grid");
    if (scale < 1) throw InvalidInput("heatmap scale must be >= 1");
    if (vmax <= 0.0) vmax = *std::max_element(values.begin(), values.end());
    const auto& ramp = viridis_ramp();
    Image img{grid.nx() * scale, grid.ny() * scale, {}};
    img.pixels.resize(static_cast<std::size_t>(img.width) * img.height);
    for (int i = 0; i < grid.nx(); ++i) {
        for (int j = 0; j < grid.ny(); ++j) {
            const double f = vmax > 0.0 ? std::clamp(values[grid.index(i, j)] / vmax, 0.0, 1.0) : 0.0;
            const Rgb c = ramp[static_cast<std::size_t>(std::lround(f * 255.0))];
            const int top = (grid.ny() - 1 - j) * scale;
            for (int a = 0; a < scale; ++a)
                for (int b = 0; b < scale; ++b) img.at(i * scale + a, top + b) = c;
        }
    }
    return img;
}

void overlay_arrows(Image& img, const VectorField& field, int scale, int stride) {
    const Grid2D& g = field.grid;
    double vmax = 0.0;
    for (const auto& v : field.values) vmax = std::max(vmax, std::hypot(v.x, v.y));
    if (vmax == 0.0) return;
    const double max_len = 0.45 * stride * scale;
    auto plot = [&](int x, int y) {
        if (x >= 0 && x < img.width && y >= 0 && y < img.height) img.at(x, y) = Rgb{255, 255, 255};
    };
    for (int i = stride / 2; i < g.nx(); i += stride) {
        for (int j = stride / 2; j < g.ny(); j += stride) {
            const Vec2 v = field.values[g.index(i, j)];
            const double len = std::hypot(v.x, v.y) / vmax * max_len;
            if (len < 1.0) continue;
            const double ux = v.x / std::hypot(v.x, v.y), uy = -v.y / std::hypot(v.x, v.y);
            const double cx = (i + 0.5) * scale, cy = (g.ny() - j - 0.5) * scale;
            const int steps = static_cast<int>(std::ceil(len));
            for (int s = 0; s <= steps; ++s)
                plot(static_cast<int>(cx + ux * s), static_cast<int>(cy + uy * s));
            // head: two short strokes at +-150 degrees from the shaft
            for (double ang : {2.618, -2.618}) {
                const double hx = ux * std::cos(ang) - uy * std::sin(ang);
                const double hy = ux * std::sin(ang) + uy * std::cos(ang);
                for (int s = 0; s <= 3; ++s)
                    plot(static_cast<int>(cx + ux * len + hx * s), static_cast<int>(cy + uy * len + hy * s));
            }
        }
    }
}

Image side_by_side(std::span<const Image> images, int gap) {
    Image out;
    for (const auto& im : images) {
        out.width += im.width;
        out.height = std::max(out.height, im.height);
    }
    if (!images.empty()) out.width += gap * static_cast<int>(images.size() - 1);
    out.pixels.assign(static_cast<std::size_t>(out.width) * out.height, Rgb{0, 0, 0});
    int x0 = 0;
    for (const auto& im : images) {
        for (int y = 0; y < im.height; ++y)
            for (int x = 0; x < im.width; ++x) out.at(x0 + x, y) = im.pixels[static_cast<std::size_t>(y) * im.width + x];
        x0 += im.width + gap;
    }
    return out;
}

void write_ppm(const std::filesystem::path& path, const Image& img) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw NotFound("cannot open " + path.string() + " for writing");
    out << "P6\n" << img.width << ' ' << img.height << "\n255\n";
    for (const auto& p : img.pixels) {
        const char px[3] = {static_cast<char>(p.r), static_cast<char>(p.g), static_cast<char>(p.b)};
        out.write(px, 3);
    }
}

}  // namespace weightflow
