#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>

#include "weightflow/grid.hpp"

namespace weightflow {

// Grid CSV layout:
//   # grid <x_min> <x_max> <y_min> <y_max> <nx> <ny> <time>
//   i,j,value          (nx * ny rows, i outer)
// Values are printed with 17 significant digits so a read reproduces them.

void write_grid_csv(const std::filesystem::path& path, const Grid2D& grid, std::span<const double> values,
                    double time);
void write_density_csv(const std::filesystem::path& path, const Density& d);
void write_potential_csv(const std::filesystem::path& path, const PotentialField& v);
Density read_density_csv(const std::filesystem::path& path);

struct Rgb {
    std::uint8_t r, g, b;
};

// 256-entry ramp, piecewise-linear through nine viridis anchors.
const std::array<Rgb, 256>& viridis_ramp();

// Raster image, row 0 at the top.
struct Image {
    int width = 0;
    int height = 0;
    std::vector<Rgb> pixels;

    Rgb& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }
};

// Heatmap of a cell field scaled to [0, max]; `scale` pixels per cell, +y up.
Image heatmap(const Grid2D& grid, std::span<const double> values, int scale = 4, double vmax = 0.0);

// Draws one short white arrow per `stride` cells along `field`.
void overlay_arrows(Image& img, const VectorField& field, int scale, int stride);

// Places images left to right with a `gap`-pixel black separator.
Image side_by_side(std::span<const Image> images, int gap = 4);

// Binary P6 PPM.
void write_ppm(const std::filesystem::path& path, const Image& img);

}  // namespace weightflow
