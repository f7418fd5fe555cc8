#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "sgq/image.hpp"

namespace sgq {

// Rectangle in cell coordinates.
struct CellRect {
    int x0 = 0;
    int y0 = 0;
    int w = 0;
    int h = 0;
    bool contains(int cx, int cy) const { return cx >= x0 && cx < x0 + w && cy >= y0 && cy < y0 + h; }
};

// Pristine digital reference: a high-entropy secure-graphic window embedded
// in a QR-like scaffold with a fixed 2-cell synchronization border.
struct DigitalReference {
    std::string graphic_id;
    int grid_cells = 0;
    int cell_size_px = 0;
    CellRect sg_region;
    std::vector<std::uint8_t> bits;  // grid_cells * grid_cells, 0 = black, 1 = white
    double density = 0.5;            // expected black fraction inside sg_region
    std::uint64_t seed = 0;

    std::uint8_t bit(int cx, int cy) const { return bits[static_cast<std::size_t>(cy) * grid_cells + cx]; }
};

// Central window holding the secure graphic; side = grid_cells/2 rounded up
// to odd, clamped to the interior inside the 2-cell border.
CellRect default_sg_region(int grid_cells);

// Interior cells are a seeded Bernoulli fill: `density` black inside the SG
// window, 0.5 elsewhere. The border is deterministic: an all-black outer ring
// and an all-white inner ring.
DigitalReference generate_reference(std::uint64_t seed, int grid_cells, int cell_size_px, double density);

// Expands every cell to a cell_size_px square block of 0 or 255.
Image render(const DigitalReference& ref);

// Per-cell mean thresholded at 128; exact inverse of render.
std::vector<std::uint8_t> bits_from_image(const Image& img, int grid_cells);

void save_reference(const std::filesystem::path& dir, const DigitalReference& ref);
DigitalReference load_reference(const std::filesystem::path& dir, const std::string& graphic_id);

}  // namespace sgq
