#include "sgq/graphic.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

#include "sgq/common.hpp"
#include "sgq/rng.hpp"

namespace sgq {

CellRect default_sg_region(int grid_cells) {
    int side = grid_cells / 2;
    if (side % 2 == 0) side += 1;
    int interior = grid_cells - 4;  // 2-cell border on each side
    side = std::min(side, interior);
    int start = (grid_cells - side) / 2;
    return CellRect{start, start, side, side};
}

DigitalReference generate_reference(std::uint64_t seed, int grid_cells, int cell_size_px, double density) {
    if (grid_cells < 9) throw std::invalid_argument("grid_cells must be >= 9");
    if (cell_size_px < 2) throw std::invalid_argument("cell_size_px must be >= 2");
    if (density < 0.0 || density > 1.0) throw std::invalid_argument("density must be in [0,1]");

    DigitalReference ref;
    ref.grid_cells = grid_cells;
    ref.cell_size_px = cell_size_px;
    ref.density = density;
    ref.seed = seed;
    ref.sg_region = default_sg_region(grid_cells);
    ref.bits.assign(static_cast<std::size_t>(grid_cells) * grid_cells, 1);

    Rng rng(sub_seed(seed, "graphic/bits"));
    for (int cy = 0; cy < grid_cells; ++cy) {
        for (int cx = 0; cx < grid_cells; ++cx) {
            int edge = std::min(std::min(cx, cy), std::min(grid_cells - 1 - cx, grid_cells - 1 - cy));
            std::uint8_t bit;
            if (edge == 0) {
                bit = 0;  // outer synchronization ring, black
            } else if (edge == 1) {
                bit = 1;  // inner ring, white
            } else {
                double p_black = ref.sg_region.contains(cx, cy) ? density : 0.5;
                bit = rng.uniform() < p_black ? 0 : 1;
            }
            ref.bits[static_cast<std::size_t>(cy) * grid_cells + cx] = bit;
        }
    }
    return ref;
}

Image render(const DigitalReference& ref) {
    int csp = ref.cell_size_px;
    int side = ref.grid_cells * csp;
    Image img(side, side);
    for (int cy = 0; cy < ref.grid_cells; ++cy) {
        for (int cx = 0; cx < ref.grid_cells; ++cx) {
            std::uint8_t v = ref.bit(cx, cy) ? 255 : 0;
            for (int py = 0; py < csp; ++py) {
                std::uint8_t* row = &img.at(cx * csp, cy * csp + py);
                std::fill(row, row + csp, v);
            }
        }
    }
    return img;
}

std::vector<std::uint8_t> bits_from_image(const Image& img, int grid_cells) {
    if (img.width != img.height || img.width % grid_cells != 0) throw std::invalid_argument("image size is not a cell multiple");
    int csp = img.width / grid_cells;
    std::vector<std::uint8_t> bits(static_cast<std::size_t>(grid_cells) * grid_cells);
    for (int cy = 0; cy < grid_cells; ++cy) {
        for (int cx = 0; cx < grid_cells; ++cx) {
            long sum = 0;
            for (int py = 0; py < csp; ++py)
                for (int px = 0; px < csp; ++px) sum += img.at(cx * csp + px, cy * csp + py);
            double mean = static_cast<double>(sum) / (csp * csp);
            bits[static_cast<std::size_t>(cy) * grid_cells + cx] = mean >= 128.0 ? 1 : 0;
        }
    }
    return bits;
}

void save_reference(const std::filesystem::path& dir, const DigitalReference& ref) {
    write_pgm(dir / (ref.graphic_id + ".pgm"), render(ref));
    nlohmann::json j;
    j["graphic_id"] = ref.graphic_id;
    j["seed"] = ref.seed;
    j["grid_cells"] = ref.grid_cells;
    j["cell_size_px"] = ref.cell_size_px;
    j["sg_region"] = {{"x0", ref.sg_region.x0}, {"y0", ref.sg_region.y0}, {"w", ref.sg_region.w}, {"h", ref.sg_region.h}};
    j["density"] = ref.density;
    std::ofstream f(dir / (ref.graphic_id + ".json"));
    if (!f) throw DataError("cannot write reference sidecar for " + ref.graphic_id);
    f << j.dump(2) << "\n";
}

DigitalReference load_reference(const std::filesystem::path& dir, const std::string& graphic_id) {
    std::ifstream f(dir / (graphic_id + ".json"));
    if (!f) throw DataError("missing reference sidecar: " + (dir / (graphic_id + ".json")).string());
    nlohmann::json j = nlohmann::json::parse(f);
    DigitalReference ref = generate_reference(j.at("seed").get<std::uint64_t>(), j.at("grid_cells").get<int>(),
                                              j.at("cell_size_px").get<int>(), j.at("density").get<double>());
    ref.graphic_id = graphic_id;
    // sanity: the sidecar must describe the bits we just regenerated
    Image stored = read_pgm(dir / (graphic_id + ".pgm"));
    if (bits_from_image(stored, ref.grid_cells) != ref.bits) throw DataError("reference bits mismatch for " + graphic_id);
    return ref;
}

}  // namespace sgq
