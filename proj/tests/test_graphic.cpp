#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "sgq/graphic.hpp"
#include "sgq/rng.hpp"

using namespace sgq;

TEST_CASE("density 0 leaves the secure-graphic window all white") {
    DigitalReference ref = generate_reference(7, 33, 4, 0.0);
    for (int cy = ref.sg_region.y0; cy < ref.sg_region.y0 + ref.sg_region.h; ++cy)
        for (int cx = ref.sg_region.x0; cx < ref.sg_region.x0 + ref.sg_region.w; ++cx) CHECK(ref.bit(cx, cy) == 1);
}

TEST_CASE("generate_reference is deterministic") {
    DigitalReference a = generate_reference(7, 33, 4, 0.5);
    DigitalReference b = generate_reference(7, 33, 4, 0.5);
    CHECK(a.bits == b.bits);
    // and independent of the cell size
    DigitalReference c = generate_reference(7, 33, 6, 0.5);
    CHECK(a.bits == c.bits);
}

TEST_CASE("sg window black fraction sits within 3 binomial stds of the density") {
    DigitalReference ref = generate_reference(42, 33, 4, 0.5);
    std::size_t black = 0, total = 0;
    for (int cy = ref.sg_region.y0; cy < ref.sg_region.y0 + ref.sg_region.h; ++cy)
        for (int cx = ref.sg_region.x0; cx < ref.sg_region.x0 + ref.sg_region.w; ++cx) {
            black += ref.bit(cx, cy) == 0;
            ++total;
        }
    double p = static_cast<double>(black) / static_cast<double>(total);
    double sd = std::sqrt(0.5 * 0.5 / static_cast<double>(total));
    CHECK(std::abs(p - 0.5) < 3.0 * sd);
}

TEST_CASE("border rings are fixed: outer black, inner white") {
    DigitalReference ref = generate_reference(999, 33, 4, 0.5);
    int n = ref.grid_cells;
    for (int i = 0; i < n; ++i) {
        CHECK(ref.bit(i, 0) == 0);
        CHECK(ref.bit(i, n - 1) == 0);
        CHECK(ref.bit(0, i) == 0);
        CHECK(ref.bit(n - 1, i) == 0);
    }
    for (int i = 1; i < n - 1; ++i) {
        CHECK(ref.bit(i, 1) == 1);
        CHECK(ref.bit(i, n - 2) == 1);
        CHECK(ref.bit(1, i) == 1);
        CHECK(ref.bit(n - 2, i) == 1);
    }
    // sg window strictly inside the 2-cell border
    CHECK(ref.sg_region.x0 >= 2);
    CHECK(ref.sg_region.y0 >= 2);
    CHECK(ref.sg_region.x0 + ref.sg_region.w <= n - 2);
    CHECK(ref.sg_region.y0 + ref.sg_region.h <= n - 2);
}

TEST_CASE("preconditions are rejected") {
    CHECK_THROWS_AS(generate_reference(1, 8, 4, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(generate_reference(1, 33, 1, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(generate_reference(1, 33, 4, -0.1), std::invalid_argument);
    CHECK_THROWS_AS(generate_reference(1, 33, 4, 1.5), std::invalid_argument);
}

TEST_CASE("render expands cells into solid blocks") {
    DigitalReference ref = generate_reference(3, 9, 3, 1.0);
    Image img = render(ref);
    CHECK(img.width == 27);
    CHECK(img.height == 27);
    // top-left border cell is black: a 3x3 block of zeros
    for (int y = 0; y < 3; ++y)
        for (int x = 0; x < 3; ++x) CHECK(img.at(x, y) == 0);
    DigitalReference big = generate_reference(3, 33, 4, 0.5);
    Image big_img = render(big);
    CHECK(big_img.width == 132);
    CHECK(big_img.height == 132);
}

TEST_CASE("render/downsample round-trip recovers the bits exactly") {
    for (std::uint64_t seed : {1ULL, 2ULL, 3ULL, 99ULL, 12345ULL, 777777ULL}) {
        DigitalReference ref = generate_reference(seed, 33, 4, 0.5);
        CHECK(bits_from_image(render(ref), 33) == ref.bits);
    }
    // a non-default geometry as well
    DigitalReference ref = generate_reference(4242, 17, 5, 0.3);
    CHECK(bits_from_image(render(ref), 17) == ref.bits);
}

TEST_CASE("reference save/load round-trip") {
    auto dir = std::filesystem::temp_directory_path() / "sgq_test_refs";
    std::filesystem::create_directories(dir);
    DigitalReference ref = generate_reference(31337, 33, 4, 0.5);
    ref.graphic_id = "gtest";
    save_reference(dir, ref);
    DigitalReference back = load_reference(dir, "gtest");
    CHECK(back.bits == ref.bits);
    CHECK(back.grid_cells == ref.grid_cells);
    CHECK(back.cell_size_px == ref.cell_size_px);
    CHECK(back.density == ref.density);
    CHECK(back.sg_region.x0 == ref.sg_region.x0);
    CHECK(back.sg_region.w == ref.sg_region.w);
    std::filesystem::remove_all(dir);
}
