#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "sgq/digest.hpp"
#include "sgq/image.hpp"
#include "sgq/rng.hpp"

using namespace sgq;

TEST_CASE("sub_seed is deterministic and label-sensitive") {
    CHECK(sub_seed(7, "a") == sub_seed(7, "a"));
    CHECK(sub_seed(7, "a") != sub_seed(7, "b"));
    CHECK(sub_seed(7, "a") != sub_seed(8, "a"));
}

TEST_CASE("hash_uniform lands in [0,1) with the right mean") {
    double sum = 0.0;
    for (int i = 0; i < 10000; ++i) {
        double u = hash_uniform(99, "frame-" + std::to_string(i));
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        sum += u;
    }
    CHECK(sum / 10000 == doctest::Approx(0.5).epsilon(0.04));
}

TEST_CASE("Rng normal moments") {
    Rng rng(123);
    double sum = 0, sumsq = 0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
        double v = rng.normal();
        sum += v;
        sumsq += v * v;
    }
    CHECK(sum / n == doctest::Approx(0.0).epsilon(0.05));
    CHECK(sumsq / n == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("sha256 known vector") {
    // FIPS 180-2 test vector for "abc"
    CHECK(sha256_hex(std::string("abc")) == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("PGM round-trip") {
    Image img(5, 3);
    for (std::size_t i = 0; i < img.pixels.size(); ++i) img.pixels[i] = static_cast<std::uint8_t>(17 * i % 256);
    auto path = std::filesystem::temp_directory_path() / "sgq_test_roundtrip.pgm";
    write_pgm(path, img);
    Image back = read_pgm(path);
    CHECK(back.width == 5);
    CHECK(back.height == 3);
    CHECK(back.pixels == img.pixels);
    std::filesystem::remove(path);
}

TEST_CASE("quantize round-trips 8-bit data") {
    Image img(7, 7);
    for (std::size_t i = 0; i < img.pixels.size(); ++i) img.pixels[i] = static_cast<std::uint8_t>(i * 5);
    CHECK(quantize(to_float(img)).pixels == img.pixels);
}

TEST_CASE("gaussian blur contracts the range of a checkerboard") {
    ImageF img(32, 32);
    for (int y = 0; y < 32; ++y)
        for (int x = 0; x < 32; ++x) img.at(x, y) = ((x / 4 + y / 4) % 2) ? 255.0 : 0.0;
    ImageF out = gaussian_blur(img, 3.0);
    auto [in_min, in_max] = std::minmax_element(img.pixels.begin(), img.pixels.end());
    auto [out_min, out_max] = std::minmax_element(out.pixels.begin(), out.pixels.end());
    CHECK(*out_max - *out_min < *in_max - *in_min);
}

TEST_CASE("gaussian blur keeps a constant image constant, borders included") {
    ImageF img(20, 20, 128.0);
    ImageF out = gaussian_blur(img, 2.5);
    for (double v : out.pixels) CHECK(v == doctest::Approx(128.0).epsilon(1e-12));
}

TEST_CASE("subpixel shift by integers relocates pixels") {
    ImageF img(8, 8, 0.0);
    img.at(3, 3) = 100.0;
    ImageF out = subpixel_shift(img, 1.0, 2.0);
    CHECK(out.at(4, 5) == doctest::Approx(100.0));
    CHECK(out.at(3, 3) == doctest::Approx(0.0));
}

TEST_CASE("resample_area preserves the mean") {
    ImageF img(132, 132);
    Rng rng(5);
    double mean_in = 0;
    for (double& v : img.pixels) {
        v = rng.uniform(0, 255);
        mean_in += v;
    }
    mean_in /= static_cast<double>(img.pixels.size());
    ImageF out = resample_area(img, 128, 128);
    double mean_out = 0;
    for (double v : out.pixels) mean_out += v;
    mean_out /= static_cast<double>(out.pixels.size());
    CHECK(mean_out == doctest::Approx(mean_in).epsilon(1e-9));
}

TEST_CASE("motion blur averages along the line") {
    ImageF img(16, 16, 0.0);
    for (int y = 0; y < 16; ++y) img.at(8, y) = 90.0;  // vertical stripe
    ImageF out = motion_blur(img, 3.0, 0.0);  // horizontal 3-tap PSF
    CHECK(out.at(8, 8) == doctest::Approx(30.0));
    CHECK(out.at(7, 8) == doctest::Approx(30.0));
    CHECK(out.at(9, 8) == doctest::Approx(30.0));
    CHECK(out.at(6, 8) == doctest::Approx(0.0));
}
