#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sgq/graphic.hpp"
#include "sgq/image.hpp"

namespace sgq {

enum class PrintDomain { DomainA_digital, DomainB_offset };

std::string to_string(PrintDomain d);
PrintDomain print_domain_from_string(const std::string& s);

// Printing-press model: ink spread (pre-threshold blur), multiplicative grain,
// and the paper white point. The two presets are synthetic stand-ins; the
// offset preset uses heavier dot gain and grain.
struct PrintDomainModel {
    PrintDomain domain_id = PrintDomain::DomainA_digital;
    double dot_gain = 0.0;     // blur sigma, px
    double grain_sigma = 0.0;  // multiplicative ink-density noise std
    std::uint8_t paper_tint = 255;
};

PrintDomainModel domain_preset(PrintDomain d);

// Per-frame mobile-capture degradations. Identity = all zeros with gamma 1.
struct DegradationParams {
    double defocus_sigma = 0.0;  // Gaussian blur, px
    double motion_len = 0.0;     // line PSF length, px
    double motion_angle = 0.0;   // radians
    double noise_sigma = 0.0;    // additive Gaussian, gray levels, post-blur
    double gamma = 1.0;
    double illum_gradient = 0.0;  // max relative brightness tilt across the frame
    double shift_x = 0.0;         // subpixel translation, [-0.5, 0.5] px
    double shift_y = 0.0;

    bool is_identity() const {
        return defocus_sigma == 0.0 && motion_len == 0.0 && noise_sigma == 0.0 && gamma == 1.0 &&
               illum_gradient == 0.0 && shift_x == 0.0 && shift_y == 0.0;
    }
};

struct CapturedFrame {
    std::string frame_id;
    std::string session_id;
    std::string graphic_id;
    PrintDomain domain_id = PrintDomain::DomainA_digital;
    Image image;
    DegradationParams params;
    std::uint64_t seed = 0;
};

enum class Trajectory { focus_sweep, focus_hunt, steady, glare_pass };

std::string to_string(Trajectory t);
Trajectory trajectory_from_string(const std::string& s);

struct ScanSession {
    std::string session_id;
    std::string graphic_id;
    PrintDomain domain_id = PrintDomain::DomainA_digital;
    Trajectory kind = Trajectory::steady;
    std::vector<CapturedFrame> frames;  // temporal order
};

// Print channel: blur(dot_gain) -> multiply by (1 + grain), clipped at 0 ->
// remap white to paper_tint -> quantize.
Image print_simulate(const Image& ref_img, const PrintDomainModel& model, std::uint64_t seed);

// Capture channel, fixed order: subpixel shift -> defocus blur -> motion blur
// -> illumination tilt -> gamma -> additive noise -> clip/quantize.
CapturedFrame capture_simulate(const Image& printed, const DegradationParams& p, std::uint64_t seed);

// Parameter trajectory + one capture per frame. Frame degradations other than
// the trajectory-driven ones are drawn from the session's seed stream.
ScanSession generate_session(const DigitalReference& ref, const PrintDomainModel& model, Trajectory kind,
                             int n_frames, std::uint64_t seed);

}  // namespace sgq
