#include "sgq/capture.hpp"

#include <algorithm>
#include <cmath>

#include "sgq/common.hpp"
#include "sgq/rng.hpp"

namespace sgq {

std::string to_string(PrintDomain d) {
    return d == PrintDomain::DomainA_digital ? "digital" : "offset";
}

PrintDomain print_domain_from_string(const std::string& s) {
    if (s == "digital") return PrintDomain::DomainA_digital;
    if (s == "offset") return PrintDomain::DomainB_offset;
    throw DataError("unknown print domain: " + s);
}

PrintDomainModel domain_preset(PrintDomain d) {
    // Synthetic stand-ins for the two press types; not measured values. The
    // offset preset shifts texture (grain, dot gain, tint) while keeping the
    // oracle-level quality of a sharp capture comparable across domains.
    if (d == PrintDomain::DomainA_digital) return {d, 0.55, 0.05, 250};
    return {d, 0.70, 0.13, 242};
}

std::string to_string(Trajectory t) {
    switch (t) {
        case Trajectory::focus_sweep: return "focus_sweep";
        case Trajectory::focus_hunt: return "focus_hunt";
        case Trajectory::steady: return "steady";
        case Trajectory::glare_pass: return "glare_pass";
    }
    return "?";
}

Trajectory trajectory_from_string(const std::string& s) {
    if (s == "focus_sweep") return Trajectory::focus_sweep;
    if (s == "focus_hunt") return Trajectory::focus_hunt;
    if (s == "steady") return Trajectory::steady;
    if (s == "glare_pass") return Trajectory::glare_pass;
    throw DataError("unknown trajectory: " + s);
}

Image print_simulate(const Image& ref_img, const PrintDomainModel& model, std::uint64_t seed) {
    ImageF img = to_float(ref_img);
    img = gaussian_blur(img, model.dot_gain);
    if (model.grain_sigma > 0.0) {
        Rng rng(sub_seed(seed, "print/grain"));
        for (double& v : img.pixels) v = std::max(0.0, v * (1.0 + model.grain_sigma * rng.normal()));
    }
    if (model.paper_tint != 255) {
        double scale = model.paper_tint / 255.0;
        for (double& v : img.pixels) v *= scale;
    }
    return quantize(img);
}

CapturedFrame capture_simulate(const Image& printed, const DegradationParams& p, std::uint64_t seed) {
    if (p.gamma <= 0.0) throw std::invalid_argument("gamma must be > 0");
    CapturedFrame frame;
    frame.params = p;
    frame.seed = seed;
    if (p.is_identity()) {
        frame.image = printed;  // byte-for-byte
        return frame;
    }
    ImageF img = to_float(printed);
    img = subpixel_shift(img, p.shift_x, p.shift_y);
    img = gaussian_blur(img, p.defocus_sigma);
    img = motion_blur(img, p.motion_len, p.motion_angle);
    img = illumination_tilt(img, p.illum_gradient);
    img = gamma_curve(img, p.gamma);
    if (p.noise_sigma > 0.0) {
        Rng rng(sub_seed(seed, "capture/noise"));
        for (double& v : img.pixels) v += p.noise_sigma * rng.normal();
    }
    frame.image = quantize(img);
    return frame;
}

namespace {

std::vector<DegradationParams> make_trajectory(Trajectory kind, int n, Rng& rng) {
    std::vector<DegradationParams> traj(static_cast<std::size_t>(n));
    for (auto& p : traj) {
        p.shift_x = rng.uniform(-0.5, 0.5);
        p.shift_y = rng.uniform(-0.5, 0.5);
    }
    switch (kind) {
        case Trajectory::focus_sweep: {
            // monotone approach to focus; the oracle trace is the Fig-6 analog
            double hi = rng.uniform(4.5, 6.0);
            double lo = rng.uniform(0.05, 0.3);
            double noise = rng.uniform(1.0, 6.0);
            double gamma = rng.uniform(0.9, 1.15);
            for (int i = 0; i < n; ++i) {
                double t = n > 1 ? static_cast<double>(i) / (n - 1) : 1.0;
                traj[i].defocus_sigma = hi * std::pow(lo / hi, t);
                traj[i].noise_sigma = noise;
                traj[i].gamma = gamma;
                traj[i].illum_gradient = rng.uniform(-0.1, 0.1);
            }
            break;
        }
        case Trajectory::focus_hunt: {
            double base = rng.uniform(0.1, 0.4);
            double amp = rng.uniform(2.5, 4.0);
            double decay = rng.uniform(0.72, 0.88);
            double period = rng.uniform(3.5, 6.0);
            double phase = rng.uniform(0.0, 6.28318530717958648);
            for (int i = 0; i < n; ++i) {
                double osc = 0.5 + 0.5 * std::cos(6.28318530717958648 * i / period + phase);
                traj[i].defocus_sigma = base + amp * std::pow(decay, i) * osc;
                traj[i].noise_sigma = rng.uniform(1.0, 12.0);
                traj[i].gamma = rng.uniform(0.8, 1.3);
                traj[i].illum_gradient = rng.uniform(-0.15, 0.15);
            }
            break;
        }
        case Trajectory::steady: {
            // sharp focus, but with the noise/exposure spread of handheld use
            for (int i = 0; i < n; ++i) {
                traj[i].defocus_sigma = rng.uniform(0.05, 0.5);
                traj[i].noise_sigma = rng.uniform(0.5, 18.0);
                traj[i].gamma = rng.uniform(0.8, 1.3);
                traj[i].illum_gradient = rng.uniform(-0.2, 0.2);
                if (rng.uniform() < 0.4) {
                    traj[i].motion_len = rng.uniform(1.5, 3.5);
                    traj[i].motion_angle = rng.uniform(0.0, 3.14159265358979324);
                }
            }
            break;
        }
        case Trajectory::glare_pass: {
            double g = rng.uniform(0.5, 0.9);
            double gamma = rng.uniform(0.9, 1.15);
            for (int i = 0; i < n; ++i) {
                double t = n > 1 ? static_cast<double>(i) / (n - 1) : 0.5;
                traj[i].illum_gradient = -g + 2.0 * g * t;
                traj[i].defocus_sigma = rng.uniform(0.1, 0.8);
                traj[i].noise_sigma = rng.uniform(0.5, 3.0);
                traj[i].gamma = gamma;
            }
            break;
        }
    }
    return traj;
}

}  // namespace

ScanSession generate_session(const DigitalReference& ref, const PrintDomainModel& model, Trajectory kind,
                             int n_frames, std::uint64_t seed) {
    if (n_frames < 1) throw std::invalid_argument("n_frames must be >= 1");
    ScanSession session;
    session.graphic_id = ref.graphic_id;
    session.domain_id = model.domain_id;
    session.kind = kind;

    // one physical print per (graphic, domain), shared by all of its sessions
    Image printed = print_simulate(render(ref), model,
                                   sub_seed(ref.seed, "print/" + to_string(model.domain_id)));

    Rng rng(sub_seed(seed, "session/trajectory"));
    auto traj = make_trajectory(kind, n_frames, rng);
    session.frames.reserve(traj.size());
    for (std::size_t i = 0; i < traj.size(); ++i) {
        CapturedFrame frame = capture_simulate(printed, traj[i], sub_seed(seed, "frame/" + std::to_string(i)));
        frame.graphic_id = ref.graphic_id;
        frame.domain_id = model.domain_id;
        session.frames.push_back(std::move(frame));
    }
    return session;
}

}  // namespace sgq
