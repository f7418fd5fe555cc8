#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "sgq/nn/ops.hpp"
#include "sgq/rng.hpp"

namespace sgq::nn {

using real = float;  // production scalar; tests may instantiate the templates in double

enum class ParamKind : std::uint8_t { conv3x3_w = 0, bias = 1, dense_w = 2, conv1x1_w = 3 };

struct ParamEntry {
    ParamKind kind;
    std::vector<int> shape;
    std::size_t offset = 0;
    std::size_t size = 0;
};

// Shallow end-to-end scorer: 3 x (3x3 conv, ReLU, 2x2 maxpool) + dense head.
// Production shape is (input 128, channels 32, hidden 64); tests use smaller
// instantiations of the same template.
template <class T>
class Cnn3x32T {
  public:
    Cnn3x32T(int input_size, int channels, int hidden, std::uint64_t seed);

    int input_size() const { return input_size_; }
    int channels() const { return channels_; }
    int hidden() const { return hidden_; }
    std::size_t input_elems() const { return static_cast<std::size_t>(input_size_) * input_size_; }

    std::vector<T>& params() { return params_; }
    const std::vector<T>& params() const { return params_; }
    const std::vector<ParamEntry>& layout() const { return layout_; }

    // head bias initialization hook (set to the train-target mean)
    void set_output_bias(double b) { params_.back() = static_cast<T>(b); }

    struct Cache {
        std::vector<T> a1, p1, a2, p2, a3, p3, h1, pred;
        std::vector<std::uint8_t> arg1, arg2, arg3;
        int n = 0;
    };

    void forward(const T* x, int n, Cache& c) const;
    // MSE backward; returns the batch loss and fills grads (same layout as params)
    double backward(const T* x, const double* y, int n, const Cache& c, std::vector<T>& grads) const;

    // post-pool activation of the given block (1-based); used by probes
    void forward_to_block(const T* x, int n, int block, std::vector<T>& out, int& h, int& w) const;

    int map_size(int block) const { return input_size_ >> block; }

  private:
    int input_size_, channels_, hidden_, flat_;
    std::vector<T> params_;
    std::vector<ParamEntry> layout_;

    const T* p(int i) const { return params_.data() + layout_[static_cast<std::size_t>(i)].offset; }
};

using Cnn3x32 = Cnn3x32T<real>;

enum class ProbeKind { lin, conv_lin };

std::string to_string(ProbeKind k);

struct ProbeSpec {
    int attach_after_block = 3;  // 1..3
    ProbeKind kind = ProbeKind::lin;
    int conv_channels = 16;  // conv_lin only
};

// Lightweight head trained on a frozen backbone tap:
//   lin:      GAP -> dense(C -> 1)
//   conv_lin: 1x1 conv(C -> K) -> ReLU -> GAP -> dense(K -> 1)
template <class T>
class ProbeT {
  public:
    ProbeT(const ProbeSpec& spec, int in_channels, int map_h, int map_w, std::uint64_t seed);

    const ProbeSpec& spec() const { return spec_; }
    std::size_t input_elems() const { return static_cast<std::size_t>(map_h_) * map_w_ * in_channels_; }

    std::vector<T>& params() { return params_; }
    const std::vector<T>& params() const { return params_; }
    const std::vector<ParamEntry>& layout() const { return layout_; }
    void set_output_bias(double b) { params_.back() = static_cast<T>(b); }

    struct Cache {
        std::vector<T> conv, pooled, pred;
        int n = 0;
    };

    void forward(const T* tap, int n, Cache& c) const;
    double backward(const T* tap, const double* y, int n, const Cache& c, std::vector<T>& grads) const;

  private:
    ProbeSpec spec_;
    int in_channels_, map_h_, map_w_;
    std::vector<T> params_;
    std::vector<ParamEntry> layout_;

    const T* p(int i) const { return params_.data() + layout_[static_cast<std::size_t>(i)].offset; }
};

using Probe = ProbeT<real>;

// Standard bias-corrected Adam. Moments are kept in double regardless of the
// parameter scalar.
template <class T>
class Adam {
  public:
    explicit Adam(double lr = 1e-4) : lr_(lr) {}

    long step_count() const { return t_; }

    void step(std::vector<T>& params, const std::vector<T>& grads) {
        if (m_.empty()) {
            m_.assign(params.size(), 0.0);
            v_.assign(params.size(), 0.0);
        }
        ++t_;
        double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
        double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
        for (std::size_t i = 0; i < params.size(); ++i) {
            double g = static_cast<double>(grads[i]);
            m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * g;
            v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * g * g;
            double update = lr_ * (m_[i] / bc1) / (std::sqrt(v_[i] / bc2) + eps_);
            params[i] = static_cast<T>(static_cast<double>(params[i]) - update);
        }
    }

  private:
    double lr_;
    double beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
    long t_ = 0;
    std::vector<double> m_, v_;
};

// --- checkpoint container (magic SGNN) ---------------------------------

std::string params_sha256(const std::vector<real>& params);

void save_checkpoint(const std::filesystem::path& path, const Cnn3x32& model, const std::string& config_hash);
Cnn3x32 load_checkpoint(const std::filesystem::path& path, std::string* config_hash = nullptr);

extern template class Cnn3x32T<float>;
extern template class Cnn3x32T<double>;
extern template class ProbeT<float>;
extern template class ProbeT<double>;

}  // namespace sgq::nn
