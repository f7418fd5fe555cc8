#include "sgq/nn/model.hpp"

#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

#include "sgq/common.hpp"
#include "sgq/digest.hpp"

namespace sgq::nn {

using nlohmann::json;

namespace {

template <class T>
void he_init(std::vector<T>& params, const std::vector<ParamEntry>& layout, Rng& rng) {
    for (const auto& e : layout) {
        T* w = params.data() + e.offset;
        if (e.kind == ParamKind::bias) {
            std::fill(w, w + e.size, T(0));
            continue;
        }
        std::size_t fan_in = 1;
        for (std::size_t i = 0; i + 1 < e.shape.size(); ++i) fan_in *= static_cast<std::size_t>(e.shape[i]);
        double scale = std::sqrt(2.0 / static_cast<double>(fan_in));
        for (std::size_t i = 0; i < e.size; ++i) w[i] = static_cast<T>(scale * rng.normal());
    }
}

std::size_t shape_elems(const std::vector<int>& shape) {
    std::size_t n = 1;
    for (int d : shape) n *= static_cast<std::size_t>(d);
    return n;
}

}  // namespace

// ------------------------------------------------------------- Cnn3x32 ----

template <class T>
Cnn3x32T<T>::Cnn3x32T(int input_size, int channels, int hidden, std::uint64_t seed)
    : input_size_(input_size), channels_(channels), hidden_(hidden) {
    if (input_size < 8 || input_size % 8 != 0) throw std::invalid_argument("input_size must be a positive multiple of 8");
    int s8 = input_size / 8;
    flat_ = s8 * s8 * channels;

    auto add = [&](ParamKind kind, std::vector<int> shape) {
        ParamEntry e{kind, std::move(shape), layout_.empty() ? 0 : layout_.back().offset + layout_.back().size, 0};
        e.size = shape_elems(e.shape);
        layout_.push_back(e);
    };
    add(ParamKind::conv3x3_w, {3, 3, 1, channels});
    add(ParamKind::bias, {channels});
    add(ParamKind::conv3x3_w, {3, 3, channels, channels});
    add(ParamKind::bias, {channels});
    add(ParamKind::conv3x3_w, {3, 3, channels, channels});
    add(ParamKind::bias, {channels});
    add(ParamKind::dense_w, {flat_, hidden});
    add(ParamKind::bias, {hidden});
    add(ParamKind::dense_w, {hidden, 1});
    add(ParamKind::bias, {1});

    params_.assign(layout_.back().offset + layout_.back().size, T(0));
    Rng rng(sub_seed(seed, "nn/init"));
    he_init(params_, layout_, rng);
}

template <class T>
void Cnn3x32T<T>::forward(const T* x, int n, Cache& c) const {
    int s = input_size_;
    int ch = channels_;
    auto sz = [&](int side, int channels) { return static_cast<std::size_t>(n) * side * side * channels; };
    c.n = n;
    c.a1.resize(sz(s, ch));
    c.arg1.resize(sz(s / 2, ch));
    c.p1.resize(sz(s / 2, ch));
    c.a2.resize(sz(s / 2, ch));
    c.arg2.resize(sz(s / 4, ch));
    c.p2.resize(sz(s / 4, ch));
    c.a3.resize(sz(s / 4, ch));
    c.arg3.resize(sz(s / 8, ch));
    c.p3.resize(sz(s / 8, ch));
    c.h1.resize(static_cast<std::size_t>(n) * hidden_);
    c.pred.resize(static_cast<std::size_t>(n));

    conv3x3_forward(x, c.a1.data(), p(0), p(1), n, s, s, 1, ch);
    relu_forward(c.a1.data(), c.a1.data(), c.a1.size());
    maxpool2x2_forward(c.a1.data(), c.p1.data(), c.arg1.data(), n, s, s, ch);

    conv3x3_forward(c.p1.data(), c.a2.data(), p(2), p(3), n, s / 2, s / 2, ch, ch);
    relu_forward(c.a2.data(), c.a2.data(), c.a2.size());
    maxpool2x2_forward(c.a2.data(), c.p2.data(), c.arg2.data(), n, s / 2, s / 2, ch);

    conv3x3_forward(c.p2.data(), c.a3.data(), p(4), p(5), n, s / 4, s / 4, ch, ch);
    relu_forward(c.a3.data(), c.a3.data(), c.a3.size());
    maxpool2x2_forward(c.a3.data(), c.p3.data(), c.arg3.data(), n, s / 4, s / 4, ch);

    dense_forward(c.p3.data(), c.h1.data(), p(6), p(7), n, flat_, hidden_);
    relu_forward(c.h1.data(), c.h1.data(), c.h1.size());
    dense_forward(c.h1.data(), c.pred.data(), p(8), p(9), n, hidden_, 1);
}

template <class T>
double Cnn3x32T<T>::backward(const T* x, const double* y, int n, const Cache& c, std::vector<T>& grads) const {
    grads.assign(params_.size(), T(0));
    auto g = [&](int i) { return grads.data() + layout_[static_cast<std::size_t>(i)].offset; };
    int s = input_size_;
    int ch = channels_;

    double loss = 0.0;
    std::vector<T> dpred(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        double r = static_cast<double>(c.pred[static_cast<std::size_t>(i)]) - y[i];
        loss += r * r;
        dpred[static_cast<std::size_t>(i)] = static_cast<T>(2.0 * r / n);
    }
    loss /= n;

    std::vector<T> dh1(c.h1.size(), T(0));
    dense_backward(c.h1.data(), p(8), dpred.data(), dh1.data(), g(8), g(9), n, hidden_, 1);
    relu_backward(c.h1.data(), dh1.data(), dh1.data(), dh1.size());

    std::vector<T> dp3(c.p3.size(), T(0));
    dense_backward(c.p3.data(), p(6), dh1.data(), dp3.data(), g(6), g(7), n, flat_, hidden_);

    std::vector<T> da3(c.a3.size(), T(0));
    maxpool2x2_backward(dp3.data(), c.arg3.data(), da3.data(), n, s / 4, s / 4, ch);
    relu_backward(c.a3.data(), da3.data(), da3.data(), da3.size());
    std::vector<T> dp2(c.p2.size(), T(0));
    conv3x3_backward(c.p2.data(), p(4), da3.data(), dp2.data(), g(4), g(5), n, s / 4, s / 4, ch, ch);

    std::vector<T> da2(c.a2.size(), T(0));
    maxpool2x2_backward(dp2.data(), c.arg2.data(), da2.data(), n, s / 2, s / 2, ch);
    relu_backward(c.a2.data(), da2.data(), da2.data(), da2.size());
    std::vector<T> dp1(c.p1.size(), T(0));
    conv3x3_backward(c.p1.data(), p(2), da2.data(), dp1.data(), g(2), g(3), n, s / 2, s / 2, ch, ch);

    std::vector<T> da1(c.a1.size(), T(0));
    maxpool2x2_backward(dp1.data(), c.arg1.data(), da1.data(), n, s, s, ch);
    relu_backward(c.a1.data(), da1.data(), da1.data(), da1.size());
    std::vector<T> dx(static_cast<std::size_t>(n) * s * s, T(0));
    conv3x3_backward(x, p(0), da1.data(), dx.data(), g(0), g(1), n, s, s, 1, ch);

    return loss;
}

template <class T>
void Cnn3x32T<T>::forward_to_block(const T* x, int n, int block, std::vector<T>& out, int& h, int& w) const {
    if (block < 1 || block > 3) throw std::invalid_argument("probe attach block must be in {1,2,3}");
    Cache c;
    forward(x, n, c);  // small batches keep the activation cache modest
    const std::vector<T>& tap = block == 1 ? c.p1 : block == 2 ? c.p2 : c.p3;
    out = tap;
    h = w = map_size(block);
}

// --------------------------------------------------------------- Probe ----

std::string to_string(ProbeKind k) {
    return k == ProbeKind::lin ? "lin" : "conv_lin";
}

template <class T>
ProbeT<T>::ProbeT(const ProbeSpec& spec, int in_channels, int map_h, int map_w, std::uint64_t seed)
    : spec_(spec), in_channels_(in_channels), map_h_(map_h), map_w_(map_w) {
    if (spec.attach_after_block < 1 || spec.attach_after_block > 3)
        throw std::invalid_argument("probe attach block must be in {1,2,3}");
    auto add = [&](ParamKind kind, std::vector<int> shape) {
        ParamEntry e{kind, std::move(shape), layout_.empty() ? 0 : layout_.back().offset + layout_.back().size, 0};
        e.size = shape_elems(e.shape);
        layout_.push_back(e);
    };
    if (spec.kind == ProbeKind::conv_lin) {
        add(ParamKind::conv1x1_w, {in_channels, spec.conv_channels});
        add(ParamKind::bias, {spec.conv_channels});
        add(ParamKind::dense_w, {spec.conv_channels, 1});
        add(ParamKind::bias, {1});
    } else {
        add(ParamKind::dense_w, {in_channels, 1});
        add(ParamKind::bias, {1});
    }
    params_.assign(layout_.back().offset + layout_.back().size, T(0));
    Rng rng(sub_seed(seed, "probe/init"));
    he_init(params_, layout_, rng);
}

template <class T>
void ProbeT<T>::forward(const T* tap, int n, Cache& c) const {
    c.n = n;
    c.pred.resize(static_cast<std::size_t>(n));
    if (spec_.kind == ProbeKind::conv_lin) {
        int k = spec_.conv_channels;
        c.conv.resize(static_cast<std::size_t>(n) * map_h_ * map_w_ * k);
        c.pooled.resize(static_cast<std::size_t>(n) * k);
        conv1x1_forward(tap, c.conv.data(), p(0), p(1), n, map_h_, map_w_, in_channels_, k);
        relu_forward(c.conv.data(), c.conv.data(), c.conv.size());
        gap_forward(c.conv.data(), c.pooled.data(), n, map_h_, map_w_, k);
        dense_forward(c.pooled.data(), c.pred.data(), p(2), p(3), n, k, 1);
    } else {
        c.pooled.resize(static_cast<std::size_t>(n) * in_channels_);
        gap_forward(tap, c.pooled.data(), n, map_h_, map_w_, in_channels_);
        dense_forward(c.pooled.data(), c.pred.data(), p(0), p(1), n, in_channels_, 1);
    }
}

template <class T>
double ProbeT<T>::backward(const T* tap, const double* y, int n, const Cache& c, std::vector<T>& grads) const {
    grads.assign(params_.size(), T(0));
    auto g = [&](int i) { return grads.data() + layout_[static_cast<std::size_t>(i)].offset; };

    double loss = 0.0;
    std::vector<T> dpred(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        double r = static_cast<double>(c.pred[static_cast<std::size_t>(i)]) - y[i];
        loss += r * r;
        dpred[static_cast<std::size_t>(i)] = static_cast<T>(2.0 * r / n);
    }
    loss /= n;

    if (spec_.kind == ProbeKind::conv_lin) {
        int k = spec_.conv_channels;
        std::vector<T> dpooled(c.pooled.size(), T(0));
        dense_backward(c.pooled.data(), p(2), dpred.data(), dpooled.data(), g(2), g(3), n, k, 1);
        std::vector<T> dconv(c.conv.size(), T(0));
        gap_backward(dpooled.data(), dconv.data(), n, map_h_, map_w_, k);
        relu_backward(c.conv.data(), dconv.data(), dconv.data(), dconv.size());
        std::vector<T> dtap(static_cast<std::size_t>(n) * map_h_ * map_w_ * in_channels_, T(0));
        conv1x1_backward(tap, p(0), dconv.data(), dtap.data(), g(0), g(1), n, map_h_, map_w_, in_channels_, k);
    } else {
        std::vector<T> dpooled(c.pooled.size(), T(0));
        dense_backward(c.pooled.data(), p(0), dpred.data(), dpooled.data(), g(0), g(1), n, in_channels_, 1);
        // gradient stops at the frozen tap
    }
    return loss;
}

// ---------------------------------------------------------- checkpoint ----

std::string params_sha256(const std::vector<real>& params) {
    std::vector<std::uint8_t> bytes(params.size() * 4);
    for (std::size_t i = 0; i < params.size(); ++i) {
        std::uint32_t b;
        std::memcpy(&b, &params[i], 4);
        bytes[4 * i] = static_cast<std::uint8_t>(b & 0xff);
        bytes[4 * i + 1] = static_cast<std::uint8_t>((b >> 8) & 0xff);
        bytes[4 * i + 2] = static_cast<std::uint8_t>((b >> 16) & 0xff);
        bytes[4 * i + 3] = static_cast<std::uint8_t>((b >> 24) & 0xff);
    }
    return sha256_hex(bytes);
}

namespace {

void put_u32(std::ofstream& f, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xff), static_cast<unsigned char>((v >> 8) & 0xff),
                          static_cast<unsigned char>((v >> 16) & 0xff), static_cast<unsigned char>((v >> 24) & 0xff)};
    f.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::ifstream& f) {
    unsigned char b[4];
    if (!f.read(reinterpret_cast<char*>(b), 4)) throw DataError("truncated checkpoint");
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Cnn3x32& model, const std::string& config_hash) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot write checkpoint: " + path.string());
    f.write("SGNN", 4);
    put_u32(f, 1);  // version
    put_u32(f, static_cast<std::uint32_t>(model.input_size()));
    put_u32(f, static_cast<std::uint32_t>(model.channels()));
    put_u32(f, static_cast<std::uint32_t>(model.hidden()));
    put_u32(f, static_cast<std::uint32_t>(model.layout().size()));
    for (const auto& e : model.layout()) {
        put_u32(f, static_cast<std::uint32_t>(e.kind));
        put_u32(f, static_cast<std::uint32_t>(e.shape.size()));
        for (int d : e.shape) put_u32(f, static_cast<std::uint32_t>(d));
    }
    for (real v : model.params()) {
        std::uint32_t b;
        std::memcpy(&b, &v, 4);
        put_u32(f, b);
    }
    if (!f) throw DataError("checkpoint write failed: " + path.string());

    // JSON twin for inspection
    json layers = json::array();
    for (const auto& e : model.layout())
        layers.push_back({{"kind", static_cast<int>(e.kind)}, {"shape", e.shape}, {"offset", e.offset}, {"size", e.size}});
    json twin{{"format", "SGNN"},
              {"version", 1},
              {"input_size", model.input_size()},
              {"channels", model.channels()},
              {"hidden", model.hidden()},
              {"param_count", model.params().size()},
              {"params_sha256", params_sha256(model.params())},
              {"config_hash", config_hash},
              {"layers", layers}};
    std::ofstream tf(path.string() + ".json");
    tf << twin.dump(2) << "\n";
}

Cnn3x32 load_checkpoint(const std::filesystem::path& path, std::string* config_hash) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError("missing checkpoint: " + path.string());
    char magic[4];
    if (!f.read(magic, 4) || std::memcmp(magic, "SGNN", 4) != 0) throw DataError("bad checkpoint magic: " + path.string());
    if (get_u32(f) != 1) throw DataError("unsupported checkpoint version: " + path.string());
    int input_size = static_cast<int>(get_u32(f));
    int channels = static_cast<int>(get_u32(f));
    int hidden = static_cast<int>(get_u32(f));
    Cnn3x32 model(input_size, channels, hidden, 0);
    std::uint32_t n_layers = get_u32(f);
    if (n_layers != model.layout().size()) throw DataError("checkpoint layer table mismatch: " + path.string());
    for (const auto& e : model.layout()) {
        if (get_u32(f) != static_cast<std::uint32_t>(e.kind)) throw DataError("checkpoint layer kind mismatch");
        std::uint32_t ndims = get_u32(f);
        if (ndims != e.shape.size()) throw DataError("checkpoint layer rank mismatch");
        for (int d : e.shape)
            if (get_u32(f) != static_cast<std::uint32_t>(d)) throw DataError("checkpoint layer shape mismatch");
    }
    for (real& v : model.params()) {
        std::uint32_t b = get_u32(f);
        std::memcpy(&v, &b, 4);
    }
    if (config_hash) {
        std::ifstream tf(path.string() + ".json");
        *config_hash = tf ? json::parse(tf).value("config_hash", "") : "";
    }
    return model;
}

template class Cnn3x32T<float>;
template class Cnn3x32T<double>;
template class ProbeT<float>;
template class ProbeT<double>;

}  // namespace sgq::nn
