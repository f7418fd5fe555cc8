#pragma once

#include <algorithm>
#include <cassert>
#include <cstddef>
#include <cstdint>
#include <vector>

// Layer kernels for the minimal NN engine. All tensors are NHWC, contiguous,
// row-major; weights are laid out with the output channel contiguous so the
// hot loops reduce to AXPY/dot over `co`. Everything is templated on the
// scalar so the training engine runs in float while gradient-check tests
// instantiate the identical code in double.

namespace sgq::nn {

// in [N,H,W,Ci] -> out [N,H,W,Co], 3x3 kernel, zero-padded borders.
// w [3,3,Ci,Co], b [Co]
template <class T>
void conv3x3_forward(const T* in, T* out, const T* w, const T* b, int n, int h, int wd, int ci, int co) {
    for (int img = 0; img < n; ++img) {
        const T* in_img = in + static_cast<std::ptrdiff_t>(img) * h * wd * ci;
        T* out_img = out + static_cast<std::ptrdiff_t>(img) * h * wd * co;
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < wd; ++x) {
                T* o = out_img + (static_cast<std::ptrdiff_t>(y) * wd + x) * co;
                for (int c = 0; c < co; ++c) o[c] = b[c];
                for (int ky = 0; ky < 3; ++ky) {
                    int yy = y + ky - 1;
                    if (yy < 0 || yy >= h) continue;
                    for (int kx = 0; kx < 3; ++kx) {
                        int xx = x + kx - 1;
                        if (xx < 0 || xx >= wd) continue;
                        const T* iv = in_img + (static_cast<std::ptrdiff_t>(yy) * wd + xx) * ci;
                        const T* wv = w + ((static_cast<std::ptrdiff_t>(ky) * 3 + kx) * ci) * co;
                        for (int c = 0; c < ci; ++c) {
                            T v = iv[c];
                            const T* wr = wv + static_cast<std::ptrdiff_t>(c) * co;
                            for (int k = 0; k < co; ++k) o[k] += v * wr[k];
                        }
                    }
                }
            }
        }
    }
}

// Gradients w.r.t. input, weights and bias. din/dw/db must be zero-filled by
// the caller (they are accumulated into).
template <class T>
void conv3x3_backward(const T* in, const T* w, const T* dout, T* din, T* dw, T* db, int n, int h, int wd, int ci,
                      int co) {
    for (int img = 0; img < n; ++img) {
        const T* in_img = in + static_cast<std::ptrdiff_t>(img) * h * wd * ci;
        const T* dout_img = dout + static_cast<std::ptrdiff_t>(img) * h * wd * co;
        T* din_img = din + static_cast<std::ptrdiff_t>(img) * h * wd * ci;
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < wd; ++x) {
                const T* go = dout_img + (static_cast<std::ptrdiff_t>(y) * wd + x) * co;
                for (int k = 0; k < co; ++k) db[k] += go[k];
                for (int ky = 0; ky < 3; ++ky) {
                    int yy = y + ky - 1;
                    if (yy < 0 || yy >= h) continue;
                    for (int kx = 0; kx < 3; ++kx) {
                        int xx = x + kx - 1;
                        if (xx < 0 || xx >= wd) continue;
                        const T* iv = in_img + (static_cast<std::ptrdiff_t>(yy) * wd + xx) * ci;
                        T* dv = din_img + (static_cast<std::ptrdiff_t>(yy) * wd + xx) * ci;
                        const T* wv = w + ((static_cast<std::ptrdiff_t>(ky) * 3 + kx) * ci) * co;
                        T* dwv = dw + ((static_cast<std::ptrdiff_t>(ky) * 3 + kx) * ci) * co;
                        for (int c = 0; c < ci; ++c) {
                            const T* wr = wv + static_cast<std::ptrdiff_t>(c) * co;
                            T* dwr = dwv + static_cast<std::ptrdiff_t>(c) * co;
                            T v = iv[c];
                            T acc = 0;
                            for (int k = 0; k < co; ++k) {
                                acc += wr[k] * go[k];
                                dwr[k] += v * go[k];
                            }
                            dv[c] += acc;
                        }
                    }
                }
            }
        }
    }
}

// 1x1 convolution (channel recombiner). w [Ci,Co], b [Co].
template <class T>
void conv1x1_forward(const T* in, T* out, const T* w, const T* b, int n, int h, int wd, int ci, int co) {
    std::ptrdiff_t pixels = static_cast<std::ptrdiff_t>(n) * h * wd;
    for (std::ptrdiff_t p = 0; p < pixels; ++p) {
        const T* iv = in + p * ci;
        T* o = out + p * co;
        for (int k = 0; k < co; ++k) o[k] = b[k];
        for (int c = 0; c < ci; ++c) {
            T v = iv[c];
            const T* wr = w + static_cast<std::ptrdiff_t>(c) * co;
            for (int k = 0; k < co; ++k) o[k] += v * wr[k];
        }
    }
}

template <class T>
void conv1x1_backward(const T* in, const T* w, const T* dout, T* din, T* dw, T* db, int n, int h, int wd, int ci,
                      int co) {
    std::ptrdiff_t pixels = static_cast<std::ptrdiff_t>(n) * h * wd;
    for (std::ptrdiff_t p = 0; p < pixels; ++p) {
        const T* iv = in + p * ci;
        const T* go = dout + p * co;
        T* dv = din + p * ci;
        for (int k = 0; k < co; ++k) db[k] += go[k];
        for (int c = 0; c < ci; ++c) {
            const T* wr = w + static_cast<std::ptrdiff_t>(c) * co;
            T* dwr = dw + static_cast<std::ptrdiff_t>(c) * co;
            T v = iv[c];
            T acc = 0;
            for (int k = 0; k < co; ++k) {
                acc += wr[k] * go[k];
                dwr[k] += v * go[k];
            }
            dv[c] += acc;
        }
    }
}

template <class T>
void relu_forward(const T* in, T* out, std::size_t count) {
    for (std::size_t i = 0; i < count; ++i) out[i] = in[i] > T(0) ? in[i] : T(0);
}

template <class T>
void relu_backward(const T* out, const T* dout, T* din, std::size_t count) {
    for (std::size_t i = 0; i < count; ++i) din[i] = out[i] > T(0) ? dout[i] : T(0);
}

// 2x2 max pooling, stride 2; `arg` records the winning quadrant (0..3) for
// the backward pass. Odd trailing rows/columns are dropped.
template <class T>
void maxpool2x2_forward(const T* in, T* out, std::uint8_t* arg, int n, int h, int wd, int c) {
    int oh = h / 2, ow = wd / 2;
    for (int img = 0; img < n; ++img) {
        const T* in_img = in + static_cast<std::ptrdiff_t>(img) * h * wd * c;
        T* out_img = out + static_cast<std::ptrdiff_t>(img) * oh * ow * c;
        std::uint8_t* arg_img = arg + static_cast<std::ptrdiff_t>(img) * oh * ow * c;
        for (int y = 0; y < oh; ++y) {
            for (int x = 0; x < ow; ++x) {
                const T* q00 = in_img + ((static_cast<std::ptrdiff_t>(2 * y)) * wd + 2 * x) * c;
                const T* q01 = q00 + c;
                const T* q10 = q00 + static_cast<std::ptrdiff_t>(wd) * c;
                const T* q11 = q10 + c;
                T* o = out_img + (static_cast<std::ptrdiff_t>(y) * ow + x) * c;
                std::uint8_t* a = arg_img + (static_cast<std::ptrdiff_t>(y) * ow + x) * c;
                for (int k = 0; k < c; ++k) {
                    T best = q00[k];
                    std::uint8_t idx = 0;
                    if (q01[k] > best) { best = q01[k]; idx = 1; }
                    if (q10[k] > best) { best = q10[k]; idx = 2; }
                    if (q11[k] > best) { best = q11[k]; idx = 3; }
                    o[k] = best;
                    a[k] = idx;
                }
            }
        }
    }
}

template <class T>
void maxpool2x2_backward(const T* dout, const std::uint8_t* arg, T* din, int n, int h, int wd, int c) {
    int oh = h / 2, ow = wd / 2;
    for (int img = 0; img < n; ++img) {
        const T* dout_img = dout + static_cast<std::ptrdiff_t>(img) * oh * ow * c;
        const std::uint8_t* arg_img = arg + static_cast<std::ptrdiff_t>(img) * oh * ow * c;
        T* din_img = din + static_cast<std::ptrdiff_t>(img) * h * wd * c;
        for (int y = 0; y < oh; ++y) {
            for (int x = 0; x < ow; ++x) {
                const T* go = dout_img + (static_cast<std::ptrdiff_t>(y) * ow + x) * c;
                const std::uint8_t* a = arg_img + (static_cast<std::ptrdiff_t>(y) * ow + x) * c;
                T* base = din_img + ((static_cast<std::ptrdiff_t>(2 * y)) * wd + 2 * x) * c;
                for (int k = 0; k < c; ++k) {
                    std::ptrdiff_t off = (a[k] >> 1) * static_cast<std::ptrdiff_t>(wd) * c + (a[k] & 1) * c;
                    base[off + k] += go[k];
                }
            }
        }
    }
}

// in [N,Din] -> out [N,Dout]; w [Din,Dout], b [Dout]
template <class T>
void dense_forward(const T* in, T* out, const T* w, const T* b, int n, int din, int dout) {
    for (int img = 0; img < n; ++img) {
        const T* iv = in + static_cast<std::ptrdiff_t>(img) * din;
        T* o = out + static_cast<std::ptrdiff_t>(img) * dout;
        for (int k = 0; k < dout; ++k) o[k] = b[k];
        for (int c = 0; c < din; ++c) {
            T v = iv[c];
            const T* wr = w + static_cast<std::ptrdiff_t>(c) * dout;
            for (int k = 0; k < dout; ++k) o[k] += v * wr[k];
        }
    }
}

template <class T>
void dense_backward(const T* in, const T* w, const T* dout, T* din, T* dw, T* db, int n, int dinn, int doutn) {
    for (int img = 0; img < n; ++img) {
        const T* iv = in + static_cast<std::ptrdiff_t>(img) * dinn;
        const T* go = dout + static_cast<std::ptrdiff_t>(img) * doutn;
        T* dv = din + static_cast<std::ptrdiff_t>(img) * dinn;
        for (int k = 0; k < doutn; ++k) db[k] += go[k];
        for (int c = 0; c < dinn; ++c) {
            const T* wr = w + static_cast<std::ptrdiff_t>(c) * doutn;
            T* dwr = dw + static_cast<std::ptrdiff_t>(c) * doutn;
            T v = iv[c];
            T acc = 0;
            for (int k = 0; k < doutn; ++k) {
                acc += wr[k] * go[k];
                dwr[k] += v * go[k];
            }
            dv[c] += acc;
        }
    }
}

// global average pool: [N,H,W,C] -> [N,C]
template <class T>
void gap_forward(const T* in, T* out, int n, int h, int wd, int c) {
    T inv = T(1) / static_cast<T>(h * wd);
    for (int img = 0; img < n; ++img) {
        const T* in_img = in + static_cast<std::ptrdiff_t>(img) * h * wd * c;
        T* o = out + static_cast<std::ptrdiff_t>(img) * c;
        std::fill(o, o + c, T(0));
        for (std::ptrdiff_t p = 0; p < static_cast<std::ptrdiff_t>(h) * wd; ++p) {
            const T* iv = in_img + p * c;
            for (int k = 0; k < c; ++k) o[k] += iv[k];
        }
        for (int k = 0; k < c; ++k) o[k] *= inv;
    }
}

template <class T>
void gap_backward(const T* dout, T* din, int n, int h, int wd, int c) {
    T inv = T(1) / static_cast<T>(h * wd);
    for (int img = 0; img < n; ++img) {
        const T* go = dout + static_cast<std::ptrdiff_t>(img) * c;
        T* din_img = din + static_cast<std::ptrdiff_t>(img) * h * wd * c;
        for (std::ptrdiff_t p = 0; p < static_cast<std::ptrdiff_t>(h) * wd; ++p) {
            T* dv = din_img + p * c;
            for (int k = 0; k < c; ++k) dv[k] += go[k] * inv;
        }
    }
}

}  // namespace sgq::nn
