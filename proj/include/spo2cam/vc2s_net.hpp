#pragma once

// Dual-path convolutional regressor: a video-frame branch and a color-check
// branch fused by concatenation. The architecture is fixed, so rather than a
// general autodiff graph each layer carries a hand-written forward and
// backward. Everything is templated on the scalar type: training runs in
// float, gradient verification in double.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "spo2cam/errors.hpp"
#include "spo2cam/rng.hpp"

namespace spo2cam::vc2s {

inline constexpr int kCheckerPatches = 24;
inline constexpr int kAdaptiveH = 10;
inline constexpr int kAdaptiveW = 10;
inline constexpr int kMinInput = 20;  // two valid 5x5 convs + pools need this

// Flat parameter layout. One contiguous buffer keeps the optimizer, the
// finite-difference probe, and checkpoint I/O trivial.
//   conv_video: 16 filters x 3ch x 5x5          weights then 16 biases
//   conv_color: 16 filters x 3ch x 1x1          weights then 16 biases
//   conv_fuse:  64 filters x 32ch x 5x5         weights then 64 biases
//   fc1:        64 x (64*10*10)                 weights then 64 biases
//   fc2:        1 x 64                          weights then 1 bias
inline constexpr std::size_t kConvVideoW = 0;
inline constexpr std::size_t kConvVideoB = kConvVideoW + 16 * 3 * 5 * 5;
inline constexpr std::size_t kConvColorW = kConvVideoB + 16;
inline constexpr std::size_t kConvColorB = kConvColorW + 16 * 3;
inline constexpr std::size_t kConvFuseW = kConvColorB + 16;
inline constexpr std::size_t kConvFuseB = kConvFuseW + 64 * 32 * 5 * 5;
inline constexpr std::size_t kFc1W = kConvFuseB + 64;
inline constexpr std::size_t kFc1B = kFc1W + 64 * (64 * kAdaptiveH * kAdaptiveW);
inline constexpr std::size_t kFc2W = kFc1B + 64;
inline constexpr std::size_t kFc2B = kFc2W + 64;
inline constexpr std::size_t kParamCount = kFc2B + 1;
static_assert(kParamCount == 462273);

struct Dims {
    int in_h = 0, in_w = 0;
    int vc_h = 0, vc_w = 0;  // video conv output (valid 5x5)
    int vp_h = 0, vp_w = 0;  // video pool output (2x2 stride 2, ceil)
    int cp_h = 0, cp_w = 0;  // color pool output
    int fu_h = 0, fu_w = 0;  // fuse conv output
    int fp_h = 0, fp_w = 0;  // fuse pool output

    static Dims from_input(int h, int w) {
        if (h < kMinInput || w < kMinInput)
            throw ShapeMismatch("vc2s: ROI " + std::to_string(h) + "x" + std::to_string(w) +
                                " below the " + std::to_string(kMinInput) + "px minimum");
        Dims d;
        d.in_h = h;
        d.in_w = w;
        d.vc_h = h - 4;
        d.vc_w = w - 4;
        d.vp_h = (d.vc_h + 1) / 2;
        d.vp_w = (d.vc_w + 1) / 2;
        d.cp_h = (kCheckerPatches + 1) / 2;
        d.cp_w = 1;
        d.fu_h = d.vp_h - 4;
        d.fu_w = d.vp_w - 4;
        d.fp_h = (d.fu_h + 1) / 2;
        d.fp_w = (d.fu_w + 1) / 2;
        return d;
    }
};

namespace detail {

// ---- primitive layers ------------------------------------------------------

// Valid convolution, stride 1. in: (ic, ih, iw); out: (oc, ih-k+1, iw-k+1).
template <typename T>
void conv_forward(const T* w, const T* b, const T* in, int ic, int ih, int iw, T* out, int oc,
                  int k) {
    const int oh = ih - k + 1, ow = iw - k + 1;
    for (int o = 0; o < oc; ++o)
        for (int y = 0; y < oh; ++y)
            for (int x = 0; x < ow; ++x) {
                T acc = b[o];
                for (int c = 0; c < ic; ++c) {
                    const T* wp = w + ((static_cast<std::size_t>(o) * ic + c) * k) * k;
                    const T* ip = in + (static_cast<std::size_t>(c) * ih + y) * iw + x;
                    for (int ky = 0; ky < k; ++ky)
                        for (int kx = 0; kx < k; ++kx) acc += wp[ky * k + kx] * ip[ky * iw + kx];
                }
                out[(static_cast<std::size_t>(o) * oh + y) * ow + x] = acc;
            }
}

template <typename T>
void conv_backward(const T* w, const T* in, const T* d_out, int ic, int ih, int iw, int oc, int k,
                   T* d_w, T* d_b, T* d_in) {
    const int oh = ih - k + 1, ow = iw - k + 1;
    for (int o = 0; o < oc; ++o)
        for (int y = 0; y < oh; ++y)
            for (int x = 0; x < ow; ++x) {
                const T g = d_out[(static_cast<std::size_t>(o) * oh + y) * ow + x];
                if (g == T(0)) continue;
                d_b[o] += g;
                for (int c = 0; c < ic; ++c) {
                    T* dwp = d_w + ((static_cast<std::size_t>(o) * ic + c) * k) * k;
                    const T* wp = w + ((static_cast<std::size_t>(o) * ic + c) * k) * k;
                    const T* ip = in + (static_cast<std::size_t>(c) * ih + y) * iw + x;
                    T* dip = d_in ? d_in + (static_cast<std::size_t>(c) * ih + y) * iw + x
                                  : nullptr;
                    for (int ky = 0; ky < k; ++ky)
                        for (int kx = 0; kx < k; ++kx) {
                            dwp[ky * k + kx] += g * ip[ky * iw + kx];
                            if (dip) dip[ky * iw + kx] += g * wp[ky * k + kx];
                        }
                }
            }
}

template <typename T>
void relu_inplace(T* v, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i)
        if (v[i] < T(0)) v[i] = T(0);
}

// d_pre = d_post where the stored post-activation is positive.
template <typename T>
void relu_backward_inplace(const T* post, T* d, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i)
        if (post[i] <= T(0)) d[i] = T(0);
}

// 2x2 stride-2 max pooling with clamped (ceil-mode) edge windows, so odd and
// even extents both survive; arg records the winning input index per output.
template <typename T>
void maxpool_forward(const T* in, int c, int ih, int iw, T* out, int* arg) {
    const int oh = (ih + 1) / 2, ow = (iw + 1) / 2;
    for (int ch = 0; ch < c; ++ch) {
        const T* ip = in + static_cast<std::size_t>(ch) * ih * iw;
        T* op = out + static_cast<std::size_t>(ch) * oh * ow;
        int* ap = arg + static_cast<std::size_t>(ch) * oh * ow;
        for (int y = 0; y < oh; ++y)
            for (int x = 0; x < ow; ++x) {
                const int y1 = std::min(2 * y + 2, ih), x1 = std::min(2 * x + 2, iw);
                int best = 2 * y * iw + 2 * x;
                T bv = ip[best];
                for (int yy = 2 * y; yy < y1; ++yy)
                    for (int xx = 2 * x; xx < x1; ++xx)
                        if (ip[yy * iw + xx] > bv) {
                            bv = ip[yy * iw + xx];
                            best = yy * iw + xx;
                        }
                op[y * ow + x] = bv;
                ap[y * ow + x] = best;
            }
    }
}

template <typename T>
void maxpool_backward(const T* d_out, const int* arg, int c, int ih, int iw, T* d_in) {
    const int oh = (ih + 1) / 2, ow = (iw + 1) / 2;
    for (int ch = 0; ch < c; ++ch) {
        const T* dop = d_out + static_cast<std::size_t>(ch) * oh * ow;
        const int* ap = arg + static_cast<std::size_t>(ch) * oh * ow;
        T* dip = d_in + static_cast<std::size_t>(ch) * ih * iw;
        for (int i = 0; i < oh * ow; ++i) dip[ap[i]] += dop[i];
    }
}

// Adaptive average pooling: output cell (oy,ox) averages input rows
// [oy*ih/oh, ceil((oy+1)*ih/oh)) x the analogous columns. Handles both
// down- and up-sampling, which the color branch needs.
template <typename T>
void adaptive_avg_forward(const T* in, int c, int ih, int iw, T* out, int oh, int ow) {
    for (int ch = 0; ch < c; ++ch) {
        const T* ip = in + static_cast<std::size_t>(ch) * ih * iw;
        T* op = out + static_cast<std::size_t>(ch) * oh * ow;
        for (int oy = 0; oy < oh; ++oy) {
            const int y0 = oy * ih / oh, y1 = ((oy + 1) * ih + oh - 1) / oh;
            for (int ox = 0; ox < ow; ++ox) {
                const int x0 = ox * iw / ow, x1 = ((ox + 1) * iw + ow - 1) / ow;
                T acc = T(0);
                for (int y = y0; y < y1; ++y)
                    for (int x = x0; x < x1; ++x) acc += ip[y * iw + x];
                op[oy * ow + ox] = acc / static_cast<T>((y1 - y0) * (x1 - x0));
            }
        }
    }
}

template <typename T>
void adaptive_avg_backward(const T* d_out, int c, int ih, int iw, int oh, int ow, T* d_in) {
    for (int ch = 0; ch < c; ++ch) {
        const T* dop = d_out + static_cast<std::size_t>(ch) * oh * ow;
        T* dip = d_in + static_cast<std::size_t>(ch) * ih * iw;
        for (int oy = 0; oy < oh; ++oy) {
            const int y0 = oy * ih / oh, y1 = ((oy + 1) * ih + oh - 1) / oh;
            for (int ox = 0; ox < ow; ++ox) {
                const int x0 = ox * iw / ow, x1 = ((ox + 1) * iw + ow - 1) / ow;
                const T g = dop[oy * ow + ox] / static_cast<T>((y1 - y0) * (x1 - x0));
                for (int y = y0; y < y1; ++y)
                    for (int x = x0; x < x1; ++x) dip[y * iw + x] += g;
            }
        }
    }
}

}  // namespace detail

// Per-sample activations and argmax records; reusable across calls.
template <typename T>
struct Work {
    Dims d;
    std::vector<T> v_conv, v_pool;
    std::vector<int> v_arg;
    std::vector<T> c_conv, c_pool, c_adapt;
    std::vector<int> c_arg;
    std::vector<T> concat, f_conv, f_pool, f_adapt;
    std::vector<int> f_arg;
    std::vector<T> fc1_act;
    // gradient scratch, sized lazily by backward
    std::vector<T> g_roi, g_vconv, g_vpool, g_cconv, g_cpool, g_cadapt, g_concat, g_fconv,
        g_fpool, g_fadapt, g_fc1;

    explicit Work(const Dims& dims) : d(dims) {
        v_conv.resize(std::size_t{16} * d.vc_h * d.vc_w);
        v_pool.resize(std::size_t{16} * d.vp_h * d.vp_w);
        v_arg.resize(v_pool.size());
        c_conv.resize(std::size_t{16} * kCheckerPatches);
        c_pool.resize(std::size_t{16} * d.cp_h);
        c_arg.resize(c_pool.size());
        c_adapt.resize(std::size_t{16} * d.vp_h * d.vp_w);
        concat.resize(std::size_t{32} * d.vp_h * d.vp_w);
        f_conv.resize(std::size_t{64} * d.fu_h * d.fu_w);
        f_pool.resize(std::size_t{64} * d.fp_h * d.fp_w);
        f_arg.resize(f_pool.size());
        f_adapt.resize(std::size_t{64} * kAdaptiveH * kAdaptiveW);
        fc1_act.resize(64);
    }
};

/// roi: (3, in_h, in_w) in [0,1]; checker: (3, 24, 1). Returns the scalar
/// prediction. Pure in (params, inputs).
template <typename T>
T forward_one(const std::vector<T>& params, const T* roi, const T* checker, Work<T>& w) {
    using namespace detail;
    const Dims& d = w.d;
    const T* p = params.data();

    conv_forward(p + kConvVideoW, p + kConvVideoB, roi, 3, d.in_h, d.in_w, w.v_conv.data(), 16, 5);
    relu_inplace(w.v_conv.data(), w.v_conv.size());
    maxpool_forward(w.v_conv.data(), 16, d.vc_h, d.vc_w, w.v_pool.data(), w.v_arg.data());

    conv_forward(p + kConvColorW, p + kConvColorB, checker, 3, kCheckerPatches, 1,
                 w.c_conv.data(), 16, 1);
    relu_inplace(w.c_conv.data(), w.c_conv.size());
    maxpool_forward(w.c_conv.data(), 16, kCheckerPatches, 1, w.c_pool.data(), w.c_arg.data());
    adaptive_avg_forward(w.c_pool.data(), 16, d.cp_h, d.cp_w, w.c_adapt.data(), d.vp_h, d.vp_w);

    const std::size_t plane = static_cast<std::size_t>(d.vp_h) * d.vp_w;
    std::copy_n(w.v_pool.data(), 16 * plane, w.concat.data());
    std::copy_n(w.c_adapt.data(), 16 * plane, w.concat.data() + 16 * plane);

    conv_forward(p + kConvFuseW, p + kConvFuseB, w.concat.data(), 32, d.vp_h, d.vp_w,
                 w.f_conv.data(), 64, 5);
    relu_inplace(w.f_conv.data(), w.f_conv.size());
    maxpool_forward(w.f_conv.data(), 64, d.fu_h, d.fu_w, w.f_pool.data(), w.f_arg.data());
    adaptive_avg_forward(w.f_pool.data(), 64, d.fp_h, d.fp_w, w.f_adapt.data(), kAdaptiveH,
                         kAdaptiveW);

    const std::size_t flat = w.f_adapt.size();
    for (int o = 0; o < 64; ++o) {
        T acc = p[kFc1B + o];
        const T* wp = p + kFc1W + static_cast<std::size_t>(o) * flat;
        for (std::size_t i = 0; i < flat; ++i) acc += wp[i] * w.f_adapt[i];
        w.fc1_act[o] = acc > T(0) ? acc : T(0);
    }
    T out = p[kFc2B];
    for (int o = 0; o < 64; ++o) out += p[kFc2W + o] * w.fc1_act[o];
    return out;
}

/// Accumulates d(loss)/d(param) into `grad` (+=) for one sample whose forward
/// pass filled `w`. `d_out` is d(loss)/d(prediction) for this sample. The roi
/// and checker pointers must be the forward inputs.
template <typename T>
void backward_one(const std::vector<T>& params, const T* roi, const T* checker, Work<T>& w,
                  T d_out, std::vector<T>& grad) {
    using namespace detail;
    const Dims& d = w.d;
    const T* p = params.data();
    T* g = grad.data();

    auto zero_resize = [](std::vector<T>& v, std::size_t n) {
        v.assign(n, T(0));
    };

    // fc2
    zero_resize(w.g_fc1, 64);
    g[kFc2B] += d_out;
    for (int o = 0; o < 64; ++o) {
        g[kFc2W + o] += d_out * w.fc1_act[o];
        w.g_fc1[o] = d_out * p[kFc2W + o];
    }
    relu_backward_inplace(w.fc1_act.data(), w.g_fc1.data(), 64);

    // fc1
    const std::size_t flat = w.f_adapt.size();
    zero_resize(w.g_fadapt, flat);
    for (int o = 0; o < 64; ++o) {
        const T go = w.g_fc1[o];
        if (go == T(0)) continue;
        g[kFc1B + o] += go;
        T* gwp = g + kFc1W + static_cast<std::size_t>(o) * flat;
        const T* wp = p + kFc1W + static_cast<std::size_t>(o) * flat;
        for (std::size_t i = 0; i < flat; ++i) {
            gwp[i] += go * w.f_adapt[i];
            w.g_fadapt[i] += go * wp[i];
        }
    }

    // fuse pool chain
    zero_resize(w.g_fpool, w.f_pool.size());
    adaptive_avg_backward(w.g_fadapt.data(), 64, d.fp_h, d.fp_w, kAdaptiveH, kAdaptiveW,
                          w.g_fpool.data());
    zero_resize(w.g_fconv, w.f_conv.size());
    maxpool_backward(w.g_fpool.data(), w.f_arg.data(), 64, d.fu_h, d.fu_w, w.g_fconv.data());
    relu_backward_inplace(w.f_conv.data(), w.g_fconv.data(), w.f_conv.size());
    zero_resize(w.g_concat, w.concat.size());
    conv_backward(p + kConvFuseW, w.concat.data(), w.g_fconv.data(), 32, d.vp_h, d.vp_w, 64, 5,
                  g + kConvFuseW, g + kConvFuseB, w.g_concat.data());

    const std::size_t plane = static_cast<std::size_t>(d.vp_h) * d.vp_w;

    // video branch
    zero_resize(w.g_vconv, w.v_conv.size());
    maxpool_backward(w.g_concat.data(), w.v_arg.data(), 16, d.vc_h, d.vc_w, w.g_vconv.data());
    relu_backward_inplace(w.v_conv.data(), w.g_vconv.data(), w.v_conv.size());
    conv_backward(p + kConvVideoW, roi, w.g_vconv.data(), 3, d.in_h, d.in_w, 16, 5,
                  g + kConvVideoW, g + kConvVideoB, static_cast<T*>(nullptr));

    // color branch
    zero_resize(w.g_cpool, w.c_pool.size());
    adaptive_avg_backward(w.g_concat.data() + 16 * plane, 16, d.cp_h, d.cp_w, d.vp_h, d.vp_w,
                          w.g_cpool.data());
    zero_resize(w.g_cconv, w.c_conv.size());
    maxpool_backward(w.g_cpool.data(), w.c_arg.data(), 16, kCheckerPatches, 1, w.g_cconv.data());
    relu_backward_inplace(w.c_conv.data(), w.g_cconv.data(), w.c_conv.size());
    conv_backward(p + kConvColorW, checker, w.g_cconv.data(), 3, kCheckerPatches, 1, 16, 1,
                  g + kConvColorW, g + kConvColorB, static_cast<T*>(nullptr));
}

/// Mean over the batch of (out - y)^2 * (1 - y/100): squared error with a
/// per-sample label weight that shrinks toward zero as saturation nears 100.
template <typename T>
T weighted_loss(const std::vector<T>& outputs, const std::vector<T>& labels) {
    if (outputs.empty() || outputs.size() != labels.size())
        throw LengthMismatch("weighted_loss: " + std::to_string(outputs.size()) +
                             " outputs vs " + std::to_string(labels.size()) + " labels");
    T acc = T(0);
    for (std::size_t i = 0; i < outputs.size(); ++i) {
        const T d = outputs[i] - labels[i];
        acc += d * d * (T(1) - labels[i] / T(100));
    }
    return acc / static_cast<T>(outputs.size());
}

/// d(weighted_loss)/d(out_i) for a batch of the given size.
template <typename T>
T weighted_loss_grad(T out, T label, std::size_t batch) {
    return T(2) * (out - label) * (T(1) - label / T(100)) / static_cast<T>(batch);
}

/// Kaiming-style uniform init, bound sqrt(6 / fan_in) per layer; biases zero.
/// Weights are drawn in flat-layout order from the given stream, so a fixed
/// seed fixes the parameters exactly.
template <typename T>
std::vector<T> init_params(Rng& rng) {
    std::vector<T> p(kParamCount, T(0));
    struct Block {
        std::size_t begin, count;
        double fan_in;
    };
    const Block blocks[] = {{kConvVideoW, 16 * 3 * 5 * 5, 3 * 5 * 5},
                            {kConvColorW, 16 * 3, 3},
                            {kConvFuseW, std::size_t{64} * 32 * 5 * 5, 32 * 5 * 5},
                            {kFc1W, std::size_t{64} * 64 * kAdaptiveH * kAdaptiveW,
                             64 * kAdaptiveH * kAdaptiveW},
                            {kFc2W, 64, 64}};
    for (const auto& b : blocks) {
        const double bound = std::sqrt(6.0 / b.fan_in);
        for (std::size_t i = 0; i < b.count; ++i)
            p[b.begin + i] = static_cast<T>(rng.uniform(-bound, bound));
    }
    return p;
}

/// Epoch learning rate: eta0 * (1 + cos(pi * t / t_max)) / 2.
inline double cosine_lr(double eta0, int t, int t_max) {
    return eta0 * (1.0 + std::cos(M_PI * static_cast<double>(t) / t_max)) / 2.0;
}

}  // namespace spo2cam::vc2s
