#include "conv.hpp"

#define EIGEN_DONT_PARALLELIZE
#include <Eigen/Core>

#include <cstring>

// Implementation notes.
//
// A stride-1 "same" convolution is computed as kh*kw GEMMs ("one per kernel
// tap") over zero-padded input planes. For tap (u,v) the map
//   (i,j) -> padded[ci, i+u, j+v]
// over an *over-wide* output row of length PW = W + 2*pw is a single
// contiguous run of the padded plane starting at offset u*PW + v. Stacking
// the output rows therefore gives, per channel, one contiguous span of
// S = H*PW floats, and the whole tap contribution is one [Cout x Cin] by
// [Cin x S] product. The extra pw columns per output row land on padding and
// are dropped when the span is cropped back to [H,W].
//
// The backward pass reuses the same machinery:
//   d_input  = taps of the channel-transposed, spatially flipped kernel over
//              the padded upstream gradient (padding kh-1-ph, kw-1-pw);
//   d_kernel = per tap, [Cout x S] upstream-span times the transposed input
//              span view, where the upstream span's padding columns are zero
//              so the off-row positions contribute nothing;
//   d_bias   = plane sums of the upstream gradient.

namespace fseg {

namespace {

using RowMatF = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapRow = Eigen::Map<RowMatF>;
using CMapRow = Eigen::Map<const RowMatF>;
using CMapStride = Eigen::Map<const RowMatF, Eigen::Unaligned, Eigen::OuterStride<>>;

struct Dims {
    int64_t B, Cin, H, W, Cout, kh, kw, ph, pw;
};

Dims check(const Tensor& input, const Tensor& kernel, const Tensor& bias) {
    if (input.shape.size() != 4) throw Error(ErrCode::dimension, "conv2d: input must be 4-D [B,Cin,H,W]");
    if (kernel.shape.size() != 4) throw Error(ErrCode::dimension, "conv2d: kernel must be 4-D [Cout,Cin,kh,kw]");
    Dims d;
    d.B = input.shape[0];
    d.Cin = input.shape[1];
    d.H = input.shape[2];
    d.W = input.shape[3];
    d.Cout = kernel.shape[0];
    d.kh = kernel.shape[2];
    d.kw = kernel.shape[3];
    if (kernel.shape[1] != d.Cin)
        throw Error(ErrCode::dimension, "conv2d: kernel expects " + std::to_string(kernel.shape[1]) +
                                            " input channels, input has " + std::to_string(d.Cin));
    if ((d.kh != 1 && d.kh != 3) || (d.kw != 1 && d.kw != 3))
        throw Error(ErrCode::dimension, "conv2d: kernel extents must be 1 or 3");
    if (bias.shape.size() != 1 || bias.shape[0] != d.Cout)
        throw Error(ErrCode::dimension, "conv2d: bias must be [Cout]");
    d.ph = d.kh / 2;
    d.pw = d.kw / 2;
    return d;
}

/// Copy one sample's [C,H,W] planes into the interior of a padded buffer
/// whose border cells are already (and stay) zero.
void fill_padded(const float* src, int64_t C, int64_t H, int64_t W, int64_t ph, int64_t pw,
                 float* dst) {
    int64_t PW = W + 2 * pw, PH = H + 2 * ph;
    for (int64_t c = 0; c < C; ++c)
        for (int64_t y = 0; y < H; ++y)
            std::memcpy(dst + (c * PH + y + ph) * PW + pw, src + (c * H + y) * W,
                        size_t(W) * sizeof(float));
}

/// Repack [Cout,Cin,kh,kw] kernel into kh*kw contiguous [rows x cols] tap
/// matrices; transpose=false gives K_t(co,ci)=K[co,ci,u,v], transpose=true
/// gives the channel-transposed, spatially flipped taps used by d_input.
std::vector<float> pack_taps(const Tensor& kernel, const Dims& d, bool transpose) {
    int64_t taps = d.kh * d.kw;
    int64_t rows = transpose ? d.Cin : d.Cout;
    int64_t cols = transpose ? d.Cout : d.Cin;
    std::vector<float> packs(size_t(taps * rows * cols));
    for (int64_t u = 0; u < d.kh; ++u)
        for (int64_t v = 0; v < d.kw; ++v) {
            float* m = packs.data() + (u * d.kw + v) * rows * cols;
            for (int64_t co = 0; co < d.Cout; ++co)
                for (int64_t ci = 0; ci < d.Cin; ++ci) {
                    float k = transpose
                                  ? kernel.v[size_t(((co * d.Cin + ci) * d.kh + (d.kh - 1 - u)) * d.kw +
                                                    (d.kw - 1 - v))]
                                  : kernel.v[size_t(((co * d.Cin + ci) * d.kh + u) * d.kw + v)];
                    if (transpose)
                        m[ci * d.Cout + co] = k;
                    else
                        m[co * d.Cin + ci] = k;
                }
        }
    return packs;
}

/// scratch[rows x span] = sum over taps of pack_t * padded-view_t.
void tap_gemms(const float* padded, int64_t in_ch, int64_t plane, const float* packs,
               int64_t out_ch, int64_t kh, int64_t kw, int64_t PW, int64_t span, float* scratch) {
    MapRow out(scratch, out_ch, span);
    for (int64_t u = 0; u < kh; ++u)
        for (int64_t v = 0; v < kw; ++v) {
            CMapRow tap(packs + (u * kw + v) * out_ch * in_ch, out_ch, in_ch);
            CMapStride view(padded + u * PW + v, in_ch, span, Eigen::OuterStride<>(plane));
            if (u == 0 && v == 0)
                out.noalias() = tap * view;
            else
                out.noalias() += tap * view;
        }
}

} // namespace

Tensor conv2d_forward(const Tensor& input, const Tensor& kernel, const Tensor& bias) {
    Dims d = check(input, kernel, bias);
    Tensor out({d.B, d.Cout, d.H, d.W});

    const int64_t PW = d.W + 2 * d.pw, PH = d.H + 2 * d.ph;
    const int64_t plane = PH * PW, span = d.H * PW;
    const int64_t slack = (d.kh - 1) * PW + (d.kw - 1);
    std::vector<float> padded(size_t(d.Cin * plane + slack), 0.0f);
    std::vector<float> scratch(size_t(d.Cout * span));
    std::vector<float> packs = pack_taps(kernel, d, /*transpose=*/false);

    for (int64_t b = 0; b < d.B; ++b) {
        const float* in = input.v.data() + b * d.Cin * d.H * d.W;
        fill_padded(in, d.Cin, d.H, d.W, d.ph, d.pw, padded.data());
        tap_gemms(padded.data(), d.Cin, plane, packs.data(), d.Cout, d.kh, d.kw, PW, span,
                  scratch.data());
        float* o = out.v.data() + b * d.Cout * d.H * d.W;
        for (int64_t co = 0; co < d.Cout; ++co) {
            float bv = bias.v[size_t(co)];
            for (int64_t i = 0; i < d.H; ++i) {
                const float* srow = scratch.data() + co * span + i * PW;
                float* orow = o + (co * d.H + i) * d.W;
                for (int64_t j = 0; j < d.W; ++j) orow[j] = srow[j] + bv;
            }
        }
    }
    return out;
}

void conv2d_backward(const Tensor& upstream_grad, const Tensor& saved_input, const Tensor& kernel,
                     Tensor* input_grad, Tensor* kernel_grad, Tensor* bias_grad) {
    // bias shape is implied by the kernel; reuse check() with a synthetic bias
    Tensor fake_bias({kernel.shape[0]});
    Dims d = check(saved_input, kernel, fake_bias);
    std::vector<int64_t> out_shape{d.B, d.Cout, d.H, d.W};
    if (upstream_grad.shape != out_shape)
        throw Error(ErrCode::dimension, "conv2d_backward: upstream_grad shape mismatch");
    if (input_grad && input_grad->shape != saved_input.shape)
        throw Error(ErrCode::dimension, "conv2d_backward: input_grad shape mismatch");
    if (kernel_grad && kernel_grad->shape != kernel.shape)
        throw Error(ErrCode::dimension, "conv2d_backward: kernel_grad shape mismatch");
    if (bias_grad && bias_grad->shape != fake_bias.shape)
        throw Error(ErrCode::dimension, "conv2d_backward: bias_grad shape mismatch");

    const int64_t HW = d.H * d.W;

    if (bias_grad) {
        for (int64_t co = 0; co < d.Cout; ++co) {
            double s = 0.0;
            for (int64_t b = 0; b < d.B; ++b) {
                const float* g = upstream_grad.v.data() + (b * d.Cout + co) * HW;
                for (int64_t i = 0; i < HW; ++i) s += g[i];
            }
            bias_grad->v[size_t(co)] += float(s);
        }
    }

    if (kernel_grad) {
        const int64_t PW = d.W + 2 * d.pw, PH = d.H + 2 * d.ph;
        const int64_t plane = PH * PW, span = d.H * PW;
        const int64_t slack = (d.kh - 1) * PW + (d.kw - 1);
        std::vector<float> padded(size_t(d.Cin * plane + slack), 0.0f);
        std::vector<float> gspan(size_t(d.Cout * span), 0.0f);
        std::vector<RowMatF> acc(size_t(d.kh * d.kw), RowMatF::Zero(d.Cout, d.Cin));
        for (int64_t b = 0; b < d.B; ++b) {
            fill_padded(saved_input.v.data() + b * d.Cin * HW, d.Cin, d.H, d.W, d.ph, d.pw,
                        padded.data());
            const float* g = upstream_grad.v.data() + b * d.Cout * HW;
            for (int64_t co = 0; co < d.Cout; ++co)
                for (int64_t i = 0; i < d.H; ++i)
                    std::memcpy(gspan.data() + co * span + i * PW, g + (co * d.H + i) * d.W,
                                size_t(d.W) * sizeof(float));
            CMapRow gmat(gspan.data(), d.Cout, span);
            for (int64_t u = 0; u < d.kh; ++u)
                for (int64_t v = 0; v < d.kw; ++v) {
                    CMapStride view(padded.data() + u * PW + v, d.Cin, span,
                                    Eigen::OuterStride<>(plane));
                    acc[size_t(u * d.kw + v)].noalias() += gmat * view.transpose();
                }
        }
        for (int64_t u = 0; u < d.kh; ++u)
            for (int64_t v = 0; v < d.kw; ++v) {
                const RowMatF& m = acc[size_t(u * d.kw + v)];
                for (int64_t co = 0; co < d.Cout; ++co)
                    for (int64_t ci = 0; ci < d.Cin; ++ci)
                        kernel_grad->v[size_t(((co * d.Cin + ci) * d.kh + u) * d.kw + v)] +=
                            m(co, ci);
            }
    }

    if (input_grad) {
        // "full" correlation with the flipped, channel-transposed kernel
        const int64_t ph2 = d.kh - 1 - d.ph, pw2 = d.kw - 1 - d.pw;
        const int64_t PW2 = d.W + 2 * pw2, PH2 = d.H + 2 * ph2;
        const int64_t plane2 = PH2 * PW2, span2 = d.H * PW2;
        const int64_t slack2 = (d.kh - 1) * PW2 + (d.kw - 1);
        std::vector<float> padded(size_t(d.Cout * plane2 + slack2), 0.0f);
        std::vector<float> scratch(size_t(d.Cin * span2));
        std::vector<float> packs = pack_taps(kernel, d, /*transpose=*/true);
        for (int64_t b = 0; b < d.B; ++b) {
            fill_padded(upstream_grad.v.data() + b * d.Cout * HW, d.Cout, d.H, d.W, ph2, pw2,
                        padded.data());
            tap_gemms(padded.data(), d.Cout, plane2, packs.data(), d.Cin, d.kh, d.kw, PW2, span2,
                      scratch.data());
            float* gi = input_grad->v.data() + b * d.Cin * HW;
            for (int64_t ci = 0; ci < d.Cin; ++ci)
                for (int64_t i = 0; i < d.H; ++i) {
                    const float* srow = scratch.data() + ci * span2 + i * PW2;
                    float* grow = gi + (ci * d.H + i) * d.W;
                    for (int64_t j = 0; j < d.W; ++j) grow[j] += srow[j];
                }
        }
    }
}

} // namespace fseg
