#include "tensor.hpp"

#include <algorithm>
#include <cmath>

namespace fseg {

int64_t Tensor::count(const std::vector<int64_t>& s) {
    int64_t n = 1;
    for (int64_t d : s) {
        if (d <= 0) throw Error(ErrCode::dimension, "tensor extents must be positive");
        n *= d;
    }
    return n;
}

Tensor Tensor::full(std::vector<int64_t> s, float value) {
    Tensor t(std::move(s));
    t.fill(value);
    return t;
}

static size_t index4(const Tensor& t, int64_t b, int64_t c, int64_t y, int64_t x) {
    if (t.shape.size() != 4) throw Error(ErrCode::dimension, "at4 requires a 4-D tensor");
    return size_t(((b * t.shape[1] + c) * t.shape[2] + y) * t.shape[3] + x);
}

float& Tensor::at4(int64_t b, int64_t c, int64_t y, int64_t x) { return v[index4(*this, b, c, y, x)]; }
float Tensor::at4(int64_t b, int64_t c, int64_t y, int64_t x) const { return v[index4(*this, b, c, y, x)]; }

Tensor relu(const Tensor& t) {
    Tensor out(t.shape);
    for (size_t i = 0; i < t.v.size(); ++i) out.v[i] = t.v[i] > 0.0f ? t.v[i] : 0.0f;
    return out;
}

Tensor relu_backward(const Tensor& upstream, const Tensor& saved_input) {
    if (!upstream.same_shape(saved_input))
        throw Error(ErrCode::dimension, "relu_backward: shape mismatch");
    Tensor out(upstream.shape);
    // The derivative at exactly 0 is defined as 0.
    for (size_t i = 0; i < out.v.size(); ++i)
        out.v[i] = saved_input.v[i] > 0.0f ? upstream.v[i] : 0.0f;
    return out;
}

Tensor sigmoid(const Tensor& t) {
    Tensor out(t.shape);
    for (size_t i = 0; i < t.v.size(); ++i) {
        float x = t.v[i];
        // exp() only ever sees -|x|, so large inputs saturate instead of overflowing
        if (x >= 0.0f) {
            out.v[i] = 1.0f / (1.0f + std::exp(-x));
        } else {
            float e = std::exp(x);
            out.v[i] = e / (1.0f + e);
        }
    }
    return out;
}

Tensor sigmoid_backward(const Tensor& upstream, const Tensor& saved_output) {
    if (!upstream.same_shape(saved_output))
        throw Error(ErrCode::dimension, "sigmoid_backward: shape mismatch");
    Tensor out(upstream.shape);
    for (size_t i = 0; i < out.v.size(); ++i) {
        float s = saved_output.v[i];
        out.v[i] = upstream.v[i] * s * (1.0f - s);
    }
    return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b)) throw Error(ErrCode::dimension, "add: shape mismatch");
    Tensor out(a.shape);
    for (size_t i = 0; i < out.v.size(); ++i) out.v[i] = a.v[i] + b.v[i];
    return out;
}

Tensor concat_channels(const std::vector<const Tensor*>& parts) {
    if (parts.empty()) throw Error(ErrCode::dimension, "concat_channels: no inputs");
    const Tensor& first = *parts[0];
    if (first.shape.size() != 4) throw Error(ErrCode::dimension, "concat_channels: 4-D tensors required");
    int64_t B = first.shape[0], H = first.shape[2], W = first.shape[3];
    int64_t C = 0;
    for (const Tensor* p : parts) {
        if (p->shape.size() != 4 || p->shape[0] != B || p->shape[2] != H || p->shape[3] != W)
            throw Error(ErrCode::dimension, "concat_channels: spatial or batch mismatch");
        C += p->shape[1];
    }
    Tensor out({B, C, H, W});
    int64_t plane = H * W;
    for (int64_t b = 0; b < B; ++b) {
        int64_t co = 0;
        for (const Tensor* p : parts) {
            int64_t pc = p->shape[1];
            std::copy_n(p->v.data() + b * pc * plane, size_t(pc * plane),
                        out.v.data() + (b * C + co) * plane);
            co += pc;
        }
    }
    return out;
}

std::vector<Tensor> split_channels(const Tensor& t, const std::vector<int64_t>& widths) {
    if (t.shape.size() != 4) throw Error(ErrCode::dimension, "split_channels: 4-D tensor required");
    int64_t B = t.shape[0], C = t.shape[1], H = t.shape[2], W = t.shape[3];
    int64_t sum = 0;
    for (int64_t w : widths) sum += w;
    if (sum != C) throw Error(ErrCode::dimension, "split_channels: widths do not cover channels");
    std::vector<Tensor> parts;
    parts.reserve(widths.size());
    int64_t plane = H * W, off = 0;
    for (int64_t w : widths) {
        Tensor p({B, w, H, W});
        for (int64_t b = 0; b < B; ++b)
            std::copy_n(t.v.data() + (b * C + off) * plane, size_t(w * plane),
                        p.v.data() + b * w * plane);
        parts.push_back(std::move(p));
        off += w;
    }
    return parts;
}

Tensor slice_batch(const Tensor& t, int64_t b) {
    if (t.shape.size() != 4) throw Error(ErrCode::dimension, "slice_batch: 4-D tensor required");
    if (b < 0 || b >= t.shape[0]) throw Error(ErrCode::dimension, "slice_batch: index out of range");
    Tensor out({1, t.shape[1], t.shape[2], t.shape[3]});
    std::copy_n(t.v.data() + b * out.numel(), size_t(out.numel()), out.v.data());
    return out;
}

void accumulate(Tensor& dst, const Tensor& src) {
    if (!dst.same_shape(src)) throw Error(ErrCode::dimension, "accumulate: shape mismatch");
    for (size_t i = 0; i < dst.v.size(); ++i) dst.v[i] += src.v[i];
}

bool all_finite(const Tensor& t) {
    for (float x : t.v)
        if (!std::isfinite(x)) return false;
    return true;
}

} // namespace fseg
