#pragma once

#include <cstdint>
#include <vector>

#include "error.hpp"

namespace fseg {

/// Dense float32 array with a row-major layout. The 4-D convention used by
/// the model code is [batch, channels, height, width].
struct Tensor {
    std::vector<int64_t> shape;
    std::vector<float> v;

    Tensor() = default;
    explicit Tensor(std::vector<int64_t> s) : shape(std::move(s)), v(size_t(count(shape)), 0.0f) {}

    static int64_t count(const std::vector<int64_t>& s);
    static Tensor zeros(std::vector<int64_t> s) { return Tensor(std::move(s)); }
    static Tensor full(std::vector<int64_t> s, float value);

    int64_t numel() const { return int64_t(v.size()); }
    bool same_shape(const Tensor& o) const { return shape == o.shape; }

    /// 4-D element access (used by tests and oracles, not by hot paths).
    float& at4(int64_t b, int64_t c, int64_t y, int64_t x);
    float at4(int64_t b, int64_t c, int64_t y, int64_t x) const;

    void fill(float value) { std::fill(v.begin(), v.end(), value); }
};

// ---- elementwise ops and their backward rules -------------------------------
// Backward functions return the gradient with respect to the op's input given
// the gradient with respect to its output ("upstream").

Tensor relu(const Tensor& t);
Tensor relu_backward(const Tensor& upstream, const Tensor& saved_input);

Tensor sigmoid(const Tensor& t);
Tensor sigmoid_backward(const Tensor& upstream, const Tensor& saved_output);

Tensor add(const Tensor& a, const Tensor& b);

/// Concatenate 4-D tensors along the channel axis, preserving list order.
Tensor concat_channels(const std::vector<const Tensor*>& parts);

/// Inverse of concat_channels: split a 4-D tensor into channel blocks of the
/// given widths (used by concat's backward rule and by tests).
std::vector<Tensor> split_channels(const Tensor& t, const std::vector<int64_t>& widths);

/// Copy sample `b` of a 4-D tensor into a [1,C,H,W] tensor.
Tensor slice_batch(const Tensor& t, int64_t b);

/// dst += src (shapes must match).
void accumulate(Tensor& dst, const Tensor& src);

bool all_finite(const Tensor& t);

} // namespace fseg
