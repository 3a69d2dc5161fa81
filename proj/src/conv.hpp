#pragma once

#include "tensor.hpp"

namespace fseg {

/// 2-D convolution, stride 1, zero "same" padding (pad kh/2, kw/2), so the
/// spatial extent is preserved. Supported kernel extents are 1 and 3.
///
///   out[b,co,i,j] = bias[co]
///                 + sum_{ci,u,v} input[b,ci,i+u-kh/2,j+v-kw/2] * kernel[co,ci,u,v]
///
/// with out-of-range input treated as 0.
Tensor conv2d_forward(const Tensor& input, const Tensor& kernel, const Tensor& bias);

/// Analytical gradients of conv2d_forward. Each non-null output is
/// *accumulated into* (callers pass zero-initialized tensors of the right
/// shape; the gradient tape relies on the accumulate semantics).
void conv2d_backward(const Tensor& upstream_grad, const Tensor& saved_input,
                     const Tensor& kernel, Tensor* input_grad, Tensor* kernel_grad,
                     Tensor* bias_grad);

} // namespace fseg
