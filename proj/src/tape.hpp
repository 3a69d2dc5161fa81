#pragma once

#include <functional>
#include <vector>

#include "tensor.hpp"

namespace fseg {

/// Reverse-mode gradient tape.
///
/// Forward code allocates one variable per tensor whose gradient it needs
/// (new_var) and records one backward closure per executed operation. A
/// closure reads the gradient of its output variable and *accumulates* into
/// the gradients of its input variables, so a variable consumed by several
/// operations receives the sum of their contributions.
///
/// backward() zero-initializes every accumulator, seeds the output variable,
/// then replays the recorded operations in reverse order. Because of the
/// re-zeroing, calling backward() twice on the same tape yields identical
/// gradients.
class GradTape {
public:
    /// Allocate a zero-initialized gradient accumulator of the given shape.
    int new_var(std::vector<int64_t> shape) {
        grads_.emplace_back(std::move(shape));
        return int(grads_.size()) - 1;
    }

    Tensor& grad(int var) { return grads_.at(size_t(var)); }
    const Tensor& grad(int var) const { return grads_.at(size_t(var)); }

    void record(std::function<void(GradTape&)> backward_op) {
        ops_.push_back(std::move(backward_op));
    }

    void backward(int output_var, const Tensor& seed) {
        for (Tensor& g : grads_) g.fill(0.0f);
        Tensor& out = grad(output_var);
        if (!out.same_shape(seed))
            throw Error(ErrCode::dimension, "GradTape::backward: seed shape mismatch");
        out = seed;
        for (size_t i = ops_.size(); i > 0; --i) ops_[i - 1](*this);
    }

    size_t op_count() const { return ops_.size(); }
    size_t var_count() const { return grads_.size(); }

private:
    std::vector<Tensor> grads_;
    std::vector<std::function<void(GradTape&)>> ops_;
};

} // namespace fseg
