#include "model.hpp"

#include <cmath>
#include <memory>

#include "conv.hpp"
#include "io_util.hpp"
#include "rng.hpp"

namespace fseg {

Variant variant_from_string(const std::string& name) {
    if (name == "residual") return Variant::residual;
    if (name == "dense") return Variant::dense;
    throw Error(ErrCode::invalid_argument, "unknown variant \"" + name +
                                               "\" (expected \"residual\" or \"dense\")");
}

const char* variant_name(Variant v) {
    return v == Variant::residual ? "residual" : "dense";
}

std::vector<LayerSpec> layer_specs(Variant variant) {
    std::vector<int64_t> in = variant == Variant::residual
                                  ? std::vector<int64_t>{3, 64, 64, 64, 64, 64, 64}
                                  : std::vector<int64_t>{3, 67, 131, 195, 259, 323, 64};
    std::vector<LayerSpec> specs;
    for (int l = 0; l < 7; ++l) {
        bool last = l == 6;
        specs.push_back({last ? 1 : 64, in[size_t(l)], last ? 1 : 3, last ? 1 : 3,
                         last ? Activation::sigmoid : Activation::relu});
    }
    return specs;
}

ModelGraph build_model(Variant variant, uint64_t seed) {
    ModelGraph m;
    m.variant = variant;
    m.specs = layer_specs(variant);
    std::mt19937_64 eng(seed);
    for (const LayerSpec& s : m.specs) {
        Tensor w({s.out_features, s.in_channels, s.kh, s.kw});
        float bound = std::sqrt(6.0f / float(s.in_channels * s.kh * s.kw));
        for (float& x : w.v) x = (2.0f * rng::unit_float(eng()) - 1.0f) * bound;
        m.weights.push_back(std::move(w));
        m.biases.push_back(Tensor({s.out_features}));  // zeros
    }
    return m;
}

int64_t count_parameters(const ModelGraph& model) {
    int64_t n = 0;
    for (const Tensor& w : model.weights) n += w.numel();
    for (const Tensor& b : model.biases) n += b.numel();
    return n;
}

namespace {

using SP = std::shared_ptr<const Tensor>;

SP wrap(Tensor&& t) { return std::make_shared<const Tensor>(std::move(t)); }

/// A value flowing through the graph: the tensor plus its tape variable.
struct Node {
    SP t;
    int var = -1;
};

struct Builder {
    const ModelGraph& m;
    GradTape* tape;
    ForwardRecord& rec;

    Node conv(const Node& x, size_t layer) {
        Node y{wrap(conv2d_forward(*x.t, m.weights[layer], m.biases[layer])), -1};
        if (tape) {
            y.var = tape->new_var(y.t->shape);
            const Tensor* w = &m.weights[layer];
            SP saved = x.t;
            int xv = x.var, yv = y.var;
            int wv = rec.weight_vars[layer], bv = rec.bias_vars[layer];
            tape->record([saved, w, xv, yv, wv, bv](GradTape& t) {
                conv2d_backward(t.grad(yv), *saved, *w, &t.grad(xv), &t.grad(wv), &t.grad(bv));
            });
        }
        return y;
    }

    Node relu_(const Node& x) {
        Node y{wrap(relu(*x.t)), -1};
        if (tape) {
            y.var = tape->new_var(y.t->shape);
            SP saved = x.t;
            int xv = x.var, yv = y.var;
            tape->record([saved, xv, yv](GradTape& t) {
                accumulate(t.grad(xv), relu_backward(t.grad(yv), *saved));
            });
        }
        return y;
    }

    Node sigmoid_(const Node& x) {
        Node y{wrap(sigmoid(*x.t)), -1};
        if (tape) {
            y.var = tape->new_var(y.t->shape);
            SP saved = y.t;  // sigmoid's derivative is written in terms of its output
            int xv = x.var, yv = y.var;
            tape->record([saved, xv, yv](GradTape& t) {
                accumulate(t.grad(xv), sigmoid_backward(t.grad(yv), *saved));
            });
        }
        return y;
    }

    Node add_(const Node& a, const Node& b) {
        Node y{wrap(add(*a.t, *b.t)), -1};
        if (tape) {
            y.var = tape->new_var(y.t->shape);
            int av = a.var, bv = b.var, yv = y.var;
            tape->record([av, bv, yv](GradTape& t) {
                accumulate(t.grad(av), t.grad(yv));
                accumulate(t.grad(bv), t.grad(yv));
            });
        }
        return y;
    }

    Node concat_(const std::vector<Node>& parts) {
        std::vector<const Tensor*> ptrs;
        for (const Node& p : parts) ptrs.push_back(p.t.get());
        Node y{wrap(concat_channels(ptrs)), -1};
        if (tape) {
            y.var = tape->new_var(y.t->shape);
            std::vector<int64_t> widths;
            std::vector<int> vars;
            for (const Node& p : parts) {
                widths.push_back(p.t->shape[1]);
                vars.push_back(p.var);
            }
            int yv = y.var;
            tape->record([widths, vars, yv](GradTape& t) {
                std::vector<Tensor> gs = split_channels(t.grad(yv), widths);
                for (size_t i = 0; i < vars.size(); ++i) accumulate(t.grad(vars[i]), gs[i]);
            });
        }
        return y;
    }
};

} // namespace

Tensor forward(const ModelGraph& model, const Tensor& input, GradTape* tape, ForwardRecord* record,
               std::vector<int64_t>* observed_concat_channels) {
    if (input.shape.size() != 4 || input.shape[1] != 3)
        throw Error(ErrCode::dimension, "forward: input must be [B,3,H,W]");
    const int64_t B = input.shape[0], H = input.shape[2], W = input.shape[3];

    if (!tape && B > 1) {
        // Per-sample evaluation, restitched; bounds peak memory for big batches.
        Tensor out({B, 1, H, W});
        for (int64_t b = 0; b < B; ++b) {
            Tensor o = forward(model, slice_batch(input, b), nullptr, nullptr,
                               b == 0 ? observed_concat_channels : nullptr);
            std::copy_n(o.v.data(), size_t(H * W), out.v.data() + b * H * W);
        }
        return out;
    }

    ForwardRecord local;
    ForwardRecord& rec = record ? *record : local;
    if (tape) {
        rec.input_var = tape->new_var(input.shape);
        rec.weight_vars.clear();
        rec.bias_vars.clear();
        for (size_t l = 0; l < model.weights.size(); ++l) {
            rec.weight_vars.push_back(tape->new_var(model.weights[l].shape));
            rec.bias_vars.push_back(tape->new_var(model.biases[l].shape));
        }
    }
    Builder g{model, tape, rec};
    Node x0{wrap(Tensor(input)), rec.input_var};
    if (observed_concat_channels) observed_concat_channels->clear();
    auto observe = [&](const Node& n) {
        if (observed_concat_channels) observed_concat_channels->push_back(n.t->shape[1]);
    };

    Node out;
    if (model.variant == Variant::residual) {
        observe(x0);
        Node h = g.relu_(g.conv(x0, 0));
        for (size_t l = 1; l <= 5; ++l) {
            observe(h);
            h = g.add_(g.relu_(g.conv(h, l)), h);
        }
        observe(h);
        out = g.sigmoid_(g.conv(h, 6));
    } else {
        std::vector<Node> feats{x0};
        observe(x0);
        Node h = g.relu_(g.conv(x0, 0));
        feats.push_back(h);
        for (size_t l = 1; l <= 5; ++l) {
            Node cat = g.concat_(feats);
            observe(cat);
            h = g.relu_(g.conv(cat, l));
            feats.push_back(h);
        }
        observe(h);
        out = g.sigmoid_(g.conv(h, 6));
    }
    rec.output_var = out.var;
    return Tensor(*out.t);
}

// ---- checkpoint i/o ----------------------------------------------------------

static constexpr char kModelMagic[4] = {'F', 'S', 'M', '1'};
static constexpr char kOptTag[4] = {'A', 'D', 'M', '1'};

void save_checkpoint(const ModelGraph& model, const std::string& path, const OptSection* opt) {
    std::string out;
    out.append(kModelMagic, 4);
    out.push_back(char(uint8_t(model.variant)));
    for (size_t l = 0; l < model.weights.size(); ++l) {
        io::put_u64(out, uint64_t(model.weights[l].numel()));
        io::put_f32_array(out, model.weights[l].v.data(), model.weights[l].v.size());
        io::put_u64(out, uint64_t(model.biases[l].numel()));
        io::put_f32_array(out, model.biases[l].v.data(), model.biases[l].v.size());
    }
    if (opt) {
        if (opt->m.size() != 2 * model.weights.size() || opt->v.size() != opt->m.size())
            throw Error(ErrCode::invalid_argument, "optimizer section does not match model");
        out.append(kOptTag, 4);
        io::put_u64(out, opt->step);
        io::put_u64(out, opt->epochs_done);
        io::put_f64(out, opt->best_val);
        for (size_t i = 0; i < opt->m.size(); ++i) {
            io::put_u64(out, uint64_t(opt->m[i].numel()));
            io::put_f32_array(out, opt->m[i].v.data(), opt->m[i].v.size());
            io::put_f32_array(out, opt->v[i].v.data(), opt->v[i].v.size());
        }
    }
    io::write_file(path, out);
}

ModelGraph load_checkpoint(const std::string& path, OptSection* opt, bool* has_opt) {
    std::vector<uint8_t> bytes = io::read_file(path);
    io::Reader rr(bytes.data(), bytes.size(), path);
    rr.magic(kModelMagic);
    uint8_t vb = rr.u8("variant byte");
    if (vb > 1) throw Error(ErrCode::format, path + ": unknown variant byte");

    ModelGraph m;
    m.variant = Variant(vb);
    m.specs = layer_specs(m.variant);
    for (const LayerSpec& s : m.specs) {
        int64_t wn = s.out_features * s.in_channels * s.kh * s.kw;
        uint64_t count = rr.u64("weight count");
        if (count != uint64_t(wn))
            throw Error(ErrCode::format, path + ": weight blob count does not match variant shape");
        Tensor w({s.out_features, s.in_channels, s.kh, s.kw});
        rr.f32_array(w.v.data(), w.v.size(), "weights");
        m.weights.push_back(std::move(w));
        count = rr.u64("bias count");
        if (count != uint64_t(s.out_features))
            throw Error(ErrCode::format, path + ": bias blob count does not match variant shape");
        Tensor b({s.out_features});
        rr.f32_array(b.v.data(), b.v.size(), "biases");
        m.biases.push_back(std::move(b));
    }
    bool have = rr.peek_tag(kOptTag);
    if (has_opt) *has_opt = have;
    if (have && opt) {
        rr.magic(kOptTag);
        opt->step = rr.u64("optimizer step");
        opt->epochs_done = rr.u64("epochs done");
        opt->best_val = rr.f64("best validation loss");
        opt->m.clear();
        opt->v.clear();
        for (size_t l = 0; l < m.weights.size(); ++l)
            for (int which = 0; which < 2; ++which) {
                const Tensor& p = which == 0 ? m.weights[l] : m.biases[l];
                uint64_t count = rr.u64("moment count");
                if (count != uint64_t(p.numel()))
                    throw Error(ErrCode::format, path + ": moment blob count mismatch");
                Tensor mm(p.shape), vv(p.shape);
                rr.f32_array(mm.v.data(), mm.v.size(), "first moment");
                rr.f32_array(vv.v.data(), vv.v.size(), "second moment");
                opt->m.push_back(std::move(mm));
                opt->v.push_back(std::move(vv));
            }
        rr.expect_end();
    } else if (!have) {
        rr.expect_end();
    }
    return m;
}

} // namespace fseg
