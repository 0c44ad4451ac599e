#ifndef WAVESEP_GRAPH_HPP
#define WAVESEP_GRAPH_HPP

#include <cmath>
#include <deque>
#include <span>
#include <string>
#include <vector>

#include "wavesep/errors.hpp"
#include "wavesep/feature_map.hpp"
#include "wavesep/parameters.hpp"

namespace wavesep {

// Define-by-run computation record. Values are computed eagerly when an op
// is pushed; backward() replays the record in reverse and accumulates exact
// derivatives of a scalar node into every parameter. Nodes are appended in
// topological order by construction, so the reverse walk is valid.
//
// The op set is exactly what the model and its losses need; anything else
// in a record is a logic error and fails loud.
template <typename T>
class Graph {
public:
    explicit Graph(const ParameterSet<T>& params) : params_(&params) {}

    // Leaf holding a value that needs no gradient w.r.t. parameters.
    int constant(FeatureMap<T> value) {
        Node n;
        n.kind = OpKind::Constant;
        n.value = std::move(value);
        return push(std::move(n));
    }

    // VALID (no padding) dilated convolution.
    // out[c,t] = bias[c] + sum_{i,w} W[c,i,w] * in[i, t + w*dilation]
    int conv1d(int input, int kernel, int dilation = 1) {
        if (dilation < 1) throw ConfigError("conv1d: dilation must be positive");
        const FeatureMap<T>& x = value(input);
        const KernelShape& shape = params_->shape(kernel);
        if (x.channels != shape.in_channels)
            throw ConfigError("conv1d '" + params_->name(kernel) + "': input has " +
                              std::to_string(x.channels) + " channels, kernel expects " +
                              std::to_string(shape.in_channels));
        const int span = 1 + dilation * (shape.width - 1);
        if (x.time_steps < span)
            throw InsufficientContextError(
                "conv1d '" + params_->name(kernel) + "': input of " +
                std::to_string(x.time_steps) + " steps is shorter than the kernel span " +
                std::to_string(span));

        Node n;
        n.kind = OpKind::Conv1d;
        n.a = input;
        n.kernel = kernel;
        n.dilation = dilation;
        const int out_len = x.time_steps - dilation * (shape.width - 1);
        n.value = FeatureMap<T>(shape.out_channels, out_len);
        std::span<const T> w = params_->weights(kernel);
        std::span<const T> b = params_->bias(kernel);
        for (int c = 0; c < shape.out_channels; ++c) {
            T* out_row = n.value.row(c);
            for (int t = 0; t < out_len; ++t) out_row[t] = b[c];
            for (int i = 0; i < shape.in_channels; ++i) {
                const T* in_row = x.row(i);
                for (int wi = 0; wi < shape.width; ++wi) {
                    const T coef = w[(static_cast<size_t>(c) * shape.in_channels + i) * shape.width + wi];
                    const T* shifted = in_row + static_cast<size_t>(wi) * dilation;
                    for (int t = 0; t < out_len; ++t) out_row[t] += coef * shifted[t];
                }
            }
        }
        return push(std::move(n));
    }

    // tanh(filter) * sigmoid(gate) over a feature map of 2k channels; the
    // first k channels are the filter branch, the last k the gate branch.
    int gated(int input) {
        const FeatureMap<T>& x = value(input);
        if (x.channels % 2 != 0)
            throw ConfigError("gated: needs an even channel count, got " +
                              std::to_string(x.channels));
        Node n;
        n.kind = OpKind::Gated;
        n.a = input;
        const int half = x.channels / 2;
        n.value = FeatureMap<T>(half, x.time_steps);
        for (int c = 0; c < half; ++c) {
            const T* f = x.row(c);
            const T* g = x.row(c + half);
            T* out = n.value.row(c);
            for (int t = 0; t < x.time_steps; ++t)
                out[t] = std::tanh(f[t]) * sigmoid(g[t]);
        }
        return push(std::move(n));
    }

    int relu(int input) {
        const FeatureMap<T>& x = value(input);
        Node n;
        n.kind = OpKind::Relu;
        n.a = input;
        n.value = FeatureMap<T>(x.channels, x.time_steps);
        for (size_t i = 0; i < x.data.size(); ++i)
            n.value.data[i] = x.data[i] > T(0) ? x.data[i] : T(0);
        return push(std::move(n));
    }

    // Symmetric crop in time; valid convolutions shrink both ends equally,
    // so the removed margin is always even.
    int center_crop(int input, int out_len) {
        const FeatureMap<T>& x = value(input);
        if (out_len < 1 || out_len > x.time_steps)
            throw ConfigError("center_crop: cannot crop " + std::to_string(x.time_steps) +
                              " steps to " + std::to_string(out_len));
        if ((x.time_steps - out_len) % 2 != 0)
            throw ConfigError("center_crop: asymmetric margin");
        Node n;
        n.kind = OpKind::CenterCrop;
        n.a = input;
        n.aux0 = (x.time_steps - out_len) / 2;
        n.value = FeatureMap<T>(x.channels, out_len);
        for (int c = 0; c < x.channels; ++c) {
            const T* in_row = x.row(c) + n.aux0;
            T* out = n.value.row(c);
            for (int t = 0; t < out_len; ++t) out[t] = in_row[t];
        }
        return push(std::move(n));
    }

    int channel_slice(int input, int begin, int count) {
        const FeatureMap<T>& x = value(input);
        if (begin < 0 || count < 1 || begin + count > x.channels)
            throw ConfigError("channel_slice: range out of bounds");
        Node n;
        n.kind = OpKind::ChannelSlice;
        n.a = input;
        n.aux0 = begin;
        n.value = FeatureMap<T>(count, x.time_steps);
        for (int c = 0; c < count; ++c) {
            const T* in_row = x.row(begin + c);
            T* out = n.value.row(c);
            for (int t = 0; t < x.time_steps; ++t) out[t] = in_row[t];
        }
        return push(std::move(n));
    }

    int add(int a, int b) {
        const FeatureMap<T>& xa = value(a);
        const FeatureMap<T>& xb = value(b);
        if (!xa.same_shape(xb))
            throw ConfigError("add: shape mismatch (" + std::to_string(xa.channels) + "x" +
                              std::to_string(xa.time_steps) + " vs " + std::to_string(xb.channels) +
                              "x" + std::to_string(xb.time_steps) + ")");
        Node n;
        n.kind = OpKind::Add;
        n.a = a;
        n.b = b;
        n.value = FeatureMap<T>(xa.channels, xa.time_steps);
        for (size_t i = 0; i < xa.data.size(); ++i)
            n.value.data[i] = xa.data[i] + xb.data[i];
        return push(std::move(n));
    }

    int scale(int input, T factor) {
        const FeatureMap<T>& x = value(input);
        Node n;
        n.kind = OpKind::Scale;
        n.a = input;
        n.factor = factor;
        n.value = FeatureMap<T>(x.channels, x.time_steps);
        for (size_t i = 0; i < x.data.size(); ++i) n.value.data[i] = factor * x.data[i];
        return push(std::move(n));
    }

    // sum |a - b| reduced to a 1x1 scalar node. The subgradient of |x| at
    // zero is taken as 0.
    int abs_diff_sum(int a, int b) {
        const FeatureMap<T>& xa = value(a);
        const FeatureMap<T>& xb = value(b);
        if (!xa.same_shape(xb)) throw ConfigError("abs_diff_sum: shape mismatch");
        Node n;
        n.kind = OpKind::AbsDiffSum;
        n.a = a;
        n.b = b;
        n.value = FeatureMap<T>(1, 1);
        T acc = T(0);
        for (size_t i = 0; i < xa.data.size(); ++i)
            acc += std::abs(xa.data[i] - xb.data[i]);
        n.value.data[0] = acc;
        return push(std::move(n));
    }

    const FeatureMap<T>& value(int id) const { return nodes_[check_id(id)].value; }

    T scalar(int id) const {
        const FeatureMap<T>& v = value(id);
        if (v.channels != 1 || v.time_steps != 1)
            throw std::logic_error("scalar: node is not 1x1");
        return v.data[0];
    }

    // Reverse-mode sweep from a scalar node. Parameter gradients are
    // accumulated (+=) into param_grads, which must match the parameter
    // count; caller zeroes or carries them across batch elements.
    void backward(int loss, std::span<T> param_grads) {
        if (param_grads.size() != params_->param_count())
            throw std::logic_error("backward: gradient buffer size mismatch");
        const FeatureMap<T>& lv = value(loss);
        if (lv.channels != 1 || lv.time_steps != 1)
            throw std::logic_error("backward: loss node must be scalar");
        for (Node& n : nodes_) n.grad.data.clear();
        grad_of(loss) = FeatureMap<T>(1, 1);
        grad_of(loss).data[0] = T(1);

        for (int id = loss; id >= 0; --id) {
            Node& n = nodes_[id];
            if (n.grad.data.empty()) continue; // not on the path to the loss
            switch (n.kind) {
            case OpKind::Constant:
                break;
            case OpKind::Conv1d:
                backward_conv(n, param_grads);
                break;
            case OpKind::Gated:
                backward_gated(n);
                break;
            case OpKind::Relu: {
                FeatureMap<T>& ga = ensure_grad(n.a);
                const FeatureMap<T>& x = nodes_[n.a].value;
                for (size_t i = 0; i < x.data.size(); ++i)
                    if (x.data[i] > T(0)) ga.data[i] += n.grad.data[i];
                break;
            }
            case OpKind::CenterCrop: {
                FeatureMap<T>& ga = ensure_grad(n.a);
                for (int c = 0; c < n.value.channels; ++c) {
                    T* dst = ga.row(c) + n.aux0;
                    const T* src = n.grad.row(c);
                    for (int t = 0; t < n.value.time_steps; ++t) dst[t] += src[t];
                }
                break;
            }
            case OpKind::ChannelSlice: {
                FeatureMap<T>& ga = ensure_grad(n.a);
                for (int c = 0; c < n.value.channels; ++c) {
                    T* dst = ga.row(n.aux0 + c);
                    const T* src = n.grad.row(c);
                    for (int t = 0; t < n.value.time_steps; ++t) dst[t] += src[t];
                }
                break;
            }
            case OpKind::Add: {
                FeatureMap<T>& ga = ensure_grad(n.a);
                FeatureMap<T>& gb = ensure_grad(n.b);
                for (size_t i = 0; i < n.grad.data.size(); ++i) {
                    ga.data[i] += n.grad.data[i];
                    gb.data[i] += n.grad.data[i];
                }
                break;
            }
            case OpKind::Scale: {
                FeatureMap<T>& ga = ensure_grad(n.a);
                for (size_t i = 0; i < n.grad.data.size(); ++i)
                    ga.data[i] += n.factor * n.grad.data[i];
                break;
            }
            case OpKind::AbsDiffSum: {
                FeatureMap<T>& ga = ensure_grad(n.a);
                FeatureMap<T>& gb = ensure_grad(n.b);
                const FeatureMap<T>& xa = nodes_[n.a].value;
                const FeatureMap<T>& xb = nodes_[n.b].value;
                const T g = n.grad.data[0];
                for (size_t i = 0; i < xa.data.size(); ++i) {
                    const T d = xa.data[i] - xb.data[i];
                    const T s = d > T(0) ? T(1) : (d < T(0) ? T(-1) : T(0));
                    ga.data[i] += g * s;
                    gb.data[i] -= g * s;
                }
                break;
            }
            default:
                throw std::logic_error("backward: unsupported op in record");
            }
        }
    }

private:
    enum class OpKind {
        Constant,
        Conv1d,
        Gated,
        Relu,
        CenterCrop,
        ChannelSlice,
        Add,
        Scale,
        AbsDiffSum,
    };

    struct Node {
        OpKind kind;
        int a = -1;
        int b = -1;
        int kernel = -1;
        int dilation = 1;
        int aux0 = 0;
        T factor = T(0);
        FeatureMap<T> value;
        FeatureMap<T> grad;
    };

    static T sigmoid(T x) { return T(1) / (T(1) + std::exp(-x)); }

    int push(Node n) {
        nodes_.push_back(std::move(n));
        return static_cast<int>(nodes_.size()) - 1;
    }

    int check_id(int id) const {
        if (id < 0 || id >= static_cast<int>(nodes_.size()))
            throw std::logic_error("graph: invalid node id");
        return id;
    }

    FeatureMap<T>& grad_of(int id) { return nodes_[check_id(id)].grad; }

    FeatureMap<T>& ensure_grad(int id) {
        Node& n = nodes_[check_id(id)];
        if (n.grad.data.empty())
            n.grad = FeatureMap<T>(n.value.channels, n.value.time_steps);
        return n.grad;
    }

    void backward_conv(Node& n, std::span<T> param_grads) {
        const FeatureMap<T>& x = nodes_[n.a].value;
        const FeatureMap<T>& gout = n.grad;
        const KernelShape& shape = params_->shape(n.kernel);
        const int out_len = n.value.time_steps;
        const size_t base = params_->offset(n.kernel);
        std::span<const T> w = params_->weights(n.kernel);
        FeatureMap<T>& gin = ensure_grad(n.a);

        for (int c = 0; c < shape.out_channels; ++c) {
            const T* grow = gout.row(c);
            // bias gradient
            T bias_acc = T(0);
            for (int t = 0; t < out_len; ++t) bias_acc += grow[t];
            param_grads[base + shape.weight_count() + c] += bias_acc;

            for (int i = 0; i < shape.in_channels; ++i) {
                const T* in_row = x.row(i);
                T* gin_row = gin.row(i);
                for (int wi = 0; wi < shape.width; ++wi) {
                    const size_t widx =
                        (static_cast<size_t>(c) * shape.in_channels + i) * shape.width + wi;
                    const T coef = w[widx];
                    const T* shifted_in = in_row + static_cast<size_t>(wi) * n.dilation;
                    T* shifted_gin = gin_row + static_cast<size_t>(wi) * n.dilation;
                    T wacc = T(0);
                    for (int t = 0; t < out_len; ++t) {
                        wacc += grow[t] * shifted_in[t];
                        shifted_gin[t] += coef * grow[t];
                    }
                    param_grads[base + widx] += wacc;
                }
            }
        }
    }

    void backward_gated(Node& n) {
        const FeatureMap<T>& x = nodes_[n.a].value;
        FeatureMap<T>& gin = ensure_grad(n.a);
        const int half = n.value.channels;
        for (int c = 0; c < half; ++c) {
            const T* f = x.row(c);
            const T* g = x.row(c + half);
            const T* gout = n.grad.row(c);
            T* gf = gin.row(c);
            T* gg = gin.row(c + half);
            for (int t = 0; t < n.value.time_steps; ++t) {
                const T th = std::tanh(f[t]);
                const T sg = sigmoid(g[t]);
                gf[t] += gout[t] * (T(1) - th * th) * sg;
                gg[t] += gout[t] * th * sg * (T(1) - sg);
            }
        }
    }

    const ParameterSet<T>* params_;
    std::deque<Node> nodes_;
};

} // namespace wavesep

#endif
