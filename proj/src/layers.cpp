#include "fedaux/layers.hpp"

#include <atomic>
#include <cmath>

#include "fedaux/errors.hpp"

namespace fedaux::nn {

namespace {

std::atomic<std::uint64_t> next_stack_id{1};

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

[[noreturn]] void shape_error(std::size_t index, const LayerSpec& layer, const std::string& detail) {
    throw ConfigError("layer " + std::to_string(index) + " (" + layer_name(layer) + "): " + detail);
}

void require_positive(std::size_t value, const char* what, std::size_t index, const LayerSpec& layer) {
    if (value == 0) shape_error(index, layer, std::string(what) + " must be >= 1");
}

// ---- per-layer kernels; x is [batch, ...per-sample input] ----

Tensor conv_forward(const Conv1D& c, std::span<const double> p, const Tensor& x, const Shape& out_shape) {
    const std::size_t batch = x.dim(0);
    const std::size_t len_in = x.dim(2);
    const std::size_t len_out = out_shape[1];
    const double* w = p.data();
    const double* bias = w + c.out_channels * c.in_channels * c.kernel_size;
    Tensor y({batch, c.out_channels, len_out});
    for (std::size_t b = 0; b < batch; ++b) {
        const double* xb = x.data() + b * c.in_channels * len_in;
        double* yb = y.data() + b * c.out_channels * len_out;
        for (std::size_t o = 0; o < c.out_channels; ++o) {
            double* yo = yb + o * len_out;
            for (std::size_t t = 0; t < len_out; ++t) yo[t] = bias[o];
            for (std::size_t i = 0; i < c.in_channels; ++i) {
                const double* wk = w + (o * c.in_channels + i) * c.kernel_size;
                const double* xi = xb + i * len_in;
                for (std::size_t t = 0; t < len_out; ++t) {
                    const double* xt = xi + t * c.stride;
                    double acc = 0.0;
                    for (std::size_t k = 0; k < c.kernel_size; ++k) acc += wk[k] * xt[k];
                    yo[t] += acc;
                }
            }
        }
    }
    return y;
}

Tensor conv_backward(const Conv1D& c, std::span<const double> p, const Tensor& x, const Tensor& dy,
                     std::span<double> g) {
    const std::size_t batch = x.dim(0);
    const std::size_t len_in = x.dim(2);
    const std::size_t len_out = dy.dim(2);
    const double* w = p.data();
    double* dw = g.data();
    double* db = dw + c.out_channels * c.in_channels * c.kernel_size;
    Tensor dx(x.shape());
    for (std::size_t b = 0; b < batch; ++b) {
        const double* xb = x.data() + b * c.in_channels * len_in;
        double* dxb = dx.data() + b * c.in_channels * len_in;
        const double* dyb = dy.data() + b * c.out_channels * len_out;
        for (std::size_t o = 0; o < c.out_channels; ++o) {
            const double* dyo = dyb + o * len_out;
            for (std::size_t t = 0; t < len_out; ++t) db[o] += dyo[t];
            for (std::size_t i = 0; i < c.in_channels; ++i) {
                const std::size_t widx = (o * c.in_channels + i) * c.kernel_size;
                const double* xi = xb + i * len_in;
                double* dxi = dxb + i * len_in;
                for (std::size_t t = 0; t < len_out; ++t) {
                    const double d = dyo[t];
                    const std::size_t base = t * c.stride;
                    for (std::size_t k = 0; k < c.kernel_size; ++k) {
                        dw[widx + k] += d * xi[base + k];
                        dxi[base + k] += d * w[widx + k];
                    }
                }
            }
        }
    }
    return dx;
}

Tensor pool_forward(const MaxPool1D& m, const Tensor& x, const Shape& out_shape, std::vector<std::size_t>& argmax) {
    const std::size_t batch = x.dim(0);
    const std::size_t channels = x.dim(1);
    const std::size_t len_in = x.dim(2);
    const std::size_t len_out = out_shape[1];
    Tensor y({batch, channels, len_out});
    argmax.assign(y.size(), 0);
    for (std::size_t bc = 0; bc < batch * channels; ++bc) {
        const std::size_t in_base = bc * len_in;
        for (std::size_t t = 0; t < len_out; ++t) {
            std::size_t best = in_base + t * m.pool_size;
            for (std::size_t k = 1; k < m.pool_size; ++k) {
                const std::size_t idx = in_base + t * m.pool_size + k;
                if (x[idx] > x[best]) best = idx;
            }
            y[bc * len_out + t] = x[best];
            argmax[bc * len_out + t] = best;
        }
    }
    return y;
}

Tensor dense_forward(const Dense& d, std::span<const double> p, const Tensor& x) {
    const std::size_t batch = x.dim(0);
    const double* w = p.data();
    const double* bias = w + d.in_features * d.out_features;
    Tensor y({batch, d.out_features});
    for (std::size_t b = 0; b < batch; ++b) {
        const double* xb = x.data() + b * d.in_features;
        double* yb = y.data() + b * d.out_features;
        for (std::size_t o = 0; o < d.out_features; ++o) {
            const double* wo = w + o * d.in_features;
            double acc = bias[o];
            for (std::size_t i = 0; i < d.in_features; ++i) acc += wo[i] * xb[i];
            yb[o] = acc;
        }
    }
    return y;
}

Tensor dense_backward(const Dense& d, std::span<const double> p, const Tensor& x, const Tensor& dy,
                      std::span<double> g) {
    const std::size_t batch = x.dim(0);
    const double* w = p.data();
    double* dw = g.data();
    double* db = dw + d.in_features * d.out_features;
    Tensor dx(x.shape());
    for (std::size_t b = 0; b < batch; ++b) {
        const double* xb = x.data() + b * d.in_features;
        const double* dyb = dy.data() + b * d.out_features;
        double* dxb = dx.data() + b * d.in_features;
        for (std::size_t o = 0; o < d.out_features; ++o) {
            const double gy = dyb[o];
            db[o] += gy;
            const double* wo = w + o * d.in_features;
            double* dwo = dw + o * d.in_features;
            for (std::size_t i = 0; i < d.in_features; ++i) {
                dwo[i] += gy * xb[i];
                dxb[i] += gy * wo[i];
            }
        }
    }
    return dx;
}

Shape with_batch(std::size_t batch, const Shape& per_sample) {
    Shape s;
    s.reserve(per_sample.size() + 1);
    s.push_back(batch);
    s.insert(s.end(), per_sample.begin(), per_sample.end());
    return s;
}

}  // namespace

std::string layer_name(const LayerSpec& layer) {
    return std::visit(Overloaded{
                          [](const Conv1D&) { return std::string("conv1d"); },
                          [](const ReLU&) { return std::string("relu"); },
                          [](const MaxPool1D&) { return std::string("maxpool1d"); },
                          [](const Flatten&) { return std::string("flatten"); },
                          [](const Dense&) { return std::string("dense"); },
                      },
                      layer);
}

std::size_t layer_param_count(const LayerSpec& layer) noexcept {
    if (const auto* c = std::get_if<Conv1D>(&layer))
        return c->out_channels * c->in_channels * c->kernel_size + c->out_channels;
    if (const auto* d = std::get_if<Dense>(&layer)) return d->in_features * d->out_features + d->out_features;
    return 0;
}

Shape layer_output_shape(const LayerSpec& layer, const Shape& in, std::size_t index) {
    const std::string got = "input shape " + shape_to_string(in);
    return std::visit(
        Overloaded{
            [&](const Conv1D& c) -> Shape {
                require_positive(c.in_channels, "in_channels", index, layer);
                require_positive(c.out_channels, "out_channels", index, layer);
                require_positive(c.kernel_size, "kernel_size", index, layer);
                require_positive(c.stride, "stride", index, layer);
                if (in.size() != 2 || in[0] != c.in_channels)
                    shape_error(index, layer, "expects [" + std::to_string(c.in_channels) + ",length], got " + got);
                if (in[1] < c.kernel_size) shape_error(index, layer, "kernel longer than " + got);
                return {c.out_channels, (in[1] - c.kernel_size) / c.stride + 1};
            },
            [&](const ReLU&) -> Shape { return in; },
            [&](const MaxPool1D& m) -> Shape {
                require_positive(m.pool_size, "pool_size", index, layer);
                if (in.size() != 2) shape_error(index, layer, "expects [channels,length], got " + got);
                if (in[1] < m.pool_size) shape_error(index, layer, "pool wider than " + got);
                return {in[0], in[1] / m.pool_size};
            },
            [&](const Flatten&) -> Shape { return {shape_size(in)}; },
            [&](const Dense& d) -> Shape {
                require_positive(d.in_features, "in_features", index, layer);
                require_positive(d.out_features, "out_features", index, layer);
                if (in.size() != 1 || in[0] != d.in_features)
                    shape_error(index, layer, "expects [" + std::to_string(d.in_features) + "], got " + got);
                return {d.out_features};
            },
        },
        layer);
}

LayerStack::LayerStack(Shape input_shape, std::vector<LayerSpec> layers)
    : input_shape_(std::move(input_shape)), layers_(std::move(layers)), id_(next_stack_id++) {
    if (input_shape_.empty() || shape_size(input_shape_) == 0)
        throw ConfigError("stack input shape must be non-empty with positive dimensions");
    shapes_.assign(1, input_shape_);
    offsets_.clear();
    param_count_ = 0;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        shapes_.push_back(layer_output_shape(layers_[i], shapes_.back(), i));
        offsets_.push_back(param_count_);
        param_count_ += layer_param_count(layers_[i]);
    }
}

ForwardResult LayerStack::forward(std::span<const double> params, const Tensor& x) const {
    if (params.size() != param_count_)
        throw InternalError("parameter segment has " + std::to_string(params.size()) + " values, stack needs " +
                            std::to_string(param_count_));
    if (x.rank() != input_shape_.size() + 1 || x.dim(0) == 0 ||
        !std::equal(input_shape_.begin(), input_shape_.end(), x.shape().begin() + 1)) {
        throw ConfigError("stack input: expected [batch]+" + shape_to_string(input_shape_) + ", got " +
                          shape_to_string(x.shape()));
    }
    const std::size_t batch = x.dim(0);
    ForwardResult res;
    res.cache.stack_id = id_;
    res.cache.inputs.reserve(layers_.size());
    res.cache.argmax.resize(layers_.size());

    Tensor cur = x;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        const auto seg = params.subspan(offsets_[i], layer_param_count(layers_[i]));
        const Shape out_shape = shapes_[i + 1];
        Tensor next = std::visit(Overloaded{
                                     [&](const Conv1D& c) { return conv_forward(c, seg, cur, out_shape); },
                                     [&](const ReLU&) {
                                         Tensor y = cur;
                                         for (double& v : y.values()) v = v > 0.0 ? v : 0.0;
                                         return y;
                                     },
                                     [&](const MaxPool1D& m) {
                                         return pool_forward(m, cur, out_shape, res.cache.argmax[i]);
                                     },
                                     [&](const Flatten&) { return cur.reshaped(with_batch(batch, out_shape)); },
                                     [&](const Dense& d) { return dense_forward(d, seg, cur); },
                                 },
                                 layers_[i]);
        res.cache.inputs.push_back(std::move(cur));
        cur = std::move(next);
    }
    res.cache.output_shape = cur.shape();
    res.output = std::move(cur);
    return res;
}

Tensor LayerStack::backward(std::span<const double> params, const ForwardCache& cache, const Tensor& dy,
                            std::span<double> grad) const {
    if (cache.stack_id != id_ || cache.inputs.size() != layers_.size())
        throw InternalError("forward cache was produced by a different stack");
    if (dy.shape() != cache.output_shape)
        throw InternalError("gradient shape " + shape_to_string(dy.shape()) + " does not match output " +
                            shape_to_string(cache.output_shape));
    if (params.size() != param_count_ || grad.size() != param_count_)
        throw InternalError("parameter/gradient segment length mismatch");

    Tensor cur = dy;
    for (std::size_t i = layers_.size(); i-- > 0;) {
        const Tensor& x = cache.inputs[i];
        const std::size_t n = layer_param_count(layers_[i]);
        const auto seg = params.subspan(offsets_[i], n);
        const auto gseg = grad.subspan(offsets_[i], n);
        cur = std::visit(Overloaded{
                             [&](const Conv1D& c) { return conv_backward(c, seg, x, cur, gseg); },
                             [&](const ReLU&) {
                                 Tensor dx = cur;
                                 for (std::size_t k = 0; k < dx.size(); ++k)
                                     if (!(x[k] > 0.0)) dx[k] = 0.0;
                                 return dx;
                             },
                             [&](const MaxPool1D&) {
                                 Tensor dx(x.shape());
                                 const auto& am = cache.argmax[i];
                                 for (std::size_t k = 0; k < am.size(); ++k) dx[am[k]] += cur[k];
                                 return dx;
                             },
                             [&](const Flatten&) { return cur.reshaped(x.shape()); },
                             [&](const Dense& d) { return dense_backward(d, seg, x, cur, gseg); },
                         },
                         layers_[i]);
    }
    return cur;
}

BackwardResult LayerStack::backward(std::span<const double> params, const ForwardCache& cache,
                                    const Tensor& dy) const {
    BackwardResult res;
    res.dparams.assign(param_count_, 0.0);
    res.dx = backward(params, cache, dy, res.dparams);
    return res;
}

std::vector<double> LayerStack::init_params(Rng& rng) const {
    std::vector<double> p(param_count_, 0.0);
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        std::size_t fan_in = 0, fan_out = 0, n_weights = 0;
        if (const auto* c = std::get_if<Conv1D>(&layers_[i])) {
            fan_in = c->in_channels * c->kernel_size;
            fan_out = c->out_channels * c->kernel_size;
            n_weights = c->out_channels * c->in_channels * c->kernel_size;
        } else if (const auto* d = std::get_if<Dense>(&layers_[i])) {
            fan_in = d->in_features;
            fan_out = d->out_features;
            n_weights = d->in_features * d->out_features;
        } else {
            continue;
        }
        const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        std::uniform_real_distribution<double> dist(-limit, limit);
        for (std::size_t k = 0; k < n_weights; ++k) p[offsets_[i] + k] = dist(rng);
    }
    return p;
}

}  // namespace fedaux::nn
