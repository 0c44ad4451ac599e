#ifndef WAVESEP_PARAMETERS_HPP
#define WAVESEP_PARAMETERS_HPP

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "wavesep/errors.hpp"
#include "wavesep/rng.hpp"

namespace wavesep {

// Shape of one convolution kernel. Widths are odd so layers stay symmetric
// around the output sample (width 1 or 3 in this artifact).
struct KernelShape {
    int out_channels = 0;
    int in_channels = 0;
    int width = 0;

    size_t weight_count() const {
        return static_cast<size_t>(out_channels) * in_channels * width;
    }
    size_t param_count() const { return weight_count() + out_channels; }

    bool operator==(const KernelShape&) const = default;
};

// All trainable parameters of a model in one flat buffer, in declared kernel
// order. Per kernel the layout is weights [out][in][width] followed by the
// bias [out]. Checkpoints serialize this buffer verbatim.
template <typename T>
class ParameterSet {
public:
    int add_kernel(std::string name, KernelShape shape) {
        if (shape.out_channels < 1 || shape.in_channels < 1 || shape.width < 1)
            throw ConfigError("kernel '" + name + "': non-positive shape");
        if (shape.width % 2 == 0)
            throw ConfigError("kernel '" + name + "': width must be odd");
        Kernel k;
        k.name = std::move(name);
        k.shape = shape;
        k.offset = values_.size();
        kernels_.push_back(k);
        values_.resize(values_.size() + shape.param_count(), T(0));
        return static_cast<int>(kernels_.size()) - 1;
    }

    int kernel_count() const { return static_cast<int>(kernels_.size()); }
    const KernelShape& shape(int k) const { return kernels_[k].shape; }
    const std::string& name(int k) const { return kernels_[k].name; }
    size_t offset(int k) const { return kernels_[k].offset; }

    std::span<T> weights(int k) {
        return {values_.data() + kernels_[k].offset, kernels_[k].shape.weight_count()};
    }
    std::span<const T> weights(int k) const {
        return {values_.data() + kernels_[k].offset, kernels_[k].shape.weight_count()};
    }
    std::span<T> bias(int k) {
        return {values_.data() + kernels_[k].offset + kernels_[k].shape.weight_count(),
                static_cast<size_t>(kernels_[k].shape.out_channels)};
    }
    std::span<const T> bias(int k) const {
        return {values_.data() + kernels_[k].offset + kernels_[k].shape.weight_count(),
                static_cast<size_t>(kernels_[k].shape.out_channels)};
    }

    std::span<T> flat() { return values_; }
    std::span<const T> flat() const { return values_; }
    size_t param_count() const { return values_.size(); }

    // Centered uniform weights scaled by 1/sqrt(in_channels * width), zero
    // biases. Each kernel draws from its own derived stream so adding or
    // removing kernels elsewhere does not shift unrelated values.
    void init_weights(uint64_t seed) {
        for (int k = 0; k < kernel_count(); ++k) {
            Rng rng(derive_seed(seed, 0x77e1, static_cast<uint64_t>(k)));
            const KernelShape& s = kernels_[k].shape;
            const double scale =
                1.0 / std::sqrt(static_cast<double>(s.in_channels) * s.width);
            for (T& w : weights(k)) w = static_cast<T>(rng.uniform(-scale, scale));
            for (T& b : bias(k)) b = T(0);
        }
    }

    template <typename U>
    ParameterSet<U> cast() const {
        ParameterSet<U> out;
        for (const Kernel& k : kernels_) out.add_kernel(k.name, k.shape);
        std::span<U> dst = out.flat();
        for (size_t i = 0; i < values_.size(); ++i) dst[i] = static_cast<U>(values_[i]);
        return out;
    }

private:
    struct Kernel {
        std::string name;
        KernelShape shape;
        size_t offset = 0;
    };

    std::vector<Kernel> kernels_;
    std::vector<T> values_;
};

} // namespace wavesep

#endif
