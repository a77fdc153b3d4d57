#pragma once

#include "rpf/common.hpp"

#include <cmath>
#include <numbers>

namespace rpf {

/// Exponential triggering kernel g(t_i, t) = exp(-decay (t - t_i)) for t >= t_i.
class TriggerKernel {
  public:
    TriggerKernel() = default;
    explicit TriggerKernel(double decay) : decay_(decay) {
        if (!(decay > 0.0) || !std::isfinite(decay))
            throw config_error("trigger kernel decay must be positive and finite");
    }

    /// Decay giving the requested half-life.
    static TriggerKernel from_half_life(double half_life) {
        return TriggerKernel(std::numbers::ln2 / half_life);
    }

    double decay() const { return decay_; }

    double value(double t_source, double t) const {
        if (t < t_source) return 0.0;
        return std::exp(-decay_ * (t - t_source));
    }

    /// G(delta) = integral of the kernel over [0, delta].
    double integral(double delta) const {
        if (delta < 0.0) throw std::domain_error("kernel integral: negative duration");
        return -std::expm1(-decay_ * delta) / decay_;
    }

    bool operator==(const TriggerKernel &) const = default;

  private:
    double decay_ = std::numbers::ln2;
};

} // namespace rpf
