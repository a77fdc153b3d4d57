#pragma once

#include "rpf/common.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <utility>
#include <vector>

namespace rpf {

/**
 * Periodic 0/1 indicator: value 1 when (t + phase) mod period lies in
 * [start, end). A zero period denotes the constant function 1.
 */
struct PeriodicIndicator {
    double period = 0.0;
    double start = 0.0;
    double end = 0.0;
    double phase = 0.0;

    static PeriodicIndicator constant() { return {}; }

    bool is_constant() const { return period == 0.0; }

    double value(double t) const {
        if (is_constant()) return 1.0;
        double r = std::fmod(t + phase, period);
        if (r < 0.0) r += period;
        return (r >= start && r < end) ? 1.0 : 0.0;
    }

    /// The on-intervals intersected with [a, b], in increasing order.
    std::vector<std::pair<double, double>> intervals(double a, double b) const {
        std::vector<std::pair<double, double>> out;
        if (!(b > a)) return out;
        if (is_constant()) {
            out.emplace_back(a, b);
            return out;
        }
        double cycle = std::floor((a + phase) / period) - 1.0;
        while (true) {
            const double lo = cycle * period + start - phase;
            const double hi = cycle * period + end - phase;
            if (lo >= b) break;
            const double clo = std::max(lo, a), chi = std::min(hi, b);
            if (chi > clo) out.emplace_back(clo, chi);
            cycle += 1.0;
        }
        return out;
    }

    /// Smallest boundary strictly after t; +inf for the constant function.
    double next_change(double t) const {
        if (is_constant()) return std::numeric_limits<double>::infinity();
        const double cycle = std::floor((t + phase) / period);
        double best = std::numeric_limits<double>::infinity();
        for (double c : {cycle - 1.0, cycle, cycle + 1.0})
            for (double edge : {start, end}) {
                const double x = c * period + edge - phase;
                if (x > t) best = std::min(best, x);
            }
        return best;
    }

    bool operator==(const PeriodicIndicator &) const = default;
};

/// Total length of the intersection of two sorted disjoint interval lists.
inline double overlap_length(const std::vector<std::pair<double, double>> &x,
                             const std::vector<std::pair<double, double>> &y) {
    double total = 0.0;
    std::size_t i = 0, j = 0;
    while (i < x.size() && j < y.size()) {
        const double lo = std::max(x[i].first, y[j].first);
        const double hi = std::min(x[i].second, y[j].second);
        if (hi > lo) total += hi - lo;
        if (x[i].second < y[j].second)
            ++i;
        else
            ++j;
    }
    return total;
}

enum class BasisKind { Static, HourDay };

inline std::string to_string(BasisKind k) { return k == BasisKind::Static ? "static" : "hour_day"; }

inline BasisKind basis_kind_from_string(const std::string &s) {
    if (s == "static") return BasisKind::Static;
    if (s == "hour_day") return BasisKind::HourDay;
    throw config_error("unknown basis '" + s + "' (expected static or hour_day)");
}

/**
 * User functions h_i and item functions l_j. Dynamic factors are
 * theta_u(t) = sum_i theta_u^i h_i(t) and beta_p(t) = sum_j beta_p^j l_j(t).
 */
class TimeBasis {
  public:
    TimeBasis() : user_{PeriodicIndicator::constant()}, item_{PeriodicIndicator::constant()} {}
    TimeBasis(std::vector<PeriodicIndicator> user, std::vector<PeriodicIndicator> item)
        : user_(std::move(user)), item_(std::move(item)) {
        if (user_.empty() || item_.empty()) throw config_error("time basis needs at least one function per side");
        for (const auto *side : {&user_, &item_})
            for (const auto &f : *side)
                if (!f.is_constant() && !(f.period > 0.0 && f.start >= 0.0 && f.end > f.start &&
                                          f.end <= f.period))
                    throw config_error("malformed periodic indicator");
    }

    /// I = J = 1 with h = l = 1.
    static TimeBasis static_basis() { return {}; }

    /**
     * 24 hour-of-day indicators followed by 7 day-of-week indicators.
     * `seconds_per_unit` converts the dataset time unit to seconds and
     * `epoch_offset_seconds` is the time elapsed since a Monday 00:00 at t = 0.
     */
    static std::vector<PeriodicIndicator> hour_day_functions(double seconds_per_unit,
                                                             double epoch_offset_seconds) {
        if (!(seconds_per_unit > 0.0)) throw config_error("seconds_per_unit must be positive");
        const double hour = 3600.0 / seconds_per_unit;
        const double day = 24.0 * hour;
        const double phase = epoch_offset_seconds / seconds_per_unit;
        std::vector<PeriodicIndicator> out;
        for (int h = 0; h < 24; ++h) out.push_back({day, h * hour, (h + 1) * hour, phase});
        for (int d = 0; d < 7; ++d) out.push_back({7.0 * day, d * day, (d + 1) * day, phase});
        return out;
    }

    static TimeBasis make(BasisKind user, BasisKind item, double seconds_per_unit = 86400.0,
                          double epoch_offset_seconds = 0.0) {
        auto side = [&](BasisKind k) {
            return k == BasisKind::Static
                       ? std::vector<PeriodicIndicator>{PeriodicIndicator::constant()}
                       : hour_day_functions(seconds_per_unit, epoch_offset_seconds);
        };
        return TimeBasis(side(user), side(item));
    }

    std::size_t user_dim() const { return user_.size(); }
    std::size_t item_dim() const { return item_.size(); }
    bool is_static() const {
        return user_.size() == 1 && item_.size() == 1 && user_[0].is_constant() &&
               item_[0].is_constant();
    }
    const PeriodicIndicator &user_function(std::size_t i) const { return user_.at(i); }
    const PeriodicIndicator &item_function(std::size_t j) const { return item_.at(j); }

    double user_value(std::size_t i, double t) const { return user_[i].value(t); }
    double item_value(std::size_t j, double t) const { return item_[j].value(t); }

    std::vector<double> user_values(double t) const {
        std::vector<double> v(user_.size());
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = user_[i].value(t);
        return v;
    }
    std::vector<double> item_values(double t) const {
        std::vector<double> v(item_.size());
        for (std::size_t j = 0; j < v.size(); ++j) v[j] = item_[j].value(t);
        return v;
    }

    /// Exact integral of h_i l_j over [a, b].
    double integral(std::size_t i, std::size_t j, double a, double b) const {
        if (!(b > a)) return 0.0;
        const auto &h = user_.at(i);
        const auto &l = item_.at(j);
        if (h.is_constant() && l.is_constant()) return b - a;
        return overlap_length(h.intervals(a, b), l.intervals(a, b));
    }

    /// F_ij(T) for all pairs, row-major I x J.
    std::vector<double> integral_table(double T) const {
        std::vector<double> F(user_.size() * item_.size());
        for (std::size_t i = 0; i < user_.size(); ++i)
            for (std::size_t j = 0; j < item_.size(); ++j) F[i * item_.size() + j] = integral(i, j, 0.0, T);
        return F;
    }

    /// Next time strictly after t at which any basis function changes value.
    double next_change(double t) const {
        double best = std::numeric_limits<double>::infinity();
        for (const auto *side : {&user_, &item_})
            for (const auto &f : *side) best = std::min(best, f.next_change(t));
        return best;
    }

    bool operator==(const TimeBasis &) const = default;

  private:
    std::vector<PeriodicIndicator> user_;
    std::vector<PeriodicIndicator> item_;
};

/// A point inside the piece [t, next) on which the basis is constant. Probing
/// at t itself can land on the wrong side of a rounded switch time.
inline double piece_interior(double t, double next) {
    return std::isfinite(next) ? t + 0.5 * (next - t) : t;
}

/// F_ij(T) evaluated once for a fixed horizon.
class BasisIntegrals {
  public:
    BasisIntegrals() = default;
    BasisIntegrals(const TimeBasis &basis, double T)
        : horizon_(T), cols_(basis.item_dim()), table_(basis.integral_table(T)) {}

    double operator()(std::size_t i, std::size_t j) const { return table_[i * cols_ + j]; }
    double horizon() const { return horizon_; }

  private:
    double horizon_ = 0.0;
    std::size_t cols_ = 0;
    std::vector<double> table_;
};

/// basis_integral: exact F_ij(T).
inline double basis_integral(const TimeBasis &basis, std::size_t i, std::size_t j, double T) {
    if (i >= basis.user_dim() || j >= basis.item_dim()) throw std::out_of_range("basis index");
    if (T < 0.0) throw std::domain_error("basis integral: negative horizon");
    return basis.integral(i, j, 0.0, T);
}

} // namespace rpf
