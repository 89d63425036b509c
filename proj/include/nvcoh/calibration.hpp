#pragma once

#include "nvcoh/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

namespace nvcoh {

/// Piecewise-linear zero-field-splitting calibration D(T).
///
/// Anchors are (temperature K, D Hz) pairs with strictly increasing T and
/// strictly decreasing D, so the map is invertible on its range.  Queries
/// outside the anchored range throw unless extrapolation is requested, in which
/// case the end segments are extended.
class DCalibration {
public:
    struct Anchor {
        double temperature;  // K
        double d;            // Hz
    };

    DCalibration() : DCalibration(linear(-132e3, 300.0, 2.870e9, 300.0, 600.0)) {}

    explicit DCalibration(std::vector<Anchor> anchors) : anchors_(std::move(anchors))
    {
        if (anchors_.size() < 2) {
            throw ValidationError("DCalibration: at least two anchors required");
        }
        for (std::size_t i = 1; i < anchors_.size(); ++i) {
            if (!(anchors_[i].temperature > anchors_[i - 1].temperature)) {
                throw ValidationError("DCalibration: anchor temperatures must be strictly increasing");
            }
            if (!(anchors_[i].d < anchors_[i - 1].d)) {
                throw ValidationError("DCalibration: D must be strictly decreasing in T");
            }
        }
    }

    /// Single segment on [tMin, tMax] through (tRef, dRef) with slope dD/dT (Hz/K, negative).
    static DCalibration linear(double slopeHzPerK, double tRef, double dRef, double tMin, double tMax)
    {
        return DCalibration({{tMin, dRef + slopeHzPerK * (tMin - tRef)},
                             {tMax, dRef + slopeHzPerK * (tMax - tRef)}});
    }

    [[nodiscard]] const std::vector<Anchor>& anchors() const { return anchors_; }
    [[nodiscard]] double t_min() const { return anchors_.front().temperature; }
    [[nodiscard]] double t_max() const { return anchors_.back().temperature; }
    [[nodiscard]] bool covers(double t) const { return t >= t_min() && t <= t_max(); }

    [[nodiscard]] double segment_slope(std::size_t i) const
    {
        const auto& a = anchors_[i];
        const auto& b = anchors_[i + 1];
        return (b.d - a.d) / (b.temperature - a.temperature);
    }

    [[nodiscard]] double d_of_t(double t, bool extrapolate = false) const
    {
        check_t(t, extrapolate);
        const std::size_t i = segment_for_t(t);
        const auto& a = anchors_[i];
        return a.d + segment_slope(i) * (t - a.temperature);
    }

    [[nodiscard]] double t_of_d(double d, bool extrapolate = false) const
    {
        if (!extrapolate && (d > anchors_.front().d || d < anchors_.back().d)) {
            throw DomainError("T_of_d: D = " + std::to_string(d) + " Hz outside calibrated range");
        }
        // D decreases along the anchor list.
        std::size_t i = 0;
        while (i + 2 < anchors_.size() && d < anchors_[i + 1].d) {
            ++i;
        }
        const auto& a = anchors_[i];
        return a.temperature + (d - a.d) / segment_slope(i);
    }

    /// dD/dT at T (Hz/K, negative). At an interior anchor the two adjacent slopes are averaged.
    [[nodiscard]] double local_slope(double t, bool extrapolate = false) const
    {
        check_t(t, extrapolate);
        for (std::size_t k = 1; k + 1 < anchors_.size(); ++k) {
            if (t == anchors_[k].temperature) {
                return 0.5 * (segment_slope(k - 1) + segment_slope(k));
            }
        }
        return segment_slope(segment_for_t(t));
    }

private:
    void check_t(double t, bool extrapolate) const
    {
        detail::require_domain(std::isfinite(t), "DCalibration: non-finite temperature");
        if (!extrapolate && !covers(t)) {
            throw DomainError("DCalibration: T = " + std::to_string(t) + " K outside calibrated range");
        }
    }

    [[nodiscard]] std::size_t segment_for_t(double t) const
    {
        const auto it = std::upper_bound(anchors_.begin(), anchors_.end(), t,
                                         [](double v, const Anchor& a) { return v < a.temperature; });
        const auto idx = static_cast<std::size_t>(std::distance(anchors_.begin(), it));
        if (idx == 0) {
            return 0;
        }
        return std::min(idx - 1, anchors_.size() - 2);
    }

    std::vector<Anchor> anchors_;
};

}  // namespace nvcoh
