#pragma once

#include "nvcoh/calibration.hpp"
#include "nvcoh/constants.hpp"
#include "nvcoh/curve_data.hpp"
#include "nvcoh/error.hpp"
#include "nvcoh/fit_models.hpp"
#include "nvcoh/sample.hpp"

#include <cmath>
#include <limits>
#include <span>
#include <vector>

namespace nvcoh {

struct MicrowaveTones {
    double minus = 0.0;  // Hz, drives |0> <-> |-1>
    double plus = 0.0;   // Hz, drives |0> <-> |+1>

    [[nodiscard]] double mean() const { return 0.5 * (minus + plus); }
};

struct TemperatureEstimate {
    double temperature = 0.0;  // K
    double sigma = 0.0;        // K
    double d = 0.0;            // Hz
    double frequency = 0.0;    // Hz
};

/// Thermal-echo fringe frequency f = (w- + w+)/2 - D mapped to temperature through the calibration.
inline TemperatureEstimate temperature_from_frequency(double frequency, double frequencySigma,
                                                      const MicrowaveTones& tones, const DCalibration& cal)
{
    TemperatureEstimate est;
    est.frequency = frequency;
    est.d = tones.mean() - frequency;
    est.temperature = cal.t_of_d(est.d);
    est.sigma = frequencySigma / std::abs(cal.local_slope(est.temperature));
    return est;
}

inline TemperatureEstimate extract_temperature(const CurveData& curve, const MicrowaveTones& tones,
                                               const DCalibration& cal, const FitContext& ctx = {})
{
    const FitResult fit = fit_decaying_cosine(curve, ctx);
    if (!fit.converged) {
        throw FitError("extract_temperature: frequency fit did not converge (" + fit.status + ")");
    }
    return temperature_from_frequency(fit.value("frequency"), fit.error("frequency"), tones, cal);
}

/// Interrogation time maximizing exp(-(t/T_TE)^m) sqrt(t): T_TE (1/(2m))^(1/m).
inline double optimal_time(double tte, double m)
{
    detail::require_domain(m > 0.0, "optimal_time: exponent must be > 0");
    detail::require_domain(tte > 0.0, "optimal_time: T_TE must be > 0");
    return tte * std::pow(1.0 / (2.0 * m), 1.0 / m);
}

/// Shot-noise-limited temperature sensitivity in K/sqrt(Hz):
///   eta = sqrt(2 (p0 + p1)) / (p0 - p1) / (2 pi |dD/dT| exp(-(t/T_TE)^m) sqrt(t))
inline double sensitivity(double p0, double p1, double dDdT, double tte, double m, double t)
{
    detail::require_domain(t > 0.0, "sensitivity: interrogation time must be > 0");
    detail::require_domain(p1 >= 0.0 && p0 >= p1, "sensitivity: requires p0 >= p1 >= 0");
    if (p0 == p1) {
        throw DomainError("sensitivity: p0 == p1 gives no readout contrast (infinite eta)");
    }
    detail::require_domain(dDdT != 0.0, "sensitivity: dD/dT must be non-zero");
    const double readout = std::sqrt(2.0 * (p0 + p1)) / (p0 - p1);
    const double phase = 2.0 * constants::pi * std::abs(dDdT) * std::exp(-std::pow(t / tte, m)) * std::sqrt(t);
    return readout / phase;
}

inline double sensitivity(const ReadoutBudget& budget, double dDdT, double tte, double m, double t)
{
    return sensitivity(budget.p0, budget.p1, dDdT, tte, m, t);
}

struct SensitivityPoint {
    double temperature = 0.0;  // K
    double eta = 0.0;          // K/sqrt(Hz)
    double slope = 0.0;        // |dD/dT|, Hz/K
    double contrast = 0.0;
};

struct SensitivityCurve {
    std::vector<SensitivityPoint> points;
    double bestTemperature = 0.0;
    double bestEta = std::numeric_limits<double>::infinity();
    double interrogationTime = 0.0;  // s
};

/// eta at one temperature: contrast fade, local calibration slope, T_TE independent of T.
inline SensitivityPoint sensitivity_at(const SampleConfig& sample, double temperature)
{
    const auto& c = sample.coherence;
    SensitivityPoint pt;
    pt.temperature = temperature;
    pt.slope = std::abs(sample.calibration.local_slope(temperature));
    pt.contrast = sample.readout.contrast_at(temperature);
    const double t = optimal_time(c.tte, c.teExponent);
    pt.eta = sensitivity(sample.readout.p0, sample.readout.p1_at(temperature), pt.slope, c.tte, c.teExponent, t);
    return pt;
}

inline SensitivityCurve sensitivity_vs_temperature(const SampleConfig& sample, std::span<const double> temperatures)
{
    SensitivityCurve out;
    out.interrogationTime = optimal_time(sample.coherence.tte, sample.coherence.teExponent);
    for (double t : temperatures) {
        const auto pt = sensitivity_at(sample, t);
        if (pt.eta < out.bestEta) {
            out.bestEta = pt.eta;
            out.bestTemperature = t;
        }
        out.points.push_back(pt);
    }
    return out;
}

}  // namespace nvcoh
