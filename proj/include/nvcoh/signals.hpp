#pragma once

// Closed-form normalized signal models for the coherence protocols and the CW
// ODMR spectrum.  Normalized signals equal 1 at zero delay; readout contrast is
// applied separately through fluorescence().

#include "nvcoh/constants.hpp"
#include "nvcoh/error.hpp"

#include <cmath>
#include <span>
#include <vector>

namespace nvcoh {

/// Hahn-echo decay with 13C collapse/revival comb.
struct HahnEchoModel {
    double t2 = 184e-6;            // s
    double stretchP = 1.5;
    double revivalPeriod = 37.35e-6;  // s
    double revivalWidth = 4e-6;    // s
    int revivalCount = 10;

    void validate() const
    {
        detail::require_domain(t2 > 0.0, "HahnEchoModel: t2 must be > 0");
        detail::require_domain(stretchP > 0.5 && stretchP <= 4.0, "HahnEchoModel: stretchP must be in (0.5, 4]");
        detail::require_domain(revivalPeriod > 0.0, "HahnEchoModel: revivalPeriod must be > 0");
        detail::require_domain(revivalWidth > 0.0 && revivalWidth < revivalPeriod,
                               "HahnEchoModel: revivalWidth must be in (0, revivalPeriod)");
        detail::require_domain(revivalCount >= 0, "HahnEchoModel: revivalCount must be >= 0");
    }

    /// Enough revivals to cover delays up to tauMax: ceil(tauMax / T_R) + 1.
    [[nodiscard]] HahnEchoModel covering(double tauMax) const
    {
        HahnEchoModel m = *this;
        m.revivalCount = static_cast<int>(std::ceil(tauMax / revivalPeriod)) + 1;
        return m;
    }
};

struct RamseyModel {
    double t2star = 0.8e-6;            // s
    double detuning = 2.0e6;           // Hz
    double hyperfineSplitting = 2.16e6;  // Hz, 14N triplet spacing
    double contrast = 0.04;
    double envelopeExponent = 2.0;

    void validate() const
    {
        detail::require_domain(t2star > 0.0, "RamseyModel: t2star must be > 0");
        detail::require_domain(contrast >= 0.0 && contrast <= 1.0, "RamseyModel: contrast must be in [0, 1]");
        detail::require_domain(envelopeExponent > 0.0, "RamseyModel: envelopeExponent must be > 0");
    }
};

struct ThermalEchoModel {
    double tte = 4e-6;               // s
    double oscillationFreq = 870e3;  // Hz, f = (w- + w+)/2 - D
    double envelopeExponent = 2.0;
    double contrast = 0.04;

    void validate() const
    {
        detail::require_domain(tte > 0.0, "ThermalEchoModel: tte must be > 0");
        detail::require_domain(oscillationFreq >= 0.0, "ThermalEchoModel: oscillationFreq must be >= 0");
        detail::require_domain(envelopeExponent > 0.0, "ThermalEchoModel: envelopeExponent must be > 0");
        detail::require_domain(contrast >= 0.0 && contrast <= 1.0, "ThermalEchoModel: contrast must be in [0, 1]");
    }
};

/// Linear fade of ODMR contrast with temperature, c(T) = c_ref [1 - k (T - T_ref)].
struct ContrastFade {
    double referenceTemperature = 300.0;  // K
    double fadePerKelvin = 1.0 / 600.0;   // halves the contrast between 300 K and 600 K

    [[nodiscard]] double factor(double temperature) const
    {
        const double f = 1.0 - fadePerKelvin * (temperature - referenceTemperature);
        detail::require_domain(f > 0.0, "ContrastFade: contrast vanishes at this temperature");
        return f;
    }
};

inline double stretched_exp(double t, double scale, double exponent)
{
    return std::exp(-std::pow(t / scale, exponent));
}

/// 13C revival period in microseconds for a field in gauss: 2000 / (1.071 B).
inline double revival_period_us(double bGauss)
{
    detail::require_domain(bGauss > 0.0, "revival_period: B must be > 0");
    return 2000.0 / (constants::c13_gyromagnetic_khz_per_gauss * bGauss);
}

inline double revival_period(double bGauss) { return revival_period_us(bGauss) * 1e-6; }

namespace detail {

inline double revival_comb(double tau, const HahnEchoModel& m)
{
    const double cutoff = 8.0 * m.revivalWidth;
    double sum = 0.0;
    for (int i = 0; i <= m.revivalCount; ++i) {
        const double dt = tau - i * m.revivalPeriod;
        if (std::abs(dt) > cutoff) {
            continue;
        }
        sum += std::exp(-(dt * dt) / (m.revivalWidth * m.revivalWidth));
    }
    return sum;
}

}  // namespace detail

inline double hahn_echo_signal(double tau, const HahnEchoModel& model)
{
    model.validate();
    detail::require_domain(tau >= 0.0, "hahn_echo_signal: tau must be >= 0");
    return stretched_exp(tau, model.t2, model.stretchP) * detail::revival_comb(tau, model) /
           detail::revival_comb(0.0, model);
}

inline double ramsey_signal(double tau, const RamseyModel& model)
{
    model.validate();
    detail::require_domain(tau >= 0.0, "ramsey_signal: tau must be >= 0");
    double comb = 0.0;
    for (int k = -1; k <= 1; ++k) {
        comb += std::cos(2.0 * constants::pi * (model.detuning + k * model.hyperfineSplitting) * tau);
    }
    return stretched_exp(tau, model.t2star, model.envelopeExponent) * comb / 3.0;
}

inline double thermal_echo_signal(double t, const ThermalEchoModel& model)
{
    model.validate();
    detail::require_domain(t >= 0.0, "thermal_echo_signal: t must be >= 0");
    return stretched_exp(t, model.tte, model.envelopeExponent) *
           std::cos(2.0 * constants::pi * model.oscillationFreq * t);
}

/// Relative fluorescence for a normalized signal s read out with the given contrast.
inline double fluorescence(double normalizedSignal, double contrast)
{
    return 1.0 - 0.5 * contrast * (1.0 - normalizedSignal);
}

struct OdmrLine {
    double frequency;  // Hz
    double weight;     // fraction of the NV ensemble
};

/// Transition lines of the four <111> orientation families for a field along one axis.
/// Off-axis families see the projected field B cos(109.47 deg).
inline std::vector<OdmrLine> odmr_lines(double dHz, double bGauss)
{
    detail::require_domain(bGauss >= 0.0, "odmr_lines: B must be >= 0");
    const double aligned = constants::nv_gyromagnetic_hz_per_gauss * bGauss;
    const double offAxis = aligned * constants::cos_tetrahedral;
    return {
        {dHz - aligned, 0.125},
        {dHz + aligned, 0.125},
        {dHz - offAxis, 0.375},
        {dHz + offAxis, 0.375},
    };
}

/// CW ODMR spectrum: 1 minus Lorentzian dips (FWHM = linewidth) weighted by orientation population.
inline std::vector<double> cw_odmr_spectrum(std::span<const double> freqGrid, double dHz, double bGauss,
                                            double contrast, double linewidth)
{
    detail::require_domain(linewidth > 0.0, "cw_odmr_spectrum: linewidth must be > 0");
    for (std::size_t i = 1; i < freqGrid.size(); ++i) {
        detail::require_domain(freqGrid[i] >= freqGrid[i - 1], "cw_odmr_spectrum: frequency grid must be sorted");
    }
    const auto lines = odmr_lines(dHz, bGauss);
    const double hw = 0.5 * linewidth;
    std::vector<double> out;
    out.reserve(freqGrid.size());
    for (double f : freqGrid) {
        double dip = 0.0;
        for (const auto& line : lines) {
            const double x = f - line.frequency;
            dip += line.weight * hw * hw / (x * x + hw * hw);
        }
        out.push_back(1.0 - contrast * dip);
    }
    return out;
}

}  // namespace nvcoh
