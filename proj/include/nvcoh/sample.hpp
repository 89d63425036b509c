#pragma once

// Sample and environment description shared by the rate, sequence and
// thermometry modules.  Defaults describe the CVD plate studied here:
// [N] ~ 125 ppb, [NV-] ~ 2 ppb, natural 13C, 50 G along one <111> axis.

#include "nvcoh/calibration.hpp"
#include "nvcoh/constants.hpp"
#include "nvcoh/error.hpp"
#include "nvcoh/signals.hpp"

#include <cmath>
#include <optional>
#include <utility>
#include <vector>

namespace nvcoh {

/// rate(T) = linCoeff T + aCoeff T^5 + bCoeff, in s^-1.
struct ThermalRateLaw {
    double aCoeff = 0.0;    // K^-5 s^-1
    double bCoeff = 0.0;    // s^-1
    double linCoeff = 0.0;  // K^-1 s^-1
    // Quoted fit uncertainties; reported only.
    double aErr = 0.0;
    double bErr = 0.0;

    void validate() const
    {
        detail::require_domain(aCoeff >= 0.0 && bCoeff >= 0.0 && linCoeff >= 0.0,
                               "ThermalRateLaw: coefficients must be non-negative");
    }

    [[nodiscard]] double rate(double temperature) const
    {
        validate();
        detail::require_domain(temperature > 0.0, "ThermalRateLaw: temperature must be > 0 K");
        const double t2 = temperature * temperature;
        return linCoeff * temperature + aCoeff * t2 * t2 * temperature + bCoeff;
    }
};

struct SpinSpeciesConfig {
    double concentrationPpm = 0.0;
    double gFactor = 2.0;
    double magneton = constants::bohr_magneton;  // J/T
    double spinS = 0.5;
    ThermalRateLaw relaxationLaw;  // 1/T1 of the bath spin

    void validate() const
    {
        detail::require_domain(concentrationPpm >= 0.0, "SpinSpeciesConfig: concentration must be >= 0");
        const double twice = 2.0 * spinS;
        detail::require_domain(spinS > 0.0 && std::abs(twice - std::round(twice)) < 1e-12,
                               "SpinSpeciesConfig: spin must be a positive half-integer");
        detail::require_domain(gFactor > 0.0 && magneton > 0.0, "SpinSpeciesConfig: g and magneton must be > 0");
    }

    /// Spin density in m^-3.
    [[nodiscard]] double density_per_m3(double perCm3PerPpb) const
    {
        return concentrationPpm * 1e3 * perCm3PerPpb * 1e6;
    }
};

/// Per-shot photon yields of the bright |0> and dark |+-1> states at the reference temperature.
struct ReadoutBudget {
    double p0 = 3.0;
    double p1 = 2.88;
    ContrastFade contrastTemp;

    void validate() const
    {
        detail::require_domain(p0 > p1 && p1 >= 0.0, "ReadoutBudget: requires p0 > p1 >= 0");
    }

    [[nodiscard]] double contrast_at(double temperature) const
    {
        validate();
        return (p0 - p1) / p0 * contrastTemp.factor(temperature);
    }

    [[nodiscard]] double p1_at(double temperature) const { return p0 * (1.0 - contrast_at(temperature)); }
};

struct RateLaws {
    ThermalRateLaw invT1{4.4e-11, 237.0, 0.0, 0.2e-11, 20.0};      // 1/T1 = 3 Omega
    ThermalRateLaw gammaDQ{0.85e-11, 215.0, 0.0, 0.09e-11, 20.0};
};

/// Parameters of the dephasing envelopes used when simulating pulse sequences.
struct CoherenceConfig {
    double t2star = 0.8e-6;        // s
    double ramseyExponent = 2.0;
    double ramseyDetuning = 2.0e6;     // Hz
    double hyperfineSplitting = 2.16e6;  // Hz

    double tte = 4e-6;             // s
    double teExponent = 2.0;
    double mwMinus = 2.851070e9 - 140.125e6;  // Hz
    double mwPlus = 2.851070e9 + 140.125e6;   // Hz

    double hahnT2 = 184e-6;        // s
    double hahnStretch = 1.5;
    double revivalWidth = 4e-6;    // s

    double polarization = 1.0;     // laser initialization fidelity into |0>
};

struct SampleConfig {
    double nitrogenPpb = 125.0;
    double nvPpb = 2.0;
    double c13Fraction = 0.011;
    double bFieldGauss = 50.0;
    double perCm3PerPpb = constants::ppb_to_per_cm3;

    ThermalRateLaw p1Relaxation{1.1e-10, 0.0, 5e-5};  // 1/T1 of P1: A_N T + B_N T^5
    RateLaws rates;
    DCalibration calibration;
    ReadoutBudget readout;
    CoherenceConfig coherence;

    /// Optional measured (T [K], T2 [s]) points, interpolated linearly in T.
    std::vector<std::pair<double, double>> measuredT2;

    [[nodiscard]] SpinSpeciesConfig p1_species() const
    {
        return {nitrogenPpb * 1e-3, constants::g_p1, constants::bohr_magneton, 0.5, p1Relaxation};
    }

    [[nodiscard]] SpinSpeciesConfig c13_species() const
    {
        return {c13Fraction * 1e6, constants::g_c13, constants::nuclear_magneton, 0.5, ThermalRateLaw{}};
    }

    [[nodiscard]] std::optional<double> measured_inv_t2(double temperature) const
    {
        if (measuredT2.empty()) {
            return std::nullopt;
        }
        if (measuredT2.size() == 1) {
            return 1.0 / measuredT2.front().second;
        }
        std::size_t i = 0;
        while (i + 2 < measuredT2.size() && temperature > measuredT2[i + 1].first) {
            ++i;
        }
        const auto& [ta, va] = measuredT2[i];
        const auto& [tb, vb] = measuredT2[i + 1];
        const double t2 = va + (vb - va) * (temperature - ta) / (tb - ta);
        detail::require_domain(t2 > 0.0, "measured T2 interpolation is non-positive");
        return 1.0 / t2;
    }
};

}  // namespace nvcoh
