#pragma once

// Temperature laws for the SQ/DQ relaxation rates and the decomposition of the
// Hahn-echo decoherence rate into lifetime broadening, bath-spin dephasing and
// an unexplained residual.

#include "nvcoh/constants.hpp"
#include "nvcoh/error.hpp"
#include "nvcoh/relaxation.hpp"
#include "nvcoh/sample.hpp"

#include <cmath>
#include <optional>

namespace nvcoh {

inline double inv_t1(double temperature, const ThermalRateLaw& law = RateLaws{}.invT1)
{
    return law.rate(temperature);
}

inline double omega_of_t(double temperature, const RateLaws& laws = {})
{
    return inv_t1(temperature, laws.invT1) / 3.0;
}

inline double gamma_of_t(double temperature, const RateLaws& laws = {})
{
    return laws.gammaDQ.rate(temperature);
}

/// Spin-lattice contribution of bath species A to the NV dephasing rate (s^-1):
///   (1/1.4) sqrt(2.53 mu0 g_e g_A beta_e beta_A / (4 pi hbar) * c_A / T1_A)
inline double dephasing_sl(const SpinSpeciesConfig& species, double temperature,
                           double perCm3PerPpb = constants::ppb_to_per_cm3)
{
    species.validate();
    const double density = species.density_per_m3(perCm3PerPpb);
    if (density == 0.0) {
        return 0.0;
    }
    const double invT1 = species.relaxationLaw.rate(temperature);
    detail::require_domain(invT1 > 0.0, "dephasing_sl: bath T1 must be positive and finite");
    using namespace constants;
    const double coupling = 2.53 * mu0 * g_nv * species.gFactor * bohr_magneton * species.magneton / (4.0 * pi * hbar);
    return std::sqrt(coupling * density * invT1) / 1.4;
}

/// Spin-spin (flip-flop) contribution of bath species A (s^-1), temperature independent:
///   0.37 mu0 (g_e beta_e)^(1/2) (g_A beta_A)^(3/2) [S(S+1)]^(1/4) c_A / (2 hbar)
/// The printed expression is an energy; dividing by hbar gives the rate.
inline double dephasing_ss(const SpinSpeciesConfig& species, double perCm3PerPpb = constants::ppb_to_per_cm3)
{
    species.validate();
    const double density = species.density_per_m3(perCm3PerPpb);
    if (density == 0.0) {
        return 0.0;
    }
    using namespace constants;
    const double s = species.spinS;
    return 0.37 * mu0 * std::sqrt(g_nv * bohr_magneton) * std::pow(species.gFactor * species.magneton, 1.5) *
           std::pow(s * (s + 1.0), 0.25) / 2.0 * density / hbar;
}

struct DephasingBudget {
    double temperature = 0.0;
    double lifetimeTerm = 0.0;    // (3 Omega + gamma) / 2
    double p1SL = 0.0;
    double c13SS = 0.0;
    double residualOthers = 0.0;  // signed; carries the unexplained gap when a measurement is supplied
    double totalInvT2 = 0.0;
    bool measured = false;
    bool extrapolated = false;    // T outside the 300-600 K range of the fitted laws

    [[nodiscard]] double modeled_sum() const { return lifetimeTerm + p1SL + c13SS; }
    [[nodiscard]] double pure_dephasing() const { return totalInvT2 - lifetimeTerm; }
};

inline RateParams rates_at(double temperature, const SampleConfig& sample)
{
    RateParams r;
    r.omega = omega_of_t(temperature, sample.rates);
    r.gammaDQ = gamma_of_t(temperature, sample.rates);
    r.gammaDephase = dephasing_sl(sample.p1_species(), temperature, sample.perCm3PerPpb) +
                     dephasing_ss(sample.c13_species(), sample.perCm3PerPpb);
    return r;
}

inline DephasingBudget dephasing_budget(double temperature, const SampleConfig& sample,
                                        std::optional<double> measuredInvT2 = std::nullopt)
{
    DephasingBudget b;
    b.temperature = temperature;
    b.extrapolated = temperature < 300.0 || temperature > 600.0;
    b.lifetimeTerm = (inv_t1(temperature, sample.rates.invT1) + gamma_of_t(temperature, sample.rates)) / 2.0;
    b.p1SL = dephasing_sl(sample.p1_species(), temperature, sample.perCm3PerPpb);
    b.c13SS = dephasing_ss(sample.c13_species(), sample.perCm3PerPpb);
    if (measuredInvT2) {
        detail::require_domain(*measuredInvT2 > 0.0, "dephasing_budget: measured 1/T2 must be > 0");
        b.measured = true;
        b.totalInvT2 = *measuredInvT2;
        b.residualOthers = *measuredInvT2 - b.modeled_sum();
    } else {
        b.totalInvT2 = b.modeled_sum();
    }
    return b;
}

}  // namespace nvcoh
