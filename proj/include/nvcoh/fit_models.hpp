#pragma once

// Registry of the curve models used to extract coherence parameters, with the
// initialization recipe for each (LM is local, so the starting point is part of
// the contract):
//   sqRelax         A exp(-3 Omega tau)                 log-linear early decay
//   dqRelax         A exp(-r tau), gamma = (r - Omega)/2 log-linear early decay
//   hahnEcho        A exp(-(tau/T2)^p) sum_i G(tau - i T_R; T_w)   T_R from B, T2 from revival maxima
//   decayingCosine  A exp(-(t/T)^m) cos(2 pi f t)         periodogram peak
//   ramsey          A exp(-(t/T2*)^n) <cos 2 pi (d + k a) t>_k  periodogram peak and its hyperfine images
// Times are in seconds, rates in s^-1, frequencies in Hz.

#include "nvcoh/constants.hpp"
#include "nvcoh/curve_data.hpp"
#include "nvcoh/error.hpp"
#include "nvcoh/lm.hpp"
#include "nvcoh/signals.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <initializer_list>
#include <numeric>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace nvcoh {

/// Fixed inputs the models and their initializers need beyond the data.
struct FitContext {
    double bFieldGauss = 50.0;
    double hyperfineSplitting = 2.16e6;  // Hz
    double ramseyExponent = 2.0;
    double cosineExponent = 2.0;         // m of the thermal-echo envelope
    FitOptions options;
};

inline constexpr std::array<std::string_view, 5> model_names{"sqRelax", "dqRelax", "hahnEcho", "decayingCosine",
                                                             "ramsey"};

struct Estimate {
    double value = 0.0;
    double error = 0.0;
};

struct PeriodogramPeak {
    double frequency = 0.0;  // Hz
    double power = 0.0;
    double medianPower = 0.0;
    double bandMaxPower = 0.0;
    bool atBandEdge = false;  // no interior local maximum: no resolved peak
};

namespace detail {

struct Series {
    std::vector<double> x;  // s
    std::vector<double> y;
    std::vector<double> sigma;
};

inline Series series(const CurveData& data)
{
    data.validate();
    return {data.tau_seconds(), data.signal, data.sigma};
}

/// Fits on data divided by max|y|; parameters listed in `linear` scale with the signal
/// and are mapped back afterwards, so results do not depend on the signal units.
inline FitResult run(const ModelFunction& f, const Series& s, std::vector<ParamSpec> params,
                     const FitOptions& opts, std::initializer_list<std::size_t> linear)
{
    double scale = 0.0;
    for (double v : s.y) {
        scale = std::max(scale, std::abs(v));
    }
    if (!(scale > 0.0) || !std::isfinite(scale)) {
        scale = 1.0;
    }
    std::vector<double> y(s.y.size());
    std::vector<double> sigma(s.sigma.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
        y[i] = s.y[i] / scale;
    }
    for (std::size_t i = 0; i < sigma.size(); ++i) {
        sigma[i] = s.sigma[i] / scale;
    }
    for (std::size_t i : linear) {
        params[i].init /= scale;
    }
    FitResult r = lm_fit(f, s.x, y, sigma, params, opts);
    Eigen::VectorXd factor = Eigen::VectorXd::Ones(r.estimates.size());
    for (std::size_t i : linear) {
        factor(static_cast<Eigen::Index>(i)) = scale;
    }
    r.estimates = r.estimates.cwiseProduct(factor);
    r.errors = r.errors.cwiseProduct(factor);
    r.covariance = factor.asDiagonal() * r.covariance * factor.asDiagonal();
    if (sigma.empty()) {
        r.residualNorm *= scale;
        for (double& c : r.costHistory) {
            c *= scale * scale;
        }
    }
    return r;
}

/// Decay rate from a log-linear regression over the leading points above 20 % of the first value.
inline double initial_decay_rate(const Series& s)
{
    const double y0 = s.y.front();
    std::vector<double> xs;
    std::vector<double> ls;
    if (y0 > 0.0) {
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (s.y[i] <= 0.2 * y0) {
                break;
            }
            xs.push_back(s.x[i]);
            ls.push_back(std::log(s.y[i] / y0));
        }
    }
    const double span = s.x.back() - s.x.front();
    if (xs.size() < 2) {
        // decays below 20 % within one step: the rate is at least ~ -ln(0.2) / dt
        const double dt = s.x.size() > 1 ? s.x[1] - s.x[0] : span;
        return dt > 0.0 ? 1.6 / dt : 1.0;
    }
    const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
    const double ml = std::accumulate(ls.begin(), ls.end(), 0.0) / static_cast<double>(ls.size());
    double sxx = 0.0;
    double sxl = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxl += (xs[i] - mx) * (ls[i] - ml);
    }
    const double rate = sxx > 0.0 ? -sxl / sxx : 0.0;
    return rate > 0.0 ? rate : 0.1 / std::max(span, 1e-300);
}

inline double hahn_unchecked(double tau, double t2, double p, double tr, double tw, int count)
{
    const auto comb = [&](double t) {
        double sum = 0.0;
        for (int i = 0; i <= count; ++i) {
            const double d = t - i * tr;
            if (std::abs(d) > 8.0 * tw) {
                continue;
            }
            sum += std::exp(-(d * d) / (tw * tw));
        }
        return sum;
    };
    return std::exp(-std::pow(tau / t2, p)) * comb(tau) / comb(0.0);
}

inline double median_spacing(const std::vector<double>& x)
{
    std::vector<double> d;
    for (std::size_t i = 1; i < x.size(); ++i) {
        d.push_back(x[i] - x[i - 1]);
    }
    std::nth_element(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(d.size() / 2), d.end());
    return d[d.size() / 2];
}

}  // namespace detail

/// Peak of the periodogram of the mean-subtracted data (non-uniform sampling allowed),
/// refined by parabolic interpolation.  Frequencies from fMin up to the Nyquist limit
/// of the median spacing are scanned at 1/8 of the natural resolution.
inline PeriodogramPeak periodogram_peak(std::span<const double> x, std::span<const double> y, double fMin = 0.0)
{
    if (x.size() < 4) {
        throw FitError("periodogram: need at least 4 samples");
    }
    const double mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
    const double span = x.back() - x.front();
    const double dt = detail::median_spacing(std::vector<double>(x.begin(), x.end()));
    const double fNyq = 0.5 / dt;
    const double df = 1.0 / (8.0 * span);
    const auto nf = static_cast<std::size_t>(std::floor(fNyq / df));
    const auto k0 = static_cast<std::size_t>(std::ceil(std::max(fMin, 0.0) / df));
    if (k0 + 2 > nf) {
        throw FitError("periodogram: search band below the Nyquist limit is empty");
    }
    std::vector<double> power(nf + 1, 0.0);
    for (std::size_t k = k0; k <= nf; ++k) {
        const double w = 2.0 * constants::pi * df * static_cast<double>(k);
        std::complex<double> acc = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            acc += (y[i] - mean) * std::polar(1.0, -w * x[i]);
        }
        power[k] = std::norm(acc);
    }
    // strongest interior local maximum; a low-frequency hump running into the band edge is not a peak
    const auto first = power.begin() + static_cast<std::ptrdiff_t>(k0);
    const double bandMax = *std::max_element(first, power.end());
    std::size_t best = k0;
    bool found = false;
    for (std::size_t k = k0 + 1; k < nf; ++k) {
        if (power[k] >= power[k - 1] && power[k] >= power[k + 1] && (!found || power[k] > power[best])) {
            best = k;
            found = true;
        }
    }
    double f = df * static_cast<double>(best);
    if (found) {
        const double a = power[best - 1];
        const double b = power[best];
        const double c = power[best + 1];
        const double denom = a - 2.0 * b + c;
        if (denom < 0.0) {
            f += df * 0.5 * (a - c) / denom;
        }
    }
    std::vector<double> sorted(first, power.end());
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(sorted.size() / 2), sorted.end());
    return {f, power[best], sorted[sorted.size() / 2], bandMax, !found};
}

// ---------------------------------------------------------------------------
// Relaxation
// ---------------------------------------------------------------------------

inline FitResult fit_exponential(const CurveData& data, double rateScale, const std::string& rateName,
                                 const FitOptions& opts = {})
{
    const auto s = detail::series(data);
    const ModelFunction f = [rateScale](double t, std::span<const double> p) {
        return p[0] * std::exp(-rateScale * p[1] * t) + p[2];
    };
    std::vector<ParamSpec> params{
        {"amplitude", s.y.front() != 0.0 ? s.y.front() : 1.0},
        {rateName, detail::initial_decay_rate(s) / rateScale},
        {"offset", 0.0, ParamKind::free, -INFINITY, INFINITY, true},
    };
    return detail::run(f, s, params, opts, {0, 2});
}

/// Omega from the SQ relaxation curve, model A exp(-3 Omega tau).
inline FitResult fit_sq_relaxation(const CurveData& data, const FitOptions& opts = {})
{
    return fit_exponential(data, 3.0, "omega", opts);
}

struct DqEstimate {
    Estimate gamma;
    Estimate rate;     // Omega + 2 gamma
    bool clamped = false;
    FitResult fit;
};

/// gamma from the DQ relaxation curve given Omega: the curve decays at r = Omega + 2 gamma.
inline DqEstimate fit_dq_relaxation(const CurveData& data, Estimate omega, const FitOptions& opts = {})
{
    DqEstimate out;
    out.fit = fit_exponential(data, 1.0, "rate", opts);
    out.rate = {out.fit.value("rate"), out.fit.error("rate")};
    out.gamma.value = 0.5 * (out.rate.value - omega.value);
    out.gamma.error = 0.5 * std::hypot(out.rate.error, omega.error);
    if (out.gamma.value < 0.0) {
        out.gamma.value = 0.0;
        out.clamped = true;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Hahn echo
// ---------------------------------------------------------------------------

struct HahnFit {
    FitResult fit;
    bool revivalPeriodFixed = false;
};

inline HahnFit fit_hahn_echo(const CurveData& data, const FitContext& ctx = {})
{
    const auto s = detail::series(data);
    const double tr0 = revival_period(ctx.bFieldGauss);
    const double tauMax = s.x.back();
    const int count = static_cast<int>(std::ceil(tauMax / tr0)) + 2;

    // amplitude and width from the zero-delay peak
    double a0 = 0.0;
    for (std::size_t i = 0; i < s.x.size() && s.x[i] < 0.5 * tr0; ++i) {
        a0 = std::max(a0, s.y[i]);
    }
    if (!(a0 > 0.0)) {
        throw FitError("hahnEcho: no positive signal near zero delay");
    }
    double tw0 = tr0 / 8.0;
    for (std::size_t i = 1; i < s.x.size() && s.x[i] < 0.5 * tr0; ++i) {
        if (s.y[i] < a0 / std::exp(1.0) && s.y[i - 1] >= a0 / std::exp(1.0)) {
            const double frac = (s.y[i - 1] - a0 / std::exp(1.0)) / (s.y[i - 1] - s.y[i]);
            tw0 = s.x[i - 1] + frac * (s.x[i] - s.x[i - 1]);
            break;
        }
    }
    tw0 = std::clamp(tw0, tr0 / 50.0, tr0 / 3.0);

    // envelope through the revival maxima: ln(-ln(y/A)) = p ln tau - p ln T2
    std::vector<double> lx;
    std::vector<double> ly;
    for (int i = 1; i <= count; ++i) {
        double best = -INFINITY;
        double at = 0.0;
        for (std::size_t j = 0; j < s.x.size(); ++j) {
            if (std::abs(s.x[j] - i * tr0) < 0.25 * tr0 && s.y[j] > best) {
                best = s.y[j];
                at = s.x[j];
            }
        }
        if (best > 0.02 * a0 && best < a0) {
            lx.push_back(std::log(at));
            ly.push_back(std::log(-std::log(best / a0)));
        }
    }
    double p0 = 1.5;
    double t20 = tauMax;
    if (lx.size() >= 2) {
        const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / static_cast<double>(lx.size());
        const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / static_cast<double>(ly.size());
        double sxx = 0.0;
        double sxy = 0.0;
        for (std::size_t i = 0; i < lx.size(); ++i) {
            sxx += (lx[i] - mx) * (lx[i] - mx);
            sxy += (lx[i] - mx) * (ly[i] - my);
        }
        p0 = std::clamp(sxy / sxx, 0.6, 3.8);
        t20 = std::exp(mx - my / p0);
    } else if (lx.size() == 1) {
        t20 = std::exp(lx[0] - ly[0] / p0);
    }

    HahnFit out;
    const int revivalsInData = static_cast<int>(std::floor(tauMax / tr0));
    out.revivalPeriodFixed = revivalsInData < 2;

    const ModelFunction f = [count](double t, std::span<const double> p) {
        return p[0] * detail::hahn_unchecked(t, p[1], p[2], p[3], p[4], count);
    };
    const std::vector<ParamSpec> params{
        {"amplitude", a0},
        {"t2", t20, ParamKind::positive},
        {"p", p0, ParamKind::bounded, 0.5, 4.0},
        {"revivalPeriod", tr0, ParamKind::positive, 0.0, INFINITY, out.revivalPeriodFixed},
        {"revivalWidth", tw0, ParamKind::positive},
    };
    out.fit = detail::run(f, s, params, ctx.options, {0});
    return out;
}

// ---------------------------------------------------------------------------
// Oscillating signals
// ---------------------------------------------------------------------------

namespace detail {

/// Time at which the running envelope max(|y|) first drops below A/e.
inline double envelope_time(const Series& s, double amplitude)
{
    std::vector<double> suffix(s.y.size());
    double m = 0.0;
    for (std::size_t i = s.y.size(); i-- > 0;) {
        m = std::max(m, std::abs(s.y[i]));
        suffix[i] = m;
    }
    for (std::size_t i = 0; i < s.x.size(); ++i) {
        if (suffix[i] < amplitude / std::exp(1.0)) {
            return std::max(s.x[i], s.x.back() / 50.0);
        }
    }
    return s.x.back();
}

inline PeriodogramPeak checked_peak(const Series& s)
{
    const double span = s.x.back() - s.x.front();
    const auto peak = periodogram_peak(s.x, s.y, 1.0 / span);
    if (peak.atBandEdge || peak.power < 5.0 * peak.medianPower || peak.power < 0.05 * peak.bandMaxPower) {
        throw FitError("no oscillation peak above the noise floor");
    }
    if (peak.frequency * median_spacing(s.x) > 0.25) {
        throw FitError("oscillation undersampled: fewer than 4 samples per period");
    }
    return peak;
}

}  // namespace detail

/// A exp(-(t/T)^m) cos(2 pi f t), m fixed by the context.  Parameters: amplitude, frequency, tcoh.
inline FitResult fit_decaying_cosine(const CurveData& data, const FitContext& ctx = {})
{
    const auto s = detail::series(data);
    const auto peak = detail::checked_peak(s);
    double a0 = 0.0;
    for (double v : s.y) {
        a0 = std::max(a0, std::abs(v));
    }
    const double m = ctx.cosineExponent;
    const ModelFunction f = [m](double t, std::span<const double> p) {
        return p[0] * std::exp(-std::pow(t / p[2], m)) * std::cos(2.0 * constants::pi * p[1] * t);
    };
    const std::vector<ParamSpec> params{
        {"amplitude", a0},
        {"frequency", peak.frequency, ParamKind::positive},
        {"tcoh", detail::envelope_time(s, a0), ParamKind::positive},
    };
    auto r = detail::run(f, s, params, ctx.options, {0});
    if (r.value("frequency") < 1.0 / (s.x.back() - s.x.front())) {
        throw FitError("decayingCosine: fitted frequency below the resolution of the record (no oscillation)");
    }
    return r;
}

/// A exp(-(t/T2*)^n) (1/3) sum_k cos(2 pi (d + k a) t) with the 14N splitting a and n fixed.
/// The periodogram peak may sit on any of the three lines, so each image is tried.
inline FitResult fit_ramsey(const CurveData& data, const FitContext& ctx = {})
{
    const auto s = detail::series(data);
    const auto peak = detail::checked_peak(s);
    double a0 = 0.0;
    for (double v : s.y) {
        a0 = std::max(a0, std::abs(v));
    }
    const double hf = ctx.hyperfineSplitting;
    const double n = ctx.ramseyExponent;
    const ModelFunction f = [hf, n](double t, std::span<const double> p) {
        double comb = 0.0;
        for (int k = -1; k <= 1; ++k) {
            comb += std::cos(2.0 * constants::pi * (p[1] + k * hf) * t);
        }
        return p[0] * std::exp(-std::pow(t / p[2], n)) * comb / 3.0;
    };
    const double tcoh = detail::envelope_time(s, a0);
    std::vector<double> candidates{peak.frequency, peak.frequency + hf, std::abs(peak.frequency - hf)};
    std::optional<FitResult> best;
    for (double d : candidates) {
        const std::vector<ParamSpec> params{{"amplitude", a0}, {"detuning", d}, {"t2star", tcoh, ParamKind::positive}};
        try {
            auto r = detail::run(f, s, params, ctx.options, {0});
            if (!best || r.residualNorm < best->residualNorm) {
                best = std::move(r);
            }
        } catch (const FitError&) {
        }
    }
    if (!best) {
        throw FitError("ramsey: no candidate detuning could be fitted");
    }
    best->estimates(1) = std::abs(best->estimates(1));
    const double nyquist = 0.5 / detail::median_spacing(s.x);
    if (best->estimates(1) + hf > nyquist) {
        throw FitError("ramsey: fitted lines above the Nyquist frequency of the sampling");
    }
    return *best;
}

/// Fit by registered model name.
inline FitResult fit_by_name(std::string_view model, const CurveData& data, const FitContext& ctx = {})
{
    if (model == "sqRelax") {
        return fit_sq_relaxation(data, ctx.options);
    }
    if (model == "dqRelax") {
        return fit_exponential(data, 1.0, "rate", ctx.options);
    }
    if (model == "hahnEcho") {
        return fit_hahn_echo(data, ctx).fit;
    }
    if (model == "decayingCosine" || model == "thermalEcho") {
        return fit_decaying_cosine(data, ctx);
    }
    if (model == "ramsey") {
        return fit_ramsey(data, ctx);
    }
    throw ValidationError("unknown fit model '" + std::string(model) + "'");
}

}  // namespace nvcoh
