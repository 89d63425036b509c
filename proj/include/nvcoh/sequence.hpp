#pragma once

// Declarative pulse sequences and their interpreter.
//
// The ensemble state is a 3x3 density matrix in the (|0>, |-1>, |+1>) basis,
// written in the frame rotating with each microwave tone.  Pulses are ideal
// instantaneous rotations on one two-level subspace.  Free evolution applies the
// population rate equations, the deterministic frame detunings, lifetime
// broadening of the coherences and, on the wait that closes a coherence
// window, the protocol's dephasing envelope evaluated at the full window length.

#include "nvcoh/constants.hpp"
#include "nvcoh/curve_data.hpp"
#include "nvcoh/error.hpp"
#include "nvcoh/relaxation.hpp"
#include "nvcoh/sample.hpp"
#include "nvcoh/signals.hpp"
#include "nvcoh/thermal_rates.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <complex>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace nvcoh {

enum class Transition { minus, plus };

enum class Envelope { none, ramsey, hahnEcho, thermalEcho };

struct PulseElement {
    enum class Kind { laserInit, mwPulse, wait, readout };

    Kind kind = Kind::wait;
    Transition transition = Transition::minus;
    double rotationAngle = 0.0;  // rad
    double phase = 0.0;          // rad
    double duration = 0.0;       // s
    Envelope envelope = Envelope::none;
    double envelopeTime = 0.0;   // s, full coherence window the envelope is evaluated at

    static PulseElement init() { return {Kind::laserInit}; }
    static PulseElement readout() { return {Kind::readout}; }
    static PulseElement pulse(Transition t, double angle, double phase = 0.0)
    {
        detail::require_domain(angle > 0.0 && angle <= 2.0 * constants::pi, "mwPulse: angle must be in (0, 2 pi]");
        return {Kind::mwPulse, t, angle, phase};
    }
    static PulseElement wait(double duration, Envelope env = Envelope::none, double window = 0.0)
    {
        detail::require_domain(duration >= 0.0, "wait: duration must be >= 0");
        return {Kind::wait, Transition::minus, 0.0, 0.0, duration, env, window};
    }
};

using Timeline = std::vector<PulseElement>;

struct BranchPair {
    Timeline signal;
    Timeline reference;
};

enum class ProtocolKind { ramsey, thermalEcho, hahnEcho, sqRelax, dqRelax };

inline constexpr std::array<std::string_view, 5> protocol_names{"ramsey", "thermalEcho", "hahnEcho", "sqRelax",
                                                                "dqRelax"};

inline std::string_view to_string(ProtocolKind k) { return protocol_names[static_cast<std::size_t>(k)]; }

inline ProtocolKind protocol_from_string(std::string_view name)
{
    for (std::size_t i = 0; i < protocol_names.size(); ++i) {
        if (protocol_names[i] == name) {
            return static_cast<ProtocolKind>(i);
        }
    }
    throw ValidationError("unknown protocol '" + std::string(name) + "'");
}

struct ProtocolSpec {
    ProtocolKind name = ProtocolKind::sqRelax;
    std::vector<double> tauGrid;           // s
    double temperature = 300.0;            // K
    std::optional<std::int64_t> shots;     // nullopt: noiseless
    std::uint64_t seed = 0;

    void validate() const
    {
        if (tauGrid.empty()) {
            throw ValidationError("ProtocolSpec: empty tau grid");
        }
        for (std::size_t i = 0; i < tauGrid.size(); ++i) {
            if (!(tauGrid[i] >= 0.0) || (i > 0 && !(tauGrid[i] > tauGrid[i - 1]))) {
                throw ValidationError("ProtocolSpec: tau grid must be non-negative and strictly increasing");
            }
        }
        if (shots && *shots < 1) {
            throw ValidationError("ProtocolSpec: shots must be >= 1");
        }
        detail::require_domain(temperature > 0.0, "ProtocolSpec: temperature must be > 0");
    }
};

/// Signal and reference timelines of one protocol at one delay.
///
/// The reference branch differs only in the final projection, so population
/// terms common to both cancel in the difference signal.
inline BranchPair build_branches(ProtocolKind kind, double tau)
{
    using P = PulseElement;
    constexpr double pi = constants::pi;
    const auto m = Transition::minus;
    const auto p = Transition::plus;
    BranchPair out;
    switch (kind) {
    case ProtocolKind::ramsey:
        out.signal = {P::init(), P::pulse(m, pi / 2), P::wait(tau, Envelope::ramsey, tau), P::pulse(m, pi / 2),
                      P::readout()};
        out.reference = out.signal;
        out.reference[3].phase = pi;
        break;
    case ProtocolKind::thermalEcho:
        // pi(-) pi(+) pi(-) exchanges |-1> and |+1>: the 0/-1 coherence of the first
        // half continues as the 0/+1 coherence of the second half.
        out.signal = {P::init(),          P::pulse(m, pi / 2),
                      P::wait(tau / 2),   P::pulse(m, pi),
                      P::pulse(p, pi),    P::pulse(m, pi),
                      P::wait(tau / 2, Envelope::thermalEcho, tau),
                      P::pulse(p, pi / 2), P::readout()};
        out.reference = out.signal;
        out.reference[7].phase = pi;
        break;
    case ProtocolKind::hahnEcho:
        out.signal = {P::init(),        P::pulse(m, pi / 2), P::wait(tau / 2), P::pulse(m, pi),
                      P::wait(tau / 2, Envelope::hahnEcho, tau), P::pulse(m, pi / 2), P::readout()};
        out.reference = out.signal;
        out.reference[5].phase = pi;
        break;
    case ProtocolKind::sqRelax:
        // reads p0 vs p-1; their difference isolates the 3 Omega mode
        out.signal = {P::init(), P::wait(tau), P::readout()};
        out.reference = {P::init(), P::wait(tau), P::pulse(m, pi), P::readout()};
        break;
    case ProtocolKind::dqRelax:
        // reads p-1 vs p+1 after preparing |-1>
        out.signal = {P::init(), P::pulse(m, pi), P::wait(tau), P::pulse(m, pi), P::readout()};
        out.reference = {P::init(), P::pulse(m, pi), P::wait(tau), P::pulse(p, pi), P::readout()};
        break;
    }
    return out;
}

inline std::vector<BranchPair> build_protocol(const ProtocolSpec& spec)
{
    spec.validate();
    std::vector<BranchPair> out;
    out.reserve(spec.tauGrid.size());
    for (double tau : spec.tauGrid) {
        out.push_back(build_branches(spec.name, tau));
    }
    return out;
}

struct SpinEnsembleState {
    Eigen::Matrix3cd rho = Eigen::Matrix3cd::Zero();

    static SpinEnsembleState polarized(double fidelity = 1.0)
    {
        SpinEnsembleState s;
        const double rest = 0.5 * (1.0 - fidelity);
        s.rho.diagonal() << fidelity, rest, rest;
        return s;
    }

    [[nodiscard]] PopulationVector populations() const
    {
        return {rho(0, 0).real(), rho(1, 1).real(), rho(2, 2).real()};
    }
    [[nodiscard]] std::complex<double> c0m() const { return rho(0, 1); }
    [[nodiscard]] std::complex<double> c0p() const { return rho(0, 2); }
    [[nodiscard]] std::complex<double> cmp() const { return rho(1, 2); }

    /// Throws std::logic_error when a coherence exceeds the bound set by its populations.
    void check_invariants() const
    {
        const auto p = populations();
        const std::array<double, 3> pv{p.p0, p.pMinus, p.pPlus};
        for (int i = 0; i < 3; ++i) {
            for (int j = i + 1; j < 3; ++j) {
                if (std::norm(rho(i, j)) > pv[i] * pv[j] + 1e-9) {
                    throw std::logic_error("SpinEnsembleState: coherence exceeds population bound");
                }
            }
        }
        if (std::abs(p.total() - 1.0) > 1e-9) {
            throw std::logic_error("SpinEnsembleState: populations do not sum to one");
        }
    }
};

/// Envelope models that multiply coherences at the end of a coherence window.
struct BathModels {
    RamseyModel ramsey;
    ThermalEchoModel thermalEcho;
    HahnEchoModel hahnEcho;
};

/// Everything free evolution needs besides the state.
struct Environment {
    RateParams rates;
    double shiftMinus = 0.0;  // Hz, rotating-frame energy of |-1>
    double shiftPlus = 0.0;   // Hz, rotating-frame energy of |+1>
    BathModels bath;
    double polarization = 1.0;
};

namespace detail {

inline Eigen::Matrix3cd rotation(Transition t, double angle, double phase)
{
    const int j = t == Transition::minus ? 1 : 2;
    const std::complex<double> i1(0.0, 1.0);
    const double c = std::cos(angle / 2);
    const double s = std::sin(angle / 2);
    Eigen::Matrix3cd u = Eigen::Matrix3cd::Identity();
    u(0, 0) = c;
    u(j, j) = c;
    u(0, j) = -i1 * std::exp(-i1 * phase) * s;
    u(j, 0) = -i1 * std::exp(i1 * phase) * s;
    return u;
}

inline double envelope_factor(Envelope env, double window, const BathModels& bath)
{
    switch (env) {
    case Envelope::none:
        return 1.0;
    case Envelope::ramsey:
        return stretched_exp(window, bath.ramsey.t2star, bath.ramsey.envelopeExponent);
    case Envelope::thermalEcho:
        return stretched_exp(window, bath.thermalEcho.tte, bath.thermalEcho.envelopeExponent);
    case Envelope::hahnEcho:
        return hahn_echo_signal(window, bath.hahnEcho);
    }
    return 1.0;
}

}  // namespace detail

inline SpinEnsembleState step(const SpinEnsembleState& state, const PulseElement& element, const Environment& env)
{
    using Kind = PulseElement::Kind;
    SpinEnsembleState out = state;
    switch (element.kind) {
    case Kind::laserInit:
        out = SpinEnsembleState::polarized(env.polarization);
        break;
    case Kind::readout:
        break;
    case Kind::mwPulse: {
        const Eigen::Matrix3cd u = detail::rotation(element.transition, element.rotationAngle, element.phase);
        out.rho = u * state.rho * u.adjoint();
        break;
    }
    case Kind::wait: {
        const double t = element.duration;
        const Eigen::Vector3d pops = propagator(env.rates, t) * state.populations().vec();
        const std::complex<double> i1(0.0, 1.0);
        const double twoPi = 2.0 * constants::pi;
        const double life = std::exp(-env.rates.lifetime_rate() * t);
        const double lifeDq = std::exp(-(env.rates.omega + env.rates.gammaDQ) * t);
        const double envf = detail::envelope_factor(element.envelope, element.envelopeTime, env.bath);
        // rho_ab -> rho_ab exp(-i 2 pi (E_a - E_b) t), with E_0 = 0
        const std::complex<double> c0m = state.rho(0, 1) * std::exp(i1 * twoPi * env.shiftMinus * t) * life * envf;
        const std::complex<double> c0p = state.rho(0, 2) * std::exp(i1 * twoPi * env.shiftPlus * t) * life * envf;
        const std::complex<double> cmp =
            state.rho(1, 2) * std::exp(-i1 * twoPi * (env.shiftMinus - env.shiftPlus) * t) * lifeDq * envf;
        out.rho.setZero();
        out.rho.diagonal() << pops(0), pops(1), pops(2);
        out.rho(0, 1) = c0m;
        out.rho(1, 0) = std::conj(c0m);
        out.rho(0, 2) = c0p;
        out.rho(2, 0) = std::conj(c0p);
        out.rho(1, 2) = cmp;
        out.rho(2, 1) = std::conj(cmp);
        break;
    }
    }
    return out;
}

/// Runs a timeline from an empty state and returns the |0> population at readout.
inline double run_timeline(const Timeline& timeline, const Environment& env)
{
    SpinEnsembleState s = SpinEnsembleState::polarized(env.polarization);
    for (const auto& e : timeline) {
        s = step(s, e, env);
        if (e.kind == PulseElement::Kind::readout) {
            return s.populations().p0;
        }
    }
    throw ValidationError("timeline has no readout element");
}

/// Model bundle for one simulated temperature.
struct SimulationModels {
    Environment env;       // shifts are overridden per protocol and hyperfine class
    double ramseyDetuning = 0.0;   // Hz, |-1> shift for Ramsey and Hahn echo
    double hyperfine = 0.0;        // Hz, 14N splitting
    double teShiftMinus = 0.0;     // Hz, |-1> shift under the thermal-echo tones
    double teShiftPlus = 0.0;      // Hz, |+1> shift under the thermal-echo tones
    double brightYield = 1.0;      // photons/shot from |0>
    double darkYield = 0.0;        // photons/shot from |+-1>

    /// |f| of the thermal-echo fringe, |(delta- + delta+) / 2|.
    [[nodiscard]] double thermal_echo_frequency() const { return std::abs(0.5 * (teShiftMinus + teShiftPlus)); }
};

/// Assembles the model bundle at a temperature from the sample description.
inline SimulationModels models_for(const SampleConfig& sample, double temperature, double tauMax)
{
    const auto& c = sample.coherence;
    SimulationModels m;
    m.env.rates = rates_at(temperature, sample);
    m.env.polarization = c.polarization;
    m.env.bath.ramsey = RamseyModel{c.t2star, c.ramseyDetuning, c.hyperfineSplitting,
                                    sample.readout.contrast_at(temperature), c.ramseyExponent};
    m.ramseyDetuning = c.ramseyDetuning;
    m.hyperfine = c.hyperfineSplitting;

    const double d = sample.calibration.d_of_t(temperature, true);
    const double zeeman = constants::nv_gyromagnetic_hz_per_gauss * sample.bFieldGauss;
    m.teShiftMinus = (d - zeeman) - c.mwMinus;
    m.teShiftPlus = (d + zeeman) - c.mwPlus;
    m.env.bath.thermalEcho = ThermalEchoModel{c.tte, m.thermal_echo_frequency(), c.teExponent,
                                              sample.readout.contrast_at(temperature)};

    HahnEchoModel h;
    h.t2 = c.hahnT2;
    h.stretchP = c.hahnStretch;
    h.revivalPeriod = revival_period(sample.bFieldGauss);
    h.revivalWidth = c.revivalWidth;
    m.env.bath.hahnEcho = h.covering(tauMax);

    m.brightYield = sample.readout.p0;
    m.darkYield = sample.readout.p1_at(temperature);
    return m;
}

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Counter-based stream key: depends only on (seed, protocol, tau index, branch).
inline std::uint64_t stream_key(std::uint64_t seed, ProtocolKind kind, std::size_t index, int branch)
{
    std::uint64_t k = splitmix64(seed);
    k = splitmix64(k ^ static_cast<std::uint64_t>(kind));
    k = splitmix64(k ^ static_cast<std::uint64_t>(index));
    return splitmix64(k ^ static_cast<std::uint64_t>(branch));
}

inline double draw_poisson(double mean, std::uint64_t key)
{
    std::mt19937_64 gen(key);
    std::poisson_distribution<std::int64_t> dist(mean);
    return static_cast<double>(dist(gen));
}

struct BranchRates {
    double signal;
    double reference;
};

/// Ensemble-averaged photon rates per shot for both branches.
inline BranchRates branch_rates(ProtocolKind kind, double tau, const SimulationModels& m)
{
    const BranchPair pair = build_branches(kind, tau);
    Environment env = m.env;
    double p0Sig = 0.0;
    double p0Ref = 0.0;
    // 14N hyperfine classes mI = -1, 0, +1 shift |-1> and |+1> in opposite directions.
    for (int k = -1; k <= 1; ++k) {
        if (kind == ProtocolKind::thermalEcho) {
            env.shiftMinus = m.teShiftMinus + k * m.hyperfine;
            env.shiftPlus = m.teShiftPlus - k * m.hyperfine;
        } else {
            env.shiftMinus = m.ramseyDetuning + k * m.hyperfine;
            env.shiftPlus = -k * m.hyperfine;
        }
        p0Sig += run_timeline(pair.signal, env);
        p0Ref += run_timeline(pair.reference, env);
    }
    p0Sig /= 3.0;
    p0Ref /= 3.0;
    const auto rate = [&](double p0) { return m.darkYield + (m.brightYield - m.darkYield) * p0; };
    return {rate(p0Sig), rate(p0Ref)};
}

}  // namespace detail

/// Simulates a protocol over its delay grid.
///
/// The signal is the reference-minus-signal photon difference divided by its
/// noiseless value at zero delay, so S(0) = 1 without noise.  With finite shots
/// both branches are Poisson-sampled from per-point seeded streams.
inline CurveData simulate(const ProtocolSpec& spec, const SimulationModels& models)
{
    spec.validate();
    const auto zero = detail::branch_rates(spec.name, 0.0, models);
    const double diff0 = zero.reference - zero.signal;
    if (std::abs(diff0) < 1e-15) {
        throw ValidationError("simulate: protocol has no contrast at zero delay");
    }

    CurveData out;
    out.protocol = std::string(to_string(spec.name));
    out.temperature = spec.temperature;
    out.seed = spec.seed;
    out.shots = spec.shots;
    const std::size_t n = spec.tauGrid.size();
    out.tauUs.resize(n);
    out.signal.resize(n);
    out.countsSignal.resize(n);
    out.countsReference.resize(n);
    if (spec.shots) {
        out.sigma.resize(n);
    }

    for (std::size_t i = 0; i < n; ++i) {
        const double tau = spec.tauGrid[i];
        out.tauUs[i] = tau * 1e6;
        const auto r = detail::branch_rates(spec.name, tau, models);
        if (!spec.shots) {
            out.countsSignal[i] = r.signal;
            out.countsReference[i] = r.reference;
            out.signal[i] = (r.reference - r.signal) / diff0;
            continue;
        }
        const double shots = static_cast<double>(*spec.shots);
        const double nSig = detail::draw_poisson(shots * r.signal, detail::stream_key(spec.seed, spec.name, i, 0));
        const double nRef = detail::draw_poisson(shots * r.reference, detail::stream_key(spec.seed, spec.name, i, 1));
        out.countsSignal[i] = nSig;
        out.countsReference[i] = nRef;
        out.signal[i] = (nRef - nSig) / (shots * diff0);
        out.sigma[i] = std::sqrt(std::max(nRef + nSig, 1.0)) / (shots * std::abs(diff0));
    }
    return out;
}

/// Convenience overload: models from the sample description at the spec's temperature.
inline CurveData simulate(const ProtocolSpec& spec, const SampleConfig& sample)
{
    spec.validate();
    return simulate(spec, models_for(sample, spec.temperature, spec.tauGrid.back()));
}

}  // namespace nvcoh
