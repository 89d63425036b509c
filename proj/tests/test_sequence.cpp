#include "catch_amalgamated.hpp"

#include "nvcoh/sequence.hpp"

#include <cmath>
#include <complex>
#include <functional>
#include <numeric>
#include <random>
#include <vector>

using namespace nvcoh;
using Catch::Approx;

namespace {

constexpr double kPi = 3.14159265358979323846;

std::vector<double> grid(double stop, int points)
{
    std::vector<double> g(static_cast<std::size_t>(points));
    for (int i = 0; i < points; ++i) {
        g[static_cast<std::size_t>(i)] = stop * i / (points - 1);
    }
    return g;
}

double closed_form(ProtocolKind kind, double tau, const SimulationModels& m)
{
    const double life = std::exp(-m.env.rates.lifetime_rate() * tau);
    switch (kind) {
    case ProtocolKind::ramsey: {
        RamseyModel r = m.env.bath.ramsey;
        r.detuning = m.ramseyDetuning;
        r.hyperfineSplitting = m.hyperfine;
        return ramsey_signal(tau, r) * life;
    }
    case ProtocolKind::thermalEcho: {
        ThermalEchoModel te = m.env.bath.thermalEcho;
        te.oscillationFreq = m.thermal_echo_frequency();
        return thermal_echo_signal(tau, te) * life;
    }
    case ProtocolKind::hahnEcho:
        return hahn_echo_signal(tau, m.env.bath.hahnEcho) * life;
    case ProtocolKind::sqRelax:
        return sq_relax_signal(m.env.rates.omega, tau);
    case ProtocolKind::dqRelax:
        return dq_relax_signal(m.env.rates.omega, m.env.rates.gammaDQ, tau);
    }
    return 0.0;
}

double tau_max(ProtocolKind kind)
{
    switch (kind) {
    case ProtocolKind::ramsey:
        return 3e-6;
    case ProtocolKind::thermalEcho:
        return 10e-6;
    case ProtocolKind::hahnEcho:
        return 400e-6;
    case ProtocolKind::sqRelax:
    case ProtocolKind::dqRelax:
        return 5e-3;
    }
    return 0.0;
}

Environment quiet()
{
    Environment env;
    env.rates = {0.0, 0.0, 0.0};
    env.bath.ramsey.t2star = 1e9;
    env.bath.thermalEcho.tte = 1e9;
    return env;
}

}  // namespace

TEST_CASE("protocol timelines", "[sequence]")
{
    SECTION("Ramsey at zero delay composes to a pi pulse")
    {
        const auto b = build_branches(ProtocolKind::ramsey, 0.0);
        const Environment env = quiet();
        REQUIRE(run_timeline(b.signal, env) == Approx(0.0).margin(1e-15));
        REQUIRE(run_timeline(b.reference, env) == Approx(1.0).epsilon(1e-15));
    }
    SECTION("sqRelax has exactly one wait per delay")
    {
        ProtocolSpec spec;
        spec.name = ProtocolKind::sqRelax;
        spec.tauGrid = grid(1e-3, 11);
        for (const auto& pair : build_protocol(spec)) {
            for (const auto* tl : {&pair.signal, &pair.reference}) {
                const auto waits = std::count_if(tl->begin(), tl->end(), [](const PulseElement& e) {
                    return e.kind == PulseElement::Kind::wait;
                });
                REQUIRE(waits == 1);
            }
        }
    }
    SECTION("dqRelax at zero delay has full contrast")
    {
        ProtocolSpec spec;
        spec.name = ProtocolKind::dqRelax;
        spec.tauGrid = {0.0};
        SimulationModels m;
        m.env = quiet();
        m.brightYield = 1.0;
        m.darkYield = 0.0;
        const auto b = build_branches(ProtocolKind::dqRelax, 0.0);
        REQUIRE(run_timeline(b.signal, m.env) == Approx(1.0));
        REQUIRE(run_timeline(b.reference, m.env) == Approx(0.0).margin(1e-15));
        REQUIRE(simulate(spec, m).signal[0] == Approx(1.0));
    }
    SECTION("unknown names and bad specs")
    {
        REQUIRE_THROWS_AS(protocol_from_string("rabi"), ValidationError);
        REQUIRE(protocol_from_string("hahnEcho") == ProtocolKind::hahnEcho);
        ProtocolSpec spec;
        spec.tauGrid = {1e-6, 0.5e-6};
        REQUIRE_THROWS_AS(spec.validate(), ValidationError);
        spec.tauGrid = {0.0, 1e-6};
        spec.shots = 0;
        REQUIRE_THROWS_AS(spec.validate(), ValidationError);
        REQUIRE_THROWS_AS(PulseElement::pulse(Transition::minus, 0.0), DomainError);
        REQUIRE_THROWS_AS(PulseElement::wait(-1.0), DomainError);
    }
}

TEST_CASE("single steps", "[sequence]")
{
    const Environment env = quiet();
    const auto s0 = SpinEnsembleState::polarized();

    SECTION("pi(-) takes |0> to |-1>")
    {
        const auto s = step(s0, PulseElement::pulse(Transition::minus, kPi), env);
        REQUIRE(s.populations().pMinus == Approx(1.0));
        REQUIRE(s.populations().p0 == Approx(0.0).margin(1e-15));
    }
    SECTION("pi/2(-) creates a half coherence")
    {
        const auto s = step(s0, PulseElement::pulse(Transition::minus, kPi / 2), env);
        REQUIRE(s.populations().p0 == Approx(0.5));
        REQUIRE(s.populations().pMinus == Approx(0.5));
        REQUIRE(std::abs(s.c0m()) == Approx(0.5));
        REQUIRE(s.populations().pPlus == 0.0);
    }
    SECTION("a quiet wait is the identity")
    {
        auto s = step(s0, PulseElement::pulse(Transition::minus, kPi / 2), env);
        s = step(s, PulseElement::pulse(Transition::plus, kPi / 3, 0.7), env);
        const auto w = step(s, PulseElement::wait(5e-6), env);
        REQUIRE((w.rho - s.rho).cwiseAbs().maxCoeff() < 1e-15);
    }
    SECTION("polarization fidelity")
    {
        const auto s = SpinEnsembleState::polarized(0.9);
        REQUIRE(s.populations().p0 == 0.9);
        REQUIRE(s.populations().pMinus == Approx(0.05));
    }
    SECTION("invariant hook fires on a corrupted state")
    {
        auto bad = s0;
        bad.rho(0, 1) = 0.8;
        REQUIRE_THROWS_AS(bad.check_invariants(), std::logic_error);
        REQUIRE_NOTHROW(s0.check_invariants());
    }
}

TEST_CASE("pulses conserve population and states stay physical", "[sequence][property]")
{
    std::mt19937_64 gen(17);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Environment env;
    env.rates = {500.0, 800.0, 5000.0};
    env.shiftMinus = 1.3e6;
    env.shiftPlus = -0.4e6;
    for (int trial = 0; trial < 300; ++trial) {
        SpinEnsembleState s = SpinEnsembleState::polarized(0.5 + 0.5 * u(gen));
        for (int k = 0; k < 12; ++k) {
            const double before = s.populations().total();
            if (u(gen) < 0.6) {
                const auto t = u(gen) < 0.5 ? Transition::minus : Transition::plus;
                s = step(s, PulseElement::pulse(t, 2.0 * kPi * (0.01 + 0.99 * u(gen)), 2.0 * kPi * u(gen)), env);
                REQUIRE(std::abs(s.populations().total() - before) <= 1e-12);
            } else {
                s = step(s, PulseElement::wait(1e-4 * u(gen)), env);
            }
            REQUIRE_NOTHROW(s.check_invariants());
        }
    }
}

TEST_CASE("noiseless protocols reduce to the closed forms", "[sequence]")
{
    const SampleConfig sample;
    for (double temperature : {300.0, 450.0, 600.0}) {
        for (const auto name : protocol_names) {
            const auto kind = protocol_from_string(name);
            ProtocolSpec spec;
            spec.name = kind;
            spec.temperature = temperature;
            spec.tauGrid = grid(tau_max(kind), 100);
            const auto m = models_for(sample, temperature, spec.tauGrid.back());
            const auto curve = simulate(spec, m);
            REQUIRE(curve.size() == 100);
            double worst = 0.0;
            for (std::size_t i = 0; i < curve.size(); ++i) {
                worst = std::max(worst, std::abs(curve.signal[i] - closed_form(kind, spec.tauGrid[i], m)));
            }
            INFO(name << " at " << temperature << " K");
            REQUIRE(worst <= 1e-9);
        }
    }
}

TEST_CASE("Hahn echo reduction names the lifetime factor", "[sequence]")
{
    const SampleConfig sample;
    ProtocolSpec spec;
    spec.name = ProtocolKind::hahnEcho;
    spec.temperature = 600.0;
    spec.tauGrid = grid(200e-6, 50);
    const auto m = models_for(sample, 600.0, spec.tauGrid.back());
    const auto curve = simulate(spec, m);
    const double lifeRate = (3.0 * m.env.rates.omega + m.env.rates.gammaDQ) / 2.0;
    for (std::size_t i = 0; i < curve.size(); ++i) {
        const double tau = spec.tauGrid[i];
        REQUIRE(std::abs(curve.signal[i] - hahn_echo_signal(tau, m.env.bath.hahnEcho) * std::exp(-lifeRate * tau)) <=
                1e-9);
    }
}

TEST_CASE("thermal echo cancels the magnetic and hyperfine shifts", "[sequence]")
{
    SimulationModels m;
    m.env = quiet();
    m.hyperfine = 2.16e6;
    m.teShiftMinus = -3.0e6 + 0.4e6;
    m.teShiftPlus = 3.0e6 + 0.4e6;
    ProtocolSpec spec;
    spec.name = ProtocolKind::thermalEcho;
    spec.tauGrid = grid(5e-6, 60);
    const auto curve = simulate(spec, m);
    for (std::size_t i = 0; i < curve.size(); ++i) {
        REQUIRE(curve.signal[i] == Approx(std::cos(2.0 * kPi * 0.4e6 * spec.tauGrid[i])).margin(1e-9));
    }
}

TEST_CASE("ensemble envelopes do not depend on temperature", "[sequence]")
{
    const SampleConfig sample;
    const auto cold = models_for(sample, 300.0, 10e-6);
    const auto hot = models_for(sample, 600.0, 10e-6);
    REQUIRE(cold.env.bath.ramsey.t2star == hot.env.bath.ramsey.t2star);
    REQUIRE(cold.env.bath.thermalEcho.tte == hot.env.bath.thermalEcho.tte);
    REQUIRE(hot.env.bath.ramsey.contrast == Approx(0.5 * cold.env.bath.ramsey.contrast));
}

TEST_CASE("simulation determinism", "[sequence]")
{
    const SampleConfig sample;
    ProtocolSpec spec;
    spec.name = ProtocolKind::hahnEcho;
    spec.tauGrid = grid(100e-6, 40);
    spec.shots = 10000;
    spec.seed = 1234;
    const auto a = simulate(spec, sample);
    const auto b = simulate(spec, sample);
    REQUIRE(a.signal == b.signal);
    REQUIRE(a.countsSignal == b.countsSignal);
    REQUIRE(a.countsReference == b.countsReference);
    REQUIRE(a.sigma == b.sigma);

    spec.seed = 1235;
    const auto c = simulate(spec, sample);
    REQUIRE(c.signal != a.signal);

    // a point's draw depends only on its own index
    auto sub = spec;
    sub.seed = 1234;
    sub.tauGrid.resize(10);
    const auto d = simulate(sub, models_for(sample, spec.temperature, spec.tauGrid.back()));
    for (std::size_t i = 0; i < d.size(); ++i) {
        REQUIRE(d.countsSignal[i] == a.countsSignal[i]);
    }
}

TEST_CASE("shot-noise scaling", "[sequence][property]")
{
    const SampleConfig sample;
    const auto m = models_for(sample, 300.0, 1e-3);
    std::vector<double> scaled;
    for (std::int64_t shots : {1000, 10000, 100000}) {
        constexpr int repeats = 2000;
        std::vector<double> values;
        for (int r = 0; r < repeats; ++r) {
            ProtocolSpec spec;
            spec.name = ProtocolKind::sqRelax;
            spec.tauGrid = {1e-3};
            spec.shots = shots;
            spec.seed = static_cast<std::uint64_t>(r) * 7919 + 13;
            values.push_back(simulate(spec, m).signal[0]);
        }
        const double mean = std::accumulate(values.begin(), values.end(), 0.0) / repeats;
        double var = 0.0;
        for (double v : values) {
            var += (v - mean) * (v - mean);
        }
        const double sd = std::sqrt(var / (repeats - 1));
        REQUIRE(mean == Approx(sq_relax_signal(m.env.rates.omega, 1e-3)).margin(5.0 * sd / std::sqrt(repeats)));
        scaled.push_back(sd * std::sqrt(static_cast<double>(shots)));
    }
    REQUIRE(scaled[1] == Approx(scaled[0]).epsilon(0.10));
    REQUIRE(scaled[2] == Approx(scaled[0]).epsilon(0.10));
}
