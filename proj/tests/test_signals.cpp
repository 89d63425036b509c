#include "catch_amalgamated.hpp"

#include "nvcoh/signals.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

using namespace nvcoh;
using Catch::Approx;

TEST_CASE("revival period", "[signals]")
{
    REQUIRE(revival_period_us(50.0) == Approx(37.35).margin(0.005));
    REQUIRE(revival_period_us(100.0) == Approx(18.67).margin(0.005));
    REQUIRE(revival_period_us(25.0) == Approx(2.0 * revival_period_us(50.0)).epsilon(1e-15));
    REQUIRE(revival_period(50.0) == Approx(37.35e-6).margin(5e-9));
    REQUIRE_THROWS_AS(revival_period_us(0.0), DomainError);
    REQUIRE_THROWS_AS(revival_period_us(-3.0), DomainError);

    std::mt19937_64 gen(5);
    std::uniform_real_distribution<double> field(0.1, 5000.0);
    for (int i = 0; i < 500; ++i) {
        const double b = field(gen);
        REQUIRE(revival_period_us(b) * 1.071 * b == Approx(2000.0).epsilon(1e-14));
    }
}

TEST_CASE("Hahn echo with revivals", "[signals]")
{
    HahnEchoModel m;
    m.revivalPeriod = 37.35e-6;
    m.revivalWidth = 3.735e-6;
    m.revivalCount = 8;

    SECTION("normalized at zero")
    {
        REQUIRE(hahn_echo_signal(0.0, m) == Approx(1.0).epsilon(1e-15));
    }
    SECTION("revival peak sits on the envelope")
    {
        const double tr = m.revivalPeriod;
        REQUIRE(hahn_echo_signal(tr, m) == Approx(std::exp(-std::pow(tr / m.t2, m.stretchP))).epsilon(1e-6));
    }
    SECTION("collapsed between revivals")
    {
        const double mid = 0.5 * m.revivalPeriod;
        const double envelope = std::exp(-std::pow(mid / m.t2, m.stretchP));
        REQUIRE(hahn_echo_signal(mid, m) < 1e-5 * envelope);
    }
    SECTION("revival peaks recover the envelope when T_w <= T_R/8")
    {
        std::mt19937_64 gen(21);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (int trial = 0; trial < 200; ++trial) {
            HahnEchoModel r;
            r.revivalPeriod = 5e-6 + 95e-6 * u(gen);
            r.revivalWidth = r.revivalPeriod / 8.0 * (0.1 + 0.9 * u(gen));
            r.t2 = 20e-6 + 500e-6 * u(gen);
            r.stretchP = 0.6 + 3.4 * u(gen);
            r.revivalCount = 12;
            for (int i = 0; i <= r.revivalCount; ++i) {
                const double tau = i * r.revivalPeriod;
                const double env = std::exp(-std::pow(tau / r.t2, r.stretchP));
                const double s = hahn_echo_signal(tau, r);
                REQUIRE(std::abs(s - env) <= 0.01 * env);
            }
        }
    }
    SECTION("invalid models")
    {
        auto bad = m;
        bad.t2 = 0.0;
        REQUIRE_THROWS_AS(hahn_echo_signal(1e-6, bad), DomainError);
        bad = m;
        bad.stretchP = 0.5;
        REQUIRE_THROWS_AS(hahn_echo_signal(1e-6, bad), DomainError);
        bad = m;
        bad.revivalWidth = bad.revivalPeriod;
        REQUIRE_THROWS_AS(hahn_echo_signal(1e-6, bad), DomainError);
        REQUIRE_THROWS_AS(hahn_echo_signal(-1e-6, m), DomainError);
    }
    SECTION("covering adds enough revivals")
    {
        const auto c = m.covering(400e-6);
        REQUIRE(c.revivalCount * c.revivalPeriod >= 400e-6);
    }
}

TEST_CASE("Ramsey fringes", "[signals]")
{
    RamseyModel m;

    SECTION("normalized at zero")
    {
        REQUIRE(ramsey_signal(0.0, m) == Approx(1.0).epsilon(1e-15));
    }
    SECTION("degenerate cosine leaves the envelope")
    {
        m.detuning = 0.0;
        m.hyperfineSplitting = 0.0;
        for (double tau : {0.1e-6, 0.5e-6, 1.0e-6, 2.0e-6}) {
            REQUIRE(ramsey_signal(tau, m) == Approx(std::exp(-std::pow(tau / m.t2star, 2.0))).epsilon(1e-14));
        }
    }
    SECTION("first zero crossing at a quarter period")
    {
        m.detuning = 1e6;
        m.hyperfineSplitting = 0.0;
        REQUIRE(std::abs(ramsey_signal(0.25e-6, m)) < 1e-12);
        REQUIRE(ramsey_signal(0.2499e-6, m) > 0.0);
        REQUIRE(ramsey_signal(0.2501e-6, m) < 0.0);
    }
    SECTION("detuning sign flip")
    {
        auto flipped = m;
        flipped.detuning = -m.detuning;
        for (int i = 0; i <= 200; ++i) {
            const double tau = i * 0.02e-6;
            REQUIRE(ramsey_signal(tau, m) == Approx(ramsey_signal(tau, flipped)).margin(1e-14));
        }
    }
    SECTION("invalid models")
    {
        m.contrast = 1.5;
        REQUIRE_THROWS_AS(ramsey_signal(0.0, m), DomainError);
        m.contrast = 0.04;
        m.t2star = -1.0;
        REQUIRE_THROWS_AS(ramsey_signal(0.0, m), DomainError);
    }
}

TEST_CASE("thermal echo fringes", "[signals]")
{
    ThermalEchoModel m;
    REQUIRE(thermal_echo_signal(0.0, m) == Approx(1.0).epsilon(1e-15));

    m.oscillationFreq = 1295e3;
    REQUIRE(1.0 / m.oscillationFreq == Approx(0.772e-6).margin(5e-10));
    const double period = 1.0 / m.oscillationFreq;
    const double env = std::exp(-std::pow(period / m.tte, 2.0));
    REQUIRE(thermal_echo_signal(period, m) == Approx(env).epsilon(1e-12));
    REQUIRE(thermal_echo_signal(0.5 * period, m) < 0.0);

    m.oscillationFreq = 0.0;
    for (double t : {0.5e-6, 2e-6, 6e-6}) {
        REQUIRE(thermal_echo_signal(t, m) == Approx(std::exp(-std::pow(t / m.tte, 2.0))).epsilon(1e-14));
    }

    m.tte = 0.0;
    REQUIRE_THROWS_AS(thermal_echo_signal(1e-6, m), DomainError);
    m.tte = 4e-6;
    m.oscillationFreq = -1.0;
    REQUIRE_THROWS_AS(thermal_echo_signal(1e-6, m), DomainError);
}

TEST_CASE("normalized signals stay within [-1, 1]", "[signals][property]")
{
    std::mt19937_64 gen(99);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        RamseyModel r;
        r.t2star = 0.2e-6 + 3e-6 * u(gen);
        r.detuning = -5e6 + 10e6 * u(gen);
        r.hyperfineSplitting = 3e6 * u(gen);
        r.envelopeExponent = 0.5 + 2.5 * u(gen);
        ThermalEchoModel te;
        te.tte = 1e-6 + 10e-6 * u(gen);
        te.oscillationFreq = 3e6 * u(gen);
        te.envelopeExponent = 0.5 + 2.5 * u(gen);
        HahnEchoModel h;
        h.revivalPeriod = 10e-6 + 60e-6 * u(gen);
        h.revivalWidth = h.revivalPeriod * (0.02 + 0.2 * u(gen));
        h.t2 = 20e-6 + 400e-6 * u(gen);
        h.stretchP = 0.6 + 3.4 * u(gen);
        h = h.covering(500e-6);
        for (int i = 0; i <= 500; ++i) {
            const double tau = i * 1e-6;
            const double a = ramsey_signal(tau * 0.02, r);
            const double b = thermal_echo_signal(tau * 0.05, te);
            const double c = hahn_echo_signal(tau, h);
            REQUIRE(std::abs(a) <= 1.0 + 1e-12);
            REQUIRE(std::abs(b) <= 1.0 + 1e-12);
            REQUIRE(c >= 0.0);
            REQUIRE(c <= 1.0 + 1e-12);
        }
    }
}

TEST_CASE("fluorescence mapping", "[signals]")
{
    REQUIRE(fluorescence(1.0, 0.04) == 1.0);
    REQUIRE(fluorescence(-1.0, 0.04) == Approx(0.96));
    REQUIRE(fluorescence(0.0, 0.04) == Approx(0.98));
}

TEST_CASE("CW ODMR spectrum", "[signals]")
{
    const double d = 2.870e9;
    std::vector<double> grid;
    for (int i = 0; i <= 4000; ++i) {
        grid.push_back(2.65e9 + i * 0.11e6);
    }

    SECTION("zero field gives one dip at D")
    {
        const auto s = cw_odmr_spectrum(grid, d, 0.0, 0.1, 5e6);
        const auto it = std::min_element(s.begin(), s.end());
        const double fmin = grid[static_cast<std::size_t>(it - s.begin())];
        REQUIRE(std::abs(fmin - d) <= 0.11e6);
        REQUIRE(*it == Approx(0.9).epsilon(1e-6));
    }
    SECTION("50 G along one axis splits the outer pair by about 280 MHz")
    {
        const auto lines = odmr_lines(d, 50.0);
        double lo = lines[0].frequency;
        double hi = lines[0].frequency;
        double weight = 0.0;
        for (const auto& l : lines) {
            lo = std::min(lo, l.frequency);
            hi = std::max(hi, l.frequency);
            weight += l.weight;
        }
        REQUIRE(hi - lo == Approx(280e6).epsilon(0.005));
        REQUIRE(weight == Approx(1.0));
        REQUIRE(lines[0].weight + lines[1].weight == Approx(0.25));
    }
    SECTION("four resolved dips at 50 G")
    {
        const auto s = cw_odmr_spectrum(grid, d, 50.0, 0.1, 5e6);
        int minima = 0;
        for (std::size_t i = 1; i + 1 < s.size(); ++i) {
            if (s[i] < s[i - 1] && s[i] < s[i + 1] && s[i] < 0.99) {
                ++minima;
            }
        }
        REQUIRE(minima == 4);
    }
    SECTION("zero contrast is flat")
    {
        const auto s = cw_odmr_spectrum(grid, d, 50.0, 0.0, 5e6);
        for (double v : s) {
            REQUIRE(v == 1.0);
        }
    }
    SECTION("domain checks")
    {
        REQUIRE_THROWS_AS(cw_odmr_spectrum(grid, d, 50.0, 0.1, 0.0), DomainError);
        std::vector<double> unsorted{2.9e9, 2.8e9};
        REQUIRE_THROWS_AS(cw_odmr_spectrum(unsorted, d, 50.0, 0.1, 1e6), DomainError);
    }
}
