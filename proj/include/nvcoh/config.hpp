#pragma once

// Run configuration: a nested JSON document mirroring the schema below, parsed
// strictly (unknown keys and wrong types are ValidationErrors).  Values are kept
// in their file units (us, Hz, K) so that writing a parsed config back out is
// exact, and converted to SI only when the domain objects are built.
//
// {
//   "sample":      { nitrogen_ppb, nv_ppb, c13_fraction, b_field_gauss, per_cm3_per_ppb,
//                    p1_relaxation: {a, b, lin}, measured_t2: [{temperature_k, t2_us}] },
//   "rates":       { inv_t1: {a, b, lin, a_err, b_err}, gamma: {...} },
//   "calibration": { anchors: [{temperature_k, d_hz}] }
//                | { linear: {slope_hz_per_k, t_ref_k, d_ref_hz, t_min_k, t_max_k} },
//   "readout":     { p0, p1, reference_temperature_k, fade_per_k },
//   "coherence":   { t2star_us, ramsey_exponent, ramsey_detuning_hz, hyperfine_hz, tte_us,
//                    te_exponent, mw_minus_hz, mw_plus_hz, hahn_t2_us, hahn_stretch,
//                    revival_width_us, polarization },
//   "protocol":    { name, temperature_k, tau_us: [...] | tau_grid: {start_us, stop_us, points},
//                    shots: <int> | "inf", seed },
//   "sweep":       { t_min_k, t_max_k, steps },
//   "sensitivity": { t_min_k, t_max_k, steps, report_temperature_k },
//   "fit":         { data, model, omega_per_s },
//   "budget":      { temperature_k, measured_inv_t2_per_s },
//   "output":      { path }
// }
//
// Every key is optional; omitted keys take the defaults below.

#include "nvcoh/calibration.hpp"
#include "nvcoh/error.hpp"
#include "nvcoh/fit_models.hpp"
#include "nvcoh/io.hpp"
#include "nvcoh/sample.hpp"
#include "nvcoh/sequence.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace nvcoh {

using Json = nlohmann::ordered_json;

struct TauGrid {
    double startUs = 0.0;
    double stopUs = 10000.0;
    int points = 101;
};

struct LinearCalibration {
    double slopeHzPerK = -132e3;
    double tRef = 300.0;
    double dRef = 2.870e9;
    double tMin = 300.0;
    double tMax = 600.0;
};

struct TemperatureRange {
    double tMin = 300.0;
    double tMax = 600.0;
    int steps = 30;

    [[nodiscard]] std::vector<double> temperatures() const
    {
        std::vector<double> t(static_cast<std::size_t>(steps) + 1);
        for (int i = 0; i <= steps; ++i) {
            t[static_cast<std::size_t>(i)] = i == steps ? tMax : tMin + (tMax - tMin) * i / steps;
        }
        return t;
    }
};

struct RunConfig {
    // sample
    double nitrogenPpb = 125.0;
    double nvPpb = 2.0;
    double c13Fraction = 0.011;
    double bFieldGauss = 50.0;
    double perCm3PerPpb = constants::ppb_to_per_cm3;
    ThermalRateLaw p1Relaxation = SampleConfig{}.p1Relaxation;
    std::vector<std::pair<double, double>> measuredT2Us;  // (K, us)

    RateLaws rates;

    std::optional<LinearCalibration> linearCalibration = LinearCalibration{};
    std::vector<DCalibration::Anchor> anchors;  // used when linearCalibration is empty

    ReadoutBudget readout;

    // coherence, file units
    double t2starUs = 0.8;
    double ramseyExponent = 2.0;
    double ramseyDetuningHz = 2.0e6;
    double hyperfineHz = 2.16e6;
    double tteUs = 4.0;
    double teExponent = 2.0;
    double mwMinusHz = 2.851070e9 - 140.125e6;
    double mwPlusHz = 2.851070e9 + 140.125e6;
    double hahnT2Us = 184.0;
    double hahnStretch = 1.5;
    double revivalWidthUs = 4.0;
    double polarization = 1.0;

    // protocol
    std::string protocol = "sqRelax";
    double temperature = 300.0;
    std::optional<TauGrid> tauGrid = TauGrid{};
    std::vector<double> tauUs;  // used when tauGrid is empty
    std::optional<std::int64_t> shots;
    std::uint64_t seed = 1;

    TemperatureRange sweep;
    TemperatureRange sensitivity;
    double reportTemperature = 450.0;

    std::string fitData;
    std::string fitModel = "sqRelax";
    std::optional<double> fitOmega;

    double budgetTemperature = 600.0;
    std::optional<double> budgetMeasuredInvT2;

    std::string outputPath;  // never serialized

    [[nodiscard]] DCalibration calibration() const
    {
        if (linearCalibration) {
            const auto& l = *linearCalibration;
            return DCalibration::linear(l.slopeHzPerK, l.tRef, l.dRef, l.tMin, l.tMax);
        }
        return DCalibration(anchors);
    }

    [[nodiscard]] SampleConfig sample() const
    {
        SampleConfig s;
        s.nitrogenPpb = nitrogenPpb;
        s.nvPpb = nvPpb;
        s.c13Fraction = c13Fraction;
        s.bFieldGauss = bFieldGauss;
        s.perCm3PerPpb = perCm3PerPpb;
        s.p1Relaxation = p1Relaxation;
        s.rates = rates;
        s.calibration = calibration();
        s.readout = readout;
        auto& c = s.coherence;
        c.t2star = t2starUs * 1e-6;
        c.ramseyExponent = ramseyExponent;
        c.ramseyDetuning = ramseyDetuningHz;
        c.hyperfineSplitting = hyperfineHz;
        c.tte = tteUs * 1e-6;
        c.teExponent = teExponent;
        c.mwMinus = mwMinusHz;
        c.mwPlus = mwPlusHz;
        c.hahnT2 = hahnT2Us * 1e-6;
        c.hahnStretch = hahnStretch;
        c.revivalWidth = revivalWidthUs * 1e-6;
        c.polarization = polarization;
        for (const auto& [t, us] : measuredT2Us) {
            s.measuredT2.emplace_back(t, us * 1e-6);
        }
        return s;
    }

    [[nodiscard]] std::vector<double> tau_us_grid() const
    {
        if (!tauGrid) {
            return tauUs;
        }
        const auto& g = *tauGrid;
        std::vector<double> out(static_cast<std::size_t>(g.points));
        for (int i = 0; i < g.points; ++i) {
            out[static_cast<std::size_t>(i)] =
                g.points == 1 ? g.startUs : (i == g.points - 1 ? g.stopUs : g.startUs + (g.stopUs - g.startUs) * i / (g.points - 1));
        }
        return out;
    }

    [[nodiscard]] ProtocolSpec protocol_spec() const
    {
        ProtocolSpec p;
        p.name = protocol_from_string(protocol);
        for (double us : tau_us_grid()) {
            p.tauGrid.push_back(us * 1e-6);
        }
        p.temperature = temperature;
        p.shots = shots;
        p.seed = seed;
        return p;
    }

    [[nodiscard]] FitContext fit_context() const
    {
        FitContext ctx;
        ctx.bFieldGauss = bFieldGauss;
        ctx.hyperfineSplitting = hyperfineHz;
        ctx.ramseyExponent = ramseyExponent;
        ctx.cosineExponent = teExponent;
        return ctx;
    }

    /// Range and consistency checks; throws ValidationError naming the key.
    void validate() const;
};

namespace detail {

inline void check(bool ok, const std::string& what)
{
    if (!ok) {
        throw ValidationError("config: " + what);
    }
}

inline void check_range(const TemperatureRange& r, const std::string& section)
{
    check(std::isfinite(r.tMin) && r.tMin > 0.0, section + ".t_min_k must be > 0");
    check(std::isfinite(r.tMax) && r.tMin < r.tMax, section + ".t_min_k must be < t_max_k");
    check(r.steps >= 1, section + ".steps must be >= 1");
}

inline void check_law(const ThermalRateLaw& l, const std::string& key)
{
    check(std::isfinite(l.aCoeff) && std::isfinite(l.bCoeff) && std::isfinite(l.linCoeff) && l.aCoeff >= 0.0 &&
              l.bCoeff >= 0.0 && l.linCoeff >= 0.0,
          key + " coefficients must be finite and >= 0");
}

}  // namespace detail

inline void RunConfig::validate() const
{
    using detail::check;
    const auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };

    check(std::isfinite(nitrogenPpb) && nitrogenPpb >= 0.0, "sample.nitrogen_ppb must be >= 0");
    check(std::isfinite(nvPpb) && nvPpb >= 0.0, "sample.nv_ppb must be >= 0");
    check(c13Fraction >= 0.0 && c13Fraction <= 1.0, "sample.c13_fraction must be in [0, 1]");
    check(std::isfinite(bFieldGauss) && bFieldGauss >= 0.0, "sample.b_field_gauss must be >= 0");
    check(positive(perCm3PerPpb), "sample.per_cm3_per_ppb must be > 0");
    detail::check_law(p1Relaxation, "sample.p1_relaxation");
    for (std::size_t i = 0; i < measuredT2Us.size(); ++i) {
        check(positive(measuredT2Us[i].first) && positive(measuredT2Us[i].second),
              "sample.measured_t2 entries must have positive temperature and T2");
        check(i == 0 || measuredT2Us[i].first > measuredT2Us[i - 1].first,
              "sample.measured_t2 temperatures must be strictly increasing");
    }
    detail::check_law(rates.invT1, "rates.inv_t1");
    detail::check_law(rates.gammaDQ, "rates.gamma");

    if (linearCalibration) {
        check(linearCalibration->slopeHzPerK < 0.0, "calibration.linear.slope_hz_per_k must be < 0");
    }
    (void)calibration();  // anchor ordering

    check(positive(readout.p0) && std::isfinite(readout.p1) && readout.p1 >= 0.0 && readout.p0 > readout.p1,
          "readout requires p0 > p1 >= 0");
    check(std::isfinite(readout.contrastTemp.fadePerKelvin) && readout.contrastTemp.fadePerKelvin >= 0.0,
          "readout.fade_per_k must be >= 0");
    check(positive(readout.contrastTemp.referenceTemperature), "readout.reference_temperature_k must be > 0");

    check(positive(t2starUs), "coherence.t2star_us must be > 0");
    check(positive(ramseyExponent), "coherence.ramsey_exponent must be > 0");
    check(std::isfinite(ramseyDetuningHz), "coherence.ramsey_detuning_hz must be finite");
    check(std::isfinite(hyperfineHz) && hyperfineHz >= 0.0, "coherence.hyperfine_hz must be >= 0");
    check(positive(tteUs), "coherence.tte_us must be > 0");
    check(positive(teExponent), "coherence.te_exponent must be > 0");
    check(positive(mwMinusHz) && positive(mwPlusHz), "coherence.mw_minus_hz and mw_plus_hz must be > 0");
    check(positive(hahnT2Us), "coherence.hahn_t2_us must be > 0");
    check(hahnStretch >= 0.5 && hahnStretch <= 4.0, "coherence.hahn_stretch must be in [0.5, 4]");
    check(positive(revivalWidthUs), "coherence.revival_width_us must be > 0");
    check(polarization > 0.0 && polarization <= 1.0, "coherence.polarization must be in (0, 1]");

    check(std::find(protocol_names.begin(), protocol_names.end(), protocol) != protocol_names.end(),
          "protocol.name '" + protocol + "' is not a known protocol");
    check(positive(temperature), "protocol.temperature_k must be > 0");
    if (tauGrid) {
        check(tauGrid->points >= 1, "protocol.tau_grid.points must be >= 1");
        check(std::isfinite(tauGrid->startUs) && tauGrid->startUs >= 0.0, "protocol.tau_grid.start_us must be >= 0");
        check(tauGrid->points == 1 || tauGrid->stopUs > tauGrid->startUs,
              "protocol.tau_grid.stop_us must exceed start_us");
    } else {
        check(!tauUs.empty(), "protocol.tau_us must not be empty");
        for (std::size_t i = 0; i < tauUs.size(); ++i) {
            check(std::isfinite(tauUs[i]) && tauUs[i] >= 0.0 && (i == 0 || tauUs[i] > tauUs[i - 1]),
                  "protocol.tau_us must be non-negative and strictly increasing");
        }
    }
    check(!shots || *shots >= 1, "protocol.shots must be >= 1 or \"inf\"");

    detail::check_range(sweep, "sweep");
    detail::check_range(sensitivity, "sensitivity");
    check(positive(reportTemperature), "sensitivity.report_temperature_k must be > 0");

    check(fitModel == "thermalEcho" ||
              std::find(model_names.begin(), model_names.end(), fitModel) != model_names.end(),
          "fit.model '" + fitModel + "' is not a registered model");
    check(!fitOmega || positive(*fitOmega), "fit.omega_per_s must be > 0");

    check(positive(budgetTemperature), "budget.temperature_k must be > 0");
    check(!budgetMeasuredInvT2 || positive(*budgetMeasuredInvT2), "budget.measured_inv_t2_per_s must be > 0");
}

namespace detail {

/// Walks one JSON object, rejecting keys outside the allowed set.
class Section {
public:
    Section(const Json& j, std::string path, std::initializer_list<std::string_view> allowed)
        : j_(j), path_(std::move(path))
    {
        if (!j_.is_object()) {
            throw ValidationError("config: '" + path_ + "' must be an object");
        }
        for (const auto& item : j_.items()) {
            if (std::find(allowed.begin(), allowed.end(), item.key()) == allowed.end()) {
                throw ValidationError("config: unknown key '" + key_path(item.key()) + "'");
            }
        }
    }

    [[nodiscard]] bool has(const char* key) const { return j_.contains(key); }
    [[nodiscard]] const Json& at(const char* key) const { return j_.at(key); }
    [[nodiscard]] std::string key_path(std::string_view key) const
    {
        return path_.empty() ? std::string(key) : path_ + "." + std::string(key);
    }

    void number(const char* key, double& out) const
    {
        if (has(key)) {
            const auto& v = j_.at(key);
            if (!v.is_number()) {
                throw ValidationError("config: '" + key_path(key) + "' must be a number");
            }
            out = v.get<double>();
        }
    }

    void optional_number(const char* key, std::optional<double>& out) const
    {
        if (has(key)) {
            if (j_.at(key).is_null()) {
                out.reset();
                return;
            }
            double v = 0.0;
            number(key, v);
            out = v;
        }
    }

    template <class Int>
    void integer(const char* key, Int& out) const
    {
        if (has(key)) {
            const auto& v = j_.at(key);
            if (!v.is_number_integer() || (std::is_unsigned_v<Int> && v.is_number_integer() && !v.is_number_unsigned())) {
                throw ValidationError("config: '" + key_path(key) + "' must be " +
                                      (std::is_unsigned_v<Int> ? "a non-negative integer" : "an integer"));
            }
            out = v.get<Int>();
        }
    }

    void string(const char* key, std::string& out) const
    {
        if (has(key)) {
            const auto& v = j_.at(key);
            if (!v.is_string()) {
                throw ValidationError("config: '" + key_path(key) + "' must be a string");
            }
            out = v.get<std::string>();
        }
    }

    [[nodiscard]] Section sub(const char* key, std::initializer_list<std::string_view> allowed) const
    {
        return Section(j_.at(key), key_path(key), allowed);
    }

    [[nodiscard]] const Json& array(const char* key) const
    {
        const auto& v = j_.at(key);
        if (!v.is_array()) {
            throw ValidationError("config: '" + key_path(key) + "' must be an array");
        }
        return v;
    }

private:
    const Json& j_;
    std::string path_;
};

inline void read_law(const Section& s, ThermalRateLaw& law)
{
    s.number("a", law.aCoeff);
    s.number("b", law.bCoeff);
    s.number("lin", law.linCoeff);
    s.number("a_err", law.aErr);
    s.number("b_err", law.bErr);
}

inline Json law_json(const ThermalRateLaw& law)
{
    return Json{{"a", law.aCoeff}, {"b", law.bCoeff}, {"lin", law.linCoeff}, {"a_err", law.aErr}, {"b_err", law.bErr}};
}

inline void read_range(const Section& s, TemperatureRange& r)
{
    s.number("t_min_k", r.tMin);
    s.number("t_max_k", r.tMax);
    s.integer("steps", r.steps);
}

}  // namespace detail

/// Builds a config from a parsed document; defaults fill omitted keys.  Does
/// not validate ranges, so command-line overrides can be applied first.
inline RunConfig config_from_json(const Json& doc)
{
    using detail::Section;
    RunConfig c;
    const Section root(doc, "", {"sample", "rates", "calibration", "readout", "coherence", "protocol", "sweep",
                                 "sensitivity", "fit", "budget", "output"});

    if (root.has("sample")) {
        const auto s = root.sub("sample", {"nitrogen_ppb", "nv_ppb", "c13_fraction", "b_field_gauss",
                                           "per_cm3_per_ppb", "p1_relaxation", "measured_t2"});
        s.number("nitrogen_ppb", c.nitrogenPpb);
        s.number("nv_ppb", c.nvPpb);
        s.number("c13_fraction", c.c13Fraction);
        s.number("b_field_gauss", c.bFieldGauss);
        s.number("per_cm3_per_ppb", c.perCm3PerPpb);
        if (s.has("p1_relaxation")) {
            detail::read_law(s.sub("p1_relaxation", {"a", "b", "lin", "a_err", "b_err"}), c.p1Relaxation);
        }
        if (s.has("measured_t2")) {
            c.measuredT2Us.clear();
            const auto& arr = s.array("measured_t2");
            for (std::size_t i = 0; i < arr.size(); ++i) {
                const Section e(arr[i], s.key_path("measured_t2[" + std::to_string(i) + "]"),
                                {"temperature_k", "t2_us"});
                double t = NAN;
                double t2 = NAN;
                e.number("temperature_k", t);
                e.number("t2_us", t2);
                c.measuredT2Us.emplace_back(t, t2);
            }
        }
    }

    if (root.has("rates")) {
        const auto s = root.sub("rates", {"inv_t1", "gamma"});
        if (s.has("inv_t1")) {
            detail::read_law(s.sub("inv_t1", {"a", "b", "lin", "a_err", "b_err"}), c.rates.invT1);
        }
        if (s.has("gamma")) {
            detail::read_law(s.sub("gamma", {"a", "b", "lin", "a_err", "b_err"}), c.rates.gammaDQ);
        }
    }

    if (root.has("calibration")) {
        const auto s = root.sub("calibration", {"anchors", "linear"});
        if (s.has("anchors") == s.has("linear")) {
            throw ValidationError("config: calibration needs exactly one of 'anchors' or 'linear'");
        }
        if (s.has("linear")) {
            const auto l = s.sub("linear", {"slope_hz_per_k", "t_ref_k", "d_ref_hz", "t_min_k", "t_max_k"});
            LinearCalibration lin;
            l.number("slope_hz_per_k", lin.slopeHzPerK);
            l.number("t_ref_k", lin.tRef);
            l.number("d_ref_hz", lin.dRef);
            l.number("t_min_k", lin.tMin);
            l.number("t_max_k", lin.tMax);
            c.linearCalibration = lin;
        } else {
            c.linearCalibration.reset();
            const auto& arr = s.array("anchors");
            for (std::size_t i = 0; i < arr.size(); ++i) {
                const Section e(arr[i], "calibration.anchors[" + std::to_string(i) + "]", {"temperature_k", "d_hz"});
                if (!e.has("temperature_k") || !e.has("d_hz")) {
                    throw ValidationError("config: calibration.anchors[" + std::to_string(i) +
                                          "] needs temperature_k and d_hz");
                }
                DCalibration::Anchor a{};
                e.number("temperature_k", a.temperature);
                e.number("d_hz", a.d);
                c.anchors.push_back(a);
            }
        }
    }

    if (root.has("readout")) {
        const auto s = root.sub("readout", {"p0", "p1", "reference_temperature_k", "fade_per_k"});
        s.number("p0", c.readout.p0);
        s.number("p1", c.readout.p1);
        s.number("reference_temperature_k", c.readout.contrastTemp.referenceTemperature);
        s.number("fade_per_k", c.readout.contrastTemp.fadePerKelvin);
    }

    if (root.has("coherence")) {
        const auto s = root.sub("coherence", {"t2star_us", "ramsey_exponent", "ramsey_detuning_hz", "hyperfine_hz",
                                              "tte_us", "te_exponent", "mw_minus_hz", "mw_plus_hz", "hahn_t2_us",
                                              "hahn_stretch", "revival_width_us", "polarization"});
        s.number("t2star_us", c.t2starUs);
        s.number("ramsey_exponent", c.ramseyExponent);
        s.number("ramsey_detuning_hz", c.ramseyDetuningHz);
        s.number("hyperfine_hz", c.hyperfineHz);
        s.number("tte_us", c.tteUs);
        s.number("te_exponent", c.teExponent);
        s.number("mw_minus_hz", c.mwMinusHz);
        s.number("mw_plus_hz", c.mwPlusHz);
        s.number("hahn_t2_us", c.hahnT2Us);
        s.number("hahn_stretch", c.hahnStretch);
        s.number("revival_width_us", c.revivalWidthUs);
        s.number("polarization", c.polarization);
    }

    if (root.has("protocol")) {
        const auto s = root.sub("protocol", {"name", "temperature_k", "tau_us", "tau_grid", "shots", "seed"});
        s.string("name", c.protocol);
        s.number("temperature_k", c.temperature);
        if (s.has("tau_us") && s.has("tau_grid")) {
            throw ValidationError("config: protocol takes either tau_us or tau_grid, not both");
        }
        if (s.has("tau_us")) {
            c.tauGrid.reset();
            for (const auto& v : s.array("tau_us")) {
                if (!v.is_number()) {
                    throw ValidationError("config: 'protocol.tau_us' must hold numbers");
                }
                c.tauUs.push_back(v.get<double>());
            }
        }
        if (s.has("tau_grid")) {
            const auto g = s.sub("tau_grid", {"start_us", "stop_us", "points"});
            g.number("start_us", c.tauGrid->startUs);
            g.number("stop_us", c.tauGrid->stopUs);
            g.integer("points", c.tauGrid->points);
        }
        if (s.has("shots")) {
            const auto& v = s.at("shots");
            if (v.is_string() && v.get<std::string>() == "inf") {
                c.shots.reset();
            } else if (v.is_number_integer()) {
                c.shots = v.get<std::int64_t>();
            } else {
                throw ValidationError("config: 'protocol.shots' must be an integer or \"inf\"");
            }
        }
        s.integer("seed", c.seed);
    }

    if (root.has("sweep")) {
        detail::read_range(root.sub("sweep", {"t_min_k", "t_max_k", "steps"}), c.sweep);
    }
    if (root.has("sensitivity")) {
        const auto s = root.sub("sensitivity", {"t_min_k", "t_max_k", "steps", "report_temperature_k"});
        detail::read_range(s, c.sensitivity);
        s.number("report_temperature_k", c.reportTemperature);
    }
    if (root.has("fit")) {
        const auto s = root.sub("fit", {"data", "model", "omega_per_s"});
        s.string("data", c.fitData);
        s.string("model", c.fitModel);
        s.optional_number("omega_per_s", c.fitOmega);
    }
    if (root.has("budget")) {
        const auto s = root.sub("budget", {"temperature_k", "measured_inv_t2_per_s"});
        s.number("temperature_k", c.budgetTemperature);
        s.optional_number("measured_inv_t2_per_s", c.budgetMeasuredInvT2);
    }
    if (root.has("output")) {
        root.sub("output", {"path"}).string("path", c.outputPath);
    }
    return c;
}

/// Fully resolved document (output path excluded).
inline Json to_json(const RunConfig& c)
{
    Json measured = Json::array();
    for (const auto& [t, us] : c.measuredT2Us) {
        measured.push_back(Json{{"temperature_k", t}, {"t2_us", us}});
    }
    Json calibration;
    if (c.linearCalibration) {
        const auto& l = *c.linearCalibration;
        calibration["linear"] = Json{{"slope_hz_per_k", l.slopeHzPerK},
                                     {"t_ref_k", l.tRef},
                                     {"d_ref_hz", l.dRef},
                                     {"t_min_k", l.tMin},
                                     {"t_max_k", l.tMax}};
    } else {
        Json anchors = Json::array();
        for (const auto& a : c.anchors) {
            anchors.push_back(Json{{"temperature_k", a.temperature}, {"d_hz", a.d}});
        }
        calibration["anchors"] = anchors;
    }

    Json protocol{{"name", c.protocol}, {"temperature_k", c.temperature}};
    if (c.tauGrid) {
        protocol["tau_grid"] =
            Json{{"start_us", c.tauGrid->startUs}, {"stop_us", c.tauGrid->stopUs}, {"points", c.tauGrid->points}};
    } else {
        protocol["tau_us"] = c.tauUs;
    }
    protocol["shots"] = c.shots ? Json(*c.shots) : Json("inf");
    protocol["seed"] = c.seed;

    const auto range = [](const TemperatureRange& r) {
        return Json{{"t_min_k", r.tMin}, {"t_max_k", r.tMax}, {"steps", r.steps}};
    };
    Json sens = range(c.sensitivity);
    sens["report_temperature_k"] = c.reportTemperature;

    return Json{
        {"sample",
         {{"nitrogen_ppb", c.nitrogenPpb},
          {"nv_ppb", c.nvPpb},
          {"c13_fraction", c.c13Fraction},
          {"b_field_gauss", c.bFieldGauss},
          {"per_cm3_per_ppb", c.perCm3PerPpb},
          {"p1_relaxation", detail::law_json(c.p1Relaxation)},
          {"measured_t2", measured}}},
        {"rates", {{"inv_t1", detail::law_json(c.rates.invT1)}, {"gamma", detail::law_json(c.rates.gammaDQ)}}},
        {"calibration", calibration},
        {"readout",
         {{"p0", c.readout.p0},
          {"p1", c.readout.p1},
          {"reference_temperature_k", c.readout.contrastTemp.referenceTemperature},
          {"fade_per_k", c.readout.contrastTemp.fadePerKelvin}}},
        {"coherence",
         {{"t2star_us", c.t2starUs},
          {"ramsey_exponent", c.ramseyExponent},
          {"ramsey_detuning_hz", c.ramseyDetuningHz},
          {"hyperfine_hz", c.hyperfineHz},
          {"tte_us", c.tteUs},
          {"te_exponent", c.teExponent},
          {"mw_minus_hz", c.mwMinusHz},
          {"mw_plus_hz", c.mwPlusHz},
          {"hahn_t2_us", c.hahnT2Us},
          {"hahn_stretch", c.hahnStretch},
          {"revival_width_us", c.revivalWidthUs},
          {"polarization", c.polarization}}},
        {"protocol", protocol},
        {"sweep", range(c.sweep)},
        {"sensitivity", sens},
        {"fit",
         {{"data", c.fitData},
          {"model", c.fitModel},
          {"omega_per_s", c.fitOmega ? Json(*c.fitOmega) : Json(nullptr)}}},
        {"budget",
         {{"temperature_k", c.budgetTemperature},
          {"measured_inv_t2_per_s", c.budgetMeasuredInvT2 ? Json(*c.budgetMeasuredInvT2) : Json(nullptr)}}},
    };
}

inline Json parse_json(const std::string& text, const std::string& source)
{
    try {
        return Json::parse(text);
    } catch (const Json::parse_error& e) {
        throw ParseError(source + ": " + e.what());
    }
}

/// Accepts a JSON config, a JSON report carrying a "config" object, or a text
/// output file with a "# config=" header line.
inline RunConfig config_from_text(const std::string& text, const std::string& source = "<config>")
{
    const auto start = text.find_first_not_of(" \t\r\n");
    if (start != std::string::npos && text[start] == '{') {
        const Json doc = parse_json(text, source);
        if (doc.is_object() && doc.contains("command") && doc.contains("config")) {
            return config_from_json(doc.at("config"));
        }
        return config_from_json(doc);
    }
    std::istringstream in(text);
    std::string line;
    constexpr std::string_view tag = "# config=";
    while (std::getline(in, line)) {
        if (line.rfind(tag, 0) == 0) {
            return config_from_json(parse_json(line.substr(tag.size()), source));
        }
    }
    throw ParseError(source + ": neither a JSON config nor an output file with an embedded config");
}

inline RunConfig load_config(const std::string& path)
{
    return config_from_text(read_text(path), path);
}

}  // namespace nvcoh
