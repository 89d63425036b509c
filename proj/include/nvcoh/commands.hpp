#pragma once

// The five commands behind the CLI.  Each returns the text file body and a JSON
// record; both start from the command name and the resolved config so that
// `nvcoh <command> --config <output>` reproduces the output exactly.

#include "nvcoh/config.hpp"
#include "nvcoh/fit_models.hpp"
#include "nvcoh/io.hpp"
#include "nvcoh/sequence.hpp"
#include "nvcoh/thermal_rates.hpp"
#include "nvcoh/thermometry.hpp"

#include <sstream>
#include <string>

namespace nvcoh {

namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int validation = 2;
inline constexpr int io = 3;
inline constexpr int fit_quality = 4;
}  // namespace exit_code

struct CommandOutput {
    std::string text;
    Json record;
    int status = exit_code::ok;
};

/// Minimum R^2 for a fit to data without a sigma column.
inline constexpr double min_r_squared = 0.9;

/// Fit quality gate.  Errors must be finite; with per-point sigma the reduced
/// chi-square must lie within five standard deviations of one, otherwise R^2 is used.
inline bool acceptable_fit(const FitResult& fit, const CurveData& data)
{
    if (!fit.converged || !fit.errors.allFinite()) {
        return false;
    }
    if (!data.has_sigma()) {
        return fit.rSquared >= min_r_squared;
    }
    std::size_t freeParams = 0;
    for (bool f : fit.fixed) {
        freeParams += f ? 0 : 1;
    }
    const double dof = static_cast<double>(data.size() - freeParams);
    const double chi2 = fit.residualNorm * fit.residualNorm / dof;
    return chi2 <= 1.0 + 5.0 * std::sqrt(2.0 / dof);
}

namespace detail {

inline std::string header(const std::string& command, const RunConfig& cfg)
{
    return "# command=" + command + "\n# config=" + to_json(cfg).dump() + "\n";
}

inline Json record_head(const std::string& command, const RunConfig& cfg)
{
    return Json{{"command", command}, {"config", to_json(cfg)}};
}

inline std::string kv(const std::string& key, double v) { return "# " + key + "=" + format_double(v) + "\n"; }

}  // namespace detail

inline CommandOutput run_simulate(const RunConfig& cfg)
{
    cfg.validate();
    const CurveData curve = simulate(cfg.protocol_spec(), cfg.sample());
    std::ostringstream os;
    os << detail::header("simulate", cfg);
    write_curve(os, curve);

    Json rec = detail::record_head("simulate", cfg);
    rec["curve"] = Json{{"protocol", curve.protocol},
                        {"temperature_k", curve.temperature},
                        {"seed", curve.seed},
                        {"shots", curve.shots ? Json(*curve.shots) : Json("inf")},
                        {"tau_us", curve.tauUs},
                        {"signal", curve.signal},
                        {"sigma", curve.sigma},
                        {"counts_signal", curve.countsSignal},
                        {"counts_reference", curve.countsReference}};
    return {os.str(), rec};
}

/// Fits the configured data file.  Fit failures do not throw: the report is
/// written with converged=false and the status carries the fit-quality code.
inline CommandOutput run_fit(const RunConfig& cfg)
{
    cfg.validate();
    if (cfg.fitData.empty()) {
        throw ValidationError("fit: no data file given (fit.data or --data)");
    }
    const CurveData data = ingest_curve(cfg.fitData);

    std::optional<FitResult> fit;
    std::optional<DqEstimate> dq;
    std::string failure;
    try {
        if (cfg.fitModel == "dqRelax" && cfg.fitOmega) {
            dq = fit_dq_relaxation(data, Estimate{*cfg.fitOmega, 0.0});
            fit = dq->fit;
        } else {
            fit = fit_by_name(cfg.fitModel, data, cfg.fit_context());
        }
    } catch (const FitError& e) {
        failure = e.what();
    }

    std::ostringstream os;
    os << detail::header("fit", cfg);
    os << "# data=" << cfg.fitData << "\n# model=" << cfg.fitModel << "\n";
    Json rec = detail::record_head("fit", cfg);
    Json result;
    int status = exit_code::ok;
    if (!fit) {
        os << "# converged=false\n# status=" << failure << "\n";
        result = Json{{"converged", false}, {"status", failure}};
        status = exit_code::fit_quality;
    } else {
        const bool good = acceptable_fit(*fit, data);
        if (!good) {
            status = exit_code::fit_quality;
        }
        os << "# converged=" << (fit->converged ? "true" : "false") << "\n# status=" << fit->status << "\n";
        os << "# iterations=" << fit->iterations << "\n";
        os << detail::kv("residual_norm", fit->residualNorm) << detail::kv("r_squared", fit->rSquared);
        os << "# acceptable=" << (good ? "true" : "false") << "\n";
        result = Json{{"converged", fit->converged},
                      {"status", fit->status},
                      {"iterations", fit->iterations},
                      {"residual_norm", fit->residualNorm},
                      {"r_squared", fit->rSquared},
                      {"acceptable", good}};
        Json params = Json::array();
        os << "parameter\tvalue\terror\tfixed\n";
        for (std::size_t i = 0; i < fit->names.size(); ++i) {
            const auto k = static_cast<Eigen::Index>(i);
            os << fit->names[i] << '\t' << format_double(fit->estimates(k)) << '\t' << format_double(fit->errors(k))
               << '\t' << (fit->fixed[i] ? 1 : 0) << '\n';
            params.push_back(Json{{"name", fit->names[i]},
                                  {"value", fit->estimates(k)},
                                  {"error", fit->errors(k)},
                                  {"fixed", static_cast<bool>(fit->fixed[i])}});
        }
        if (dq) {
            os << "gamma\t" << format_double(dq->gamma.value) << '\t' << format_double(dq->gamma.error) << "\t0\n";
            params.push_back(Json{{"name", "gamma"}, {"value", dq->gamma.value}, {"error", dq->gamma.error},
                                  {"fixed", false}, {"clamped", dq->clamped}});
        }
        result["parameters"] = params;
    }
    rec["result"] = result;
    return {os.str(), rec, status};
}

inline CommandOutput run_sweep(const RunConfig& cfg)
{
    cfg.validate();
    const SampleConfig sample = cfg.sample();
    std::ostringstream os;
    os << detail::header("sweep", cfg);
    os << "temperature_k\tinv_t1_per_s\tomega_per_s\tgamma_per_s\tlifetime_per_s\tp1_sl_per_s\tc13_ss_per_s\t"
          "residual_per_s\ttotal_inv_t2_per_s\tmeasured\n";
    Json rows = Json::array();
    for (double t : cfg.sweep.temperatures()) {
        const double invT1 = inv_t1(t, sample.rates.invT1);
        const double omega = omega_of_t(t, sample.rates);
        const double gamma = gamma_of_t(t, sample.rates);
        const auto b = dephasing_budget(t, sample, sample.measured_inv_t2(t));
        os << format_double(t) << '\t' << format_double(invT1) << '\t' << format_double(omega) << '\t'
           << format_double(gamma) << '\t' << format_double(b.lifetimeTerm) << '\t' << format_double(b.p1SL) << '\t'
           << format_double(b.c13SS) << '\t' << format_double(b.residualOthers) << '\t'
           << format_double(b.totalInvT2) << '\t' << (b.measured ? 1 : 0) << '\n';
        rows.push_back(Json{{"temperature_k", t},
                            {"inv_t1_per_s", invT1},
                            {"omega_per_s", omega},
                            {"gamma_per_s", gamma},
                            {"lifetime_per_s", b.lifetimeTerm},
                            {"p1_sl_per_s", b.p1SL},
                            {"c13_ss_per_s", b.c13SS},
                            {"residual_per_s", b.residualOthers},
                            {"total_inv_t2_per_s", b.totalInvT2},
                            {"measured", b.measured},
                            {"extrapolated", b.extrapolated}});
    }
    Json rec = detail::record_head("sweep", cfg);
    rec["rows"] = rows;
    return {os.str(), rec};
}

inline CommandOutput run_sensitivity(const RunConfig& cfg)
{
    cfg.validate();
    const SampleConfig sample = cfg.sample();
    const auto temps = cfg.sensitivity.temperatures();
    const auto curve = sensitivity_vs_temperature(sample, temps);
    const auto report = sensitivity_at(sample, cfg.reportTemperature);

    std::ostringstream os;
    os << detail::header("sensitivity", cfg);
    os << detail::kv("interrogation_time_us", curve.interrogationTime * 1e6)
       << detail::kv("best_temperature_k", curve.bestTemperature)
       << detail::kv("best_eta_k_per_rthz", curve.bestEta) << detail::kv("report_temperature_k", report.temperature)
       << detail::kv("report_eta_k_per_rthz", report.eta);
    os << "temperature_k\teta_k_per_rthz\tslope_hz_per_k\tcontrast\n";
    Json rows = Json::array();
    for (const auto& p : curve.points) {
        os << format_double(p.temperature) << '\t' << format_double(p.eta) << '\t' << format_double(p.slope) << '\t'
           << format_double(p.contrast) << '\n';
        rows.push_back(Json{{"temperature_k", p.temperature},
                            {"eta_k_per_rthz", p.eta},
                            {"slope_hz_per_k", p.slope},
                            {"contrast", p.contrast}});
    }
    Json rec = detail::record_head("sensitivity", cfg);
    rec["interrogation_time_us"] = curve.interrogationTime * 1e6;
    rec["best_temperature_k"] = curve.bestTemperature;
    rec["best_eta_k_per_rthz"] = curve.bestEta;
    rec["report"] = Json{{"temperature_k", report.temperature}, {"eta_k_per_rthz", report.eta}};
    rec["rows"] = rows;
    return {os.str(), rec};
}

inline CommandOutput run_budget(const RunConfig& cfg)
{
    cfg.validate();
    const SampleConfig sample = cfg.sample();
    const double t = cfg.budgetTemperature;
    const auto measured = cfg.budgetMeasuredInvT2 ? cfg.budgetMeasuredInvT2 : sample.measured_inv_t2(t);
    const auto b = dephasing_budget(t, sample, measured);

    std::ostringstream os;
    os << detail::header("budget", cfg);
    os << detail::kv("temperature_k", t) << "# measured=" << (b.measured ? "true" : "false")
       << "\n# extrapolated=" << (b.extrapolated ? "true" : "false") << "\n"
       << detail::kv("lifetime_fraction", b.lifetimeTerm / b.totalInvT2);
    os << "component\tvalue_per_s\n";
    const std::pair<const char*, double> parts[] = {{"lifetime", b.lifetimeTerm},
                                                    {"p1_sl", b.p1SL},
                                                    {"c13_ss", b.c13SS},
                                                    {"residual_others", b.residualOthers},
                                                    {"total_inv_t2", b.totalInvT2}};
    Json comp;
    for (const auto& [name, v] : parts) {
        os << name << '\t' << format_double(v) << '\n';
        comp[name] = v;
    }
    Json rec = detail::record_head("budget", cfg);
    rec["budget"] = Json{{"temperature_k", t},
                         {"measured", b.measured},
                         {"extrapolated", b.extrapolated},
                         {"lifetime_fraction", b.lifetimeTerm / b.totalInvT2},
                         {"components_per_s", comp}};
    return {os.str(), rec};
}

inline CommandOutput run_command(const std::string& name, const RunConfig& cfg)
{
    if (name == "simulate") {
        return run_simulate(cfg);
    }
    if (name == "fit") {
        return run_fit(cfg);
    }
    if (name == "sweep") {
        return run_sweep(cfg);
    }
    if (name == "sensitivity") {
        return run_sensitivity(cfg);
    }
    if (name == "budget") {
        return run_budget(cfg);
    }
    throw ValidationError("unknown command '" + name + "'");
}

/// Writes <path> and <path>.json.
inline void write_outputs(const CommandOutput& out, const std::string& path)
{
    write_text(path, out.text);
    write_text(path + ".json", out.record.dump(2) + "\n");
}

}  // namespace nvcoh
