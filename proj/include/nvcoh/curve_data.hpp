#pragma once

#include "nvcoh/error.hpp"

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace nvcoh {

/// Sampled curve: delay (microseconds, the unit of the data files), normalized
/// signal and optional per-point uncertainty, plus run metadata.
struct CurveData {
    std::vector<double> tauUs;
    std::vector<double> signal;
    std::vector<double> sigma;            // empty when absent
    std::vector<double> countsSignal;     // raw photon counts (or expected counts when noiseless), optional
    std::vector<double> countsReference;

    std::string protocol;
    double temperature = std::nan("");
    std::uint64_t seed = 0;
    std::optional<std::int64_t> shots;   // nullopt: noiseless expectation

    std::map<std::string, std::string> metadata;  // any further "# key=value" entries

    [[nodiscard]] std::size_t size() const { return tauUs.size(); }
    [[nodiscard]] bool has_sigma() const { return !sigma.empty(); }
    [[nodiscard]] double tau_s(std::size_t i) const { return tauUs[i] * 1e-6; }

    [[nodiscard]] std::vector<double> tau_seconds() const
    {
        std::vector<double> out(tauUs.size());
        for (std::size_t i = 0; i < tauUs.size(); ++i) {
            out[i] = tau_s(i);
        }
        return out;
    }

    void validate() const
    {
        const std::size_t n = tauUs.size();
        if (signal.size() != n) {
            throw ValidationError("CurveData: tau and signal columns differ in length");
        }
        if (!sigma.empty() && sigma.size() != n) {
            throw ValidationError("CurveData: sigma column length mismatch");
        }
        if (countsSignal.size() != countsReference.size() || (!countsSignal.empty() && countsSignal.size() != n)) {
            throw ValidationError("CurveData: counts column length mismatch");
        }
        for (std::size_t i = 1; i < n; ++i) {
            if (!(tauUs[i] > tauUs[i - 1])) {
                throw ValidationError("CurveData: tau must be strictly increasing (row " + std::to_string(i) + ")");
            }
        }
    }
};

}  // namespace nvcoh
