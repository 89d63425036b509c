// nvcoh: simulate, fit and tabulate NV spin coherence and thermometry runs.
//
//   nvcoh simulate    --config run.json [--seed N] [--temp K] [--shots N|inf] [--out curve.tsv]
//   nvcoh fit         --data curve.tsv --model sqRelax [--out fit.tsv]
//   nvcoh sweep       --config run.json
//   nvcoh sensitivity --config configs/calibrated_sample.json
//   nvcoh budget      --config run.json [--temp K]
//
// Every command writes <out> (text) and <out>.json.  Passing an output file
// back as --config reruns the command that produced it.
//
// Exit status: 0 ok, 2 invalid config or arguments, 3 I/O or parse failure,
// 4 fit did not converge or fit quality too low.

#include "nvcoh/commands.hpp"

#include "CLI11.hpp"

#include <iostream>
#include <optional>
#include <string>
#include <utility>

namespace {

struct Overrides {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<double> temp;
    std::string shots;
    std::string model;
    std::string data;
    std::string out;
};

std::optional<std::int64_t> parse_shots(const std::string& s)
{
    if (s == "inf") {
        return std::nullopt;
    }
    std::size_t pos = 0;
    long long v = 0;
    try {
        v = std::stoll(s, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (pos != s.size() || s.empty()) {
        throw nvcoh::ValidationError("--shots expects a positive integer or 'inf', got '" + s + "'");
    }
    return v;
}

int run(const std::string& command, const Overrides& o)
{
    nvcoh::RunConfig cfg = o.config.empty() ? nvcoh::RunConfig{} : nvcoh::load_config(o.config);
    if (o.seed) {
        cfg.seed = *o.seed;
    }
    if (o.temp) {
        cfg.temperature = *o.temp;
        cfg.budgetTemperature = *o.temp;
    }
    if (!o.shots.empty()) {
        cfg.shots = parse_shots(o.shots);
    }
    if (!o.model.empty()) {
        cfg.fitModel = o.model;
    }
    if (!o.data.empty()) {
        cfg.fitData = o.data;
    }
    std::string out = o.out.empty() ? cfg.outputPath : o.out;
    if (out.empty()) {
        out = command + ".tsv";
    }

    const auto result = nvcoh::run_command(command, cfg);
    nvcoh::write_outputs(result, out);
    std::cout << command << ": wrote " << out << " and " << out << ".json\n";
    if (result.status == nvcoh::exit_code::fit_quality) {
        std::cerr << "nvcoh: fit quality check failed (" << result.record.at("result").value("status", std::string())
                  << ")\n";
    }
    return result.status;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"NV centre spin coherence simulator, fitter and thermometry tool"};
    app.require_subcommand(1);

    Overrides o;
    std::string command;
    const std::pair<const char*, const char*> commands[] = {
        {"simulate", "simulate a pulse protocol and write the curve"},
        {"fit", "fit a registered model to a curve file"},
        {"sweep", "rate and dephasing budget table over temperature"},
        {"sensitivity", "thermal sensitivity against temperature"},
        {"budget", "1/T2 budget at one temperature"},
    };
    for (const auto& [name, help] : commands) {
        auto* sub = app.add_subcommand(name, help);
        sub->add_option("--config", o.config, "JSON config, or an earlier output file to rerun");
        sub->add_option("--out", o.out, "output path (default <command>.tsv)");
        sub->add_option("--seed", o.seed, "noise seed");
        sub->add_option("--temp", o.temp, "temperature in K (protocol and budget)");
        sub->add_option("--shots", o.shots, "shots per point, or 'inf' for noiseless");
        sub->add_option("--model", o.model, "fit model name");
        sub->add_option("--data", o.data, "curve file to fit");
        sub->callback([&command, name] { command = name; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : nvcoh::exit_code::validation;
    }

    try {
        return run(command, o);
    } catch (const nvcoh::IoError& e) {
        std::cerr << "nvcoh: " << e.what() << '\n';
        return nvcoh::exit_code::io;
    } catch (const nvcoh::FitError& e) {
        std::cerr << "nvcoh: " << e.what() << '\n';
        return nvcoh::exit_code::fit_quality;
    } catch (const std::logic_error& e) {
        // ValidationError and DomainError
        std::cerr << "nvcoh: " << e.what() << '\n';
        return nvcoh::exit_code::validation;
    } catch (const std::exception& e) {
        std::cerr << "nvcoh: " << e.what() << '\n';
        return 1;
    }
}
