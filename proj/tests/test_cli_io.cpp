#include "catch_amalgamated.hpp"

#include "nvcoh/commands.hpp"

#include <bit>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include <sys/wait.h>

using namespace nvcoh;
using Catch::Approx;
namespace fs = std::filesystem;

namespace {

const fs::path kWork = NVCOH_WORK_DIR;

fs::path work(const std::string& name)
{
    fs::create_directories(kWork);
    return kWork / name;
}

void write_file(const fs::path& p, const std::string& text)
{
    std::ofstream(p, std::ios::binary) << text;
}

RunConfig parse(const std::string& text) { return config_from_json(Json::parse(text)); }

int cli(const std::string& args)
{
    const std::string cmd = std::string(NVCOH_CLI) + " " + args + " > /dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::vector<std::vector<std::string>> data_rows(const std::string& text)
{
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(text);
    std::string line;
    bool header = true;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') {
            continue;
        }
        if (header) {
            header = false;
            continue;
        }
        std::vector<std::string> f;
        std::istringstream ls(line);
        std::string tok;
        while (std::getline(ls, tok, '\t')) {
            f.push_back(tok);
        }
        rows.push_back(f);
    }
    return rows;
}

}  // namespace

TEST_CASE("config parsing is strict", "[config]")
{
    REQUIRE_NOTHROW(parse("{}").validate());
    REQUIRE_THROWS_AS(parse(R"({"bogus": 1})"), ValidationError);
    REQUIRE_THROWS_AS(parse(R"({"sample": {"nitrogen_ppm": 125}})"), ValidationError);
    REQUIRE_THROWS_AS(parse(R"({"protocol": {"tau_grid": {"start_us": 0, "step_us": 1}}})"), ValidationError);
    REQUIRE_THROWS_AS(parse(R"({"sample": {"nitrogen_ppb": "many"}})"), ValidationError);
    REQUIRE_THROWS_AS(parse(R"({"protocol": {"seed": -3}})"), ValidationError);
    REQUIRE_THROWS_AS(parse(R"({"protocol": {"shots": "lots"}})"), ValidationError);
    REQUIRE_THROWS_AS(parse(R"({"protocol": {"tau_us": [0, 1], "tau_grid": {}}})"), ValidationError);
    REQUIRE_THROWS_AS(parse(R"({"calibration": {}})"), ValidationError);

    try {
        parse(R"({"coherence": {"tte": 4}})");
        FAIL("unknown key accepted");
    } catch (const ValidationError& e) {
        REQUIRE(std::string(e.what()).find("coherence.tte") != std::string::npos);
    }

    SECTION("out-of-range values fail validation")
    {
        for (const char* bad : {R"({"sweep": {"t_min_k": 600, "t_max_k": 300}})", R"({"sweep": {"steps": 0}})",
                                R"({"coherence": {"polarization": 1.5}})", R"({"readout": {"p0": 1, "p1": 2}})",
                                R"({"protocol": {"name": "spinLock"}})", R"({"protocol": {"shots": 0}})",
                                R"({"protocol": {"tau_us": [0, 2, 1]}})", R"({"fit": {"model": "lorentzian"}})",
                                R"({"sample": {"c13_fraction": 2}})",
                                R"({"calibration": {"anchors": [{"temperature_k": 300, "d_hz": 2.87e9},
                                                                {"temperature_k": 400, "d_hz": 2.88e9}]}})"}) {
            INFO(bad);
            REQUIRE_THROWS_AS(parse(bad).validate(), ValidationError);
        }
    }

    SECTION("shots accept integers and inf")
    {
        REQUIRE(parse(R"({"protocol": {"shots": 100000}})").shots == 100000);
        REQUIRE_FALSE(parse(R"({"protocol": {"shots": "inf"}})").shots.has_value());
    }
}

TEST_CASE("resolved config round trips exactly", "[config]")
{
    const auto calibrated = load_config(std::string(NVCOH_SOURCE_DIR) + "/configs/calibrated_sample.json");
    const auto def = load_config(std::string(NVCOH_SOURCE_DIR) + "/configs/default.json");
    for (const auto* cfg : {&calibrated, &def}) {
        cfg->validate();
        const auto once = to_json(*cfg).dump();
        const auto twice = to_json(config_from_json(Json::parse(once))).dump();
        REQUIRE(once == twice);
    }
    REQUIRE(to_json(def).dump() == to_json(RunConfig{}).dump());

    auto withOut = parse(R"({"output": {"path": "x.tsv"}})");
    REQUIRE(withOut.outputPath == "x.tsv");
    REQUIRE_FALSE(to_json(withOut).contains("output"));
}

TEST_CASE("config can be recovered from outputs", "[config]")
{
    RunConfig cfg;
    cfg.seed = 77;
    cfg.temperature = 412.5;
    const auto out = run_sweep(cfg);
    const auto fromText = config_from_text(out.text);
    const auto fromRecord = config_from_text(out.record.dump(2));
    REQUIRE(fromText.seed == 77);
    REQUIRE(to_json(fromText) == to_json(cfg));
    REQUIRE(to_json(fromRecord) == to_json(cfg));
    REQUIRE_THROWS_AS(config_from_text("tau_us\tsignal\n0\t1\n"), ParseError);
    REQUIRE_THROWS_AS(config_from_text("{\"sample\": "), ParseError);
}

TEST_CASE("curve ingestion", "[io]")
{
    SECTION("two-column file, sigma absent")
    {
        std::istringstream in("# protocol=ramsey\n# temperature_k=300\n# note=hello\ntau_us\tsignal\n0\t1\n1.5\t0.5\n");
        const auto c = read_curve(in);
        REQUIRE(c.size() == 2);
        REQUIRE_FALSE(c.has_sigma());
        REQUIRE(c.protocol == "ramsey");
        REQUIRE(c.temperature == 300.0);
        REQUIRE(c.metadata.at("note") == "hello");
        REQUIRE(c.tauUs[1] == 1.5);
    }
    SECTION("comma and whitespace delimiters")
    {
        std::istringstream comma("tau_us,signal,sigma\n0,1,0.1\n2,0.25,0.1\n");
        REQUIRE(read_curve(comma).sigma == std::vector<double>{0.1, 0.1});
        std::istringstream ws("tau_us   signal\n  0   1\n 3  -2e-1\n");
        REQUIRE(read_curve(ws).signal.back() == -0.2);
    }
    SECTION("errors name the line")
    {
        const auto message = [](const std::string& text) {
            std::istringstream in(text);
            try {
                (void)read_curve(in);
            } catch (const ParseError& e) {
                return std::string(e.what());
            }
            return std::string("no error");
        };
        REQUIRE(message("# a=b\ntau_us\tsignal\n0\t1\n2\t1\n1\t1\n").find("line 5") != std::string::npos);
        REQUIRE(message("tau_us\tsignal\n0\t1\n1\tabc\n").find("line 3") != std::string::npos);
        REQUIRE(message("tau_us\tsignal\n0\t1\n1\t2\t3\n").find("line 3") != std::string::npos);
        REQUIRE(message("tau\tsignal\n0\t1\n").find("line 1") != std::string::npos);
        REQUIRE(message("signal\tsigma\n0\t1\n").find("tau_us") != std::string::npos);
        REQUIRE(message("") != "no error");
        REQUIRE(message("# only=comments\n") != "no error");
        REQUIRE(message("tau_us\tsignal\n") != "no error");
    }
    SECTION("file errors")
    {
        REQUIRE_THROWS_AS(ingest_curve(work("does_not_exist.tsv").string()), IoError);
        write_file(work("empty.tsv"), "");
        REQUIRE_THROWS_AS(ingest_curve(work("empty.tsv").string()), ParseError);
    }
}

TEST_CASE("write then read is lossless", "[io][property]")
{
    std::mt19937_64 gen(2024);
    std::uniform_int_distribution<std::uint64_t> bits;
    std::uniform_real_distribution<double> step(1e-9, 1e3);
    for (int trial = 0; trial < 50; ++trial) {
        CurveData c;
        c.protocol = "hahnEcho";
        c.temperature = 273.15 + trial;
        c.seed = bits(gen);
        c.shots = trial % 2 ? std::optional<std::int64_t>(100000) : std::nullopt;
        double t = 0.0;
        for (int i = 0; i < 40; ++i) {
            t += step(gen);
            c.tauUs.push_back(t);
            double v = 0.0;
            do {
                v = std::bit_cast<double>(bits(gen));
            } while (!std::isfinite(v));
            c.signal.push_back(v);
            c.sigma.push_back(std::abs(v) * 1e-3);
            c.countsSignal.push_back(static_cast<double>(i * 17));
            c.countsReference.push_back(static_cast<double>(i * 19));
        }
        std::stringstream ss;
        write_curve(ss, c);
        const auto back = read_curve(ss);
        REQUIRE(back.tauUs == c.tauUs);
        REQUIRE(back.signal == c.signal);
        REQUIRE(back.sigma == c.sigma);
        REQUIRE(back.countsSignal == c.countsSignal);
        REQUIRE(back.countsReference == c.countsReference);
        REQUIRE(back.seed == c.seed);
        REQUIRE(back.shots == c.shots);
        REQUIRE(back.temperature == c.temperature);
        REQUIRE(back.protocol == c.protocol);
    }
}

TEST_CASE("simulate command", "[commands]")
{
    RunConfig cfg;
    SECTION("sqRelax at 300 K follows exp(-343.9 tau)")
    {
        const double threeOmega = 4.4e-11 * std::pow(300.0, 5) + 237.0;
        REQUIRE(threeOmega == Approx(343.9).epsilon(1e-3));
        const auto out = run_simulate(cfg);
        std::istringstream in(out.text);
        const auto c = read_curve(in);
        REQUIRE(c.size() == 101);
        for (std::size_t i = 0; i < c.size(); ++i) {
            REQUIRE(c.signal[i] == Approx(std::exp(-threeOmega * c.tau_s(i))).margin(1e-9));
        }
    }
    SECTION("single-point grid")
    {
        cfg.tauGrid.reset();
        cfg.tauUs = {5.0};
        std::istringstream in(run_simulate(cfg).text);
        REQUIRE(read_curve(in).size() == 1);
    }
    SECTION("same config and seed give identical files")
    {
        cfg.shots = 1000;
        cfg.seed = 9;
        const auto a = run_simulate(cfg);
        const auto b = run_simulate(cfg);
        REQUIRE(a.text == b.text);
        REQUIRE(a.record.dump() == b.record.dump());
        cfg.seed = 10;
        REQUIRE(run_simulate(cfg).text != a.text);
    }
}

TEST_CASE("simulate then fit recovers Omega", "[commands]")
{
    RunConfig cfg;
    const auto sim = run_simulate(cfg);
    const auto data = work("sq_noiseless.tsv");
    write_outputs(sim, data.string());

    cfg.fitData = data.string();
    cfg.fitModel = "sqRelax";
    const auto fit = run_fit(cfg);
    REQUIRE(fit.status == exit_code::ok);
    const auto& params = fit.record.at("result").at("parameters");
    const double omega = (4.4e-11 * std::pow(300.0, 5) + 237.0) / 3.0;
    bool found = false;
    for (const auto& p : params) {
        if (p.at("name") == "omega") {
            REQUIRE(p.at("value").get<double>() == Approx(omega).epsilon(0.01));
            found = true;
        }
    }
    REQUIRE(found);
    REQUIRE(fit.text.find("# converged=true") != std::string::npos);

    SECTION("dqRelax with a known Omega reports gamma")
    {
        RunConfig dq;
        dq.protocol = "dqRelax";
        write_outputs(run_simulate(dq), work("dq.tsv").string());
        dq.fitData = work("dq.tsv").string();
        dq.fitModel = "dqRelax";
        dq.fitOmega = omega;
        const auto r = run_fit(dq);
        REQUIRE(r.status == exit_code::ok);
        const double gamma = 0.85e-11 * std::pow(300.0, 5) + 215.0;
        REQUIRE(r.record.at("result").at("parameters").back().at("value").get<double>() ==
                Approx(gamma).epsilon(0.01));
    }
}

TEST_CASE("mismatched model is a fit-quality failure", "[commands]")
{
    RunConfig cfg;
    write_outputs(run_simulate(cfg), work("sq_for_mismatch.tsv").string());
    cfg.fitData = work("sq_for_mismatch.tsv").string();
    cfg.fitModel = "decayingCosine";
    const auto r = run_fit(cfg);
    REQUIRE(r.status == exit_code::fit_quality);
    REQUIRE(r.record.at("result").at("converged") == false);
    REQUIRE(r.text.find("# converged=false") != std::string::npos);
}

TEST_CASE("noisy data are judged by chi-square", "[commands]")
{
    auto cfg = load_config(std::string(NVCOH_SOURCE_DIR) + "/configs/calibrated_sample.json");
    cfg.shots = 10000;
    cfg.seed = 5;
    write_outputs(run_simulate(cfg), work("te_noisy.tsv").string());
    cfg.fitData = work("te_noisy.tsv").string();

    cfg.fitModel = "decayingCosine";
    const auto good = run_fit(cfg);
    REQUIRE(good.record.at("result").at("r_squared").get<double>() < min_r_squared);
    REQUIRE(good.status == exit_code::ok);

    cfg.fitModel = "sqRelax";
    const auto bad = run_fit(cfg);
    REQUIRE(bad.status == exit_code::fit_quality);
    REQUIRE(bad.text.find("# acceptable=false") != std::string::npos);
}

TEST_CASE("sweep command", "[commands]")
{
    RunConfig cfg;
    cfg.sweep = {300.0, 600.0, 1};
    cfg.measuredT2Us = {{300.0, 184.0}, {600.0, 30.0}};
    const auto out = run_sweep(cfg);
    const auto rows = data_rows(out.text);
    REQUIRE(rows.size() == 2);
    REQUIRE(std::stod(rows[0][1]) == Approx(343.9).epsilon(1e-3));
    REQUIRE(std::stod(rows[1][1]) == Approx(3658.0).epsilon(1e-3));
    for (const auto& r : rows) {
        const double sum = std::stod(r[4]) + std::stod(r[5]) + std::stod(r[6]) + std::stod(r[7]);
        const double total = std::stod(r[8]);
        REQUIRE(std::abs(sum - total) <= 1e-12 * total);
        REQUIRE(r[9] == "1");
    }
    REQUIRE(std::stod(rows[1][8]) == Approx(1.0 / 30e-6).epsilon(1e-12));

    cfg.measuredT2Us.clear();
    for (const auto& r : data_rows(run_sweep(cfg).text)) {
        REQUIRE(std::stod(r[7]) == 0.0);
        REQUIRE(r[9] == "0");
    }
}

TEST_CASE("sensitivity command", "[commands]")
{
    SECTION("constant slope and contrast give a flat curve")
    {
        RunConfig cfg;
        cfg.readout.contrastTemp.fadePerKelvin = 0.0;
        const auto rows = data_rows(run_sensitivity(cfg).text);
        REQUIRE(rows.size() == 31);
        for (const auto& r : rows) {
            REQUIRE(std::stod(r[1]) == Approx(std::stod(rows[0][1])).epsilon(1e-12));
        }
    }
    SECTION("report temperature outside the calibration is a domain error")
    {
        RunConfig cfg;
        cfg.reportTemperature = 700.0;
        REQUIRE_THROWS_AS(run_sensitivity(cfg), DomainError);
    }
}

TEST_CASE("budget command", "[commands]")
{
    RunConfig cfg;
    cfg.budgetMeasuredInvT2 = 33333.0;
    const auto r = run_budget(cfg);
    const auto& comp = r.record.at("budget").at("components_per_s");
    const double sum = comp.at("lifetime").get<double>() + comp.at("p1_sl").get<double>() +
                       comp.at("c13_ss").get<double>() + comp.at("residual_others").get<double>();
    REQUIRE(sum == Approx(33333.0).epsilon(1e-14));
    REQUIRE(comp.at("total_inv_t2").get<double>() == 33333.0);
}

TEST_CASE("cli exit codes", "[cli]")
{
    const std::string cfgPath = std::string(NVCOH_SOURCE_DIR) + "/configs/default.json";
    const auto out = [](const std::string& name) { return " --out " + work(name).string(); };

    REQUIRE(cli("sweep --config " + cfgPath + out("ok.tsv")) == exit_code::ok);
    REQUIRE(fs::exists(work("ok.tsv.json")));

    write_file(work("empty_data.tsv"), "");
    REQUIRE(cli("fit --data " + work("empty_data.tsv").string() + out("fit_empty.tsv")) == exit_code::io);
    REQUIRE(cli("fit --data " + work("missing.tsv").string() + out("fit_missing.tsv")) == exit_code::io);

    REQUIRE(cli("simulate" + out("sq.tsv")) == exit_code::ok);
    REQUIRE(cli("fit --data " + work("sq.tsv").string() + " --model sqRelax" + out("fit_ok.tsv")) == exit_code::ok);
    REQUIRE(cli("fit --data " + work("sq.tsv").string() + " --model ramsey" + out("fit_bad.tsv")) ==
            exit_code::fit_quality);
    REQUIRE(fs::exists(work("fit_bad.tsv")));

    write_file(work("bad_key.json"), R"({"sweep": {"tmin": 1}})");
    REQUIRE(cli("sweep --config " + work("bad_key.json").string() + out("x.tsv")) == exit_code::validation);
    write_file(work("bad_json.json"), R"({"sweep": )");
    REQUIRE(cli("sweep --config " + work("bad_json.json").string() + out("x.tsv")) == exit_code::io);
    REQUIRE(cli("simulate --shots many" + out("x.tsv")) == exit_code::validation);
    REQUIRE(cli("simulate --temp -5" + out("x.tsv")) == exit_code::validation);
    REQUIRE(cli("simulate --no-such-flag") == exit_code::validation);
    REQUIRE(cli("") == exit_code::validation);
}
