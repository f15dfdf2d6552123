#include <cool/errors.hpp>
#include <cool/experiment.hpp>
#include <cool/log.hpp>

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

namespace {

enum Exit { ok = 0, config_error = 2, check_failed = 3, numerical_failure = 4 };

cool::Json load(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw cool::ConfigError("cannot open " + path);
    try {
        return cool::Json::parse(in);
    } catch (const cool::Json::parse_error& e) {
        throw cool::ConfigError(path + ": " + e.what());
    }
}

int run(const std::string& experiment, const std::string& config_path, const cool::RunContext& ctx)
{
    const auto log = cool::logger();
    try {
        const cool::RunReport report = cool::run_experiment(experiment, load(config_path), ctx);
        for (const cool::Check& c : report.checks) {
            if (c.passed) {
                log->info("check passed: {} {}", c.name, c.detail);
            } else {
                log->error("check FAILED: {} {}", c.name, c.detail);
            }
        }
        for (const auto& p : report.outputs) std::cout << p.string() << '\n';
        return report.passed() ? ok : check_failed;
    } catch (const cool::ConfigError& e) {
        log->error("{}", e.what());
        return config_error;
    } catch (const cool::ValidationError& e) {
        log->error("invalid value: {}", e.what());
        return config_error;
    } catch (const cool::Json::exception& e) {
        log->error("config: {}", e.what());
        return config_error;
    } catch (const std::filesystem::filesystem_error& e) {
        log->error("output: {}", e.what());
        return config_error;
    } catch (const std::exception& e) {
        log->error("numerical failure: {}", e.what());
        return numerical_failure;
    }
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Optimal-control and sideband cooling of a harmonic oscillator"};
    app.require_subcommand(1);

    std::string config;
    std::size_t jobs = 1;
    std::uint64_t seed = 0;
    std::string out;
    bool optimize = false;

    const std::vector<std::pair<std::string, std::string>> commands = {
        {"swap", "closed-system swap fidelity checks"},
        {"figure1", "controlled vs sideband cooling over kappa and gamma*n_T"},
        {"figure2", "single optimized pulse and its trajectory"},
        {"naux", "effect of a warm auxiliary bath"},
        {"twoaux", "one vs two auxiliary modes"},
        {"sideband", "steady-state sideband cooling curves"},
    };
    std::vector<CLI::App*> subs;
    std::vector<CLI::Option*> seed_opts, out_opts;
    for (const auto& [name, help] : commands) {
        CLI::App* sub = app.add_subcommand(name, help);
        sub->add_option("--config", config, "JSON configuration or manifest")->required()->check(CLI::ExistingFile);
        sub->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
        seed_opts.push_back(sub->add_option("--seed", seed, "override the configured seed"));
        out_opts.push_back(sub->add_option("--out", out, "override the output directory"));
        if (name == "swap") sub->add_flag("--optimize", optimize, "also search for a swap pulse");
        subs.push_back(sub);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? ok : config_error;
    }

    cool::RunContext ctx;
    ctx.jobs = jobs;
    ctx.optimize = optimize;
    for (std::size_t i = 0; i < subs.size(); ++i) {
        if (!subs[i]->parsed()) continue;
        if (seed_opts[i]->count()) ctx.seed = seed;
        if (out_opts[i]->count()) ctx.out = out;
        return run(commands[i].first, config, ctx);
    }
    return config_error;
}
