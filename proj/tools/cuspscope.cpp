// cuspscope: command-line front end for the analysis pipelines.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "cuspscope/cli.hpp"
#include "cuspscope/parallel.hpp"
#include "runconfig_schema.hpp"

namespace cs = cuspscope;

int main(int argc, char** argv) {
    CLI::App app{"Wavelet analysis on the position-scale half-space"};
    app.set_version_flag("--version", cs::version);
    app.require_subcommand(1);

    std::string config_path, out_dir = ".", format;
    std::int64_t seed = -1;
    int threads = 0;
    app.add_option("--config", config_path, "run configuration (JSON)");
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--seed", seed, "random seed, overrides the config")->check(CLI::NonNegativeNumber);
    app.add_option("--threads", threads, "worker threads (default: CUSPSCOPE_THREADS, then all cores)")
        ->check(CLI::NonNegativeNumber);
    app.add_option("--format", format, "output format")->check(CLI::IsMember({"json", "csv", "bin"}));
    bool print_schema = false;
    app.add_flag("--print-schema", print_schema, "print the run-config JSON schema and exit");
    for (int i = 1; i < argc; ++i)
        if (std::string(argv[i]) == "--print-schema") {
            std::cout << cs::cli::runconfig_schema;
            return 0;
        }

    const char* help[] = {"run the identity and property suites", "dump the wavelet transform of a signal",
                          "directional decay classification along parabolic paths",
                          "well-separation verdict for two region masks", "elliptic regularity gain experiment",
                          "generate a test signal"};
    std::size_t h = 0;
    for (const auto& name : cs::cli::command_names()) {
        auto* sub = app.add_subcommand(name, help[h++]);
        sub->fallthrough();
    }

    std::string command = "cuspscope";
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << cs::cli::error_json(command, "usage", e.what(), cs::cli::exit_usage).dump() << '\n';
        return cs::cli::exit_usage;
    }
    command = app.get_subcommands().front()->get_name();

    try {
        if (threads > 0) cs::set_thread_count(threads);
        auto user = cs::cli::load_config(config_path);
        cs::cli::validate_config(user, nlohmann::json::parse(cs::cli::runconfig_schema));
        std::optional<std::uint64_t> seed_override;
        if (seed >= 0) seed_override = static_cast<std::uint64_t>(seed);
        auto run = cs::cli::resolve(command, user, seed_override, format);
        auto outcome = cs::cli::execute(run, out_dir);
        for (const auto& line : outcome.summary) std::cout << line << '\n';
        for (const auto& f : outcome.files) std::cout << "wrote " << f << '\n';
        return outcome.exit_code;
    } catch (const cs::Error& e) {
        int code = cs::cli::exit_code_for(e.kind());
        std::cerr << cs::cli::error_json(command, e.kind_name(), e.what(), code).dump() << '\n';
        return code;
    } catch (const std::exception& e) {
        std::cerr << cs::cli::error_json(command, "internal", e.what(), cs::cli::exit_failure).dump() << '\n';
        return cs::cli::exit_failure;
    }
}
