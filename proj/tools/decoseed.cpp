// decoseed - run decoherence scenarios from config files or named presets

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "decoseed/harness/config.hpp"
#include "decoseed/harness/run.hpp"

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw decoseed::Error(decoseed::ErrorKind::io_error, "cannot read " + path);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

} // namespace

int main(int argc, char** argv) {
    using namespace decoseed;
    CLI::App app{"Induced superselection sectors: decoherence scenario runner"};
    app.require_subcommand(0, 1);
    bool list = false;
    std::string print;
    app.add_flag("--list-presets", list, "List named presets and exit");
    app.add_option("--print-preset", print, "Print a preset config document and exit");

    auto* run = app.add_subcommand("run", "Run a scenario");
    std::string path, out_dir, oracle, preset_name;
    bool run_list = false;
    run->add_option("config", path, "Scenario config file");
    run->add_option("--output-dir", out_dir, "Output directory (overrides [output] directory)");
    run->add_option("--oracle", oracle, "Cross-check against the brute-force oracle")->check(CLI::IsMember({"on", "off"}));
    run->add_option("--preset", preset_name, "Run a named preset instead of a config file");
    run->add_flag("--list-presets", run_list, "List named presets and exit");

    CLI11_PARSE(app, argc, argv);

    try {
        if (list || run_list) {
            for (const auto& n : harness::preset_names()) std::cout << n << "\n";
            return 0;
        }
        if (!print.empty()) {
            std::cout << harness::preset_text(print);
            return 0;
        }
        if (!run->parsed()) {
            std::cout << app.help();
            return 1;
        }
        if (path.empty() == preset_name.empty()) {
            std::cerr << "error: give exactly one of <config-path> or --preset\n";
            return 2;
        }
        const harness::ScenarioConfig cfg =
            preset_name.empty() ? harness::parse_scenario(read_file(path)) : harness::preset(preset_name);
        harness::RunOptions opt;
        if (!out_dir.empty()) opt.output_dir = out_dir;
        if (!oracle.empty()) opt.oracle = oracle == "on";
        const auto r = harness::run_scenario(cfg, opt);

        std::cout << "scenario " << r.config.name << " (" << harness::to_string(r.config.model) << ")\n";
        for (const auto& c : r.checks) {
            std::cout << (c.passed ? "  PASS " : "  FAIL ") << c.name << " value=" << harness::format_double(c.value)
                      << " threshold=" << harness::format_double(c.threshold) << "\n";
        }
        if (r.oracle_deviation) std::cout << "  oracle deviation " << harness::format_double(*r.oracle_deviation) << "\n";
        for (const auto& f : r.files) std::cout << "  wrote " << r.config.directory << "/" << f << "\n";
        std::cout << "status " << r.status << "\n";
        return r.status;
    } catch (const ParseError& e) {
        std::cerr << e.what() << "\n";
        return 2;
    } catch (const ValidationError& e) {
        std::cerr << "ValidationError:\n";
        for (const auto& m : e.errors()) std::cerr << "  " << m << "\n";
        return 2;
    } catch (const Error& e) {
        std::cerr << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
