// mgt: scenario runner.
//
//   mgt <kind> [-f file.cfg] [--key value ...] [--set key=value ...]
//   mgt run -f file.cfg
//   mgt plotdata <run-dir>
//   mgt schema
//
// Exit status: 0 all checks passed, 1 numeric check failed or module error,
// 2 usage or configuration error.

#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "plotdata.hpp"
#include "scenario_config.hpp"
#include "scenario_runner.hpp"

namespace {

struct Overrides {
    std::string config_file;
    std::vector<std::string> sets;
    std::map<std::string, std::string> flags;
};

void add_config_options(CLI::App* sub, Overrides& o) {
    sub->add_option("-f,--config", o.config_file, "scenario config file (key = value)");
    sub->add_option("--set", o.sets, "override, key=value (repeatable)");
    for (const auto& info : mgt::cli::config_schema()) {
        if (info.key == "kind") continue;
        sub->add_option("--" + info.key, o.flags[info.key], info.help + " [default " + info.fallback + "]");
    }
}

std::map<std::string, std::string> merge(const Overrides& o, CLI::App* sub, const std::string& kind) {
    std::map<std::string, std::string> kv;
    if (!o.config_file.empty()) kv = mgt::cli::read_config_file(o.config_file);
    for (const auto& [k, v] : o.flags)
        if (sub->count("--" + k) > 0) kv[k] = v;
    for (const auto& s : o.sets) {
        const auto eq = s.find('=');
        if (eq == std::string::npos) throw mgt::cli::ConfigError("--set expects key=value, got '" + s + "'");
        kv[s.substr(0, eq)] = s.substr(eq + 1);
    }
    if (!kind.empty()) kv["kind"] = kind;
    return kv;
}

int run(const std::map<std::string, std::string>& kv) {
    const auto cfg = mgt::cli::make_config(kv);
    const auto outcome = mgt::cli::run_scenario(cfg);
    std::cout << cfg.kind << ": " << outcome.message << " (" << outcome.files.size() << " files in " << cfg.output
              << ")" << std::endl;
    for (const auto& c : outcome.checks)
        std::cout << "  " << (c.passed ? "pass" : "FAIL") << "  " << c.name << "  value=" << mgt::io::fmt(c.value)
                  << " threshold=" << mgt::io::fmt(c.threshold) << '\n';
    return outcome.status;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Moore-Gibson-Thompson boundary control workbench"};
    app.require_subcommand(1);

    std::map<std::string, Overrides> overrides;
    std::map<std::string, CLI::App*> subs;
    for (const auto& kind : mgt::cli::scenario_kinds()) {
        auto* sub = app.add_subcommand(kind, "run a " + kind + " scenario");
        add_config_options(sub, overrides[kind]);
        subs[kind] = sub;
    }
    Overrides run_over;
    auto* run_sub = app.add_subcommand("run", "run the scenario kind named in the config");
    add_config_options(run_sub, run_over);
    run_sub->add_option("--kind", run_over.flags["kind"], "scenario kind");

    std::string plot_dir;
    auto* plot_sub = app.add_subcommand("plotdata", "emit long-format plot CSVs for a finished run");
    plot_sub->add_option("run_dir", plot_dir, "run output directory")->required();

    auto* schema_sub = app.add_subcommand("schema", "print the config keys and defaults");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (schema_sub->parsed()) {
            for (const auto& info : mgt::cli::config_schema())
                std::cout << info.key << " = " << info.fallback << "    # " << info.help << '\n';
            return 0;
        }
        if (plot_sub->parsed()) {
            for (const auto& f : mgt::cli::emit_plotdata(plot_dir)) std::cout << plot_dir << "/" << f << '\n';
            return 0;
        }
        if (run_sub->parsed()) {
            auto kv = merge(run_over, run_sub, "");
            if (run_sub->count("--kind") > 0) kv["kind"] = run_over.flags["kind"];
            return run(kv);
        }
        for (const auto& [kind, sub] : subs)
            if (sub->parsed()) return run(merge(overrides[kind], sub, kind));
    } catch (const mgt::cli::ConfigError& e) {
        std::cerr << "config error: " << e.what() << std::endl;
        return 2;
    } catch (const mgt::cli::MissingArtifacts& e) {
        std::cerr << "error: " << e.what() << std::endl;
        return 1;
    } catch (const mgt::InvalidArgument& e) {
        std::cerr << "invalid input: " << e.what() << std::endl;
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << std::endl;
        return 1;
    }
    return 2;
}
