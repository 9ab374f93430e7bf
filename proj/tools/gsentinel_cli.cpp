// gsentinel: generate specimen corpora, compromise them, and score detectors.

#include "gsentinel/gsentinel.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <sstream>

namespace {

struct Options {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::string detectors;
    bool dry_run = false;
};

void add_common(CLI::App* cmd, Options& o) {
    cmd->add_option("--config", o.config, "experiment config (JSON); built-in defaults when omitted");
    cmd->add_option("--seed", o.seed, "master seed, overrides the config");
    cmd->add_option("--out", o.out, "run directory, overrides the config");
    cmd->add_option("--detectors", o.detectors, "comma-separated detector list, overrides the config");
    cmd->add_flag("--dry-run", o.dry_run, "print the plan and write nothing");
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    for (std::string item; std::getline(ss, item, ',');)
        if (!item.empty())
            out.push_back(item);
    return out;
}

gsentinel::ExperimentConfig resolve(const Options& o) {
    auto c = o.config.empty() ? gsentinel::default_config() : gsentinel::load_config(o.config);
    if (o.seed)
        c.master_seed = *o.seed;
    if (!o.out.empty())
        c.out = o.out;
    if (!o.detectors.empty())
        c.detectors = split_list(o.detectors);
    gsentinel::validate(c);
    return c;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"g-code sabotage injection and detection"};
    app.set_version_flag("--version", gsentinel::kToolVersion);
    app.require_subcommand(1);

    Options o;
    auto* generate = app.add_subcommand("generate", "write the pristine corpora");
    auto* compromise = app.add_subcommand("compromise", "copy corpora to blind directories and mutate victims");
    auto* detect = app.add_subcommand("detect", "run detectors over the blind directories");
    auto* evaluate = app.add_subcommand("evaluate", "score flags against the ground truth");
    auto* all = app.add_subcommand("run-all", "generate, compromise, detect and evaluate");
    for (auto* cmd : {generate, compromise, detect, evaluate, all})
        add_common(cmd, o);

    CLI11_PARSE(app, argc, argv);

    try {
        const auto c = resolve(o);
        if (o.dry_run) {
            gsentinel::print_plan(c, std::cout);
            return 0;
        }
        if (generate->parsed())
            gsentinel::cmd_generate(c, std::cout);
        else if (compromise->parsed())
            gsentinel::cmd_compromise(c, std::cout);
        else if (detect->parsed())
            gsentinel::cmd_detect(c, std::cout);
        else if (evaluate->parsed())
            gsentinel::cmd_evaluate(c, std::cout);
        else
            gsentinel::run_all(c, std::cout);
    } catch (const gsentinel::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
