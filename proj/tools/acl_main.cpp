// Command-line front end: train / eval / simulate / gradcheck / report.
// Exit code 0 on success, 1 with a message on stderr on any error (gradcheck
// additionally exits 1 when the check itself fails).

#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "acl/csv.hpp"
#include "acl/error.hpp"
#include "acl/harness.hpp"
#include "vendor/CLI11.hpp"

namespace {

// Config file first, then repeatable --set key=value, then --seed/--out.
acl::ExperimentConfig assemble_config(const std::string& config_path,
                                      const std::vector<std::string>& sets,
                                      bool has_seed, std::uint64_t seed,
                                      const std::string& out_dir) {
    std::map<std::string, std::string> kv;
    acl::ExperimentConfig cfg;
    if (!config_path.empty()) {
        cfg = acl::config_from_file(config_path);
        kv = acl::config_to_map(cfg);
    }
    for (const std::string& s : sets) {
        const std::size_t eq = s.find('=');
        if (eq == std::string::npos || eq == 0)
            throw acl::ParseError("--set expects key=value, got '" + s + "'");
        kv[s.substr(0, eq)] = s.substr(eq + 1);
    }
    if (has_seed) kv["seed"] = std::to_string(seed);
    if (!out_dir.empty()) kv["out"] = out_dir;
    return acl::config_from_map(kv);
}

int cmd_train(const acl::ExperimentConfig& cfg) {
    acl::ExperimentResult res = acl::run_experiment(cfg, &std::cerr);
    for (const acl::MetricRow& r : res.rows)
        std::cout << r.split << " " << r.metric << " = " << acl::fmt_g(r.value)
                  << "\n";
    std::cout << "history:    " << res.history_path << "\n"
              << "report:     " << res.report_path << "\n"
              << "checkpoint: " << res.checkpoint_path << "\n";
    return 0;
}

int cmd_eval(const std::string& checkpoint, const std::string& out_dir) {
    acl::Checkpoint ck = acl::load_checkpoint(checkpoint);
    acl::ExperimentResult res = acl::evaluate_checkpoint(ck, out_dir);
    for (const acl::MetricRow& r : res.rows)
        std::cout << r.split << " " << r.metric << " = " << acl::fmt_g(r.value)
                  << "\n";
    std::cout << "report: " << res.report_path << "\n";
    return 0;
}

int cmd_simulate(const acl::ExperimentConfig& cfg, int count,
                 const std::string& out_file) {
    if (out_file.empty()) {
        acl::dump_simulator_samples(cfg, count, std::cout);
        return 0;
    }
    std::ofstream out(out_file, std::ios::binary);
    if (!out) throw acl::ConfigError("cannot write " + out_file);
    acl::dump_simulator_samples(cfg, count, out);
    return 0;
}

int cmd_gradcheck(const acl::GradcheckConfig& gc) {
    acl::GradcheckReport rep = acl::run_gradcheck(gc, std::cout);
    return rep.pass ? 0 : 1;
}

int cmd_report(const std::vector<std::string>& files,
               const std::string& out_file) {
    if (out_file.empty()) {
        acl::aggregate_reports(files, std::cout);
        return 0;
    }
    std::ofstream out(out_file, std::ios::binary);
    if (!out) throw acl::ConfigError("cannot write " + out_file);
    acl::aggregate_reports(files, out);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Adversarial constraint learning experiments"};
    app.require_subcommand(1);

    std::string config_path, out_dir, checkpoint, out_file;
    std::vector<std::string> sets, report_files;
    std::uint64_t seed = 0;
    int count = 100;
    acl::GradcheckConfig gc;

    auto add_config_flags = [&](CLI::App* cmd) {
        cmd->add_option("-c,--config", config_path,
                        "key=value config file (defaults: pendulum, ACL)");
        cmd->add_option("--set", sets,
                        "override one config key, e.g. --set mode=SSACL");
        cmd->add_option("--seed", seed, "experiment seed");
        cmd->add_option("--out", out_dir, "output directory");
    };

    CLI::App* train = app.add_subcommand(
        "train", "train a predictor and write history/report/checkpoint");
    add_config_flags(train);

    CLI::App* eval = app.add_subcommand(
        "eval", "re-evaluate a checkpoint on its rebuilt dataset");
    eval->add_option("--checkpoint", checkpoint, "checkpoint.json path")
        ->required();
    eval->add_option("--out", out_dir, "output directory")->default_val(".");

    CLI::App* simulate = app.add_subcommand(
        "simulate", "dump label-simulator samples as CSV");
    add_config_flags(simulate);
    simulate->add_option("-n,--count", count, "samples to draw")
        ->check(CLI::PositiveNumber);
    simulate->add_option("--file", out_file, "write here instead of stdout");

    CLI::App* gradcheck = app.add_subcommand(
        "gradcheck", "finite-difference check of every loss gradient");
    gradcheck->add_option("--seeds", gc.seeds, "random restarts");
    gradcheck->add_option("--hidden", gc.hidden, "hidden width");
    gradcheck->add_option("--batch", gc.batch, "batch rows");
    gradcheck->add_option("--step", gc.step, "finite-difference step");
    gradcheck->add_option("--tol", gc.tol, "relative-error tolerance");
    gradcheck->add_option("--lambda", gc.lambda, "gradient-penalty weight");
    gradcheck->add_option("--seed", gc.seed, "base seed");

    CLI::App* report = app.add_subcommand(
        "report", "aggregate report.csv files into mean/stddev rows");
    report->add_option("files", report_files, "report.csv paths")
        ->required()
        ->expected(-1);
    report->add_option("--file", out_file, "write here instead of stdout");

    CLI11_PARSE(app, argc, argv);

    try {
        if (train->parsed())
            return cmd_train(assemble_config(config_path, sets,
                                             train->count("--seed") > 0, seed,
                                             out_dir));
        if (eval->parsed()) return cmd_eval(checkpoint, out_dir);
        if (simulate->parsed())
            return cmd_simulate(
                assemble_config(config_path, sets,
                                simulate->count("--seed") > 0, seed, out_dir),
                count, out_file);
        if (gradcheck->parsed()) return cmd_gradcheck(gc);
        if (report->parsed()) return cmd_report(report_files, out_file);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
