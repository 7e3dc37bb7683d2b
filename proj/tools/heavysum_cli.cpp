#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <string>

#include "heavysum/errors.hpp"
#include "heavysum/experiment.hpp"
#include "heavysum/parallel.hpp"

namespace {

struct Options {
    std::string config;
    std::uint64_t seed = 0;
    int workers = 0;
    std::string out;
    bool quiet = false;
};

void print_report(const heavysum::Report& r) {
    for (const auto& row : r.rows) {
        if (row.type == "info") {
            std::printf("  %-48s %-10s value=%.6g\n", row.name.c_str(), "info", row.mc);
        } else if (row.type == "mc") {
            std::printf("  %-48s %-10s analytic=%.6g mc=%.6g se=%.3g z=%+.2f %s\n", row.name.c_str(), "mc",
                        row.analytic, row.mc, row.std_error, row.z, row.pass ? "PASS" : "FAIL");
        } else {
            std::printf("  %-48s %-10s analytic=%.6g value=%.6g diff=%.3g tol=%.3g %s\n", row.name.c_str(),
                        row.type.c_str(), row.analytic, row.mc, row.diff, row.tol, row.pass ? "PASS" : "FAIL");
        }
    }
    std::printf("%s: %s\n", r.name.c_str(), r.all_pass() ? "PASS" : "FAIL");
}

int run(const std::string& kind, const Options& opt, CLI::App& sub) {
    heavysum::ExperimentConfig cfg = heavysum::load_config(opt.config);
    if (cfg.kind != kind) {
        throw heavysum::ConfigError("config kind '" + cfg.kind + "' does not match subcommand '" + kind + "'");
    }
    if (sub.count("--seed")) {
        cfg.seed = opt.seed;
    }
    if (sub.count("--out")) {
        cfg.out_dir = opt.out;
    }
    cfg.workers = heavysum::resolve_workers(sub.count("--workers") ? opt.workers : cfg.workers);
    const heavysum::Report report = heavysum::run_experiment(cfg);
    if (!opt.quiet) {
        print_report(report);
    }
    return report.all_pass() ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"heavysum: heavy-tailed sums, maxima and self-normalized statistics"};
    app.require_subcommand(1);
    Options opt;
    const char* kinds[][2] = {{"simulate", "simulate paths and per-replica statistics"},
                              {"limit", "draw from the limit law by LePage series"},
                              {"transform", "evaluate limit transforms on a grid"},
                              {"verify", "compare Monte Carlo statistics with analytic oracles"},
                              {"diagnose", "coupling decay and anti-clustering diagnostics"}};
    for (const auto& k : kinds) {
        CLI::App* sub = app.add_subcommand(k[0], k[1]);
        sub->add_option("--config", opt.config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
        sub->add_option("--seed", opt.seed, "override the config seed");
        sub->add_option("--workers", opt.workers, "worker threads (HEAVYSUM_WORKERS overrides)")
            ->check(CLI::PositiveNumber);
        sub->add_option("--out", opt.out, "output root; artifacts go to <out>/<name>/");
        sub->add_flag("--quiet", opt.quiet, "suppress the report table");
    }
    CLI11_PARSE(app, argc, argv);
    try {
        for (CLI::App* sub : app.get_subcommands()) {
            return run(sub->get_name(), opt, *sub);
        }
    } catch (const heavysum::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
    return 2;
}
