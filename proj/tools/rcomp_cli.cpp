#include <CLI11.hpp>

#include <iostream>

#include "rcomp/experiments.hpp"

namespace {

int exit_code(rcomp::ErrorKind k) {
    return k == rcomp::ErrorKind::ConfigInvalid || k == rcomp::ErrorKind::ParseError ? 2 : 3;
}

void print_error(const std::string& kind, const std::string& msg) {
    rcomp::json rec = {{"error", kind}, {"message", msg}};
    std::cerr << rec.dump() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"resolvent composition experiments"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string out_dir = "out";
    int threads = 1;
    std::optional<std::uint64_t> seed;
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--threads", threads, "worker threads")->check(CLI::Range(1, 256));
    app.add_option("--seed", seed, "overrides the config seed");

    std::string config_path, expr_path, repro_id;
    auto* run = app.add_subcommand("run", "execute one experiment config");
    run->add_option("config", config_path)->required();
    auto* desc = app.add_subcommand("describe", "print an expression tree");
    desc->add_option("expr", expr_path)->required();
    auto* repro = app.add_subcommand("repro", "run the canned configs of a criterion (c1..c10 or all)");
    repro->add_option("id", repro_id)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        print_error("UsageError", e.what());
        return 2;
    }

    rcomp::RunOptions opts;
    opts.out_dir = out_dir;
    opts.threads = threads;
    opts.seed = seed;
    try {
        if (*run) {
            auto m = rcomp::run_config(rcomp::read_json_file(config_path), opts);
            std::cout << m.to_json().dump(2) << '\n';
        } else if (*desc) {
            rcomp::json j = rcomp::read_json_file(expr_path);
            std::cout << rcomp::describe(rcomp::expr_from_json(j));
        } else {
            for (const auto& m : rcomp::run_repro(repro_id, opts))
                std::cout << m.name << ' ' << m.status << '\n';
        }
    } catch (const rcomp::Error& e) {
        print_error(rcomp::error_kind_name(e.kind()), e.what());
        return exit_code(e.kind());
    } catch (const std::exception& e) {
        print_error("InternalError", e.what());
        return 3;
    }
    return 0;
}
