// cseg: generate data, train one arm, sweep all arms, or re-evaluate a
// checkpoint. Exit status 0 on success, 1 for configuration or usage errors,
// 2 for runtime failures; failures also print one JSON line on stderr.
#include <cstdio>
#include <fstream>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "CLI11.hpp"
#include "cseg/config.hpp"
#include "cseg/eval.hpp"
#include "cseg/runner.hpp"
#include "cseg/trainer.hpp"

using namespace cseg;
namespace fs = std::filesystem;

namespace {

int fail(int code, const std::string& kind, const std::string& message, const std::string& field = "") {
    nlohmann::ordered_json j{{"error", kind}, {"exit", code}};
    if (!field.empty()) j["field"] = field;
    j["message"] = message;
    std::cerr << j.dump() << "\n";
    return code;
}

struct Common {
    std::string config;
    std::vector<std::string> sets;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> n;
    std::optional<std::string> arm;
    std::optional<double> lambda;
    std::optional<double> gamma;
    std::string out;
};

ExperimentConfig build_config(const Common& c) {
    ExperimentConfig cfg = c.config.empty() ? ExperimentConfig{} : load_config(c.config);
    for (const auto& kv : c.sets) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw ConfigError(kv, "--set expects key=value");
        set_config_value(cfg, kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (c.seed) cfg.seed = *c.seed;
    if (c.n) cfg.n_labeled = *c.n;
    if (c.arm) cfg.arm = parse_arm(*c.arm);
    if (c.lambda) cfg.lambda = *c.lambda;
    if (c.gamma) cfg.gamma = *c.gamma;
    cfg.validate();
    return cfg;
}

fs::path out_dir(const Common& c, const std::string& verb) {
    if (!c.out.empty()) return c.out;
    if (const char* root = std::getenv("CSEG_OUT"); root && *root) return fs::path(root) / verb;
    return fs::path("runs") / verb;
}

void add_common(CLI::App* app, Common& c, bool with_arm) {
    app->add_option("--config", c.config, "key = value configuration file")->check(CLI::ExistingFile);
    app->add_option("--set", c.sets, "override one configuration key (key=value), repeatable");
    app->add_option("--seed", c.seed, "experiment seed");
    app->add_option("--n", c.n, "number of labeled images");
    if (with_arm) app->add_option("--arm", c.arm, "fs, proposals, curriculum or oracle");
    app->add_option("--lambda", c.lambda, "weight of the size penalty");
    app->add_option("--gamma", c.gamma, "relative width of the size band");
    app->add_option("--out", c.out, "output directory (default $CSEG_OUT/<verb> or runs/<verb>)");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Curriculum semi-supervised segmentation experiments on synthetic data"};
    app.require_subcommand(1);

    Common gen_opts, train_opts, sweep_opts, eval_opts;
    auto* gen = app.add_subcommand("generate", "write the synthetic dataset split to disk");
    add_common(gen, gen_opts, false);

    auto* train = app.add_subcommand("train", "train one arm and write its trace and checkpoints");
    add_common(train, train_opts, true);
    bool no_train_regressor = false;
    std::string regressor_path;
    train->add_flag("--no-train-regressor", no_train_regressor, "do not train a size regressor (curriculum needs --regressor)");
    train->add_option("--regressor", regressor_path, "pre-trained regressor checkpoint")->check(CLI::ExistingFile);

    auto* sweep = app.add_subcommand("sweep", "run every arm over sweep.n and sweep.seeds; resumable");
    add_common(sweep, sweep_opts, false);
    std::vector<std::string> sweep_arms;
    sweep->add_option("--arms", sweep_arms, "subset of arms to run")->delimiter(',');
    std::optional<std::size_t> workers;
    sweep->add_option("--workers", workers, "parallel (n, seed) groups");

    auto* eval = app.add_subcommand("eval", "recompute metrics from a checkpoint or a saved trace");
    add_common(eval, eval_opts, false);
    std::string checkpoint, trace_path;
    eval->add_option("--checkpoint", checkpoint, "segmenter checkpoint to score on the validation split")->check(CLI::ExistingFile);
    eval->add_option("--trace", trace_path, "trace CSV to aggregate over the last k epochs")->check(CLI::ExistingFile);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return fail(1, "usage", e.what());
    }

    try {
        if (*gen) {
            const ExperimentConfig cfg = build_config(gen_opts);
            const fs::path out = out_dir(gen_opts, "generate");
            const RunManifest m = run_generate(cfg, out);
            std::printf("wrote %zu files to %s (config %s)\n", m.artifacts.size(), out.c_str(), m.config_hash.c_str());
        } else if (*train) {
            const ExperimentConfig cfg = build_config(train_opts);
            const fs::path out = out_dir(train_opts, "train");
            TrainOptions opts;
            opts.train_regressor = !no_train_regressor;
            if (!regressor_path.empty()) opts.regressor = regressor_path;
            TrainSummary s;
            run_train(cfg, out, opts, &s);
            std::printf("%s n=%zu seed=%llu: mean DSC %.1f (%.1f) over the last %zu epochs, best epoch %zu -> %s\n",
                        arm_name(cfg.arm), cfg.n_labeled, static_cast<unsigned long long>(cfg.seed), s.dsc.mean * 100,
                        s.dsc.std * 100, cfg.effective_last_k(), s.best_epoch, out.c_str());
        } else if (*sweep) {
            ExperimentConfig cfg = build_config(sweep_opts);
            if (workers) cfg.sweep_workers = *workers;
            cfg.validate();
            SweepOptions opts;
            if (!sweep_arms.empty()) {
                opts.arms.clear();
                for (const auto& a : sweep_arms) opts.arms.push_back(parse_arm(a));
            }
            opts.log = [](const std::string& line) {
                std::fprintf(stderr, "%s\n", line.c_str());
            };
            const fs::path out = out_dir(sweep_opts, "sweep");
            const RunManifest m = run_sweep(cfg, out, opts);
            std::ifstream table(out / "table.csv");
            std::cout << table.rdbuf();
            std::size_t failed = 0;
            for (const auto& c : m.cells) failed += c.status != "done";
            if (failed) return fail(2, "runtime", std::to_string(failed) + " sweep cell(s) failed; see manifest.json");
        } else if (*eval) {
            const ExperimentConfig cfg = build_config(eval_opts);
            if (checkpoint.empty() && trace_path.empty()) throw UsageError("eval: pass --checkpoint and/or --trace");
            nlohmann::ordered_json j;
            if (!checkpoint.empty()) j["validation_dsc"] = evaluate_checkpoint(cfg, load_checkpoint(checkpoint));
            if (!trace_path.empty()) {
                std::ifstream in(trace_path);
                const MeanStd ms = aggregate_last_k(parse_trace(in), cfg.effective_last_k());
                j["last_k"] = cfg.effective_last_k();
                j["mean_dsc"] = ms.mean;
                j["std_dsc"] = ms.std;
            }
            std::cout << j.dump() << "\n";
        }
    } catch (const ConfigError& e) {
        return fail(1, "config", e.what(), e.field());
    } catch (const UsageError& e) {
        return fail(1, "usage", e.what());
    } catch (const std::exception& e) {
        return fail(2, "runtime", e.what());
    }
    return 0;
}
