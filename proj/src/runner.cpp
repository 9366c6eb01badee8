#include "cseg/runner.hpp"

#include <algorithm>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "cseg/trainer.hpp"

namespace cseg {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

std::string utc_now() {
    const std::time_t t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string exact(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    // Write-then-rename so an interrupted run never leaves a torn file.
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
        out << text;
        out.flush();
        if (!out) throw std::runtime_error("write failed: " + tmp.string());
    }
    fs::rename(tmp, path);
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

Artifact record(const fs::path& dir, const fs::path& file) {
    return Artifact{fs::relative(file, dir).generic_string(), file_checksum(file)};
}

std::vector<std::string> arm_names(const std::vector<Arm>& arms) {
    std::vector<std::string> out;
    for (Arm a : arms) out.emplace_back(arm_name(a));
    return out;
}

RunManifest start_manifest(const std::string& command, const ExperimentConfig& config) {
    RunManifest m;
    m.command = command;
    m.config_hash = config_hash(config);
    m.seed = config.seed;
    m.started = utc_now();
    return m;
}

void save_config(const fs::path& out, const ExperimentConfig& config, RunManifest& m) {
    write_text(out / "config.cfg", serialize_config(config));
    m.artifacts.push_back(record(out, out / "config.cfg"));
}

template <typename Writer>
void emit(const fs::path& dir, const fs::path& file, RunManifest& m, Writer writer) {
    std::ostringstream s;
    writer(s);
    write_text(file, s.str());
    m.artifacts.push_back(record(dir, file));
}

}  // namespace

// ---------------------------------------------------------------------------

std::string RunManifest::to_json() const {
    ordered_json j;
    j["command"] = command;
    j["config_hash"] = config_hash;
    j["seed"] = seed;
    j["started"] = started;
    j["finished"] = finished;
    j["arms"] = arms;
    j["n"] = n_values;
    j["artifacts"] = ordered_json::array();
    for (const auto& a : artifacts) j["artifacts"].push_back({{"path", a.path}, {"checksum", a.checksum}});
    j["cells"] = ordered_json::array();
    for (const auto& c : cells) {
        ordered_json cell{{"n", c.n}, {"seed", c.seed}, {"arm", c.arm}, {"status", c.status}};
        if (c.status == "done") {
            cell["mean_dsc"] = c.mean_dsc;
            cell["std_dsc"] = c.std_dsc;
        } else {
            cell["error"] = c.error;
        }
        j["cells"].push_back(cell);
    }
    return j.dump(2) + "\n";
}

RunManifest RunManifest::from_json(const std::string& text) {
    const auto j = ordered_json::parse(text);
    RunManifest m;
    m.command = j.at("command").get<std::string>();
    m.config_hash = j.at("config_hash").get<std::string>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.started = j.at("started").get<std::string>();
    m.finished = j.at("finished").get<std::string>();
    m.arms = j.at("arms").get<std::vector<std::string>>();
    m.n_values = j.at("n").get<std::vector<std::size_t>>();
    for (const auto& a : j.at("artifacts")) m.artifacts.push_back({a.at("path"), a.at("checksum")});
    for (const auto& c : j.at("cells")) {
        SweepCell cell;
        cell.n = c.at("n");
        cell.seed = c.at("seed");
        cell.arm = c.at("arm");
        cell.status = c.at("status");
        if (cell.status == "done") {
            cell.mean_dsc = c.at("mean_dsc");
            cell.std_dsc = c.at("std_dsc");
        } else {
            cell.error = c.value("error", "");
        }
        m.cells.push_back(cell);
    }
    return m;
}

void write_manifest(const fs::path& dir, const RunManifest& manifest) { write_text(dir / kManifestName, manifest.to_json()); }

RunManifest read_manifest(const fs::path& dir) { return RunManifest::from_json(read_text(dir / kManifestName)); }

std::string verify_manifest(const fs::path& dir, const RunManifest& manifest) {
    for (const auto& a : manifest.artifacts) {
        const fs::path p = dir / a.path;
        if (!fs::exists(p)) return "missing artifact " + a.path;
        if (file_checksum(p) != a.checksum) return "checksum mismatch for " + a.path;
    }
    return "";
}

// ---------------------------------------------------------------------------

void write_regressor_trace(std::ostream& out, const std::vector<RegressorEpoch>& trace) {
    out << "epoch,train_loss,val_mse,lr\n";
    for (const auto& r : trace) out << r.epoch << ',' << exact(r.train_loss) << ',' << exact(r.val_mse) << ',' << exact(r.lr) << '\n';
}

RunManifest run_generate(const ExperimentConfig& config, const fs::path& out) {
    config.validate();
    RunManifest m = start_manifest("generate", config);
    m.n_values = {config.n_labeled};
    const DatasetSplit split = make_split(config);
    const fs::path data = out / "data";
    dump_dataset(data, split, config.seed, config_to_json(config));
    std::vector<fs::path> files;
    for (const auto& e : fs::recursive_directory_iterator(data))
        if (e.is_regular_file()) files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) m.artifacts.push_back(record(out, f));
    save_config(out, config, m);
    m.finished = utc_now();
    write_manifest(out, m);
    return m;
}

RunManifest run_train(const ExperimentConfig& config, const fs::path& out, const TrainOptions& options,
                      TrainSummary* summary) {
    config.validate();
    if (config.arm == Arm::curriculum && !options.train_regressor && !options.regressor) {
        throw UsageError("the curriculum arm needs a size regressor: pass --regressor <checkpoint> "
                         "or drop --no-train-regressor to train one first");
    }
    RunManifest m = start_manifest("train", config);
    m.arms = {arm_name(config.arm)};
    m.n_values = {config.n_labeled};

    std::optional<ParamSet> regressor;
    if (config.arm == Arm::curriculum && options.regressor) regressor = load_checkpoint(*options.regressor);

    const DatasetSplit split = make_split(config);
    const ArmResult r = run_arm(split, config, regressor ? &*regressor : nullptr);
    const MeanStd agg = aggregate_last_k(r.segmenter.trace, config.effective_last_k());

    save_config(out, config, m);
    emit(out, out / "trace.csv", m, [&](std::ostream& s) { write_trace(s, r.segmenter.trace); });
    emit(out, out / "segmenter.ckpt", m, [&](std::ostream& s) { s << encode_checkpoint(r.segmenter.params); });
    emit(out, out / "segmenter_best.ckpt", m, [&](std::ostream& s) { s << encode_checkpoint(r.segmenter.best_params); });
    if (r.regressor) {
        emit(out, out / "regressor.ckpt", m, [&](std::ostream& s) { s << encode_checkpoint(r.regressor->params); });
        emit(out, out / "regressor_trace.csv", m, [&](std::ostream& s) { write_regressor_trace(s, r.regressor->trace); });
    }
    ordered_json j;
    j["arm"] = arm_name(config.arm);
    j["n"] = config.n_labeled;
    j["seed"] = config.seed;
    j["lambda"] = config.lambda;
    j["gamma"] = config.gamma;
    j["last_k"] = config.effective_last_k();
    j["mean_dsc"] = agg.mean;
    j["std_dsc"] = agg.std;
    j["best_epoch"] = r.segmenter.best_epoch;
    j["audit"] = {{"unlabeled_pixel_reads", r.audit.unlabeled_pixel_reads},
                  {"unlabeled_size_reads", r.audit.unlabeled_size_reads},
                  {"augment_calls", r.audit.augment_calls}};
    emit(out, out / "summary.json", m, [&](std::ostream& s) { s << j.dump(2) << "\n"; });

    m.finished = utc_now();
    write_manifest(out, m);
    if (summary) *summary = TrainSummary{agg, r.segmenter.best_epoch, r.audit};
    return m;
}

double evaluate_checkpoint(const ExperimentConfig& config, const ParamSet& segmenter) {
    config.validate();
    const DatasetSplit split = make_split(config);
    return validation_dsc(segmenter, split.segmenter_validation());
}

// ---------------------------------------------------------------------------
// Sweep

namespace {

std::string cell_dir(std::size_t n, std::uint64_t seed, const std::string& arm) {
    return "cells/n" + std::to_string(n) + "/seed" + std::to_string(seed) + "/" + arm;
}

struct SweepState {
    std::mutex mu;
    fs::path out;
    RunManifest manifest;
    std::function<void(const std::string&)> log;

    void note(const std::string& line) {
        if (log) log(line);
    }

    // Replaces any earlier record of the same cell and persists the manifest.
    void commit(SweepCell cell, std::vector<Artifact> files) {
        std::lock_guard lock(mu);
        auto& cells = manifest.cells;
        std::erase_if(cells, [&](const SweepCell& c) { return c.n == cell.n && c.seed == cell.seed && c.arm == cell.arm; });
        const std::string prefix = cell_dir(cell.n, cell.seed, cell.arm) + "/";
        std::erase_if(manifest.artifacts, [&](const Artifact& a) { return a.path.rfind(prefix, 0) == 0; });
        cells.push_back(std::move(cell));
        for (auto& f : files) manifest.artifacts.push_back(std::move(f));
        write_manifest(out, manifest);
    }

    bool finished(std::size_t n, std::uint64_t seed, const std::string& arm) {
        std::lock_guard lock(mu);
        for (const auto& c : manifest.cells)
            if (c.n == n && c.seed == seed && c.arm == arm) return c.status == "done";
        return false;
    }
};

// Runs (or skips) every requested arm for one (n, seed) pair.
void run_group(SweepState& state, const ExperimentConfig& base, const std::vector<Arm>& arms, std::size_t n,
               std::uint64_t seed) {
    ExperimentConfig config = base;
    config.n_labeled = n;
    config.seed = seed;
    std::optional<DatasetSplit> split;
    std::optional<ParamSet> fs_params;

    for (Arm arm : arms) {
        const std::string name = arm_name(arm);
        const fs::path dir = state.out / cell_dir(n, seed, name);
        if (state.finished(n, seed, name)) {
            if (arm == Arm::fs) fs_params = load_checkpoint(dir / "segmenter.ckpt");
            state.note("skip  n=" + std::to_string(n) + " seed=" + std::to_string(seed) + " " + name);
            continue;
        }
        SweepCell cell{n, seed, name, "failed", 0.0, 0.0, ""};
        std::vector<Artifact> files;
        try {
            if (!split) split = make_split(config);
            config.arm = arm;
            SplitView view(*split, arm == Arm::oracle ? AccessMode::oracle : AccessMode::standard);
            SegmenterResult result;
            std::optional<RegressorResult> regressor;
            switch (arm) {
                case Arm::fs: result = train_fs(view, config); break;
                case Arm::proposals: result = train_proposals(view, config, fs_params ? &*fs_params : nullptr); break;
                case Arm::curriculum:
                    regressor = train_regressor(view, config);
                    result = train_curriculum(view, config, regressor->params);
                    break;
                case Arm::oracle: result = train_oracle(view, config); break;
            }
            if (arm == Arm::fs) fs_params = result.params;

            RunManifest scratch;
            emit(state.out, dir / "trace.csv", scratch, [&](std::ostream& s) { write_trace(s, result.trace); });
            emit(state.out, dir / "segmenter.ckpt", scratch, [&](std::ostream& s) { s << encode_checkpoint(result.params); });
            if (regressor) {
                emit(state.out, dir / "regressor.ckpt", scratch,
                     [&](std::ostream& s) { s << encode_checkpoint(regressor->params); });
            }
            files = std::move(scratch.artifacts);
            const MeanStd agg = aggregate_last_k(result.trace, config.effective_last_k());
            cell.status = "done";
            cell.mean_dsc = agg.mean;
            cell.std_dsc = agg.std;
            state.note("done  n=" + std::to_string(n) + " seed=" + std::to_string(seed) + " " + name +
                       " dsc=" + exact(agg.mean));
        } catch (const std::exception& e) {
            cell.error = e.what();
            state.note("FAIL  n=" + std::to_string(n) + " seed=" + std::to_string(seed) + " " + name + ": " + e.what());
        }
        state.commit(std::move(cell), std::move(files));
    }
}

}  // namespace

RunManifest run_sweep(const ExperimentConfig& config, const fs::path& out, const SweepOptions& options) {
    config.validate();
    if (options.arms.empty()) throw UsageError("sweep: no arms selected");
    SweepState state;
    state.out = out;
    state.log = options.log;
    state.manifest = start_manifest("sweep", config);

    if (fs::exists(out / kManifestName)) {
        RunManifest previous = read_manifest(out);
        if (previous.command != "sweep" || previous.config_hash != config_hash(config)) {
            throw UsageError("sweep: " + out.string() + " holds a different run (config hash " + previous.config_hash +
                             "); choose another --out");
        }
        // Keep only cells whose files are still intact.
        for (const auto& c : previous.cells) {
            if (c.status != "done") continue;
            const std::string prefix = cell_dir(c.n, c.seed, c.arm) + "/";
            RunManifest subset;
            for (const auto& a : previous.artifacts)
                if (a.path.rfind(prefix, 0) == 0) subset.artifacts.push_back(a);
            if (!subset.artifacts.empty() && verify_manifest(out, subset).empty()) {
                state.manifest.cells.push_back(c);
                for (auto& a : subset.artifacts) state.manifest.artifacts.push_back(a);
            }
        }
    }
    state.manifest.arms = arm_names(options.arms);
    state.manifest.n_values = config.sweep_n;
    fs::create_directories(out);
    {
        std::lock_guard lock(state.mu);
        std::erase_if(state.manifest.artifacts, [](const Artifact& a) { return a.path.rfind("cells/", 0) != 0; });
        write_text(out / "config.cfg", serialize_config(config));
        state.manifest.artifacts.push_back(record(out, out / "config.cfg"));
        write_manifest(out, state.manifest);
    }

    // FS must run before Proposals within a group so its model can be reused.
    std::vector<Arm> arms = options.arms;
    std::stable_sort(arms.begin(), arms.end(), [](Arm a, Arm b) { return a == Arm::fs && b != Arm::fs; });

    std::vector<std::pair<std::size_t, std::uint64_t>> groups;
    for (std::size_t n : config.sweep_n)
        for (std::uint64_t s = 0; s < config.sweep_seeds; ++s) groups.emplace_back(n, config.seed + s);

    std::mutex queue_mu;
    std::size_t next = 0;
    auto worker = [&] {
        for (;;) {
            std::size_t g;
            {
                std::lock_guard lock(queue_mu);
                if (next == groups.size()) return;
                g = next++;
            }
            run_group(state, config, arms, groups[g].first, groups[g].second);
        }
    };
    const std::size_t workers = std::min(config.sweep_workers, groups.size());
    if (workers <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t i = 0; i < workers; ++i) pool.emplace_back(worker);
    }

    // Aggregate: per-seed rows, and per (n, arm) means over seeds.
    std::lock_guard lock(state.mu);
    RunManifest& m = state.manifest;
    const std::string hash = m.config_hash;
    std::vector<ResultRow> per_seed, table;
    std::map<std::pair<std::size_t, std::string>, std::vector<const SweepCell*>> by_cell;
    for (const auto& c : m.cells) {
        if (c.status != "done") continue;
        per_seed.push_back({c.n, c.arm, c.mean_dsc, c.std_dsc, c.seed, hash});
        by_cell[{c.n, c.arm}].push_back(&c);
    }
    std::sort(per_seed.begin(), per_seed.end(), [](const ResultRow& a, const ResultRow& b) {
        return std::tie(a.n_labeled, a.arm, a.seed) < std::tie(b.n_labeled, b.arm, b.seed);
    });
    for (const auto& [key, cells] : by_cell) {
        double mean = 0.0, sd = 0.0;
        for (const SweepCell* c : cells) {
            mean += c->mean_dsc;
            sd += c->std_dsc;
        }
        const double k = static_cast<double>(cells.size());
        table.push_back({key.first, key.second, mean / k, sd / k, config.seed, hash});
    }
    std::erase_if(m.artifacts, [](const Artifact& a) { return a.path.rfind("cells/", 0) != 0 && a.path != "config.cfg"; });
    emit(out, out / "table.csv", m, [&](std::ostream& s) { write_table(s, table); });
    emit(out, out / "table_by_seed.csv", m, [&](std::ostream& s) { write_table(s, per_seed); });

    // Seed-averaged validation curves, one file per n.
    for (std::size_t n : config.sweep_n) {
        std::map<std::string, TrainingTrace> curves;
        std::map<std::string, std::size_t> counts;
        for (const auto& c : m.cells) {
            if (c.n != n || c.status != "done") continue;
            std::ifstream in(out / cell_dir(c.n, c.seed, c.arm) / "trace.csv");
            const TrainingTrace t = parse_trace(in);
            TrainingTrace& acc = curves[c.arm];
            if (acc.records.empty()) {
                acc = t;
                for (auto& r : acc.records) r = EpochRecord{r.epoch, 0.0, 0.0, 0.0, r.val_dsc, r.lr};
            } else {
                for (std::size_t e = 0; e < std::min(acc.records.size(), t.records.size()); ++e) acc.records[e].val_dsc += t.records[e].val_dsc;
            }
            ++counts[c.arm];
        }
        for (auto& [arm, t] : curves)
            for (auto& r : t.records) r.val_dsc /= static_cast<double>(counts[arm]);
        emit(out, out / ("curves_n" + std::to_string(n) + ".csv"), m, [&](std::ostream& s) { write_curves(s, curves); });
    }
    // Cells stay in a fixed order regardless of completion order.
    std::sort(m.cells.begin(), m.cells.end(), [](const SweepCell& a, const SweepCell& b) {
        return std::tie(a.n, a.seed, a.arm) < std::tie(b.n, b.seed, b.arm);
    });
    std::sort(m.artifacts.begin(), m.artifacts.end(), [](const Artifact& a, const Artifact& b) { return a.path < b.path; });
    m.finished = utc_now();
    write_manifest(out, m);
    return m;
}

}  // namespace cseg
