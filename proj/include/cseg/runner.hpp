#pragma once
// Experiment plumbing shared by the command-line tool and the Python module:
// dataset dumps, single-arm runs, resumable sweeps, and their manifests.
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "cseg/config.hpp"
#include "cseg/eval.hpp"
#include "cseg/models.hpp"
#include "cseg/trainer.hpp"

namespace cseg {

/// A request that cannot run as given (bad flag combination, mismatched
/// output directory). Reported like a configuration error.
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Artifact {
    std::string path;  // relative to the run directory
    std::string checksum;
    bool operator==(const Artifact&) const = default;
};

struct SweepCell {
    std::size_t n = 0;
    std::uint64_t seed = 0;
    std::string arm;
    std::string status;  // "done" or "failed"
    double mean_dsc = 0.0;
    double std_dsc = 0.0;
    std::string error;
};

struct RunManifest {
    std::string command;
    std::string config_hash;
    std::uint64_t seed = 0;
    std::string started;
    std::string finished;
    std::vector<std::string> arms;
    std::vector<std::size_t> n_values;
    std::vector<Artifact> artifacts;
    std::vector<SweepCell> cells;

    std::string to_json() const;
    static RunManifest from_json(const std::string& text);
};

inline constexpr const char* kManifestName = "manifest.json";

void write_manifest(const std::filesystem::path& dir, const RunManifest& manifest);
RunManifest read_manifest(const std::filesystem::path& dir);
/// Empty when every listed artifact exists with its recorded checksum,
/// otherwise a description of the first problem.
std::string verify_manifest(const std::filesystem::path& dir, const RunManifest& manifest);

/// Writes the split as PGM files plus manifests under `out`.
RunManifest run_generate(const ExperimentConfig& config, const std::filesystem::path& out);

struct TrainOptions {
    bool train_regressor = true;
    std::optional<std::filesystem::path> regressor;  // pre-trained checkpoint
};

struct TrainSummary {
    MeanStd dsc;
    std::size_t best_epoch = 0;
    AccessAudit audit;
};

/// Runs config.arm at config.n_labeled; writes trace.csv, checkpoints,
/// summary.json and manifest.json.
RunManifest run_train(const ExperimentConfig& config, const std::filesystem::path& out, const TrainOptions& options = {},
                      TrainSummary* summary = nullptr);

struct SweepOptions {
    std::vector<Arm> arms{Arm::fs, Arm::proposals, Arm::curriculum, Arm::oracle};
    std::function<void(const std::string&)> log;
};

/// All arms x config.sweep_n x config.sweep_seeds seeds starting at
/// config.seed. Cells already recorded as done in an existing manifest (with
/// intact artifacts) are not recomputed. Failed cells are recorded and the
/// sweep carries on.
RunManifest run_sweep(const ExperimentConfig& config, const std::filesystem::path& out, const SweepOptions& options = {});

/// Mean DSC of a segmenter checkpoint on the config's segmenter validation set.
double evaluate_checkpoint(const ExperimentConfig& config, const ParamSet& segmenter);

void write_regressor_trace(std::ostream& out, const std::vector<RegressorEpoch>& trace);

}  // namespace cseg
