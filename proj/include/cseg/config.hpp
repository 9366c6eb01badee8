#pragma once

// Experiment configuration and its flat `section.key = value` text form.

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "cseg/synthdata.hpp"

namespace cseg {

enum class Arm { fs, proposals, curriculum, oracle };

const char* arm_name(Arm arm);
Arm parse_arm(const std::string& name);

enum class LossReduction { mean, sum };

struct RegressorSchedule {
    double lr = 1e-4;
    double momentum = 0.9;
    double weight_decay = 1e-4;
    std::size_t epochs = 200;
    std::vector<std::size_t> milestones{100, 150};
    std::size_t batch = 10;
    LossReduction reduction = LossReduction::mean;
};

struct SegmenterSchedule {
    double lr = 5e-4;
    double beta1 = 0.9;
    double beta2 = 0.99;
    double eps = 1e-8;
    std::size_t epochs = 100;
    std::size_t patience = 20;
    double threshold = 1e-4;
};

struct ExperimentConfig {
    std::uint64_t seed = 0;
    std::size_t n_labeled = 5;
    Arm arm = Arm::curriculum;
    double gamma = 0.1;
    double lambda = 0.01;
    /// Epochs of labeled-only training before the unlabeled pass starts.
    std::size_t warmup_epochs = 0;

    RegressorSchedule regressor;
    SegmenterSchedule segmenter;

    GeneratorConfig data;
    std::size_t total = 100;
    std::size_t validation = 25;

    /// Aggregation window for the reported DSC; 0 means min(50, epochs / 2).
    std::size_t last_k = 0;

    std::vector<std::size_t> sweep_n{5, 10, 20, 30, 40};
    std::size_t sweep_seeds = 3;
    std::size_t sweep_workers = 1;

    std::size_t effective_last_k() const;

    /// Throws ConfigError naming the first invalid field.
    void validate() const;
};

class ConfigError : public std::invalid_argument {
public:
    ConfigError(std::string field, const std::string& message)
        : std::invalid_argument(field + ": " + message), field_(std::move(field)) {}
    const std::string& field() const { return field_; }

private:
    std::string field_;
};

/// Parses `key = value` lines ('#' starts a comment). Unknown keys and
/// malformed values raise ConfigError. Keys not present keep their defaults.
ExperimentConfig parse_config(const std::string& text, ExperimentConfig base = {});
ExperimentConfig load_config(const std::string& path);

/// Applies a single assignment (as used by the parser and CLI overrides).
void set_config_value(ExperimentConfig& config, const std::string& key, const std::string& value);

/// Canonical text form: every key, fixed order, round-trip exact doubles.
std::string serialize_config(const ExperimentConfig& config);
std::string config_to_json(const ExperimentConfig& config);
/// FNV-1a of serialize_config(), hex.
std::string config_hash(const ExperimentConfig& config);

}  // namespace cseg
