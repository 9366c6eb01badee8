#pragma once

// Training procedures: the size regressor, and the four segmenter arms
// (FS, Proposals, Curriculum, Oracle). Every run is a deterministic function
// of (config, split).

#include <cstddef>
#include <optional>
#include <vector>

#include "cseg/config.hpp"
#include "cseg/image.hpp"
#include "cseg/losses.hpp"
#include "cseg/models.hpp"
#include "cseg/synthdata.hpp"

namespace cseg {

struct EpochRecord {
    std::size_t epoch = 0;
    double loss_y = 0.0;
    double loss_u = 0.0;
    double loss_total = 0.0;
    double val_dsc = 0.0;
    double lr = 0.0;

    bool operator==(const EpochRecord&) const = default;
};

struct TrainingTrace {
    std::vector<EpochRecord> records;

    bool operator==(const TrainingTrace&) const = default;
};

struct RegressorEpoch {
    std::size_t epoch = 0;
    double train_loss = 0.0;  // mean size_mse over the augmented labeled set
    double val_mse = 0.0;     // on the regressor validation subset
    double lr = 0.0;
};

struct RegressorResult {
    ParamSet params;  // checkpoint with the best validation MSE
    ParamSet final_params;
    std::size_t best_epoch = 0;
    double best_val_mse = 0.0;
    std::vector<RegressorEpoch> trace;
};

struct SegmenterResult {
    ParamSet params;       // after the last epoch
    ParamSet best_params;  // highest validation DSC seen
    std::size_t best_epoch = 0;
    TrainingTrace trace;
    /// Fraction of unlabeled images whose soft size lies inside its band,
    /// before the first epoch and after the last (curriculum/oracle only).
    double satisfied_before = 0.0;
    double satisfied_after = 0.0;
};

/// Trains the size regressor on 10x-augmented labeled samples with SGD.
RegressorResult train_regressor(SplitView& view, const ExperimentConfig& config);

/// Labeled cross-entropy only.
SegmenterResult train_fs(SplitView& view, const ExperimentConfig& config);

/// Per-pixel argmax of the segmenter on each image; ties go to background.
std::vector<Mask> make_proposals(const ParamSet& params, const std::vector<UnlabeledSample>& images);

/// One self-training round: labeled CE plus CE on pseudo-foreground pixels
/// of FS predictions. Trains the FS model first when none is supplied.
SegmenterResult train_proposals(SplitView& view, const ExperimentConfig& config, const ParamSet* fs_params = nullptr);

/// Labeled CE plus lambda * size-band penalty against the frozen regressor.
SegmenterResult train_curriculum(SplitView& view, const ExperimentConfig& config, const ParamSet& regressor);

/// As curriculum, with bands built from the true unlabeled sizes. Needs an
/// oracle view.
SegmenterResult train_oracle(SplitView& view, const ExperimentConfig& config);

/// Shared segmenter loop. `bands` (curriculum/oracle) or `pseudo` (proposals)
/// select the unlabeled term; with neither, this is FS training.
SegmenterResult train_segmenter(SplitView& view, const ExperimentConfig& config, const std::vector<SizeBand>* bands,
                                const std::vector<Mask>* pseudo);

/// Mean per-image DSC of argmax predictions.
double validation_dsc(const ParamSet& params, std::span<const LabeledSample> samples);

/// Everything one arm run produces.
struct ArmResult {
    SegmenterResult segmenter;
    std::optional<RegressorResult> regressor;
    AccessAudit audit;
};

/// Builds the split view appropriate for config.arm and runs it end to end
/// (regressor first for curriculum, FS first for proposals). A supplied
/// regressor skips regressor training.
ArmResult run_arm(const DatasetSplit& split, const ExperimentConfig& config, const ParamSet* regressor = nullptr);

DatasetSplit make_split(const ExperimentConfig& config);

}  // namespace cseg
