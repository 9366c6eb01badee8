#pragma once

// Synthetic stand-in for cardiac MRI slices: one bright ellipse on a noisy
// background, with its exact mask. Every sample is a pure function of
// (seed, index, GeneratorConfig).

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "cseg/image.hpp"
#include "cseg/rng.hpp"

namespace cseg {

struct GeneratorConfig {
    std::size_t height = 32;
    std::size_t width = 32;
    double axis_min = 2.0;  // semi-axis range, pixels
    double axis_max = 6.0;
    double background = 0.3;
    double contrast = 0.4;
    double noise = 0.1;
    std::size_t min_size = 8;
    /// Per-image intensity variation: contrast drawn from
    /// [contrast * (1 - contrast_jitter), contrast] and background shifted by
    /// a uniform draw in [-background_jitter, background_jitter].
    double contrast_jitter = 0.5;
    double background_jitter = 0.0;

    /// Throws std::invalid_argument when no ellipse in the axis range fits.
    void validate() const;
};

struct Sample {
    Image image;
    Mask mask;
};

Sample generate_sample(std::uint64_t seed, std::uint64_t index, const GeneratorConfig& config);

/// Pixels whose centres lie inside the ellipse with semi-axes (a, b),
/// rotated by `angle`, centred at (cy, cx) in pixel coordinates.
Mask rasterize_ellipse(std::size_t height, std::size_t width, double cy, double cx, double a, double b, double angle);

// ---------------------------------------------------------------------------
// Splits

struct SplitMembership {
    std::vector<std::size_t> labeled;
    std::vector<std::size_t> unlabeled;
    std::vector<std::size_t> validation;

    bool operator==(const SplitMembership&) const = default;
};

/// Seeded permutation of [0, total): the first n_validation indices are
/// validation, the next n_labeled labeled, the rest unlabeled. For a fixed
/// seed, the labeled set for n is a prefix of the labeled set for any n' > n.
SplitMembership make_membership(std::size_t total, std::size_t n_labeled, std::size_t n_validation, std::uint64_t seed);

struct LabeledSample {
    std::size_t id = 0;
    Image image;
    Mask mask;
};

struct UnlabeledSample {
    std::size_t id = 0;
    Image image;
};

class SplitView;

/// Labeled set S, unlabeled set U, and validation. Masks of U are kept
/// private and are only reachable through a SplitView.
class DatasetSplit {
public:
    DatasetSplit(SplitMembership membership, std::vector<LabeledSample> labeled, std::vector<UnlabeledSample> unlabeled,
                 std::vector<Mask> unlabeled_masks, std::vector<LabeledSample> validation);

    const SplitMembership& membership() const { return membership_; }
    const std::vector<LabeledSample>& labeled() const { return labeled_; }
    const std::vector<UnlabeledSample>& unlabeled() const { return unlabeled_; }
    const std::vector<LabeledSample>& validation() const { return validation_; }

    /// Validation is split 20/80: the head is used for regressor model
    /// selection, the tail for segmenter validation DSC.
    std::span<const LabeledSample> regressor_validation() const;
    std::span<const LabeledSample> segmenter_validation() const;

private:
    friend class SplitView;
    SplitMembership membership_;
    std::vector<LabeledSample> labeled_;
    std::vector<UnlabeledSample> unlabeled_;
    std::vector<Mask> unlabeled_masks_;
    std::vector<LabeledSample> validation_;
};

DatasetSplit make_split(std::size_t total, std::size_t n_labeled, std::size_t n_validation, std::uint64_t seed,
                        const GeneratorConfig& config = {});

/// Counts touching of hidden or augmented data during one training run.
struct AccessAudit {
    std::size_t unlabeled_pixel_reads = 0;
    std::size_t unlabeled_size_reads = 0;
    std::size_t augment_calls = 0;
};

enum class AccessMode { standard, oracle };

class AccessDenied : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Access-controlled window onto a DatasetSplit. Standard views cannot see
/// anything about unlabeled masks; oracle views can read their foreground
/// counts but never their pixels.
class SplitView {
public:
    SplitView(const DatasetSplit& split, AccessMode mode) : split_(&split), mode_(mode) {}

    AccessMode mode() const { return mode_; }
    const std::vector<LabeledSample>& labeled() const { return split_->labeled(); }
    const std::vector<UnlabeledSample>& unlabeled() const { return split_->unlabeled(); }
    std::span<const LabeledSample> regressor_validation() const { return split_->regressor_validation(); }
    std::span<const LabeledSample> segmenter_validation() const { return split_->segmenter_validation(); }

    /// Ground-truth foreground count of unlabeled sample i (oracle only).
    double unlabeled_size(std::size_t i);

    /// Full hidden mask of unlabeled sample i, for offline analysis. Every
    /// call is recorded as a pixel read.
    const Mask& reveal_unlabeled_mask(std::size_t i);

    AccessAudit& audit() { return audit_; }
    const AccessAudit& audit() const { return audit_; }

private:
    const DatasetSplit* split_;
    AccessMode mode_;
    AccessAudit audit_;
};

// ---------------------------------------------------------------------------
// Augmentation (size regressor only)

struct AugmentedSample {
    Image image;
    Mask mask;
    double size_target = 0.0;  // always mask.foreground_count()
};

/// Rotation about the image centre: bilinear (edge-clamped) for intensities,
/// nearest-neighbour (zero outside) for the mask.
Sample rotate(const Sample& sample, double degrees);
Sample flip_horizontal(const Sample& sample);
Sample flip_vertical(const Sample& sample);

/// Ten variants: original, h-flip, v-flip, both flips, then six rotations
/// with angles drawn uniformly from [-45, 45] degrees.
std::vector<AugmentedSample> augment(const Sample& sample, Rng& rng);

// ---------------------------------------------------------------------------
// PGM I/O and dataset dumps

void write_pgm(const std::filesystem::path& path, const Image& image);
void write_pgm(const std::filesystem::path& path, const Mask& mask);
/// Reads a P5 file; values are scaled by 1/maxval.
Image read_pgm(const std::filesystem::path& path);
Mask read_pgm_mask(const std::filesystem::path& path);

/// Writes labeled/, unlabeled/, validation/ directories of img_%05d.pgm and
/// msk_%05d.pgm (named by sample id) plus manifest.json. `config_json` is an
/// already-serialised JSON object embedded under "config".
void dump_dataset(const std::filesystem::path& dir, const DatasetSplit& split, std::uint64_t seed,
                  const std::string& config_json);

}  // namespace cseg
