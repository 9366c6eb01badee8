#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "cseg/image.hpp"

namespace cseg {

struct TrainingTrace;

struct DiceScore {
    double value = 0.0;
};

/// 2|A n B| / (|A| + |B|); two empty masks score 1.
DiceScore dice(const Mask& pred, const Mask& truth);

struct MeanStd {
    double mean = 0.0;
    double std = 0.0;  // population
};

/// Mean and population std of val_dsc over the last k records.
MeanStd aggregate_last_k(const TrainingTrace& trace, std::size_t k);

struct ResultRow {
    std::size_t n_labeled = 0;
    std::string arm;
    double mean_dsc = 0.0;  // in [0, 1]
    double std_dsc = 0.0;
    std::uint64_t seed = 0;
    std::string config_hash;

    bool operator==(const ResultRow&) const = default;
};

/// Header `n,arm,mean_dsc,std_dsc,seed,config_hash`; rows sorted by (n, arm);
/// DSC written as percentages with one decimal.
void write_table(std::ostream& out, std::vector<ResultRow> rows);
void emit_table(const std::vector<ResultRow>& rows, const std::filesystem::path& path);
/// Inverse of write_table (DSC converted back to [0, 1]).
std::vector<ResultRow> parse_table(std::istream& in);

/// Long format: `arm,epoch,val_dsc`.
void write_curves(std::ostream& out, const std::map<std::string, TrainingTrace>& traces);
void emit_curves(const std::map<std::string, TrainingTrace>& traces, const std::filesystem::path& path);

/// `epoch,loss_y,loss_u,loss_total,val_dsc,lr`, doubles printed round-trip exact.
void write_trace(std::ostream& out, const TrainingTrace& trace);
void emit_trace(const TrainingTrace& trace, const std::filesystem::path& path);
TrainingTrace parse_trace(std::istream& in);

/// FNV-1a of a file's bytes, hex.
std::string file_checksum(const std::filesystem::path& path);

}  // namespace cseg
