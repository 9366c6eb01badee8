#include "cseg/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "cseg/hash.hpp"
#include "cseg/trainer.hpp"

namespace cseg {

DiceScore dice(const Mask& pred, const Mask& truth) {
    if (pred.height != truth.height || pred.width != truth.width) {
        throw ShapeError("dice: mask extents differ, " + std::to_string(pred.height) + "x" + std::to_string(pred.width) +
                         " vs " + std::to_string(truth.height) + "x" + std::to_string(truth.width));
    }
    std::size_t inter = 0, a = 0, b = 0;
    for (std::size_t k = 0; k < pred.labels.size(); ++k) {
        const bool p = pred.labels[k] != 0, t = truth.labels[k] != 0;
        a += p;
        b += t;
        inter += p && t;
    }
    if (a + b == 0) return DiceScore{1.0};
    return DiceScore{2.0 * static_cast<double>(inter) / static_cast<double>(a + b)};
}

MeanStd aggregate_last_k(const TrainingTrace& trace, std::size_t k) {
    if (k == 0) throw std::invalid_argument("aggregate_last_k: k must be positive");
    if (trace.records.size() < k) {
        throw std::invalid_argument("aggregate_last_k: trace has " + std::to_string(trace.records.size()) +
                                    " records, fewer than k = " + std::to_string(k));
    }
    const auto first = trace.records.end() - static_cast<long>(k);
    double sum = 0.0;
    for (auto it = first; it != trace.records.end(); ++it) sum += it->val_dsc;
    const double mean = sum / static_cast<double>(k);
    double sq = 0.0;
    for (auto it = first; it != trace.records.end(); ++it) sq += (it->val_dsc - mean) * (it->val_dsc - mean);
    return MeanStd{mean, std::sqrt(sq / static_cast<double>(k))};
}

namespace {

std::string percent(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1f", v * 100.0);
    return buf;
}

std::string exact(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

std::ofstream open_for_write(const std::filesystem::path& path) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
    out.flush();
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace

void write_table(std::ostream& out, std::vector<ResultRow> rows) {
    std::stable_sort(rows.begin(), rows.end(), [](const ResultRow& a, const ResultRow& b) {
        return a.n_labeled != b.n_labeled ? a.n_labeled < b.n_labeled : a.arm < b.arm;
    });
    out << "n,arm,mean_dsc,std_dsc,seed,config_hash\n";
    for (const auto& r : rows) {
        out << r.n_labeled << ',' << r.arm << ',' << percent(r.mean_dsc) << ',' << percent(r.std_dsc) << ',' << r.seed
            << ',' << r.config_hash << '\n';
    }
}

void emit_table(const std::vector<ResultRow>& rows, const std::filesystem::path& path) {
    auto out = open_for_write(path);
    write_table(out, rows);
    finish(out, path);
}

std::vector<ResultRow> parse_table(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != "n,arm,mean_dsc,std_dsc,seed,config_hash") {
        throw std::runtime_error("result table: missing or unexpected header");
    }
    std::vector<ResultRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto cells = split_csv(line);
        if (cells.size() != 6) throw std::runtime_error("result table: expected 6 columns in '" + line + "'");
        ResultRow r;
        r.n_labeled = std::stoul(cells[0]);
        r.arm = cells[1];
        r.mean_dsc = std::stod(cells[2]) / 100.0;
        r.std_dsc = std::stod(cells[3]) / 100.0;
        r.seed = std::stoull(cells[4]);
        r.config_hash = cells[5];
        rows.push_back(std::move(r));
    }
    return rows;
}

void write_curves(std::ostream& out, const std::map<std::string, TrainingTrace>& traces) {
    out << "arm,epoch,val_dsc\n";
    for (const auto& [arm, trace] : traces)
        for (const auto& r : trace.records) out << arm << ',' << r.epoch << ',' << exact(r.val_dsc) << '\n';
}

void emit_curves(const std::map<std::string, TrainingTrace>& traces, const std::filesystem::path& path) {
    auto out = open_for_write(path);
    write_curves(out, traces);
    finish(out, path);
}

void write_trace(std::ostream& out, const TrainingTrace& trace) {
    out << "epoch,loss_y,loss_u,loss_total,val_dsc,lr\n";
    for (const auto& r : trace.records) {
        out << r.epoch << ',' << exact(r.loss_y) << ',' << exact(r.loss_u) << ',' << exact(r.loss_total) << ','
            << exact(r.val_dsc) << ',' << exact(r.lr) << '\n';
    }
}

void emit_trace(const TrainingTrace& trace, const std::filesystem::path& path) {
    auto out = open_for_write(path);
    write_trace(out, trace);
    finish(out, path);
}

TrainingTrace parse_trace(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != "epoch,loss_y,loss_u,loss_total,val_dsc,lr") {
        throw std::runtime_error("trace: missing or unexpected header");
    }
    TrainingTrace trace;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto c = split_csv(line);
        if (c.size() != 6) throw std::runtime_error("trace: expected 6 columns in '" + line + "'");
        trace.records.push_back(
            {std::stoul(c[0]), std::stod(c[1]), std::stod(c[2]), std::stod(c[3]), std::stod(c[4]), std::stod(c[5])});
    }
    return trace;
}

std::string file_checksum(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    Fnv1a h;
    char buf[4096];
    while (in.read(buf, sizeof buf) || in.gcount() > 0) h.add_bytes(std::string_view(buf, static_cast<std::size_t>(in.gcount())));
    return to_hex(h.value());
}

}  // namespace cseg
