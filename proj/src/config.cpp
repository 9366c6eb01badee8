#include "cseg/config.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "cseg/hash.hpp"

namespace cseg {

const char* arm_name(Arm arm) {
    switch (arm) {
        case Arm::fs: return "fs";
        case Arm::proposals: return "proposals";
        case Arm::curriculum: return "curriculum";
        case Arm::oracle: return "oracle";
    }
    return "?";
}

Arm parse_arm(const std::string& name) {
    if (name == "fs") return Arm::fs;
    if (name == "proposals") return Arm::proposals;
    if (name == "curriculum") return Arm::curriculum;
    if (name == "oracle") return Arm::oracle;
    throw ConfigError("arm", "unknown arm '" + name + "' (expected fs, proposals, curriculum or oracle)");
}

std::size_t ExperimentConfig::effective_last_k() const {
    if (last_k > 0) return last_k;
    return std::max<std::size_t>(1, std::min<std::size_t>(50, segmenter.epochs / 2));
}

void ExperimentConfig::validate() const {
    if (!(gamma > 0.0 && gamma < 1.0)) throw ConfigError("gamma", "must lie in (0, 1)");
    if (!(lambda >= 0.0)) throw ConfigError("lambda", "must be >= 0");
    if (!(regressor.lr > 0.0)) throw ConfigError("regressor.lr", "must be positive");
    if (!(segmenter.lr > 0.0)) throw ConfigError("segmenter.lr", "must be positive");
    if (regressor.batch == 0) throw ConfigError("regressor.batch", "must be positive");
    if (regressor.epochs == 0) throw ConfigError("regressor.epochs", "must be positive");
    if (segmenter.epochs == 0) throw ConfigError("segmenter.epochs", "must be positive");
    if (!(segmenter.beta1 >= 0.0 && segmenter.beta1 < 1.0)) throw ConfigError("segmenter.beta1", "must lie in [0, 1)");
    if (!(segmenter.beta2 >= 0.0 && segmenter.beta2 < 1.0)) throw ConfigError("segmenter.beta2", "must lie in [0, 1)");
    if (!(segmenter.eps > 0.0)) throw ConfigError("segmenter.eps", "must be positive");
    if (n_labeled == 0) throw ConfigError("n_labeled", "must be positive");
    if (validation < 2) throw ConfigError("data.validation", "need at least 2 validation samples");
    if (n_labeled + validation > total) throw ConfigError("n_labeled", "n_labeled + data.validation exceeds data.total");
    for (std::size_t n : sweep_n)
        if (n == 0 || n + validation > total) throw ConfigError("sweep.n", "entry " + std::to_string(n) + " out of range");
    if (sweep_seeds == 0) throw ConfigError("sweep.seeds", "must be positive");
    if (sweep_workers == 0) throw ConfigError("sweep.workers", "must be positive");
    try {
        data.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError("data", e.what());
    }
}

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
    errno = 0;
    char* end = nullptr;
    const double d = std::strtod(v.c_str(), &end);
    if (v.empty() || *end != '\0' || errno == ERANGE) throw ConfigError(key, "expected a real number, got '" + v + "'");
    return d;
}

std::size_t to_count(const std::string& key, const std::string& v) {
    if (v.empty() || v.find_first_not_of("0123456789") != std::string::npos) {
        throw ConfigError(key, "expected a non-negative integer, got '" + v + "'");
    }
    errno = 0;
    const unsigned long long n = std::strtoull(v.c_str(), nullptr, 10);
    if (errno == ERANGE) throw ConfigError(key, "integer out of range: '" + v + "'");
    return static_cast<std::size_t>(n);
}

std::vector<std::size_t> to_list(const std::string& key, const std::string& v) {
    std::vector<std::size_t> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(to_count(key, item));
    }
    return out;
}

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string fmt_list(const std::vector<std::size_t>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(v[i]);
    }
    return out;
}

struct Field {
    std::function<void(ExperimentConfig&, const std::string& key, const std::string&)> set;
    std::function<std::string(const ExperimentConfig&)> get;
};

#define CSEG_REAL(expr)                                                                                      \
    Field {                                                                                                  \
        [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.expr = to_double(k, v); },   \
            [](const ExperimentConfig& c) { return fmt_double(c.expr); }                                     \
    }
#define CSEG_COUNT(expr)                                                                                     \
    Field {                                                                                                  \
        [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.expr = to_count(k, v); },    \
            [](const ExperimentConfig& c) { return std::to_string(c.expr); }                                 \
    }
#define CSEG_LIST(expr)                                                                                      \
    Field {                                                                                                  \
        [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.expr = to_list(k, v); },     \
            [](const ExperimentConfig& c) { return fmt_list(c.expr); }                                       \
    }

// Ordered: this is also the canonical serialisation order.
const std::vector<std::pair<std::string, Field>>& fields() {
    static const std::vector<std::pair<std::string, Field>> table = {
        {"seed", CSEG_COUNT(seed)},
        {"n_labeled", CSEG_COUNT(n_labeled)},
        {"arm", Field{[](ExperimentConfig& c, const std::string&, const std::string& v) { c.arm = parse_arm(v); },
                      [](const ExperimentConfig& c) { return std::string(arm_name(c.arm)); }}},
        {"gamma", CSEG_REAL(gamma)},
        {"lambda", CSEG_REAL(lambda)},
        {"warmup_epochs", CSEG_COUNT(warmup_epochs)},
        {"regressor.lr", CSEG_REAL(regressor.lr)},
        {"regressor.momentum", CSEG_REAL(regressor.momentum)},
        {"regressor.weight_decay", CSEG_REAL(regressor.weight_decay)},
        {"regressor.epochs", CSEG_COUNT(regressor.epochs)},
        {"regressor.milestones", CSEG_LIST(regressor.milestones)},
        {"regressor.batch", CSEG_COUNT(regressor.batch)},
        {"regressor.reduction",
         Field{[](ExperimentConfig& c, const std::string& k, const std::string& v) {
                   if (v == "mean") c.regressor.reduction = LossReduction::mean;
                   else if (v == "sum") c.regressor.reduction = LossReduction::sum;
                   else throw ConfigError(k, "expected 'mean' or 'sum', got '" + v + "'");
               },
               [](const ExperimentConfig& c) {
                   return std::string(c.regressor.reduction == LossReduction::mean ? "mean" : "sum");
               }}},
        {"segmenter.lr", CSEG_REAL(segmenter.lr)},
        {"segmenter.beta1", CSEG_REAL(segmenter.beta1)},
        {"segmenter.beta2", CSEG_REAL(segmenter.beta2)},
        {"segmenter.eps", CSEG_REAL(segmenter.eps)},
        {"segmenter.epochs", CSEG_COUNT(segmenter.epochs)},
        {"segmenter.patience", CSEG_COUNT(segmenter.patience)},
        {"segmenter.threshold", CSEG_REAL(segmenter.threshold)},
        {"data.total", CSEG_COUNT(total)},
        {"data.validation", CSEG_COUNT(validation)},
        {"data.height", CSEG_COUNT(data.height)},
        {"data.width", CSEG_COUNT(data.width)},
        {"data.axis_min", CSEG_REAL(data.axis_min)},
        {"data.axis_max", CSEG_REAL(data.axis_max)},
        {"data.background", CSEG_REAL(data.background)},
        {"data.contrast", CSEG_REAL(data.contrast)},
        {"data.noise", CSEG_REAL(data.noise)},
        {"data.min_size", CSEG_COUNT(data.min_size)},
        {"data.contrast_jitter", CSEG_REAL(data.contrast_jitter)},
        {"data.background_jitter", CSEG_REAL(data.background_jitter)},
        {"eval.last_k", CSEG_COUNT(last_k)},
        {"sweep.n", CSEG_LIST(sweep_n)},
        {"sweep.seeds", CSEG_COUNT(sweep_seeds)},
        {"sweep.workers", CSEG_COUNT(sweep_workers)},
    };
    return table;
}

#undef CSEG_REAL
#undef CSEG_COUNT
#undef CSEG_LIST

}  // namespace

void set_config_value(ExperimentConfig& config, const std::string& key, const std::string& value) {
    for (const auto& [name, field] : fields()) {
        if (name == key) {
            field.set(config, key, value);
            return;
        }
    }
    throw ConfigError(key, "unknown configuration key");
}

ExperimentConfig parse_config(const std::string& text, ExperimentConfig base) {
    std::stringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("line " + std::to_string(lineno), "expected 'key = value', got '" + line + "'");
        }
        set_config_value(base, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    base.validate();
    return base;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config", "cannot read " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

std::string serialize_config(const ExperimentConfig& config) {
    std::string out;
    for (const auto& [name, field] : fields()) out += name + " = " + field.get(config) + "\n";
    return out;
}

std::string config_to_json(const ExperimentConfig& config) {
    nlohmann::ordered_json j;
    for (const auto& [name, field] : fields()) j[name] = field.get(config);
    return j.dump();
}

std::string config_hash(const ExperimentConfig& config) {
    Fnv1a h;
    h.add_bytes(serialize_config(config));
    return to_hex(h.value());
}

}  // namespace cseg
