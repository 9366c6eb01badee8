#include "cseg/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

#include <nlohmann/json.hpp>

namespace cseg {

void GeneratorConfig::validate() const {
    if (height == 0 || width == 0) throw std::invalid_argument("data: image extents must be positive");
    if (height % 4 != 0 || width % 4 != 0) throw std::invalid_argument("data: height and width must be divisible by 4");
    if (!(axis_min > 0.0) || !(axis_max >= axis_min)) {
        throw std::invalid_argument("data: need 0 < axis_min <= axis_max");
    }
    if (2.0 * axis_max > static_cast<double>(std::min(height, width))) {
        throw std::invalid_argument("data: ellipse with semi-axis " + std::to_string(axis_max) + " cannot fit in a " +
                                    std::to_string(height) + "x" + std::to_string(width) + " frame");
    }
    if (static_cast<double>(min_size) > std::numbers::pi * axis_max * axis_max) {
        throw std::invalid_argument("data: min_size exceeds the largest ellipse area");
    }
    if (noise < 0.0) throw std::invalid_argument("data: noise must be non-negative");
    if (!(contrast_jitter >= 0.0 && contrast_jitter <= 1.0)) throw std::invalid_argument("data: contrast_jitter must lie in [0, 1]");
    if (!(background_jitter >= 0.0)) throw std::invalid_argument("data: background_jitter must be non-negative");
}

Mask rasterize_ellipse(std::size_t height, std::size_t width, double cy, double cx, double a, double b, double angle) {
    Mask m(height, width);
    const double ca = std::cos(angle), sa = std::sin(angle);
    for (std::size_t r = 0; r < height; ++r) {
        for (std::size_t c = 0; c < width; ++c) {
            const double dx = static_cast<double>(c) + 0.5 - cx;
            const double dy = static_cast<double>(r) + 0.5 - cy;
            const double u = dx * ca + dy * sa;
            const double v = -dx * sa + dy * ca;
            m(r, c) = (u * u) / (a * a) + (v * v) / (b * b) <= 1.0 ? 1 : 0;
        }
    }
    return m;
}

Sample generate_sample(std::uint64_t seed, std::uint64_t index, const GeneratorConfig& config) {
    config.validate();
    Rng rng(derive_seed(seed, "sample", index));
    const double H = static_cast<double>(config.height), W = static_cast<double>(config.width);
    Mask mask;
    for (int attempt = 0;; ++attempt) {
        if (attempt == 1000) throw std::runtime_error("data: could not draw an ellipse above min_size");
        const double a = rng.uniform(config.axis_min, config.axis_max);
        const double b = rng.uniform(config.axis_min, config.axis_max);
        const double angle = rng.uniform(0.0, std::numbers::pi);
        const double ca = std::cos(angle), sa = std::sin(angle);
        const double ex = std::sqrt(a * a * ca * ca + b * b * sa * sa);
        const double ey = std::sqrt(a * a * sa * sa + b * b * ca * ca);
        const double cx = rng.uniform(ex, W - ex);
        const double cy = rng.uniform(ey, H - ey);
        mask = rasterize_ellipse(config.height, config.width, cy, cx, a, b, angle);
        if (mask.foreground_count() >= config.min_size) break;
    }
    double contrast = config.contrast, background = config.background;
    if (config.contrast_jitter > 0.0) contrast *= 1.0 - config.contrast_jitter * rng.uniform();
    if (config.background_jitter > 0.0) background += rng.uniform(-config.background_jitter, config.background_jitter);
    Image image(config.height, config.width);
    for (std::size_t k = 0; k < image.pixels.size(); ++k) {
        double v = background + contrast * mask.labels[k];
        if (config.noise > 0.0) v += config.noise * rng.normal();
        image.pixels[k] = std::clamp(v, 0.0, 1.0);
    }
    return Sample{std::move(image), std::move(mask)};
}

SplitMembership make_membership(std::size_t total, std::size_t n_labeled, std::size_t n_validation, std::uint64_t seed) {
    if (n_labeled + n_validation > total) {
        throw std::invalid_argument("split: n_labeled (" + std::to_string(n_labeled) + ") + n_validation (" +
                                    std::to_string(n_validation) + ") exceeds total (" + std::to_string(total) + ")");
    }
    std::vector<std::size_t> order(total);
    for (std::size_t i = 0; i < total; ++i) order[i] = i;
    Rng rng(derive_seed(seed, "split"));
    for (std::size_t i = total; i > 1; --i) std::swap(order[i - 1], order[rng.index(i)]);

    SplitMembership m;
    m.validation.assign(order.begin(), order.begin() + static_cast<long>(n_validation));
    m.labeled.assign(order.begin() + static_cast<long>(n_validation),
                     order.begin() + static_cast<long>(n_validation + n_labeled));
    m.unlabeled.assign(order.begin() + static_cast<long>(n_validation + n_labeled), order.end());
    return m;
}

DatasetSplit::DatasetSplit(SplitMembership membership, std::vector<LabeledSample> labeled,
                           std::vector<UnlabeledSample> unlabeled, std::vector<Mask> unlabeled_masks,
                           std::vector<LabeledSample> validation)
    : membership_(std::move(membership)),
      labeled_(std::move(labeled)),
      unlabeled_(std::move(unlabeled)),
      unlabeled_masks_(std::move(unlabeled_masks)),
      validation_(std::move(validation)) {
    if (unlabeled_.size() != unlabeled_masks_.size()) throw std::invalid_argument("split: unlabeled mask count mismatch");
}

namespace {

std::size_t regressor_validation_count(std::size_t n) { return (n + 4) / 5; }

}  // namespace

std::span<const LabeledSample> DatasetSplit::regressor_validation() const {
    return std::span<const LabeledSample>(validation_).first(regressor_validation_count(validation_.size()));
}

std::span<const LabeledSample> DatasetSplit::segmenter_validation() const {
    return std::span<const LabeledSample>(validation_).subspan(regressor_validation_count(validation_.size()));
}

DatasetSplit make_split(std::size_t total, std::size_t n_labeled, std::size_t n_validation, std::uint64_t seed,
                        const GeneratorConfig& config) {
    SplitMembership m = make_membership(total, n_labeled, n_validation, seed);
    std::vector<LabeledSample> labeled, validation;
    std::vector<UnlabeledSample> unlabeled;
    std::vector<Mask> hidden;
    for (std::size_t id : m.labeled) {
        Sample s = generate_sample(seed, id, config);
        labeled.push_back({id, std::move(s.image), std::move(s.mask)});
    }
    for (std::size_t id : m.validation) {
        Sample s = generate_sample(seed, id, config);
        validation.push_back({id, std::move(s.image), std::move(s.mask)});
    }
    for (std::size_t id : m.unlabeled) {
        Sample s = generate_sample(seed, id, config);
        unlabeled.push_back({id, std::move(s.image)});
        hidden.push_back(std::move(s.mask));
    }
    return DatasetSplit(std::move(m), std::move(labeled), std::move(unlabeled), std::move(hidden),
                        std::move(validation));
}

double SplitView::unlabeled_size(std::size_t i) {
    if (mode_ != AccessMode::oracle) throw AccessDenied("unlabeled sizes are only visible to oracle views");
    ++audit_.unlabeled_size_reads;
    return static_cast<double>(split_->unlabeled_masks_.at(i).foreground_count());
}

const Mask& SplitView::reveal_unlabeled_mask(std::size_t i) {
    ++audit_.unlabeled_pixel_reads;
    return split_->unlabeled_masks_.at(i);
}

// ---------------------------------------------------------------------------

Sample rotate(const Sample& sample, double degrees) {
    const std::size_t H = sample.image.height, W = sample.image.width;
    const double theta = degrees * std::numbers::pi / 180.0;
    const double ct = std::cos(theta), st = std::sin(theta);
    const double cy = (static_cast<double>(H) - 1.0) / 2.0, cx = (static_cast<double>(W) - 1.0) / 2.0;
    Sample out{Image(H, W), Mask(H, W)};
    const double max_r = static_cast<double>(H) - 1.0, max_c = static_cast<double>(W) - 1.0;
    for (std::size_t r = 0; r < H; ++r) {
        for (std::size_t c = 0; c < W; ++c) {
            const double dy = static_cast<double>(r) - cy, dx = static_cast<double>(c) - cx;
            const double sx = ct * dx + st * dy + cx;
            const double sy = -st * dx + ct * dy + cy;

            const double bx = std::clamp(sx, 0.0, max_c), by = std::clamp(sy, 0.0, max_r);
            const std::size_t x0 = static_cast<std::size_t>(std::floor(bx)), y0 = static_cast<std::size_t>(std::floor(by));
            const std::size_t x1 = std::min(x0 + 1, W - 1), y1 = std::min(y0 + 1, H - 1);
            const double fx = bx - static_cast<double>(x0), fy = by - static_cast<double>(y0);
            const Image& im = sample.image;
            const double v = (1 - fy) * ((1 - fx) * im(y0, x0) + fx * im(y0, x1)) + fy * ((1 - fx) * im(y1, x0) + fx * im(y1, x1));
            out.image(r, c) = std::clamp(v, 0.0, 1.0);

            const double nx = std::round(sx), ny = std::round(sy);
            if (nx >= 0.0 && nx <= max_c && ny >= 0.0 && ny <= max_r) {
                out.mask(r, c) = sample.mask(static_cast<std::size_t>(ny), static_cast<std::size_t>(nx));
            }
        }
    }
    return out;
}

Sample flip_horizontal(const Sample& sample) {
    Sample out = sample;
    const std::size_t H = sample.image.height, W = sample.image.width;
    for (std::size_t r = 0; r < H; ++r) {
        for (std::size_t c = 0; c < W; ++c) {
            out.image(r, c) = sample.image(r, W - 1 - c);
            out.mask(r, c) = sample.mask(r, W - 1 - c);
        }
    }
    return out;
}

Sample flip_vertical(const Sample& sample) {
    Sample out = sample;
    const std::size_t H = sample.image.height, W = sample.image.width;
    for (std::size_t r = 0; r < H; ++r) {
        for (std::size_t c = 0; c < W; ++c) {
            out.image(r, c) = sample.image(H - 1 - r, c);
            out.mask(r, c) = sample.mask(H - 1 - r, c);
        }
    }
    return out;
}

std::vector<AugmentedSample> augment(const Sample& sample, Rng& rng) {
    std::vector<Sample> variants;
    variants.reserve(10);
    variants.push_back(sample);
    variants.push_back(flip_horizontal(sample));
    variants.push_back(flip_vertical(sample));
    variants.push_back(flip_vertical(flip_horizontal(sample)));
    for (int i = 0; i < 6; ++i) variants.push_back(rotate(sample, rng.uniform(-45.0, 45.0)));

    std::vector<AugmentedSample> out;
    out.reserve(variants.size());
    for (Sample& s : variants) {
        const double size = static_cast<double>(s.mask.foreground_count());
        out.push_back({std::move(s.image), std::move(s.mask), size});
    }
    return out;
}

// ---------------------------------------------------------------------------

namespace {

void write_p5(const std::filesystem::path& path, std::size_t h, std::size_t w, int maxval,
              const std::vector<unsigned char>& bytes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out << "P5\n" << w << " " << h << "\n" << maxval << "\n";
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

struct RawPgm {
    std::size_t height = 0, width = 0;
    int maxval = 0;
    std::vector<unsigned char> bytes;
};

RawPgm read_p5(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::string magic;
    RawPgm pgm;
    in >> magic >> pgm.width >> pgm.height >> pgm.maxval;
    if (magic != "P5" || !in || pgm.maxval <= 0 || pgm.maxval > 255) {
        throw std::runtime_error(path.string() + ": not an 8-bit P5 file");
    }
    in.get();
    pgm.bytes.resize(pgm.height * pgm.width);
    in.read(reinterpret_cast<char*>(pgm.bytes.data()), static_cast<std::streamsize>(pgm.bytes.size()));
    if (!in) throw std::runtime_error(path.string() + ": truncated pixel data");
    return pgm;
}

}  // namespace

void write_pgm(const std::filesystem::path& path, const Image& image) {
    std::vector<unsigned char> bytes(image.pixels.size());
    for (std::size_t k = 0; k < bytes.size(); ++k) {
        bytes[k] = static_cast<unsigned char>(std::lround(std::clamp(image.pixels[k], 0.0, 1.0) * 255.0));
    }
    write_p5(path, image.height, image.width, 255, bytes);
}

void write_pgm(const std::filesystem::path& path, const Mask& mask) {
    std::vector<unsigned char> bytes(mask.labels.begin(), mask.labels.end());
    write_p5(path, mask.height, mask.width, 1, bytes);
}

Image read_pgm(const std::filesystem::path& path) {
    RawPgm pgm = read_p5(path);
    Image image(pgm.height, pgm.width);
    for (std::size_t k = 0; k < pgm.bytes.size(); ++k) image.pixels[k] = pgm.bytes[k] / static_cast<double>(pgm.maxval);
    return image;
}

Mask read_pgm_mask(const std::filesystem::path& path) {
    RawPgm pgm = read_p5(path);
    if (pgm.maxval != 1) throw std::runtime_error(path.string() + ": mask files must have maxval 1");
    Mask mask(pgm.height, pgm.width);
    for (std::size_t k = 0; k < pgm.bytes.size(); ++k) mask.labels[k] = pgm.bytes[k] ? 1 : 0;
    return mask;
}

void dump_dataset(const std::filesystem::path& dir, const DatasetSplit& split, std::uint64_t seed,
                  const std::string& config_json) {
    namespace fs = std::filesystem;
    auto name = [](const char* prefix, std::size_t id) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%s_%05zu.pgm", prefix, id);
        return std::string(buf);
    };
    for (const char* sub : {"labeled", "unlabeled", "validation"}) fs::create_directories(dir / sub);
    for (const auto& s : split.labeled()) {
        write_pgm(dir / "labeled" / name("img", s.id), s.image);
        write_pgm(dir / "labeled" / name("msk", s.id), s.mask);
    }
    for (const auto& s : split.validation()) {
        write_pgm(dir / "validation" / name("img", s.id), s.image);
        write_pgm(dir / "validation" / name("msk", s.id), s.mask);
    }
    SplitView archive(split, AccessMode::oracle);
    for (std::size_t i = 0; i < split.unlabeled().size(); ++i) {
        const auto& s = split.unlabeled()[i];
        write_pgm(dir / "unlabeled" / name("img", s.id), s.image);
        write_pgm(dir / "unlabeled" / name("msk", s.id), archive.reveal_unlabeled_mask(i));
    }

    nlohmann::ordered_json manifest;
    manifest["seed"] = seed;
    manifest["config"] = nlohmann::ordered_json::parse(config_json);
    manifest["membership"] = {{"labeled", split.membership().labeled},
                              {"unlabeled", split.membership().unlabeled},
                              {"validation", split.membership().validation}};
    std::ofstream out(dir / "manifest.json");
    if (!out) throw std::runtime_error("cannot write " + (dir / "manifest.json").string());
    out << manifest.dump(2) << "\n";
}

}  // namespace cseg
