#include "cseg/models.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace cseg {

void ParamSet::add(std::string name, Tensor value) {
    for (const auto& n : names_)
        if (n == name) throw std::invalid_argument("duplicate parameter name: " + name);
    names_.push_back(std::move(name));
    tensors_.push_back(std::move(value));
}

Tensor& ParamSet::get(std::string_view name) {
    for (std::size_t i = 0; i < names_.size(); ++i)
        if (names_[i] == name) return tensors_[i];
    throw std::out_of_range("no parameter named " + std::string(name));
}

const Tensor& ParamSet::get(std::string_view name) const { return const_cast<ParamSet*>(this)->get(name); }

std::size_t ParamSet::parameter_count() const {
    std::size_t n = 0;
    for (const auto& t : tensors_) n += t.size();
    return n;
}

std::vector<Var> ParamSet::bind(Tape& tape) const {
    std::vector<Var> vars;
    vars.reserve(tensors_.size());
    for (const auto& t : tensors_) vars.push_back(tape.leaf(t));
    return vars;
}

std::vector<double> ParamSet::flatten() const {
    std::vector<double> flat;
    flat.reserve(parameter_count());
    for (const auto& t : tensors_) flat.insert(flat.end(), t.data().begin(), t.data().end());
    return flat;
}

void ParamSet::unflatten(std::span<const double> values) {
    if (values.size() != parameter_count()) throw ShapeError("unflatten: wrong number of values");
    std::size_t offset = 0;
    for (auto& t : tensors_) {
        std::copy_n(values.begin() + static_cast<long>(offset), t.size(), t.data().begin());
        offset += t.size();
    }
}

bool ParamSet::all_finite() const {
    for (const auto& t : tensors_)
        if (!t.all_finite()) return false;
    return true;
}

Tensor kaiming_uniform(Shape shape, std::size_t fan_in, Rng& rng) {
    Tensor t(std::move(shape));
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
    for (double& v : t.data()) v = rng.uniform(-bound, bound);
    return t;
}

namespace {

void add_conv(ParamSet& p, const std::string& name, std::size_t cin, std::size_t cout, std::size_t k, Rng& rng) {
    p.add(name + ".weight", kaiming_uniform({cout, cin, k, k}, cin * k * k, rng));
    p.add(name + ".bias", Tensor({cout}));
}

void require_divisible(const Tensor& image, std::size_t by, const char* who) {
    if (image.rank() != 4) throw ShapeError(std::string(who) + ": image must be rank 4");
    if (image.extent(2) % by != 0 || image.extent(3) % by != 0) {
        throw ShapeError(std::string(who) + ": image extents " + shape_to_string(image.shape()) +
                         " not divisible by " + std::to_string(by));
    }
}

}  // namespace

ParamSet init_segmenter(Rng& rng) {
    ParamSet p;
    add_conv(p, "enc1", 1, 8, 3, rng);
    add_conv(p, "enc2", 8, 16, 3, rng);
    add_conv(p, "enc3", 16, 16, 3, rng);
    add_conv(p, "dec1", 24, 16, 3, rng);
    add_conv(p, "head", 16, 2, 1, rng);
    return p;
}

Var segmenter_forward(Tape& tape, std::span<const Var> p, Var image) {
    if (p.size() != 10) throw std::invalid_argument("segmenter_forward: expected 10 parameter tensors");
    require_divisible(tape.value(image), 2, "segmenter_forward");
    using namespace ops;
    Var e1 = relu(tape, conv2d(tape, image, p[0], p[1]));
    Var e2 = relu(tape, conv2d(tape, e1, p[2], p[3]));
    Var e3 = relu(tape, conv2d(tape, maxpool2(tape, e2), p[4], p[5]));
    Var up = upsample2(tape, e3);
    Var d1 = relu(tape, conv2d(tape, concat_channels(tape, up, e1), p[6], p[7]));
    Var logits = conv2d(tape, d1, p[8], p[9]);
    return softmax_channel(tape, logits);
}

SoftPrediction predict(const ParamSet& params, const Image& image) {
    Tape tape;
    std::vector<Var> vars;
    for (const auto& t : params.tensors()) vars.push_back(tape.constant(t));
    Var out = segmenter_forward(tape, vars, tape.constant(image.to_tensor()));
    return SoftPrediction{tape.value(out)};
}

ParamSet init_regressor(Rng& rng) {
    ParamSet p;
    add_conv(p, "conv1", 1, 8, 3, rng);
    add_conv(p, "conv2", 8, 16, 3, rng);
    add_conv(p, "conv3", 16, 16, 3, rng);
    p.add("fc.weight", kaiming_uniform({1, 16}, 16, rng));
    p.add("fc.bias", Tensor({1}));
    return p;
}

Var regressor_forward(Tape& tape, std::span<const Var> p, Var image) {
    if (p.size() != 8) throw std::invalid_argument("regressor_forward: expected 8 parameter tensors");
    require_divisible(tape.value(image), 4, "regressor_forward");
    using namespace ops;
    Var x = maxpool2(tape, relu(tape, conv2d(tape, image, p[0], p[1])));
    x = maxpool2(tape, relu(tape, conv2d(tape, x, p[2], p[3])));
    x = relu(tape, conv2d(tape, x, p[4], p[5]));
    return dense(tape, global_avg_pool(tape, x), p[6], p[7]);
}

double predict_size(const ParamSet& params, const Image& image) {
    Tape tape;
    std::vector<Var> vars;
    for (const auto& t : params.tensors()) vars.push_back(tape.constant(t));
    return tape.value(regressor_forward(tape, vars, tape.constant(image.to_tensor()))).item();
}

// ---------------------------------------------------------------------------

namespace {

void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

class Reader {
public:
    explicit Reader(std::string_view bytes) : bytes_(bytes) {}

    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
        pos_ += 8;
        return v;
    }
    double f64() { return std::bit_cast<double>(u64()); }
    std::string str(std::size_t n) {
        need(n);
        std::string s(bytes_.substr(pos_, n));
        pos_ += n;
        return s;
    }
    bool done() const { return pos_ == bytes_.size(); }

private:
    void need(std::size_t n) const {
        if (bytes_.size() - pos_ < n) throw std::runtime_error("checkpoint truncated at byte " + std::to_string(pos_));
    }
    std::string_view bytes_;
    std::size_t pos_ = 0;
};

}  // namespace

std::string encode_checkpoint(const ParamSet& params) {
    std::string out;
    put_u64(out, params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
        const std::string& name = params.name(i);
        const Tensor& t = params.tensors()[i];
        put_u64(out, name.size());
        out += name;
        put_u64(out, t.rank());
        for (std::size_t e : t.shape()) put_u64(out, e);
        for (double v : t.data()) put_u64(out, std::bit_cast<std::uint64_t>(v));
    }
    return out;
}

ParamSet decode_checkpoint(std::string_view bytes) {
    Reader in(bytes);
    ParamSet params;
    const std::uint64_t count = in.u64();
    for (std::uint64_t i = 0; i < count; ++i) {
        const std::uint64_t name_len = in.u64();
        std::string name = in.str(name_len);
        const std::uint64_t rank = in.u64();
        if (rank > 4) throw std::runtime_error("checkpoint: tensor " + name + " has rank " + std::to_string(rank));
        Shape shape(rank);
        for (auto& e : shape) e = in.u64();
        std::vector<double> data(shape_size(shape));
        for (double& v : data) v = in.f64();
        params.add(std::move(name), Tensor(std::move(shape), std::move(data)));
    }
    if (!in.done()) throw std::runtime_error("checkpoint: trailing bytes after last tensor");
    return params;
}

void save_checkpoint(const std::filesystem::path& path, const ParamSet& params) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    const std::string bytes = encode_checkpoint(params);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

ParamSet load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return decode_checkpoint(buf.str());
}

}  // namespace cseg
