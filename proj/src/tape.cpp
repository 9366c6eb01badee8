#include "cseg/tape.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cseg/hash.hpp"

namespace cseg {

const char* op_name(OpKind kind) {
    switch (kind) {
        case OpKind::leaf: return "leaf";
        case OpKind::constant: return "constant";
        case OpKind::conv2d: return "conv2d";
        case OpKind::relu: return "relu";
        case OpKind::maxpool2: return "maxpool2";
        case OpKind::upsample2: return "upsample2";
        case OpKind::softmax_channel: return "softmax_channel";
        case OpKind::concat_channels: return "concat_channels";
        case OpKind::channel_slice: return "channel_slice";
        case OpKind::global_avg_pool: return "global_avg_pool";
        case OpKind::dense: return "dense";
        case OpKind::sum: return "sum";
        case OpKind::mean: return "mean";
        case OpKind::add: return "add";
        case OpKind::sub: return "sub";
        case OpKind::mul: return "mul";
        case OpKind::mul_scalar: return "mul_scalar";
        case OpKind::square: return "square";
        case OpKind::log: return "log";
    }
    return "?";
}

Var Tape::leaf(Tensor value) {
    Node node;
    node.kind = OpKind::leaf;
    node.value = std::move(value);
    node.requires_grad = true;
    nodes_.push_back(std::move(node));
    return Var{nodes_.size() - 1};
}

Var Tape::constant(Tensor value) {
    Node node;
    node.kind = OpKind::constant;
    node.value = std::move(value);
    nodes_.push_back(std::move(node));
    return Var{nodes_.size() - 1};
}

Var Tape::record(Node node) {
    for (std::size_t in : node.inputs) {
        if (in >= nodes_.size()) throw std::out_of_range("tape input " + std::to_string(in) + " not recorded yet");
        node.requires_grad = node.requires_grad || nodes_[in].requires_grad;
    }
    nodes_.push_back(std::move(node));
    return Var{nodes_.size() - 1};
}

std::vector<Tensor> Tape::gradients(const std::vector<Var>& vars) const {
    std::vector<Tensor> out;
    out.reserve(vars.size());
    for (Var v : vars) {
        const Node& n = nodes_.at(v.id);
        out.push_back(n.grad.size() == n.value.size() ? n.grad : Tensor(n.value.shape()));
    }
    return out;
}

std::uint64_t Tape::branch_signature() const {
    Fnv1a hash;
    for (const Node& n : nodes_) {
        if (n.kind == OpKind::relu) {
            for (double x : nodes_[n.inputs[0]].value.data()) hash.add_byte(x > 0.0 ? 1 : 0);
        } else if (n.kind == OpKind::maxpool2) {
            for (std::size_t r : n.route) hash.add_u64(r);
        }
    }
    return hash.value();
}

namespace {

void require_rank(const Tensor& t, std::size_t rank, const char* op, const char* what) {
    if (t.rank() != rank) {
        throw ShapeError(std::string(op) + ": " + what + " must have rank " + std::to_string(rank) + ", got extents " +
                         shape_to_string(t.shape()));
    }
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (a.shape() != b.shape()) {
        throw ShapeError(std::string(op) + ": operand extents differ, " + shape_to_string(a.shape()) + " vs " +
                         shape_to_string(b.shape()));
    }
}

// Accumulate dst[y+dy][x+dx] += w * src[y][x] (or the transposed access) over
// the overlap of two H x W planes shifted by (dy, dx).
struct Overlap {
    std::size_t y0, y1, x0, x1;
};

Overlap overlap(std::size_t h, std::size_t w, long dy, long dx) {
    const long H = static_cast<long>(h);
    const long W = static_cast<long>(w);
    return Overlap{static_cast<std::size_t>(std::max(0L, -dy)), static_cast<std::size_t>(std::min(H, H - dy)),
                   static_cast<std::size_t>(std::max(0L, -dx)), static_cast<std::size_t>(std::min(W, W - dx))};
}

void conv2d_forward(const Tensor& in, const Tensor& weight, const Tensor& bias, Tensor& out) {
    const std::size_t N = in.extent(0), Cin = in.extent(1), H = in.extent(2), W = in.extent(3);
    const std::size_t Cout = weight.extent(0), K = weight.extent(2);
    const long pad = static_cast<long>(K / 2);
    const double* x = in.data().data();
    const double* wt = weight.data().data();
    double* y = out.data().data();
    const std::size_t plane = H * W;
    for (std::size_t n = 0; n < N; ++n) {
        for (std::size_t co = 0; co < Cout; ++co) {
            double* yp = y + (n * Cout + co) * plane;
            std::fill(yp, yp + plane, bias[co]);
            for (std::size_t ci = 0; ci < Cin; ++ci) {
                const double* xp = x + (n * Cin + ci) * plane;
                for (std::size_t ky = 0; ky < K; ++ky) {
                    for (std::size_t kx = 0; kx < K; ++kx) {
                        const double wv = wt[((co * Cin + ci) * K + ky) * K + kx];
                        const long dy = static_cast<long>(ky) - pad;
                        const long dx = static_cast<long>(kx) - pad;
                        const Overlap o = overlap(H, W, dy, dx);
                        for (std::size_t r = o.y0; r < o.y1; ++r) {
                            double* yrow = yp + r * W;
                            const double* xrow = xp + (r + dy) * W + dx;
                            for (std::size_t c = o.x0; c < o.x1; ++c) yrow[c] += wv * xrow[c];
                        }
                    }
                }
            }
        }
    }
}

void conv2d_backward(const Tensor& in, const Tensor& weight, const Tensor& gout, Tensor* gin, Tensor* gw, Tensor* gb) {
    const std::size_t N = in.extent(0), Cin = in.extent(1), H = in.extent(2), W = in.extent(3);
    const std::size_t Cout = weight.extent(0), K = weight.extent(2);
    const long pad = static_cast<long>(K / 2);
    const std::size_t plane = H * W;
    const double* x = in.data().data();
    const double* wt = weight.data().data();
    const double* g = gout.data().data();
    for (std::size_t n = 0; n < N; ++n) {
        for (std::size_t co = 0; co < Cout; ++co) {
            const double* gp = g + (n * Cout + co) * plane;
            if (gb) {
                double s = 0.0;
                for (std::size_t i = 0; i < plane; ++i) s += gp[i];
                (*gb)[co] += s;
            }
            for (std::size_t ci = 0; ci < Cin; ++ci) {
                const double* xp = x + (n * Cin + ci) * plane;
                double* gip = gin ? gin->data().data() + (n * Cin + ci) * plane : nullptr;
                for (std::size_t ky = 0; ky < K; ++ky) {
                    for (std::size_t kx = 0; kx < K; ++kx) {
                        const std::size_t widx = ((co * Cin + ci) * K + ky) * K + kx;
                        const double wv = wt[widx];
                        const long dy = static_cast<long>(ky) - pad;
                        const long dx = static_cast<long>(kx) - pad;
                        const Overlap o = overlap(H, W, dy, dx);
                        double acc = 0.0;
                        for (std::size_t r = o.y0; r < o.y1; ++r) {
                            const double* grow = gp + r * W;
                            const double* xrow = xp + (r + dy) * W + dx;
                            if (gip) {
                                double* girow = gip + (r + dy) * W + dx;
                                for (std::size_t c = o.x0; c < o.x1; ++c) {
                                    acc += grow[c] * xrow[c];
                                    girow[c] += wv * grow[c];
                                }
                            } else {
                                for (std::size_t c = o.x0; c < o.x1; ++c) acc += grow[c] * xrow[c];
                            }
                        }
                        if (gw) (*gw)[widx] += acc;
                    }
                }
            }
        }
    }
}

}  // namespace

void Tape::backward(Var loss) {
    if (loss.id >= nodes_.size()) throw std::out_of_range("backward: unknown loss node");
    if (nodes_[loss.id].value.size() != 1) {
        throw ShapeError("backward: loss node must be scalar, got extents " +
                         shape_to_string(nodes_[loss.id].value.shape()));
    }
    std::vector<char> reachable(loss.id + 1, 0);
    reachable[loss.id] = 1;
    for (std::size_t i = loss.id + 1; i-- > 0;) {
        if (!reachable[i]) continue;
        for (std::size_t in : nodes_[i].inputs) reachable[in] = 1;
    }
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        if (i <= loss.id && reachable[i]) {
            nodes_[i].grad = Tensor(nodes_[i].value.shape());
        } else {
            nodes_[i].grad = Tensor();
        }
    }
    nodes_[loss.id].grad[0] = 1.0;

    for (std::size_t i = loss.id + 1; i-- > 0;) {
        if (!reachable[i]) continue;
        Node& node = nodes_[i];
        if (!node.requires_grad || node.kind == OpKind::leaf || node.kind == OpKind::constant) continue;
        const Tensor& g = node.grad;
        auto input_grad = [&](std::size_t slot) -> Tensor* {
            Node& in = nodes_[node.inputs[slot]];
            return in.requires_grad ? &in.grad : nullptr;
        };
        auto input_value = [&](std::size_t slot) -> const Tensor& { return nodes_[node.inputs[slot]].value; };

        switch (node.kind) {
            case OpKind::leaf:
            case OpKind::constant:
                break;
            case OpKind::conv2d:
                conv2d_backward(input_value(0), input_value(1), g, input_grad(0), input_grad(1), input_grad(2));
                break;
            case OpKind::relu:
                if (Tensor* gi = input_grad(0)) {
                    const Tensor& x = input_value(0);
                    for (std::size_t k = 0; k < x.size(); ++k)
                        if (x[k] > 0.0) (*gi)[k] += g[k];
                }
                break;
            case OpKind::maxpool2:
                if (Tensor* gi = input_grad(0)) {
                    for (std::size_t k = 0; k < g.size(); ++k) (*gi)[node.route[k]] += g[k];
                }
                break;
            case OpKind::upsample2:
                if (Tensor* gi = input_grad(0)) {
                    const std::size_t NC = g.extent(0) * g.extent(1), H = g.extent(2), W = g.extent(3);
                    const std::size_t h = H / 2, w = W / 2;
                    for (std::size_t p = 0; p < NC; ++p)
                        for (std::size_t r = 0; r < H; ++r)
                            for (std::size_t c = 0; c < W; ++c)
                                (*gi)[(p * h + r / 2) * w + c / 2] += g[(p * H + r) * W + c];
                }
                break;
            case OpKind::softmax_channel:
                if (Tensor* gi = input_grad(0)) {
                    const Tensor& s = node.value;
                    const std::size_t N = s.extent(0), C = s.extent(1), plane = s.extent(2) * s.extent(3);
                    for (std::size_t n = 0; n < N; ++n) {
                        for (std::size_t p = 0; p < plane; ++p) {
                            double dot = 0.0;
                            for (std::size_t c = 0; c < C; ++c) {
                                const std::size_t k = (n * C + c) * plane + p;
                                dot += g[k] * s[k];
                            }
                            for (std::size_t c = 0; c < C; ++c) {
                                const std::size_t k = (n * C + c) * plane + p;
                                (*gi)[k] += s[k] * (g[k] - dot);
                            }
                        }
                    }
                }
                break;
            case OpKind::concat_channels: {
                const Tensor& a = input_value(0);
                const Tensor& b = input_value(1);
                const std::size_t N = a.extent(0), Ca = a.extent(1), Cb = b.extent(1);
                const std::size_t plane = a.extent(2) * a.extent(3);
                Tensor* ga = input_grad(0);
                Tensor* gb = input_grad(1);
                for (std::size_t n = 0; n < N; ++n) {
                    const double* src = g.data().data() + n * (Ca + Cb) * plane;
                    if (ga)
                        for (std::size_t k = 0; k < Ca * plane; ++k) (*ga)[n * Ca * plane + k] += src[k];
                    if (gb)
                        for (std::size_t k = 0; k < Cb * plane; ++k) (*gb)[n * Cb * plane + k] += src[Ca * plane + k];
                }
                break;
            }
            case OpKind::channel_slice:
                if (Tensor* gi = input_grad(0)) {
                    const Tensor& x = input_value(0);
                    const std::size_t N = x.extent(0), C = x.extent(1), plane = x.extent(2) * x.extent(3);
                    for (std::size_t n = 0; n < N; ++n)
                        for (std::size_t p = 0; p < plane; ++p) (*gi)[(n * C + node.index) * plane + p] += g[n * plane + p];
                }
                break;
            case OpKind::global_avg_pool:
                if (Tensor* gi = input_grad(0)) {
                    const Tensor& x = input_value(0);
                    const std::size_t NC = x.extent(0) * x.extent(1), plane = x.extent(2) * x.extent(3);
                    const double scale = 1.0 / static_cast<double>(plane);
                    for (std::size_t q = 0; q < NC; ++q)
                        for (std::size_t p = 0; p < plane; ++p) (*gi)[q * plane + p] += g[q] * scale;
                }
                break;
            case OpKind::dense: {
                const Tensor& x = input_value(0);
                const Tensor& w = input_value(1);
                const std::size_t N = x.extent(0), F = x.extent(1), O = w.extent(0);
                Tensor* gx = input_grad(0);
                Tensor* gw = input_grad(1);
                Tensor* gb = input_grad(2);
                for (std::size_t n = 0; n < N; ++n) {
                    for (std::size_t o = 0; o < O; ++o) {
                        const double go = g[n * O + o];
                        if (gb) (*gb)[o] += go;
                        for (std::size_t f = 0; f < F; ++f) {
                            if (gx) (*gx)[n * F + f] += go * w[o * F + f];
                            if (gw) (*gw)[o * F + f] += go * x[n * F + f];
                        }
                    }
                }
                break;
            }
            case OpKind::sum:
                if (Tensor* gi = input_grad(0))
                    for (double& v : gi->data()) v += g[0];
                break;
            case OpKind::mean:
                if (Tensor* gi = input_grad(0)) {
                    const double scale = g[0] / static_cast<double>(gi->size());
                    for (double& v : gi->data()) v += scale;
                }
                break;
            case OpKind::add:
                for (std::size_t slot = 0; slot < 2; ++slot)
                    if (Tensor* gi = input_grad(slot))
                        for (std::size_t k = 0; k < g.size(); ++k) (*gi)[k] += g[k];
                break;
            case OpKind::sub:
                if (Tensor* gi = input_grad(0))
                    for (std::size_t k = 0; k < g.size(); ++k) (*gi)[k] += g[k];
                if (Tensor* gi = input_grad(1))
                    for (std::size_t k = 0; k < g.size(); ++k) (*gi)[k] -= g[k];
                break;
            case OpKind::mul: {
                const Tensor& a = input_value(0);
                const Tensor& b = input_value(1);
                if (Tensor* gi = input_grad(0))
                    for (std::size_t k = 0; k < g.size(); ++k) (*gi)[k] += g[k] * b[k];
                if (Tensor* gi = input_grad(1))
                    for (std::size_t k = 0; k < g.size(); ++k) (*gi)[k] += g[k] * a[k];
                break;
            }
            case OpKind::mul_scalar:
                if (Tensor* gi = input_grad(0))
                    for (std::size_t k = 0; k < g.size(); ++k) (*gi)[k] += g[k] * node.scalar;
                break;
            case OpKind::square:
                if (Tensor* gi = input_grad(0)) {
                    const Tensor& x = input_value(0);
                    for (std::size_t k = 0; k < g.size(); ++k) (*gi)[k] += 2.0 * x[k] * g[k];
                }
                break;
            case OpKind::log:
                if (Tensor* gi = input_grad(0)) {
                    const Tensor& x = input_value(0);
                    for (std::size_t k = 0; k < g.size(); ++k)
                        if (x[k] > ops::kLogClamp) (*gi)[k] += g[k] / x[k];
                }
                break;
        }
    }
}

namespace ops {

Var conv2d(Tape& tape, Var input, Var weight, Var bias) {
    const Tensor& x = tape.value(input);
    const Tensor& w = tape.value(weight);
    const Tensor& b = tape.value(bias);
    require_rank(x, 4, "conv2d", "input");
    require_rank(w, 4, "conv2d", "weight");
    require_rank(b, 1, "conv2d", "bias");
    if (w.extent(1) != x.extent(1)) {
        throw ShapeError("conv2d: weight input-channel dimension " + std::to_string(w.extent(1)) +
                         " does not match input channel dimension " + std::to_string(x.extent(1)));
    }
    if (w.extent(2) != w.extent(3)) {
        throw ShapeError("conv2d: kernel must be square, got kernel height " + std::to_string(w.extent(2)) +
                         " and kernel width " + std::to_string(w.extent(3)));
    }
    if (w.extent(2) % 2 == 0) {
        throw ShapeError("conv2d: kernel size dimension must be odd, got " + std::to_string(w.extent(2)));
    }
    if (b.extent(0) != w.extent(0)) {
        throw ShapeError("conv2d: bias dimension " + std::to_string(b.extent(0)) +
                         " does not match output channel dimension " + std::to_string(w.extent(0)));
    }
    Node node;
    node.kind = OpKind::conv2d;
    node.inputs = {input.id, weight.id, bias.id};
    node.value = Tensor({x.extent(0), w.extent(0), x.extent(2), x.extent(3)});
    conv2d_forward(x, w, b, node.value);
    return tape.record(std::move(node));
}

Var relu(Tape& tape, Var input) {
    const Tensor& x = tape.value(input);
    Node node;
    node.kind = OpKind::relu;
    node.inputs = {input.id};
    node.value = x;
    for (double& v : node.value.data()) v = v > 0.0 ? v : 0.0;
    return tape.record(std::move(node));
}

Var maxpool2(Tape& tape, Var input) {
    const Tensor& x = tape.value(input);
    require_rank(x, 4, "maxpool2", "input");
    const std::size_t N = x.extent(0), C = x.extent(1), H = x.extent(2), W = x.extent(3);
    if (H % 2 != 0) throw ShapeError("maxpool2: height dimension " + std::to_string(H) + " is odd");
    if (W % 2 != 0) throw ShapeError("maxpool2: width dimension " + std::to_string(W) + " is odd");
    const std::size_t h = H / 2, w = W / 2;
    Node node;
    node.kind = OpKind::maxpool2;
    node.inputs = {input.id};
    node.value = Tensor({N, C, h, w});
    node.route.resize(N * C * h * w);
    for (std::size_t p = 0; p < N * C; ++p) {
        for (std::size_t r = 0; r < h; ++r) {
            for (std::size_t c = 0; c < w; ++c) {
                std::size_t best = (p * H + 2 * r) * W + 2 * c;
                for (std::size_t dr = 0; dr < 2; ++dr) {
                    for (std::size_t dc = 0; dc < 2; ++dc) {
                        const std::size_t k = (p * H + 2 * r + dr) * W + 2 * c + dc;
                        if (x[k] > x[best]) best = k;
                    }
                }
                const std::size_t o = (p * h + r) * w + c;
                node.value[o] = x[best];
                node.route[o] = best;
            }
        }
    }
    return tape.record(std::move(node));
}

Var upsample2(Tape& tape, Var input) {
    const Tensor& x = tape.value(input);
    require_rank(x, 4, "upsample2", "input");
    const std::size_t N = x.extent(0), C = x.extent(1), h = x.extent(2), w = x.extent(3);
    const std::size_t H = 2 * h, W = 2 * w;
    Node node;
    node.kind = OpKind::upsample2;
    node.inputs = {input.id};
    node.value = Tensor({N, C, H, W});
    for (std::size_t p = 0; p < N * C; ++p)
        for (std::size_t r = 0; r < H; ++r)
            for (std::size_t c = 0; c < W; ++c) node.value[(p * H + r) * W + c] = x[(p * h + r / 2) * w + c / 2];
    return tape.record(std::move(node));
}

Var softmax_channel(Tape& tape, Var input) {
    const Tensor& x = tape.value(input);
    require_rank(x, 4, "softmax_channel", "input");
    const std::size_t N = x.extent(0), C = x.extent(1), plane = x.extent(2) * x.extent(3);
    Node node;
    node.kind = OpKind::softmax_channel;
    node.inputs = {input.id};
    node.value = Tensor(x.shape());
    for (std::size_t n = 0; n < N; ++n) {
        for (std::size_t p = 0; p < plane; ++p) {
            double peak = x[n * C * plane + p];
            for (std::size_t c = 1; c < C; ++c) peak = std::max(peak, x[(n * C + c) * plane + p]);
            double total = 0.0;
            for (std::size_t c = 0; c < C; ++c) {
                const std::size_t k = (n * C + c) * plane + p;
                node.value[k] = std::exp(x[k] - peak);
                total += node.value[k];
            }
            for (std::size_t c = 0; c < C; ++c) node.value[(n * C + c) * plane + p] /= total;
        }
    }
    return tape.record(std::move(node));
}

Var concat_channels(Tape& tape, Var a, Var b) {
    const Tensor& x = tape.value(a);
    const Tensor& y = tape.value(b);
    require_rank(x, 4, "concat_channels", "first operand");
    require_rank(y, 4, "concat_channels", "second operand");
    for (std::size_t axis : {0u, 2u, 3u}) {
        if (x.extent(axis) != y.extent(axis)) {
            static const char* names[] = {"batch", "channel", "height", "width"};
            throw ShapeError(std::string("concat_channels: ") + names[axis] + " dimension differs, " +
                             std::to_string(x.extent(axis)) + " vs " + std::to_string(y.extent(axis)));
        }
    }
    const std::size_t N = x.extent(0), Ca = x.extent(1), Cb = y.extent(1), plane = x.extent(2) * x.extent(3);
    Node node;
    node.kind = OpKind::concat_channels;
    node.inputs = {a.id, b.id};
    node.value = Tensor({N, Ca + Cb, x.extent(2), x.extent(3)});
    for (std::size_t n = 0; n < N; ++n) {
        double* dst = node.value.data().data() + n * (Ca + Cb) * plane;
        std::copy_n(x.data().data() + n * Ca * plane, Ca * plane, dst);
        std::copy_n(y.data().data() + n * Cb * plane, Cb * plane, dst + Ca * plane);
    }
    return tape.record(std::move(node));
}

Var channel_slice(Tape& tape, Var input, std::size_t channel) {
    const Tensor& x = tape.value(input);
    require_rank(x, 4, "channel_slice", "input");
    if (channel >= x.extent(1)) {
        throw ShapeError("channel_slice: channel " + std::to_string(channel) + " out of range for channel dimension " +
                         std::to_string(x.extent(1)));
    }
    const std::size_t N = x.extent(0), C = x.extent(1), plane = x.extent(2) * x.extent(3);
    Node node;
    node.kind = OpKind::channel_slice;
    node.inputs = {input.id};
    node.index = channel;
    node.value = Tensor({N, 1, x.extent(2), x.extent(3)});
    for (std::size_t n = 0; n < N; ++n)
        std::copy_n(x.data().data() + (n * C + channel) * plane, plane, node.value.data().data() + n * plane);
    return tape.record(std::move(node));
}

Var global_avg_pool(Tape& tape, Var input) {
    const Tensor& x = tape.value(input);
    require_rank(x, 4, "global_avg_pool", "input");
    const std::size_t NC = x.extent(0) * x.extent(1), plane = x.extent(2) * x.extent(3);
    Node node;
    node.kind = OpKind::global_avg_pool;
    node.inputs = {input.id};
    node.value = Tensor({x.extent(0), x.extent(1)});
    for (std::size_t q = 0; q < NC; ++q) {
        double s = 0.0;
        for (std::size_t p = 0; p < plane; ++p) s += x[q * plane + p];
        node.value[q] = s / static_cast<double>(plane);
    }
    return tape.record(std::move(node));
}

Var dense(Tape& tape, Var input, Var weight, Var bias) {
    const Tensor& x = tape.value(input);
    const Tensor& w = tape.value(weight);
    const Tensor& b = tape.value(bias);
    require_rank(x, 2, "dense", "input");
    require_rank(w, 2, "dense", "weight");
    require_rank(b, 1, "dense", "bias");
    if (w.extent(1) != x.extent(1)) {
        throw ShapeError("dense: weight feature dimension " + std::to_string(w.extent(1)) +
                         " does not match input feature dimension " + std::to_string(x.extent(1)));
    }
    if (b.extent(0) != w.extent(0)) {
        throw ShapeError("dense: bias dimension " + std::to_string(b.extent(0)) + " does not match output dimension " +
                         std::to_string(w.extent(0)));
    }
    const std::size_t N = x.extent(0), F = x.extent(1), O = w.extent(0);
    Node node;
    node.kind = OpKind::dense;
    node.inputs = {input.id, weight.id, bias.id};
    node.value = Tensor({N, O});
    for (std::size_t n = 0; n < N; ++n) {
        for (std::size_t o = 0; o < O; ++o) {
            double acc = b[o];
            for (std::size_t f = 0; f < F; ++f) acc += w[o * F + f] * x[n * F + f];
            node.value[n * O + o] = acc;
        }
    }
    return tape.record(std::move(node));
}

Var sum(Tape& tape, Var input) {
    const Tensor& x = tape.value(input);
    double s = 0.0;
    for (double v : x.data()) s += v;
    Node node;
    node.kind = OpKind::sum;
    node.inputs = {input.id};
    node.value = Tensor::scalar(s);
    return tape.record(std::move(node));
}

Var mean(Tape& tape, Var input) {
    const Tensor& x = tape.value(input);
    if (x.size() == 0) throw ShapeError("mean: empty input");
    double s = 0.0;
    for (double v : x.data()) s += v;
    Node node;
    node.kind = OpKind::mean;
    node.inputs = {input.id};
    node.value = Tensor::scalar(s / static_cast<double>(x.size()));
    return tape.record(std::move(node));
}

namespace {

template <typename F>
Var binary(Tape& tape, OpKind kind, const char* name, Var a, Var b, F f) {
    const Tensor& x = tape.value(a);
    const Tensor& y = tape.value(b);
    require_same_shape(x, y, name);
    Node node;
    node.kind = kind;
    node.inputs = {a.id, b.id};
    node.value = Tensor(x.shape());
    for (std::size_t k = 0; k < x.size(); ++k) node.value[k] = f(x[k], y[k]);
    return tape.record(std::move(node));
}

template <typename F>
Var unary(Tape& tape, OpKind kind, Var a, F f) {
    Node node;
    node.kind = kind;
    node.inputs = {a.id};
    node.value = tape.value(a);
    for (double& v : node.value.data()) v = f(v);
    return tape.record(std::move(node));
}

}  // namespace

Var add(Tape& tape, Var a, Var b) {
    return binary(tape, OpKind::add, "add", a, b, [](double x, double y) { return x + y; });
}

Var sub(Tape& tape, Var a, Var b) {
    return binary(tape, OpKind::sub, "sub", a, b, [](double x, double y) { return x - y; });
}

Var mul(Tape& tape, Var a, Var b) {
    return binary(tape, OpKind::mul, "mul", a, b, [](double x, double y) { return x * y; });
}

Var mul_scalar(Tape& tape, Var input, double factor) {
    Node node;
    node.kind = OpKind::mul_scalar;
    node.inputs = {input.id};
    node.scalar = factor;
    node.value = tape.value(input);
    for (double& v : node.value.data()) v *= factor;
    return tape.record(std::move(node));
}

Var square(Tape& tape, Var input) {
    return unary(tape, OpKind::square, input, [](double x) { return x * x; });
}

Var log(Tape& tape, Var input) {
    return unary(tape, OpKind::log, input, [](double x) { return std::log(std::max(x, kLogClamp)); });
}

}  // namespace ops
}  // namespace cseg
