#include "cseg/trainer.hpp"

#include <numeric>
#include <stdexcept>

#include "cseg/eval.hpp"
#include "cseg/optim.hpp"
#include "cseg/schedule.hpp"

namespace cseg {

namespace {

std::vector<std::size_t> shuffled(std::size_t n, std::uint64_t seed) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(seed);
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.index(i)]);
    return order;
}

void accumulate(std::vector<Tensor>& into, const std::vector<Tensor>& grads) {
    if (into.empty()) {
        into = grads;
        return;
    }
    for (std::size_t i = 0; i < into.size(); ++i)
        for (std::size_t k = 0; k < into[i].size(); ++k) into[i][k] += grads[i][k];
}

// One forward/backward pass of a scalar loss built by `build` over the
// segmenter, followed by an optimizer step. Returns the loss value.
template <typename Build>
double segmenter_step(ParamSet& params, OptimizerState& opt, const Image& image, Build build) {
    Tape tape;
    const std::vector<Var> vars = params.bind(tape);
    Var probs = segmenter_forward(tape, vars, tape.constant(image.to_tensor()));
    const std::optional<Var> loss = build(tape, probs);
    if (!loss) return 0.0;
    const double value = tape.value(*loss).item();
    tape.backward(*loss);
    const std::vector<Tensor> grads = tape.gradients(vars);
    adam_step(opt, params.tensors(), grads);
    return value;
}

double band_satisfaction(const ParamSet& params, const std::vector<UnlabeledSample>& images,
                         const std::vector<SizeBand>& bands) {
    if (images.empty()) return 1.0;
    std::size_t inside = 0;
    for (std::size_t j = 0; j < images.size(); ++j) {
        inside += size_penalty_value(predict(params, images[j].image).soft_size(), bands[j]) == 0.0;
    }
    return static_cast<double>(inside) / static_cast<double>(images.size());
}

}  // namespace

double validation_dsc(const ParamSet& params, std::span<const LabeledSample> samples) {
    if (samples.empty()) return 0.0;
    double total = 0.0;
    for (const auto& s : samples) total += dice(predict(params, s.image).argmax(), s.mask).value;
    return total / static_cast<double>(samples.size());
}

RegressorResult train_regressor(SplitView& view, const ExperimentConfig& config) {
    if (view.labeled().empty()) throw std::invalid_argument("train_regressor: labeled set is empty");
    Rng init_rng(derive_seed(config.seed, "regressor-init"));
    RegressorResult result;
    ParamSet params = init_regressor(init_rng);

    Rng aug_rng(derive_seed(config.seed, "augment"));
    std::vector<AugmentedSample> train;
    for (const auto& s : view.labeled()) {
        auto variants = augment(Sample{s.image, s.mask}, aug_rng);
        ++view.audit().augment_calls;
        for (auto& v : variants) train.push_back(std::move(v));
    }

    const RegressorSchedule& rs = config.regressor;
    OptimizerState opt = OptimizerState::sgd(rs.lr, rs.momentum, rs.weight_decay);
    LrSchedule schedule = LrSchedule::milestone(rs.lr, rs.milestones);
    const auto validation = view.regressor_validation();

    for (std::size_t epoch = 0; epoch < rs.epochs; ++epoch) {
        opt.lr = schedule.lr();
        const auto order = shuffled(train.size(), derive_seed(config.seed, "regressor-order", epoch));
        double train_loss = 0.0;
        for (std::size_t start = 0; start < order.size(); start += rs.batch) {
            const std::size_t end = std::min(order.size(), start + rs.batch);
            std::vector<Tensor> batch_grads;
            for (std::size_t b = start; b < end; ++b) {
                const AugmentedSample& s = train[order[b]];
                Tape tape;
                const std::vector<Var> vars = params.bind(tape);
                Var estimate = regressor_forward(tape, vars, tape.constant(s.image.to_tensor()));
                Var loss = size_mse(tape, estimate, s.size_target);
                train_loss += tape.value(loss).item();
                tape.backward(loss);
                accumulate(batch_grads, tape.gradients(vars));
            }
            if (rs.reduction == LossReduction::mean) {
                const double scale = 1.0 / static_cast<double>(end - start);
                for (auto& g : batch_grads)
                    for (double& v : g.data()) v *= scale;
            }
            sgd_step(opt, params.tensors(), batch_grads);
        }

        double val_mse = 0.0;
        for (const auto& s : validation) {
            const double err = predict_size(params, s.image) - static_cast<double>(s.mask.foreground_count());
            val_mse += err * err;
        }
        if (!validation.empty()) val_mse /= static_cast<double>(validation.size());

        result.trace.push_back({epoch, train_loss / static_cast<double>(train.size()), val_mse, opt.lr});
        if (epoch == 0 || val_mse < result.best_val_mse) {
            result.best_val_mse = val_mse;
            result.best_epoch = epoch;
            result.params = params;
        }
        schedule.step(epoch, val_mse);
    }
    result.final_params = std::move(params);
    return result;
}

SegmenterResult train_segmenter(SplitView& view, const ExperimentConfig& config, const std::vector<SizeBand>* bands,
                                const std::vector<Mask>* pseudo) {
    if (view.labeled().empty()) throw std::invalid_argument("train_segmenter: labeled set is empty");
    const auto& unlabeled = view.unlabeled();
    if (bands && bands->size() != unlabeled.size()) throw std::invalid_argument("train_segmenter: one band per unlabeled image");
    if (pseudo && pseudo->size() != unlabeled.size()) throw std::invalid_argument("train_segmenter: one pseudo-mask per unlabeled image");

    const SegmenterSchedule& ss = config.segmenter;
    Rng init_rng(derive_seed(config.seed, "segmenter-init"));
    ParamSet params = init_segmenter(init_rng);
    OptimizerState opt = OptimizerState::adam(ss.lr, ss.beta1, ss.beta2, ss.eps);
    LrSchedule schedule = LrSchedule::plateau(ss.lr, ss.patience, ss.threshold);

    // With lambda = 0 the penalty term vanishes from the objective, so the
    // unlabeled pass is skipped entirely.
    const bool penalize = bands != nullptr && config.lambda > 0.0;
    const auto validation = view.segmenter_validation();

    SegmenterResult result;
    if (bands) result.satisfied_before = band_satisfaction(params, unlabeled, *bands);
    double best_dsc = 0.0;

    for (std::size_t epoch = 0; epoch < ss.epochs; ++epoch) {
        opt.lr = schedule.lr();
        EpochRecord rec;
        rec.epoch = epoch;
        rec.lr = opt.lr;

        for (std::size_t i : shuffled(view.labeled().size(), derive_seed(config.seed, "segmenter-order", epoch))) {
            const LabeledSample& s = view.labeled()[i];
            rec.loss_y += segmenter_step(params, opt, s.image, [&](Tape& tape, Var probs) -> std::optional<Var> {
                return cross_entropy(tape, probs, s.mask);
            });
        }

        // Unlabeled pass: fixed order, no random draws. Samples whose term
        // has an identically zero gradient (inside the band, or no pseudo
        // foreground) contribute nothing and take no optimizer step.
        if (epoch >= config.warmup_epochs) {
            for (std::size_t j = 0; j < unlabeled.size(); ++j) {
                if (penalize) {
                    const SizeBand& band = (*bands)[j];
                    double penalty_value = 0.0;
                    segmenter_step(params, opt, unlabeled[j].image, [&](Tape& tape, Var probs) -> std::optional<Var> {
                        Var penalty = size_penalty(tape, soft_size(tape, probs), band);
                        penalty_value = tape.value(penalty).item();
                        if (penalty_value == 0.0) return std::nullopt;
                        return ops::mul_scalar(tape, penalty, config.lambda);
                    });
                    rec.loss_u += penalty_value;
                } else if (pseudo && (*pseudo)[j].foreground_count() > 0) {
                    const Mask& target = (*pseudo)[j];
                    rec.loss_u += segmenter_step(params, opt, unlabeled[j].image,
                                                 [&](Tape& tape, Var probs) -> std::optional<Var> {
                                                     return foreground_cross_entropy(tape, probs, target);
                                                 });
                }
            }
        }

        rec.loss_total = pseudo ? rec.loss_y + rec.loss_u : rec.loss_y + config.lambda * rec.loss_u;
        rec.val_dsc = validation_dsc(params, validation);
        result.trace.records.push_back(rec);
        if (epoch == 0 || rec.val_dsc > best_dsc) {
            best_dsc = rec.val_dsc;
            result.best_epoch = epoch;
            result.best_params = params;
        }
        schedule.step(epoch, rec.val_dsc);
    }
    if (bands) result.satisfied_after = band_satisfaction(params, unlabeled, *bands);
    result.params = std::move(params);
    return result;
}

SegmenterResult train_fs(SplitView& view, const ExperimentConfig& config) {
    return train_segmenter(view, config, nullptr, nullptr);
}

std::vector<Mask> make_proposals(const ParamSet& params, const std::vector<UnlabeledSample>& images) {
    std::vector<Mask> out;
    out.reserve(images.size());
    for (const auto& s : images) out.push_back(predict(params, s.image).argmax());
    return out;
}

SegmenterResult train_proposals(SplitView& view, const ExperimentConfig& config, const ParamSet* fs_params) {
    ParamSet trained;
    if (!fs_params) {
        trained = train_fs(view, config).params;
        fs_params = &trained;
    }
    const std::vector<Mask> pseudo = make_proposals(*fs_params, view.unlabeled());
    return train_segmenter(view, config, nullptr, &pseudo);
}

SegmenterResult train_curriculum(SplitView& view, const ExperimentConfig& config, const ParamSet& regressor) {
    std::vector<SizeBand> bands;
    bands.reserve(view.unlabeled().size());
    for (const auto& s : view.unlabeled()) {
        bands.push_back(SizeBand::around(predict_size(regressor, s.image), config.gamma, SizeSource::regressor));
    }
    return train_segmenter(view, config, &bands, nullptr);
}

SegmenterResult train_oracle(SplitView& view, const ExperimentConfig& config) {
    if (view.mode() != AccessMode::oracle) throw AccessDenied("train_oracle requires an oracle split view");
    std::vector<SizeBand> bands;
    bands.reserve(view.unlabeled().size());
    for (std::size_t j = 0; j < view.unlabeled().size(); ++j) {
        bands.push_back(SizeBand::around(view.unlabeled_size(j), config.gamma, SizeSource::oracle));
    }
    return train_segmenter(view, config, &bands, nullptr);
}

ArmResult run_arm(const DatasetSplit& split, const ExperimentConfig& config, const ParamSet* regressor) {
    SplitView view(split, config.arm == Arm::oracle ? AccessMode::oracle : AccessMode::standard);
    ArmResult result;
    switch (config.arm) {
        case Arm::fs:
            result.segmenter = train_fs(view, config);
            break;
        case Arm::proposals:
            result.segmenter = train_proposals(view, config);
            break;
        case Arm::curriculum:
            if (!regressor) {
                result.regressor = train_regressor(view, config);
                regressor = &result.regressor->params;
            }
            result.segmenter = train_curriculum(view, config, *regressor);
            break;
        case Arm::oracle:
            result.segmenter = train_oracle(view, config);
            break;
    }
    result.audit = view.audit();
    return result;
}

DatasetSplit make_split(const ExperimentConfig& config) {
    return make_split(config.total, config.n_labeled, config.validation, config.seed, config.data);
}

}  // namespace cseg
