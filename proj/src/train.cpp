#include "pidinet/train.hpp"

#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>

namespace pidinet {

namespace {

void optimizer_step(PiDiNetModel& m, AdamState& opt) {
    adam_begin_step(opt);
    std::int64_t offset = 0;
    for (ParamBlockRef& b : param_blocks(m)) {
        adam_update(opt, offset, std::span<real>(b.weight->data),
                    std::span<const real>(b.weight->grad), b.name + ".weight");
        offset += b.weight->size();
        if (b.bias) {
            adam_update(opt, offset, std::span<real>(*b.bias),
                        std::span<const real>(*b.bias_grad), b.name + ".bias");
            offset += std::int64_t(b.bias->size());
        }
    }
}

}  // namespace

TrainResult train_loop(PiDiNetModel& m, const std::vector<Sample>& data,
                       const TrainConfig& cfg) {
    if (data.empty()) throw DataError("train_loop: empty dataset");
    if (cfg.epochs < 0) throw ParameterError("train_loop: negative epoch count");

    TrainResult result;
    if (cfg.epochs == 0) return result;

    AdamState opt = make_adam_state(stored_param_count(m), cfg.lr);
    PiDiNetModel checkpoint = m;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        opt.lr = cfg.lr * lr_schedule_factor(epoch, cfg.extra_data_schedule);

        std::vector<std::size_t> order(data.size());
        std::iota(order.begin(), order.end(), std::size_t(0));
        Rng shuffle_rng = substream(cfg.seed, 0x53484646ULL, std::uint64_t(epoch));
        for (std::size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[std::size_t(shuffle_rng.next_below(i))]);

        double epoch_loss = 0.0;
        bool bad = false;
        for (std::size_t oi = 0; oi < order.size() && !bad; ++oi) {
            const std::size_t idx = order[oi];
            const Sample* sp = &data[idx];
            Sample augmented;
            if (cfg.use_augment) {
                Rng arng = substream(cfg.seed, std::uint64_t(idx) + 1, std::uint64_t(epoch));
                augmented = augment(*sp, arng, cfg.crop_size);
                sp = &augmented;
            }

            ForwardTrace trace;
            ForwardResult out = forward(m, sp->image, trace);

            double loss = 0.0;
            std::array<Tensor, 4> grad_side;
            for (int s = 0; s < 4; ++s) {
                LossResult lr = robust_edge_loss(out.side[std::size_t(s)], sp->truth, cfg.loss);
                loss += lr.loss;
                grad_side[std::size_t(s)] = std::move(lr.grad_p);
            }
            LossResult lf = robust_edge_loss(out.fused, sp->truth, cfg.loss);
            loss += lf.loss;

            if (!std::isfinite(loss)) {
                result.aborted = true;
                result.abort_reason = "non-finite loss at epoch " + std::to_string(epoch) +
                                      ", sample " + sp->name;
                bad = true;
                break;
            }

            zero_grads(m);
            backward(m, trace, grad_side, lf.grad_p);
            try {
                optimizer_step(m, opt);
            } catch (const NonFiniteGradientError& e) {
                result.aborted = true;
                result.abort_reason = e.what();
                bad = true;
                break;
            }
            epoch_loss += loss;
        }

        if (bad) {
            m = checkpoint;  // retain the last completed epoch
            break;
        }
        result.log.push_back(EpochLog{epoch, epoch_loss / double(data.size()), opt.lr});
        if (cfg.progress)
            (*cfg.progress) << "epoch " << epoch << " mean_loss "
                            << epoch_loss / double(data.size()) << " lr " << opt.lr
                            << std::endl;
        checkpoint = m;
    }
    return result;
}

std::string train_log_csv(const std::vector<EpochLog>& log) {
    std::string out = "epoch,mean_loss,lr\n";
    char line[96];
    for (const EpochLog& e : log) {
        std::snprintf(line, sizeof(line), "%d,%.9g,%.9g\n", e.epoch, e.mean_loss, e.lr);
        out += line;
    }
    return out;
}

}  // namespace pidinet
