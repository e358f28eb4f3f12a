#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "pidinet/data.hpp"
#include "pidinet/loss.hpp"
#include "pidinet/model.hpp"
#include "pidinet/optim.hpp"

namespace pidinet {

struct TrainConfig {
    int epochs = 14;
    double lr = 0.005;
    bool extra_data_schedule = false;  // decay at {10,16} instead of {8,12}
    LossConfig loss;
    std::uint64_t seed = 1;
    bool use_augment = false;
    int crop_size = 0;                 // 0 keeps native sizes
    std::ostream* progress = nullptr;  // optional per-epoch progress line
};

struct EpochLog {
    int epoch;
    double mean_loss;
    double lr;
};

struct TrainResult {
    std::vector<EpochLog> log;
    bool aborted = false;
    std::string abort_reason;
};

// Batch-1 training with deep supervision: the robust loss is summed over the
// four side maps and the fused map of every image. Epoch shuffling and
// augmentation draws come from streams keyed by (seed, sample, epoch), so
// runs with equal seeds are bit-identical. A non-finite loss aborts the run
// and restores the last completed epoch's weights.
TrainResult train_loop(PiDiNetModel& m, const std::vector<Sample>& data,
                       const TrainConfig& cfg);

// CSV rows: epoch, mean_loss, lr.
std::string train_log_csv(const std::vector<EpochLog>& log);

}  // namespace pidinet
