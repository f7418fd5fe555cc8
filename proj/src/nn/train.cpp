#include "sgq/nn/train.hpp"

#include <cstdio>
#include <fstream>

#include "sgq/common.hpp"

namespace sgq::nn {

void write_history_csv(const std::filesystem::path& path, const TrainHistory& history) {
    std::ofstream f(path);
    if (!f) throw DataError("cannot write history: " + path.string());
    f << "epoch,train_mse,val_mse,best_flag\n";
    char buf[128];
    for (const auto& r : history.rows) {
        std::snprintf(buf, sizeof(buf), "%d,%.9g,%.9g,%d\n", r.epoch, r.train_mse, r.val_mse, r.best ? 1 : 0);
        f << buf;
    }
}

}  // namespace sgq::nn
