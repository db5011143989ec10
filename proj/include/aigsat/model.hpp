#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "aigsat/circuit.hpp"
#include "aigsat/sim.hpp"

namespace aigsat {

// per-node hidden vectors
using HiddenState = std::vector<std::vector<double>>;

// fixed polarity prototypes: all ones for logic 1, all minus-ones for logic 0
std::vector<double> prototype_pos(int dim);
std::vector<double> prototype_neg(int dim);

struct ParamGroup {
    std::string name;
    int offset = 0;
    int size = 0;
};

// One forward propagation layer, one reverse layer (independent storage),
// and a 3-layer MLP regressor with ReLU and a logistic output. All weights
// live in one flat array addressed through the layout below.
struct ModelParams {
    int dim = 64;
    std::vector<double> values;

    struct Layout {
        int fw_w1, fw_w2, fw_wih, fw_whh, fw_bih, fw_bhh;
        int rv_w1, rv_w2, rv_wih, rv_whh, rv_bih, rv_bhh;
        int reg_w1, reg_b1, reg_w2, reg_b2, reg_w3, reg_b3;
        int total;
        int input_dim;  // dim + 3 (gate-type one-hot)
    };
    Layout layout() const;
    std::vector<ParamGroup> groups() const;

    static ModelParams init(int dim, uint64_t seed);
};

struct TrainConfig {
    double learning_rate = 1e-4;
    double weight_decay = 1e-10;
    int epochs = 20;
    int batch_size = 64;
    uint64_t seed = 1;
    double val_fraction = 0.1;
};

struct EpochStats {
    int epoch = 0;
    double train_pe = 0;
    double val_pe = 0;
    double seconds = 0;
};

struct TrainResult {
    ModelParams params;
    std::vector<EpochStats> curve;
};

struct TrainingError : std::runtime_error {
    int batch_id;
    TrainingError(const std::string& what, int batch) : std::runtime_error(what), batch_id(batch) {}
};

// rows with m=+1/-1 become the exact prototype vectors
void apply_mask(HiddenState& h, const Mask& m);

// One directed message-passing sweep. Nodes are processed level by level
// (every gate adds one level here, so same-level nodes are independent);
// sources keep their input state.
HiddenState forward_prop(const AigCircuit& c, const HiddenState& h_init, const ModelParams& params);
HiddenState reverse_prop(const AigCircuit& c, const HiddenState& h_fw_masked, const ModelParams& params);

// mask -> forward -> mask -> reverse -> mask -> regressor; h_init sampled
// N(0,1) from `seed`. Masked nodes report their mask value exactly.
std::vector<double> predict(const AigCircuit& c, const Mask& m, const ModelParams& params, uint64_t seed);

// mean absolute error over unmasked nodes; throws when everything is masked
double loss(const std::vector<double>& predictions, const DatasetRecord& record);

TrainResult train(const std::vector<DatasetRecord>& dataset, const TrainConfig& cfg);

struct GradCheckReport {
    double max_rel_deviation = 0;
    std::string worst_group;
    int worst_index = -1;
};

// Central-difference verification of the analytic gradients. Checks every
// parameter when max_checks_per_group == 0, otherwise a deterministic sample
// of each group.
GradCheckReport grad_check(const ModelParams& params, const AigCircuit& circuit, double eps = 1e-4,
                           int max_checks_per_group = 0, uint64_t seed = 7);

void save_checkpoint(const ModelParams& params, const std::string& path);
ModelParams load_checkpoint(const std::string& path, int expected_dim = 0);

}  // namespace aigsat
