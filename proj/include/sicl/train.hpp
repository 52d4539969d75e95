#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "json.hpp"
#include "sicl/nn.hpp"
#include "sicl/rng.hpp"
#include "sicl/scm.hpp"

namespace sicl::nn {

// Where training instances come from. `fig_cto` draws the constructed 6-node
// model under a random relabeling; otherwise graph + mechanism are sampled.
struct DataStream {
    bool fig_cto = false;
    scm::GraphModel graph = scm::ErdosRenyi{};
    scm::Mechanism mechanism = scm::LinearGaussian{};
    int d = 5;
    int n_min = 50;
    int n_max = 50;
};

struct Instance {
    Dag dag;
    scm::DataSample data;
};

// Deterministic in (stream, seed).
Instance draw_instance(const DataStream& stream, std::uint64_t seed);

struct TrainConfig {
    ModelKind target = ModelKind::Spn;
    ModelConfig model;
    DataStream stream;
    int steps = 1000;
    int batch = 8;
    double lr = 3e-4;
    double lr_final = 1.0;   // cosine decay from lr to lr * lr_final; 1 keeps it constant
    double clip_norm = 1.0;  // <= 0 disables global-norm clipping
    int validation_size = 16;
    int eval_every = 100;
    std::uint64_t seed = 0;
};

nlohmann::json to_json(const TrainConfig& c);
// Starts from `base` and overrides the fields present in j.
TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig base = {});

struct TrainLogEntry {
    int step = 0;
    double loss = 0.0;
    std::optional<double> validation_loss;
};

struct TrainResult {
    Network net;
    std::vector<TrainLogEntry> log;
    double initial_validation_loss = 0.0;
    double final_validation_loss = 0.0;
};

// Loss of the network's own target on one instance (mean over the batch by the caller).
MaskedLoss instance_loss(const Network& net, const Instance& inst);

double validation_loss(const Network& net, const std::vector<Instance>& batch);
std::vector<Instance> validation_batch(const TrainConfig& cfg);

using ProgressFn = std::function<void(const TrainLogEntry&)>;

// `init` of the same kind as the target is copied whole (fine-tuning; only
// block_rows may differ). A Vpn target also accepts a trained Spn and copies its
// encoder and pairwise weights. Any other pairing is an error.
TrainResult train(const TrainConfig& cfg, const Network* init = nullptr, const ProgressFn& progress = {});

std::string log_to_csv(const std::vector<TrainLogEntry>& log);

}  // namespace sicl::nn
