#pragma once

// Toy-scale structure networks: node feature encoder, pairwise encoder and
// the skeleton / v-structure / node-edge heads, plus their losses.

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "sicl/autodiff.hpp"
#include "sicl/graph.hpp"
#include "sicl/postproc.hpp"
#include "sicl/scm.hpp"

namespace sicl::nn {

class ParamStore {
   public:
    Tensor add(const std::string& name, Shape shape, std::vector<double> init);
    const Tensor& get(const std::string& name) const;
    bool contains(const std::string& name) const { return index_.count(name) != 0; }
    const std::vector<std::pair<std::string, Tensor>>& items() const { return items_; }
    std::size_t scalar_count() const;
    void zero_grad();
    // Copies values of every parameter whose name starts with one of the
    // prefixes; shapes must agree. Returns the number copied.
    int copy_from(const ParamStore& other, const std::vector<std::string>& prefixes);
    std::string shape_hash() const;

   private:
    std::vector<std::pair<std::string, Tensor>> items_;
    std::map<std::string, std::size_t> index_;
};

struct Adam {
    double lr = 3e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    long step_count = 0;
    std::map<std::string, std::vector<double>> m, v;

    void step(ParamStore& params);
};

// --- layers -------------------------------------------------------------------

struct Linear {
    Tensor w, b;
    static Linear make(ParamStore& ps, const std::string& name, int in, int out, std::uint64_t seed, bool bias = true);
    Tensor operator()(const Tensor& x) const { return linear(x, w, b); }
};

struct LayerNorm {
    Tensor gamma, beta;
    static LayerNorm make(ParamStore& ps, const std::string& name, int h);
    Tensor operator()(const Tensor& x) const { return layer_norm(x, gamma, beta); }
};

struct MultiHeadAttention {
    Linear q, k, v, o;
    int heads = 1;
    static MultiHeadAttention make(ParamStore& ps, const std::string& name, int h, int heads, std::uint64_t seed);
    // query: [B, Lq, h], source: [B, Lk, h]
    Tensor operator()(const Tensor& query, const Tensor& source) const;
};

// Post-norm transformer encoder layer over axis 1 of [B, L, h].
struct EncoderLayer {
    MultiHeadAttention attn;
    LayerNorm ln1, ln2;
    Linear ff1, ff2;
    static EncoderLayer make(ParamStore& ps, const std::string& name, int h, int heads, int ffn, std::uint64_t seed);
    Tensor operator()(const Tensor& x) const;
};

// --- networks ---------------------------------------------------------------------

enum class ModelKind { Spn, Vpn, NodeEdge };
const char* to_string(ModelKind k);
ModelKind model_kind_from_string(const std::string& s);

struct ModelConfig {
    int hidden = 16;
    int blocks = 2;
    int heads = 2;
    int ffn = 32;
    int head_hidden = 32;
    int max_arity = 0;  // 0: continuous inputs; otherwise embedding table size
    // Inference on more rows than this splits the sample into strided row
    // blocks of at most this size and averages the output probabilities; 0 disables.
    int block_rows = 100;

    bool operator==(const ModelConfig&) const = default;
};

nlohmann::json to_json(const ModelConfig& c);
ModelConfig model_config_from_json(const nlohmann::json& j);

struct ForwardResult {
    Tensor F;       // [d, n, h]
    Tensor P;       // [d, d, n, h]; null for node-edge
    Tensor logits;  // Spn, NodeEdge: [d, d]; Vpn: [d, d, d] indexed (center, leaf, leaf)
};

class Network {
   public:
    Network(ModelKind kind, const ModelConfig& cfg, std::uint64_t seed);
    // Layers hold handles into the parameter store, so copies would alias.
    Network(const Network&) = delete;
    Network& operator=(const Network&) = delete;
    Network(Network&&) = default;
    Network& operator=(Network&&) = default;

    ModelKind kind() const { return kind_; }
    const ModelConfig& config() const { return cfg_; }
    ParamStore& params() { return params_; }
    const ParamStore& params() const { return params_; }

    Tensor embed(const scm::DataSample& data) const;
    Tensor encode_nodes(const Tensor& raw) const;
    Tensor encode_pairs(const Tensor& F) const;
    ForwardResult forward(const scm::DataSample& data) const;

    // Number of node-encoder runs since construction.
    long encoder_calls() const { return encoder_calls_; }

   private:
    ModelKind kind_;
    ModelConfig cfg_;
    ParamStore params_;
    Tensor embed_w_, embed_b_, embed_table_;
    std::vector<EncoderLayer> obs_layers_, node_layers_;
    Linear pair_a_, pair_b_, pair_2_, pair_3_;
    MultiHeadAttention cross_;
    LayerNorm pair_ln1_, pair_ln2_;
    Linear pair_ff1_, pair_ff2_;
    Linear skel_out_;
    Linear v_pair_, v_node_, v_out_;
    Linear ne_u_, ne_a_, ne_b_, ne_out_;
    mutable long encoder_calls_ = 0;
};

// Columns centered and scaled to unit variance (constant columns become 0).
std::vector<double> standardized_columns(const scm::DataSample& data);
// ceil(n / block_rows) blocks; row r goes to block r mod count.
std::vector<scm::DataSample> row_blocks(const scm::DataSample& data, int block_rows);

// Probability outputs of a forward pass.
std::vector<double> skeleton_probs(const Network& spn, const scm::DataSample& data);
std::vector<double> vstruct_probs(const Network& vpn, const scm::DataSample& data);
std::vector<double> node_edge_probs(const Network& net, const scm::DataSample& data);  // diagonal 0

StructurePrediction predict(const Network& spn, const Network& vpn, const scm::DataSample& data);

// --- losses -------------------------------------------------------------------------

std::vector<double> skeleton_labels(const Dag& g);             // d*d, adj or adj^T
std::vector<double> vstruct_labels(const Dag& g);              // d^3 (center, leaf, leaf)
std::vector<double> ut_mask(const Skeleton& s);                // 1 at UT triples (both leaf orders)
std::vector<double> off_diagonal_mask(int d);

// S: [d, d] probabilities.
Tensor skeleton_loss(const Tensor& S, const Dag& g);
struct MaskedLoss {
    Tensor loss;
    bool empty_mask = false;
};
// U: [d, d, d] probabilities.
MaskedLoss vstruct_loss(const Tensor& U, const Dag& g, const Skeleton& ut_source);

// Logit forms used for training; same values away from the clamp.
Tensor skeleton_loss_logits(const Tensor& z, const Dag& g);
MaskedLoss vstruct_loss_logits(const Tensor& z, const Dag& g, const Skeleton& ut_source);
Tensor node_edge_loss_logits(const Tensor& z, const Dag& g);

// --- checkpoints ------------------------------------------------------------------------

// Writes <path> (JSON manifest) and <path>.bin (little-endian f64 values).
void save_checkpoint(const std::filesystem::path& path, const Network& net, const nlohmann::json& training = {});
Network load_checkpoint(const std::filesystem::path& path);

}  // namespace sicl::nn
