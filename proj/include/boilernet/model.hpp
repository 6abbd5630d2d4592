#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "boilernet/rng.hpp"

namespace boilernet::model {

struct ModelConfig {
    std::size_t d = 0;      // input dimension (k + l + 2)
    std::size_t m = 256;    // embedding dimension
    std::size_t h = 256;    // hidden units per direction
    std::size_t layers = 2; // stacked BiLSTM layers
    double dropout_p = 0.5; // applied after the last LSTM layer, train mode only
    std::uint64_t seed = 0;
};

// One direction's LSTM parameters. Gate blocks within the 4h axis are
// ordered [input, forget, candidate, output].
struct LstmWeights {
    Eigen::MatrixXd wx; // in_dim x 4h
    Eigen::MatrixXd wh; // h x 4h
    Eigen::VectorXd b;  // 4h
};

struct ModelParams {
    std::size_t d = 0, m = 0, h = 0, layers = 0;
    Eigen::MatrixXd embed_w;       // d x m
    Eigen::VectorXd embed_b;       // m
    std::vector<LstmWeights> fwd;  // per layer, left-to-right pass
    std::vector<LstmWeights> bwd;  // per layer, right-to-left pass
    Eigen::VectorXd out_w;         // 2h
    Eigen::VectorXd out_b;         // size 1

    // Zero-valued parameters with identical shapes (gradient container).
    ModelParams zeros_like() const;
};

// Named flat view over every parameter tensor, in serialization order.
struct TensorView {
    std::string name;
    double* data;
    std::size_t size;
};
std::vector<TensorView> tensor_views(ModelParams& params);

// Xavier-uniform weights from a seeded stream, zero biases except the
// LSTM forget-gate bias, which is 1.
ModelParams init_params(const ModelConfig& config);

// Single LSTM step. Dimension mismatches raise ParameterError.
std::pair<Eigen::VectorXd, Eigen::VectorXd> lstm_cell(const Eigen::VectorXd& x,
                                                      const Eigen::VectorXd& h_prev,
                                                      const Eigen::VectorXd& c_prev,
                                                      const LstmWeights& w);

// Bidirectional layer: output_t = concat(forward_t, backward_t), both
// directions starting from zero state. Empty input raises ParameterError.
std::vector<Eigen::VectorXd> bilstm_layer(const std::vector<Eigen::VectorXd>& inputs,
                                          const LstmWeights& wf, const LstmWeights& wb);

enum class Mode { Train, Infer };

// Per-direction activations recorded for backpropagation.
struct DirectionCache {
    std::vector<Eigen::VectorXd> gate_i, gate_f, gate_g, gate_o;
    std::vector<Eigen::VectorXd> c, h, tanh_c;
};

struct ForwardCache {
    std::vector<Eigen::VectorXd> embedded;                  // n of m
    std::vector<std::vector<Eigen::VectorXd>> layer_inputs; // per layer, n vectors
    std::vector<DirectionCache> fwd_cache, bwd_cache;       // per layer
    std::vector<Eigen::VectorXd> concat;                    // n of 2h, last layer output
    Eigen::MatrixXd dropout_scale;                          // n x 2h, 0 or 1/(1-p)
    std::vector<Eigen::VectorXd> dropped;                   // n of 2h
    Eigen::VectorXd logits;                                 // n
    Eigen::VectorXd probs;                                  // n
};

struct ForwardOptions {
    Mode mode = Mode::Infer;
    double dropout_p = 0.0;
    Rng* rng = nullptr;                          // required in train mode with p > 0
    const Eigen::MatrixXd* dropout_scale = nullptr; // explicit mask override (tests)
};

// Runs the full net over one page (rows of x are block encodings).
// Returns per-block content probabilities, strictly inside (0,1).
// NaN anywhere raises NumericalError.
Eigen::VectorXd forward(const Eigen::MatrixXd& x, const ModelParams& params,
                        const ForwardOptions& options, ForwardCache* cache = nullptr);

// Convenience overload.
Eigen::VectorXd forward(const Eigen::MatrixXd& x, const ModelParams& params, Mode mode,
                        double dropout_p = 0.0, Rng* rng = nullptr);

// Canonical binary parameter format: magic "BSEQ", one version byte,
// little-endian uint32 d,m,h,layers, then row-major little-endian f32
// matrices in the order D, D-bias, per layer W^f {wx, wh, b} then
// W^b {wx, wh, b}, V, V-bias.
inline constexpr std::uint8_t kParamsFormatVersion = 1;

std::string serialize_params(const ModelParams& params);
ModelParams deserialize_params(std::string_view bytes);
void save_params(const ModelParams& params, const std::filesystem::path& file);
ModelParams load_params(const std::filesystem::path& file);

} // namespace boilernet::model
