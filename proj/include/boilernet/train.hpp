#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "boilernet/encoder.hpp"
#include "boilernet/model.hpp"
#include "boilernet/rng.hpp"

namespace boilernet::train {

struct TrainConfig {
    std::size_t epochs = 50;
    std::size_t batch_size = 16;
    double learning_rate = 1e-3;
    std::pair<double, double> weights = {1.0, 1.0}; // (w0, w1) class weights
    std::uint64_t seed = 0;
    double clip_norm = 5.0;   // global gradient-norm clip
    double threshold = 0.5;   // validation classification threshold
};

// A group of pages padded to a common length. Padded positions carry
// mask 0 and contribute nothing to loss, gradients or metrics.
struct Batch {
    std::vector<Eigen::MatrixXd> pages; // b matrices, each n_max x d
    Eigen::MatrixXi mask;               // b x n_max, 1 = real block
    Eigen::MatrixXi labels;             // b x n_max

    std::size_t size() const { return pages.size(); }
    std::size_t max_len() const { return static_cast<std::size_t>(mask.cols()); }
    std::size_t page_len(std::size_t i) const {
        return static_cast<std::size_t>(mask.row(static_cast<Eigen::Index>(i)).sum());
    }
};

Batch make_batch(const std::vector<const encoder::PageSequence*>& pages);

// Shuffles page order with the given stream, then chunks into batches of
// at most batch_size pages. Call once per epoch with a persistent rng.
std::vector<Batch> make_batches(const std::vector<encoder::PageSequence>& pages,
                                std::size_t batch_size, Rng& rng);

// loss = -(1/N) sum over unmasked positions of w_y [y ln p + (1-y) ln(1-p)].
double weighted_bce(const Eigen::MatrixXd& probs, const Eigen::MatrixXi& labels,
                    const Eigen::MatrixXi& mask, std::pair<double, double> weights);

// Per-page dropout scale matrices for one batch (real lengths only).
std::vector<Eigen::MatrixXd> draw_dropout_masks(const Batch& batch, std::size_t width,
                                                double dropout_p, Rng& rng);

struct BatchResult {
    double loss = 0.0;
    std::size_t block_count = 0;       // unmasked positions
    Eigen::MatrixXd probs;             // b x n_max, 0.5 at padded positions
    model::ModelParams gradients;      // only when requested
};

// Forward over a batch; each page is run over its real length so padding
// never leaks into the recurrence.
BatchResult batch_forward(const Batch& batch, const model::ModelParams& params,
                          std::pair<double, double> weights,
                          const std::vector<Eigen::MatrixXd>* dropout_masks = nullptr);

// Forward + exact reverse-mode gradients of the weighted BCE loss. The
// same dropout masks are used for the value and the gradient.
BatchResult compute_gradients(const Batch& batch, const model::ModelParams& params,
                              std::pair<double, double> weights,
                              const std::vector<Eigen::MatrixXd>* dropout_masks = nullptr);
BatchResult compute_gradients(const Batch& batch, const model::ModelParams& params,
                              const TrainConfig& config, double dropout_p, Rng& rng);

struct EpochStats {
    std::size_t epoch = 0; // 1-based
    double loss = 0.0;
    double val_precision = 0.0;
    double val_recall = 0.0;
    double val_f1 = 0.0;
};

struct TrainResult {
    model::ModelParams best_params;
    std::vector<EpochStats> history;
    std::size_t best_epoch = 0; // 0 = initial parameters
    double best_f1 = -1.0;
};

// Full training loop: Adam (beta1 0.9, beta2 0.999, eps 1e-8), per-epoch
// validation, checkpoint with the best content-class F1 (earliest epoch
// wins ties). When checkpoint_dir is set, writes epoch-<n>.bseq,
// best.bseq and history.tsv there.
TrainResult train(const std::vector<encoder::PageSequence>& train_pages,
                  const std::vector<encoder::PageSequence>& val_pages,
                  const model::ModelConfig& model_config, const TrainConfig& train_config,
                  const std::optional<std::filesystem::path>& checkpoint_dir = std::nullopt);

std::string format_history(const std::vector<EpochStats>& history);

} // namespace boilernet::train
