#include "boilernet/train.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include "boilernet/errors.hpp"
#include "boilernet/eval.hpp"

namespace boilernet::train {

namespace {

constexpr double kAdamBeta1 = 0.9;
constexpr double kAdamBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;

} // namespace

Batch make_batch(const std::vector<const encoder::PageSequence*>& pages) {
    if (pages.empty()) throw ParameterError("cannot build an empty batch");
    std::size_t n_max = 0;
    const auto d = pages.front()->matrix.cols();
    for (const encoder::PageSequence* p : pages) {
        if (p->matrix.cols() != d) throw ParameterError("mixed encoding widths in batch");
        if (p->labels.empty()) throw ParameterError("unlabeled page in training batch");
        n_max = std::max(n_max, static_cast<std::size_t>(p->matrix.rows()));
    }
    Batch batch;
    batch.mask = Eigen::MatrixXi::Zero(static_cast<Eigen::Index>(pages.size()),
                                       static_cast<Eigen::Index>(n_max));
    batch.labels = Eigen::MatrixXi::Zero(static_cast<Eigen::Index>(pages.size()),
                                         static_cast<Eigen::Index>(n_max));
    for (std::size_t i = 0; i < pages.size(); ++i) {
        const encoder::PageSequence& page = *pages[i];
        Eigen::MatrixXd padded =
            Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n_max), d);
        padded.topRows(page.matrix.rows()) = page.matrix.cast<double>();
        batch.pages.push_back(std::move(padded));
        for (Eigen::Index t = 0; t < page.matrix.rows(); ++t) {
            batch.mask(static_cast<Eigen::Index>(i), t) = 1;
            batch.labels(static_cast<Eigen::Index>(i), t) =
                page.labels[static_cast<std::size_t>(t)];
        }
    }
    return batch;
}

std::vector<Batch> make_batches(const std::vector<encoder::PageSequence>& pages,
                                std::size_t batch_size, Rng& rng) {
    if (pages.empty()) throw ParameterError("cannot batch zero pages");
    if (batch_size == 0) throw ParameterError("batch_size must be positive");
    std::vector<std::size_t> order(pages.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    rng.shuffle(order);
    std::vector<Batch> batches;
    for (std::size_t start = 0; start < order.size(); start += batch_size) {
        std::vector<const encoder::PageSequence*> group;
        for (std::size_t i = start; i < std::min(order.size(), start + batch_size); ++i) {
            group.push_back(&pages[order[i]]);
        }
        batches.push_back(make_batch(group));
    }
    return batches;
}

double weighted_bce(const Eigen::MatrixXd& probs, const Eigen::MatrixXi& labels,
                    const Eigen::MatrixXi& mask, std::pair<double, double> weights) {
    if (probs.rows() != labels.rows() || probs.cols() != labels.cols() ||
        probs.rows() != mask.rows() || probs.cols() != mask.cols()) {
        throw ParameterError("weighted_bce: shape mismatch");
    }
    double sum = 0.0;
    std::int64_t n = 0;
    for (Eigen::Index r = 0; r < probs.rows(); ++r) {
        for (Eigen::Index c = 0; c < probs.cols(); ++c) {
            if (mask(r, c) == 0) continue;
            double p = probs(r, c);
            if (!std::isfinite(p)) throw NumericalError("weighted_bce: non-finite probability");
            if (!(p > 0.0 && p < 1.0)) {
                throw ParameterError("weighted_bce: probability outside (0,1)");
            }
            int y = labels(r, c);
            double w = y == 1 ? weights.second : weights.first;
            sum += w * (y == 1 ? std::log(p) : std::log(1.0 - p));
            ++n;
        }
    }
    if (n == 0) throw ParameterError("weighted_bce: no unmasked positions");
    return -sum / static_cast<double>(n);
}

std::vector<Eigen::MatrixXd> draw_dropout_masks(const Batch& batch, std::size_t width,
                                                double dropout_p, Rng& rng) {
    std::vector<Eigen::MatrixXd> masks;
    double keep = 1.0 - dropout_p;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        auto len = static_cast<Eigen::Index>(batch.page_len(i));
        Eigen::MatrixXd mask(len, static_cast<Eigen::Index>(width));
        for (Eigen::Index r = 0; r < len; ++r) {
            for (Eigen::Index c = 0; c < mask.cols(); ++c) {
                mask(r, c) = dropout_p > 0.0 ? (rng.bernoulli(keep) ? 1.0 / keep : 0.0) : 1.0;
            }
        }
        masks.push_back(std::move(mask));
    }
    return masks;
}

namespace {

// BPTT over one direction of one layer. `indices` is the forward
// visitation order of that direction; gradients are accumulated into
// `grads` and into `dinputs` (per input position).
void backprop_direction(const std::vector<Eigen::VectorXd>& inputs,
                        const std::vector<std::size_t>& indices,
                        const model::DirectionCache& cache, const model::LstmWeights& w,
                        model::LstmWeights& grads,
                        const std::vector<Eigen::VectorXd>& dh_out,
                        std::vector<Eigen::VectorXd>& dinputs) {
    const Eigen::Index h = w.wh.rows();
    const std::size_t n = indices.size();
    Eigen::VectorXd dh_carry = Eigen::VectorXd::Zero(h);
    Eigen::VectorXd dc_carry = Eigen::VectorXd::Zero(h);
    Eigen::VectorXd da(4 * h);
    for (std::size_t s = n; s-- > 0;) {
        const std::size_t t = indices[s];
        const Eigen::VectorXd& gi = cache.gate_i[t];
        const Eigen::VectorXd& gf = cache.gate_f[t];
        const Eigen::VectorXd& gg = cache.gate_g[t];
        const Eigen::VectorXd& go = cache.gate_o[t];
        const Eigen::VectorXd& tc = cache.tanh_c[t];

        Eigen::VectorXd dh = dh_out[t] + dh_carry;
        Eigen::VectorXd dgo = dh.cwiseProduct(tc);
        Eigen::VectorXd dc =
            dc_carry + (dh.array() * go.array() * (1.0 - tc.array().square())).matrix();

        Eigen::VectorXd c_prev =
            s > 0 ? cache.c[indices[s - 1]] : Eigen::VectorXd::Zero(h);
        const Eigen::VectorXd h_prev =
            s > 0 ? cache.h[indices[s - 1]] : Eigen::VectorXd::Zero(h);

        da.segment(0, h) =
            (dc.array() * gg.array() * gi.array() * (1.0 - gi.array())).matrix();
        da.segment(h, h) =
            (dc.array() * c_prev.array() * gf.array() * (1.0 - gf.array())).matrix();
        da.segment(2 * h, h) =
            (dc.array() * gi.array() * (1.0 - gg.array().square())).matrix();
        da.segment(3 * h, h) =
            (dgo.array() * go.array() * (1.0 - go.array())).matrix();

        grads.wx.noalias() += inputs[t] * da.transpose();
        grads.wh.noalias() += h_prev * da.transpose();
        grads.b += da;
        dinputs[t].noalias() += w.wx * da;
        dh_carry.noalias() = w.wh * da;
        dc_carry = dc.cwiseProduct(gf);
    }
}

std::vector<std::size_t> iota_order(std::size_t n, bool reversed) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = reversed ? n - 1 - i : i;
    return idx;
}

// Accumulates gradients of the (already 1/N-scaled) per-position logit
// derivatives for a single page.
void backprop_page(const Eigen::MatrixXd& x, const model::ModelParams& params,
                   const model::ForwardCache& cache, const Eigen::VectorXd& dlogits,
                   model::ModelParams& grads) {
    const std::size_t n = static_cast<std::size_t>(x.rows());
    const Eigen::Index h2 = params.out_w.size();
    const Eigen::Index h = h2 / 2;

    std::vector<Eigen::VectorXd> dout(n);
    for (std::size_t t = 0; t < n; ++t) {
        double dl = dlogits(static_cast<Eigen::Index>(t));
        grads.out_w.noalias() += cache.dropped[t] * dl;
        grads.out_b(0) += dl;
        Eigen::VectorXd dz = params.out_w * dl;
        dout[t] = dz.cwiseProduct(
            cache.dropout_scale.row(static_cast<Eigen::Index>(t)).transpose());
    }

    for (std::size_t layer = params.layers; layer-- > 0;) {
        const std::vector<Eigen::VectorXd>& inputs = cache.layer_inputs[layer];
        std::vector<Eigen::VectorXd> dinputs(
            n, Eigen::VectorXd::Zero(inputs[0].size()));
        std::vector<Eigen::VectorXd> dh_fwd(n), dh_bwd(n);
        for (std::size_t t = 0; t < n; ++t) {
            dh_fwd[t] = dout[t].segment(0, h);
            dh_bwd[t] = dout[t].segment(h, h);
        }
        backprop_direction(inputs, iota_order(n, false), cache.fwd_cache[layer],
                           params.fwd[layer], grads.fwd[layer], dh_fwd, dinputs);
        backprop_direction(inputs, iota_order(n, true), cache.bwd_cache[layer],
                           params.bwd[layer], grads.bwd[layer], dh_bwd, dinputs);
        dout = std::move(dinputs);
    }

    for (std::size_t t = 0; t < n; ++t) {
        grads.embed_w.noalias() +=
            x.row(static_cast<Eigen::Index>(t)).transpose() * dout[t].transpose();
        grads.embed_b += dout[t];
    }
}

} // namespace

BatchResult batch_forward(const Batch& batch, const model::ModelParams& params,
                          std::pair<double, double> weights,
                          const std::vector<Eigen::MatrixXd>* dropout_masks) {
    BatchResult result;
    result.probs = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(batch.size()),
                                             static_cast<Eigen::Index>(batch.max_len()), 0.5);
    for (std::size_t i = 0; i < batch.size(); ++i) {
        auto len = static_cast<Eigen::Index>(batch.page_len(i));
        model::ForwardOptions opts;
        if (dropout_masks) {
            opts.mode = model::Mode::Train;
            opts.dropout_p = 0.5; // any value > 0: the explicit mask wins
            opts.dropout_scale = &(*dropout_masks)[i];
        }
        Eigen::VectorXd probs = model::forward(batch.pages[i].topRows(len), params, opts);
        result.probs.row(static_cast<Eigen::Index>(i)).head(len) = probs.transpose();
        result.block_count += static_cast<std::size_t>(len);
    }
    result.loss = weighted_bce(result.probs, batch.labels, batch.mask, weights);
    return result;
}

BatchResult compute_gradients(const Batch& batch, const model::ModelParams& params,
                              std::pair<double, double> weights,
                              const std::vector<Eigen::MatrixXd>* dropout_masks) {
    BatchResult result;
    result.gradients = params.zeros_like();
    result.probs = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(batch.size()),
                                             static_cast<Eigen::Index>(batch.max_len()), 0.5);
    std::vector<model::ForwardCache> caches(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) {
        auto len = static_cast<Eigen::Index>(batch.page_len(i));
        model::ForwardOptions opts;
        if (dropout_masks) {
            opts.mode = model::Mode::Train;
            opts.dropout_p = 0.5;
            opts.dropout_scale = &(*dropout_masks)[i];
        }
        Eigen::VectorXd probs =
            model::forward(batch.pages[i].topRows(len), params, opts, &caches[i]);
        result.probs.row(static_cast<Eigen::Index>(i)).head(len) = probs.transpose();
        result.block_count += static_cast<std::size_t>(len);
    }
    result.loss = weighted_bce(result.probs, batch.labels, batch.mask, weights);

    const double inv_n = 1.0 / static_cast<double>(result.block_count);
    for (std::size_t i = 0; i < batch.size(); ++i) {
        auto len = static_cast<Eigen::Index>(batch.page_len(i));
        Eigen::VectorXd dlogits(len);
        for (Eigen::Index t = 0; t < len; ++t) {
            int y = batch.labels(static_cast<Eigen::Index>(i), t);
            double w = y == 1 ? weights.second : weights.first;
            dlogits(t) =
                w * (result.probs(static_cast<Eigen::Index>(i), t) - y) * inv_n;
        }
        backprop_page(batch.pages[i].topRows(len), params, caches[i], dlogits,
                      result.gradients);
    }

    for (const model::TensorView& view : model::tensor_views(result.gradients)) {
        for (std::size_t j = 0; j < view.size; ++j) {
            if (!std::isfinite(view.data[j])) {
                throw NumericalError("non-finite gradient in parameter block " + view.name);
            }
        }
    }
    return result;
}

BatchResult compute_gradients(const Batch& batch, const model::ModelParams& params,
                              const TrainConfig& config, double dropout_p, Rng& rng) {
    std::vector<Eigen::MatrixXd> masks =
        draw_dropout_masks(batch, 2 * params.h, dropout_p, rng);
    return compute_gradients(batch, params, config.weights, &masks);
}

namespace {

// Global-norm clipping; returns true when triggered.
bool clip_gradients(model::ModelParams& grads, double clip_norm) {
    double sq = 0.0;
    auto views = model::tensor_views(grads);
    for (const model::TensorView& v : views) {
        for (std::size_t i = 0; i < v.size; ++i) sq += v.data[i] * v.data[i];
    }
    double norm = std::sqrt(sq);
    if (norm <= clip_norm || norm == 0.0) return false;
    double scale = clip_norm / norm;
    for (const model::TensorView& v : views) {
        for (std::size_t i = 0; i < v.size; ++i) v.data[i] *= scale;
    }
    return true;
}

struct AdamState {
    model::ModelParams m, v;
    std::size_t step = 0;
};

void adam_update(model::ModelParams& params, model::ModelParams& grads, AdamState& state,
                 double lr) {
    ++state.step;
    const double bc1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(state.step));
    auto pv = model::tensor_views(params);
    auto gv = model::tensor_views(grads);
    auto mv = model::tensor_views(state.m);
    auto vv = model::tensor_views(state.v);
    for (std::size_t k = 0; k < pv.size(); ++k) {
        for (std::size_t i = 0; i < pv[k].size; ++i) {
            double g = gv[k].data[i];
            double& m = mv[k].data[i];
            double& v = vv[k].data[i];
            m = kAdamBeta1 * m + (1.0 - kAdamBeta1) * g;
            v = kAdamBeta2 * v + (1.0 - kAdamBeta2) * g * g;
            pv[k].data[i] -= lr * (m / bc1) / (std::sqrt(v / bc2) + kAdamEps);
        }
    }
}

} // namespace

TrainResult train(const std::vector<encoder::PageSequence>& train_pages,
                  const std::vector<encoder::PageSequence>& val_pages,
                  const model::ModelConfig& model_config, const TrainConfig& train_config,
                  const std::optional<std::filesystem::path>& checkpoint_dir) {
    if (train_pages.empty()) throw ParameterError("empty training split");

    TrainResult result;
    model::ModelParams params = model::init_params(model_config);
    result.best_params = params;
    result.best_epoch = 0;
    result.best_f1 = -1.0;

    AdamState adam{params.zeros_like(), params.zeros_like(), 0};
    Rng rng(train_config.seed);
    std::size_t clip_events = 0;

    if (checkpoint_dir) std::filesystem::create_directories(*checkpoint_dir);

    for (std::size_t epoch = 1; epoch <= train_config.epochs; ++epoch) {
        std::vector<Batch> batches = make_batches(train_pages, train_config.batch_size, rng);
        double loss_sum = 0.0;
        std::size_t block_sum = 0;
        for (const Batch& batch : batches) {
            BatchResult br =
                compute_gradients(batch, params, train_config, model_config.dropout_p, rng);
            if (!std::isfinite(br.loss)) {
                throw NumericalError("training diverged at epoch " + std::to_string(epoch));
            }
            loss_sum += br.loss * static_cast<double>(br.block_count);
            block_sum += br.block_count;
            if (clip_gradients(br.gradients, train_config.clip_norm)) ++clip_events;
            adam_update(params, br.gradients, adam, train_config.learning_rate);
        }

        EpochStats stats;
        stats.epoch = epoch;
        stats.loss = loss_sum / static_cast<double>(block_sum);
        if (!val_pages.empty()) {
            eval::EvalReport rep = eval::evaluate(val_pages, params, train_config.threshold);
            stats.val_precision = rep.pos_precision;
            stats.val_recall = rep.pos_recall;
            stats.val_f1 = rep.pos_f1;
        }
        result.history.push_back(stats);
        if (stats.val_f1 > result.best_f1) {
            result.best_f1 = stats.val_f1;
            result.best_epoch = epoch;
            result.best_params = params;
        }
        if (checkpoint_dir) {
            model::save_params(params,
                               *checkpoint_dir / ("epoch-" + std::to_string(epoch) + ".bseq"));
        }
    }

    if (clip_events > 0) {
        std::cerr << "gradient clipping triggered on " << clip_events << " batches\n";
    }
    if (checkpoint_dir) {
        model::save_params(result.best_params, *checkpoint_dir / "best.bseq");
        std::ofstream hist(*checkpoint_dir / "history.tsv", std::ios::binary);
        hist << format_history(result.history);
    }
    return result;
}

std::string format_history(const std::vector<EpochStats>& history) {
    std::ostringstream out;
    out.precision(6);
    out << std::fixed;
    out << "epoch\tloss\tval_P\tval_R\tval_F1\n";
    for (const EpochStats& e : history) {
        out << e.epoch << "\t" << e.loss << "\t" << e.val_precision << "\t" << e.val_recall
            << "\t" << e.val_f1 << "\n";
    }
    return out.str();
}

} // namespace boilernet::train
