#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "boilernet/encoder.hpp"
#include "boilernet/model.hpp"

namespace boilernet::eval {

// Block-level micro-aggregated confusion counts and per-class metrics.
// Positive class = content.
struct EvalReport {
    std::int64_t tp = 0, fp = 0, fn = 0, tn = 0;
    double pos_precision = 0.0, pos_recall = 0.0, pos_f1 = 0.0;
    double neg_precision = 0.0, neg_recall = 0.0, neg_f1 = 0.0;
    bool undefined_metrics = false; // some P/R had a zero denominator

    std::int64_t total() const { return tp + fp + fn + tn; }
};

// label 1 iff probability >= threshold. Threshold must lie in (0,1).
std::vector<int> predict_labels(const Eigen::VectorXd& probabilities,
                                double threshold = 0.5);

EvalReport report_from_counts(std::int64_t tp, std::int64_t fp, std::int64_t fn,
                              std::int64_t tn);

// Scores every labeled page at the given threshold. Pages must all carry
// labels; an empty page list is an error.
EvalReport evaluate(const std::vector<encoder::PageSequence>& pages,
                    const model::ModelParams& params, double threshold = 0.5);

// Confusion from already-computed predictions (one vector per page).
EvalReport evaluate_predictions(const std::vector<std::vector<int>>& predicted,
                                const std::vector<std::vector<int>>& gold);

std::string format_report_tsv(const EvalReport& report);
std::string format_report_json(const EvalReport& report);

} // namespace boilernet::eval
