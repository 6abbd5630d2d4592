#include "boilernet/eval.hpp"

#include <nlohmann/json.hpp>
#include <sstream>

#include "boilernet/errors.hpp"

namespace boilernet::eval {

std::vector<int> predict_labels(const Eigen::VectorXd& probabilities, double threshold) {
    if (!(threshold > 0.0 && threshold < 1.0)) {
        throw ParameterError("threshold must be inside (0,1)");
    }
    std::vector<int> labels(static_cast<std::size_t>(probabilities.size()));
    for (Eigen::Index i = 0; i < probabilities.size(); ++i) {
        labels[static_cast<std::size_t>(i)] = probabilities(i) >= threshold ? 1 : 0;
    }
    return labels;
}

namespace {

// F1 = 2PR/(P+R) when defined, else 0 with the undefined flag raised.
double safe_ratio(std::int64_t num, std::int64_t den, bool& undefined) {
    if (den == 0) {
        undefined = true;
        return 0.0;
    }
    return static_cast<double>(num) / static_cast<double>(den);
}

double f1_of(double p, double r) { return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0; }

} // namespace

EvalReport report_from_counts(std::int64_t tp, std::int64_t fp, std::int64_t fn,
                              std::int64_t tn) {
    EvalReport rep;
    rep.tp = tp;
    rep.fp = fp;
    rep.fn = fn;
    rep.tn = tn;
    rep.pos_precision = safe_ratio(tp, tp + fp, rep.undefined_metrics);
    rep.pos_recall = safe_ratio(tp, tp + fn, rep.undefined_metrics);
    rep.pos_f1 = f1_of(rep.pos_precision, rep.pos_recall);
    rep.neg_precision = safe_ratio(tn, tn + fn, rep.undefined_metrics);
    rep.neg_recall = safe_ratio(tn, tn + fp, rep.undefined_metrics);
    rep.neg_f1 = f1_of(rep.neg_precision, rep.neg_recall);
    return rep;
}

EvalReport evaluate_predictions(const std::vector<std::vector<int>>& predicted,
                                const std::vector<std::vector<int>>& gold) {
    if (predicted.size() != gold.size()) {
        throw ParameterError("prediction/gold page count mismatch");
    }
    if (predicted.empty()) throw ParameterError("cannot score an empty prediction set");
    std::int64_t tp = 0, fp = 0, fn = 0, tn = 0;
    for (std::size_t p = 0; p < predicted.size(); ++p) {
        if (predicted[p].size() != gold[p].size()) {
            throw ParameterError("prediction/gold length mismatch on page " +
                                 std::to_string(p));
        }
        for (std::size_t i = 0; i < predicted[p].size(); ++i) {
            int pred = predicted[p][i];
            int y = gold[p][i];
            if (pred == 1 && y == 1) ++tp;
            else if (pred == 1 && y == 0) ++fp;
            else if (pred == 0 && y == 1) ++fn;
            else ++tn;
        }
    }
    return report_from_counts(tp, fp, fn, tn);
}

EvalReport evaluate(const std::vector<encoder::PageSequence>& pages,
                    const model::ModelParams& params, double threshold) {
    if (pages.empty()) throw ParameterError("cannot evaluate an empty page set");
    std::vector<std::vector<int>> predicted;
    std::vector<std::vector<int>> gold;
    for (const encoder::PageSequence& page : pages) {
        if (page.labels.empty()) {
            throw ParameterError("unlabeled page in evaluation set: " + page.source_id);
        }
        Eigen::VectorXd probs =
            model::forward(page.matrix.cast<double>(), params, model::Mode::Infer);
        predicted.push_back(predict_labels(probs, threshold));
        gold.push_back(page.labels);
    }
    return evaluate_predictions(predicted, gold);
}

std::string format_report_tsv(const EvalReport& rep) {
    std::ostringstream out;
    out.precision(4);
    out << std::fixed;
    out << "class\tprecision\trecall\tf1\n";
    out << "content\t" << rep.pos_precision << "\t" << rep.pos_recall << "\t" << rep.pos_f1
        << "\n";
    out << "boilerplate\t" << rep.neg_precision << "\t" << rep.neg_recall << "\t"
        << rep.neg_f1 << "\n";
    out << "confusion\ttp=" << rep.tp << "\tfp=" << rep.fp << "\tfn=" << rep.fn
        << "\ttn=" << rep.tn << "\n";
    return out.str();
}

std::string format_report_json(const EvalReport& rep) {
    nlohmann::json j;
    j["confusion"] = {{"tp", rep.tp}, {"fp", rep.fp}, {"fn", rep.fn}, {"tn", rep.tn}};
    j["content"] = {{"precision", rep.pos_precision},
                    {"recall", rep.pos_recall},
                    {"f1", rep.pos_f1}};
    j["boilerplate"] = {{"precision", rep.neg_precision},
                        {"recall", rep.neg_recall},
                        {"f1", rep.neg_f1}};
    j["undefined_metrics"] = rep.undefined_metrics;
    return j.dump(2);
}

} // namespace boilernet::eval
