#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "boilernet/corpus.hpp"
#include "boilernet/dom.hpp"
#include "boilernet/encoder.hpp"
#include "boilernet/errors.hpp"
#include "boilernet/eval.hpp"
#include "boilernet/model.hpp"
#include "boilernet/text.hpp"
#include "boilernet/train.hpp"

namespace fs = std::filesystem;
using namespace boilernet;

namespace {

constexpr const char* kToolVersion = "1.0.0";

enum ExitCode { kOk = 0, kUsage = 1, kDataError = 2, kNumericalError = 3 };

std::string read_file(const fs::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw IoError("cannot read file: " + file.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return std::move(buf).str();
}

void write_file(const fs::path& file, std::string_view content) {
    std::ofstream out(file, std::ios::binary);
    if (!out) throw IoError("cannot write file: " + file.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
}

std::string fnv1a_hex(std::string_view bytes) {
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    for (char c : bytes) {
        hash ^= static_cast<unsigned char>(c);
        hash *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(hash));
    return buf;
}

std::string file_hash(const fs::path& file) { return fnv1a_hex(read_file(file)); }

void check_dims(const corpus::Vocabulary& vocab, const model::ModelParams& params) {
    if (vocab.d() != params.d) {
        throw ShapeMismatchError("vocabulary d=" + std::to_string(vocab.d()) +
                                 " does not match model d=" + std::to_string(params.d));
    }
}

std::vector<encoder::PageSequence> encode_pages(const std::vector<corpus::LabeledPage>& pages,
                                                const corpus::Vocabulary& vocab) {
    std::vector<encoder::PageSequence> out;
    out.reserve(pages.size());
    for (const corpus::LabeledPage& p : pages) out.push_back(encoder::encode_page(p, vocab));
    return out;
}

// ---------------------------------------------------------------------------

struct VocabArgs {
    std::string in_dir, out_file;
    std::size_t k = 50, l = 1000;
    std::string label_attr = std::string(corpus::kDefaultLabelAttribute);
};

int run_vocab(const VocabArgs& a) {
    auto pages = corpus::load_labeled_dir(a.in_dir, a.label_attr);
    if (pages.empty()) throw EmptyPageError("no labeled pages in " + a.in_dir);
    corpus::Vocabulary vocab = corpus::build_vocabulary(pages, a.k, a.l);
    corpus::save_vocabulary(vocab, a.out_file);
    std::cout << "vocabulary: " << vocab.k() << " tags, " << vocab.l() << " words, d=" <<
        vocab.d() << " -> " << a.out_file << "\n";
    return kOk;
}

// ---------------------------------------------------------------------------

struct TrainArgs {
    std::string in_dir, vocab_file, out_dir;
    std::string split_counts; // "train,val,test"
    std::uint64_t seed = 0;
    std::size_t epochs = 50, batch = 16, h = 256, m = 256, layers = 2;
    double lr = 1e-3, dropout = 0.5, threshold = 0.5;
    std::string label_attr = std::string(corpus::kDefaultLabelAttribute);
};

corpus::SplitSpec parse_split_counts(const std::string& counts, std::uint64_t seed) {
    corpus::SplitSpec spec;
    spec.seed = seed;
    if (std::sscanf(counts.c_str(), "%zu,%zu,%zu", &spec.train_count, &spec.val_count,
                    &spec.test_count) != 3) {
        throw ParameterError("bad --split value, expected train,val,test counts");
    }
    return spec;
}

int run_train(const TrainArgs& a) {
    auto pages = corpus::load_labeled_dir(a.in_dir, a.label_attr);
    if (pages.empty()) throw EmptyPageError("no labeled pages in " + a.in_dir);
    corpus::Vocabulary vocab = corpus::load_vocabulary(a.vocab_file);
    corpus::SplitSpec spec = parse_split_counts(a.split_counts, a.seed);
    corpus::Splits splits = corpus::split_dataset(std::move(pages), spec);
    if (splits.train.empty()) throw ParameterError("training split is empty");

    model::ModelConfig mc;
    mc.d = vocab.d();
    mc.m = a.m;
    mc.h = a.h;
    mc.layers = a.layers;
    mc.dropout_p = a.dropout;
    mc.seed = Rng::derive(a.seed, 1);

    train::TrainConfig tc;
    tc.epochs = a.epochs;
    tc.batch_size = a.batch;
    tc.learning_rate = a.lr;
    tc.seed = Rng::derive(a.seed, 2);
    tc.threshold = a.threshold;
    tc.weights = corpus::class_weights(splits.train);

    auto train_seq = encode_pages(splits.train, vocab);
    auto val_seq = encode_pages(splits.val, vocab);

    fs::create_directories(a.out_dir);
    write_file(fs::path(a.out_dir) / "split.tsv", corpus::format_split_manifest(splits));

    train::TrainResult result = train::train(train_seq, val_seq, mc, tc, fs::path(a.out_dir));

    nlohmann::json manifest;
    manifest["tool_version"] = kToolVersion;
    manifest["command"] = "train";
    manifest["seed"] = a.seed;
    manifest["inputs"] = {{"dir", a.in_dir}, {"vocab", a.vocab_file}};
    manifest["split"] = {{"train", spec.train_count},
                         {"val", spec.val_count},
                         {"test", spec.test_count}};
    manifest["config"] = {{"epochs", a.epochs},   {"batch_size", a.batch},
                          {"learning_rate", a.lr}, {"h", a.h},
                          {"m", a.m},             {"layers", a.layers},
                          {"dropout", a.dropout}, {"threshold", a.threshold},
                          {"w0", tc.weights.first}, {"w1", tc.weights.second}};
    manifest["vocab_hash"] = file_hash(a.vocab_file);
    manifest["best_epoch"] = result.best_epoch;
    manifest["best_val_f1"] = result.best_f1;
    manifest["model_hash"] = file_hash(fs::path(a.out_dir) / "best.bseq");
    write_file(fs::path(a.out_dir) / "manifest.json", manifest.dump(2) + "\n");

    std::cout << "best epoch " << result.best_epoch << " val F1 " << result.best_f1
              << " -> " << (fs::path(a.out_dir) / "best.bseq").string() << "\n";
    return kOk;
}

// ---------------------------------------------------------------------------

struct EvalArgs {
    std::string in_dir, vocab_file, model_file, out_file;
    double threshold = 0.5;
    std::string label_attr = std::string(corpus::kDefaultLabelAttribute);
};

int run_eval(const EvalArgs& a) {
    auto pages = corpus::load_labeled_dir(a.in_dir, a.label_attr);
    if (pages.empty()) throw EmptyPageError("no labeled pages in " + a.in_dir);
    corpus::Vocabulary vocab = corpus::load_vocabulary(a.vocab_file);
    model::ModelParams params = model::load_params(a.model_file);
    check_dims(vocab, params);
    eval::EvalReport report = eval::evaluate(encode_pages(pages, vocab), params, a.threshold);
    std::cout << eval::format_report_tsv(report);
    if (!a.out_file.empty()) {
        nlohmann::json j = nlohmann::json::parse(eval::format_report_json(report));
        j["manifest"] = {{"tool_version", kToolVersion},
                         {"command", "eval"},
                         {"inputs", {{"dir", a.in_dir},
                                     {"vocab", a.vocab_file},
                                     {"model", a.model_file}}},
                         {"threshold", a.threshold},
                         {"vocab_hash", file_hash(a.vocab_file)},
                         {"model_hash", file_hash(a.model_file)}};
        write_file(a.out_file, j.dump(2) + "\n");
    }
    return kOk;
}

// ---------------------------------------------------------------------------

struct PredictArgs {
    std::string html_file, vocab_file, model_file;
    double threshold = 0.5;
};

int run_predict(const PredictArgs& a) {
    corpus::Vocabulary vocab = corpus::load_vocabulary(a.vocab_file);
    model::ModelParams params = model::load_params(a.model_file);
    check_dims(vocab, params);
    auto blocks = dom::extract_blocks(read_file(a.html_file));
    if (blocks.empty()) throw EmptyPageError("page has no text blocks: " + a.html_file);
    encoder::PageSequence seq = encoder::encode_page(blocks, vocab, a.html_file);
    Eigen::VectorXd probs =
        model::forward(seq.matrix.cast<double>(), params, model::Mode::Infer);
    std::vector<int> labels = eval::predict_labels(probs, a.threshold);
    std::cout.precision(6);
    std::cout << std::fixed;
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        std::cout << i << "\t" << probs(static_cast<Eigen::Index>(i)) << "\t" << labels[i]
                  << "\t" << text::truncate_codepoints(blocks[i].text, 40) << "\n";
    }
    return kOk;
}

// ---------------------------------------------------------------------------

struct AnnotateArgs {
    std::string html_file, vocab_file, model_file, out_file;
    double threshold = 0.5;
};

int run_annotate(const AnnotateArgs& a) {
    corpus::Vocabulary vocab = corpus::load_vocabulary(a.vocab_file);
    model::ModelParams params = model::load_params(a.model_file);
    check_dims(vocab, params);
    std::string bytes = read_file(a.html_file);
    dom::Document doc = dom::Document::parse(bytes);
    auto blocks = doc.extract_blocks();
    if (blocks.empty()) throw EmptyPageError("page has no text blocks: " + a.html_file);
    encoder::PageSequence seq = encoder::encode_page(blocks, vocab, a.html_file);
    Eigen::VectorXd probs =
        model::forward(seq.matrix.cast<double>(), params, model::Mode::Infer);
    doc.annotate(eval::predict_labels(probs, a.threshold));
    write_file(a.out_file, doc.serialize());
    std::cout << "annotated " << blocks.size() << " blocks -> " << a.out_file << "\n";
    return kOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"boilernet: text-block boilerplate classification for HTML pages"};
    app.require_subcommand(1);

    VocabArgs va;
    CLI::App* vocab = app.add_subcommand("vocab", "build a tag/word vocabulary");
    vocab->add_option("--in", va.in_dir, "directory of labeled HTML pages")->required();
    vocab->add_option("--k", va.k, "tag vocabulary size")->check(CLI::PositiveNumber);
    vocab->add_option("--l", va.l, "word vocabulary size")->check(CLI::PositiveNumber);
    vocab->add_option("--out", va.out_file, "output vocabulary file")->required();
    vocab->add_option("--label-attr", va.label_attr, "gold label attribute name");

    TrainArgs ta;
    CLI::App* train_cmd = app.add_subcommand("train", "train a sequence labeling model");
    train_cmd->add_option("--in", ta.in_dir, "directory of labeled HTML pages")->required();
    train_cmd->add_option("--vocab", ta.vocab_file, "vocabulary file")->required();
    train_cmd->add_option("--split", ta.split_counts, "train,val,test page counts")
        ->required();
    train_cmd->add_option("--out", ta.out_dir, "output directory")->required();
    train_cmd->add_option("--seed", ta.seed, "master seed");
    train_cmd->add_option("--epochs", ta.epochs, "training epochs");
    train_cmd->add_option("--batch", ta.batch, "batch size")->check(CLI::PositiveNumber);
    train_cmd->add_option("--lr", ta.lr, "learning rate")->check(CLI::PositiveNumber);
    train_cmd->add_option("--hidden", ta.h, "LSTM units per direction")
        ->check(CLI::PositiveNumber);
    train_cmd->add_option("--embedding", ta.m, "embedding dimension")
        ->check(CLI::PositiveNumber);
    train_cmd->add_option("--layers", ta.layers, "BiLSTM layer count")
        ->check(CLI::PositiveNumber);
    train_cmd->add_option("--dropout", ta.dropout, "dropout probability")
        ->check(CLI::Range(0.0, 0.999));
    train_cmd->add_option("--threshold", ta.threshold, "classification threshold")
        ->check(CLI::Range(0.001, 0.999));
    train_cmd->add_option("--label-attr", ta.label_attr, "gold label attribute name");

    EvalArgs ea;
    CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate a model on labeled pages");
    eval_cmd->add_option("--in", ea.in_dir, "directory of labeled HTML pages")->required();
    eval_cmd->add_option("--vocab", ea.vocab_file, "vocabulary file")->required();
    eval_cmd->add_option("--model", ea.model_file, "model parameter file")->required();
    eval_cmd->add_option("--out", ea.out_file, "JSON report file");
    eval_cmd->add_option("--threshold", ea.threshold, "classification threshold")
        ->check(CLI::Range(0.001, 0.999));
    eval_cmd->add_option("--label-attr", ea.label_attr, "gold label attribute name");

    PredictArgs pa;
    CLI::App* predict = app.add_subcommand("predict", "classify blocks of one page");
    predict->add_option("--html", pa.html_file, "HTML file")->required();
    predict->add_option("--vocab", pa.vocab_file, "vocabulary file")->required();
    predict->add_option("--model", pa.model_file, "model parameter file")->required();
    predict->add_option("--threshold", pa.threshold, "classification threshold")
        ->check(CLI::Range(0.001, 0.999));

    AnnotateArgs aa;
    CLI::App* annotate = app.add_subcommand("annotate", "emit HTML with content highlighted");
    annotate->add_option("--html", aa.html_file, "HTML file")->required();
    annotate->add_option("--vocab", aa.vocab_file, "vocabulary file")->required();
    annotate->add_option("--model", aa.model_file, "model parameter file")->required();
    annotate->add_option("--out", aa.out_file, "output HTML file")->required();
    annotate->add_option("--threshold", aa.threshold, "classification threshold")
        ->check(CLI::Range(0.001, 0.999));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? kOk : kUsage;
    }

    try {
        if (vocab->parsed()) return run_vocab(va);
        if (train_cmd->parsed()) return run_train(ta);
        if (eval_cmd->parsed()) return run_eval(ea);
        if (predict->parsed()) return run_predict(pa);
        if (annotate->parsed()) return run_annotate(aa);
        return kUsage;
    } catch (const NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return kNumericalError;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kDataError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kDataError;
    }
}
