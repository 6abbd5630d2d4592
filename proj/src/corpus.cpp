#include "boilernet/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include "boilernet/errors.hpp"
#include "boilernet/rng.hpp"

namespace boilernet::corpus {

Vocabulary::Vocabulary(std::vector<std::pair<std::string, std::int64_t>> tags,
                       std::vector<std::pair<std::string, std::int64_t>> words)
    : tags_(std::move(tags)), words_(std::move(words)) {
    for (std::size_t i = 0; i < tags_.size(); ++i) tag_idx_[tags_[i].first] = i;
    for (std::size_t i = 0; i < words_.size(); ++i) word_idx_[words_[i].first] = i;
    if (tag_idx_.size() != tags_.size() || word_idx_.size() != words_.size()) {
        throw ParameterError("duplicate entries in vocabulary");
    }
}

std::optional<std::size_t> Vocabulary::tag_index(std::string_view tag) const {
    auto it = tag_idx_.find(std::string(tag));
    if (it == tag_idx_.end()) return std::nullopt;
    return it->second;
}

std::optional<std::size_t> Vocabulary::word_index(std::string_view word) const {
    auto it = word_idx_.find(std::string(word));
    if (it == word_idx_.end()) return std::nullopt;
    return it->second;
}

LabeledPage load_labeled_page_bytes(std::string_view bytes, std::string source_id,
                                    std::string_view label_attribute) {
    LabeledPage page;
    page.source_id = std::move(source_id);
    page.blocks = dom::Document::parse(bytes).extract_blocks(label_attribute);
    if (page.blocks.empty()) {
        throw EmptyPageError("page has no text blocks: " + page.source_id);
    }
    return page;
}

namespace {

std::string read_file(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw IoError("cannot read file: " + file.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return std::move(buf).str();
}

} // namespace

LabeledPage load_labeled_page(const std::filesystem::path& file,
                              std::string_view label_attribute) {
    return load_labeled_page_bytes(read_file(file), file.string(), label_attribute);
}

std::vector<LabeledPage> load_labeled_dir(const std::filesystem::path& dir,
                                          std::string_view label_attribute) {
    if (!std::filesystem::is_directory(dir)) {
        throw IoError("not a directory: " + dir.string());
    }
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        auto ext = entry.path().extension().string();
        if (ext == ".html" || ext == ".htm") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    std::vector<LabeledPage> pages;
    pages.reserve(files.size());
    for (const auto& f : files) pages.push_back(load_labeled_page(f, label_attribute));
    return pages;
}

namespace {

// Descending by count, ties lexicographic ascending.
std::vector<std::pair<std::string, std::int64_t>> top_entries(
    const std::map<std::string, std::int64_t>& counts, std::size_t limit) {
    std::vector<std::pair<std::string, std::int64_t>> entries(counts.begin(), counts.end());
    std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    if (entries.size() > limit) entries.resize(limit);
    return entries;
}

} // namespace

Vocabulary build_vocabulary(const std::vector<LabeledPage>& pages, std::size_t k,
                            std::size_t l) {
    if (k == 0 || l == 0) throw ParameterError("vocabulary sizes k and l must be positive");
    if (pages.empty()) throw ParameterError("cannot build vocabulary from zero pages");
    std::map<std::string, std::int64_t> tag_freq;
    std::map<std::string, std::int64_t> word_freq;
    for (const LabeledPage& page : pages) {
        for (const dom::TextBlock& block : page.blocks) {
            for (const auto& [tag, n] : block.tag_counts) tag_freq[tag] += n;
            for (const std::string& w : block.tokens) ++word_freq[w];
        }
    }
    return Vocabulary(top_entries(tag_freq, k), top_entries(word_freq, l));
}

std::pair<double, double> class_weights(const std::vector<LabeledPage>& pages) {
    std::int64_t n0 = 0;
    std::int64_t n1 = 0;
    for (const LabeledPage& page : pages) {
        for (const dom::TextBlock& block : page.blocks) {
            if (!block.label) throw ParameterError("unlabeled block in training corpus");
            (*block.label == 1 ? n1 : n0) += 1;
        }
    }
    if (n0 == 0 || n1 == 0) {
        throw DegenerateCorpusError("training corpus is missing a class (n0=" +
                                    std::to_string(n0) + ", n1=" + std::to_string(n1) + ")");
    }
    double n = static_cast<double>(n0 + n1);
    return {n / (2.0 * static_cast<double>(n0)), n / (2.0 * static_cast<double>(n1))};
}

Splits split_dataset(std::vector<LabeledPage> pages, const SplitSpec& spec) {
    if (spec.train_count + spec.val_count + spec.test_count != pages.size()) {
        throw ParameterError("split counts sum to " +
                             std::to_string(spec.train_count + spec.val_count +
                                            spec.test_count) +
                             " but corpus has " + std::to_string(pages.size()) + " pages");
    }
    Rng rng(spec.seed);
    rng.shuffle(pages);
    Splits out;
    auto it = pages.begin();
    out.train.assign(std::make_move_iterator(it),
                     std::make_move_iterator(it + static_cast<long>(spec.train_count)));
    it += static_cast<long>(spec.train_count);
    out.val.assign(std::make_move_iterator(it),
                   std::make_move_iterator(it + static_cast<long>(spec.val_count)));
    it += static_cast<long>(spec.val_count);
    out.test.assign(std::make_move_iterator(it), std::make_move_iterator(pages.end()));
    return out;
}

std::string format_vocabulary(const Vocabulary& vocab) {
    std::string out = "k=" + std::to_string(vocab.k()) + " l=" + std::to_string(vocab.l()) + "\n";
    for (const auto& [name, count] : vocab.tags()) {
        out += "tag\t" + name + "\t" + std::to_string(count) + "\n";
    }
    for (const auto& [name, count] : vocab.words()) {
        out += "word\t" + name + "\t" + std::to_string(count) + "\n";
    }
    return out;
}

Vocabulary parse_vocabulary(std::string_view content) {
    std::istringstream in{std::string(content)};
    std::string header;
    if (!std::getline(in, header)) throw FormatError("empty vocabulary file");
    std::size_t k = 0;
    std::size_t l = 0;
    if (std::sscanf(header.c_str(), "k=%zu l=%zu", &k, &l) != 2) {
        throw FormatError("bad vocabulary header: " + header);
    }
    std::vector<std::pair<std::string, std::int64_t>> tags;
    std::vector<std::pair<std::string, std::int64_t>> words;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::size_t t1 = line.find('\t');
        std::size_t t2 = line.rfind('\t');
        if (t1 == std::string::npos || t2 == t1) {
            throw FormatError("bad vocabulary line: " + line);
        }
        std::string kind = line.substr(0, t1);
        std::string name = line.substr(t1 + 1, t2 - t1 - 1);
        std::int64_t count = std::stoll(line.substr(t2 + 1));
        if (kind == "tag") {
            tags.emplace_back(std::move(name), count);
        } else if (kind == "word") {
            words.emplace_back(std::move(name), count);
        } else {
            throw FormatError("bad vocabulary entry kind: " + kind);
        }
    }
    if (tags.size() != k || words.size() != l) {
        throw FormatError("vocabulary header does not match entry counts");
    }
    return Vocabulary(std::move(tags), std::move(words));
}

void save_vocabulary(const Vocabulary& vocab, const std::filesystem::path& file) {
    std::ofstream out(file, std::ios::binary);
    if (!out) throw IoError("cannot write file: " + file.string());
    out << format_vocabulary(vocab);
}

Vocabulary load_vocabulary(const std::filesystem::path& file) {
    return parse_vocabulary(read_file(file));
}

std::string format_split_manifest(const Splits& splits) {
    std::string out;
    for (const auto& p : splits.train) out += "train\t" + p.source_id + "\n";
    for (const auto& p : splits.val) out += "val\t" + p.source_id + "\n";
    for (const auto& p : splits.test) out += "test\t" + p.source_id + "\n";
    return out;
}

} // namespace boilernet::corpus
