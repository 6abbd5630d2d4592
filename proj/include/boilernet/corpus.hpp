#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "boilernet/dom.hpp"

namespace boilernet::corpus {

inline constexpr std::string_view kDefaultLabelAttribute = "data-gold";

// One annotated document: every block carries a gold label.
struct LabeledPage {
    std::string source_id;
    std::vector<dom::TextBlock> blocks;
};

// Fixed tag/word vocabulary plus the two out-of-vocabulary slots.
// Encoding dimension d = k + l + 2; entries are ordered by descending
// corpus frequency, ties broken lexicographically.
class Vocabulary {
  public:
    Vocabulary() = default;
    Vocabulary(std::vector<std::pair<std::string, std::int64_t>> tags,
               std::vector<std::pair<std::string, std::int64_t>> words);

    std::size_t k() const { return tags_.size(); }
    std::size_t l() const { return words_.size(); }
    std::size_t d() const { return k() + l() + 2; }

    const std::vector<std::pair<std::string, std::int64_t>>& tags() const { return tags_; }
    const std::vector<std::pair<std::string, std::int64_t>>& words() const { return words_; }

    // Slot index within [0, k), or nullopt (caller adds to the tag OOV slot).
    std::optional<std::size_t> tag_index(std::string_view tag) const;
    // Slot index within [0, l), or nullopt (word OOV slot).
    std::optional<std::size_t> word_index(std::string_view word) const;

    std::size_t tag_oov_slot() const { return k(); }
    std::size_t word_oov_slot() const { return k() + 1 + l(); }

    bool operator==(const Vocabulary& other) const {
        return tags_ == other.tags_ && words_ == other.words_;
    }

  private:
    std::vector<std::pair<std::string, std::int64_t>> tags_;
    std::vector<std::pair<std::string, std::int64_t>> words_;
    std::unordered_map<std::string, std::size_t> tag_idx_;
    std::unordered_map<std::string, std::size_t> word_idx_;
};

struct SplitSpec {
    std::size_t train_count = 0;
    std::size_t val_count = 0;
    std::size_t test_count = 0;
    std::uint64_t seed = 0;
};

struct Splits {
    std::vector<LabeledPage> train;
    std::vector<LabeledPage> val;
    std::vector<LabeledPage> test;
};

// Parses a labeled HTML page: a block is content (1) iff an ancestor
// element carries label_attribute="content". Throws EmptyPageError when
// the page has no blocks.
LabeledPage load_labeled_page_bytes(std::string_view bytes, std::string source_id,
                                    std::string_view label_attribute = kDefaultLabelAttribute);
LabeledPage load_labeled_page(const std::filesystem::path& file,
                              std::string_view label_attribute = kDefaultLabelAttribute);

// Loads every *.html / *.htm file in a directory, sorted by filename.
std::vector<LabeledPage> load_labeled_dir(const std::filesystem::path& dir,
                                          std::string_view label_attribute = kDefaultLabelAttribute);

// Top-k tags (by total path occurrences) and top-l words (by total
// occurrences) over the given pages. Shorter vocabularies result when the
// corpus has fewer distinct entries; k = 0 or l = 0 is a parameter error.
Vocabulary build_vocabulary(const std::vector<LabeledPage>& pages, std::size_t k,
                            std::size_t l);

// w_c = n / (2 n_c); satisfies w0*n0 == w1*n1 == n/2.
std::pair<double, double> class_weights(const std::vector<LabeledPage>& pages);

// Seeded uniform shuffle, then contiguous train/val/test assignment.
Splits split_dataset(std::vector<LabeledPage> pages, const SplitSpec& spec);

// Plain-text vocabulary file: header "k=<int> l=<int>", then one
// "tag\t<name>\t<count>" or "word\t<token>\t<count>" line per entry in
// vocabulary order. Round trip is bit-exact.
std::string format_vocabulary(const Vocabulary& vocab);
Vocabulary parse_vocabulary(std::string_view content);
void save_vocabulary(const Vocabulary& vocab, const std::filesystem::path& file);
Vocabulary load_vocabulary(const std::filesystem::path& file);

// Split manifest: one "<split>\t<source_id>" line per page.
std::string format_split_manifest(const Splits& splits);

} // namespace boilernet::corpus
