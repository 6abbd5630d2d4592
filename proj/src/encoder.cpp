#include "boilernet/encoder.hpp"

#include "boilernet/errors.hpp"

namespace boilernet::encoder {

EncodedBlock encode_block(const dom::TextBlock& block, const corpus::Vocabulary& vocab) {
    EncodedBlock out;
    out.counts.assign(vocab.d(), 0);
    for (const auto& [tag, n] : block.tag_counts) {
        if (auto idx = vocab.tag_index(tag)) {
            out.counts[*idx] += n;
        } else {
            out.counts[vocab.tag_oov_slot()] += n;
        }
    }
    const std::size_t word_base = vocab.k() + 1;
    for (const std::string& w : block.tokens) {
        if (auto idx = vocab.word_index(w)) {
            out.counts[word_base + *idx] += 1;
        } else {
            out.counts[vocab.word_oov_slot()] += 1;
        }
    }
    return out;
}

PageSequence encode_page(const std::vector<dom::TextBlock>& blocks,
                         const corpus::Vocabulary& vocab, std::string source_id) {
    if (blocks.empty()) throw EmptyPageError("cannot encode an empty page");
    PageSequence page;
    page.source_id = std::move(source_id);
    page.blocks = blocks;
    const auto n = static_cast<Eigen::Index>(blocks.size());
    const auto d = static_cast<Eigen::Index>(vocab.d());
    page.matrix.resize(n, d);
    bool labeled = true;
    for (Eigen::Index i = 0; i < n; ++i) {
        EncodedBlock enc = encode_block(blocks[static_cast<std::size_t>(i)], vocab);
        for (Eigen::Index j = 0; j < d; ++j) {
            page.matrix(i, j) = enc.counts[static_cast<std::size_t>(j)];
        }
        labeled = labeled && blocks[static_cast<std::size_t>(i)].label.has_value();
    }
    if (labeled) {
        page.labels.reserve(blocks.size());
        for (const auto& b : blocks) page.labels.push_back(*b.label);
    }
    return page;
}

PageSequence encode_page(const corpus::LabeledPage& page, const corpus::Vocabulary& vocab) {
    return encode_page(page.blocks, vocab, page.source_id);
}

std::string debug_dump(const PageSequence& page) {
    std::string out;
    for (Eigen::Index i = 0; i < page.matrix.rows(); ++i) {
        out += std::to_string(i);
        out += '\t';
        if (!page.labels.empty()) {
            out += std::to_string(page.labels[static_cast<std::size_t>(i)]);
        } else {
            out += '-';
        }
        out += '\t';
        bool first = true;
        for (Eigen::Index j = 0; j < page.matrix.cols(); ++j) {
            if (page.matrix(i, j) == 0) continue;
            if (!first) out += ' ';
            first = false;
            out += std::to_string(j) + ":" + std::to_string(page.matrix(i, j));
        }
        out += '\n';
    }
    return out;
}

} // namespace boilernet::encoder
