#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "boilernet/corpus.hpp"
#include "boilernet/dom.hpp"

namespace boilernet::encoder {

// Sparse count vector for one block, laid out as
// [tag_1..tag_k, tag_OOV, word_1..word_l, word_OOV].
struct EncodedBlock {
    std::vector<int> counts;
};

// One page as the unit of sequence labeling: row i of the matrix is the
// encoding of block i.
struct PageSequence {
    std::string source_id;
    std::vector<dom::TextBlock> blocks;
    Eigen::MatrixXi matrix; // n x d
    std::vector<int> labels; // empty when unlabeled, else length n
};

EncodedBlock encode_block(const dom::TextBlock& block, const corpus::Vocabulary& vocab);

PageSequence encode_page(const std::vector<dom::TextBlock>& blocks,
                         const corpus::Vocabulary& vocab, std::string source_id = "");
PageSequence encode_page(const corpus::LabeledPage& page, const corpus::Vocabulary& vocab);

// Debug dump: one line per block, "position<TAB>label<TAB>idx:count idx:count ...".
// Unlabeled blocks print "-" for the label.
std::string debug_dump(const PageSequence& page);

} // namespace boilernet::encoder
