#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace boilernet::dom {

// One leaf text node of the page, the unit of classification.
struct TextBlock {
    std::string text;                      // raw leaf text (entity-decoded)
    std::vector<std::string> tokens;       // tokenize(text)
    std::map<std::string, int> tag_counts; // tag -> occurrences on root-to-leaf path
    std::size_t position = 0;              // zero-based index in document order
    std::optional<int> label;              // 1 = content, 0 = boilerplate

    int depth() const {
        int d = 0;
        for (const auto& [tag, n] : tag_counts) d += n;
        return d;
    }
};

struct Node {
    enum class Kind { Element, Text, Comment };

    Kind kind = Kind::Element;
    std::string tag;  // lowercase element name
    std::string text; // text/comment content (entity-decoded unless raw)
    bool raw = false; // text stored verbatim (script/style payloads)
    std::vector<std::pair<std::string, std::string>> attrs;
    std::vector<std::unique_ptr<Node>> children;
    Node* parent = nullptr;

    const std::string* attr(std::string_view name) const {
        for (const auto& [k, v] : attrs) {
            if (k == name) return &v;
        }
        return nullptr;
    }
    void set_attr(std::string_view name, std::string_view value);
    bool is_element(std::string_view t) const {
        return kind == Kind::Element && tag == t;
    }
};

// A parsed page. Parsing never fails on malformed markup; the tree is
// repaired the way browsers repair it (implied html/head/body, auto-closed
// <p>/<li>/..., stray end tags dropped).
class Document {
  public:
    // Parses raw bytes: handles BOMs, UTF-16, declared charsets
    // (utf-8, latin-1/windows-1252), replaces undecodable bytes.
    // Throws DecodingError only when the byte stream as a whole cannot
    // be interpreted as text.
    static Document parse(std::string_view bytes);

    Node& root() { return *root_; }
    const Node& root() const { return *root_; }

    // Leaf text blocks in depth-first document order. Content of script,
    // style, noscript, template elements and comments is excluded;
    // whitespace-only leaves are dropped.
    std::vector<TextBlock> extract_blocks() const;

    // Same, with labels: a block is labeled 1 iff some ancestor element
    // carries label_attribute="content", else 0.
    std::vector<TextBlock> extract_blocks(std::string_view label_attribute) const;

    // Marks the i-th block as content for every predictions[i] == 1 by
    // wrapping its text node (or attributing its parent for raw-text
    // elements) with label_attribute="content" and a highlight style.
    // Throws ParameterError if predictions.size() != block count.
    void annotate(const std::vector<int>& predictions,
                  std::string_view label_attribute = "data-gold");

    std::string serialize() const;

  private:
    std::unique_ptr<Node> root_;
    std::string doctype_;

    friend class Parser;
};

// Decodes page bytes to UTF-8 (BOM and declared-charset handling).
std::string decode_page_bytes(std::string_view bytes);

std::vector<TextBlock> extract_blocks(std::string_view html_bytes);

// Lowercase maximal alphanumeric runs; punctuation/whitespace separate.
std::vector<std::string> tokenize(std::string_view s);

} // namespace boilernet::dom
