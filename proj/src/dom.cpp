#include "boilernet/dom.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <unordered_map>
#include <unordered_set>

#include "boilernet/errors.hpp"
#include "boilernet/text.hpp"

namespace boilernet::dom {

namespace {

const std::unordered_set<std::string>& void_elements() {
    static const std::unordered_set<std::string> s = {
        "area", "base",  "br",    "col",   "embed", "hr",    "img",  "input",
        "link", "meta",  "param", "source", "track", "wbr",  "basefont", "bgsound"};
    return s;
}

// Content is parsed as raw character data (no entities, no tags).
const std::unordered_set<std::string>& rawtext_elements() {
    static const std::unordered_set<std::string> s = {
        "script", "style", "xmp", "noembed", "noframes", "noscript"};
    return s;
}

// Content is character data with entities (RCDATA).
const std::unordered_set<std::string>& rcdata_elements() {
    static const std::unordered_set<std::string> s = {"title", "textarea"};
    return s;
}

// Elements whose subtree never contributes text blocks.
const std::unordered_set<std::string>& excluded_subtrees() {
    static const std::unordered_set<std::string> s = {"script", "style", "noscript",
                                                      "template"};
    return s;
}

// Start tags that close an open <p>.
const std::unordered_set<std::string>& p_closers() {
    static const std::unordered_set<std::string> s = {
        "address", "article", "aside",  "blockquote", "details", "dialog",
        "div",     "dl",      "dd",     "dt",         "fieldset", "figcaption",
        "figure",  "footer",  "form",   "h1",         "h2",       "h3",
        "h4",      "h5",      "h6",     "header",     "hgroup",   "hr",
        "li",      "main",    "menu",   "nav",        "ol",       "p",
        "pre",     "section", "table",  "ul"};
    return s;
}

// Start tag -> tags it pops while one of them is the current open element.
const std::unordered_map<std::string, std::unordered_set<std::string>>& sibling_closers() {
    static const std::unordered_map<std::string, std::unordered_set<std::string>> m = {
        {"li", {"li"}},
        {"dd", {"dd", "dt"}},
        {"dt", {"dd", "dt"}},
        {"tr", {"tr", "td", "th"}},
        {"td", {"td", "th"}},
        {"th", {"td", "th"}},
        {"option", {"option"}},
        {"optgroup", {"option", "optgroup"}},
    };
    return m;
}

const std::unordered_set<std::string>& head_only_elements() {
    static const std::unordered_set<std::string> s = {"title", "meta", "link", "base",
                                                      "basefont", "bgsound"};
    return s;
}

const std::unordered_set<std::string>& head_ok_elements() {
    static const std::unordered_set<std::string> s = {
        "title", "meta", "link", "base", "basefont", "bgsound",
        "style", "script", "noscript", "template"};
    return s;
}

// ---------------------------------------------------------------------------
// Byte decoding

std::string decode_cp1252(std::string_view bytes) {
    // 0x80..0x9f differ from Latin-1; the rest maps 1:1 to codepoints.
    static constexpr std::array<char32_t, 32> high = {
        0x20ac, 0x0081, 0x201a, 0x0192, 0x201e, 0x2026, 0x2020, 0x2021,
        0x02c6, 0x2030, 0x0160, 0x2039, 0x0152, 0x008d, 0x017d, 0x008f,
        0x0090, 0x2018, 0x2019, 0x201c, 0x201d, 0x2022, 0x2013, 0x2014,
        0x02dc, 0x2122, 0x0161, 0x203a, 0x0153, 0x009d, 0x017e, 0x0178};
    std::string out;
    out.reserve(bytes.size());
    for (char c : bytes) {
        auto b = static_cast<unsigned char>(c);
        if (b < 0x80) {
            out += c;
        } else if (b < 0xa0) {
            text::append_utf8(out, high[b - 0x80]);
        } else {
            text::append_utf8(out, b);
        }
    }
    return out;
}

std::string decode_utf16(std::string_view bytes, bool little_endian) {
    std::string out;
    std::size_t i = 0;
    const auto unit = [&](std::size_t k) -> char32_t {
        auto lo = static_cast<unsigned char>(bytes[k]);
        auto hi = static_cast<unsigned char>(bytes[k + 1]);
        return little_endian ? (hi << 8) | lo : (lo << 8) | hi;
    };
    while (i + 1 < bytes.size()) {
        char32_t u = unit(i);
        i += 2;
        if (u >= 0xd800 && u <= 0xdbff && i + 1 < bytes.size()) {
            char32_t u2 = unit(i);
            if (u2 >= 0xdc00 && u2 <= 0xdfff) {
                i += 2;
                u = 0x10000 + ((u - 0xd800) << 10) + (u2 - 0xdc00);
            } else {
                u = 0xfffd;
            }
        } else if (u >= 0xd800 && u <= 0xdfff) {
            u = 0xfffd;
        }
        text::append_utf8(out, u);
    }
    if (i < bytes.size()) text::append_utf8(out, 0xfffd); // stray trailing byte
    return out;
}

// Re-encodes as valid UTF-8, replacing bad sequences, and counts replacements.
std::string sanitize_utf8(std::string_view bytes, std::size_t& replaced) {
    std::string out;
    out.reserve(bytes.size());
    std::size_t pos = 0;
    while (pos < bytes.size()) {
        char32_t cp = text::decode_utf8(bytes, pos);
        if (cp == 0xfffd || cp == 0) ++replaced;
        text::append_utf8(out, cp == 0 ? 0xfffd : cp);
    }
    return out;
}

std::string ascii_lower(std::string_view s) {
    std::string out(s);
    for (char& c : out)
        if (c >= 'A' && c <= 'Z') c += 32;
    return out;
}

// Looks for a declared charset (<meta charset=...> or http-equiv content
// type) in the first 2048 bytes.
std::string sniff_charset(std::string_view bytes) {
    std::string head = ascii_lower(bytes.substr(0, std::min<std::size_t>(bytes.size(), 2048)));
    std::size_t pos = head.find("charset");
    if (pos == std::string::npos) return "";
    pos += 7;
    while (pos < head.size() && (text::is_ascii_space(head[pos]) || head[pos] == '=')) ++pos;
    if (pos < head.size() && (head[pos] == '"' || head[pos] == '\'')) ++pos;
    std::size_t end = pos;
    while (end < head.size() &&
           (std::isalnum(static_cast<unsigned char>(head[end])) || head[end] == '-' ||
            head[end] == '_' || head[end] == '.')) {
        ++end;
    }
    return head.substr(pos, end - pos);
}

// ---------------------------------------------------------------------------
// Entities

const std::unordered_map<std::string, char32_t>& named_entities() {
    static const std::unordered_map<std::string, char32_t> m = {
        {"amp", '&'},      {"lt", '<'},       {"gt", '>'},       {"quot", '"'},
        {"apos", '\''},    {"nbsp", 0x00a0},  {"copy", 0x00a9},  {"reg", 0x00ae},
        {"trade", 0x2122}, {"deg", 0x00b0},   {"middot", 0x00b7},{"sect", 0x00a7},
        {"para", 0x00b6},  {"laquo", 0x00ab}, {"raquo", 0x00bb}, {"hellip", 0x2026},
        {"mdash", 0x2014}, {"ndash", 0x2013}, {"lsquo", 0x2018}, {"rsquo", 0x2019},
        {"ldquo", 0x201c}, {"rdquo", 0x201d}, {"bull", 0x2022},  {"dagger", 0x2020},
        {"times", 0x00d7}, {"divide", 0x00f7},{"shy", 0x00ad},   {"euro", 0x20ac},
        {"pound", 0x00a3}, {"yen", 0x00a5},   {"cent", 0x00a2},  {"agrave", 0x00e0},
        {"aacute", 0x00e1},{"eacute", 0x00e9},{"egrave", 0x00e8},{"iacute", 0x00ed},
        {"oacute", 0x00f3},{"uacute", 0x00fa},{"ntilde", 0x00f1},{"ouml", 0x00f6},
        {"uuml", 0x00fc},  {"auml", 0x00e4},  {"szlig", 0x00df}, {"ccedil", 0x00e7},
    };
    return m;
}

// Decodes the entity starting at s[i] (s[i] == '&'). On success appends the
// decoded character and returns the index one past the entity; otherwise
// returns i (caller copies '&' literally).
std::size_t decode_entity_at(std::string_view s, std::size_t i, std::string& out) {
    std::size_t j = i + 1;
    if (j < s.size() && s[j] == '#') {
        ++j;
        bool hex = j < s.size() && (s[j] == 'x' || s[j] == 'X');
        if (hex) ++j;
        char32_t cp = 0;
        std::size_t digits = 0;
        while (j < s.size() && digits < 8) {
            char c = s[j];
            int v;
            if (c >= '0' && c <= '9')
                v = c - '0';
            else if (hex && c >= 'a' && c <= 'f')
                v = c - 'a' + 10;
            else if (hex && c >= 'A' && c <= 'F')
                v = c - 'A' + 10;
            else
                break;
            cp = cp * (hex ? 16 : 10) + static_cast<char32_t>(v);
            ++j;
            ++digits;
        }
        if (digits == 0) return i;
        if (j < s.size() && s[j] == ';') ++j;
        if (cp == 0 || cp > 0x10ffff || (cp >= 0xd800 && cp <= 0xdfff)) cp = 0xfffd;
        text::append_utf8(out, cp);
        return j;
    }
    std::size_t end = j;
    while (end < s.size() && end - j < 12 &&
           std::isalnum(static_cast<unsigned char>(s[end]))) {
        ++end;
    }
    if (end == j) return i;
    auto it = named_entities().find(ascii_lower(s.substr(j, end - j)));
    if (it == named_entities().end()) return i;
    text::append_utf8(out, it->second);
    if (end < s.size() && s[end] == ';') ++end;
    return end;
}

std::string decode_entities(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    std::size_t i = 0;
    while (i < s.size()) {
        if (s[i] == '&') {
            std::size_t next = decode_entity_at(s, i, out);
            if (next != i) {
                i = next;
                continue;
            }
        }
        out += s[i++];
    }
    return out;
}

// ---------------------------------------------------------------------------
// Escaping (serializer)

void escape_text(std::string_view s, std::string& out) {
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            default: out += c;
        }
    }
}

void escape_attr(std::string_view s, std::string& out) {
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '"': out += "&quot;"; break;
            case '<': out += "&lt;"; break;
            default: out += c;
        }
    }
}

} // namespace

void Node::set_attr(std::string_view name, std::string_view value) {
    for (auto& [k, v] : attrs) {
        if (k == name) {
            v = std::string(value);
            return;
        }
    }
    attrs.emplace_back(std::string(name), std::string(value));
}

// ---------------------------------------------------------------------------
// Byte decoding entry point

std::string decode_page_bytes(std::string_view bytes) {
    if (bytes.size() >= 2) {
        auto b0 = static_cast<unsigned char>(bytes[0]);
        auto b1 = static_cast<unsigned char>(bytes[1]);
        if (b0 == 0xff && b1 == 0xfe) return decode_utf16(bytes.substr(2), true);
        if (b0 == 0xfe && b1 == 0xff) return decode_utf16(bytes.substr(2), false);
    }
    if (bytes.size() >= 3 && static_cast<unsigned char>(bytes[0]) == 0xef &&
        static_cast<unsigned char>(bytes[1]) == 0xbb &&
        static_cast<unsigned char>(bytes[2]) == 0xbf) {
        bytes = bytes.substr(3); // UTF-8 BOM
    }
    std::string charset = sniff_charset(bytes);
    if (charset == "iso-8859-1" || charset == "latin-1" || charset == "latin1" ||
        charset == "windows-1252" || charset == "cp1252" || charset == "iso8859-1") {
        return decode_cp1252(bytes);
    }
    std::size_t replaced = 0;
    std::string out = sanitize_utf8(bytes, replaced);
    if (!bytes.empty() && replaced * 4 > bytes.size()) {
        throw DecodingError("input is not decodable as text (" +
                            std::to_string(replaced) + " bad sequences in " +
                            std::to_string(bytes.size()) + " bytes)");
    }
    return out;
}

// ---------------------------------------------------------------------------
// Parser

class Parser {
  public:
    explicit Parser(std::string_view html) : s_(html) {}

    Document run() {
        doc_.root_ = std::make_unique<Node>();
        doc_.root_->tag = "html";
        stack_.push_back(doc_.root_.get());
        while (pos_ < s_.size()) step();
        flush_text();
        return std::move(doc_);
    }

  private:
    std::string_view s_;
    std::size_t pos_ = 0;
    Document doc_;
    std::vector<Node*> stack_; // open elements, stack_[0] is html
    Node* head_ = nullptr;
    Node* body_ = nullptr;
    std::string pending_text_;

    Node* current() { return stack_.back(); }

    bool head_open() const {
        return std::find_if(stack_.begin(), stack_.end(), [](Node* n) {
                   return n->tag == "head";
               }) != stack_.end();
    }

    void step() {
        if (s_[pos_] != '<') {
            read_text();
            return;
        }
        if (s_.compare(pos_, 4, "<!--") == 0) {
            read_comment();
            return;
        }
        if (pos_ + 1 < s_.size() && (s_[pos_ + 1] == '!' || s_[pos_ + 1] == '?')) {
            read_declaration();
            return;
        }
        if (pos_ + 1 < s_.size() && s_[pos_ + 1] == '/') {
            read_end_tag();
            return;
        }
        if (pos_ + 1 < s_.size() && std::isalpha(static_cast<unsigned char>(s_[pos_ + 1]))) {
            read_start_tag();
            return;
        }
        pending_text_ += s_[pos_++]; // lone '<' is text
    }

    void read_text() {
        while (pos_ < s_.size() && s_[pos_] != '<') {
            if (s_[pos_] == '&') {
                std::size_t next = decode_entity_at(s_, pos_, pending_text_);
                if (next != pos_) {
                    pos_ = next;
                    continue;
                }
            }
            pending_text_ += s_[pos_++];
        }
    }

    void flush_text() {
        if (pending_text_.empty()) return;
        std::string txt = std::move(pending_text_);
        pending_text_.clear();
        bool blank = text::is_blank(txt);
        if (!body_ && (current() == doc_.root_.get() || head_open())) {
            if (blank) return; // inter-element whitespace before body
            while (head_open()) stack_.pop_back();
            ensure_body();
        }
        append_text(std::move(txt), false);
    }

    void append_text(std::string txt, bool raw) {
        Node* cur = current();
        if (!cur->children.empty()) {
            Node* last = cur->children.back().get();
            if (last->kind == Node::Kind::Text && last->raw == raw) {
                last->text += txt;
                return;
            }
        }
        auto node = std::make_unique<Node>();
        node->kind = Node::Kind::Text;
        node->text = std::move(txt);
        node->raw = raw;
        node->parent = cur;
        cur->children.push_back(std::move(node));
    }

    void read_comment() {
        flush_text();
        std::size_t end = s_.find("-->", pos_ + 4);
        std::string content;
        if (end == std::string_view::npos) {
            content = std::string(s_.substr(pos_ + 4));
            pos_ = s_.size();
        } else {
            content = std::string(s_.substr(pos_ + 4, end - pos_ - 4));
            pos_ = end + 3;
        }
        auto node = std::make_unique<Node>();
        node->kind = Node::Kind::Comment;
        node->text = std::move(content);
        node->parent = current();
        current()->children.push_back(std::move(node));
    }

    void read_declaration() {
        flush_text();
        std::size_t end = s_.find('>', pos_);
        std::string_view content =
            end == std::string_view::npos ? s_.substr(pos_) : s_.substr(pos_, end + 1 - pos_);
        if (ascii_lower(std::string(content.substr(0, 9))) == "<!doctype") {
            doc_.doctype_ = std::string(content);
        }
        pos_ = end == std::string_view::npos ? s_.size() : end + 1;
    }

    std::string read_tag_name() {
        std::string name;
        while (pos_ < s_.size()) {
            char c = s_[pos_];
            if (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' ||
                c == ':') {
                name += static_cast<char>(c >= 'A' && c <= 'Z' ? c + 32 : c);
                ++pos_;
            } else {
                break;
            }
        }
        return name;
    }

    void read_end_tag() {
        flush_text();
        pos_ += 2; // "</"
        std::string name = read_tag_name();
        std::size_t end = s_.find('>', pos_);
        pos_ = end == std::string_view::npos ? s_.size() : end + 1;
        if (name.empty() || name == "html" || name == "body" || name == "br") return;
        // pop to the matching open element, never past body/html
        for (std::size_t i = stack_.size(); i-- > 1;) {
            if (stack_[i]->tag == "body") break;
            if (stack_[i]->tag == name) {
                stack_.resize(i);
                return;
            }
        }
        // unmatched end tag: ignored
    }

    struct Attr {
        std::string name, value;
    };

    void read_start_tag() {
        flush_text();
        ++pos_; // '<'
        std::string name = read_tag_name();
        std::vector<Attr> attrs;
        bool self_closing = false;
        while (pos_ < s_.size() && s_[pos_] != '>') {
            if (text::is_ascii_space(s_[pos_])) {
                ++pos_;
                continue;
            }
            if (s_[pos_] == '/') {
                ++pos_;
                if (pos_ < s_.size() && s_[pos_] == '>') self_closing = true;
                continue;
            }
            read_attribute(attrs);
        }
        if (pos_ < s_.size()) ++pos_; // '>'
        insert_element(name, std::move(attrs), self_closing);
    }

    void read_attribute(std::vector<Attr>& attrs) {
        std::string name;
        while (pos_ < s_.size()) {
            char c = s_[pos_];
            if (c == '=' || c == '>' || c == '/' || text::is_ascii_space(c)) break;
            name += static_cast<char>(c >= 'A' && c <= 'Z' ? c + 32 : c);
            ++pos_;
        }
        while (pos_ < s_.size() && text::is_ascii_space(s_[pos_])) ++pos_;
        std::string value;
        if (pos_ < s_.size() && s_[pos_] == '=') {
            ++pos_;
            while (pos_ < s_.size() && text::is_ascii_space(s_[pos_])) ++pos_;
            if (pos_ < s_.size() && (s_[pos_] == '"' || s_[pos_] == '\'')) {
                char quote = s_[pos_++];
                std::size_t end = s_.find(quote, pos_);
                if (end == std::string_view::npos) end = s_.size();
                value = decode_entities(s_.substr(pos_, end - pos_));
                pos_ = end < s_.size() ? end + 1 : end;
            } else {
                std::size_t start = pos_;
                while (pos_ < s_.size() && !text::is_ascii_space(s_[pos_]) &&
                       s_[pos_] != '>') {
                    ++pos_;
                }
                value = decode_entities(s_.substr(start, pos_ - start));
            }
        }
        if (!name.empty()) attrs.push_back({std::move(name), std::move(value)});
    }

    Node* ensure_head() {
        if (!head_) {
            auto node = std::make_unique<Node>();
            node->tag = "head";
            node->parent = doc_.root_.get();
            head_ = node.get();
            doc_.root_->children.push_back(std::move(node));
        }
        return head_;
    }

    void ensure_body() {
        while (head_open()) stack_.pop_back();
        if (!body_) {
            auto node = std::make_unique<Node>();
            node->tag = "body";
            node->parent = doc_.root_.get();
            body_ = node.get();
            doc_.root_->children.push_back(std::move(node));
        }
        if (std::find(stack_.begin(), stack_.end(), body_) == stack_.end()) {
            stack_.resize(1);
            stack_.push_back(body_);
        }
    }

    // Closes a <p> open above the nearest scope boundary, if any.
    void close_p_in_scope() {
        for (std::size_t i = stack_.size(); i-- > 1;) {
            const std::string& t = stack_[i]->tag;
            if (t == "p") {
                stack_.resize(i);
                return;
            }
            if (t == "body" || t == "table" || t == "td" || t == "th" ||
                t == "caption" || t == "template") {
                return;
            }
        }
    }

    void insert_element(const std::string& name, std::vector<Attr> attrs,
                        bool self_closing) {
        if (name == "html") {
            for (auto& a : attrs) {
                if (!doc_.root_->attr(a.name)) doc_.root_->set_attr(a.name, a.value);
            }
            return;
        }
        if (name == "head") {
            Node* h = ensure_head();
            for (auto& a : attrs) {
                if (!h->attr(a.name)) h->set_attr(a.name, a.value);
            }
            if (!body_ && !head_open()) stack_.push_back(h);
            return;
        }
        if (name == "body") {
            ensure_body();
            for (auto& a : attrs) {
                if (!body_->attr(a.name)) body_->set_attr(a.name, a.value);
            }
            return;
        }

        // route pre-body content to head or imply body
        if (!body_) {
            bool in_head = head_open();
            if (!in_head && current() == doc_.root_.get()) {
                if (head_ok_elements().count(name)) {
                    stack_.push_back(ensure_head());
                } else {
                    ensure_body();
                }
            } else if (in_head && !head_ok_elements().count(name)) {
                ensure_body();
            }
        } else if (head_only_elements().count(name) && current() == doc_.root_.get()) {
            ensure_body();
        }

        if (p_closers().count(name)) close_p_in_scope();
        if (auto it = sibling_closers().find(name); it != sibling_closers().end()) {
            while (stack_.size() > 1 && it->second.count(current()->tag)) {
                stack_.pop_back();
            }
        }

        auto node = std::make_unique<Node>();
        node->tag = name;
        for (auto& a : attrs) node->attrs.emplace_back(std::move(a.name), std::move(a.value));
        node->parent = current();
        Node* raw_node = node.get();
        current()->children.push_back(std::move(node));

        bool is_void = void_elements().count(name) > 0;
        bool is_raw = rawtext_elements().count(name) > 0;
        bool is_rcdata = rcdata_elements().count(name) > 0;
        if (is_void) return;
        if (is_raw || is_rcdata) {
            read_raw_content(raw_node, name, is_rcdata);
            return;
        }
        if (self_closing) return;
        stack_.push_back(raw_node);
    }

    // Consumes everything up to the matching case-insensitive end tag.
    void read_raw_content(Node* element, const std::string& name, bool rcdata) {
        std::string closer = "</" + name;
        std::size_t search = pos_;
        std::size_t found = std::string_view::npos;
        while (search < s_.size()) {
            std::size_t hit = s_.find('<', search);
            if (hit == std::string_view::npos || hit + closer.size() > s_.size()) break;
            if (ascii_lower(std::string(s_.substr(hit, closer.size()))) == closer) {
                char after = hit + closer.size() < s_.size() ? s_[hit + closer.size()] : '>';
                if (after == '>' || after == '/' || text::is_ascii_space(after)) {
                    found = hit;
                    break;
                }
            }
            search = hit + 1;
        }
        std::string_view content;
        if (found == std::string_view::npos) {
            content = s_.substr(pos_);
            pos_ = s_.size();
        } else {
            content = s_.substr(pos_, found - pos_);
            std::size_t end = s_.find('>', found);
            pos_ = end == std::string_view::npos ? s_.size() : end + 1;
        }
        if (content.empty()) return;
        auto node = std::make_unique<Node>();
        node->kind = Node::Kind::Text;
        node->raw = !rcdata;
        node->text = rcdata ? decode_entities(content) : std::string(content);
        node->parent = element;
        element->children.push_back(std::move(node));
    }
};

Document Document::parse(std::string_view bytes) {
    std::string decoded = decode_page_bytes(bytes);
    return Parser(decoded).run();
}

// ---------------------------------------------------------------------------
// Block extraction

namespace {

struct WalkState {
    std::vector<const Node*> leaves;
    std::vector<bool> content_flags;
    std::string_view label_attr; // empty: unlabeled walk

    void walk(const Node& node, bool ancestor_content) {
        if (node.kind == Node::Kind::Comment) return;
        if (node.kind == Node::Kind::Text) {
            if (node.raw || text::is_blank(node.text)) return;
            leaves.push_back(&node);
            content_flags.push_back(ancestor_content);
            return;
        }
        if (excluded_subtrees().count(node.tag)) return;
        if (!label_attr.empty()) {
            if (const std::string* v = node.attr(label_attr); v && *v == "content") {
                ancestor_content = true;
            }
        }
        for (const auto& child : node.children) walk(*child, ancestor_content);
    }
};

std::map<std::string, int> path_tag_counts(const Node* leaf) {
    std::map<std::string, int> counts;
    for (const Node* n = leaf->parent; n != nullptr; n = n->parent) {
        if (n->kind == Node::Kind::Element) ++counts[n->tag];
    }
    return counts;
}

} // namespace

std::vector<TextBlock> Document::extract_blocks() const {
    return extract_blocks(std::string_view{});
}

std::vector<TextBlock> Document::extract_blocks(std::string_view label_attribute) const {
    WalkState state;
    state.label_attr = label_attribute;
    state.walk(*root_, false);
    std::vector<TextBlock> blocks;
    blocks.reserve(state.leaves.size());
    for (std::size_t i = 0; i < state.leaves.size(); ++i) {
        const Node* leaf = state.leaves[i];
        TextBlock b;
        b.text = leaf->text;
        b.tokens = text::tokenize(b.text);
        b.tag_counts = path_tag_counts(leaf);
        b.position = i;
        if (!label_attribute.empty()) b.label = state.content_flags[i] ? 1 : 0;
        blocks.push_back(std::move(b));
    }
    return blocks;
}

void Document::annotate(const std::vector<int>& predictions,
                        std::string_view label_attribute) {
    WalkState state;
    state.walk(*root_, false);
    if (predictions.size() != state.leaves.size()) {
        throw ParameterError("prediction count " + std::to_string(predictions.size()) +
                             " does not match block count " +
                             std::to_string(state.leaves.size()));
    }
    static const char* kHighlight = "background-color:#fff3a3;";
    for (std::size_t i = 0; i < state.leaves.size(); ++i) {
        if (predictions[i] != 1) continue;
        Node* leaf = const_cast<Node*>(state.leaves[i]);
        Node* parent = leaf->parent;
        if (rcdata_elements().count(parent->tag)) {
            // cannot wrap inside title/textarea; mark the element itself
            parent->set_attr(label_attribute, "content");
            parent->set_attr("style", kHighlight);
            continue;
        }
        auto span = std::make_unique<Node>();
        span->tag = "span";
        span->set_attr(label_attribute, "content");
        span->set_attr("style", kHighlight);
        span->parent = parent;
        for (auto& child : parent->children) {
            if (child.get() == leaf) {
                leaf->parent = span.get();
                span->children.push_back(std::move(child));
                child = std::move(span);
                break;
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

void serialize_node(const Node& node, std::string& out) {
    switch (node.kind) {
        case Node::Kind::Text:
            if (node.raw) {
                out += node.text;
            } else if (rcdata_elements().count(node.parent ? node.parent->tag : "")) {
                escape_text(node.text, out);
            } else {
                escape_text(node.text, out);
            }
            return;
        case Node::Kind::Comment:
            out += "<!--";
            out += node.text;
            out += "-->";
            return;
        case Node::Kind::Element:
            break;
    }
    out += '<';
    out += node.tag;
    for (const auto& [k, v] : node.attrs) {
        out += ' ';
        out += k;
        out += "=\"";
        escape_attr(v, out);
        out += '"';
    }
    out += '>';
    if (void_elements().count(node.tag)) return;
    for (const auto& child : node.children) serialize_node(*child, out);
    out += "</";
    out += node.tag;
    out += '>';
}

} // namespace

std::string Document::serialize() const {
    std::string out;
    if (!doctype_.empty()) {
        out += doctype_;
        out += '\n';
    } else {
        out += "<!DOCTYPE html>\n";
    }
    serialize_node(*root_, out);
    out += '\n';
    return out;
}

std::vector<TextBlock> extract_blocks(std::string_view html_bytes) {
    return Document::parse(html_bytes).extract_blocks();
}

std::vector<std::string> tokenize(std::string_view s) { return text::tokenize(s); }

} // namespace boilernet::dom
