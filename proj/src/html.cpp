// Tolerant HTML reader sufficient for saved review pages: builds an element
// tree, then evaluates simple descendant selectors over it.

#include <algorithm>
#include <cctype>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sentipipe/corpus.hpp"
#include "sentipipe/error.hpp"

namespace sentipipe {
namespace {

struct Attribute {
  std::string name;
  std::string value;
};

struct Node {
  std::string tag;  // empty for text nodes
  std::string text;
  std::vector<Attribute> attrs;
  std::vector<std::size_t> children;
  std::size_t parent = 0;
};

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool is_void(std::string_view tag) {
  static constexpr std::string_view kVoid[] = {"area", "base",  "br",   "col",   "embed",
                                               "hr",   "img",   "input", "link", "meta",
                                               "param", "source", "track", "wbr"};
  return std::find(std::begin(kVoid), std::end(kVoid), tag) != std::end(kVoid);
}

bool is_raw_text(std::string_view tag) {
  return tag == "script" || tag == "style" || tag == "textarea" || tag == "title";
}

bool closes_paragraph(std::string_view tag) {
  static constexpr std::string_view kBlock[] = {
      "address", "article", "aside", "blockquote", "div", "dl", "fieldset", "footer",
      "form",    "h1",      "h2",    "h3",         "h4",  "h5", "h6",       "header",
      "hr",      "main",    "nav",   "ol",         "p",   "pre", "section", "table",
      "ul"};
  return std::find(std::begin(kBlock), std::end(kBlock), tag) != std::end(kBlock);
}

bool is_block_boundary(std::string_view tag) {
  return tag == "br" || tag == "li" || tag == "td" || tag == "th" || tag == "tr" ||
         closes_paragraph(tag);
}

bool is_name_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == ':';
}

bool is_ws(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f'; }

void validate_utf8(std::string_view s) {
  for (std::size_t i = 0; i < s.size();) {
    const auto c = static_cast<unsigned char>(s[i]);
    std::size_t len = 0;
    char32_t cp = 0;
    if (c < 0x80) {
      ++i;
      continue;
    } else if ((c & 0xE0) == 0xC0) {
      len = 2;
      cp = c & 0x1F;
    } else if ((c & 0xF0) == 0xE0) {
      len = 3;
      cp = c & 0x0F;
    } else if ((c & 0xF8) == 0xF0) {
      len = 4;
      cp = c & 0x07;
    } else {
      throw FormatError("invalid UTF-8 lead byte", i);
    }
    if (i + len > s.size()) throw FormatError("truncated UTF-8 sequence", i);
    for (std::size_t k = 1; k < len; ++k) {
      const auto cc = static_cast<unsigned char>(s[i + k]);
      if ((cc & 0xC0) != 0x80) throw FormatError("invalid UTF-8 continuation byte", i + k);
      cp = (cp << 6) | (cc & 0x3F);
    }
    const bool overlong = (len == 2 && cp < 0x80) || (len == 3 && cp < 0x800) ||
                          (len == 4 && cp < 0x10000);
    if (overlong || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF))
      throw FormatError("invalid UTF-8 code point", i);
    i += len;
  }
}

class Parser {
 public:
  explicit Parser(std::string_view doc) : doc_(doc) {
    nodes_.push_back(Node{"#document", {}, {}, {}, 0});
    open_.push_back(0);
  }

  std::vector<Node> parse() {
    validate_utf8(doc_);
    while (pos_ < doc_.size()) {
      if (doc_[pos_] == '<') {
        parse_markup();
      } else {
        const auto next = doc_.find('<', pos_);
        const auto end = next == std::string_view::npos ? doc_.size() : next;
        add_text(doc_.substr(pos_, end - pos_));
        pos_ = end;
      }
    }
    return std::move(nodes_);
  }

 private:
  void add_text(std::string_view text) {
    if (text.empty()) return;
    const auto parent = open_.back();
    nodes_.push_back(Node{{}, std::string(text), {}, {}, parent});
    nodes_[parent].children.push_back(nodes_.size() - 1);
  }

  void parse_markup() {
    const std::size_t start = pos_;
    const auto rest = doc_.substr(pos_);
    if (rest.starts_with("<!--")) {
      const auto end = doc_.find("-->", pos_ + 4);
      if (end == std::string_view::npos) throw FormatError("unterminated comment", start);
      pos_ = end + 3;
    } else if (rest.starts_with("<!") || rest.starts_with("<?")) {
      const auto end = doc_.find('>', pos_);
      if (end == std::string_view::npos) throw FormatError("unterminated declaration", start);
      pos_ = end + 1;
    } else if (rest.starts_with("</")) {
      const auto end = doc_.find('>', pos_);
      if (end == std::string_view::npos) throw FormatError("unterminated end tag", start);
      std::size_t p = pos_ + 2;
      const std::size_t name_start = p;
      while (p < end && is_name_char(doc_[p])) ++p;
      close_element(lower(doc_.substr(name_start, p - name_start)));
      pos_ = end + 1;
    } else if (rest.size() > 1 && std::isalpha(static_cast<unsigned char>(rest[1]))) {
      parse_start_tag(start);
    } else {
      add_text(doc_.substr(pos_, 1));
      ++pos_;
    }
  }

  void parse_start_tag(std::size_t start) {
    std::size_t p = pos_ + 1;
    const std::size_t name_start = p;
    while (p < doc_.size() && is_name_char(doc_[p])) ++p;
    Node node;
    node.tag = lower(doc_.substr(name_start, p - name_start));
    bool self_closing = false;
    for (;;) {
      while (p < doc_.size() && is_ws(doc_[p])) ++p;
      if (p >= doc_.size()) throw FormatError("unterminated start tag <" + node.tag + ">", start);
      if (doc_[p] == '>') {
        ++p;
        break;
      }
      if (doc_[p] == '/') {
        self_closing = true;
        ++p;
        continue;
      }
      const std::size_t attr_start = p;
      while (p < doc_.size() && !is_ws(doc_[p]) && doc_[p] != '=' && doc_[p] != '>' &&
             doc_[p] != '/')
        ++p;
      if (p == attr_start) {
        ++p;  // stray character; skip it
        continue;
      }
      Attribute attr{lower(doc_.substr(attr_start, p - attr_start)), {}};
      while (p < doc_.size() && is_ws(doc_[p])) ++p;
      if (p < doc_.size() && doc_[p] == '=') {
        ++p;
        while (p < doc_.size() && is_ws(doc_[p])) ++p;
        if (p < doc_.size() && (doc_[p] == '"' || doc_[p] == '\'')) {
          const char quote = doc_[p];
          const auto close = doc_.find(quote, p + 1);
          if (close == std::string_view::npos)
            throw FormatError("unterminated attribute value", p);
          attr.value = decode_entities(doc_.substr(p + 1, close - p - 1));
          p = close + 1;
        } else {
          const std::size_t v = p;
          while (p < doc_.size() && !is_ws(doc_[p]) && doc_[p] != '>') ++p;
          attr.value = decode_entities(doc_.substr(v, p - v));
        }
      }
      node.attrs.push_back(std::move(attr));
    }
    pos_ = p;

    const std::string tag = node.tag;
    if (closes_paragraph(tag) && nodes_[open_.back()].tag == "p") open_.pop_back();
    if (tag == "li" && nodes_[open_.back()].tag == "li") open_.pop_back();

    const auto parent = open_.back();
    node.parent = parent;
    nodes_.push_back(std::move(node));
    const auto idx = nodes_.size() - 1;
    nodes_[parent].children.push_back(idx);

    if (self_closing || is_void(tag)) return;
    if (is_raw_text(tag)) {
      const auto close = find_raw_text_end(tag);
      if (close == std::string_view::npos)
        throw FormatError("unterminated <" + tag + "> element", start);
      open_.push_back(idx);
      if (tag == "textarea" || tag == "title") add_text(doc_.substr(pos_, close - pos_));
      open_.pop_back();
      const auto gt = doc_.find('>', close);
      if (gt == std::string_view::npos) throw FormatError("unterminated end tag", close);
      pos_ = gt + 1;
      return;
    }
    open_.push_back(idx);
  }

  std::size_t find_raw_text_end(const std::string& tag) const {
    const std::string needle = "</" + tag;
    for (std::size_t p = pos_; p + needle.size() <= doc_.size(); ++p) {
      if (doc_[p] != '<') continue;
      if (lower(doc_.substr(p, needle.size())) == needle) return p;
    }
    return std::string_view::npos;
  }

  void close_element(const std::string& tag) {
    for (std::size_t k = open_.size(); k > 1; --k) {
      if (nodes_[open_[k - 1]].tag == tag) {
        open_.resize(k - 1);
        return;
      }
    }
  }

  std::string_view doc_;
  std::size_t pos_ = 0;
  std::vector<Node> nodes_;
  std::vector<std::size_t> open_;
};

struct Compound {
  std::string tag;
  std::string id;
  std::vector<std::string> classes;
  std::vector<std::pair<std::string, std::optional<std::string>>> attrs;
};

std::vector<Compound> parse_selector(std::string_view sel) {
  std::vector<Compound> chain;
  std::size_t p = 0;
  auto fail = [&](const char* msg) {
    throw ConfigError(std::string("invalid selector '") + std::string(sel) + "': " + msg);
  };
  auto read_ident = [&]() {
    const std::size_t s = p;
    while (p < sel.size() && is_name_char(sel[p])) ++p;
    if (p == s) fail("expected identifier");
    return std::string(sel.substr(s, p - s));
  };
  while (p < sel.size()) {
    while (p < sel.size() && is_ws(sel[p])) ++p;
    if (p >= sel.size()) break;
    Compound c;
    if (sel[p] == '*') {
      ++p;
    } else if (is_name_char(sel[p])) {
      c.tag = lower(read_ident());
    }
    while (p < sel.size() && !is_ws(sel[p])) {
      if (sel[p] == '.') {
        ++p;
        c.classes.push_back(read_ident());
      } else if (sel[p] == '#') {
        ++p;
        c.id = read_ident();
      } else if (sel[p] == '[') {
        ++p;
        std::string name = lower(read_ident());
        std::optional<std::string> value;
        if (p < sel.size() && sel[p] == '=') {
          ++p;
          if (p < sel.size() && (sel[p] == '"' || sel[p] == '\'')) {
            const char q = sel[p];
            const auto close = sel.find(q, p + 1);
            if (close == std::string_view::npos) fail("unterminated quoted value");
            value = std::string(sel.substr(p + 1, close - p - 1));
            p = close + 1;
          } else {
            value = read_ident();
          }
        }
        if (p >= sel.size() || sel[p] != ']') fail("expected ']'");
        ++p;
        c.attrs.emplace_back(std::move(name), std::move(value));
      } else {
        fail("unexpected character");
      }
    }
    chain.push_back(std::move(c));
  }
  if (chain.empty()) fail("empty selector");
  return chain;
}

const std::string* find_attr(const Node& n, std::string_view name) {
  for (const auto& a : n.attrs)
    if (a.name == name) return &a.value;
  return nullptr;
}

bool has_class(const Node& n, std::string_view cls) {
  const auto* value = find_attr(n, "class");
  if (!value) return false;
  std::string_view v = *value;
  std::size_t p = 0;
  while (p < v.size()) {
    while (p < v.size() && is_ws(v[p])) ++p;
    const std::size_t s = p;
    while (p < v.size() && !is_ws(v[p])) ++p;
    if (p > s && v.substr(s, p - s) == cls) return true;
  }
  return false;
}

bool matches_compound(const Node& n, const Compound& c) {
  if (n.tag.empty() || n.tag == "#document") return false;
  if (!c.tag.empty() && n.tag != c.tag) return false;
  if (!c.id.empty()) {
    const auto* id = find_attr(n, "id");
    if (!id || *id != c.id) return false;
  }
  for (const auto& cls : c.classes)
    if (!has_class(n, cls)) return false;
  for (const auto& [name, value] : c.attrs) {
    const auto* v = find_attr(n, name);
    if (!v || (value && *v != *value)) return false;
  }
  return true;
}

bool matches_chain(const std::vector<Node>& nodes, std::size_t idx,
                   const std::vector<Compound>& chain) {
  if (!matches_compound(nodes[idx], chain.back())) return false;
  std::size_t k = chain.size() - 1;
  std::size_t cur = idx;
  while (k > 0) {
    if (cur == 0) return false;
    cur = nodes[cur].parent;
    if (matches_compound(nodes[cur], chain[k - 1])) --k;
    if (cur == 0 && k > 0) return false;
  }
  return true;
}

void preorder(const std::vector<Node>& nodes, std::size_t root, std::vector<std::size_t>& out) {
  std::vector<std::size_t> stack{root};
  while (!stack.empty()) {
    const auto n = stack.back();
    stack.pop_back();
    out.push_back(n);
    const auto& ch = nodes[n].children;
    for (auto it = ch.rbegin(); it != ch.rend(); ++it) stack.push_back(*it);
  }
}

void collect_text(const std::vector<Node>& nodes, std::size_t n, std::string& out) {
  const auto& node = nodes[n];
  if (node.tag.empty()) {
    out += node.text;
    return;
  }
  const bool boundary = is_block_boundary(node.tag);
  if (boundary) out.push_back(' ');
  for (auto c : node.children) collect_text(nodes, c, out);
  if (boundary) out.push_back(' ');
}

std::string squeeze(std::string_view s) {
  std::string out;
  bool space = false;
  for (char c : s) {
    if (is_ws(c)) {
      space = true;
      continue;
    }
    if (space && !out.empty()) out.push_back(' ');
    space = false;
    out.push_back(c);
  }
  return out;
}

}  // namespace

std::vector<RawReview> extract_reviews(std::string_view html, std::string_view page_stem,
                                       const ReviewSelectors& selectors) {
  const auto container_chain = parse_selector(selectors.container);
  const auto text_chain = parse_selector(selectors.text);
  if (html.empty()) return {};

  const auto nodes = Parser(html).parse();
  std::vector<std::size_t> order;
  preorder(nodes, 0, order);

  std::vector<RawReview> out;
  for (const auto idx : order) {
    if (!matches_chain(nodes, idx, container_chain)) continue;
    std::vector<std::size_t> inner;
    preorder(nodes, idx, inner);
    std::string text;
    for (std::size_t k = 1; k < inner.size(); ++k) {
      if (matches_chain(nodes, inner[k], text_chain)) {
        std::string raw;
        collect_text(nodes, inner[k], raw);
        text = squeeze(decode_entities(raw));
        break;
      }
    }
    out.push_back(RawReview{std::string(page_stem) + "-" + std::to_string(out.size()),
                            std::move(text), std::nullopt});
  }
  return out;
}

}  // namespace sentipipe
