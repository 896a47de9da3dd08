#include "osc2cr/xml.hpp"

#include <expat.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <memory>

#include "osc2cr/error.hpp"

namespace osc2cr::xml {

std::optional<std::string_view> Node::attr(std::string_view key) const {
  for (const auto& [k, v] : attributes) {
    if (k == key) return std::string_view{v};
  }
  return std::nullopt;
}

void Node::set_attr(std::string_view key, std::string value) {
  for (auto& [k, v] : attributes) {
    if (k == key) {
      v = std::move(value);
      return;
    }
  }
  attributes.emplace_back(std::string{key}, std::move(value));
}

const Node* Node::child(std::string_view child_name) const {
  for (const auto& c : children) {
    if (c.name == child_name) return &c;
  }
  return nullptr;
}

std::vector<const Node*> Node::children_named(std::string_view child_name) const {
  std::vector<const Node*> out;
  for (const auto& c : children) {
    if (c.name == child_name) out.push_back(&c);
  }
  return out;
}

std::string Node::required(std::string_view key) const {
  auto v = attr(key);
  if (!v) {
    throw Error(ErrorCode::MissingAttribute,
                "<" + name + "> requires attribute '" + std::string{key} + "'", line);
  }
  return std::string{*v};
}

double Node::required_double(std::string_view key) const {
  const std::string raw = required(key);
  auto v = to_double(raw);
  if (!v) {
    throw Error(ErrorCode::InvalidValue,
                "<" + name + "> attribute '" + std::string{key} + "' is not a number: '" + raw + "'",
                line);
  }
  return *v;
}

double Node::optional_double(std::string_view key, double fallback) const {
  return has_attr(key) ? required_double(key) : fallback;
}

long long Node::required_int(std::string_view key) const {
  const std::string raw = required(key);
  auto v = to_int(raw);
  if (!v) {
    throw Error(ErrorCode::InvalidValue,
                "<" + name + "> attribute '" + std::string{key} + "' is not an integer: '" + raw + "'",
                line);
  }
  return *v;
}

long long Node::optional_int(std::string_view key, long long fallback) const {
  return has_attr(key) ? required_int(key) : fallback;
}

bool Node::optional_bool(std::string_view key, bool fallback) const {
  auto v = attr(key);
  if (!v) return fallback;
  if (*v == "true" || *v == "1") return true;
  if (*v == "false" || *v == "0") return false;
  throw Error(ErrorCode::InvalidValue,
              "<" + name + "> attribute '" + std::string{key} + "' is not a boolean", line);
}

std::string Node::optional(std::string_view key, std::string fallback) const {
  auto v = attr(key);
  return v ? std::string{*v} : std::move(fallback);
}

namespace {

struct BuildState {
  XML_Parser parser = nullptr;
  std::vector<Node*> stack;
  Node root;
  bool have_root = false;
};

void on_start(void* user, const XML_Char* name, const XML_Char** atts) {
  auto* st = static_cast<BuildState*>(user);
  Node node;
  node.name = name;
  node.line = static_cast<int>(XML_GetCurrentLineNumber(st->parser));
  for (int i = 0; atts[i] != nullptr; i += 2) node.attributes.emplace_back(atts[i], atts[i + 1]);
  if (st->stack.empty()) {
    st->root = std::move(node);
    st->have_root = true;
    st->stack.push_back(&st->root);
  } else {
    Node* parent = st->stack.back();
    parent->children.push_back(std::move(node));
    st->stack.push_back(&parent->children.back());
  }
}

void on_end(void* user, const XML_Char*) {
  auto* st = static_cast<BuildState*>(user);
  st->stack.pop_back();
}

void on_text(void* user, const XML_Char* s, int len) {
  auto* st = static_cast<BuildState*>(user);
  if (!st->stack.empty()) st->stack.back()->text.append(s, static_cast<std::size_t>(len));
}

std::string trim(std::string_view s) {
  auto is_space = [](char c) { return c == ' ' || c == '\n' || c == '\t' || c == '\r'; };
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return std::string{s};
}

void trim_text(Node& n) {
  n.text = trim(n.text);
  for (auto& c : n.children) trim_text(c);
}

}  // namespace

Node parse(std::string_view text) {
  // Only the innermost open node's children grow, so pointers to open
  // ancestors held on the stack stay valid.
  std::unique_ptr<std::remove_pointer_t<XML_Parser>, decltype(&XML_ParserFree)> parser(
      XML_ParserCreate("UTF-8"), &XML_ParserFree);
  BuildState st;
  st.parser = parser.get();
  XML_SetUserData(parser.get(), &st);
  XML_SetElementHandler(parser.get(), on_start, on_end);
  XML_SetCharacterDataHandler(parser.get(), on_text);
  if (XML_Parse(parser.get(), text.data(), static_cast<int>(text.size()), XML_TRUE) == XML_STATUS_ERROR) {
    throw Error(ErrorCode::MalformedXml, XML_ErrorString(XML_GetErrorCode(parser.get())),
                static_cast<int>(XML_GetCurrentLineNumber(parser.get())));
  }
  if (!st.have_root) throw Error(ErrorCode::MalformedXml, "document has no root element", 1);
  trim_text(st.root);
  return std::move(st.root);
}

std::optional<double> to_double(std::string_view s) {
  std::string buf = trim(s);
  if (buf.empty()) return std::nullopt;
  const char* first = buf.data();
  if (*first == '+') ++first;
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(first, buf.data() + buf.size(), v);
  if (ec != std::errc{} || ptr != buf.data() + buf.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::optional<long long> to_int(std::string_view s) {
  std::string buf = trim(s);
  if (buf.empty()) return std::nullopt;
  const char* first = buf.data();
  if (*first == '+') ++first;
  long long v = 0;
  auto [ptr, ec] = std::from_chars(first, buf.data() + buf.size(), v);
  if (ec != std::errc{} || ptr != buf.data() + buf.size()) return std::nullopt;
  return v;
}

std::string escape(std::string_view raw) {
  std::string out;
  out.reserve(raw.size());
  for (char c : raw) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  std::string s{buf};
  if (s == "-0.000000") s = "0.000000";
  return s;
}

std::string exact(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

Writer::Writer() { out_ = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"; }

void Writer::indent() { out_.append(stack_.size() * 2, ' '); }

void Writer::write_attrs(const Attrs& attrs) {
  for (const auto& [k, v] : attrs) {
    out_ += ' ';
    out_ += k;
    out_ += "=\"";
    out_ += escape(v);
    out_ += '"';
  }
}

void Writer::open(std::string_view name, const Attrs& attrs) {
  indent();
  out_ += '<';
  out_ += name;
  write_attrs(attrs);
  out_ += ">\n";
  stack_.emplace_back(name);
}

void Writer::close() {
  std::string name = std::move(stack_.back());
  stack_.pop_back();
  indent();
  out_ += "</" + name + ">\n";
}

void Writer::empty(std::string_view name, const Attrs& attrs) {
  indent();
  out_ += '<';
  out_ += name;
  write_attrs(attrs);
  out_ += "/>\n";
}

void Writer::leaf(std::string_view name, std::string_view text, const Attrs& attrs) {
  indent();
  out_ += '<';
  out_ += name;
  write_attrs(attrs);
  out_ += '>';
  out_ += escape(text);
  out_ += "</";
  out_ += name;
  out_ += ">\n";
}

void Writer::comment(std::string_view text) {
  indent();
  out_ += "<!-- ";
  out_ += text;
  out_ += " -->\n";
}

std::string Writer::finish() {
  while (!stack_.empty()) close();
  return std::move(out_);
}

}  // namespace osc2cr::xml
