#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace osc2cr::xml {

/// Minimal DOM node. Attribute order is preserved as read.
struct Node {
  std::string name;
  std::vector<std::pair<std::string, std::string>> attributes;
  std::vector<Node> children;
  std::string text;
  int line = 0;

  std::optional<std::string_view> attr(std::string_view key) const;
  bool has_attr(std::string_view key) const { return attr(key).has_value(); }
  void set_attr(std::string_view key, std::string value);

  /// First direct child named `child_name`, or nullptr.
  const Node* child(std::string_view child_name) const;
  std::vector<const Node*> children_named(std::string_view child_name) const;

  // Typed attribute access; failures throw osc2cr::Error with this node's line.
  std::string required(std::string_view key) const;
  double required_double(std::string_view key) const;
  double optional_double(std::string_view key, double fallback) const;
  long long required_int(std::string_view key) const;
  long long optional_int(std::string_view key, long long fallback) const;
  bool optional_bool(std::string_view key, bool fallback) const;
  std::string optional(std::string_view key, std::string fallback = {}) const;
};

/// Parses a complete document. Throws Error(MalformedXml) with the line number
/// reported by the underlying parser.
Node parse(std::string_view text);

/// Full-string numeric parsing helpers (no trailing garbage, finite only).
std::optional<double> to_double(std::string_view s);
std::optional<long long> to_int(std::string_view s);

std::string escape(std::string_view raw);

/// Fixed six-decimal rendering used by every golden-file output; "-0.000000"
/// is written as "0.000000".
std::string fixed6(double v);

/// Shortest round-trippable rendering.
std::string exact(double v);

/// Indenting streaming writer. Elements are closed in LIFO order.
class Writer {
 public:
  using Attrs = std::vector<std::pair<std::string, std::string>>;

  Writer();

  void open(std::string_view name, const Attrs& attrs = {});
  void close();
  void empty(std::string_view name, const Attrs& attrs = {});
  void leaf(std::string_view name, std::string_view text, const Attrs& attrs = {});
  void comment(std::string_view text);

  /// Closes all pending elements and returns the document.
  std::string finish();

 private:
  void indent();
  void write_attrs(const Attrs& attrs);

  std::string out_;
  std::vector<std::string> stack_;
};

}  // namespace osc2cr::xml
