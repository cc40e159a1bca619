#pragma once

// JSON file formats.
//
//   labeled leaf:   {"leaf": 1} or {"leaf": -1}
//   bare leaf:      {"leaf": null, "id": <int>}
//   internal node:  {"var": <0-based int>, "lo": <node for bit 0>, "hi": <node for bit 1>}
//   distribution:   {"biases": [p_1, ..., p_n]}
//
// Serialization is compact (no whitespace) with keys in the order shown.

#include <string>
#include <string_view>
#include <variant>

#include <json.hpp>

#include "tdt/core.hpp"

namespace tdt {

namespace detail {

using ordered_json = nlohmann::ordered_json;

template <class V>
ordered_json node_to_json(const Tree<V>& tree, typename Tree<V>::Index at) {
  const auto& n = tree.node(at);
  ordered_json j;
  if (n.is_leaf()) {
    if constexpr (std::is_same_v<V, Label>) {
      j["leaf"] = to_int(n.leaf);
    } else {
      j["leaf"] = nullptr;
      j["id"] = n.leaf.value;
    }
    return j;
  }
  j["var"] = n.var;
  j["lo"] = node_to_json(tree, n.lo);
  j["hi"] = node_to_json(tree, n.hi);
  return j;
}

enum class LeafKind { labeled, bare };

struct RawNode {
  std::int32_t var = -1;
  std::int32_t lo = -1;
  std::int32_t hi = -1;
  int label = 0;
  std::uint32_t id = 0;
};

inline std::int32_t read_node(const nlohmann::json& j, std::vector<RawNode>& out,
                              std::optional<LeafKind>& kind, std::size_t depth) {
  if (depth > kMaxDimension) throw FormatError("tree deeper than the maximum dimension");
  if (!j.is_object()) throw FormatError("tree node must be a JSON object");
  const auto mine = static_cast<std::int32_t>(out.size());
  out.emplace_back();
  if (j.contains("leaf")) {
    if (j.contains("var") || j.contains("lo") || j.contains("hi"))
      throw FormatError("node mixes leaf and internal keys");
    const auto& leaf = j.at("leaf");
    if (leaf.is_null()) {
      if (kind == LeafKind::labeled) throw FormatError("mixed labeled and bare leaves");
      kind = LeafKind::bare;
      if (!j.contains("id") || !j.at("id").is_number_unsigned())
        throw FormatError("bare leaf needs a non-negative integer \"id\"");
      out[static_cast<std::size_t>(mine)].id = j.at("id").get<std::uint32_t>();
    } else {
      if (kind == LeafKind::bare) throw FormatError("mixed labeled and bare leaves");
      kind = LeafKind::labeled;
      if (!leaf.is_number_integer()) throw FormatError("leaf label must be 1 or -1");
      const auto v = leaf.get<long long>();
      if (v != 1 && v != -1) throw FormatError("leaf label must be 1 or -1");
      out[static_cast<std::size_t>(mine)].label = static_cast<int>(v);
    }
    return mine;
  }
  if (!j.contains("var") || !j.contains("lo") || !j.contains("hi"))
    throw FormatError("internal node needs \"var\", \"lo\" and \"hi\"");
  if (!j.at("var").is_number_integer()) throw FormatError("\"var\" must be an integer");
  const auto var = j.at("var").get<long long>();
  if (var < 0 || var >= static_cast<long long>(kMaxDimension))
    throw MalformedTree("variable index " + std::to_string(var) + " out of range");
  out[static_cast<std::size_t>(mine)].var = static_cast<std::int32_t>(var);
  const auto lo = read_node(j.at("lo"), out, kind, depth + 1);
  const auto hi = read_node(j.at("hi"), out, kind, depth + 1);
  out[static_cast<std::size_t>(mine)].lo = lo;
  out[static_cast<std::size_t>(mine)].hi = hi;
  return mine;
}

inline nlohmann::json parse_json(std::string_view text) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(std::string("malformed JSON: ") + e.what());
  }
}

template <class V>
Tree<V> build_tree(const std::vector<RawNode>& raw) {
  std::vector<typename Tree<V>::Node> nodes(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    nodes[i].var = raw[i].var;
    nodes[i].lo = raw[i].lo;
    nodes[i].hi = raw[i].hi;
    if (raw[i].var < 0) {
      if constexpr (std::is_same_v<V, Label>) {
        nodes[i].leaf = label_from_int(raw[i].label);
      } else {
        nodes[i].leaf = LeafId{raw[i].id};
      }
    }
  }
  return Tree<V>::from_nodes(std::move(nodes));
}

}  // namespace detail

inline std::string serialize_tree(const DecisionTree& tree) {
  return detail::node_to_json(tree, 0).dump();
}
inline std::string serialize_tree(const BareTree& tree) {
  return detail::node_to_json(tree.shape(), 0).dump();
}

/// Parses either kind of tree, deciding by the leaves.
inline std::variant<DecisionTree, BareTree> parse_tree(std::string_view text) {
  const auto j = detail::parse_json(text);
  std::vector<detail::RawNode> raw;
  std::optional<detail::LeafKind> kind;
  detail::read_node(j, raw, kind, 0);
  if (kind == detail::LeafKind::bare) return BareTree(detail::build_tree<LeafId>(raw));
  return detail::build_tree<Label>(raw);
}

inline DecisionTree parse_decision_tree(std::string_view text) {
  auto t = parse_tree(text);
  if (auto* d = std::get_if<DecisionTree>(&t)) return std::move(*d);
  throw FormatError("expected a labeled tree, found a bare tree");
}

inline BareTree parse_bare_tree(std::string_view text) {
  auto t = parse_tree(text);
  if (auto* b = std::get_if<BareTree>(&t)) return std::move(*b);
  throw FormatError("expected a bare tree, found a labeled tree");
}

inline std::string serialize_distribution(const ProductDistribution& dist) {
  detail::ordered_json j;
  j["biases"] = std::vector<double>(dist.biases().begin(), dist.biases().end());
  return j.dump();
}

inline ProductDistribution parse_distribution(std::string_view text) {
  const auto j = detail::parse_json(text);
  if (!j.is_object() || !j.contains("biases") || !j.at("biases").is_array())
    throw FormatError("distribution needs a \"biases\" array");
  std::vector<double> biases;
  for (const auto& b : j.at("biases")) {
    if (!b.is_number()) throw FormatError("bias must be a number");
    biases.push_back(b.get<double>());
  }
  return ProductDistribution(std::move(biases));
}

}  // namespace tdt
