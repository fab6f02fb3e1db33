#include "lahcn/hierarchy.hpp"

#include <cstdint>
#include <cstdio>
#include <deque>
#include <fstream>
#include <istream>

#include "lahcn/error.hpp"

namespace lahcn {

namespace {

void check_name(const std::string& name) {
  if (name.empty()) throw ParseError("empty label name");
  if (name.find_first_of("\t\n\r") != std::string::npos) {
    throw ParseError("label name contains a tab or newline: '" + name + "'");
  }
}

}  // namespace

LabelHierarchy LabelHierarchy::build(const std::vector<Edge>& edges) {
  const std::string root(kVirtualRoot);

  // Nodes in first-appearance order; root excluded.
  std::vector<std::string> order;
  std::map<std::string, std::size_t> seen;
  auto note = [&](const std::string& n) {
    if (n != root && seen.emplace(n, order.size()).second) order.push_back(n);
  };

  std::map<std::string, std::vector<std::string>> children;
  std::set<Edge> unique_edges;
  for (const auto& [p, c] : edges) {
    check_name(p);
    check_name(c);
    if (c == root) throw ParseError("the reserved name 'root' cannot be a child (parent '" + p + "')");
    note(p);
    note(c);
    if (unique_edges.insert({p, c}).second) children[p].push_back(c);
  }

  // Cycle check by iterative three-colour DFS over every node.
  enum Colour : std::uint8_t { kWhite, kGrey, kBlack };
  std::map<std::string, Colour> colour;
  std::vector<std::string> all = order;
  all.push_back(root);
  for (const auto& start : all) {
    if (colour[start] != kWhite) continue;
    std::vector<std::pair<std::string, std::size_t>> stack{{start, 0}};
    colour[start] = kGrey;
    while (!stack.empty()) {
      auto& [n, next] = stack.back();
      const auto it = children.find(n);
      if (it == children.end() || next >= it->second.size()) {
        colour[n] = kBlack;
        stack.pop_back();
        continue;
      }
      const std::string child = it->second[next++];
      if (colour[child] == kGrey) throw CycleError("cycle through label '" + child + "'");
      if (colour[child] == kWhite) {
        colour[child] = kGrey;
        stack.emplace_back(child, 0);
      }
    }
  }

  std::map<std::string, std::string> parent;
  for (const auto& [p, c] : edges) {
    auto [it, inserted] = parent.emplace(c, p);
    if (!inserted && it->second != p) {
      throw MultiParentError("label '" + c + "' has parents '" + it->second + "' and '" + p + "'");
    }
  }

  std::map<std::string, std::size_t> level;
  std::deque<std::string> queue{root};
  level[root] = 0;
  while (!queue.empty()) {
    const std::string n = queue.front();
    queue.pop_front();
    if (auto it = children.find(n); it != children.end()) {
      for (const auto& c : it->second) {
        level[c] = level[n] + 1;
        queue.push_back(c);
      }
    }
  }
  for (const auto& n : order) {
    if (!level.count(n)) throw OrphanError("label '" + n + "' is not reachable from root");
  }

  LabelHierarchy h;
  h.edges_ = edges;
  std::size_t depth = 0;
  for (const auto& n : order) depth = std::max(depth, level[n]);
  h.per_level_.assign(depth, {});
  for (const auto& n : order) h.per_level_[level[n] - 1].push_back(n);
  for (std::size_t l = 0; l < depth; ++l) {
    h.level_offsets_.push_back(h.names_.size());
    for (const auto& n : h.per_level_[l]) {
      h.index_.emplace(n, h.names_.size());
      h.names_.push_back(n);
      h.level_of_.push_back(l + 1);
    }
  }
  for (const auto& n : h.names_) {
    const std::string& p = parent.at(n);
    h.parent_of_.push_back(p == root ? h.names_.size() : h.index_.at(p));
  }
  return h;
}

std::vector<std::size_t> LabelHierarchy::level_sizes() const {
  std::vector<std::size_t> out;
  for (const auto& l : per_level_) out.push_back(l.size());
  return out;
}

const std::vector<std::string>& LabelHierarchy::labels_at_level(std::size_t h) const {
  if (h < 1 || h > per_level_.size()) {
    throw LevelOutOfRange("level " + std::to_string(h) + " outside 1.." + std::to_string(per_level_.size()));
  }
  return per_level_[h - 1];
}

std::size_t LabelHierarchy::index_of(const std::string& label) const {
  auto it = index_.find(label);
  if (it == index_.end()) throw UnknownLabelError("unknown label '" + label + "'");
  return it->second;
}

std::size_t LabelHierarchy::level_offset(std::size_t h) const {
  labels_at_level(h);
  return level_offsets_[h - 1];
}

std::string LabelHierarchy::parent(const std::string& label) const {
  const std::size_t p = parent_of_.at(index_of(label));
  return p == names_.size() ? std::string(kVirtualRoot) : names_[p];
}

std::string LabelHierarchy::fingerprint() const {
  std::uint64_t hash = 14695981039346656037ull;
  auto mix = [&](std::string_view s) {
    for (unsigned char ch : s) {
      hash ^= ch;
      hash *= 1099511628211ull;
    }
  };
  for (const auto& [p, c] : edges_) {
    mix(p);
    mix("\t");
    mix(c);
    mix("\n");
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash));
  return buf;
}

LabelHierarchy build_hierarchy(const std::vector<Edge>& edges) { return LabelHierarchy::build(edges); }

LabelHierarchy parse_hierarchy(std::istream& in, const std::string& source) {
  std::vector<Edge> edges;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || line.find('\t', tab + 1) != std::string::npos) {
      throw ParseError(source + ":" + std::to_string(lineno) + ": expected 'parent<TAB>child'");
    }
    edges.emplace_back(line.substr(0, tab), line.substr(tab + 1));
    if (edges.back().first.empty() || edges.back().second.empty()) {
      throw ParseError(source + ":" + std::to_string(lineno) + ": empty label name");
    }
  }
  return LabelHierarchy::build(edges);
}

LabelHierarchy load_hierarchy(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open hierarchy file " + path.string());
  return parse_hierarchy(in, path.string());
}

LabelSet ancestor_closure(const LabelSet& labels, const LabelHierarchy& hier) {
  LabelSet out;
  for (const auto& l : labels) {
    std::size_t i = hier.index_of(l);
    while (i != hier.size() && out.insert(hier.name(i)).second) i = hier.parent_index(i);
  }
  return out;
}

const std::vector<std::string>& labels_at_level(const LabelHierarchy& hier, std::size_t h) {
  return hier.labels_at_level(h);
}

}  // namespace lahcn
