#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace lahcn {

using Edge = std::pair<std::string, std::string>;  // (parent, child)
using LabelSet = std::set<std::string>;

inline constexpr std::string_view kVirtualRoot = "root";

// Label taxonomy: a tree under an implicit virtual root. Levels start at 1
// for the root's children. Labels are indexed globally in "output order":
// levels ascending, then first-appearance order within a level. That order
// fixes the row index of every per-level and global tensor downstream.
//
// Immutable after construction.
class LabelHierarchy {
 public:
  // Throws CycleError, MultiParentError, OrphanError, ParseError (bad name).
  static LabelHierarchy build(const std::vector<Edge>& edges);

  std::size_t depth() const noexcept { return per_level_.size(); }       // H
  std::size_t size() const noexcept { return names_.size(); }             // M
  std::size_t level_size(std::size_t h) const { return labels_at_level(h).size(); }
  std::vector<std::size_t> level_sizes() const;

  // 1 <= h <= depth(), else LevelOutOfRange.
  const std::vector<std::string>& labels_at_level(std::size_t h) const;

  bool contains(const std::string& label) const { return index_.count(label) != 0; }
  // Global output index; UnknownLabelError if absent.
  std::size_t index_of(const std::string& label) const;
  const std::string& name(std::size_t index) const { return names_.at(index); }
  std::size_t level(const std::string& label) const { return level_of_.at(index_of(label)); }
  std::size_t level_of_index(std::size_t index) const { return level_of_.at(index); }
  // First global index of level h.
  std::size_t level_offset(std::size_t h) const;
  // Parent label name, or kVirtualRoot for level-1 labels.
  std::string parent(const std::string& label) const;
  // Global index of the parent; size() for level-1 labels.
  std::size_t parent_index(std::size_t index) const { return parent_of_.at(index); }

  const std::vector<Edge>& edges() const noexcept { return edges_; }
  // Stable 64-bit FNV-1a hash of the edge list, as 16 hex digits.
  std::string fingerprint() const;

 private:
  std::vector<Edge> edges_;
  std::vector<std::string> names_;                 // by global index
  std::vector<std::size_t> level_of_;              // by global index
  std::vector<std::size_t> parent_of_;             // by global index
  std::vector<std::vector<std::string>> per_level_;
  std::vector<std::size_t> level_offsets_;
  std::map<std::string, std::size_t> index_;
};

LabelHierarchy build_hierarchy(const std::vector<Edge>& edges);

// `parent<TAB>child` per line; `#` comments and blank lines skipped.
LabelHierarchy parse_hierarchy(std::istream& in, const std::string& source = "<stream>");
LabelHierarchy load_hierarchy(const std::filesystem::path& path);

// Smallest superset closed under "label implies all its ancestors".
// UnknownLabelError for members absent from the hierarchy.
LabelSet ancestor_closure(const LabelSet& labels, const LabelHierarchy& hier);

const std::vector<std::string>& labels_at_level(const LabelHierarchy& hier, std::size_t h);

}  // namespace lahcn
