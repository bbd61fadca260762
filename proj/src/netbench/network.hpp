#pragma once

#include <cstdint>
#include <vector>

namespace netbench {

/// Directed graph on P vertices. Entry (i, j) set means "i regulates j";
/// self-edges are allowed.
class Network {
 public:
  explicit Network(int num_vars);

  int num_vars() const noexcept { return num_vars_; }

  bool edge(int from, int to) const { return edges_[index(from, to)] != 0; }
  void set_edge(int from, int to, bool present = true) { edges_[index(from, to)] = present ? 1 : 0; }

  int num_edges() const noexcept;

  bool operator==(const Network&) const = default;

 private:
  std::size_t index(int from, int to) const;

  int num_vars_;
  std::vector<std::uint8_t> edges_;
};

}  // namespace netbench
