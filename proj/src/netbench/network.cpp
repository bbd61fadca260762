#include "netbench/network.hpp"

#include <algorithm>
#include <string>

#include "netbench/error.hpp"

namespace netbench {

Network::Network(int num_vars) : num_vars_(num_vars) {
  if (num_vars < 1) throw Error(ErrorCode::argument, "network needs at least one vertex");
  edges_.assign(static_cast<std::size_t>(num_vars) * static_cast<std::size_t>(num_vars), 0);
}

int Network::num_edges() const noexcept {
  return static_cast<int>(std::count(edges_.begin(), edges_.end(), std::uint8_t{1}));
}

std::size_t Network::index(int from, int to) const {
  if (from < 0 || to < 0 || from >= num_vars_ || to >= num_vars_)
    throw Error(ErrorCode::argument, "edge (" + std::to_string(from) + ", " + std::to_string(to) +
                                         ") outside a network of " + std::to_string(num_vars_) + " vertices");
  return static_cast<std::size_t>(from) * static_cast<std::size_t>(num_vars_) + static_cast<std::size_t>(to);
}

}  // namespace netbench
