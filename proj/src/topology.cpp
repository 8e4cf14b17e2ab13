#include "cilayer/topology.hpp"

#include "cilayer/error.hpp"

namespace cilayer {

PacketTopology PacketTopology::nested_chain(std::size_t decoders) {
  if (decoders < 2 || decoders > 9)
    fail(ErrorCode::Config, "packet topology supports 2 to 9 decoders");
  PacketTopology t;
  t.decoders_ = decoders;
  for (std::size_t l = 0; l < decoders; ++l) t.labels_.push_back(std::to_string(l + 1));
  for (std::size_t k = 0; k + 1 < decoders; ++k) {
    std::string label;
    for (std::size_t l = k; l < decoders; ++l) label += std::to_string(l + 1);
    t.labels_.push_back(label);
  }
  t.routing_.resize(decoders);
  for (std::size_t l = 0; l < decoders; ++l) {
    t.routing_[l].push_back(l);
    for (std::size_t k = 0; k + 1 < decoders && k <= l; ++k) t.routing_[l].push_back(decoders + k);
  }
  return t;
}

std::vector<std::size_t> PacketTopology::span(std::size_t packet) const {
  if (packet >= labels_.size()) fail(ErrorCode::Config, "packet index out of range");
  if (!is_common(packet)) return {packet};
  std::vector<std::size_t> out;
  for (std::size_t l = packet - decoders_; l < decoders_; ++l) out.push_back(l);
  return out;
}

std::size_t PacketTopology::find(const std::string& label) const noexcept {
  for (std::size_t i = 0; i < labels_.size(); ++i)
    if (labels_[i] == label) return i;
  return npos;
}

}  // namespace cilayer
