#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace cilayer {

// Nested-chain packet layout for L decoders: L private packets "1".."L"
// followed by L-1 common packets "12..L", "23..L", ..., "(L-1)L". Decoder l
// receives its private packet and every common packet whose span contains l.
class PacketTopology {
 public:
  static PacketTopology nested_chain(std::size_t decoders);

  std::size_t decoders() const noexcept { return decoders_; }
  std::size_t packet_count() const noexcept { return labels_.size(); }
  const std::vector<std::string>& labels() const noexcept { return labels_; }
  const std::string& label(std::size_t packet) const { return labels_.at(packet); }

  bool is_common(std::size_t packet) const noexcept { return packet >= decoders_; }
  // Index of the common packet shared by decoders level..L (level is 0-based,
  // level < L-1).
  std::size_t common_packet(std::size_t level) const noexcept { return decoders_ + level; }
  std::size_t private_packet(std::size_t decoder) const noexcept { return decoder; }

  // Decoders (0-based) that receive the packet.
  std::vector<std::size_t> span(std::size_t packet) const;
  // Packets (indices) received by a decoder.
  const std::vector<std::size_t>& routing(std::size_t decoder) const {
    return routing_.at(decoder);
  }
  // Packet index for a label, or npos.
  std::size_t find(const std::string& label) const noexcept;

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

 private:
  std::size_t decoders_ = 0;
  std::vector<std::string> labels_;
  std::vector<std::vector<std::size_t>> routing_;
};

}  // namespace cilayer
