#include "epiguide/osc.hpp"

#include <bit>
#include <cstring>

namespace epiguide::osc {

namespace {

void put_padded(std::vector<std::uint8_t>& out, const std::string& s) {
  out.insert(out.end(), s.begin(), s.end());
  const std::size_t pad = 4 - s.size() % 4;
  out.insert(out.end(), pad, 0);
}

void put_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

std::uint32_t get_be32(std::span<const std::uint8_t> p, std::size_t at) {
  return (std::uint32_t{p[at]} << 24) | (std::uint32_t{p[at + 1]} << 16) | (std::uint32_t{p[at + 2]} << 8) |
         std::uint32_t{p[at + 3]};
}

/// Reads a NUL-terminated, 4-byte-padded string starting at `at`.
std::optional<std::string> get_padded(std::span<const std::uint8_t> p, std::size_t& at) {
  std::size_t end = at;
  while (end < p.size() && p[end] != 0) {
    ++end;
  }
  if (end >= p.size()) {
    return std::nullopt;
  }
  std::string s(reinterpret_cast<const char*>(p.data() + at), end - at);
  const std::size_t next = at + (s.size() / 4 + 1) * 4;
  if (next > p.size()) {
    return std::nullopt;
  }
  for (std::size_t i = end; i < next; ++i) {
    if (p[i] != 0) {
      return std::nullopt;
    }
  }
  at = next;
  return s;
}

} // namespace

std::vector<std::uint8_t> encode(const Message& message) {
  std::vector<std::uint8_t> out;
  put_padded(out, message.address);
  put_padded(out, "," + std::string(message.args.size(), 'f'));
  for (float f : message.args) {
    put_be32(out, std::bit_cast<std::uint32_t>(f));
  }
  return out;
}

std::optional<Message> decode(std::span<const std::uint8_t> packet) {
  if (packet.size() < 8 || packet.size() % 4 != 0 || packet[0] != '/') {
    return std::nullopt;
  }
  std::size_t at = 0;
  auto address = get_padded(packet, at);
  if (!address) {
    return std::nullopt;
  }
  Message m{*address, {}};
  if (at == packet.size()) {
    return m; // old-style message without a type tag string
  }
  auto tags = get_padded(packet, at);
  if (!tags || tags->empty() || (*tags)[0] != ',') {
    return std::nullopt;
  }
  for (std::size_t i = 1; i < tags->size(); ++i) {
    if (at + 4 > packet.size()) {
      return std::nullopt;
    }
    const std::uint32_t raw = get_be32(packet, at);
    at += 4;
    switch ((*tags)[i]) {
      case 'f':
        m.args.push_back(std::bit_cast<float>(raw));
        break;
      case 'i':
        m.args.push_back(static_cast<float>(static_cast<std::int32_t>(raw)));
        break;
      default:
        return std::nullopt;
    }
  }
  if (at != packet.size()) {
    return std::nullopt;
  }
  return m;
}

} // namespace epiguide::osc
