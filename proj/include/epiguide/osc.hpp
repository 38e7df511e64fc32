#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace epiguide::osc {

/// A decoded OSC 1.0 message. Only float32 ('f') and int32 ('i') arguments
/// are understood; ints are widened to float.
struct Message {
  std::string address;
  std::vector<float> args;
};

[[nodiscard]] std::vector<std::uint8_t> encode(const Message& message);

/// Returns nullopt for anything that is not a well-formed message with
/// supported argument types (bundles included).
[[nodiscard]] std::optional<Message> decode(std::span<const std::uint8_t> packet);

} // namespace epiguide::osc
