#include "epiguide/error.hpp"
#include "epiguide/membrane.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace epiguide {

namespace {

template <typename T>
void put(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

template <typename T>
T get(const std::string& in, std::size_t at) {
  if (at + sizeof(T) > in.size()) {
    throw ParseError("WAV: truncated");
  }
  T v;
  std::memcpy(&v, in.data() + at, sizeof(T));
  return v;
}

} // namespace

std::vector<std::int16_t> to_pcm16(std::span<const float> samples) {
  std::vector<std::int16_t> pcm(samples.size());
  std::transform(samples.begin(), samples.end(), pcm.begin(), [](float x) {
    const double c = std::clamp(static_cast<double>(x), -1.0, 1.0);
    return static_cast<std::int16_t>(std::lround(c * 32767.0));
  });
  return pcm;
}

std::string encode_wav(std::span<const float> samples, int sample_rate) {
  const auto pcm = to_pcm16(samples);
  const auto data_bytes = static_cast<std::uint32_t>(pcm.size() * 2);
  std::string out;
  out.reserve(44 + data_bytes);
  out += "RIFF";
  put<std::uint32_t>(out, 36 + data_bytes);
  out += "WAVE";
  out += "fmt ";
  put<std::uint32_t>(out, 16);
  put<std::uint16_t>(out, 1); // PCM
  put<std::uint16_t>(out, 1); // mono
  put<std::uint32_t>(out, static_cast<std::uint32_t>(sample_rate));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(sample_rate) * 2);
  put<std::uint16_t>(out, 2);
  put<std::uint16_t>(out, 16);
  out += "data";
  put<std::uint32_t>(out, data_bytes);
  for (auto s : pcm) {
    put<std::int16_t>(out, s);
  }
  return out;
}

WavData decode_wav(const std::string& bytes) {
  if (bytes.size() < 12 || bytes.compare(0, 4, "RIFF") != 0 || bytes.compare(8, 4, "WAVE") != 0) {
    throw ParseError("WAV: not a RIFF/WAVE file");
  }
  WavData wav;
  std::size_t at = 12;
  bool have_fmt = false;
  while (at + 8 <= bytes.size()) {
    const std::string id = bytes.substr(at, 4);
    const auto size = get<std::uint32_t>(bytes, at + 4);
    const std::size_t body = at + 8;
    if (id == "fmt ") {
      if (get<std::uint16_t>(bytes, body) != 1 || get<std::uint16_t>(bytes, body + 14) != 16) {
        throw ParseError("WAV: only 16-bit PCM is supported");
      }
      wav.channels = get<std::uint16_t>(bytes, body + 2);
      wav.sample_rate = static_cast<int>(get<std::uint32_t>(bytes, body + 4));
      have_fmt = true;
    } else if (id == "data") {
      if (!have_fmt) {
        throw ParseError("WAV: data chunk before fmt chunk");
      }
      if (body + size > bytes.size()) {
        throw ParseError("WAV: truncated data chunk");
      }
      wav.samples.resize(size / 2);
      std::memcpy(wav.samples.data(), bytes.data() + body, wav.samples.size() * 2);
      return wav;
    }
    at = body + size + (size & 1u);
  }
  throw ParseError("WAV: no data chunk");
}

} // namespace epiguide
