#include "locosel/common.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace locosel {

const char* to_string(Errc code) {
  switch (code) {
    case Errc::InvalidSpec: return "invalid-spec";
    case Errc::OutOfExtent: return "out-of-extent";
    case Errc::OccludedCenter: return "occluded-center";
    case Errc::FullyOccludedColumn: return "fully-occluded-column";
    case Errc::InvalidSpawn: return "invalid-spawn";
    case Errc::CrashedTrace: return "crashed-trace";
    case Errc::ZeroDistance: return "zero-distance";
    case Errc::RetriesExhausted: return "retries-exhausted";
    case Errc::ConfigInvalid: return "config-invalid";
    case Errc::MalformedFile: return "malformed-file";
    case Errc::VersionMismatch: return "version-mismatch";
    case Errc::ShapeMismatch: return "shape-mismatch";
    case Errc::HeadKindMismatch: return "head-kind-mismatch";
    case Errc::SkillSetMismatch: return "skill-set-mismatch";
    case Errc::DuplicateId: return "duplicate-id";
    case Errc::MissingModel: return "missing-model";
    case Errc::FileNotFound: return "file-not-found";
    case Errc::Usage: return "usage";
  }
  return "unknown";
}

Error::Error(Errc code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b,
                          std::uint64_t c) {
  std::uint64_t h = mix64(master);
  h = mix64(h ^ a);
  h = mix64(h ^ b);
  return mix64(h ^ c);
}

std::size_t Rng::index(std::size_t n) {
  if (n <= 1) return 0;
  const std::uint64_t bound = static_cast<std::uint64_t>(n);
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound);
  std::uint64_t draw = engine_();
  while (draw >= limit) draw = engine_();
  return static_cast<std::size_t>(draw % bound);
}

namespace {
template <typename T>
std::string shortest(T value) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  (void)ec;
  return std::string(buf, end);
}
}  // namespace

std::string format_number(double value) { return shortest(value); }
std::string format_number(float value) { return shortest(value); }

double parse_double(std::string_view token) {
  token = trim(token);
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc() || ptr != token.data() + token.size() || token.empty())
    throw Error(Errc::MalformedFile, "not a number: '" + std::string(token) + "'");
  return value;
}

long long parse_int(std::string_view token) {
  token = trim(token);
  long long value = 0;
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc() || ptr != token.data() + token.size() || token.empty())
    throw Error(Errc::MalformedFile, "not an integer: '" + std::string(token) + "'");
  return value;
}

std::vector<std::string_view> split(std::string_view text, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = text.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(text.substr(start));
      break;
    }
    out.push_back(text.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

std::string_view trim(std::string_view text) {
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = text.find_last_not_of(" \t\r\n");
  return text.substr(first, last - first + 1);
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::FileNotFound, path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::FileNotFound, "cannot write " + path);
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
}

}  // namespace locosel
