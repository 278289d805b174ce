#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace locosel {

enum class Errc {
  InvalidSpec,
  OutOfExtent,
  OccludedCenter,
  FullyOccludedColumn,
  InvalidSpawn,
  CrashedTrace,
  ZeroDistance,
  RetriesExhausted,
  ConfigInvalid,
  MalformedFile,
  VersionMismatch,
  ShapeMismatch,
  HeadKindMismatch,
  SkillSetMismatch,
  DuplicateId,
  MissingModel,
  FileNotFound,
  Usage,
};

const char* to_string(Errc code);

/// Library-wide exception. The message is a one-line diagnostic.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what);
  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

/// splitmix64 finalizer; used to derive independent stream seeds.
std::uint64_t mix64(std::uint64_t x);

/// Seed for (master, a, b, c). Pure function; scheduling-independent.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0,
                          std::uint64_t c = 0);

/// Seeded random stream. Only the raw mt19937_64 output is consumed so the
/// sequence is identical across standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  /// Uniform on [0, 1) with 53 bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer on [0, n).
  std::size_t index(std::size_t n);

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[index(i)]);
  }

 private:
  std::mt19937_64 engine_;
};

/// Shortest decimal text that round-trips exactly.
std::string format_number(double value);
std::string format_number(float value);
/// Strict parse of a full token; throws Errc::MalformedFile on failure.
double parse_double(std::string_view token);
long long parse_int(std::string_view token);

std::vector<std::string_view> split(std::string_view text, char sep);
std::string_view trim(std::string_view text);

/// FNV-1a 64-bit; used for manifest config hashes and byte comparisons.
std::uint64_t fnv1a64(std::string_view bytes);
std::string hex64(std::uint64_t value);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view content);

}  // namespace locosel
