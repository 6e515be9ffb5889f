#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

// Shared error types, tolerance defaults and deterministic random
// number helpers used by every other header.

namespace vlab {

inline constexpr int kMaxDim = 6;

// Default tolerances. Exact-arithmetic paths are held to the absolute
// tolerance; composed linear-algebra paths to the relative ones.
namespace tol {
inline constexpr double kExact = 1e-12;
inline constexpr double kLinAlg = 1e-10;
inline constexpr double kCovariance = 1e-9;
inline constexpr double kDeterminant = 1e-9;
inline constexpr double kSimplexVolume = 1e-12;
inline constexpr double kVertexCoord = 1e-12;
inline constexpr double kPlane = 1e-9;
inline constexpr double kRank = 1e-9;
}  // namespace tol

struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

struct DimensionMismatch : Error {
  explicit DimensionMismatch(const std::string& what) : Error(what) {}
};
struct DegenerateSimplex : Error {
  explicit DegenerateSimplex(const std::string& what) : Error(what) {}
};
struct DegenerateDraw : Error {
  explicit DegenerateDraw(const std::string& what) : Error(what) {}
};
struct GridMismatch : Error {
  explicit GridMismatch(const std::string& what) : Error(what) {}
};
struct ContainmentViolation : Error {
  explicit ContainmentViolation(const std::string& what) : Error(what) {}
};
struct RotationInHighDim : Error {
  explicit RotationInHighDim(const std::string& what) : Error(what) {}
};
struct DegenerateSupport : Error {
  explicit DegenerateSupport(const std::string& what) : Error(what) {}
};
struct MixedSigns : Error {
  explicit MixedSigns(const std::string& what) : Error(what) {}
};
struct OverlappingInteriors : Error {
  explicit OverlappingInteriors(const std::string& what) : Error(what) {}
};
struct ParseError : Error {
  explicit ParseError(const std::string& what) : Error(what) {}
};

// --- deterministic randomness -------------------------------------------
//
// std::mt19937_64 has a standardized sequence, but the standard
// distributions do not.  All sampling therefore goes through the helpers
// below so that a seed reproduces bit-identical values on every platform.

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Seed for one case of one property: a pure function of the triple.
inline std::uint64_t derive_seed(std::uint64_t master, const std::string& property_id,
                                 std::uint64_t case_index) {
  return splitmix64(master ^ splitmix64(fnv1a64(property_id) + 0x9e3779b97f4a7c15ULL * case_index));
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t bits() { return engine_(); }

  // uniform in [0, 1)
  double unit() { return static_cast<double>(bits() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }

  // uniform integer in [0, n)
  std::uint64_t index(std::uint64_t n) { return n == 0 ? 0 : bits() % n; }

  int range(int lo, int hi) {  // inclusive bounds
    return lo + static_cast<int>(index(static_cast<std::uint64_t>(hi - lo + 1)));
  }

  bool coin() { return (bits() & 1u) != 0; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace vlab
