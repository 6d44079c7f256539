#pragma once

// Data-parallel inner loops used by the samplers and the path simulator.
//
// Every kernel has a scalar reference in kernels::scalar and, on x86-64, an
// AVX2 variant in kernels::avx2. The variants perform the same IEEE-754
// operations in the same order (no FMA contraction, no reassociation), so
// their outputs are bit-identical; tests/kernels_test.cpp enforces this.
// active() picks a variant once at startup from CPUID, overridable through
// SYMPRICE_ISA=scalar|avx2 or set_isa().

#include <cstddef>
#include <span>
#include <string_view>

namespace symprice::kernels {

enum class Isa { Scalar, Avx2 };

/// Coefficients of the affine map (Z1, Z2) -> (D, S):
///   D = mu1 + sigma1 * Z1
///   S = mu2 + sigma2 * (rho * Z1 + rho_perp * Z2)
struct AffinePair {
  double mu1, mu2, sigma1, sigma2, rho, rho_perp;
};

struct Table {
  Isa isa;
  void (*affine_pair)(const AffinePair&, std::span<const double> z1,
                      std::span<const double> z2, std::span<double> d,
                      std::span<double> s);
  void (*ratio)(std::span<const double> num, std::span<const double> den,
                std::span<double> out);
  /// 0.5 * (x - 1/x)
  void (*sym_basic)(std::span<const double> x, std::span<double> out);
  /// x^q - x^-q for integer q >= 1, x^q by left-to-right multiplication.
  void (*power_diff_int)(std::span<const double> x, int q, std::span<double> out);
  /// (x - 1/x)^q for integer q >= 1.
  void (*odd_power_int)(std::span<const double> x, int q, std::span<double> out);
  /// out = c * x
  void (*scale)(std::span<const double> x, double c, std::span<double> out);
};

namespace scalar {
const Table& table() noexcept;
}
namespace avx2 {
/// nullptr when the AVX2 variant was not compiled in.
const Table* table() noexcept;
}

bool cpu_has_avx2() noexcept;

/// Currently dispatched table.
const Table& active() noexcept;

/// Force a variant; falls back to scalar when AVX2 is unavailable.
/// Returns the ISA actually selected.
Isa set_isa(Isa isa) noexcept;

std::string_view isa_name(Isa isa) noexcept;

/// x^q for integer q >= 1, multiplying left to right. Shared by the scalar
/// kernels and gfunc so that single-point and batch evaluation agree bitwise.
inline double ipow(double x, int q) noexcept {
  double r = x;
  for (int i = 1; i < q; ++i) r *= x;
  return r;
}

}  // namespace symprice::kernels
