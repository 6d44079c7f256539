#include "symprice/kernels.hpp"

namespace symprice::kernels::scalar {

namespace {

void affine_pair(const AffinePair& a, std::span<const double> z1,
                 std::span<const double> z2, std::span<double> d,
                 std::span<double> s) {
  for (std::size_t i = 0; i < z1.size(); ++i) {
    d[i] = a.mu1 + a.sigma1 * z1[i];
    s[i] = a.mu2 + a.sigma2 * (a.rho * z1[i] + a.rho_perp * z2[i]);
  }
}

void ratio(std::span<const double> num, std::span<const double> den,
           std::span<double> out) {
  for (std::size_t i = 0; i < num.size(); ++i) out[i] = num[i] / den[i];
}

void sym_basic(std::span<const double> x, std::span<double> out) {
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = 0.5 * (x[i] - 1.0 / x[i]);
}

void power_diff_int(std::span<const double> x, int q, std::span<double> out) {
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double p = ipow(x[i], q);
    out[i] = p - 1.0 / p;
  }
}

void odd_power_int(std::span<const double> x, int q, std::span<double> out) {
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = ipow(x[i] - 1.0 / x[i], q);
}

void scale(std::span<const double> x, double c, std::span<double> out) {
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = c * x[i];
}

constexpr Table kTable{Isa::Scalar, affine_pair, ratio,    sym_basic,
                       power_diff_int, odd_power_int, scale};

}  // namespace

const Table& table() noexcept { return kTable; }

}  // namespace symprice::kernels::scalar
