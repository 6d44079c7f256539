#pragma once

namespace symprice {

double normal_pdf(double z) noexcept;
/// Phi(z), accurate in both tails.
double normal_cdf(double z);
/// Upper tail 1 - Phi(z) without cancellation.
double normal_sf(double z);
/// Phi^{-1}(u) for u in (0, 1).
double normal_quantile(double u);

}  // namespace symprice
