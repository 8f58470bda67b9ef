#pragma once

namespace dfpower {

// Standard normal CDF.
double norm_cdf(double x);

// Standard normal quantile (Wichura's PPND16 rational approximations,
// accurate to ~1e-15 over (0,1)). p outside (0,1) returns +-infinity.
double norm_quantile(double p);

}  // namespace dfpower
