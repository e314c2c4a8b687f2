// Writes a synthetic two-column dataset shaped like the seismic gdenergy /
// gdpuls features: integer, right-skewed, positively correlated, floored
// near -100.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numbers>
#include <random>
#include <string>

#include "CLI11.hpp"

namespace {

double uniform01(std::mt19937_64& rng) { return static_cast<double>((rng() >> 11) + 1) * 0x1p-53; }

double standard_normal(std::mt19937_64& rng) {
  const double u = uniform01(rng), v = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u)) * std::cos(2.0 * std::numbers::pi * v);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Synthetic seismic-like feature generator"};
  std::size_t rows = 669;
  std::uint64_t seed = 11;
  double rho = 0.8, log_mean = 4.5047, log_sd = 0.65;
  std::string out;
  app.add_option("--rows", rows);
  app.add_option("--seed", seed);
  app.add_option("--rho", rho, "Correlation of the latent normals");
  app.add_option("--log-mean", log_mean);
  app.add_option("--log-sd", log_sd);
  app.add_option("--out", out)->required();
  CLI11_PARSE(app, argc, argv);

  std::ofstream f(out, std::ios::binary | std::ios::trunc);
  if (!f) {
    std::cerr << "cannot write " << out << "\n";
    return 1;
  }
  std::mt19937_64 rng(seed);
  f << "gdenergy,gdpuls\n";
  for (std::size_t i = 0; i < rows; ++i) {
    const double z1 = standard_normal(rng);
    const double z2 = rho * z1 + std::sqrt(1.0 - rho * rho) * standard_normal(rng);
    const long e = std::lround(std::exp(log_mean + log_sd * z1)) - 100;
    const long p = std::lround(std::exp(log_mean - 0.1 + 0.9 * log_sd * z2)) - 100;
    f << e << "," << p << "\n";
  }
  return 0;
}
