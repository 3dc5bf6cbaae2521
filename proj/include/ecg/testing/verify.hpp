#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace ecg::testing {

struct CheckResult {
  std::string name;
  bool passed;
  std::string detail;
  double seconds;
};

/// Self-contained verification suite: gradient checks, conv and AUC oracles,
/// format round-trips. Needs no external data.
std::vector<CheckResult> run_verify_suite(std::uint64_t seed = 1);

/// Plain O(B*Cout*Cin*L*K) convolution used as an oracle.
std::vector<double> naive_conv1d(const std::vector<double>& x, std::size_t batch, std::size_t cin, std::size_t len,
                                 const std::vector<double>& w, const std::vector<double>& b, std::size_t cout,
                                 std::size_t kernel, std::size_t stride);

/// Pairwise Mann-Whitney count, ties one half.
double brute_force_auc(const std::vector<double>& scores, const std::vector<std::uint8_t>& labels);

}  // namespace ecg::testing
