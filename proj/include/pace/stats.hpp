#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace pace::stats {

enum class Method { exact, normal_approx, monte_carlo };
enum class Alternative { two_sided, a_less, a_greater };

struct StatResult {
  double statistic = 0.0;
  double p_value = 1.0;
  Method method = Method::exact;
  std::size_t n1 = 0;
  std::size_t n2 = 0;
};

std::string_view to_string(Method m);
std::string_view to_string(Alternative a);
Alternative alternative_from_string(std::string_view s);

// Which p-value route mann_whitney_u takes. `automatic` uses the exact
// distribution for tie-free samples with n1 + n2 <= kExactLimit.
enum class MwRoute { automatic, exact, normal_approx };
inline constexpr std::size_t kExactLimit = 16;

// statistic = min(U_a, U_b), ties counted half. The one-sided alternatives
// are phrased in terms of a: a_less means a tends to be smaller than b.
StatResult mann_whitney_u(std::span<const double> a, std::span<const double> b,
                          Alternative alternative = Alternative::two_sided,
                          MwRoute route = MwRoute::automatic);

// U_a = rank sum of a - n1(n1+1)/2 (midranks for ties).
double u_statistic_a(std::span<const double> a, std::span<const double> b);

// Number of ways to pick n1 of n1+n2 ranks so that U_a equals each value
// 0..n1*n2. Built by the standard recurrence, not by enumeration.
std::vector<double> u_null_counts(std::size_t n1, std::size_t n2);

double hedges_g(std::span<const double> a, std::span<const double> b);

struct KsOptions {
  std::size_t replicates = 10000;
  std::uint64_t seed = 20220427;
};

// Lilliefors-style normality check: D against N(mean, sd) with both estimated,
// p by Monte Carlo under the fitted normal.
StatResult ks_normality(std::span<const double> x, const KsOptions& options = {});

// sup |ECDF - Phi((x - mean) / sd)| with mean and sample sd re-estimated.
double ks_statistic_normal(std::span<const double> x);

double normal_cdf(double z);

double mean(std::span<const double> x);
// Sample variance (n - 1 denominator).
double variance(std::span<const double> x);

void to_json(nlohmann::json& j, const StatResult& r);

}  // namespace pace::stats
