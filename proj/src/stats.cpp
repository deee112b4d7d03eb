#include "pace/stats.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "pace/error.hpp"

namespace pace::stats {

namespace {

constexpr std::size_t kMonteCarloChunks = 16;

struct Ranked {
  std::vector<double> ranks;  // midranks, pooled order a then b
  double tie_term = 0.0;      // sum over tie groups of t^3 - t
  bool has_ties = false;
};

Ranked midranks(std::span<const double> a, std::span<const double> b) {
  const std::size_t n = a.size() + b.size();
  std::vector<double> pooled;
  pooled.reserve(n);
  pooled.insert(pooled.end(), a.begin(), a.end());
  pooled.insert(pooled.end(), b.begin(), b.end());
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return pooled[i] < pooled[j]; });

  Ranked r;
  r.ranks.resize(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && pooled[order[j + 1]] == pooled[order[i]]) ++j;
    const double mid = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) r.ranks[order[k]] = mid;
    const auto t = static_cast<double>(j - i + 1);
    if (j > i) {
      r.has_ties = true;
      r.tie_term += t * t * t - t;
    }
    i = j + 1;
  }
  return r;
}

void require_finite(std::span<const double> x, const char* name) {
  for (double v : x) {
    if (!std::isfinite(v)) {
      throw Error(ErrorCode::invalid_argument, std::string(name) + " contains a non-finite value");
    }
  }
}

double exact_p(double u_a, std::size_t n1, std::size_t n2, Alternative alt) {
  const auto counts = u_null_counts(n1, n2);
  const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
  const auto u = static_cast<std::size_t>(std::llround(u_a));
  double le = 0.0;
  double ge = 0.0;
  for (std::size_t v = 0; v < counts.size(); ++v) {
    if (v <= u) le += counts[v];
    if (v >= u) ge += counts[v];
  }
  le /= total;
  ge /= total;
  switch (alt) {
    case Alternative::a_less: return le;
    case Alternative::a_greater: return ge;
    case Alternative::two_sided: break;
  }
  return std::min(1.0, 2.0 * std::min(le, ge));
}

double approx_p(double u_a, std::size_t n1, std::size_t n2, double tie_term, Alternative alt) {
  const auto m = static_cast<double>(n1);
  const auto n = static_cast<double>(n2);
  const double total = m + n;
  const double mu = m * n / 2.0;
  double var = m * n / 12.0 * ((total + 1.0) - tie_term / (total * (total - 1.0)));
  if (!(var > 0.0)) return 1.0;
  const double sd = std::sqrt(var);
  switch (alt) {
    case Alternative::a_less: return normal_cdf((u_a - mu + 0.5) / sd);
    case Alternative::a_greater: return 1.0 - normal_cdf((u_a - mu - 0.5) / sd);
    case Alternative::two_sided: break;
  }
  const double z = std::max(0.0, (std::abs(u_a - mu) - 0.5) / sd);
  return std::min(1.0, 2.0 * (1.0 - normal_cdf(z)));
}

}  // namespace

std::string_view to_string(Method m) {
  switch (m) {
    case Method::exact: return "exact";
    case Method::normal_approx: return "normal_approx";
    case Method::monte_carlo: return "monte_carlo";
  }
  return "exact";
}

std::string_view to_string(Alternative a) {
  switch (a) {
    case Alternative::two_sided: return "two_sided";
    case Alternative::a_less: return "a_less";
    case Alternative::a_greater: return "a_greater";
  }
  return "two_sided";
}

Alternative alternative_from_string(std::string_view s) {
  if (s == "two_sided") return Alternative::two_sided;
  if (s == "a_less") return Alternative::a_less;
  if (s == "a_greater") return Alternative::a_greater;
  throw Error(ErrorCode::invalid_argument, "unknown alternative '" + std::string(s) + "'");
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double mean(std::span<const double> x) {
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double variance(std::span<const double> x) {
  const double m = mean(x);
  double ss = 0.0;
  for (double v : x) ss += (v - m) * (v - m);
  return ss / static_cast<double>(x.size() - 1);
}

std::vector<double> u_null_counts(std::size_t n1, std::size_t n2) {
  // table[m][n][u]: arrangements of m a-ranks and n b-ranks with U_a = u.
  // The largest rank is either an a (beating all n b's) or a b.
  std::vector<std::vector<std::vector<double>>> table(
      n1 + 1, std::vector<std::vector<double>>(n2 + 1));
  for (std::size_t m = 0; m <= n1; ++m) {
    for (std::size_t n = 0; n <= n2; ++n) {
      auto& cell = table[m][n];
      cell.assign(m * n + 1, 0.0);
      if (m == 0 || n == 0) {
        cell[0] = 1.0;
        continue;
      }
      const auto& with_a = table[m - 1][n];
      const auto& with_b = table[m][n - 1];
      for (std::size_t u = 0; u < with_a.size(); ++u) cell[u + n] += with_a[u];
      for (std::size_t u = 0; u < with_b.size(); ++u) cell[u] += with_b[u];
    }
  }
  return table[n1][n2];
}

double u_statistic_a(std::span<const double> a, std::span<const double> b) {
  const auto r = midranks(a, b);
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += r.ranks[i];
  const auto n1 = static_cast<double>(a.size());
  return sum - n1 * (n1 + 1.0) / 2.0;
}

StatResult mann_whitney_u(std::span<const double> a, std::span<const double> b,
                          Alternative alternative, MwRoute route) {
  if (a.empty() || b.empty()) {
    throw Error(ErrorCode::empty_sample, "Mann-Whitney U needs at least one value per sample");
  }
  require_finite(a, "a");
  require_finite(b, "b");

  const auto ranked = midranks(a, b);
  double rank_sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) rank_sum += ranked.ranks[i];
  const auto n1 = static_cast<double>(a.size());
  const auto n2 = static_cast<double>(b.size());
  const double u_a = rank_sum - n1 * (n1 + 1.0) / 2.0;
  const double u_b = n1 * n2 - u_a;

  StatResult r;
  r.statistic = std::min(u_a, u_b);
  r.n1 = a.size();
  r.n2 = b.size();

  bool use_exact = false;
  switch (route) {
    case MwRoute::automatic:
      use_exact = !ranked.has_ties && a.size() + b.size() <= kExactLimit;
      break;
    case MwRoute::exact:
      if (ranked.has_ties) {
        throw Error(ErrorCode::invalid_argument, "exact Mann-Whitney requires tie-free samples");
      }
      use_exact = true;
      break;
    case MwRoute::normal_approx:
      break;
  }
  if (use_exact) {
    r.method = Method::exact;
    r.p_value = exact_p(u_a, a.size(), b.size(), alternative);
  } else {
    r.method = Method::normal_approx;
    r.p_value = approx_p(u_a, a.size(), b.size(), ranked.tie_term, alternative);
  }
  r.p_value = std::clamp(r.p_value, 0.0, 1.0);
  return r;
}

double hedges_g(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) {
    throw Error(ErrorCode::empty_sample, "Hedges' g needs at least two values per sample");
  }
  require_finite(a, "a");
  require_finite(b, "b");
  const auto n1 = static_cast<double>(a.size());
  const auto n2 = static_cast<double>(b.size());
  const double diff = mean(a) - mean(b);
  const double pooled =
      std::sqrt(((n1 - 1.0) * variance(a) + (n2 - 1.0) * variance(b)) / (n1 + n2 - 2.0));
  if (pooled == 0.0) {
    if (diff == 0.0) return 0.0;
    throw Error(ErrorCode::degenerate_effect, "zero pooled SD with unequal means");
  }
  const double correction = 1.0 - 3.0 / (4.0 * (n1 + n2) - 9.0);
  return correction * diff / pooled;
}

double ks_statistic_normal(std::span<const double> x) {
  if (x.size() < 2) throw Error(ErrorCode::empty_sample, "KS needs at least two values");
  const double m = mean(x);
  const double var = variance(x);
  if (!(var > 0.0)) throw Error(ErrorCode::zero_variance, "sample variance is zero");
  const double sd = std::sqrt(var);
  std::vector<double> sorted(x.begin(), x.end());
  std::sort(sorted.begin(), sorted.end());
  const auto n = static_cast<double>(sorted.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double cdf = normal_cdf((sorted[i] - m) / sd);
    const double above = (static_cast<double>(i) + 1.0) / n - cdf;
    const double below = cdf - static_cast<double>(i) / n;
    d = std::max({d, above, below});
  }
  return d;
}

StatResult ks_normality(std::span<const double> x, const KsOptions& options) {
  if (x.size() < 4) throw Error(ErrorCode::empty_sample, "KS normality needs at least 4 values");
  require_finite(x, "x");
  if (options.replicates == 0) {
    throw Error(ErrorCode::invalid_argument, "replicates must be positive");
  }
  const double d = ks_statistic_normal(x);
  const double m = mean(x);
  const double sd = std::sqrt(variance(x));
  const std::size_t n = x.size();

  // Fixed chunking: chunk c always owns the same replicates and its own
  // seed, so the result does not depend on how many threads run.
  const std::size_t reps = options.replicates;
  std::vector<std::future<std::size_t>> chunks;
  for (std::size_t c = 0; c < kMonteCarloChunks; ++c) {
    const std::size_t begin = reps * c / kMonteCarloChunks;
    const std::size_t end = reps * (c + 1) / kMonteCarloChunks;
    chunks.push_back(std::async(std::launch::async, [=] {
      std::seed_seq seq{static_cast<std::uint32_t>(options.seed & 0xffffffffu),
                        static_cast<std::uint32_t>(options.seed >> 32),
                        static_cast<std::uint32_t>(c)};
      std::mt19937_64 rng(seq);
      std::normal_distribution<double> draw(m, sd);
      std::vector<double> sample(n);
      std::size_t exceed = 0;
      for (std::size_t r = begin; r < end; ++r) {
        for (auto& v : sample) v = draw(rng);
        if (ks_statistic_normal(sample) >= d) ++exceed;
      }
      return exceed;
    }));
  }
  std::size_t exceed = 0;
  for (auto& f : chunks) exceed += f.get();

  StatResult r;
  r.statistic = d;
  r.p_value = (static_cast<double>(exceed) + 1.0) / (static_cast<double>(reps) + 1.0);
  r.method = Method::monte_carlo;
  r.n1 = n;
  r.n2 = 0;
  return r;
}

void to_json(nlohmann::json& j, const StatResult& r) {
  j = nlohmann::json{{"statistic", r.statistic},
                     {"p_value", r.p_value},
                     {"method", std::string(to_string(r.method))},
                     {"n1", r.n1},
                     {"n2", r.n2}};
}

}  // namespace pace::stats
