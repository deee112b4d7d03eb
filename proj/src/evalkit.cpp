#include "pace/evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pace/error.hpp"

namespace pace::evalkit {

namespace {

std::vector<std::size_t> descending_order(std::span<const double> scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return scores[i] > scores[j]; });
  return order;
}

void check_allocation_args(std::span<const double> scores, std::size_t k) {
  if (k == 0) throw Error(ErrorCode::invalid_argument, "k must be >= 1");
  if (k > scores.size()) {
    throw Error(ErrorCode::invalid_argument, "k = " + std::to_string(k) + " exceeds " +
                                                 std::to_string(scores.size()) + " participants");
  }
  for (double s : scores) {
    if (!std::isfinite(s)) throw Error(ErrorCode::invalid_argument, "scores must be finite");
  }
}

GroupAssignment finish(std::span<const double> scores,
                       std::vector<std::vector<std::size_t>> groups) {
  GroupAssignment out;
  for (const auto& g : groups) {
    double sum = 0.0;
    for (auto i : g) sum += scores[i];
    out.group_means.push_back(sum / static_cast<double>(g.size()));
  }
  out.groups = std::move(groups);
  return out;
}

}  // namespace

double score_sus(const SusResponse& r) {
  int total = 0;
  for (std::size_t i = 0; i < r.items.size(); ++i) {
    const int v = r.items[i];
    if (v < 1 || v > 5) {
      throw Error(ErrorCode::out_of_bounds,
                  "SUS item " + std::to_string(i + 1) + " = " + std::to_string(v) + " not in [1,5]");
    }
    // items[0] is item 1 (odd)
    total += (i % 2 == 0) ? v - 1 : 5 - v;
  }
  return total * 2.5;
}

std::string_view sus_band(double score) {
  if (score >= 85.5) return "Excellent";
  if (score >= 71.1) return "Good";
  return "Below Good";
}

double score_tlx(const TlxResponse& r) {
  for (std::size_t i = 0; i < r.subscales.size(); ++i) {
    const double s = r.subscales[i];
    if (!(s >= 0.0 && s <= 100.0)) {
      throw Error(ErrorCode::out_of_bounds,
                  "TLX " + std::string(kTlxScaleNames[i]) + " must lie in [0,100]");
    }
  }
  if (!r.weights) {
    return std::accumulate(r.subscales.begin(), r.subscales.end(), 0.0) / 6.0;
  }
  int weight_sum = 0;
  double weighted = 0.0;
  for (std::size_t i = 0; i < 6; ++i) {
    const int w = (*r.weights)[i];
    if (w < 0 || w > 5) {
      throw Error(ErrorCode::out_of_bounds, "TLX weights are pairwise tallies in [0,5]");
    }
    weight_sum += w;
    weighted += w * r.subscales[i];
  }
  if (weight_sum != 15) {
    throw Error(ErrorCode::invalid_argument,
                "TLX weights sum to " + std::to_string(weight_sum) + ", expected 15");
  }
  return weighted / 15.0;
}

double GroupAssignment::mean_spread() const {
  if (group_means.empty()) return 0.0;
  auto [lo, hi] = std::minmax_element(group_means.begin(), group_means.end());
  return *hi - *lo;
}

GroupAssignment allocate_groups(std::span<const double> scores, std::size_t k) {
  check_allocation_args(scores, k);
  const auto order = descending_order(scores);
  std::vector<std::vector<std::size_t>> groups(k);
  for (std::size_t r = 0; r < order.size(); ++r) {
    const std::size_t pass = r / k;
    const std::size_t slot = r % k;
    groups[pass % 2 == 0 ? slot : k - 1 - slot].push_back(order[r]);
  }
  return finish(scores, std::move(groups));
}

GroupAssignment allocate_round_robin(std::span<const double> scores, std::size_t k) {
  check_allocation_args(scores, k);
  const auto order = descending_order(scores);
  std::vector<std::vector<std::size_t>> groups(k);
  for (std::size_t r = 0; r < order.size(); ++r) groups[r % k].push_back(order[r]);
  return finish(scores, std::move(groups));
}

double score_quiz(std::span<const std::string> answers, std::span<const std::string> key) {
  if (answers.size() != key.size()) {
    throw Error(ErrorCode::length_mismatch, "answers and key differ in length");
  }
  if (key.empty()) throw Error(ErrorCode::invalid_argument, "empty quiz");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < key.size(); ++i) hits += answers[i] == key[i] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(key.size());
}

}  // namespace pace::evalkit
