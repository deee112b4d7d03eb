#pragma once

// Questionnaire scoring (SUS, NASA-TLX), quiz scoring and score-balanced
// group allocation.

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace pace::evalkit {

struct SusResponse {
  std::array<int, 10> items{};  // item 1 first; each in [1, 5]
};

// 0..100. Odd items contribute (item - 1), even items (5 - item); sum x 2.5.
double score_sus(const SusResponse& r);

// Informational adjective band: "Excellent" >= 85.5, "Good" >= 71.1,
// otherwise "Below Good".
std::string_view sus_band(double score);

enum class TlxScale { mental, physical, temporal, performance, effort, frustration };
inline constexpr std::array<std::string_view, 6> kTlxScaleNames{
    "mental", "physical", "temporal", "performance", "effort", "frustration"};

struct TlxResponse {
  std::array<double, 6> subscales{};  // each in [0, 100], ordered as TlxScale
  std::optional<std::array<int, 6>> weights;  // pairwise-comparison tallies, sum 15
};

// Raw TLX (mean of subscales) without weights, sum(w_i * s_i) / 15 with them.
double score_tlx(const TlxResponse& r);

struct GroupAssignment {
  std::vector<std::vector<std::size_t>> groups;  // participant indices
  std::vector<double> group_means;

  double mean_spread() const;
};

// Serpentine deal: sort descending, hand out 1..k, k..1, 1..k, ...
GroupAssignment allocate_groups(std::span<const double> scores, std::size_t k);

// Plain round-robin deal over the same descending order (baseline).
GroupAssignment allocate_round_robin(std::span<const double> scores, std::size_t k);

double score_quiz(std::span<const std::string> answers, std::span<const std::string> key);

}  // namespace pace::evalkit
