#pragma once

#include <cstddef>
#include <filesystem>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "caasr/ingest.hpp"
#include "caasr/predictor.hpp"

namespace caasr {

// Rank recorded when the target item was excluded from the candidate set and
// can therefore never be retrieved. Compares above every real rank.
inline constexpr std::size_t kRankUnreachable = std::numeric_limits<std::size_t>::max();

struct RankEvent {
  std::size_t sequence_id;
  std::size_t step;         // index of the last observed prefix item
  std::size_t target_item;  // the successor being predicted
  std::size_t rank;         // 1-based rank of the target, or kRankUnreachable
};

struct EvalReport {
  std::map<std::size_t, double> recall;  // cutoff -> fraction of hits
  std::map<std::size_t, double> mrr;     // cutoff -> mean reciprocal rank
  std::size_t n_events = 0;
  std::vector<RankEvent> per_event;
};

// Feeds each test sequence left to right through the predictor, resetting its
// state between sequences. After every prefix that has a successor, ranks all
// items (ties broken toward the lower index) and records the successor's
// 1-based rank. With exclude_seen, items already observed in the prefix are
// dropped from the candidate set; a target that was itself already seen is
// recorded as kRankUnreachable.
EvalReport evaluate(Predictor& model, const SequenceDataset& test,
                    const std::vector<std::size_t>& ks, bool exclude_seen = false);

// Fraction of events whose rank is at most k.
double recall_at_k(const std::vector<RankEvent>& events, std::size_t k);

// Mean over events of 1/rank when rank <= k, else 0.
double mrr_at_k(const std::vector<RankEvent>& events, std::size_t k);

// 1/rank per event (0 for unreachable targets): the per-event quantity paired
// across two models for significance testing.
std::vector<double> reciprocal_ranks(const std::vector<RankEvent>& events);

// Regularized incomplete beta function I_x(a, b), evaluated by a continued
// fraction. Both shape parameters must be positive; x is clamped to [0, 1]
// endpoints exactly.
double regularized_incomplete_beta(double a, double b, double x);

// Two-sided paired t-test over equal-length per-event score lists. Degenerate
// zero-variance differences yield p = 1 when the means agree and p = 0
// otherwise.
double paired_ttest(const std::vector<double>& scores_a, const std::vector<double>& scores_b);

// "‡" when p < 0.01, "†" when p < 0.05, "−" otherwise.
std::string significance_marker(double p_value);

// Writes "metric<TAB>k<TAB>value" lines for every cutoff, followed by a
// per-event dump of "seq<TAB>step<TAB>target<TAB>rank" rows so significance
// can be re-analyzed externally.
void write_report(const std::filesystem::path& path, const EvalReport& report);

}  // namespace caasr
