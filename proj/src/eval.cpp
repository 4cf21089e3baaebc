#include "caasr/eval.hpp"

#include <cmath>
#include <cstdio>
#include <string>

#include "caasr/errors.hpp"
#include "caasr/fsio.hpp"

namespace caasr {

namespace {

std::size_t rank_of_target(const std::vector<double>& scores, std::size_t target,
                           const std::vector<bool>* excluded) {
  if (excluded != nullptr && (*excluded)[target]) return kRankUnreachable;
  double target_score = scores[target];
  std::size_t rank = 1;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (i == target) continue;
    if (excluded != nullptr && (*excluded)[i]) continue;
    if (scores[i] > target_score || (scores[i] == target_score && i < target)) ++rank;
  }
  return rank;
}

// Evaluates the continued fraction for the incomplete beta function by the
// modified Lentz method.
double beta_continued_fraction(double a, double b, double x) {
  constexpr int kMaxIterations = 300;
  constexpr double kEps = 1e-14;
  constexpr double kFloor = 1e-300;

  double qab = a + b;
  double qap = a + 1.0;
  double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kFloor) d = kFloor;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIterations; ++m) {
    double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kFloor) d = kFloor;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kFloor) c = kFloor;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kFloor) d = kFloor;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kFloor) c = kFloor;
    d = 1.0 / d;
    double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0) < kEps) return h;
  }
  throw NumericError("incomplete beta continued fraction did not converge");
}

}  // namespace

EvalReport evaluate(Predictor& model, const SequenceDataset& test,
                    const std::vector<std::size_t>& ks, bool exclude_seen) {
  EvalReport report;
  std::vector<bool> seen;
  for (const Sequence& seq : test.sequences) {
    if (seq.items.size() < 2) continue;
    model.reset();
    if (exclude_seen) seen.assign(model.n_items(), false);
    for (std::size_t t = 0; t + 1 < seq.items.size(); ++t) {
      model.observe(seq.items[t]);
      if (exclude_seen) seen[seq.items[t]] = true;
      const std::vector<double>& scores = model.scores();
      std::size_t target = seq.items[t + 1];
      std::size_t rank = rank_of_target(scores, target, exclude_seen ? &seen : nullptr);
      report.per_event.push_back({seq.user, t, target, rank});
    }
  }
  report.n_events = report.per_event.size();
  if (report.n_events == 0) {
    throw DataError("no evaluation events: every test sequence is shorter than 2");
  }
  for (std::size_t k : ks) {
    report.recall[k] = recall_at_k(report.per_event, k);
    report.mrr[k] = mrr_at_k(report.per_event, k);
  }
  return report;
}

double recall_at_k(const std::vector<RankEvent>& events, std::size_t k) {
  if (events.empty()) throw DataError("metrics need at least one ranked event");
  if (k == 0) throw DataError("metric cutoff must be at least 1");
  std::size_t hits = 0;
  for (const RankEvent& event : events) {
    if (event.rank <= k) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(events.size());
}

double mrr_at_k(const std::vector<RankEvent>& events, std::size_t k) {
  if (events.empty()) throw DataError("metrics need at least one ranked event");
  if (k == 0) throw DataError("metric cutoff must be at least 1");
  // Accumulate counts per distinct rank and sum in rank order, so the result
  // is independent of how the events happen to be listed.
  std::map<std::size_t, std::size_t> rank_counts;
  for (const RankEvent& event : events) {
    if (event.rank <= k) ++rank_counts[event.rank];
  }
  double total = 0.0;
  for (const auto& [rank, count] : rank_counts) {
    total += static_cast<double>(count) / static_cast<double>(rank);
  }
  return total / static_cast<double>(events.size());
}

std::vector<double> reciprocal_ranks(const std::vector<RankEvent>& events) {
  std::vector<double> out;
  out.reserve(events.size());
  for (const RankEvent& event : events) {
    out.push_back(event.rank == kRankUnreachable ? 0.0
                                                 : 1.0 / static_cast<double>(event.rank));
  }
  return out;
}

double regularized_incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) {
    throw NumericError("incomplete beta shape parameters must be positive");
  }
  if (std::isnan(x)) throw NumericError("incomplete beta argument is NaN");
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                     a * std::log(x) + b * std::log1p(-x);
  double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return front * beta_continued_fraction(a, b, x) / a;
  }
  return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double paired_ttest(const std::vector<double>& scores_a, const std::vector<double>& scores_b) {
  if (scores_a.size() != scores_b.size()) {
    throw DataError("paired test needs equal-length score lists");
  }
  std::size_t n = scores_a.size();
  if (n < 2) throw DataError("paired test needs at least two paired events");

  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) mean += scores_a[i] - scores_b[i];
  mean /= static_cast<double>(n);

  double sum_sq = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double centered = scores_a[i] - scores_b[i] - mean;
    sum_sq += centered * centered;
  }
  if (sum_sq == 0.0) return mean == 0.0 ? 1.0 : 0.0;

  double df = static_cast<double>(n - 1);
  double variance = sum_sq / df;
  double t = mean / std::sqrt(variance / static_cast<double>(n));
  // Two-sided p-value: P(|T_df| >= |t|) = I_{df/(df+t^2)}(df/2, 1/2).
  return regularized_incomplete_beta(df / 2.0, 0.5, df / (df + t * t));
}

std::string significance_marker(double p_value) {
  if (p_value < 0.01) return "‡";  // ‡
  if (p_value < 0.05) return "†";  // †
  return "−";                      // −
}

void write_report(const std::filesystem::path& path, const EvalReport& report) {
  std::string out;
  char line[128];
  for (const auto& [k, value] : report.recall) {
    std::snprintf(line, sizeof(line), "recall\t%zu\t%.17g\n", k, value);
    out += line;
  }
  for (const auto& [k, value] : report.mrr) {
    std::snprintf(line, sizeof(line), "mrr\t%zu\t%.17g\n", k, value);
    out += line;
  }
  for (const RankEvent& event : report.per_event) {
    std::snprintf(line, sizeof(line), "%zu\t%zu\t%zu\t%zu\n", event.sequence_id, event.step,
                  event.target_item, event.rank);
    out += line;
  }
  write_file_atomic(path, out);
}

}  // namespace caasr
