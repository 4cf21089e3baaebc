#include "caasr/predictor.hpp"

#include <algorithm>

#include "caasr/errors.hpp"

namespace caasr {

std::vector<std::size_t> predict_topk(const std::vector<double>& scores, std::size_t k,
                                      const std::vector<char>* exclude) {
  if (exclude && exclude->size() != scores.size()) {
    throw DataError("exclusion mask size mismatch");
  }
  std::vector<std::size_t> candidates;
  candidates.reserve(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!exclude || !(*exclude)[i]) candidates.push_back(i);
  }
  std::sort(candidates.begin(), candidates.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;
  });
  if (candidates.size() > k) candidates.resize(k);
  return candidates;
}

}  // namespace caasr
