#pragma once

#include <cstddef>
#include <vector>

namespace caasr {

// Stateful next-item scorer fed one observed item at a time. scores() returns
// one value per catalog item for the step after everything observed so far.
struct Predictor {
  virtual ~Predictor() = default;
  virtual void reset() = 0;
  virtual void observe(std::size_t item) = 0;
  virtual const std::vector<double>& scores() = 0;
  virtual std::size_t n_items() const = 0;
};

// Indices of the k highest-scoring items; ties broken by ascending index.
// Items flagged in exclude (when provided) are skipped entirely.
std::vector<std::size_t> predict_topk(const std::vector<double>& scores, std::size_t k,
                                      const std::vector<char>* exclude = nullptr);

}  // namespace caasr
