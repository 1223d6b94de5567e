#pragma once

#include <cstdint>
#include <numeric>
#include <random>
#include <sstream>
#include <vector>

#include "multiridge/errors.hpp"
#include "multiridge/types.hpp"

namespace multiridge {

/// A deterministic split of row indices into validation folds with their
/// training complements.
///
/// K-fold plans have pairwise-disjoint equal-size folds of N_V = floor(N/K)
/// rows; the shuffled remainder is dropped so all folds match the equal-size
/// assumption. A holdout plan is the single-split special case used by the
/// gradient benchmark (train fraction vs validation fraction).
class FoldPlan {
 public:
  static FoldPlan kfold(Index n, int k, std::uint64_t seed) {
    if (k < 2) throw InvalidInputError("fold count must be at least 2");
    if (static_cast<Index>(k) > n) {
      std::ostringstream msg;
      msg << "fold count " << k << " exceeds sample count " << n;
      throw InvalidInputError(msg.str());
    }
    FoldPlan plan;
    plan.n_ = n;
    plan.seed_ = seed;
    std::vector<Index> order = shuffled_indices(n, seed);
    const Index fold_size = n / k;
    plan.validation_.resize(k);
    for (int f = 0; f < k; ++f) {
      plan.validation_[f].assign(order.begin() + f * fold_size,
                                 order.begin() + (f + 1) * fold_size);
    }
    plan.dropped_.assign(order.begin() + static_cast<Index>(k) * fold_size, order.end());
    plan.train_.resize(k);
    for (int f = 0; f < k; ++f) {
      plan.train_[f].reserve(static_cast<std::size_t>(fold_size) * (k - 1));
      for (int other = 0; other < k; ++other) {
        if (other == f) continue;
        plan.train_[f].insert(plan.train_[f].end(), plan.validation_[other].begin(),
                              plan.validation_[other].end());
      }
    }
    return plan;
  }

  /// Single train/validation split; validation gets round(n * val_fraction)
  /// shuffled rows, the rest train. Nothing is dropped.
  static FoldPlan holdout(Index n, double val_fraction, std::uint64_t seed) {
    if (!(val_fraction > 0.0 && val_fraction < 1.0)) {
      throw InvalidInputError("holdout validation fraction must lie in (0, 1)");
    }
    const Index n_val = static_cast<Index>(static_cast<double>(n) * val_fraction + 0.5);
    if (n_val < 1 || n - n_val < 1) {
      throw InvalidInputError("holdout split leaves an empty train or validation set");
    }
    FoldPlan plan;
    plan.n_ = n;
    plan.seed_ = seed;
    std::vector<Index> order = shuffled_indices(n, seed);
    plan.train_.resize(1);
    plan.validation_.resize(1);
    plan.train_[0].assign(order.begin(), order.end() - n_val);
    plan.validation_[0].assign(order.end() - n_val, order.end());
    return plan;
  }

  int fold_count() const { return static_cast<int>(validation_.size()); }
  Index n_samples() const { return n_; }
  std::uint64_t seed() const { return seed_; }

  const std::vector<Index>& validation_indices(int fold) const { return validation_.at(fold); }
  const std::vector<Index>& train_indices(int fold) const { return train_.at(fold); }
  const std::vector<Index>& dropped() const { return dropped_; }

  /// Same splits visited in a different order; E and its gradient must not
  /// depend on this beyond floating-point reassociation.
  FoldPlan reordered(const std::vector<int>& order) const {
    if (order.size() != validation_.size()) {
      throw InvalidInputError("fold order permutation has wrong length");
    }
    FoldPlan plan;
    plan.n_ = n_;
    plan.seed_ = seed_;
    plan.dropped_ = dropped_;
    for (int f : order) {
      plan.validation_.push_back(validation_.at(f));
      plan.train_.push_back(train_.at(f));
    }
    return plan;
  }

 private:
  // Fisher-Yates with explicit draws so a plan is reconstructible from
  // (n, k, seed) independent of the standard library's shuffle.
  static std::vector<Index> shuffled_indices(Index n, std::uint64_t seed) {
    if (n < 1) throw InvalidInputError("sample count must be positive");
    std::vector<Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index{0});
    std::mt19937_64 rng(seed);
    for (Index i = n - 1; i > 0; --i) {
      const Index j = static_cast<Index>(rng() % static_cast<std::uint64_t>(i + 1));
      std::swap(order[i], order[j]);
    }
    return order;
  }

  Index n_ = 0;
  std::uint64_t seed_ = 0;
  std::vector<std::vector<Index>> validation_;
  std::vector<std::vector<Index>> train_;
  std::vector<Index> dropped_;
};

inline FoldPlan partition_folds(Index n, int k, std::uint64_t seed) {
  return FoldPlan::kfold(n, k, seed);
}

}  // namespace multiridge
