#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "multiridge/folds.hpp"

namespace mr = multiridge;

TEST(FoldPlan, EvenSplitDropsNothing) {
  auto plan = mr::partition_folds(10, 5, 42);
  EXPECT_EQ(plan.fold_count(), 5);
  EXPECT_TRUE(plan.dropped().empty());
  for (int k = 0; k < 5; ++k) {
    EXPECT_EQ(plan.validation_indices(k).size(), 2u);
    EXPECT_EQ(plan.train_indices(k).size(), 8u);
  }
}

TEST(FoldPlan, RemainderIsDropped) {
  auto plan = mr::partition_folds(11, 5, 42);
  EXPECT_EQ(plan.dropped().size(), 1u);
  for (int k = 0; k < 5; ++k) EXPECT_EQ(plan.validation_indices(k).size(), 2u);
}

TEST(FoldPlan, PartitionInvariants) {
  auto plan = mr::partition_folds(23, 4, 7);
  std::set<mr::Index> seen;
  for (int k = 0; k < plan.fold_count(); ++k) {
    for (mr::Index i : plan.validation_indices(k)) {
      EXPECT_TRUE(seen.insert(i).second) << "index " << i << " appears in two folds";
    }
  }
  for (mr::Index i : plan.dropped()) EXPECT_TRUE(seen.insert(i).second);
  EXPECT_EQ(seen.size(), 23u);
  EXPECT_EQ(*seen.begin(), 0);
  EXPECT_EQ(*seen.rbegin(), 22);

  // Train sets are the complements of their folds (minus dropped rows).
  for (int k = 0; k < plan.fold_count(); ++k) {
    std::set<mr::Index> train(plan.train_indices(k).begin(), plan.train_indices(k).end());
    EXPECT_EQ(train.size(), plan.train_indices(k).size());
    for (mr::Index i : plan.validation_indices(k)) EXPECT_FALSE(train.count(i));
    for (mr::Index i : plan.dropped()) EXPECT_FALSE(train.count(i));
    EXPECT_EQ(train.size() + plan.validation_indices(k).size() + plan.dropped().size(), 23u);
  }
}

TEST(FoldPlan, DeterministicReconstruction) {
  auto a = mr::partition_folds(100, 5, 2024);
  auto b = mr::partition_folds(100, 5, 2024);
  for (int k = 0; k < 5; ++k) {
    EXPECT_EQ(a.validation_indices(k), b.validation_indices(k));
    EXPECT_EQ(a.train_indices(k), b.train_indices(k));
  }
  auto c = mr::partition_folds(100, 5, 2025);
  bool any_diff = false;
  for (int k = 0; k < 5; ++k) any_diff |= a.validation_indices(k) != c.validation_indices(k);
  EXPECT_TRUE(any_diff);
}

TEST(FoldPlan, InvalidArguments) {
  EXPECT_THROW(mr::partition_folds(10, 1, 0), mr::InvalidInputError);
  EXPECT_THROW(mr::partition_folds(4, 5, 0), mr::InvalidInputError);
}

TEST(FoldPlan, HoldoutSplit) {
  auto plan = mr::FoldPlan::holdout(1000, 0.2, 9);
  EXPECT_EQ(plan.fold_count(), 1);
  EXPECT_EQ(plan.validation_indices(0).size(), 200u);
  EXPECT_EQ(plan.train_indices(0).size(), 800u);
  std::set<mr::Index> all(plan.train_indices(0).begin(), plan.train_indices(0).end());
  all.insert(plan.validation_indices(0).begin(), plan.validation_indices(0).end());
  EXPECT_EQ(all.size(), 1000u);
  EXPECT_THROW(mr::FoldPlan::holdout(10, 0.0, 1), mr::InvalidInputError);
  EXPECT_THROW(mr::FoldPlan::holdout(10, 1.0, 1), mr::InvalidInputError);
}

TEST(FoldPlan, Reordered) {
  auto plan = mr::partition_folds(20, 4, 3);
  auto perm = plan.reordered({2, 0, 3, 1});
  EXPECT_EQ(perm.validation_indices(0), plan.validation_indices(2));
  EXPECT_EQ(perm.train_indices(1), plan.train_indices(0));
  EXPECT_THROW(plan.reordered({0, 1}), mr::InvalidInputError);
}
