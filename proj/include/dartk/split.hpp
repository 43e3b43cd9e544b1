#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "dartk/error.hpp"
#include "dartk/preprocess.hpp"
#include "dartk/rng.hpp"

namespace dartk {

enum class SplitKind { Pooled, Loso };

// Index-level split over one flat list of segment pairs.
struct SplitPlan {
  SplitKind kind = SplitKind::Pooled;
  double train_frac = 0.8;
  std::uint64_t seed = 42;
  std::string held_out;  // LOSO only
  std::vector<std::size_t> train_idx;
  std::vector<std::size_t> test_idx;
};

inline SplitPlan pooled_split(std::size_t n_pairs, double train_frac = 0.8,
                              std::uint64_t seed = 42) {
  require(n_pairs >= 2, Errc::TooFew, "need at least two segment pairs");
  require(train_frac > 0.0 && train_frac <= 1.0, Errc::InvalidConfig,
          "train fraction must lie in (0, 1]");
  SplitPlan plan;
  plan.train_frac = train_frac;
  plan.seed = seed;
  std::vector<std::size_t> order(n_pairs);
  for (std::size_t i = 0; i < n_pairs; ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(order);
  const auto n_train = static_cast<std::size_t>(
      std::floor(train_frac * static_cast<double>(n_pairs)));
  require(n_train >= 1, Errc::EmptySplit, "training split is empty");
  require(n_train < n_pairs, Errc::EmptyValidation,
          "validation split is empty");
  plan.train_idx.assign(order.begin(),
                        order.begin() + static_cast<std::ptrdiff_t>(n_train));
  plan.test_idx.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train),
                       order.end());
  return plan;
}

// Distinct subject ids in sorted order.
inline std::vector<std::string> subject_ids(
    const std::vector<SegmentPair>& pairs) {
  std::vector<std::string> ids;
  for (const auto& p : pairs)
    if (std::find(ids.begin(), ids.end(), p.noisy.subject_id) == ids.end())
      ids.push_back(p.noisy.subject_id);
  std::sort(ids.begin(), ids.end());
  return ids;
}

// One fold per subject; the fold's test set is exactly that subject's pairs.
inline std::vector<SplitPlan> loso_folds(
    const std::vector<SegmentPair>& pairs) {
  const auto ids = subject_ids(pairs);
  require(ids.size() >= 3, Errc::TooFewSubjects,
          std::to_string(ids.size()) +
              " subjects, need at least 3 for leave-one-subject-out");
  std::vector<SplitPlan> folds;
  for (const auto& id : ids) {
    SplitPlan plan;
    plan.kind = SplitKind::Loso;
    plan.held_out = id;
    for (std::size_t i = 0; i < pairs.size(); ++i)
      (pairs[i].noisy.subject_id == id ? plan.test_idx : plan.train_idx)
          .push_back(i);
    folds.push_back(std::move(plan));
  }
  return folds;
}

inline std::vector<SegmentPair> gather_pairs(
    const std::vector<SegmentPair>& pairs,
    const std::vector<std::size_t>& idx) {
  std::vector<SegmentPair> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(pairs[i]);
  return out;
}

}  // namespace dartk
