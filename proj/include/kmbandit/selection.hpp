#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <span>
#include <utility>
#include <vector>

#include "kmbandit/rng.hpp"

namespace kmbandit::detail {

// `order` is sorted by key descending. Every run of equal keys that straddles
// one of the cut positions is shuffled, so membership on either side of a cut
// is uniformly random among tied items. Consumes randomness only on ties.
template <class Key>
void shuffle_ties_at_cuts(std::span<std::size_t> order, Key key,
                          std::initializer_list<std::size_t> cuts, RngStream& rng) {
  std::size_t shuffled_until = 0;
  for (std::size_t cut : cuts) {
    if (cut == 0 || cut >= order.size() || cut < shuffled_until) continue;
    const auto value = key(order[cut]);
    if (key(order[cut - 1]) != value) continue;
    std::size_t begin = cut - 1;
    while (begin > 0 && key(order[begin - 1]) == value) --begin;
    std::size_t end = cut + 1;
    while (end < order.size() && key(order[end]) == value) ++end;
    std::shuffle(order.begin() + static_cast<std::ptrdiff_t>(begin),
                 order.begin() + static_cast<std::ptrdiff_t>(end), rng);
    shuffled_until = end;
  }
}

// Sorts `order` by key descending with ties at the cuts broken at random.
template <class Key>
void rank_descending(std::span<std::size_t> order, Key key,
                     std::initializer_list<std::size_t> cuts, RngStream& rng) {
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto ka = key(a);
    const auto kb = key(b);
    return ka > kb || (ka == kb && a < b);
  });
  shuffle_ties_at_cuts(order, key, cuts, rng);
}

// Streaming uniform choice among maximisers: feed candidates in any order.
template <class Value>
class TiedArgmax {
 public:
  void offer(std::size_t item, Value value, RngStream& rng) {
    if (count_ == 0 || value > best_) {
      best_ = value;
      item_ = item;
      count_ = 1;
    } else if (value == best_) {
      ++count_;
      if (rng.below(count_) == 0) item_ = item;
    }
  }

  bool empty() const noexcept { return count_ == 0; }
  std::size_t item() const noexcept { return item_; }
  Value value() const noexcept { return best_; }

 private:
  Value best_{};
  std::size_t item_ = 0;
  std::uint64_t count_ = 0;
};

struct ArgResult {
  std::size_t item;
  double value;
};

// argmax of `exact` over `candidates`, ties uniform. `envelope(a)` must be an
// upper bound on `exact(a)` and cheap; candidates are evaluated in decreasing
// envelope order and the scan stops once no remaining one can reach the best.
template <class Envelope, class Exact>
ArgResult lazy_argmax(std::span<const std::size_t> candidates, Envelope envelope, Exact exact,
                      RngStream& rng) {
  std::vector<std::pair<double, std::size_t>> order;
  order.reserve(candidates.size());
  for (std::size_t a : candidates) order.emplace_back(envelope(a), a);
  std::sort(order.begin(), order.end(), [](const auto& x, const auto& y) {
    return x.first > y.first || (x.first == y.first && x.second < y.second);
  });
  TiedArgmax<double> best;
  for (const auto& [bound, a] : order) {
    if (!best.empty() && bound < best.value()) break;
    best.offer(a, exact(a), rng);
  }
  return {best.item(), best.value()};
}

// Top `count` (>= 1) items of `exact` over `candidates` in descending order.
// Ties across the cuts count-1 and count are broken uniformly. Lazy like
// lazy_argmax: stops once `count` items are known and the next envelope value
// is strictly below the count-th best exact value.
template <class Envelope, class Exact>
std::vector<ArgResult> lazy_top(std::span<const std::size_t> candidates, std::size_t count,
                                Envelope envelope, Exact exact, RngStream& rng) {
  std::vector<std::pair<double, std::size_t>> order;
  order.reserve(candidates.size());
  for (std::size_t a : candidates) order.emplace_back(envelope(a), a);
  std::sort(order.begin(), order.end(), [](const auto& x, const auto& y) {
    return x.first > y.first || (x.first == y.first && x.second < y.second);
  });
  std::vector<std::size_t> evaluated;
  std::vector<double> value_of;  // parallel to `evaluated`
  std::vector<double> kth;       // min-heap of the best `count` exact values
  for (const auto& [bound, a] : order) {
    if (kth.size() == count && bound < kth.front()) break;
    const double v = exact(a);
    evaluated.push_back(a);
    value_of.push_back(v);
    if (kth.size() < count) {
      kth.push_back(v);
      std::push_heap(kth.begin(), kth.end(), std::greater<>());
    } else if (v > kth.front()) {
      std::pop_heap(kth.begin(), kth.end(), std::greater<>());
      kth.back() = v;
      std::push_heap(kth.begin(), kth.end(), std::greater<>());
    }
  }
  std::vector<std::size_t> idx(evaluated.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  auto key = [&](std::size_t i) { return value_of[i]; };
  rank_descending(std::span<std::size_t>(idx), key, {count - 1, count}, rng);
  std::vector<ArgResult> out;
  const std::size_t take = std::min(count, idx.size());
  out.reserve(take);
  for (std::size_t i = 0; i < take; ++i) out.push_back({evaluated[idx[i]], value_of[idx[i]]});
  return out;
}

}  // namespace kmbandit::detail
