#pragma once

#include <atomic>
#include <cstddef>
#include <functional>
#include <string>

namespace pear {

// f(s, mt_a, mt_b): signed relative score, positive when mt_a is better.
// Implementations must be safe to call concurrently.
class PairScorer {
 public:
  virtual ~PairScorer() = default;
  virtual double score(const std::string& source, const std::string& mt_a,
                       const std::string& mt_b) const = 0;
};

// Adapts any callable; handy for mocks and derived metrics.
class FunctionScorer final : public PairScorer {
 public:
  using Fn = std::function<double(const std::string&, const std::string&,
                                  const std::string&)>;
  explicit FunctionScorer(Fn fn) : fn_(std::move(fn)) {}
  double score(const std::string& s, const std::string& a,
               const std::string& b) const override {
    return fn_(s, a, b);
  }

 private:
  Fn fn_;
};

// Counts calls to the wrapped scorer (one call = one forward pass).
class CountingScorer final : public PairScorer {
 public:
  explicit CountingScorer(const PairScorer& inner) : inner_(inner) {}
  double score(const std::string& s, const std::string& a,
               const std::string& b) const override {
    calls_.fetch_add(1, std::memory_order_relaxed);
    return inner_.score(s, a, b);
  }
  std::size_t calls() const { return calls_.load(); }
  void reset() { calls_ = 0; }

 private:
  const PairScorer& inner_;
  mutable std::atomic<std::size_t> calls_{0};
};

}  // namespace pear
