#pragma once

// Independent reference computations for the test suites. Everything here
// works on explicit truth tables and enumeration; the only library calls are
// Manager::evaluate (plain path following) and, for building inputs,
// Manager::make_node / literal / apply.

#include <bit>
#include <cstdint>
#include <limits>
#include <memory>
#include <random>
#include <vector>

#include <gmpxx.h>

#include "nnbdd/bdd.hpp"
#include "nnbdd/neuron.hpp"

namespace nnbdd::testing {

/// tt[index] = f(x) where bit i of index is variable i.
using TruthTable = std::vector<std::uint8_t>;

inline constexpr std::uint32_t kInf = std::numeric_limits<std::uint32_t>::max();

inline TruthTable truth_table(const Manager& mgr, NodeRef f, std::size_t n) {
  TruthTable tt(std::size_t{1} << n);
  for (std::uint64_t i = 0; i < tt.size(); ++i) tt[i] = mgr.evaluate(f, Instance::from_index(i, mgr.num_vars()));
  return tt;
}

/// Shannon build from a truth table over variables 0..n-1 (manager order must be by index).
inline NodeRef from_truth_table(Manager& mgr, const TruthTable& tt, std::size_t n) {
  auto rec = [&](auto&& self, std::size_t var, std::uint64_t prefix) -> NodeRef {
    if (var == n) return mgr.constant(tt[prefix] != 0);
    const NodeRef lo = self(self, var + 1, prefix);
    const NodeRef hi = self(self, var + 1, prefix | (std::uint64_t{1} << var));
    return mgr.make_node(VarId{static_cast<std::uint32_t>(var)}, lo, hi);
  };
  return rec(rec, 0, 0);
}

inline mpz_class count_models(const TruthTable& tt) {
  unsigned long c = 0;
  for (auto b : tt) c += b;
  return mpz_class(c);
}

/// Brute-force Hamming robustness: distance to the nearest instance with the other label.
inline std::uint32_t brute_robustness(const TruthTable& tt, std::uint64_t x) {
  std::uint32_t best = kInf;
  for (std::uint64_t y = 0; y < tt.size(); ++y) {
    if (tt[y] != tt[x]) best = std::min<std::uint32_t>(best, static_cast<std::uint32_t>(std::popcount(x ^ y)));
  }
  return best;
}

/// Breadth-first search over Hamming neighbourhoods, level by level.
inline std::uint32_t bfs_robustness(const TruthTable& tt, std::size_t n, std::uint64_t x) {
  std::vector<char> seen(tt.size(), 0);
  std::vector<std::uint64_t> frontier{x};
  seen[x] = 1;
  for (std::uint32_t d = 0; !frontier.empty(); ++d) {
    std::vector<std::uint64_t> next;
    for (auto y : frontier) {
      if (tt[y] != tt[x]) return d;
      for (std::size_t i = 0; i < n; ++i) {
        const auto z = y ^ (std::uint64_t{1} << i);
        if (!seen[z]) {
          seen[z] = 1;
          next.push_back(z);
        }
      }
    }
    frontier = std::move(next);
  }
  return kInf;
}

/// Smallest |S| such that fixing x on S forces tt[x], by subset enumeration.
inline std::size_t brute_pi_cardinality(const TruthTable& tt, std::size_t n, std::uint64_t x) {
  const std::uint64_t full = (std::uint64_t{1} << n) - 1;
  std::size_t best = n + 1;
  for (std::uint64_t s = 0; s <= full; ++s) {
    const auto size = static_cast<std::size_t>(std::popcount(s));
    if (size >= best) continue;
    bool ok = true;
    for (std::uint64_t y = 0; y <= full && ok; ++y) {
      if ((y & s) == (x & s) && tt[y] != tt[x]) ok = false;
    }
    if (ok) best = size;
  }
  return best;
}

/// Random Boolean formula tree evaluated directly, independent of the BDD package.
class Formula {
 public:
  enum class Kind { Var, Const, Not, And, Or, Xor };

  static std::shared_ptr<Formula> random(std::mt19937_64& rng, std::size_t n, int depth) {
    auto f = std::make_shared<Formula>();
    const auto pick = rng() % (depth <= 0 ? 2 : 8);
    if (pick == 0 || depth <= 0) {
      if (rng() % 12 == 0) {
        f->kind_ = Kind::Const;
        f->var_ = rng() % 2;
      } else {
        f->kind_ = Kind::Var;
        f->var_ = rng() % n;
      }
      return f;
    }
    if (pick == 1) {
      f->kind_ = Kind::Not;
      f->a_ = random(rng, n, depth - 1);
      return f;
    }
    static constexpr Kind kBinary[] = {Kind::And, Kind::Or, Kind::Xor, Kind::And, Kind::Or, Kind::Or};
    f->kind_ = kBinary[(pick - 2) % 6];
    f->a_ = random(rng, n, depth - 1);
    f->b_ = random(rng, n, depth - 1);
    return f;
  }

  bool eval(std::uint64_t x) const {
    switch (kind_) {
      case Kind::Var:
        return (x >> var_) & 1U;
      case Kind::Const:
        return var_ != 0;
      case Kind::Not:
        return !a_->eval(x);
      case Kind::And:
        return a_->eval(x) && b_->eval(x);
      case Kind::Or:
        return a_->eval(x) || b_->eval(x);
      case Kind::Xor:
        return a_->eval(x) != b_->eval(x);
    }
    return false;
  }

  TruthTable table(std::size_t n) const {
    TruthTable tt(std::size_t{1} << n);
    for (std::uint64_t i = 0; i < tt.size(); ++i) tt[i] = eval(i);
    return tt;
  }

  NodeRef build(Manager& mgr) const {
    switch (kind_) {
      case Kind::Var:
        return mgr.literal(VarId{static_cast<std::uint32_t>(var_)});
      case Kind::Const:
        return mgr.constant(var_ != 0);
      case Kind::Not:
        return mgr.negate(a_->build(mgr));
      case Kind::And:
        return mgr.apply(BoolOp::And, a_->build(mgr), b_->build(mgr));
      case Kind::Or:
        return mgr.apply(BoolOp::Or, a_->build(mgr), b_->build(mgr));
      case Kind::Xor:
        return mgr.apply(BoolOp::Xor, a_->build(mgr), b_->build(mgr));
    }
    return mgr.bottom();
  }

 private:
  Kind kind_ = Kind::Const;
  std::uint64_t var_ = 0;
  std::shared_ptr<Formula> a_, b_;
};

/// Exact integer threshold semantics on all 2^n inputs.
inline TruthTable threshold_table(const IntThresholdUnit& u) {
  const auto n = u.arity();
  TruthTable tt(std::size_t{1} << n);
  for (std::uint64_t i = 0; i < tt.size(); ++i) {
    __int128 sum = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if ((i >> j) & 1U) sum += u.weights[j];
    }
    tt[i] = sum >= u.threshold;
  }
  return tt;
}

/// Exact rational threshold semantics of a real unit on all 2^n inputs.
inline TruthTable threshold_table(const LinearThresholdUnit& u) {
  const auto n = u.arity();
  TruthTable tt(std::size_t{1} << n);
  for (std::uint64_t i = 0; i < tt.size(); ++i) {
    mpq_class sum(u.bias);
    for (std::size_t j = 0; j < n; ++j) {
      if ((i >> j) & 1U) sum += mpq_class(u.weights[j]);
    }
    tt[i] = sum >= 0;
  }
  return tt;
}

inline IntThresholdUnit random_int_unit(std::mt19937_64& rng, std::size_t n, std::int64_t max_abs) {
  IntThresholdUnit u;
  const auto span = static_cast<std::uint64_t>(2 * max_abs + 1);
  for (std::size_t i = 0; i < n; ++i) u.weights.push_back(static_cast<std::int64_t>(rng() % span) - max_abs);
  std::int64_t pos = 0, neg = 0;
  for (auto w : u.weights) (w > 0 ? pos : neg) += w;
  // Thresholds mostly inside the achievable range so the unit is rarely constant.
  const auto range = static_cast<std::uint64_t>(pos - neg + 3);
  u.threshold = neg - 1 + static_cast<std::int64_t>(rng() % range);
  return u;
}

/// A mix of random formulas, random threshold functions and random-density
/// truth tables over n variables.
inline TruthTable random_function(std::mt19937_64& rng, std::size_t n, int kind) {
  switch (kind % 3) {
    case 0:
      return Formula::random(rng, n, 2 + static_cast<int>(rng() % 4))->table(n);
    case 1:
      return threshold_table(random_int_unit(rng, n, 1 + static_cast<std::int64_t>(rng() % 9)));
    default: {
      TruthTable tt(std::size_t{1} << n);
      const auto density = 1 + rng() % 15;
      for (auto& b : tt) b = (rng() % 16) < density;
      return tt;
    }
  }
}

inline bool is_constant(const TruthTable& tt) {
  for (auto b : tt) {
    if (b != tt.front()) return false;
  }
  return true;
}

}  // namespace nnbdd::testing
