#include "nnbdd/analysis.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>
#include <unordered_map>

#include "nnbdd/error.hpp"

namespace nnbdd {

namespace {

constexpr std::uint32_t kInf = std::numeric_limits<std::uint32_t>::max();

std::uint32_t add_one(std::uint32_t c) { return c == kInf ? kInf : c + 1; }

void require_nontrivial(const Manager& mgr, NodeRef f, const char* what) {
  if (mgr.is_terminal(f)) throw ArgumentError(std::string(what) + ": constant function has infinite robustness");
}

/// Conjunction over the support of g of (g|x and g|~x).
NodeRef shrink(Manager& mgr, NodeRef g) {
  if (mgr.is_terminal(g)) return g;
  NodeRef acc = mgr.top();
  for (const auto v : mgr.support(g)) {
    const NodeRef both = mgr.conjoin(mgr.condition(g, v, true), mgr.condition(g, v, false));
    acc = mgr.conjoin(acc, both);
    if (!mgr.is_sat(acc)) break;
  }
  return acc;
}

PolarityProfile profile_of(Manager& mgr, NodeRef f, std::size_t n) {
  const auto sets = robust_sets(mgr, f);
  PolarityProfile p;
  p.instances = mgr.model_count(f, n);
  for (std::size_t k = 1; k <= sets.exactly.size(); ++k) {
    p.counts.push_back(mgr.model_count(sets.exactly[k - 1], n));
    p.sum += p.counts.back() * static_cast<unsigned long>(k);
  }
  p.max_robustness = sets.max_robustness();
  return p;
}

mpq_class over_all(const mpz_class& sum, std::size_t n) {
  mpz_class denom = 1;
  denom <<= n;
  mpq_class q(sum, denom);
  q.canonicalize();
  return q;
}

}  // namespace

std::uint32_t Robustness::value() const {
  if (!value_) throw ArgumentError("robustness is infinite");
  return *value_;
}

Robustness instance_robustness(const Manager& mgr, NodeRef f, const Instance& x) {
  if (x.size() != mgr.num_vars()) throw ArgumentError("instance width differs from the manager's variable count");
  if (mgr.is_terminal(f)) return Robustness::infinite();
  // Distance to the terminal opposite to f(x); equivalently the recurrence
  // run on f (label 1) or on not-f (label 0).
  const NodeRef target = mgr.constant(!mgr.evaluate(f, x));
  std::unordered_map<NodeRef, std::uint32_t> memo;
  auto rec = [&](auto&& self, NodeRef g) -> std::uint32_t {
    if (mgr.is_terminal(g)) return g == target ? 0 : kInf;
    if (auto it = memo.find(g); it != memo.end()) return it->second;
    const bool bit = x[mgr.var(g).index];
    const auto keep = self(self, bit ? mgr.high(g) : mgr.low(g));
    const auto flip = add_one(self(self, bit ? mgr.low(g) : mgr.high(g)));
    const auto r = std::min(keep, flip);
    memo.emplace(g, r);
    return r;
  };
  const auto r = rec(rec, f);
  if (r == kInf) throw std::logic_error("instance_robustness: non-constant function with unreachable label");
  return Robustness::finite(r);
}

RobustSets robust_sets(Manager& mgr, NodeRef f, bool materialize_exactly) {
  if (mgr.is_valid(f)) throw ArgumentError("robust_sets: TRUE has infinite robustness");
  RobustSets sets;
  sets.at_least.push_back(f);
  while (mgr.is_sat(sets.at_least.back())) {
    const NodeRef prev = sets.at_least.back();
    const NodeRef next = shrink(mgr, prev);
    sets.at_least.push_back(next);
    if (materialize_exactly) {
      sets.exactly.push_back(mgr.conjoin(prev, mgr.negate(next)));
    } else {
      sets.exactly.push_back(mgr.bottom());
    }
    if (sets.at_least.size() > mgr.num_vars() + 2) {
      throw std::logic_error("robust_sets: chain longer than the variable count");
    }
  }
  return sets;
}

mpq_class PolarityProfile::mean() const {
  if (instances == 0) return 0;
  mpq_class q(sum, instances);
  q.canonicalize();
  return q;
}

mpq_class RobustnessProfile::model_robustness() const {
  mpz_class total;
  if (positive) total += positive->sum;
  if (negative) total += negative->sum;
  return over_all(total, num_vars);
}

mpq_class RobustnessProfile::positive_over_all() const {
  if (!positive) throw ArgumentError("profile has no positive polarity");
  return over_all(positive->sum, num_vars);
}

mpq_class RobustnessProfile::negative_over_all() const {
  if (!negative) throw ArgumentError("profile has no negative polarity");
  return over_all(negative->sum, num_vars);
}

std::uint32_t RobustnessProfile::max_robustness() const {
  std::uint32_t m = 0;
  if (positive) m = std::max(m, positive->max_robustness);
  if (negative) m = std::max(m, negative->max_robustness);
  return m;
}

RobustnessProfile model_robustness(Manager& mgr, NodeRef f, std::size_t n, Polarity polarity) {
  require_nontrivial(mgr, f, "model_robustness");
  RobustnessProfile profile;
  profile.num_vars = n;
  if (polarity != Polarity::Negative) profile.positive = profile_of(mgr, f, n);
  if (polarity != Polarity::Positive) profile.negative = profile_of(mgr, mgr.negate(f), n);
  return profile;
}

std::uint32_t max_robustness(Manager& mgr, NodeRef f, std::size_t n, Polarity polarity) {
  require_nontrivial(mgr, f, "max_robustness");
  for (auto v : mgr.support(f)) {
    if (mgr.level(v) >= n) throw ArgumentError("max_robustness: function mentions a variable outside the first n");
  }
  std::uint32_t m = 0;
  if (polarity != Polarity::Negative) m = std::max(m, robust_sets(mgr, f, false).max_robustness());
  if (polarity != Polarity::Positive) m = std::max(m, robust_sets(mgr, mgr.negate(f), false).max_robustness());
  return m;
}

std::vector<HistogramRow> robustness_histogram(const RobustnessProfile& profile, Polarity polarity) {
  std::vector<mpz_class> counts;
  auto add = [&](const std::optional<PolarityProfile>& p, const char* name) {
    if (!p) throw ArgumentError(std::string("profile has no ") + name + " polarity");
    if (counts.size() < p->counts.size()) counts.resize(p->counts.size());
    for (std::size_t i = 0; i < p->counts.size(); ++i) counts[i] += p->counts[i];
  };
  if (polarity != Polarity::Negative) add(profile.positive, "positive");
  if (polarity != Polarity::Positive) add(profile.negative, "negative");
  std::vector<HistogramRow> rows;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    rows.push_back({static_cast<std::uint32_t>(i + 1), counts[i], over_all(counts[i], profile.num_vars)});
  }
  return rows;
}

std::vector<HistogramRow> robustness_histogram(Manager& mgr, NodeRef f, std::size_t n, Polarity polarity) {
  return robustness_histogram(model_robustness(mgr, f, n, polarity), polarity);
}

Explanation pi_explanation(Manager& mgr, NodeRef f, const Instance& x) {
  if (mgr.is_terminal(f)) throw ArgumentError("pi_explanation: constant function needs no explanation");
  Explanation e;
  e.label = mgr.evaluate(f, x);
  const NodeRef g = e.label ? f : mgr.negate(f);

  std::unordered_map<NodeRef, std::uint32_t> memo;
  auto forget_top = [&](NodeRef h) { return mgr.conjoin(mgr.low(h), mgr.high(h)); };
  auto keep_top = [&](NodeRef h) { return x[mgr.var(h).index] ? mgr.high(h) : mgr.low(h); };
  auto cost = [&](auto&& self, NodeRef h) -> std::uint32_t {
    if (mgr.is_valid(h)) return 0;
    if (!mgr.is_sat(h)) return kInf;
    if (auto it = memo.find(h); it != memo.end()) return it->second;
    const auto r = std::min(add_one(self(self, keep_top(h))), self(self, forget_top(h)));
    memo.emplace(h, r);
    return r;
  };

  const auto best = cost(cost, g);
  if (best == kInf) throw std::logic_error("pi_explanation: instance does not satisfy its own label");
  NodeRef h = g;
  while (!mgr.is_valid(h)) {
    const auto keep = add_one(cost(cost, keep_top(h)));
    const auto forget = cost(cost, forget_top(h));
    if (keep <= forget) {
      const auto v = mgr.var(h);
      e.literals.add({v, x[v.index]});
      h = keep_top(h);
    } else {
      h = forget_top(h);
    }
  }
  if (e.cardinality() != best) throw std::logic_error("pi_explanation: witness cardinality mismatch");
  return e;
}

bool is_sufficient(Manager& mgr, NodeRef f, const PartialInstance& y) {
  return mgr.is_terminal(mgr.condition(f, y));
}

Instance fooling_complete(Manager& mgr, NodeRef f, const PartialInstance& y, const Instance& fill) {
  if (fill.size() != mgr.num_vars()) throw ArgumentError("fill width differs from the manager's variable count");
  const NodeRef rest = mgr.condition(f, y);
  if (!mgr.is_terminal(rest)) throw ArgumentError("fooling_complete: literals are not a sufficient reason");
  const bool label = mgr.is_valid(rest);
  Instance out = fill;
  for (const auto& lit : y.literals()) out.set(lit.var.index, lit.value);
  if (mgr.evaluate(f, out) != label) throw std::logic_error("fooling_complete: completion changed the label");
  return out;
}

mpq_class marginal(Manager& mgr, NodeRef f, VarId v, std::size_t n) {
  if (mgr.level(v) >= n) throw ArgumentError("marginal: variable outside the first n");
  const mpz_class total = mgr.model_count(f, n);
  if (total == 0) throw ArgumentError("marginal: function is unsatisfiable");
  // f|v=1 does not mention v; counting it over n variables counts each model twice.
  mpz_class with_v = mgr.model_count(mgr.condition(f, v, true), n);
  with_v >>= 1;
  mpq_class q(with_v, total);
  q.canonicalize();
  return q;
}

Unateness unateness(Manager& mgr, NodeRef f, VarId v) {
  const NodeRef f1 = mgr.condition(f, v, true);
  const NodeRef f0 = mgr.condition(f, v, false);
  if (f1 == f0) return Unateness::Unused;
  if (!mgr.is_sat(mgr.conjoin(f0, mgr.negate(f1)))) return Unateness::PosUnate;
  if (!mgr.is_sat(mgr.conjoin(f1, mgr.negate(f0)))) return Unateness::NegUnate;
  return Unateness::NonUnate;
}

std::string_view unateness_label(Unateness u) {
  switch (u) {
    case Unateness::PosUnate:
      return "pos";
    case Unateness::NegUnate:
      return "neg";
    case Unateness::Unused:
      return "unused";
    case Unateness::NonUnate:
      return "none";
  }
  return "none";
}

mpq_class dataset_average_robustness(const Manager& mgr, NodeRef f, std::span<const Instance> rows) {
  require_nontrivial(mgr, f, "dataset_average_robustness");
  if (rows.empty()) throw ArgumentError("dataset_average_robustness: empty dataset");
  mpz_class sum;
  for (const auto& x : rows) sum += instance_robustness(mgr, f, x).value();
  mpq_class q(sum, mpz_class(static_cast<unsigned long>(rows.size())));
  q.canonicalize();
  return q;
}

}  // namespace nnbdd
