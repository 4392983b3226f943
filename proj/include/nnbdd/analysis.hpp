#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <gmpxx.h>

#include "nnbdd/bdd.hpp"

namespace nnbdd {

/// Minimum number of input flips that changes a classification, or infinity
/// for constant functions. Infinity is a distinct state, never a large number.
class Robustness {
 public:
  static Robustness infinite() { return Robustness(); }
  static Robustness finite(std::uint32_t k) { return Robustness(k); }

  bool is_infinite() const { return !value_.has_value(); }
  /// Throws ArgumentError when infinite.
  std::uint32_t value() const;

  bool operator==(const Robustness&) const = default;

 private:
  Robustness() = default;
  explicit Robustness(std::uint32_t k) : value_(k) {}
  std::optional<std::uint32_t> value_;
};

/// Hamming distance from x to the nearest instance with the other label,
/// by a memoized walk over the diagram: at a node on variable v the cost is
/// min(cost(child agreeing with x_v), 1 + cost(other child)); variables
/// skipped by reduction cost nothing.
Robustness instance_robustness(const Manager& mgr, NodeRef f, const Instance& x);

/// gek(k): the instances of f whose robustness is at least k.
/// `at_least[k - 1]` holds gek(k), `exactly[k - 1]` holds f_k = gek(k) and not
/// gek(k + 1). The chain ends with the first unsatisfiable gek, so
/// `at_least.back()` is FALSE and `exactly.size() == at_least.size() - 1`.
struct RobustSets {
  std::vector<NodeRef> at_least;
  std::vector<NodeRef> exactly;

  std::uint32_t max_robustness() const { return static_cast<std::uint32_t>(exactly.size()); }
};

/// gek(1) = f; gek(k) = conjunction over variables X of gek(k-1)|x and
/// gek(k-1)|not x. Throws ArgumentError for f == TRUE (infinite robustness).
/// With `materialize_exactly` unset only the gek chain is built.
RobustSets robust_sets(Manager& mgr, NodeRef f, bool materialize_exactly = true);

enum class Polarity { Positive, Negative, Both };

struct PolarityProfile {
  /// counts[k - 1] = model_count(f_k).
  std::vector<mpz_class> counts;
  /// Sum over instances of this polarity of their robustness.
  mpz_class sum;
  /// Number of instances of this polarity.
  mpz_class instances;
  std::uint32_t max_robustness = 0;

  /// sum / instances (0 when the polarity has no instances).
  mpq_class mean() const;
};

struct RobustnessProfile {
  std::size_t num_vars = 0;
  std::optional<PolarityProfile> positive;
  std::optional<PolarityProfile> negative;

  /// Sum of the available polarity sums divided by 2^n. With both polarities
  /// this is the expected robustness under uniform inputs (mr).
  mpq_class model_robustness() const;
  /// Positive sum / 2^n and negative sum / 2^n.
  mpq_class positive_over_all() const;
  mpq_class negative_over_all() const;
  std::uint32_t max_robustness() const;
};

/// Exact robustness profile of f over the variables at levels [0, n).
/// The negative polarity runs the same chain on the negation of f.
/// Throws ArgumentError if f is constant.
RobustnessProfile model_robustness(Manager& mgr, NodeRef f, std::size_t n, Polarity polarity = Polarity::Both);

/// Largest robustness over the instances of the given polarity; stops the
/// gek chain at its first unsatisfiable element.
std::uint32_t max_robustness(Manager& mgr, NodeRef f, std::size_t n, Polarity polarity = Polarity::Both);

struct HistogramRow {
  std::uint32_t k = 0;
  mpz_class count;
  mpq_class proportion;  ///< count / 2^n
};

/// Per-k counts of instances with robustness exactly k. For Polarity::Both
/// the counts of the two polarities are added.
std::vector<HistogramRow> robustness_histogram(const RobustnessProfile& profile, Polarity polarity);
std::vector<HistogramRow> robustness_histogram(Manager& mgr, NodeRef f, std::size_t n,
                                               Polarity polarity = Polarity::Positive);

struct Explanation {
  PartialInstance literals;
  bool label = false;

  std::size_t cardinality() const { return literals.size(); }
};

/// Minimum-cardinality subset y of x such that fixing y forces f(x).
/// Computed by the memoized recursion m(g) = min(1 + m(g|x_v), m(g|v ^ g|~v))
/// over the top variable v of g. Ties prefer keeping the top variable.
/// Throws ArgumentError if f is constant.
Explanation pi_explanation(Manager& mgr, NodeRef f, const Instance& x);

/// True iff fixing y makes f constant (the sufficiency check).
bool is_sufficient(Manager& mgr, NodeRef f, const PartialInstance& y);

/// Extends y with the values of `fill` elsewhere. Throws ArgumentError if y
/// does not force a label; the result is checked to carry that label.
Instance fooling_complete(Manager& mgr, NodeRef f, const PartialInstance& y, const Instance& fill);

/// P(v = 1 | f) under uniform inputs over the variables at levels [0, n).
/// Throws ArgumentError if f is unsatisfiable.
mpq_class marginal(Manager& mgr, NodeRef f, VarId v, std::size_t n);

enum class Unateness { PosUnate, NegUnate, Unused, NonUnate };

Unateness unateness(Manager& mgr, NodeRef f, VarId v);
/// CSV labels: pos, neg, unused, none.
std::string_view unateness_label(Unateness u);

/// Mean instance robustness over the rows. Throws ArgumentError for constant
/// f or an empty dataset.
mpq_class dataset_average_robustness(const Manager& mgr, NodeRef f, std::span<const Instance> rows);

}  // namespace nnbdd
