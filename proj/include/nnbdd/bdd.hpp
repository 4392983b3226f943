#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include <gmpxx.h>

namespace nnbdd {

/// Variable identifier: 0-based index into the manager's variable set.
struct VarId {
  std::uint32_t index = 0;

  auto operator<=>(const VarId&) const = default;
};

/// Handle to a node owned by a Manager. Handles from different managers never
/// compare equal, and by canonicity two handles from one manager are equal iff
/// they denote the same Boolean function.
class NodeRef {
 public:
  NodeRef() = default;

  std::uint32_t id() const { return id_; }
  std::uint32_t manager_tag() const { return tag_; }
  bool valid() const { return tag_ != 0; }

  bool operator==(const NodeRef&) const = default;

 private:
  friend class Manager;
  NodeRef(std::uint32_t id, std::uint32_t tag) : id_(id), tag_(tag) {}

  std::uint32_t id_ = 0;
  std::uint32_t tag_ = 0;
};

/// Total assignment of the binary input variables.
class Instance {
 public:
  Instance() = default;
  explicit Instance(std::size_t n, bool value = false);
  /// Throws ArgumentError if any entry is not 0 or 1.
  explicit Instance(std::vector<std::uint8_t> bits);

  /// Bit i of `index` becomes variable i.
  static Instance from_index(std::uint64_t index, std::size_t n);

  std::size_t size() const { return bits_.size(); }
  bool operator[](std::size_t i) const { return bits_[i] != 0; }
  void set(std::size_t i, bool value) { bits_[i] = value ? 1 : 0; }
  void flip(std::size_t i) { bits_[i] ^= 1; }
  std::span<const std::uint8_t> bits() const { return bits_; }

  bool operator==(const Instance&) const = default;

 private:
  std::vector<std::uint8_t> bits_;
};

struct Literal {
  VarId var;
  bool value = false;

  bool operator==(const Literal&) const = default;
};

/// Set of (variable, value) pairs with no variable repeated.
class PartialInstance {
 public:
  PartialInstance() = default;

  /// Throws ArgumentError if `lit.var` is already assigned.
  void add(Literal lit);
  bool contains(VarId v) const;
  std::optional<bool> value_of(VarId v) const;

  std::size_t size() const { return literals_.size(); }
  bool empty() const { return literals_.empty(); }
  const std::vector<Literal>& literals() const { return literals_; }

 private:
  std::vector<Literal> literals_;
};

enum class BoolOp : std::uint8_t { And, Or, Xor };

/// Owner of a hash-consed store of reduced ordered decision nodes.
///
/// Every handle returned is canonical: diagrams are reduced at construction
/// time, so no separate reduction pass exists. Negation is a memoized
/// terminal swap (there are no complement edges). A manager and its handles
/// must be confined to one thread at a time.
class Manager {
 public:
  /// Variables ordered by index.
  explicit Manager(std::size_t num_vars);
  /// `order[level]` is the variable tested at that level.
  Manager(std::size_t num_vars, std::vector<VarId> order);

  Manager(const Manager&) = delete;
  Manager& operator=(const Manager&) = delete;
  Manager(Manager&&) noexcept = default;
  Manager& operator=(Manager&&) noexcept = default;

  std::size_t num_vars() const { return level_of_var_.size(); }
  const std::vector<VarId>& order() const { return var_at_level_; }
  std::size_t level(VarId v) const;
  VarId var_at_level(std::size_t level) const { return var_at_level_.at(level); }

  NodeRef bottom() const { return {kFalse, tag_}; }
  NodeRef top() const { return {kTrue, tag_}; }
  NodeRef constant(bool value) const { return value ? top() : bottom(); }

  NodeRef literal(VarId v, bool positive = true);
  /// Decision node on `v`; returns `lo` when both children coincide.
  NodeRef make_node(VarId v, NodeRef lo, NodeRef hi);

  NodeRef apply(BoolOp op, NodeRef f, NodeRef g);
  NodeRef conjoin(NodeRef f, NodeRef g) { return apply(BoolOp::And, f, g); }
  NodeRef disjoin(NodeRef f, NodeRef g) { return apply(BoolOp::Or, f, g); }
  NodeRef negate(NodeRef f);
  NodeRef ite(NodeRef cond, NodeRef then_f, NodeRef else_f);

  NodeRef condition(NodeRef f, VarId v, bool value);
  NodeRef condition(NodeRef f, const PartialInstance& y);

  /// Vector substitution: replaces variable i of `f` (a diagram owned by
  /// `source`) with `subs[i]`, a diagram owned by this manager. `source` may
  /// be this manager.
  NodeRef compose(const Manager& source, NodeRef f, std::span<const NodeRef> subs);

  /// Number of satisfying assignments over the variables at levels [0, n).
  /// Throws ArgumentError if `f` mentions a variable at level n or above.
  mpz_class model_count(NodeRef f, std::size_t n);
  mpz_class model_count(NodeRef f) { return model_count(f, num_vars()); }

  bool evaluate(NodeRef f, const Instance& x) const;

  bool is_valid(NodeRef f) const;
  bool is_sat(NodeRef f) const;
  std::size_t node_count(NodeRef f) const;
  std::size_t node_count(std::span<const NodeRef> roots) const;
  /// Variables mentioned by `f`, sorted by index.
  std::vector<VarId> support(NodeRef f) const;

  bool is_terminal(NodeRef f) const;
  VarId var(NodeRef f) const;
  NodeRef low(NodeRef f) const;
  NodeRef high(NodeRef f) const;
  /// Level of the node's variable; terminals sit at level num_vars().
  std::size_t level_of(NodeRef f) const;

  /// Maximum number of decision nodes in the store; nullopt means unbounded.
  void set_node_budget(std::optional<std::size_t> budget) { budget_ = budget; }
  std::optional<std::size_t> node_budget() const { return budget_; }
  /// Decision nodes currently stored (live or dead).
  std::size_t store_size() const { return nodes_.size() - 2; }

  /// Verifies ordering, reducedness and uniqueness of every node reachable
  /// from `f`; throws std::logic_error on the first violation.
  void audit(NodeRef f) const;

  void clear_caches();

 private:
  struct Node {
    std::uint32_t var;
    std::uint32_t lo;
    std::uint32_t hi;
  };
  struct Triple {
    std::uint32_t a, b, c;
    bool operator==(const Triple&) const = default;
  };
  struct TripleHash {
    std::size_t operator()(const Triple& t) const noexcept;
  };

  static constexpr std::uint32_t kFalse = 0;
  static constexpr std::uint32_t kTrue = 1;

  void check(NodeRef f) const;
  void check(VarId v) const;
  std::uint32_t level_of_id(std::uint32_t id) const;
  std::uint32_t mk(std::uint32_t var, std::uint32_t lo, std::uint32_t hi);
  std::uint32_t cofactor(std::uint32_t id, std::uint32_t top_level, bool value) const;

  std::uint32_t apply_rec(BoolOp op, std::uint32_t f, std::uint32_t g);
  std::uint32_t negate_rec(std::uint32_t f);
  std::uint32_t ite_rec(std::uint32_t f, std::uint32_t g, std::uint32_t h);
  std::uint32_t condition_rec(std::uint32_t f, std::uint32_t var, bool value);
  const mpz_class& count_rec(std::uint32_t f);

  template <typename Fn>
  void for_each_reachable(std::span<const NodeRef> roots, Fn&& fn) const;

  std::uint32_t tag_;
  std::vector<std::uint32_t> level_of_var_;
  std::vector<VarId> var_at_level_;
  std::vector<Node> nodes_;
  std::optional<std::size_t> budget_;

  std::unordered_map<Triple, std::uint32_t, TripleHash> unique_;
  std::unordered_map<Triple, std::uint32_t, TripleHash> apply_cache_;
  std::unordered_map<Triple, std::uint32_t, TripleHash> ite_cache_;
  std::unordered_map<Triple, std::uint32_t, TripleHash> condition_cache_;
  std::unordered_map<std::uint32_t, std::uint32_t> negate_cache_;
  std::unordered_map<std::uint32_t, mpz_class> count_cache_;
};

}  // namespace nnbdd

template <>
struct std::hash<nnbdd::NodeRef> {
  std::size_t operator()(const nnbdd::NodeRef& r) const noexcept {
    return std::hash<std::uint64_t>{}((std::uint64_t{r.manager_tag()} << 32) | r.id());
  }
};
