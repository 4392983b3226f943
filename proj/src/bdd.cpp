#include "nnbdd/bdd.hpp"

#include <algorithm>
#include <atomic>
#include <stdexcept>
#include <string>

#include "nnbdd/error.hpp"

namespace nnbdd {

namespace {

std::uint32_t next_manager_tag() {
  static std::atomic<std::uint32_t> counter{1};
  return counter.fetch_add(1, std::memory_order_relaxed);
}

}  // namespace

// ---------------------------------------------------------------------------
// Instance / PartialInstance

Instance::Instance(std::size_t n, bool value) : bits_(n, value ? 1 : 0) {}

Instance::Instance(std::vector<std::uint8_t> bits) : bits_(std::move(bits)) {
  for (auto b : bits_) {
    if (b > 1) throw ArgumentError("instance bits must be 0 or 1");
  }
}

Instance Instance::from_index(std::uint64_t index, std::size_t n) {
  Instance x(n);
  for (std::size_t i = 0; i < n && i < 64; ++i) x.set(i, (index >> i) & 1U);
  return x;
}

void PartialInstance::add(Literal lit) {
  if (contains(lit.var)) {
    throw ArgumentError("variable " + std::to_string(lit.var.index) + " assigned twice");
  }
  literals_.push_back(lit);
}

bool PartialInstance::contains(VarId v) const { return value_of(v).has_value(); }

std::optional<bool> PartialInstance::value_of(VarId v) const {
  for (const auto& l : literals_) {
    if (l.var == v) return l.value;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Manager

std::size_t Manager::TripleHash::operator()(const Triple& t) const noexcept {
  std::uint64_t h = t.a;
  h = h * 0x9E3779B97F4A7C15ULL + t.b;
  h = h * 0x9E3779B97F4A7C15ULL + t.c;
  h ^= h >> 29;
  return static_cast<std::size_t>(h);
}

Manager::Manager(std::size_t num_vars) : Manager(num_vars, [num_vars] {
  std::vector<VarId> order(num_vars);
  for (std::size_t i = 0; i < num_vars; ++i) order[i] = VarId{static_cast<std::uint32_t>(i)};
  return order;
}()) {}

Manager::Manager(std::size_t num_vars, std::vector<VarId> order)
    : tag_(next_manager_tag()), level_of_var_(num_vars, UINT32_MAX), var_at_level_(std::move(order)) {
  if (var_at_level_.size() != num_vars) {
    throw ArgumentError("variable order must list every variable exactly once");
  }
  for (std::size_t l = 0; l < num_vars; ++l) {
    const auto v = var_at_level_[l].index;
    if (v >= num_vars || level_of_var_[v] != UINT32_MAX) {
      throw ArgumentError("variable order must list every variable exactly once");
    }
    level_of_var_[v] = static_cast<std::uint32_t>(l);
  }
  const auto term = static_cast<std::uint32_t>(num_vars);
  nodes_.push_back({term, kFalse, kFalse});
  nodes_.push_back({term, kTrue, kTrue});
}

std::size_t Manager::level(VarId v) const {
  check(v);
  return level_of_var_[v.index];
}

void Manager::check(NodeRef f) const {
  if (f.tag_ != tag_) throw ArgumentError("node handle belongs to a different manager");
  if (f.id_ >= nodes_.size()) throw ArgumentError("dangling node handle");
}

void Manager::check(VarId v) const {
  if (v.index >= num_vars()) {
    throw ArgumentError("variable " + std::to_string(v.index) + " out of range (manager has " +
                        std::to_string(num_vars()) + ")");
  }
}

std::uint32_t Manager::level_of_id(std::uint32_t id) const {
  if (id <= kTrue) return static_cast<std::uint32_t>(num_vars());
  return level_of_var_[nodes_[id].var];
}

std::uint32_t Manager::mk(std::uint32_t var, std::uint32_t lo, std::uint32_t hi) {
  if (lo == hi) return lo;
  const Triple key{var, lo, hi};
  if (auto it = unique_.find(key); it != unique_.end()) return it->second;
  if (budget_ && store_size() >= *budget_) {
    throw BudgetExceeded("node budget of " + std::to_string(*budget_) + " exhausted");
  }
  const auto id = static_cast<std::uint32_t>(nodes_.size());
  nodes_.push_back({var, lo, hi});
  unique_.emplace(key, id);
  return id;
}

std::uint32_t Manager::cofactor(std::uint32_t id, std::uint32_t top_level, bool value) const {
  if (level_of_id(id) != top_level) return id;
  return value ? nodes_[id].hi : nodes_[id].lo;
}

NodeRef Manager::literal(VarId v, bool positive) {
  check(v);
  return {positive ? mk(v.index, kFalse, kTrue) : mk(v.index, kTrue, kFalse), tag_};
}

NodeRef Manager::make_node(VarId v, NodeRef lo, NodeRef hi) {
  check(v);
  check(lo);
  check(hi);
  const auto l = level_of_var_[v.index];
  if (level_of_id(lo.id_) <= l || level_of_id(hi.id_) <= l) {
    throw ArgumentError("make_node would violate the variable order");
  }
  return {mk(v.index, lo.id_, hi.id_), tag_};
}

NodeRef Manager::apply(BoolOp op, NodeRef f, NodeRef g) {
  check(f);
  check(g);
  return {apply_rec(op, f.id_, g.id_), tag_};
}

std::uint32_t Manager::apply_rec(BoolOp op, std::uint32_t f, std::uint32_t g) {
  switch (op) {
    case BoolOp::And:
      if (f == kFalse || g == kFalse) return kFalse;
      if (f == kTrue || f == g) return g;
      if (g == kTrue) return f;
      break;
    case BoolOp::Or:
      if (f == kTrue || g == kTrue) return kTrue;
      if (f == kFalse || f == g) return g;
      if (g == kFalse) return f;
      break;
    case BoolOp::Xor:
      if (f == g) return kFalse;
      if (f == kFalse) return g;
      if (g == kFalse) return f;
      if (f == kTrue) return negate_rec(g);
      if (g == kTrue) return negate_rec(f);
      break;
  }
  if (f > g) std::swap(f, g);
  const Triple key{static_cast<std::uint32_t>(op), f, g};
  if (auto it = apply_cache_.find(key); it != apply_cache_.end()) return it->second;

  const auto top = std::min(level_of_id(f), level_of_id(g));
  const auto var = var_at_level_[top].index;
  const auto lo = apply_rec(op, cofactor(f, top, false), cofactor(g, top, false));
  const auto hi = apply_rec(op, cofactor(f, top, true), cofactor(g, top, true));
  const auto r = mk(var, lo, hi);
  apply_cache_.emplace(key, r);
  return r;
}

NodeRef Manager::negate(NodeRef f) {
  check(f);
  return {negate_rec(f.id_), tag_};
}

std::uint32_t Manager::negate_rec(std::uint32_t f) {
  if (f == kFalse) return kTrue;
  if (f == kTrue) return kFalse;
  if (auto it = negate_cache_.find(f); it != negate_cache_.end()) return it->second;
  const Node n = nodes_[f];
  const auto lo = negate_rec(n.lo);
  const auto hi = negate_rec(n.hi);
  const auto r = mk(n.var, lo, hi);
  negate_cache_.emplace(f, r);
  negate_cache_.emplace(r, f);
  return r;
}

NodeRef Manager::ite(NodeRef cond, NodeRef then_f, NodeRef else_f) {
  check(cond);
  check(then_f);
  check(else_f);
  return {ite_rec(cond.id_, then_f.id_, else_f.id_), tag_};
}

std::uint32_t Manager::ite_rec(std::uint32_t f, std::uint32_t g, std::uint32_t h) {
  if (f == kTrue) return g;
  if (f == kFalse) return h;
  if (g == h) return g;
  if (g == kTrue && h == kFalse) return f;
  if (g == kFalse && h == kTrue) return negate_rec(f);
  if (g == kTrue) return apply_rec(BoolOp::Or, f, h);
  if (h == kFalse) return apply_rec(BoolOp::And, f, g);

  const Triple key{f, g, h};
  if (auto it = ite_cache_.find(key); it != ite_cache_.end()) return it->second;
  const auto top = std::min({level_of_id(f), level_of_id(g), level_of_id(h)});
  const auto var = var_at_level_[top].index;
  const auto lo = ite_rec(cofactor(f, top, false), cofactor(g, top, false), cofactor(h, top, false));
  const auto hi = ite_rec(cofactor(f, top, true), cofactor(g, top, true), cofactor(h, top, true));
  const auto r = mk(var, lo, hi);
  ite_cache_.emplace(key, r);
  return r;
}

NodeRef Manager::condition(NodeRef f, VarId v, bool value) {
  check(f);
  check(v);
  return {condition_rec(f.id_, v.index, value), tag_};
}

NodeRef Manager::condition(NodeRef f, const PartialInstance& y) {
  for (const auto& lit : y.literals()) f = condition(f, lit.var, lit.value);
  return f;
}

std::uint32_t Manager::condition_rec(std::uint32_t f, std::uint32_t var, bool value) {
  const auto target = level_of_var_[var];
  const auto lf = level_of_id(f);
  if (lf > target) return f;
  if (lf == target) return value ? nodes_[f].hi : nodes_[f].lo;

  const Triple key{f, var, value ? 1U : 0U};
  if (auto it = condition_cache_.find(key); it != condition_cache_.end()) return it->second;
  const Node n = nodes_[f];
  const auto lo = condition_rec(n.lo, var, value);
  const auto hi = condition_rec(n.hi, var, value);
  const auto r = mk(n.var, lo, hi);
  condition_cache_.emplace(key, r);
  return r;
}

NodeRef Manager::compose(const Manager& source, NodeRef f, std::span<const NodeRef> subs) {
  source.check(f);
  if (subs.size() != source.num_vars()) {
    throw ArgumentError("compose: " + std::to_string(subs.size()) + " substitutions for " +
                        std::to_string(source.num_vars()) + " variables");
  }
  for (const auto& s : subs) check(s);

  std::unordered_map<std::uint32_t, std::uint32_t> memo;
  std::function<std::uint32_t(std::uint32_t)> rec = [&](std::uint32_t id) -> std::uint32_t {
    if (id <= kTrue) return id;
    if (auto it = memo.find(id); it != memo.end()) return it->second;
    const Node n = source.nodes_[id];
    const auto lo = rec(n.lo);
    const auto hi = rec(n.hi);
    const auto r = ite_rec(subs[n.var].id_, hi, lo);
    memo.emplace(id, r);
    return r;
  };
  return {rec(f.id_), tag_};
}

const mpz_class& Manager::count_rec(std::uint32_t f) {
  if (auto it = count_cache_.find(f); it != count_cache_.end()) return it->second;
  mpz_class total;
  if (f == kTrue) {
    total = 1;
  } else if (f != kFalse) {
    const Node n = nodes_[f];
    const auto lf = level_of_id(f);
    const auto llo = level_of_id(n.lo);
    const auto lhi = level_of_id(n.hi);
    mpz_class lo = count_rec(n.lo);
    mpz_class hi = count_rec(n.hi);
    lo <<= (llo - lf - 1);
    hi <<= (lhi - lf - 1);
    total = lo + hi;
  }
  return count_cache_.emplace(f, std::move(total)).first->second;
}

mpz_class Manager::model_count(NodeRef f, std::size_t n) {
  check(f);
  if (n > num_vars()) {
    throw ArgumentError("model_count: n exceeds the manager's variable count");
  }
  for (auto v : support(f)) {
    if (level_of_var_[v.index] >= n) {
      throw ArgumentError("model_count: function mentions variable " + std::to_string(v.index) +
                          " outside the first " + std::to_string(n));
    }
  }
  mpz_class c = count_rec(f.id_);
  c <<= level_of_id(f.id_);
  c >>= (num_vars() - n);
  return c;
}

bool Manager::evaluate(NodeRef f, const Instance& x) const {
  check(f);
  if (x.size() != num_vars()) {
    throw ArgumentError("instance has " + std::to_string(x.size()) + " bits, expected " +
                        std::to_string(num_vars()));
  }
  auto id = f.id_;
  while (id > kTrue) {
    const auto& n = nodes_[id];
    id = x[n.var] ? n.hi : n.lo;
  }
  return id == kTrue;
}

bool Manager::is_valid(NodeRef f) const {
  check(f);
  return f.id_ == kTrue;
}

bool Manager::is_sat(NodeRef f) const {
  check(f);
  return f.id_ != kFalse;
}

template <typename Fn>
void Manager::for_each_reachable(std::span<const NodeRef> roots, Fn&& fn) const {
  std::vector<char> seen(nodes_.size(), 0);
  std::vector<std::uint32_t> stack;
  for (const auto& r : roots) {
    check(r);
    stack.push_back(r.id_);
  }
  while (!stack.empty()) {
    const auto id = stack.back();
    stack.pop_back();
    if (id <= kTrue || seen[id]) continue;
    seen[id] = 1;
    fn(id);
    stack.push_back(nodes_[id].lo);
    stack.push_back(nodes_[id].hi);
  }
}

std::size_t Manager::node_count(NodeRef f) const { return node_count(std::span<const NodeRef>(&f, 1)); }

std::size_t Manager::node_count(std::span<const NodeRef> roots) const {
  std::size_t count = 0;
  for_each_reachable(roots, [&](std::uint32_t) { ++count; });
  return count;
}

std::vector<VarId> Manager::support(NodeRef f) const {
  std::vector<char> mentioned(num_vars(), 0);
  for_each_reachable(std::span<const NodeRef>(&f, 1), [&](std::uint32_t id) { mentioned[nodes_[id].var] = 1; });
  std::vector<VarId> out;
  for (std::size_t v = 0; v < mentioned.size(); ++v) {
    if (mentioned[v]) out.push_back(VarId{static_cast<std::uint32_t>(v)});
  }
  return out;
}

bool Manager::is_terminal(NodeRef f) const {
  check(f);
  return f.id_ <= kTrue;
}

VarId Manager::var(NodeRef f) const {
  if (is_terminal(f)) throw ArgumentError("terminal nodes carry no variable");
  return VarId{nodes_[f.id_].var};
}

NodeRef Manager::low(NodeRef f) const {
  if (is_terminal(f)) throw ArgumentError("terminal nodes have no children");
  return {nodes_[f.id_].lo, tag_};
}

NodeRef Manager::high(NodeRef f) const {
  if (is_terminal(f)) throw ArgumentError("terminal nodes have no children");
  return {nodes_[f.id_].hi, tag_};
}

std::size_t Manager::level_of(NodeRef f) const {
  check(f);
  return level_of_id(f.id_);
}

void Manager::audit(NodeRef f) const {
  for_each_reachable(std::span<const NodeRef>(&f, 1), [&](std::uint32_t id) {
    const auto& n = nodes_[id];
    if (n.lo == n.hi) throw std::logic_error("audit: redundant node " + std::to_string(id));
    const auto l = level_of_id(id);
    if (level_of_id(n.lo) <= l || level_of_id(n.hi) <= l) {
      throw std::logic_error("audit: order violated below node " + std::to_string(id));
    }
    auto it = unique_.find(Triple{n.var, n.lo, n.hi});
    if (it == unique_.end() || it->second != id) {
      throw std::logic_error("audit: node " + std::to_string(id) + " is not the unique representative");
    }
  });
}

void Manager::clear_caches() {
  apply_cache_.clear();
  ite_cache_.clear();
  condition_cache_.clear();
  negate_cache_.clear();
  count_cache_.clear();
}

}  // namespace nnbdd
