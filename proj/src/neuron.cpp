#include "nnbdd/neuron.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "nnbdd/error.hpp"
#include "nnbdd/kernels.hpp"

namespace nnbdd {

namespace {

// 2^53: every integer up to here is exact in a double.
constexpr double kMaxExactInteger = 9007199254740992.0;

std::int64_t checked_add(std::int64_t a, std::int64_t b) {
  std::int64_t r;
  if (__builtin_add_overflow(a, b, &r)) throw QuantizationError("integer overflow in threshold unit");
  return r;
}

std::int64_t checked_abs(std::int64_t a) {
  if (a == std::numeric_limits<std::int64_t>::min()) throw QuantizationError("integer overflow in threshold unit");
  return a < 0 ? -a : a;
}

std::int64_t scale_value(double v, double scale, Rounding mode) {
  if (!std::isfinite(v)) throw QuantizationError("non-finite parameter");
  double s = v * scale;
  const double near = std::nearbyint(s);
  if (std::fabs(s - near) <= 1e-9 * std::max(1.0, std::fabs(s))) s = near;
  s = mode == Rounding::Truncate ? std::trunc(s) : std::round(s);
  if (std::fabs(s) > kMaxExactInteger) throw QuantizationError("scaled parameter exceeds the integer range");
  return static_cast<std::int64_t>(s);
}

/// Resolves the input-to-variable mapping and the visiting order (sorted by level).
std::vector<std::size_t> visit_order(const Manager& mgr, std::size_t arity, std::span<const VarId> inputs,
                                     std::vector<VarId>& vars) {
  if (inputs.empty()) {
    if (arity > mgr.num_vars()) throw ArgumentError("unit has more inputs than the manager has variables");
    vars.resize(arity);
    for (std::size_t i = 0; i < arity; ++i) vars[i] = VarId{static_cast<std::uint32_t>(i)};
  } else {
    if (inputs.size() != arity) throw ArgumentError("input mapping length differs from unit arity");
    vars.assign(inputs.begin(), inputs.end());
  }
  std::vector<std::size_t> perm(arity);
  for (std::size_t i = 0; i < arity; ++i) perm[i] = i;
  std::vector<std::size_t> levels(arity);
  for (std::size_t i = 0; i < arity; ++i) levels[i] = mgr.level(vars[i]);
  std::sort(perm.begin(), perm.end(), [&](std::size_t a, std::size_t b) { return levels[a] < levels[b]; });
  for (std::size_t i = 1; i < arity; ++i) {
    if (levels[perm[i]] == levels[perm[i - 1]]) throw ArgumentError("input mapping repeats a variable");
  }
  return perm;
}

template <typename Num>
struct Bounds {
  std::vector<Num> lo;  // smallest achievable sum of layers j..n-1
  std::vector<Num> hi;  // largest achievable sum of layers j..n-1
};

template <typename Num>
Bounds<Num> suffix_bounds(const std::vector<Num>& ordered_weights) {
  const auto n = ordered_weights.size();
  Bounds<Num> b{std::vector<Num>(n + 1, Num(0)), std::vector<Num>(n + 1, Num(0))};
  for (std::size_t j = n; j-- > 0;) {
    const Num& w = ordered_weights[j];
    b.lo[j] = b.lo[j + 1] + (w < 0 ? w : Num(0));
    b.hi[j] = b.hi[j + 1] + (w > 0 ? w : Num(0));
  }
  return b;
}

}  // namespace

bool LinearThresholdUnit::fires(std::span<const std::uint8_t> x) const {
  if (x.size() != weights.size()) throw ArgumentError("input width differs from unit arity");
  return kernels::masked_sum(weights, x) + bias >= 0.0;
}

bool LinearThresholdUnit::fires_exact(std::span<const std::uint8_t> x) const {
  if (x.size() != weights.size()) throw ArgumentError("input width differs from unit arity");
  mpq_class sum(bias);
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i]) sum += mpq_class(weights[i]);
  }
  return sum >= 0;
}

std::int64_t IntThresholdUnit::magnitude() const {
  std::int64_t w = checked_abs(threshold);
  for (auto v : weights) w = checked_add(w, checked_abs(v));
  return w;
}

bool IntThresholdUnit::fires(std::span<const std::uint8_t> x) const {
  if (x.size() != weights.size()) throw ArgumentError("input width differs from unit arity");
  return kernels::masked_sum(std::span<const std::int64_t>(weights), x) >= threshold;
}

RealThresholdUnit to_threshold_form(const LinearThresholdUnit& u) { return {u.weights, -u.bias}; }

IntThresholdUnit quantize(const LinearThresholdUnit& u, int digits, Rounding mode) {
  if (digits < 0 || digits > 9) throw ArgumentError("digits must lie in [0, 9]");
  const double scale = std::pow(10.0, digits);
  IntThresholdUnit q;
  q.weights.reserve(u.weights.size());
  for (double w : u.weights) q.weights.push_back(scale_value(w, scale, mode));
  q.threshold = scale_value(-u.bias, scale, mode);
  (void)q.magnitude();
  return q;
}

NodeRef compile_pseudo(Manager& mgr, const IntThresholdUnit& u, std::span<const VarId> inputs,
                       PseudoCompileStats* stats) {
  const auto n = u.arity();
  const std::int64_t magnitude = u.magnitude();
  std::vector<VarId> vars;
  const auto perm = visit_order(mgr, n, inputs, vars);

  std::vector<std::int64_t> w(n);
  for (std::size_t j = 0; j < n; ++j) w[j] = u.weights[perm[j]];
  const auto bounds = suffix_bounds(w);

  // Residual outside [lo, hi] of the remaining layers is already decided.
  auto resolved = [&](std::size_t layer, std::int64_t t) -> std::optional<bool> {
    if (t <= bounds.lo[layer]) return true;
    if (t > bounds.hi[layer]) return false;
    return std::nullopt;
  };

  const auto cell_budget = mgr.node_budget();
  std::size_t cells = 0;
  std::vector<std::vector<std::int64_t>> layers(n + 1);
  if (!resolved(0, u.threshold)) layers[0].push_back(u.threshold);
  for (std::size_t j = 0; j < n; ++j) {
    cells += layers[j].size();
    if (cell_budget && cells > *cell_budget) {
      throw BudgetExceeded("DP cell budget of " + std::to_string(*cell_budget) + " exhausted");
    }
    auto& next = layers[j + 1];
    for (auto t : layers[j]) {
      for (auto child : {t, t - w[j]}) {
        if (!resolved(j + 1, child)) next.push_back(child);
      }
    }
    std::sort(next.begin(), next.end());
    next.erase(std::unique(next.begin(), next.end()), next.end());
  }

  std::vector<NodeRef> below;  // nodes of layer j + 1, parallel to layers[j + 1]
  for (std::size_t j = n; j-- > 0;) {
    const auto& next = layers[j + 1];
    auto lookup = [&](std::int64_t t) {
      if (auto r = resolved(j + 1, t)) return mgr.constant(*r);
      const auto it = std::lower_bound(next.begin(), next.end(), t);
      return below[static_cast<std::size_t>(it - next.begin())];
    };
    std::vector<NodeRef> here;
    here.reserve(layers[j].size());
    for (auto t : layers[j]) here.push_back(mgr.make_node(vars[perm[j]], lookup(t), lookup(t - w[j])));
    below = std::move(here);
  }
  const NodeRef root = layers[0].empty() ? mgr.constant(*resolved(0, u.threshold)) : below.front();

  const auto nodes = mgr.node_count(root);
  const auto bound = static_cast<long double>(n) * (2.0L * static_cast<long double>(magnitude) + 1.0L) + 2.0L;
  if (static_cast<long double>(nodes) > bound) {
    throw std::logic_error("compile_pseudo produced more nodes than the n(2W+1)+2 bound");
  }
  if (stats != nullptr) *stats = {cells, nodes};
  return root;
}

NodeRef compile_exact(Manager& mgr, const RealThresholdUnit& u, std::span<const VarId> inputs, std::size_t cap) {
  const auto n = u.arity();
  if (n > cap) {
    throw ArgumentError("compile_exact: arity " + std::to_string(n) + " exceeds cap " + std::to_string(cap));
  }
  std::vector<VarId> vars;
  const auto perm = visit_order(mgr, n, inputs, vars);
  std::vector<mpq_class> w(n);
  for (std::size_t j = 0; j < n; ++j) {
    if (!std::isfinite(u.weights[perm[j]])) throw ArgumentError("non-finite weight");
    w[j] = mpq_class(u.weights[perm[j]]);
  }
  if (!std::isfinite(u.threshold)) throw ArgumentError("non-finite threshold");
  const auto bounds = suffix_bounds(w);

  std::vector<std::map<mpq_class, NodeRef>> memo(n + 1);
  auto rec = [&](auto&& self, std::size_t layer, const mpq_class& t) -> NodeRef {
    if (t <= bounds.lo[layer]) return mgr.top();
    if (t > bounds.hi[layer]) return mgr.bottom();
    if (auto it = memo[layer].find(t); it != memo[layer].end()) return it->second;
    const NodeRef lo = self(self, layer + 1, t);
    const NodeRef hi = self(self, layer + 1, mpq_class(t - w[layer]));
    const NodeRef r = mgr.make_node(vars[perm[layer]], lo, hi);
    memo[layer].emplace(t, r);
    return r;
  };
  return rec(rec, 0, mpq_class(u.threshold));
}

NodeRef compile_exact(Manager& mgr, const LinearThresholdUnit& u, std::span<const VarId> inputs, std::size_t cap) {
  return compile_exact(mgr, to_threshold_form(u), inputs, cap);
}

NodeRef compile_exact(Manager& mgr, const IntThresholdUnit& u, std::span<const VarId> inputs, std::size_t cap) {
  RealThresholdUnit r;
  for (auto v : u.weights) {
    if (std::fabs(static_cast<double>(v)) > kMaxExactInteger) throw ArgumentError("weight not exact as double");
    r.weights.push_back(static_cast<double>(v));
  }
  r.threshold = static_cast<double>(u.threshold);
  return compile_exact(mgr, r, inputs, cap);
}

// ---------------------------------------------------------------------------
// Text format

NeuronFile read_neuron(std::istream& in) {
  std::optional<std::vector<std::string>> weights;
  std::optional<std::string> bias, threshold;
  std::string line;
  while (std::getline(in, line)) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto colon = line.find(':');
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    if (colon == std::string::npos) throw ParseError("neuron: expected 'key: values' in '" + line + "'");
    std::string key = line.substr(0, colon);
    key.erase(0, key.find_first_not_of(" \t"));
    key.erase(key.find_last_not_of(" \t") + 1);
    std::istringstream values(line.substr(colon + 1));
    std::vector<std::string> tokens;
    for (std::string tok; values >> tok;) tokens.push_back(tok);
    if (key == "weights") {
      weights = tokens;
    } else if (key == "bias" || key == "threshold") {
      if (tokens.size() != 1) throw ParseError("neuron: '" + key + "' takes exactly one value");
      (key == "bias" ? bias : threshold) = tokens.front();
    } else {
      throw ParseError("neuron: unknown key '" + key + "'");
    }
  }
  if (!weights) throw ParseError("neuron: missing 'weights:' line");
  if (bias.has_value() == threshold.has_value()) {
    throw ParseError("neuron: exactly one of 'bias:' or 'threshold:' is required");
  }

  auto parse_real = [](const std::string& s) {
    std::size_t used = 0;
    double v = 0;
    try {
      v = std::stod(s, &used);
    } catch (const std::exception&) {
      throw ParseError("neuron: bad number '" + s + "'");
    }
    if (used != s.size() || !std::isfinite(v)) throw ParseError("neuron: bad number '" + s + "'");
    return v;
  };
  auto parse_int = [](const std::string& s) {
    std::size_t used = 0;
    long long v = 0;
    try {
      v = std::stoll(s, &used);
    } catch (const std::exception&) {
      throw ParseError("neuron: bad integer '" + s + "'");
    }
    if (used != s.size()) throw ParseError("neuron: bad integer '" + s + "'");
    return static_cast<std::int64_t>(v);
  };

  if (bias) {
    LinearThresholdUnit u;
    for (const auto& t : *weights) u.weights.push_back(parse_real(t));
    u.bias = parse_real(*bias);
    return u;
  }
  IntThresholdUnit u;
  for (const auto& t : *weights) u.weights.push_back(parse_int(t));
  u.threshold = parse_int(*threshold);
  return u;
}

NeuronFile load_neuron_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  return read_neuron(in);
}

void write_neuron(std::ostream& out, const LinearThresholdUnit& u) {
  out << std::setprecision(17) << "weights:";
  for (double w : u.weights) out << ' ' << w;
  out << "\nbias: " << u.bias << '\n';
}

void write_neuron(std::ostream& out, const IntThresholdUnit& u) {
  out << "weights:";
  for (auto w : u.weights) out << ' ' << w;
  out << "\nthreshold: " << u.threshold << '\n';
}

}  // namespace nnbdd
