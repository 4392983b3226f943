#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "nnbdd/bdd.hpp"

namespace nnbdd {

/// Step-activated neuron: fires iff sum_i w_i * x_i + bias >= 0.
struct LinearThresholdUnit {
  std::vector<double> weights;
  double bias = 0.0;

  std::size_t arity() const { return weights.size(); }
  /// Double-precision evaluation through the SIMD kernels.
  bool fires(std::span<const std::uint8_t> x) const;
  /// Exact evaluation over the rationals denoted by the stored doubles.
  bool fires_exact(std::span<const std::uint8_t> x) const;
};

/// Threshold classifier with real parameters: fires iff sum w_i * x_i >= threshold.
struct RealThresholdUnit {
  std::vector<double> weights;
  double threshold = 0.0;

  std::size_t arity() const { return weights.size(); }
};

/// Threshold classifier with integer parameters: fires iff sum w_i * x_i >= threshold.
struct IntThresholdUnit {
  std::vector<std::int64_t> weights;
  std::int64_t threshold = 0;

  std::size_t arity() const { return weights.size(); }
  /// |threshold| + sum |w_i|; throws QuantizationError if it overflows int64.
  std::int64_t magnitude() const;
  bool fires(std::span<const std::uint8_t> x) const;

  bool operator==(const IntThresholdUnit&) const = default;
};

enum class Rounding { Truncate, Nearest };

/// Folds the bias into a threshold T = -bias.
RealThresholdUnit to_threshold_form(const LinearThresholdUnit& u);

/// Scales weights and threshold by 10^digits and rounds each (truncation is
/// toward zero). Values within 1e-9 (relative) of an integer after scaling are
/// snapped to it first, so decimal parameters such as 0.29 scale exactly.
/// Throws ArgumentError for digits outside [0, 9] and QuantizationError if a
/// scaled value or the magnitude leaves the exactly-representable range.
IntThresholdUnit quantize(const LinearThresholdUnit& u, int digits, Rounding mode = Rounding::Truncate);

struct PseudoCompileStats {
  std::size_t cells = 0;  ///< DP cells materialized (one per distinct residual per layer)
  std::size_t nodes = 0;  ///< decision nodes in the reduced result
};

/// Pseudo-polynomial compilation of an integer threshold unit.
///
/// Cells are keyed by (layer, residual threshold t). The root cell has t = T;
/// setting the layer's input to 1 moves to t - w, to 0 keeps t. A cell whose
/// residual is at most the smallest achievable remaining sum is TRUE, one
/// above the largest achievable remaining sum is FALSE; these are resolved
/// without materializing a cell. Inputs are visited in the manager's level
/// order of `inputs` (defaults to variables 0..arity-1).
///
/// If the manager has a node budget, it also caps the number of cells.
/// Postcondition (checked): nodes <= arity * (2W + 1) + 2.
NodeRef compile_pseudo(Manager& mgr, const IntThresholdUnit& u, std::span<const VarId> inputs = {},
                       PseudoCompileStats* stats = nullptr);

inline constexpr std::size_t kExactCompileCap = 20;

/// Memoized Shannon expansion over exact rational residual thresholds. Meant
/// as an oracle for small arities; throws ArgumentError above `cap` inputs.
NodeRef compile_exact(Manager& mgr, const RealThresholdUnit& u, std::span<const VarId> inputs = {},
                      std::size_t cap = kExactCompileCap);
NodeRef compile_exact(Manager& mgr, const LinearThresholdUnit& u, std::span<const VarId> inputs = {},
                      std::size_t cap = kExactCompileCap);
NodeRef compile_exact(Manager& mgr, const IntThresholdUnit& u, std::span<const VarId> inputs = {},
                      std::size_t cap = kExactCompileCap);

// Neuron text format:
//   weights: w1 w2 ... wn
//   bias: b            (real unit)
// or
//   weights: w1 ... wn
//   threshold: T       (integer unit)
using NeuronFile = std::variant<LinearThresholdUnit, IntThresholdUnit>;

NeuronFile read_neuron(std::istream& in);
NeuronFile load_neuron_file(const std::string& path);
void write_neuron(std::ostream& out, const LinearThresholdUnit& u);
void write_neuron(std::ostream& out, const IntThresholdUnit& u);

}  // namespace nnbdd
