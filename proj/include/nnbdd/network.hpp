#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "nnbdd/bdd.hpp"
#include "nnbdd/neuron.hpp"

namespace nnbdd {

/// Height x width x channels. Wires are flattened as (row * w + col) * c + channel.
struct Shape {
  std::size_t h = 0;
  std::size_t w = 0;
  std::size_t c = 1;

  std::size_t size() const { return h * w * c; }
  bool operator==(const Shape&) const = default;
};

/// Convolution followed by a step. Each filter is a threshold unit over a
/// kh x kw x c_in window, weights laid out as (ky * kw + kx) * c_in + channel.
/// No padding: windows start at multiples of the stride and must fit.
struct ConvStep {
  std::size_t kh = 0;
  std::size_t kw = 0;
  std::size_t stride = 1;
  std::vector<LinearThresholdUnit> filters;
};

/// Max-pooling over binary wires, i.e. a disjunction per window and channel.
struct MaxPoolOr {
  std::size_t kh = 0;
  std::size_t kw = 0;
  std::size_t stride = 1;
};

/// Fully connected step layer over the flattened previous layer.
struct DenseStep {
  std::vector<LinearThresholdUnit> neurons;
};

using Layer = std::variant<ConvStep, MaxPoolOr, DenseStep>;

struct NetworkSpec {
  Shape input;  // channels fixed at 1
  std::vector<Layer> layers;
  std::size_t outputs = 0;
  /// Non-fatal findings from validation, e.g. pixels no window covers.
  std::vector<std::string> warnings;

  std::size_t num_inputs() const { return input.size(); }
  /// shapes()[0] is the input, shapes()[i + 1] the output of layers[i].
  std::vector<Shape> shapes() const;
};

/// Parses and validates a JSON model. Shape errors name the offending layer.
/// When `strict` is set, windows that leave pixels uncovered are errors
/// instead of warnings.
NetworkSpec load_spec(const std::string& json_text, bool strict = false);
NetworkSpec load_spec_file(const std::string& path, bool strict = false);
/// Re-runs validation; fills `warnings`. Throws ShapeError.
void validate(NetworkSpec& spec, bool strict = false);
std::string spec_to_json(const NetworkSpec& spec);

/// Input pixels that no output depends on structurally (never inside any
/// window feeding an output).
std::vector<std::size_t> structurally_unused_inputs(const NetworkSpec& spec);

/// Reference bit-level evaluator. Without `digits`, every neuron is evaluated
/// exactly over its real parameters; with `digits`, every neuron is first
/// quantized and evaluated in integer arithmetic.
class Evaluator {
 public:
  explicit Evaluator(const NetworkSpec& spec, std::optional<int> digits = std::nullopt,
                     Rounding mode = Rounding::Truncate);

  std::vector<std::uint8_t> run(const Instance& x) const;

 private:
  const NetworkSpec* spec_;
  std::vector<Shape> shapes_;
  std::optional<int> digits_;
  std::vector<std::vector<IntThresholdUnit>> quantized_;  // per layer
};

std::vector<std::uint8_t> forward_eval(const NetworkSpec& spec, const Instance& x,
                                       std::optional<int> digits = std::nullopt,
                                       Rounding mode = Rounding::Truncate);

enum class OrderPolicy { RowMajor, ColumnMajor, Explicit };

struct NetworkCompileOptions {
  /// nullopt compiles every neuron exactly; otherwise quantize then compile
  /// with the pseudo-polynomial construction.
  std::optional<int> digits;
  Rounding rounding = Rounding::Truncate;
  OrderPolicy order = OrderPolicy::RowMajor;
  /// Used with OrderPolicy::Explicit: order[level] = input pixel index.
  std::vector<VarId> explicit_order;
  /// Reverse the placeholder order used when compiling each neuron locally.
  bool reverse_local_order = false;
  /// Node budget applied to the network manager and to every local manager.
  std::optional<std::size_t> node_budget;
};

struct CompiledNetwork {
  std::unique_ptr<Manager> manager;
  std::vector<NodeRef> outputs;
  std::size_t neurons_compiled = 0;   ///< distinct local neuron diagrams
  std::size_t compositions = 0;       ///< compose calls actually performed
  std::size_t composition_hits = 0;   ///< wire-level cache hits
};

/// Bottom-up compilation: each neuron is compiled once over placeholder
/// variables and composed with the diagrams of its input wires; max-pool
/// wires are disjunctions. Throws BudgetExceeded with a progress report.
CompiledNetwork compile_network(const NetworkSpec& spec, const NetworkCompileOptions& options = {});

std::vector<VarId> input_order(const NetworkSpec& spec, const NetworkCompileOptions& options);

}  // namespace nnbdd
