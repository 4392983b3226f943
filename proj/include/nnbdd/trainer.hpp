#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <gmpxx.h>

#include "nnbdd/bdd.hpp"
#include "nnbdd/neuron.hpp"

namespace nnbdd {

/// Rows of binary features with a 0/1 label.
class LabeledDataset {
 public:
  LabeledDataset() = default;
  explicit LabeledDataset(std::size_t width) : width_(width) {}

  /// Throws ArgumentError on a width mismatch.
  void add(Instance row, bool label);

  std::size_t width() const { return width_; }
  std::size_t size() const { return rows_.size(); }
  bool empty() const { return rows_.empty(); }
  const std::vector<Instance>& rows() const { return rows_; }
  bool label(std::size_t i) const { return labels_[i] != 0; }

 private:
  std::size_t width_ = 0;
  std::vector<Instance> rows_;
  std::vector<std::uint8_t> labels_;
};

/// CSV, one row per line: `bit,bit,...,bit,label`.
LabeledDataset read_dataset_csv(std::istream& in);
LabeledDataset load_dataset_file(const std::string& path);
void write_dataset_csv(std::ostream& out, const LabeledDataset& data);

/// Rows drawn uniformly, labelled by a hidden random threshold unit; rows
/// within `margin` of the hidden boundary are rejected, so the set is
/// linearly separable with that margin.
LabeledDataset synthetic_separable(std::size_t features, std::size_t rows, std::uint64_t seed, double margin = 0.5);

struct TrainConfig {
  double learning_rate = 0.1;
  std::size_t epochs = 50;
  std::size_t batch_size = 16;
  std::uint64_t seed = 1;
  double l2 = 0.0;

  /// Throws ArgumentError for non-positive rate, epochs or batch size.
  void validate() const;
};

double sigmoid(double z);

/// Mini-batch gradient descent on the sigmoid cross-entropy loss. The bias is
/// trained as the weight of an always-on feature and returned separately; the
/// returned unit uses step semantics. Deterministic for a given seed.
LinearThresholdUnit train_neuron(const LabeledDataset& data, const TrainConfig& cfg);

mpq_class accuracy(const LinearThresholdUnit& u, const LabeledDataset& data);
mpq_class accuracy(const IntThresholdUnit& u, const LabeledDataset& data);
mpq_class accuracy(const Manager& mgr, NodeRef f, const LabeledDataset& data);

enum class SweepStatus { Ok, BudgetExceeded, Overflow };

struct SweepRow {
  int digits = 0;
  SweepStatus status = SweepStatus::Ok;
  std::optional<mpq_class> accuracy;  ///< empty on failure
  std::size_t nodes = 0;
  std::size_t cells = 0;
};

struct SweepOptions {
  Rounding rounding = Rounding::Truncate;
  /// Node and DP-cell budget for each compilation.
  std::optional<std::size_t> node_budget;
};

/// For each digit count: quantize, compile, then measure accuracy of the
/// compiled diagram on `data`. Failures become rows, never exceptions.
std::vector<SweepRow> precision_sweep(const LinearThresholdUnit& u, const LabeledDataset& data,
                                      std::span<const int> digits, const SweepOptions& options = {});

std::string_view sweep_status_label(SweepStatus s);
/// CSV with header `digits,accuracy,nodes,status`.
void write_sweep_csv(std::ostream& out, std::span<const SweepRow> rows);

}  // namespace nnbdd
