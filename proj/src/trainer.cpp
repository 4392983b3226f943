#include "nnbdd/trainer.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>

#include "nnbdd/error.hpp"
#include "nnbdd/kernels.hpp"

namespace nnbdd {

namespace {

// Uniform double in [0, 1) from the top 53 bits; portable across standard libraries.
double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

void shuffle(std::vector<std::size_t>& v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng() % i]);
}

mpq_class fraction(std::size_t hits, std::size_t total) {
  if (total == 0) throw ArgumentError("accuracy of an empty dataset");
  mpq_class q(static_cast<unsigned long>(hits), static_cast<unsigned long>(total));
  q.canonicalize();
  return q;
}

}  // namespace

void LabeledDataset::add(Instance row, bool label) {
  if (rows_.empty() && width_ == 0) width_ = row.size();
  if (row.size() != width_) {
    throw ArgumentError("row has " + std::to_string(row.size()) + " features, dataset has " + std::to_string(width_));
  }
  rows_.push_back(std::move(row));
  labels_.push_back(label ? 1 : 0);
}

LabeledDataset read_dataset_csv(std::istream& in) {
  LabeledDataset data;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::vector<std::uint8_t> cells;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) {
      cell.erase(0, cell.find_first_not_of(" \t"));
      cell.erase(cell.find_last_not_of(" \t") + 1);
      if (cell != "0" && cell != "1") {
        throw ParseError("dataset line " + std::to_string(lineno) + ": non-binary value '" + cell + "'");
      }
      cells.push_back(cell == "1" ? 1 : 0);
    }
    if (cells.size() < 2) throw ParseError("dataset line " + std::to_string(lineno) + ": need features and a label");
    const bool label = cells.back() != 0;
    cells.pop_back();
    try {
      data.add(Instance(std::move(cells)), label);
    } catch (const ArgumentError& e) {
      throw ParseError("dataset line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return data;
}

LabeledDataset load_dataset_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  return read_dataset_csv(in);
}

void write_dataset_csv(std::ostream& out, const LabeledDataset& data) {
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (auto b : data.rows()[i].bits()) out << int(b) << ',';
    out << (data.label(i) ? 1 : 0) << '\n';
  }
}

LabeledDataset synthetic_separable(std::size_t features, std::size_t rows, std::uint64_t seed, double margin) {
  std::mt19937_64 rng(seed);
  std::vector<double> hidden(features);
  double total = 0.0;
  for (auto& w : hidden) {
    w = 2.0 * unit_uniform(rng) - 1.0;
    total += w;
  }
  const double threshold = total / 2.0;
  LabeledDataset data(features);
  std::vector<std::uint8_t> bits(features);
  while (data.size() < rows) {
    double score = 0.0;
    for (std::size_t i = 0; i < features; ++i) {
      bits[i] = static_cast<std::uint8_t>(rng() & 1U);
      if (bits[i]) score += hidden[i];
    }
    if (std::fabs(score - threshold) < margin) continue;
    data.add(Instance(bits), score >= threshold);
  }
  return data;
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ArgumentError("learning rate must be positive");
  if (epochs == 0) throw ArgumentError("epochs must be positive");
  if (batch_size == 0) throw ArgumentError("batch size must be positive");
  if (l2 < 0.0) throw ArgumentError("l2 penalty must be non-negative");
}

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

LinearThresholdUnit train_neuron(const LabeledDataset& data, const TrainConfig& cfg) {
  cfg.validate();
  if (data.empty()) throw ArgumentError("cannot train on an empty dataset");
  const auto n = data.width();
  const auto dim = n + 1;

  // Each row with a trailing always-on bit for the bias.
  std::vector<std::uint8_t> augmented(data.size() * dim);
  for (std::size_t r = 0; r < data.size(); ++r) {
    const auto bits = data.rows()[r].bits();
    std::copy(bits.begin(), bits.end(), augmented.begin() + static_cast<std::ptrdiff_t>(r * dim));
    augmented[r * dim + n] = 1;
  }
  auto row = [&](std::size_t r) { return std::span<const std::uint8_t>(augmented.data() + r * dim, dim); };

  std::mt19937_64 rng(cfg.seed);
  std::vector<double> w(dim);
  for (auto& v : w) v = 0.02 * unit_uniform(rng) - 0.01;

  std::vector<std::size_t> idx(data.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::vector<double> grad(dim);
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle(idx, rng);
    for (std::size_t start = 0; start < idx.size(); start += cfg.batch_size) {
      const auto stop = std::min(idx.size(), start + cfg.batch_size);
      std::fill(grad.begin(), grad.end(), 0.0);
      for (std::size_t b = start; b < stop; ++b) {
        const auto r = idx[b];
        const double p = sigmoid(kernels::masked_sum(w, row(r)));
        kernels::masked_axpy(grad, row(r), p - (data.label(r) ? 1.0 : 0.0));
      }
      const double inv = 1.0 / static_cast<double>(stop - start);
      for (std::size_t j = 0; j < dim; ++j) {
        const double penalty = j < n ? cfg.l2 * w[j] : 0.0;
        w[j] -= cfg.learning_rate * (grad[j] * inv + penalty);
      }
    }
  }
  LinearThresholdUnit u;
  u.bias = w[n];
  w.pop_back();
  u.weights = std::move(w);
  return u;
}

mpq_class accuracy(const LinearThresholdUnit& u, const LabeledDataset& data) {
  std::size_t hits = 0;
  for (std::size_t i = 0; i < data.size(); ++i) hits += u.fires(data.rows()[i].bits()) == data.label(i);
  return fraction(hits, data.size());
}

mpq_class accuracy(const IntThresholdUnit& u, const LabeledDataset& data) {
  std::size_t hits = 0;
  for (std::size_t i = 0; i < data.size(); ++i) hits += u.fires(data.rows()[i].bits()) == data.label(i);
  return fraction(hits, data.size());
}

mpq_class accuracy(const Manager& mgr, NodeRef f, const LabeledDataset& data) {
  std::size_t hits = 0;
  for (std::size_t i = 0; i < data.size(); ++i) hits += mgr.evaluate(f, data.rows()[i]) == data.label(i);
  return fraction(hits, data.size());
}

std::vector<SweepRow> precision_sweep(const LinearThresholdUnit& u, const LabeledDataset& data,
                                      std::span<const int> digits, const SweepOptions& options) {
  if (data.width() != u.arity()) throw ArgumentError("dataset width differs from unit arity");
  std::vector<SweepRow> rows;
  for (int d : digits) {
    SweepRow row;
    row.digits = d;
    try {
      const auto q = quantize(u, d, options.rounding);
      Manager mgr(u.arity());
      mgr.set_node_budget(options.node_budget);
      PseudoCompileStats stats;
      const NodeRef f = compile_pseudo(mgr, q, {}, &stats);
      row.nodes = stats.nodes;
      row.cells = stats.cells;
      row.accuracy = accuracy(mgr, f, data);
    } catch (const BudgetExceeded&) {
      row.status = SweepStatus::BudgetExceeded;
    } catch (const QuantizationError&) {
      row.status = SweepStatus::Overflow;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string_view sweep_status_label(SweepStatus s) {
  switch (s) {
    case SweepStatus::Ok:
      return "ok";
    case SweepStatus::BudgetExceeded:
      return "budget";
    case SweepStatus::Overflow:
      return "overflow";
  }
  return "ok";
}

void write_sweep_csv(std::ostream& out, std::span<const SweepRow> rows) {
  out << "digits,accuracy,nodes,status\n";
  for (const auto& r : rows) {
    out << r.digits << ',';
    if (r.accuracy) out << std::setprecision(6) << std::fixed << r.accuracy->get_d() << std::defaultfloat;
    out << ',';
    if (r.status == SweepStatus::Ok) out << r.nodes;
    out << ',' << sweep_status_label(r.status) << '\n';
  }
}

}  // namespace nnbdd
