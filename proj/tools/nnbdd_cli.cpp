// nnbdd: compile threshold neurons and binary networks into OBDDs and query them.
//
// Exit status: 0 success, 1 usage, 2 input error, 3 node budget exceeded.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "nnbdd/analysis.hpp"
#include "nnbdd/bdd_io.hpp"
#include "nnbdd/error.hpp"
#include "nnbdd/image.hpp"
#include "nnbdd/network.hpp"
#include "nnbdd/neuron.hpp"
#include "nnbdd/trainer.hpp"

using namespace nnbdd;

namespace {

Rounding parse_rounding(const std::string& s) { return s == "nearest" ? Rounding::Nearest : Rounding::Truncate; }

Polarity parse_polarity(const std::string& s) {
  if (s == "pos") return Polarity::Positive;
  if (s == "neg") return Polarity::Negative;
  return Polarity::Both;
}

std::string decimal(const mpq_class& q, int digits = 10) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, q.get_d());
  return buf;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  return out;
}

Instance image_for(const LoadedObdd& d, const Bitmap& img) {
  if (img.pixels.size() != d.manager.num_vars()) {
    throw ArgumentError("image has " + std::to_string(img.pixels.size()) + " pixels, diagram has " +
                        std::to_string(d.manager.num_vars()) + " variables");
  }
  return img.pixels;
}

void check_grid(const Manager& mgr, std::size_t rows, std::size_t cols) {
  if (rows * cols != mgr.num_vars()) {
    throw ArgumentError("grid " + std::to_string(rows) + "x" + std::to_string(cols) + " does not match " +
                        std::to_string(mgr.num_vars()) + " variables");
  }
}

std::vector<VarId> parse_order(const std::string& text, std::size_t n) {
  std::vector<VarId> order;
  std::stringstream ss(text);
  for (std::string cell; std::getline(ss, cell, ',');) {
    try {
      order.push_back(VarId{static_cast<std::uint32_t>(std::stoul(cell))});
    } catch (const std::exception&) {
      throw ArgumentError("bad --order entry '" + cell + "'");
    }
  }
  if (order.size() != n) throw ArgumentError("--order must list all " + std::to_string(n) + " inputs");
  return order;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Compile threshold neurons and binary networks into OBDDs and query them."};
  app.require_subcommand(1);

  // compile-neuron
  std::string neuron_path, obdd_out, order_text, round_mode = "truncate";
  std::optional<int> digits;
  auto* cn = app.add_subcommand("compile-neuron", "Neuron file to OBDD file");
  cn->add_option("neuron", neuron_path, "neuron file")->required();
  cn->add_option("-o,--out", obdd_out, "output OBDD file")->required();
  cn->add_option("--digits", digits, "quantize to this many decimal digits, then compile pseudo-polynomially");
  cn->add_option("--round", round_mode, "truncate or nearest")->check(CLI::IsMember({"truncate", "nearest"}));
  cn->add_option("--order", order_text, "comma-separated input indices, first is the top level");

  // compile-net
  std::string model_path, out_prefix, net_order = "row";
  std::optional<std::size_t> budget;
  bool strict = false;
  auto* cnet = app.add_subcommand("compile-net", "Network model to one OBDD file per output");
  cnet->add_option("model", model_path, "JSON model file")->required();
  cnet->add_option("-o,--out-prefix", out_prefix, "outputs are written to <prefix><i>.obdd")->required();
  cnet->add_option("--digits", digits, "quantize every neuron to this many digits");
  cnet->add_option("--round", round_mode, "truncate or nearest")->check(CLI::IsMember({"truncate", "nearest"}));
  cnet->add_option("--order", net_order, "row or col")->check(CLI::IsMember({"row", "col"}));
  cnet->add_option("--budget", budget, "node budget");
  cnet->add_flag("--strict", strict, "treat uncovered pixels as errors");

  // eval
  std::string obdd_path, image_path;
  auto* ev = app.add_subcommand("eval", "Evaluate an OBDD on a PBM image");
  ev->add_option("obdd", obdd_path)->required();
  ev->add_option("image", image_path)->required();

  // robustness
  std::string polarity = "both", dataset_path;
  auto* rb = app.add_subcommand("robustness", "Robustness queries");
  rb->require_subcommand(1);
  auto* rb_inst = rb->add_subcommand("instance", "Flips needed to change the label of an image, or a dataset mean");
  rb_inst->add_option("obdd", obdd_path)->required();
  rb_inst->add_option("image", image_path, "PBM image");
  rb_inst->add_option("--dataset", dataset_path, "CSV dataset; prints the mean over its rows");
  auto* rb_model = rb->add_subcommand("model", "Exact model robustness");
  auto* rb_max = rb->add_subcommand("max", "Maximum robustness");
  auto* rb_hist = rb->add_subcommand("hist", "CSV k,count,proportion");
  for (auto* s : {rb_model, rb_max, rb_hist}) {
    s->add_option("obdd", obdd_path)->required();
    s->add_option("--polarity", polarity, "pos, neg or both")->check(CLI::IsMember({"pos", "neg", "both"}));
  }

  // explain
  std::string fill_path, fool_out;
  auto* ex = app.add_subcommand("explain", "Minimum sufficient subset of an image's pixels");
  ex->add_option("obdd", obdd_path)->required();
  ex->add_option("image", image_path)->required();
  ex->add_option("--fool-fill", fill_path, "PBM whose pixels fill in everything outside the explanation");
  ex->add_option("--fool-out", fool_out, "where to write the completed PBM")->needs("--fool-fill");

  // marginals / unate
  std::size_t rows = 0, cols = 0;
  std::string pgm_out;
  auto* mg = app.add_subcommand("marginals", "CSV var,row,col,marginal of each pixel given output 1");
  auto* un = app.add_subcommand("unate", "CSV var,row,col,unateness");
  for (auto* s : {mg, un}) {
    s->add_option("obdd", obdd_path)->required();
    s->add_option("--rows", rows)->required();
    s->add_option("--cols", cols)->required();
    s->add_option("--pgm", pgm_out, "also write a rescaled PGM heatmap");
  }

  // train
  std::string data_path, neuron_out;
  TrainConfig cfg;
  auto* tr = app.add_subcommand("train", "Train a threshold neuron on a CSV dataset");
  tr->add_option("dataset", data_path)->required();
  tr->add_option("-o,--out", neuron_out, "neuron file")->required();
  tr->add_option("--lr", cfg.learning_rate);
  tr->add_option("--epochs", cfg.epochs);
  tr->add_option("--batch", cfg.batch_size);
  tr->add_option("--seed", cfg.seed);
  tr->add_option("--l2", cfg.l2);

  // sweep
  std::vector<int> sweep_digits{0, 1, 2, 3, 4, 5};
  std::string csv_out;
  auto* sw = app.add_subcommand("sweep", "Accuracy and node count of a neuron per precision");
  sw->add_option("neuron", neuron_path)->required();
  sw->add_option("dataset", data_path)->required();
  sw->add_option("--digits", sweep_digits, "digit counts to try")->delimiter(',');
  sw->add_option("--budget", budget, "node budget per compilation");
  sw->add_option("--round", round_mode, "truncate or nearest")->check(CLI::IsMember({"truncate", "nearest"}));
  sw->add_option("-o,--out", csv_out, "CSV file (default stdout)");

  // stats
  auto* st = app.add_subcommand("stats", "Node count, support size and model count");
  st->add_option("obdd", obdd_path)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*cn) {
      const auto file = load_neuron_file(neuron_path);
      const std::size_t n = std::visit([](const auto& u) { return u.arity(); }, file);
      Manager mgr = order_text.empty() ? Manager(n) : Manager(n, parse_order(order_text, n));
      NodeRef f;
      if (const auto* real = std::get_if<LinearThresholdUnit>(&file)) {
        f = digits ? compile_pseudo(mgr, quantize(*real, *digits, parse_rounding(round_mode)))
                   : compile_exact(mgr, *real);
      } else {
        if (digits) throw ArgumentError("--digits applies to real-valued neurons only");
        f = compile_pseudo(mgr, std::get<IntThresholdUnit>(file));
      }
      save_obdd_file(obdd_out, mgr, f);
      std::cout << "nodes " << mgr.node_count(f) << "\n";
    } else if (*cnet) {
      const auto spec = load_spec_file(model_path, strict);
      for (const auto& w : spec.warnings) std::cerr << "warning: " << w << "\n";
      NetworkCompileOptions opts;
      opts.digits = digits;
      opts.rounding = parse_rounding(round_mode);
      opts.order = net_order == "col" ? OrderPolicy::ColumnMajor : OrderPolicy::RowMajor;
      opts.node_budget = budget;
      const auto net = compile_network(spec, opts);
      for (std::size_t i = 0; i < net.outputs.size(); ++i) {
        const auto path = out_prefix + std::to_string(i) + ".obdd";
        save_obdd_file(path, *net.manager, net.outputs[i]);
        std::cout << path << " nodes " << net.manager->node_count(net.outputs[i]) << "\n";
      }
    } else if (*ev) {
      const auto d = load_obdd_file(obdd_path);
      std::cout << (d.manager.evaluate(d.root, image_for(d, load_pbm_file(image_path))) ? 1 : 0) << "\n";
    } else if (*rb) {
      auto d = load_obdd_file(obdd_path);
      const auto n = d.manager.num_vars();
      const bool trivial = d.manager.is_terminal(d.root);
      if (*rb_inst) {
        if (!dataset_path.empty()) {
          const auto data = load_dataset_file(dataset_path);
          std::cout << decimal(dataset_average_robustness(d.manager, d.root, data.rows())) << "\n";
        } else {
          if (image_path.empty()) throw ArgumentError("need an image or --dataset");
          const auto r = instance_robustness(d.manager, d.root, image_for(d, load_pbm_file(image_path)));
          std::cout << (r.is_infinite() ? std::string("inf") : std::to_string(r.value())) << "\n";
        }
      } else if (trivial && (*rb_model || *rb_max)) {
        std::cout << "inf\n";
      } else if (*rb_model) {
        const auto p = model_robustness(d.manager, d.root, n, parse_polarity(polarity));
        if (p.positive) {
          std::cout << "positive_sum " << p.positive->sum << "\npositive_over_2^n " << p.positive_over_all()
                    << "\npositive_mean " << p.positive->mean() << "\n";
        }
        if (p.negative) {
          std::cout << "negative_sum " << p.negative->sum << "\nnegative_over_2^n " << p.negative_over_all()
                    << "\nnegative_mean " << p.negative->mean() << "\n";
        }
        std::cout << "mr " << p.model_robustness() << " (" << decimal(p.model_robustness()) << ")\n";
      } else if (*rb_max) {
        std::cout << max_robustness(d.manager, d.root, n, parse_polarity(polarity)) << "\n";
      } else {
        const auto p = model_robustness(d.manager, d.root, n, parse_polarity(polarity));
        std::cout << "k,count,proportion\n";
        for (const auto& row : robustness_histogram(p, parse_polarity(polarity))) {
          std::cout << row.k << ',' << row.count << ',' << decimal(row.proportion, 17) << "\n";
        }
      }
    } else if (*ex) {
      auto d = load_obdd_file(obdd_path);
      const auto img = load_pbm_file(image_path);
      const auto e = pi_explanation(d.manager, d.root, image_for(d, img));
      std::cout << "label " << (e.label ? 1 : 0) << "\ncardinality " << e.cardinality() << "\n";
      for (const auto& l : e.literals.literals()) {
        const auto v = l.var.index;
        std::cout << "x" << v << " (row " << v / img.width << ", col " << v % img.width << ") = " << l.value << "\n";
      }
      if (!fill_path.empty()) {
        const auto fill = load_pbm_file(fill_path);
        const Bitmap fooled{img.width, img.height, fooling_complete(d.manager, d.root, e.literals, image_for(d, fill))};
        if (fool_out.empty()) {
          write_pbm(std::cout, fooled);
        } else {
          save_pbm_file(fool_out, fooled);
        }
      }
    } else if (*mg || *un) {
      auto d = load_obdd_file(obdd_path);
      check_grid(d.manager, rows, cols);
      std::vector<double> heat;
      std::cout << (*mg ? "var,row,col,marginal\n" : "var,row,col,unateness\n");
      for (std::uint32_t v = 0; v < rows * cols; ++v) {
        std::cout << v << ',' << v / cols << ',' << v % cols << ',';
        if (*mg) {
          const auto q = marginal(d.manager, d.root, VarId{v}, d.manager.num_vars());
          std::cout << decimal(q, 17) << "\n";
          heat.push_back(q.get_d());
        } else {
          const auto u = unateness(d.manager, d.root, VarId{v});
          std::cout << unateness_label(u) << "\n";
          // Display levels: unused darkest, then negative, non-unate, positive.
          heat.push_back(u == Unateness::Unused ? 0.0 : u == Unateness::NegUnate ? 1.0 : u == Unateness::NonUnate ? 2.0 : 3.0);
        }
      }
      if (!pgm_out.empty()) {
        auto out = open_out(pgm_out);
        write_pgm_heatmap(out, cols, rows, heat);
      }
    } else if (*tr) {
      const auto data = load_dataset_file(data_path);
      const auto u = train_neuron(data, cfg);
      auto out = open_out(neuron_out);
      write_neuron(out, u);
      std::cout << "train accuracy " << decimal(accuracy(u, data)) << "\n";
    } else if (*sw) {
      const auto file = load_neuron_file(neuron_path);
      const auto* u = std::get_if<LinearThresholdUnit>(&file);
      if (!u) throw ArgumentError("sweep needs a real-valued neuron (weights and bias)");
      const auto data = load_dataset_file(data_path);
      SweepOptions opts;
      opts.rounding = parse_rounding(round_mode);
      opts.node_budget = budget;
      const auto rows_out = precision_sweep(*u, data, sweep_digits, opts);
      if (csv_out.empty()) {
        write_sweep_csv(std::cout, rows_out);
      } else {
        auto out = open_out(csv_out);
        write_sweep_csv(out, rows_out);
      }
    } else if (*st) {
      auto d = load_obdd_file(obdd_path);
      std::cout << "vars " << d.manager.num_vars() << "\nnodes " << d.manager.node_count(d.root) << "\nsupport "
                << d.manager.support(d.root).size() << "\nmodels " << d.manager.model_count(d.root) << "\n";
    }
  } catch (const BudgetExceeded& e) {
    std::cerr << "nnbdd: node budget exceeded: " << e.what() << "\n";
    return 3;
  } catch (const Error& e) {
    std::cerr << "nnbdd: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
