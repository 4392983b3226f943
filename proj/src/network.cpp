#include "nnbdd/network.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"
#include "nnbdd/error.hpp"

namespace nnbdd {

namespace {

using json = nlohmann::json;

std::size_t wire_index(const Shape& s, std::size_t r, std::size_t c, std::size_t ch) {
  return (r * s.w + c) * s.c + ch;
}

std::size_t windows_along(std::size_t extent, std::size_t k, std::size_t stride) {
  return (extent - k) / stride + 1;
}

/// Wire indices of the window at output position (r, c), in filter weight order.
std::vector<std::size_t> window_wires(const Shape& in, std::size_t kh, std::size_t kw, std::size_t stride,
                                      std::size_t r, std::size_t c) {
  std::vector<std::size_t> out;
  out.reserve(kh * kw * in.c);
  for (std::size_t ky = 0; ky < kh; ++ky) {
    for (std::size_t kx = 0; kx < kw; ++kx) {
      for (std::size_t ch = 0; ch < in.c; ++ch) out.push_back(wire_index(in, r * stride + ky, c * stride + kx, ch));
    }
  }
  return out;
}

std::string layer_name(std::size_t i, const Layer& layer) {
  static constexpr const char* kNames[] = {"conv_step", "maxpool_or", "dense_step"};
  return "layer " + std::to_string(i) + " (" + kNames[layer.index()] + ")";
}

std::vector<std::size_t> uncovered(std::size_t extent, std::size_t k, std::size_t stride) {
  std::vector<char> hit(extent, 0);
  for (std::size_t p = 0; p < windows_along(extent, k, stride); ++p) {
    for (std::size_t d = 0; d < k; ++d) hit[p * stride + d] = 1;
  }
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < extent; ++i) {
    if (!hit[i]) out.push_back(i);
  }
  return out;
}

std::string join(const std::vector<std::size_t>& v) {
  std::string s;
  for (auto x : v) s += (s.empty() ? "" : ",") + std::to_string(x);
  return s;
}

Shape window_output(const std::string& name, const Shape& in, std::size_t kh, std::size_t kw, std::size_t stride,
                    std::size_t channels, bool strict, std::vector<std::string>& warnings) {
  if (kh == 0 || kw == 0) throw ShapeError(name + ": window must be non-empty");
  if (stride == 0) throw ShapeError(name + ": stride must be positive");
  if (kh > in.h || kw > in.w) {
    throw ShapeError(name + ": " + std::to_string(kh) + "x" + std::to_string(kw) + " window does not fit a " +
                     std::to_string(in.h) + "x" + std::to_string(in.w) + " input");
  }
  const auto rows = uncovered(in.h, kh, stride);
  const auto cols = uncovered(in.w, kw, stride);
  if (!rows.empty() || !cols.empty()) {
    std::string msg = name + ": no padding, uncovered rows {" + join(rows) + "} cols {" + join(cols) + "}";
    if (strict) throw ShapeError(msg);
    warnings.push_back(msg);
  }
  return {windows_along(in.h, kh, stride), windows_along(in.w, kw, stride), channels};
}

std::vector<Shape> compute_shapes(const NetworkSpec& spec, bool strict, std::vector<std::string>& warnings) {
  if (spec.input.h == 0 || spec.input.w == 0) throw ShapeError("input grid must be non-empty");
  if (spec.input.c != 1) throw ShapeError("input must have a single channel");
  std::vector<Shape> shapes{spec.input};
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const Shape& in = shapes.back();
    const auto name = layer_name(i, spec.layers[i]);
    const Layer& layer = spec.layers[i];
    if (const auto* conv = std::get_if<ConvStep>(&layer)) {
      if (conv->filters.empty()) throw ShapeError(name + ": no filters");
      const auto arity = conv->kh * conv->kw * in.c;
      for (std::size_t f = 0; f < conv->filters.size(); ++f) {
        if (conv->filters[f].arity() != arity) {
          throw ShapeError(name + ": filter " + std::to_string(f) + " has " +
                           std::to_string(conv->filters[f].arity()) + " weights, expected " + std::to_string(arity));
        }
      }
      shapes.push_back(window_output(name, in, conv->kh, conv->kw, conv->stride, conv->filters.size(), strict, warnings));
    } else if (const auto* pool = std::get_if<MaxPoolOr>(&layer)) {
      shapes.push_back(window_output(name, in, pool->kh, pool->kw, pool->stride, in.c, strict, warnings));
    } else {
      const auto& dense = std::get<DenseStep>(layer);
      if (dense.neurons.empty()) throw ShapeError(name + ": no neurons");
      for (std::size_t j = 0; j < dense.neurons.size(); ++j) {
        if (dense.neurons[j].arity() != in.size()) {
          throw ShapeError(name + ": neuron " + std::to_string(j) + " has " +
                           std::to_string(dense.neurons[j].arity()) + " weights, expected " + std::to_string(in.size()));
        }
      }
      shapes.push_back({1, 1, dense.neurons.size()});
    }
  }
  if (spec.outputs != 0 && shapes.back().size() != spec.outputs) {
    throw ShapeError("network produces " + std::to_string(shapes.back().size()) + " outputs, declared " +
                     std::to_string(spec.outputs));
  }
  return shapes;
}

std::pair<std::size_t, std::size_t> read_window(const json& j, const char* key) {
  const auto& v = j.at(key);
  if (v.is_array()) {
    if (v.size() != 2) throw ParseError(std::string("'") + key + "' must be [h, w]");
    return {v[0].get<std::size_t>(), v[1].get<std::size_t>()};
  }
  const auto k = v.get<std::size_t>();
  return {k, k};
}

std::vector<LinearThresholdUnit> read_units(const json& j, const std::string& name) {
  const auto weights = j.at("weights").get<std::vector<std::vector<double>>>();
  const auto bias = j.at("bias").get<std::vector<double>>();
  if (weights.size() != bias.size()) {
    throw ShapeError(name + ": " + std::to_string(weights.size()) + " weight rows but " +
                     std::to_string(bias.size()) + " biases");
  }
  std::vector<LinearThresholdUnit> units;
  for (std::size_t i = 0; i < weights.size(); ++i) units.push_back({weights[i], bias[i]});
  return units;
}

json units_to_json(const std::vector<LinearThresholdUnit>& units) {
  json w = json::array();
  json b = json::array();
  for (const auto& u : units) {
    w.push_back(u.weights);
    b.push_back(u.bias);
  }
  return {{"weights", w}, {"bias", b}};
}

}  // namespace

std::vector<Shape> NetworkSpec::shapes() const {
  std::vector<std::string> ignored;
  return compute_shapes(*this, false, ignored);
}

void validate(NetworkSpec& spec, bool strict) {
  spec.warnings.clear();
  const auto shapes = compute_shapes(spec, strict, spec.warnings);
  if (spec.outputs == 0) spec.outputs = shapes.back().size();
}

NetworkSpec load_spec(const std::string& json_text, bool strict) {
  NetworkSpec spec;
  try {
    const json j = json::parse(json_text);
    spec.input = {j.at("input").at("h").get<std::size_t>(), j.at("input").at("w").get<std::size_t>(), 1};
    if (j.contains("outputs")) spec.outputs = j.at("outputs").get<std::size_t>();
    const auto& layers = j.at("layers");
    if (!layers.is_array()) throw ParseError("'layers' must be an array");
    for (std::size_t i = 0; i < layers.size(); ++i) {
      const auto& l = layers[i];
      const auto type = l.at("type").get<std::string>();
      const auto name = "layer " + std::to_string(i) + " (" + type + ")";
      if (type == "conv_step") {
        ConvStep conv;
        std::tie(conv.kh, conv.kw) = read_window(l, "kernel");
        conv.stride = l.value("stride", std::size_t{1});
        conv.filters = read_units(l, name);
        spec.layers.emplace_back(std::move(conv));
      } else if (type == "maxpool_or") {
        MaxPoolOr pool;
        std::tie(pool.kh, pool.kw) = read_window(l, "window");
        pool.stride = l.value("stride", pool.kh);
        spec.layers.emplace_back(pool);
      } else if (type == "dense_step") {
        spec.layers.emplace_back(DenseStep{read_units(l, name)});
      } else {
        throw ParseError(name + ": unknown layer type");
      }
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("model: ") + e.what());
  }
  if (spec.layers.empty()) throw ShapeError("model has no layers");
  validate(spec, strict);
  return spec;
}

NetworkSpec load_spec_file(const std::string& path, bool strict) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return load_spec(ss.str(), strict);
}

std::string spec_to_json(const NetworkSpec& spec) {
  json layers = json::array();
  for (const auto& layer : spec.layers) {
    if (const auto* conv = std::get_if<ConvStep>(&layer)) {
      json l = units_to_json(conv->filters);
      l["type"] = "conv_step";
      l["kernel"] = {conv->kh, conv->kw};
      l["stride"] = conv->stride;
      layers.push_back(l);
    } else if (const auto* pool = std::get_if<MaxPoolOr>(&layer)) {
      layers.push_back({{"type", "maxpool_or"}, {"window", {pool->kh, pool->kw}}, {"stride", pool->stride}});
    } else {
      json l = units_to_json(std::get<DenseStep>(layer).neurons);
      l["type"] = "dense_step";
      layers.push_back(l);
    }
  }
  json j{{"input", {{"h", spec.input.h}, {"w", spec.input.w}}}, {"outputs", spec.outputs}, {"layers", layers}};
  return j.dump(2);
}

std::vector<std::size_t> structurally_unused_inputs(const NetworkSpec& spec) {
  const auto shapes = spec.shapes();
  std::vector<char> used(shapes.back().size(), 1);
  for (std::size_t i = spec.layers.size(); i-- > 0;) {
    const Shape& in = shapes[i];
    const Shape& out = shapes[i + 1];
    std::vector<char> prev(in.size(), 0);
    const Layer& layer = spec.layers[i];
    if (std::holds_alternative<DenseStep>(layer)) {
      if (std::any_of(used.begin(), used.end(), [](char u) { return u != 0; })) std::fill(prev.begin(), prev.end(), 1);
    } else {
      const bool is_conv = std::holds_alternative<ConvStep>(layer);
      std::size_t kh, kw, stride;
      if (is_conv) {
        const auto& c = std::get<ConvStep>(layer);
        kh = c.kh, kw = c.kw, stride = c.stride;
      } else {
        const auto& p = std::get<MaxPoolOr>(layer);
        kh = p.kh, kw = p.kw, stride = p.stride;
      }
      for (std::size_t r = 0; r < out.h; ++r) {
        for (std::size_t c = 0; c < out.w; ++c) {
          for (std::size_t ch = 0; ch < out.c; ++ch) {
            if (!used[wire_index(out, r, c, ch)]) continue;
            for (std::size_t ky = 0; ky < kh; ++ky) {
              for (std::size_t kx = 0; kx < kw; ++kx) {
                if (is_conv) {
                  for (std::size_t ich = 0; ich < in.c; ++ich) prev[wire_index(in, r * stride + ky, c * stride + kx, ich)] = 1;
                } else {
                  prev[wire_index(in, r * stride + ky, c * stride + kx, ch)] = 1;
                }
              }
            }
          }
        }
      }
    }
    used = std::move(prev);
  }
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < used.size(); ++i) {
    if (!used[i]) out.push_back(i);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Reference evaluator

Evaluator::Evaluator(const NetworkSpec& spec, std::optional<int> digits, Rounding mode)
    : spec_(&spec), shapes_(spec.shapes()), digits_(digits) {
  if (!digits_) return;
  for (const auto& layer : spec.layers) {
    std::vector<IntThresholdUnit> q;
    if (const auto* conv = std::get_if<ConvStep>(&layer)) {
      for (const auto& f : conv->filters) q.push_back(quantize(f, *digits_, mode));
    } else if (const auto* dense = std::get_if<DenseStep>(&layer)) {
      for (const auto& u : dense->neurons) q.push_back(quantize(u, *digits_, mode));
    }
    quantized_.push_back(std::move(q));
  }
}

std::vector<std::uint8_t> Evaluator::run(const Instance& x) const {
  if (x.size() != spec_->num_inputs()) {
    throw ArgumentError("image has " + std::to_string(x.size()) + " pixels, network expects " +
                        std::to_string(spec_->num_inputs()));
  }
  std::vector<std::uint8_t> wires(x.bits().begin(), x.bits().end());
  std::vector<std::uint8_t> window;
  for (std::size_t i = 0; i < spec_->layers.size(); ++i) {
    const Shape& in = shapes_[i];
    const Shape& out = shapes_[i + 1];
    const Layer& layer = spec_->layers[i];
    std::vector<std::uint8_t> next(out.size(), 0);
    auto fires = [&](std::size_t unit, const LinearThresholdUnit& u, std::span<const std::uint8_t> bits) {
      return digits_ ? quantized_[i][unit].fires(bits) : u.fires_exact(bits);
    };
    if (const auto* conv = std::get_if<ConvStep>(&layer)) {
      for (std::size_t r = 0; r < out.h; ++r) {
        for (std::size_t c = 0; c < out.w; ++c) {
          window.clear();
          for (auto w : window_wires(in, conv->kh, conv->kw, conv->stride, r, c)) window.push_back(wires[w]);
          for (std::size_t f = 0; f < conv->filters.size(); ++f) {
            next[wire_index(out, r, c, f)] = fires(f, conv->filters[f], window) ? 1 : 0;
          }
        }
      }
    } else if (const auto* pool = std::get_if<MaxPoolOr>(&layer)) {
      for (std::size_t r = 0; r < out.h; ++r) {
        for (std::size_t c = 0; c < out.w; ++c) {
          for (std::size_t ch = 0; ch < out.c; ++ch) {
            std::uint8_t any = 0;
            for (std::size_t ky = 0; ky < pool->kh; ++ky) {
              for (std::size_t kx = 0; kx < pool->kw; ++kx) {
                any |= wires[wire_index(in, r * pool->stride + ky, c * pool->stride + kx, ch)];
              }
            }
            next[wire_index(out, r, c, ch)] = any;
          }
        }
      }
    } else {
      const auto& dense = std::get<DenseStep>(layer);
      for (std::size_t j = 0; j < dense.neurons.size(); ++j) next[j] = fires(j, dense.neurons[j], wires) ? 1 : 0;
    }
    wires = std::move(next);
  }
  return wires;
}

std::vector<std::uint8_t> forward_eval(const NetworkSpec& spec, const Instance& x, std::optional<int> digits,
                                       Rounding mode) {
  return Evaluator(spec, digits, mode).run(x);
}

// ---------------------------------------------------------------------------
// Compilation

std::vector<VarId> input_order(const NetworkSpec& spec, const NetworkCompileOptions& options) {
  const auto n = spec.num_inputs();
  std::vector<VarId> order;
  order.reserve(n);
  switch (options.order) {
    case OrderPolicy::RowMajor:
      for (std::size_t i = 0; i < n; ++i) order.push_back(VarId{static_cast<std::uint32_t>(i)});
      break;
    case OrderPolicy::ColumnMajor:
      for (std::size_t c = 0; c < spec.input.w; ++c) {
        for (std::size_t r = 0; r < spec.input.h; ++r) {
          order.push_back(VarId{static_cast<std::uint32_t>(r * spec.input.w + c)});
        }
      }
      break;
    case OrderPolicy::Explicit:
      if (options.explicit_order.size() != n) throw ArgumentError("explicit order must list every input pixel");
      order = options.explicit_order;
      break;
  }
  return order;
}

CompiledNetwork compile_network(const NetworkSpec& spec, const NetworkCompileOptions& options) {
  const auto shapes = spec.shapes();
  CompiledNetwork result;
  result.manager = std::make_unique<Manager>(spec.num_inputs(), input_order(spec, options));
  Manager& mgr = *result.manager;
  mgr.set_node_budget(options.node_budget);

  struct LocalNeuron {
    std::unique_ptr<Manager> mgr;
    NodeRef root;
  };
  auto compile_local = [&](const LinearThresholdUnit& u) {
    const auto k = u.arity();
    std::vector<VarId> order(k);
    for (std::size_t i = 0; i < k; ++i) {
      order[i] = VarId{static_cast<std::uint32_t>(options.reverse_local_order ? k - 1 - i : i)};
    }
    LocalNeuron local{std::make_unique<Manager>(k, std::move(order)), {}};
    local.mgr->set_node_budget(options.node_budget);
    local.root = options.digits ? compile_pseudo(*local.mgr, quantize(u, *options.digits, options.rounding))
                                : compile_exact(*local.mgr, u);
    ++result.neurons_compiled;
    return local;
  };

  std::map<std::vector<std::uint32_t>, NodeRef> wire_cache;
  std::size_t neuron_id = 0;
  auto neuron_wire = [&](const LocalNeuron& local, std::size_t id, const std::vector<NodeRef>& subs) {
    std::vector<std::uint32_t> key{static_cast<std::uint32_t>(id)};
    for (const auto& s : subs) key.push_back(s.id());
    if (auto it = wire_cache.find(key); it != wire_cache.end()) {
      ++result.composition_hits;
      return it->second;
    }
    ++result.compositions;
    const NodeRef r = mgr.compose(*local.mgr, local.root, subs);
    wire_cache.emplace(std::move(key), r);
    return r;
  };

  std::vector<NodeRef> wires;
  try {
    for (std::size_t i = 0; i < spec.num_inputs(); ++i) wires.push_back(mgr.literal(VarId{static_cast<std::uint32_t>(i)}));
  } catch (const BudgetExceeded& e) {
    throw BudgetExceeded(std::string(e.what()) + " while creating the input layer literals");
  }

  std::size_t layer_index = 0;
  std::size_t done = 0;
  try {
    for (; layer_index < spec.layers.size(); ++layer_index) {
      const Shape& in = shapes[layer_index];
      const Shape& out = shapes[layer_index + 1];
      const Layer& layer = spec.layers[layer_index];
      std::vector<NodeRef> next(out.size());
      done = 0;
      if (const auto* conv = std::get_if<ConvStep>(&layer)) {
        std::vector<LocalNeuron> locals;
        for (const auto& f : conv->filters) locals.push_back(compile_local(f));
        for (std::size_t r = 0; r < out.h; ++r) {
          for (std::size_t c = 0; c < out.w; ++c) {
            std::vector<NodeRef> subs;
            for (auto w : window_wires(in, conv->kh, conv->kw, conv->stride, r, c)) subs.push_back(wires[w]);
            for (std::size_t f = 0; f < locals.size(); ++f) {
              next[wire_index(out, r, c, f)] = neuron_wire(locals[f], neuron_id + f, subs);
              ++done;
            }
          }
        }
        neuron_id += locals.size();
      } else if (const auto* pool = std::get_if<MaxPoolOr>(&layer)) {
        for (std::size_t r = 0; r < out.h; ++r) {
          for (std::size_t c = 0; c < out.w; ++c) {
            for (std::size_t ch = 0; ch < out.c; ++ch) {
              NodeRef any = mgr.bottom();
              for (std::size_t ky = 0; ky < pool->kh; ++ky) {
                for (std::size_t kx = 0; kx < pool->kw; ++kx) {
                  any = mgr.disjoin(any, wires[wire_index(in, r * pool->stride + ky, c * pool->stride + kx, ch)]);
                }
              }
              next[wire_index(out, r, c, ch)] = any;
              ++done;
            }
          }
        }
      } else {
        const auto& dense = std::get<DenseStep>(layer);
        for (std::size_t j = 0; j < dense.neurons.size(); ++j) {
          const auto local = compile_local(dense.neurons[j]);
          next[j] = neuron_wire(local, neuron_id + j, wires);
          ++done;
        }
        neuron_id += dense.neurons.size();
      }
      wires = std::move(next);
    }
  } catch (const BudgetExceeded& e) {
    throw BudgetExceeded(std::string(e.what()) + " while compiling " +
                         layer_name(layer_index, spec.layers[layer_index]) + " after " + std::to_string(done) + " of " +
                         std::to_string(shapes[layer_index + 1].size()) + " wires (" +
                         std::to_string(mgr.store_size()) + " nodes stored)");
  }
  result.outputs = std::move(wires);
  return result;
}

}  // namespace nnbdd
