#include <random>

#include "doctest.h"
#include "nnbdd/bdd_io.hpp"
#include "nnbdd/error.hpp"
#include "nnbdd/network.hpp"
#include "oracles.hpp"

using namespace nnbdd;
using namespace nnbdd::testing;

namespace {

double random_weight(std::mt19937_64& rng) { return static_cast<double>(static_cast<int>(rng() % 301) - 150) / 100.0; }

LinearThresholdUnit random_unit(std::mt19937_64& rng, std::size_t n) {
  LinearThresholdUnit u;
  for (std::size_t i = 0; i < n; ++i) u.weights.push_back(random_weight(rng));
  u.bias = random_weight(rng);
  return u;
}

// 4x4 input, one 2x2 stride-2 filter, dense over the four wires.
NetworkSpec random_small_net(std::mt19937_64& rng) {
  NetworkSpec spec;
  spec.input = {4, 4, 1};
  spec.layers.push_back(ConvStep{2, 2, 2, {random_unit(rng, 4)}});
  spec.layers.push_back(DenseStep{{random_unit(rng, 4)}});
  spec.outputs = 1;
  validate(spec);
  return spec;
}

// 4x4 input, two 2x2 stride-1 filters, 2x2 stride-1 pooling, two dense outputs.
NetworkSpec random_pooled_net(std::mt19937_64& rng) {
  NetworkSpec spec;
  spec.input = {4, 4, 1};
  spec.layers.push_back(ConvStep{2, 2, 1, {random_unit(rng, 4), random_unit(rng, 4)}});
  spec.layers.push_back(MaxPoolOr{2, 2, 1});
  spec.layers.push_back(DenseStep{{random_unit(rng, 8), random_unit(rng, 8)}});
  validate(spec);
  return spec;
}

bool fires(const LinearThresholdUnit& u, const std::vector<std::uint8_t>& in) {
  mpq_class s(u.bias);
  for (std::size_t i = 0; i < in.size(); ++i) {
    if (in[i]) s += mpq_class(u.weights[i]);
  }
  return s >= 0;
}

// Direct layer-by-layer evaluation written against the layout rules only.
std::vector<std::uint8_t> naive_eval(const NetworkSpec& spec, const Instance& x) {
  std::vector<std::uint8_t> wires(x.bits().begin(), x.bits().end());
  std::size_t h = spec.input.h, w = spec.input.w, c = 1;
  for (const auto& layer : spec.layers) {
    std::vector<std::uint8_t> next;
    if (const auto* conv = std::get_if<ConvStep>(&layer)) {
      const auto oh = (h - conv->kh) / conv->stride + 1, ow = (w - conv->kw) / conv->stride + 1;
      for (std::size_t r = 0; r < oh; ++r)
        for (std::size_t col = 0; col < ow; ++col)
          for (const auto& f : conv->filters) {
            std::vector<std::uint8_t> in;
            for (std::size_t ky = 0; ky < conv->kh; ++ky)
              for (std::size_t kx = 0; kx < conv->kw; ++kx)
                for (std::size_t ch = 0; ch < c; ++ch)
                  in.push_back(wires[((r * conv->stride + ky) * w + col * conv->stride + kx) * c + ch]);
            next.push_back(fires(f, in));
          }
      h = oh, w = ow, c = conv->filters.size();
    } else if (const auto* pool = std::get_if<MaxPoolOr>(&layer)) {
      const auto oh = (h - pool->kh) / pool->stride + 1, ow = (w - pool->kw) / pool->stride + 1;
      for (std::size_t r = 0; r < oh; ++r)
        for (std::size_t col = 0; col < ow; ++col)
          for (std::size_t ch = 0; ch < c; ++ch) {
            std::uint8_t any = 0;
            for (std::size_t ky = 0; ky < pool->kh; ++ky)
              for (std::size_t kx = 0; kx < pool->kw; ++kx)
                any |= wires[((r * pool->stride + ky) * w + col * pool->stride + kx) * c + ch];
            next.push_back(any);
          }
      h = oh, w = ow;
    } else {
      for (const auto& u : std::get<DenseStep>(layer).neurons) next.push_back(fires(u, wires));
      h = 1, w = 1, c = next.size();
    }
    wires = std::move(next);
  }
  return wires;
}

void check_exhaustive(const NetworkSpec& spec, std::optional<int> digits) {
  NetworkCompileOptions opts;
  opts.digits = digits;
  const auto net = compile_network(spec, opts);
  const Evaluator eval(spec, digits);
  const auto n = spec.num_inputs();
  for (std::uint64_t i = 0; i < (std::uint64_t{1} << n); ++i) {
    const auto x = Instance::from_index(i, n);
    const auto expect = eval.run(x);
    for (std::size_t o = 0; o < net.outputs.size(); ++o) {
      if (net.manager->evaluate(net.outputs[o], x) != (expect[o] != 0)) {
        FAIL("disagreement on image " << i << " output " << o);
      }
    }
  }
}

}  // namespace

TEST_CASE("shapes") {
  NetworkSpec spec;
  spec.input = {16, 16, 1};
  spec.layers.push_back(ConvStep{3, 3, 2, {LinearThresholdUnit{std::vector<double>(9, 1.0), 0.0}}});
  spec.layers.push_back(ConvStep{2, 2, 2, {LinearThresholdUnit{std::vector<double>(4, 1.0), 0.0}}});
  validate(spec);
  const auto shapes = spec.shapes();
  CHECK(shapes[1] == Shape{7, 7, 1});
  CHECK(shapes[2] == Shape{3, 3, 1});
  // 16 = 2*7 + 2 leaves column 15 uncovered; 7x7 with stride 2 leaves row 6 uncovered.
  CHECK(spec.warnings.size() == 2);
  CHECK_THROWS_AS(validate(spec, true), ShapeError);

  NetworkSpec bad;
  bad.input = {2, 2, 1};
  bad.layers.push_back(DenseStep{{LinearThresholdUnit{{1.0, 1.0, 1.0}, 0.0}}});
  CHECK_THROWS_AS(validate(bad), ShapeError);

  NetworkSpec tall;
  tall.input = {2, 2, 1};
  tall.layers.push_back(ConvStep{3, 3, 1, {LinearThresholdUnit{std::vector<double>(9, 1.0), 0.0}}});
  CHECK_THROWS_AS(validate(tall), ShapeError);

  NetworkSpec declared = bad;
  declared.layers = {DenseStep{{LinearThresholdUnit{{1.0, 1.0, 1.0, 1.0}, 0.0}}}};
  declared.outputs = 2;
  CHECK_THROWS_AS(validate(declared), ShapeError);
}

TEST_CASE("model file") {
  const auto spec = load_spec(R"({
    "input": {"h": 4, "w": 4},
    "outputs": 1,
    "layers": [
      {"type": "conv_step", "kernel": 2, "stride": 2, "weights": [[1, 1, 1, 1]], "bias": [-2]},
      {"type": "maxpool_or", "window": [2, 2]},
      {"type": "dense_step", "weights": [[1]], "bias": [-1]}
    ]})");
  CHECK(spec.shapes().back() == Shape{1, 1, 1});
  CHECK(std::get<MaxPoolOr>(spec.layers[1]).stride == 2);
  const auto again = load_spec(spec_to_json(spec));
  CHECK(spec_to_json(again) == spec_to_json(spec));

  CHECK_THROWS_AS(load_spec("{"), ParseError);
  CHECK_THROWS_AS(load_spec(R"({"input": {"h": 1, "w": 1}, "layers": [{"type": "pool"}]})"), ParseError);
  CHECK_THROWS_AS(load_spec(R"({"input": {"h": 1, "w": 1}, "layers": [
      {"type": "dense_step", "weights": [[1, 2]], "bias": [0]}]})"),
                  ShapeError);
}

TEST_CASE("forward evaluation") {
  NetworkSpec conv;
  conv.input = {3, 3, 1};
  conv.layers.push_back(ConvStep{2, 2, 1, {LinearThresholdUnit{{-1.0, 0.5, -2.0, 0.3}, 0.0}}});
  validate(conv);
  CHECK(forward_eval(conv, Instance(9)) == std::vector<std::uint8_t>{1, 1, 1, 1});

  NetworkSpec dense;
  dense.input = {2, 2, 1};
  dense.layers.push_back(DenseStep{{LinearThresholdUnit{{1.0, 1.0, 1.0, 1.0}, -2.0}}});
  validate(dense);
  for (std::uint64_t i = 0; i < 16; ++i) {
    CHECK(forward_eval(dense, Instance::from_index(i, 4)).front() == (std::popcount(i) >= 2));
  }

  NetworkSpec pool;
  pool.input = {2, 2, 1};
  pool.layers.push_back(MaxPoolOr{2, 2, 2});
  validate(pool);
  CHECK(forward_eval(pool, Instance::from_index(4, 4)).front() == 1);
  CHECK(forward_eval(pool, Instance(4)).front() == 0);

  CHECK_THROWS_AS(forward_eval(dense, Instance(5)), ArgumentError);
}

TEST_CASE("compile small networks") {
  NetworkSpec id;
  id.input = {1, 1, 1};
  id.layers.push_back(DenseStep{{LinearThresholdUnit{{1.0}, -1.0}}});
  validate(id);
  auto one = compile_network(id);
  CHECK(one.outputs.front() == one.manager->literal(VarId{0}));

  NetworkSpec dense;
  dense.input = {2, 2, 1};
  dense.layers.push_back(DenseStep{{LinearThresholdUnit{{1.0, 1.0, 1.0, 1.0}, -2.0}}});
  validate(dense);
  auto net = compile_network(dense);
  CHECK(net.manager->model_count(net.outputs.front()) == 11);
  NetworkCompileOptions q;
  q.digits = 2;
  auto quantized = compile_network(dense, q);
  CHECK(quantized.manager->model_count(quantized.outputs.front()) == 11);
}

TEST_CASE("naive evaluator agrees with the library evaluator") {
  std::mt19937_64 rng(31);
  for (int i = 0; i < 20; ++i) {
    const auto spec = i % 2 ? random_pooled_net(rng) : random_small_net(rng);
    const Evaluator eval(spec);
    for (int k = 0; k < 200; ++k) {
      const auto x = Instance::from_index(rng() & 0xFFFF, 16);
      CHECK(eval.run(x) == naive_eval(spec, x));
    }
  }
}

TEST_CASE("compiled networks agree with the evaluator on every image") {
  std::mt19937_64 rng(32);
  for (int i = 0; i < 3; ++i) check_exhaustive(random_small_net(rng), std::nullopt);
  check_exhaustive(random_small_net(rng), 2);
  check_exhaustive(random_pooled_net(rng), std::nullopt);
  check_exhaustive(random_pooled_net(rng), 1);
}

TEST_CASE("property: composition locality") {
  std::mt19937_64 rng(33);
  for (int i = 0; i < 10; ++i) {
    const auto spec = i % 2 ? random_pooled_net(rng) : random_small_net(rng);
    // Separate managers with the same order: equal canonical diagrams print identically.
    NetworkCompileOptions a, b;
    b.reverse_local_order = true;
    const auto x = compile_network(spec, a);
    const auto y = compile_network(spec, b);
    REQUIRE(x.outputs.size() == y.outputs.size());
    for (std::size_t o = 0; o < x.outputs.size(); ++o) {
      CHECK(truth_table(*x.manager, x.outputs[o], 16) == truth_table(*y.manager, y.outputs[o], 16));
      CHECK(to_obdd_text(*x.manager, x.outputs[o]) == to_obdd_text(*y.manager, y.outputs[o]));
    }
  }
}

TEST_CASE("wire cache shares identical compositions") {
  // The first layer makes every wire TRUE, so all four windows of the second
  // layer carry the same handles.
  NetworkSpec spec;
  spec.input = {3, 3, 1};
  spec.layers.push_back(ConvStep{1, 1, 1, {LinearThresholdUnit{{0.0}, 0.0}}});
  spec.layers.push_back(ConvStep{2, 2, 1, {LinearThresholdUnit{{1.0, -1.0, 1.0, 0.5}, -1.0}}});
  validate(spec);
  const auto net = compile_network(spec);
  CHECK(net.composition_hits == 3);
  for (auto o : net.outputs) CHECK(o == net.manager->top());
}

TEST_CASE("unused border pixels stay out of the support") {
  std::mt19937_64 rng(34);
  NetworkSpec spec;
  spec.input = {5, 5, 1};
  spec.layers.push_back(ConvStep{2, 2, 2, {random_unit(rng, 4), random_unit(rng, 4)}});
  spec.layers.push_back(DenseStep{{random_unit(rng, 8)}});
  validate(spec);
  const auto unused = structurally_unused_inputs(spec);
  CHECK(unused.size() == 9);  // last row and last column
  const auto net = compile_network(spec);
  for (auto v : net.manager->support(net.outputs.front())) {
    CHECK(std::find(unused.begin(), unused.end(), v.index) == unused.end());
  }
}

TEST_CASE("variable order policies") {
  std::mt19937_64 rng(35);
  const auto spec = random_small_net(rng);
  NetworkCompileOptions col;
  col.order = OrderPolicy::ColumnMajor;
  const auto a = compile_network(spec);
  const auto b = compile_network(spec, col);
  CHECK(b.manager->var_at_level(1) == VarId{4});
  CHECK(truth_table(*a.manager, a.outputs[0], 16) == truth_table(*b.manager, b.outputs[0], 16));

  NetworkCompileOptions bad;
  bad.order = OrderPolicy::Explicit;
  bad.explicit_order = {VarId{0}};
  CHECK_THROWS_AS(compile_network(spec, bad), ArgumentError);
}

TEST_CASE("node budget aborts with a progress report") {
  std::mt19937_64 rng(36);
  NetworkSpec spec;
  spec.input = {6, 6, 1};
  spec.layers.push_back(ConvStep{3, 3, 3, {random_unit(rng, 9), random_unit(rng, 9)}});
  spec.layers.push_back(DenseStep{{random_unit(rng, 8)}});
  validate(spec);
  NetworkCompileOptions opts;
  opts.node_budget = 60;
  try {
    compile_network(spec, opts);
    FAIL("expected a budget abort");
  } catch (const BudgetExceeded& e) {
    CHECK(std::string(e.what()).find("layer") != std::string::npos);
  }
}
