#include "brsr/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "brsr/loss.hpp"
#include "brsr/model.hpp"
#include "brsr/ops.hpp"
#include "brsr/selfonn.hpp"

namespace brsr {

namespace {

struct LeafView {
  std::string name;
  double* values = nullptr;
  std::vector<double> analytic;
  std::size_t count = 0;
};

double relative_error(double analytic, double numeric) {
  const double denom =
      std::max({std::abs(analytic), std::abs(numeric), 1e-6});
  return std::abs(analytic - numeric) / denom;
}

}  // namespace

GradCheckResult run_gradient_check(const GradCheckCase& check,
                                   const GradCheckOptions& options) {
  GradCheckResult result;
  result.name = check.name;

  for (Parameter<double>* p : check.params) {
    p->grad.clear();
  }
  for (const Tensor<double>& leaf : check.inputs) leaf.node()->grad.clear();

  Tensor<double> loss = check.build();
  BRSR_REQUIRE(loss.numel() == 1, ErrorKind::Shape,
               "gradient check '" + check.name + "': loss must be scalar");
  backward(loss);

  std::vector<LeafView> leaves;
  for (Parameter<double>* p : check.params) {
    LeafView v;
    v.name = p->name;
    v.values = p->values.data();
    v.count = p->numel();
    v.analytic.assign(v.count, 0.0);
    if (!p->grad.empty())
      v.analytic.assign(p->grad.begin(), p->grad.end());
    leaves.push_back(std::move(v));
  }
  for (std::size_t k = 0; k < check.inputs.size(); ++k) {
    const Tensor<double>& t = check.inputs[k];
    LeafView v;
    v.name = "input#" + std::to_string(k);
    v.values = t.node()->value.data();
    v.count = t.numel();
    v.analytic.assign(v.count, 0.0);
    if (!t.node()->grad.empty())
      v.analytic.assign(t.node()->grad.begin(), t.node()->grad.end());
    leaves.push_back(std::move(v));
  }

  for (auto& leaf : leaves) {
    for (std::size_t i = 0; i < leaf.count; ++i) {
      const double x0 = leaf.values[i];
      const double h = options.fd_step * std::max(1.0, std::abs(x0));
      leaf.values[i] = x0 + h;
      const double f_plus = check.build().scalar();
      leaf.values[i] = x0 - h;
      const double f_minus = check.build().scalar();
      leaf.values[i] = x0;
      const double numeric = (f_plus - f_minus) / (2.0 * h);
      const double rel = relative_error(leaf.analytic[i], numeric);
      result.elements_checked += 1;
      if (rel > result.max_rel_err) {
        result.max_rel_err = rel;
        result.worst = {leaf.name, i, leaf.analytic[i], numeric, rel};
      }
    }
  }

  for (Parameter<double>* p : check.params) p->grad.clear();
  result.passed = result.max_rel_err < options.tolerance;
  return result;
}

// ---------------------------------------------------------------------------
// Standard suite.
// ---------------------------------------------------------------------------

namespace {

Tensor<double> random_leaf(Shape shape, Rng& rng, double lo = -1.0,
                           double hi = 1.0) {
  std::vector<double> data(shape.numel());
  for (auto& v : data) v = rng.uniform(lo, hi);
  return Tensor<double>::from_data(shape, std::move(data), true);
}

// Fixed random projection makes any output a scalar while exercising the
// whole Jacobian.
Tensor<double> probe(const Tensor<double>& out, Rng& rng) {
  std::vector<double> w(out.numel());
  for (auto& v : w) v = rng.uniform(-1.0, 1.0);
  return sum_all(cwise_mul_const(out, std::move(w)));
}

struct CaseState {
  ParameterSet<double> params;
  std::vector<Tensor<double>> leaves;
  std::shared_ptr<void> extra;  // layers/models kept alive for the closure
};

Parameter<double>* random_param(ParameterSet<double>& set,
                                const std::string& name,
                                std::vector<std::size_t> dims, Rng& rng) {
  Parameter<double>& p = set.create(name, std::move(dims));
  for (auto& v : p.values) v = rng.uniform(-1.0, 1.0);
  return &p;
}

void collect_params(ParameterSet<double>& set, GradCheckCase& check) {
  for (std::size_t i = 0; i < set.size(); ++i)
    check.params.push_back(&set.at(i));
}

GradCheckCase make_linear_case(std::uint64_t seed) {
  auto state = std::make_shared<CaseState>();
  Rng rng(seed);
  state->leaves.push_back(random_leaf(Shape{1, 1, 5}, rng));
  GradCheckCase check;
  check.name = "ops/linear_scale";
  check.inputs = state->leaves;
  check.build = [state]() { return sum_all(scale(state->leaves[0], 2.0)); };
  return check;
}

GradCheckCase make_conv_case(const std::string& name, Shape in_shape,
                             std::size_t cout, std::size_t K, int stride,
                             Padding pad, bool with_bias, std::uint64_t seed) {
  auto state = std::make_shared<CaseState>();
  Rng rng(seed);
  state->leaves.push_back(random_leaf(in_shape, rng));
  Parameter<double>* w = random_param(state->params, "kernel",
                                      {cout, in_shape.channels, K}, rng);
  Parameter<double>* b =
      with_bias ? random_param(state->params, "bias", {cout}, rng) : nullptr;
  auto probe_rng = std::make_shared<Rng>(Rng::derive(seed, 1));
  GradCheckCase check;
  check.name = name;
  check.inputs = state->leaves;
  collect_params(state->params, check);
  check.build = [state, w, b, cout, K, in_shape, stride, pad, seed]() {
    Tensor<double> kernel =
        Tensor<double>::param(*w, Shape{cout, in_shape.channels, K});
    std::optional<Tensor<double>> bias;
    if (b) bias = Tensor<double>::param(*b, Shape{1, 1, cout});
    Tensor<double> out = conv1d(state->leaves[0], kernel, bias, stride, pad);
    Rng prng(Rng::derive(seed, 1));
    return probe(out, prng);
  };
  return check;
}

GradCheckCase make_unary_case(const std::string& name,
                              Tensor<double> (*op)(const Tensor<double>&),
                              Shape shape, std::uint64_t seed) {
  auto state = std::make_shared<CaseState>();
  Rng rng(seed);
  state->leaves.push_back(random_leaf(shape, rng));
  GradCheckCase check;
  check.name = name;
  check.inputs = state->leaves;
  check.build = [state, op, seed]() {
    Rng prng(Rng::derive(seed, 1));
    return probe(op(state->leaves[0]), prng);
  };
  return check;
}

GradCheckCase make_pow_case(int q, std::uint64_t seed) {
  auto state = std::make_shared<CaseState>();
  Rng rng(seed);
  state->leaves.push_back(random_leaf(Shape{2, 2, 9}, rng));
  GradCheckCase check;
  check.name = "ops/elementwise_pow_q" + std::to_string(q);
  check.inputs = state->leaves;
  check.build = [state, q, seed]() {
    Rng prng(Rng::derive(seed, 1));
    return probe(elementwise_pow(state->leaves[0], q), prng);
  };
  return check;
}

GradCheckCase make_resample_case(const std::string& name, bool up, int factor,
                                 std::uint64_t seed) {
  auto state = std::make_shared<CaseState>();
  Rng rng(seed);
  state->leaves.push_back(random_leaf(Shape{2, 3, 12}, rng));
  GradCheckCase check;
  check.name = name;
  check.inputs = state->leaves;
  check.build = [state, up, factor, seed]() {
    Rng prng(Rng::derive(seed, 1));
    Tensor<double> out = up ? upsample_nearest(state->leaves[0], factor)
                            : decimate(state->leaves[0], factor);
    return probe(out, prng);
  };
  return check;
}

GradCheckCase make_pool_dense_case(std::uint64_t seed) {
  auto state = std::make_shared<CaseState>();
  Rng rng(seed);
  state->leaves.push_back(random_leaf(Shape{2, 4, 10}, rng));
  Parameter<double>* w = random_param(state->params, "w", {1, 4}, rng);
  Parameter<double>* b = random_param(state->params, "b", {1}, rng);
  GradCheckCase check;
  check.name = "ops/pool_dense";
  check.inputs = state->leaves;
  collect_params(state->params, check);
  check.build = [state, w, b, seed]() {
    Tensor<double> pooled = adaptive_avg_pool(state->leaves[0]);
    Tensor<double> out =
        dense(pooled, Tensor<double>::param(*w, Shape{1, 1, 4}),
              Tensor<double>::param(*b, Shape{1, 1, 1}));
    Rng prng(Rng::derive(seed, 1));
    return probe(out, prng);
  };
  return check;
}

GradCheckCase make_selfonn_case(int q, std::uint64_t seed) {
  auto state = std::make_shared<CaseState>();
  Rng rng(seed);
  state->leaves.push_back(random_leaf(Shape{2, 2, 12}, rng, -0.9, 0.9));
  auto layer = std::make_shared<SelfOnn1d<double>>(
      state->params, "layer",
      SelfOnnConfig{2, 3, 3, q, 1, true, Padding::same()}, rng);
  state->extra = layer;
  GradCheckCase check;
  check.name = "selfonn/q" + std::to_string(q);
  check.inputs = state->leaves;
  collect_params(state->params, check);
  check.build = [state, layer, seed]() {
    Rng prng(Rng::derive(seed, 1));
    return probe(layer->forward(state->leaves[0], true), prng);
  };
  return check;
}

GradCheckCase make_res_block_case(const std::string& name, bool down, int in_c,
                                  int out_c, std::uint64_t seed) {
  auto state = std::make_shared<CaseState>();
  Rng rng(seed);
  state->leaves.push_back(random_leaf(
      Shape{1, static_cast<std::size_t>(in_c), 8}, rng, -0.9, 0.9));
  std::shared_ptr<void> block;
  if (down) {
    block = std::make_shared<ResDownBlock<double>>(state->params, "block", in_c,
                                                   out_c, 3, 3, false, 0.0, rng);
  } else {
    block = std::make_shared<ResUpBlock<double>>(state->params, "block", in_c,
                                                 out_c, 3, 3, false, 0.0, rng);
  }
  state->extra = block;
  GradCheckCase check;
  check.name = name;
  check.inputs = state->leaves;
  collect_params(state->params, check);
  check.build = [state, block, down, seed]() {
    Rng prng(Rng::derive(seed, 1));
    Tensor<double> out;
    if (down) {
      out = static_cast<ResDownBlock<double>*>(block.get())
                ->forward(state->leaves[0], false, true, nullptr);
    } else {
      out = static_cast<ResUpBlock<double>*>(block.get())
                ->forward(state->leaves[0], false, true, nullptr);
    }
    return probe(out, prng);
  };
  return check;
}

DiscriminatorConfig tiny_discriminator_config() {
  DiscriminatorConfig cfg;
  cfg.channels = {3, 3, 4, 4, 4, 4};
  return cfg;
}

GradCheckCase make_discriminator_case(std::uint64_t seed) {
  auto state = std::make_shared<CaseState>();
  Rng rng(seed);
  state->leaves.push_back(random_leaf(Shape{1, 2, 64}, rng, -0.9, 0.9));
  auto disc =
      std::make_shared<Discriminator<double>>(tiny_discriminator_config(), seed);
  state->extra = disc;
  GradCheckCase check;
  check.name = "model/discriminator";
  check.inputs = state->leaves;
  collect_params(disc->params(), check);
  check.build = [state, disc]() {
    // Scalar per sample and B=1: the raw score is the probe.
    return disc->forward(state->leaves[0], true);
  };
  return check;
}

SpectrogramConfig tiny_spectrogram_config() {
  return SpectrogramConfig::hann(16, 8);
}

GradCheckCase make_spectrogram_path_case(std::uint64_t seed) {
  auto state = std::make_shared<CaseState>();
  Rng rng(seed);
  state->leaves.push_back(random_leaf(Shape{1, 2, 64}, rng, -0.9, 0.9));
  auto target = std::make_shared<Tensor<double>>(
      random_leaf(Shape{1, 2, 64}, rng, -0.9, 0.9));
  target->node()->requires_grad = false;
  state->extra = target;
  GradCheckCase check;
  check.name = "loss/spectrogram_l1";
  check.inputs = state->leaves;
  check.build = [state, target]() {
    const SpectrogramConfig cfg = tiny_spectrogram_config();
    return mean_all(abs(
        sub(spectrogram(state->leaves[0], cfg), spectrogram(*target, cfg))));
  };
  return check;
}

struct ObjectiveState {
  std::shared_ptr<Generator<double>> gen;
  std::shared_ptr<Discriminator<double>> disc;
  Tensor<double> corrupted;
  Tensor<double> clean;
};

GradCheckCase make_generator_objective_case(std::uint64_t seed) {
  Rng rng(seed);
  GeneratorConfig gcfg;
  gcfg.encoder_channels = {2, 3, 3, 4, 4};
  auto state = std::make_shared<ObjectiveState>();
  state->gen = std::make_shared<Generator<double>>(gcfg, seed);
  state->disc = std::make_shared<Discriminator<double>>(
      tiny_discriminator_config(), seed + 1);
  state->corrupted = random_leaf(Shape{1, 2, 64}, rng, -0.9, 0.9);
  state->clean = random_leaf(Shape{1, 2, 64}, rng, -0.9, 0.9);
  state->clean.node()->requires_grad = false;

  GradCheckCase check;
  check.name = "loss/generator_objective";
  check.inputs = {state->corrupted};
  collect_params(state->gen->params(), check);
  collect_params(state->disc->params(), check);
  check.build = [state]() {
    Tensor<double> x_tilde =
        state->gen->forward(state->corrupted, false, true, nullptr);
    Tensor<double> score = state->disc->forward(x_tilde, true);
    LossWeights weights;  // default 100 / 200
    return generator_loss(x_tilde, state->clean, score, weights,
                          tiny_spectrogram_config());
  };
  return check;
}

}  // namespace

std::vector<GradCheckCase> standard_gradient_suite(std::uint64_t seed) {
  std::vector<GradCheckCase> cases;
  std::uint64_t k = 0;
  auto next = [&]() { return Rng::derive(seed, 0x6C0 + k++); };

  cases.push_back(make_linear_case(next()));
  cases.push_back(make_conv_case("ops/conv1d_same", Shape{2, 3, 16}, 4, 3, 1,
                                 Padding::same(), true, next()));
  cases.push_back(make_conv_case("ops/conv1d_stride2", Shape{2, 2, 17}, 3, 3, 2,
                                 Padding::explicit_pad(1), true, next()));
  cases.push_back(make_conv_case("ops/conv1d_no_bias", Shape{1, 2, 10}, 2, 5, 1,
                                 Padding::explicit_pad(0), false, next()));
  cases.push_back(make_pow_case(2, next()));
  cases.push_back(make_pow_case(3, next()));
  cases.push_back(
      make_unary_case("ops/tanh", &tanh<double>, Shape{2, 2, 11}, next()));
  cases.push_back(make_unary_case("ops/instance_norm",
                                  +[](const Tensor<double>& x) {
                                    return instance_norm(x, 1e-5);
                                  },
                                  Shape{2, 3, 12}, next()));
  cases.push_back(make_unary_case("ops/power_stack_q3",
                                  +[](const Tensor<double>& x) {
                                    return power_stack(x, 3);
                                  },
                                  Shape{2, 2, 9}, next()));
  cases.push_back(
      make_resample_case("ops/upsample_nearest", true, 2, next()));
  cases.push_back(make_resample_case("ops/decimate", false, 2, next()));
  cases.push_back(make_pool_dense_case(next()));
  cases.push_back(make_selfonn_case(1, next()));
  cases.push_back(make_selfonn_case(2, next()));
  cases.push_back(make_selfonn_case(3, next()));
  cases.push_back(
      make_res_block_case("model/res_down_block", true, 3, 4, next()));
  cases.push_back(make_res_block_case("model/res_down_block_identity", true, 3,
                                      3, next()));
  cases.push_back(make_res_block_case("model/res_up_block", false, 3, 2, next()));
  cases.push_back(make_discriminator_case(next()));
  cases.push_back(make_spectrogram_path_case(next()));
  cases.push_back(make_generator_objective_case(next()));
  return cases;
}

std::vector<GradCheckResult> run_standard_gradient_suite(
    std::uint64_t seed, const GradCheckOptions& options,
    const std::string& name_filter) {
  std::vector<GradCheckResult> results;
  for (const GradCheckCase& check : standard_gradient_suite(seed)) {
    if (!name_filter.empty() &&
        check.name.find(name_filter) == std::string::npos)
      continue;
    results.push_back(run_gradient_check(check, options));
  }
  return results;
}

}  // namespace brsr
