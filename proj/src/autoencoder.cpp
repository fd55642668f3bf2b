#include "canyonpl/autoencoder.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "canyonpl/blob.hpp"
#include "canyonpl/error.hpp"
#include "canyonpl/rng.hpp"

namespace canyonpl::ae {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMatMap = Eigen::Map<const Eigen::MatrixXd>;
using MatMap = Eigen::Map<Eigen::MatrixXd>;
using ConstVecMap = Eigen::Map<const Eigen::VectorXd>;
using VecMap = Eigen::Map<Eigen::VectorXd>;

std::string to_string(Variant v) {
  switch (v) {
    case Variant::grouped:
      return "grouped";
    case Variant::single:
      return "single";
    case Variant::serial:
      return "serial";
  }
  return "grouped";
}

Variant parse_variant(const std::string& s) {
  if (s == "grouped") return Variant::grouped;
  if (s == "single") return Variant::single;
  if (s == "serial") return Variant::serial;
  throw ConfigError("unknown autoencoder variant '" + s + "' (expected grouped, single or serial)");
}

LayerSpec LayerSpec::conv(int filters, int kernel, Activation act) {
  LayerSpec s;
  s.kind = LayerKind::conv1d;
  s.filters = filters;
  s.kernel = kernel;
  s.activation = act;
  return s;
}

LayerSpec LayerSpec::max_pool(int factor) {
  LayerSpec s;
  s.kind = LayerKind::max_pool1d;
  s.factor = factor;
  return s;
}

LayerSpec LayerSpec::up_sample(int factor) {
  LayerSpec s;
  s.kind = LayerKind::up_sample1d;
  s.factor = factor;
  return s;
}

LayerSpec LayerSpec::dense(int units, Activation act) {
  LayerSpec s;
  s.kind = LayerKind::dense;
  s.units = units;
  s.activation = act;
  return s;
}

LayerSpec LayerSpec::flatten(int out_rows, int out_cols) {
  LayerSpec s;
  s.kind = LayerKind::flatten;
  s.out_rows = out_rows;
  s.out_cols = out_cols;
  return s;
}

LayerSpec LayerSpec::parallel_add(std::vector<LayerSpec> a, std::vector<LayerSpec> b) {
  LayerSpec s;
  s.kind = LayerKind::parallel_add;
  s.branch_a = std::move(a);
  s.branch_b = std::move(b);
  return s;
}

Architecture Architecture::miniature() {
  Architecture a;
  a.input_rows = 20;
  a.input_cols = 4;
  a.conv1_filters = 4;
  a.conv1_kernel = 3;
  a.pool1 = 2;
  a.branch_filters = 4;
  a.branch_kernel = 3;
  a.branch_pool = 5;
  a.conv2_filters = 2;
  a.conv2_kernel = 3;
  a.pool2 = 2;
  a.dense_units = 5;
  a.latent = 3;
  a.output_kernel = 3;
  return a;
}

NetworkSpec make_network_spec(const Architecture& a) {
  NetworkSpec spec;
  spec.input = {a.input_rows, a.input_cols};

  const std::vector<LayerSpec> branch = {LayerSpec::conv(a.branch_filters, a.branch_kernel),
                                         LayerSpec::max_pool(a.branch_pool)};
  spec.encoder.push_back(LayerSpec::conv(a.conv1_filters, a.conv1_kernel));
  spec.encoder.push_back(LayerSpec::max_pool(a.pool1));
  switch (a.variant) {
    case Variant::grouped:
      spec.encoder.push_back(LayerSpec::parallel_add(branch, branch));
      break;
    case Variant::single:
      spec.encoder.insert(spec.encoder.end(), branch.begin(), branch.end());
      break;
    case Variant::serial:
      // Second conv-net follows the first; its pooling is dropped so the
      // latent path keeps the same length as the other variants.
      spec.encoder.insert(spec.encoder.end(), branch.begin(), branch.end());
      spec.encoder.push_back(LayerSpec::conv(a.branch_filters, a.branch_kernel));
      break;
  }
  spec.encoder.push_back(LayerSpec::conv(a.conv2_filters, a.conv2_kernel));
  spec.encoder.push_back(LayerSpec::max_pool(a.pool2));
  spec.encoder.push_back(LayerSpec::flatten());
  spec.encoder.push_back(LayerSpec::dense(a.dense_units));
  spec.encoder.push_back(LayerSpec::dense(a.latent));

  const int bottleneck_rows = a.input_rows / a.pool1 / a.branch_pool / a.pool2;
  spec.decoder.push_back(LayerSpec::dense(a.dense_units));
  spec.decoder.push_back(LayerSpec::dense(bottleneck_rows * a.conv2_filters));
  spec.decoder.push_back(LayerSpec::flatten(bottleneck_rows, a.conv2_filters));
  spec.decoder.push_back(LayerSpec::up_sample(a.pool2));
  spec.decoder.push_back(LayerSpec::conv(a.branch_filters, a.conv2_kernel));
  spec.decoder.push_back(LayerSpec::up_sample(a.branch_pool));
  spec.decoder.push_back(LayerSpec::conv(a.conv1_filters, a.branch_kernel));
  spec.decoder.push_back(LayerSpec::up_sample(a.pool1));
  spec.decoder.push_back(LayerSpec::conv(a.input_cols, a.output_kernel, Activation::relu));
  return spec;
}

// ---------------------------------------------------------------------------
// Layer kernels

namespace {

void activate(Tensor& z, Activation act) {
  switch (act) {
    case Activation::linear:
      break;
    case Activation::tanh:
      z = z.array().tanh().matrix();
      break;
    case Activation::relu:
      z = z.cwiseMax(0.0);
      break;
  }
}

// d(loss)/d(pre-activation), written in terms of the activation output.
Tensor activation_backward(const Tensor& grad_out, const Tensor& out, Activation act) {
  switch (act) {
    case Activation::linear:
      return grad_out;
    case Activation::tanh:
      return (grad_out.array() * (1.0 - out.array().square())).matrix();
    case Activation::relu:
      return (grad_out.array() * (out.array() > 0.0).cast<double>()).matrix();
  }
  return grad_out;
}

Tensor im2col(const Tensor& x, int kernel) {
  const Eigen::Index len = x.rows();
  const Eigen::Index ch = x.cols();
  const int pad = (kernel - 1) / 2;
  Tensor cols = Tensor::Zero(len, kernel * ch);
  for (int k = 0; k < kernel; ++k) {
    const Eigen::Index shift = k - pad;
    const Eigen::Index t0 = std::max<Eigen::Index>(0, -shift);
    const Eigen::Index t1 = std::min<Eigen::Index>(len, len - shift);
    if (t1 > t0) cols.block(t0, k * ch, t1 - t0, ch) = x.block(t0 + shift, 0, t1 - t0, ch);
  }
  return cols;
}

Tensor col2im(const Tensor& cols, int kernel, Eigen::Index ch) {
  const Eigen::Index len = cols.rows();
  const int pad = (kernel - 1) / 2;
  Tensor x = Tensor::Zero(len, ch);
  for (int k = 0; k < kernel; ++k) {
    const Eigen::Index shift = k - pad;
    const Eigen::Index t0 = std::max<Eigen::Index>(0, -shift);
    const Eigen::Index t1 = std::min<Eigen::Index>(len, len - shift);
    if (t1 > t0) x.block(t0 + shift, 0, t1 - t0, ch) += cols.block(t0, k * ch, t1 - t0, ch);
  }
  return x;
}

Tensor reshape_row_major(const Tensor& x, Eigen::Index rows, Eigen::Index cols) {
  const RowMajor rm = x;
  return Eigen::Map<const RowMajor>(rm.data(), rows, cols);
}

struct LayerState {
  Tensor cols;                          // conv: im2col of the input
  std::vector<Eigen::Index> argmax;     // max-pool: winning input row per output cell
};

Shape flatten_shape(const LayerSpec& s, Shape in) {
  const Eigen::Index total = in.rows * in.cols;
  if (s.out_cols == 0) return {1, total};
  if (static_cast<Eigen::Index>(s.out_rows) * s.out_cols != total)
    throw ShapeError("reshape to " + std::to_string(s.out_rows) + "x" + std::to_string(s.out_cols) +
                     " does not preserve " + std::to_string(total) + " elements");
  return {s.out_rows, s.out_cols};
}

// Forward for every kind except parallel_add. Fills `state` when given.
Tensor forward_simple(const LayerSpec& s, std::span<const double> p, const Tensor& x, LayerState* state) {
  switch (s.kind) {
    case LayerKind::conv1d: {
      const Eigen::Index rows = s.kernel * x.cols();
      const ConstMatMap w(p.data(), rows, s.filters);
      const ConstVecMap b(p.data() + rows * s.filters, s.filters);
      Tensor cols = im2col(x, s.kernel);
      Tensor z = cols * w;
      z.rowwise() += b.transpose();
      activate(z, s.activation);
      if (state) state->cols = std::move(cols);
      return z;
    }
    case LayerKind::dense: {
      const Eigen::Index n = x.cols();
      const ConstMatMap w(p.data(), n, s.units);
      const ConstVecMap b(p.data() + n * s.units, s.units);
      Tensor z = x * w;
      z.row(0) += b.transpose();
      activate(z, s.activation);
      return z;
    }
    case LayerKind::max_pool1d: {
      const Eigen::Index out_len = x.rows() / s.factor;
      Tensor y(out_len, x.cols());
      if (state) state->argmax.assign(static_cast<std::size_t>(out_len * x.cols()), 0);
      for (Eigen::Index c = 0; c < x.cols(); ++c) {
        for (Eigen::Index r = 0; r < out_len; ++r) {
          Eigen::Index best = r * s.factor;
          for (Eigen::Index t = best + 1; t < (r + 1) * s.factor; ++t)
            if (x(t, c) > x(best, c)) best = t;
          y(r, c) = x(best, c);
          if (state) state->argmax[static_cast<std::size_t>(c * out_len + r)] = best;
        }
      }
      return y;
    }
    case LayerKind::up_sample1d: {
      Tensor y(x.rows() * s.factor, x.cols());
      for (Eigen::Index r = 0; r < y.rows(); ++r) y.row(r) = x.row(r / s.factor);
      return y;
    }
    case LayerKind::flatten: {
      const Shape out = flatten_shape(s, {x.rows(), x.cols()});
      return reshape_row_major(x, out.rows, out.cols);
    }
    case LayerKind::parallel_add:
      break;
  }
  throw ShapeError("parallel_add needs the network driver");
}

// Backward for every kind except parallel_add. `x`/`y` are the layer input
// and output; returns the input gradient when `want_input` is set.
Tensor backward_simple(const LayerSpec& s, std::span<const double> p, const Tensor& x, const Tensor& y,
                       const LayerState& state, const Tensor& dy, std::span<double> g, bool want_input) {
  switch (s.kind) {
    case LayerKind::conv1d: {
      const Eigen::Index rows = s.kernel * x.cols();
      const ConstMatMap w(p.data(), rows, s.filters);
      MatMap gw(g.data(), rows, s.filters);
      VecMap gb(g.data() + rows * s.filters, s.filters);
      const Tensor dz = activation_backward(dy, y, s.activation);
      gw.noalias() += state.cols.transpose() * dz;
      gb += dz.colwise().sum().transpose();
      if (!want_input) return {};
      const Tensor dcols = dz * w.transpose();
      return col2im(dcols, s.kernel, x.cols());
    }
    case LayerKind::dense: {
      const Eigen::Index n = x.cols();
      const ConstMatMap w(p.data(), n, s.units);
      MatMap gw(g.data(), n, s.units);
      VecMap gb(g.data() + n * s.units, s.units);
      const Tensor dz = activation_backward(dy, y, s.activation);
      gw.noalias() += x.transpose() * dz;
      gb += dz.row(0).transpose();
      if (!want_input) return {};
      return dz * w.transpose();
    }
    case LayerKind::max_pool1d: {
      Tensor dx = Tensor::Zero(x.rows(), x.cols());
      const Eigen::Index out_len = dy.rows();
      for (Eigen::Index c = 0; c < dy.cols(); ++c)
        for (Eigen::Index r = 0; r < out_len; ++r)
          dx(state.argmax[static_cast<std::size_t>(c * out_len + r)], c) += dy(r, c);
      return dx;
    }
    case LayerKind::up_sample1d: {
      Tensor dx = Tensor::Zero(x.rows(), x.cols());
      for (Eigen::Index r = 0; r < dy.rows(); ++r) dx.row(r / s.factor) += dy.row(r);
      return dx;
    }
    case LayerKind::flatten:
      return reshape_row_major(dy, x.rows(), x.cols());
    case LayerKind::parallel_add:
      break;
  }
  throw ShapeError("parallel_add needs the network driver");
}

}  // namespace

// ---------------------------------------------------------------------------
// Compiled networks

namespace detail {

struct Node {
  LayerSpec spec;  // branches moved into a/b
  Shape in;
  Shape out;
  std::size_t offset = 0;
  std::size_t count = 0;
  std::unique_ptr<Compiled> a;
  std::unique_ptr<Compiled> b;
};

struct Compiled {
  std::vector<Node> nodes;
  Shape in;
  Shape out;
};

struct LayerCache {
  Tensor input;
  Tensor output;
  LayerState state;
  std::unique_ptr<Cache> a;
  std::unique_ptr<Cache> b;
};

struct Cache {
  std::vector<LayerCache> layers;
};

}  // namespace detail

namespace {

using detail::Cache;
using detail::Compiled;
using detail::Node;

std::unique_ptr<Compiled> compile(const std::vector<LayerSpec>& layers, Shape in, std::size_t& offset,
                                  const std::string& where);

Node compile_node(const LayerSpec& spec, Shape in, std::size_t& offset, const std::string& where) {
  Node node;
  node.in = in;
  node.offset = offset;
  if (spec.kind == LayerKind::parallel_add) {
    node.spec.kind = LayerKind::parallel_add;
    node.a = compile(spec.branch_a, in, offset, where + " branch a");
    node.b = compile(spec.branch_b, in, offset, where + " branch b");
    if (!(node.a->out == node.b->out)) throw ShapeError(where + ": parallel branches produce different shapes");
    node.out = node.a->out;
    node.count = offset - node.offset;
    return node;
  }
  node.spec = spec;
  node.out = layer_output_shape(spec, in);
  node.count = layer_parameter_count(spec, in);
  offset += node.count;
  return node;
}

std::unique_ptr<Compiled> compile(const std::vector<LayerSpec>& layers, Shape in, std::size_t& offset,
                                  const std::string& where) {
  auto c = std::make_unique<Compiled>();
  c->in = in;
  Shape cur = in;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const std::string here = where + " layer " + std::to_string(i);
    try {
      c->nodes.push_back(compile_node(layers[i], cur, offset, here));
    } catch (const ShapeError& e) {
      const std::string msg = e.what();
      throw ShapeError(msg.rfind(here, 0) == 0 ? msg : here + ": " + msg);
    }
    cur = c->nodes.back().out;
  }
  c->out = cur;
  return c;
}

void check_input(const Tensor& x, Shape expected, const char* what) {
  if (x.rows() != expected.rows || x.cols() != expected.cols)
    throw ShapeError(std::string(what) + " shape " + std::to_string(x.rows()) + "x" + std::to_string(x.cols()) +
                     " does not match " + std::to_string(expected.rows) + "x" + std::to_string(expected.cols));
}

Tensor run_forward(const Compiled& net, std::span<const double> params, const Tensor& x, Cache* cache) {
  if (cache) cache->layers.resize(net.nodes.size());
  Tensor cur = x;
  for (std::size_t i = 0; i < net.nodes.size(); ++i) {
    const Node& node = net.nodes[i];
    Tensor next;
    if (node.spec.kind == LayerKind::parallel_add) {
      std::unique_ptr<Cache> ca = cache ? std::make_unique<Cache>() : nullptr;
      std::unique_ptr<Cache> cb = cache ? std::make_unique<Cache>() : nullptr;
      next = run_forward(*node.a, params, cur, ca.get());
      next += run_forward(*node.b, params, cur, cb.get());
      if (cache) {
        cache->layers[i].a = std::move(ca);
        cache->layers[i].b = std::move(cb);
      }
    } else {
      const auto p = params.subspan(node.offset, node.count);
      next = forward_simple(node.spec, p, cur, cache ? &cache->layers[i].state : nullptr);
    }
    if (cache) {
      cache->layers[i].input = std::move(cur);
      cache->layers[i].output = next;
    }
    cur = std::move(next);
  }
  return cur;
}

Tensor run_backward(const Compiled& net, std::span<const double> params, const Cache& cache, Tensor dy,
                    std::span<double> grad, bool want_input) {
  for (std::size_t i = net.nodes.size(); i-- > 0;) {
    const Node& node = net.nodes[i];
    const auto& lc = cache.layers[i];
    const bool need = want_input || i > 0;
    if (node.spec.kind == LayerKind::parallel_add) {
      Tensor da = run_backward(*node.a, params, *lc.a, dy, grad, need);
      Tensor db = run_backward(*node.b, params, *lc.b, dy, grad, need);
      dy = need ? Tensor(da + db) : Tensor();
    } else {
      const auto p = params.subspan(node.offset, node.count);
      const auto g = grad.subspan(node.offset, node.count);
      dy = backward_simple(node.spec, p, lc.input, lc.output, lc.state, dy, g, need);
    }
  }
  return dy;
}

void init_params(const Compiled& net, std::span<double> params, Rng& rng) {
  for (const auto& node : net.nodes) {
    if (node.spec.kind == LayerKind::parallel_add) {
      init_params(*node.a, params, rng);
      init_params(*node.b, params, rng);
      continue;
    }
    if (node.count == 0) continue;
    Eigen::Index fan_in = 0;
    Eigen::Index weights = 0;
    if (node.spec.kind == LayerKind::conv1d) {
      fan_in = node.spec.kernel * node.in.cols;
      weights = fan_in * node.spec.filters;
    } else {
      fan_in = node.in.cols;
      weights = fan_in * node.spec.units;
    }
    // Uniform with variance 1/fan_in; biases start at zero.
    const double limit = std::sqrt(3.0 / static_cast<double>(fan_in));
    for (Eigen::Index k = 0; k < weights; ++k)
      params[node.offset + static_cast<std::size_t>(k)] = rng.uniform(-limit, limit);
    for (std::size_t k = static_cast<std::size_t>(weights); k < node.count; ++k) params[node.offset + k] = 0.0;
  }
}

}  // namespace

Shape layer_output_shape(const LayerSpec& s, Shape in) {
  switch (s.kind) {
    case LayerKind::conv1d:
      if (s.filters < 1 || s.kernel < 1) throw ShapeError("conv1d needs positive filters and kernel");
      return {in.rows, s.filters};
    case LayerKind::max_pool1d:
      if (s.factor < 1) throw ShapeError("max-pool factor must be positive");
      if (in.rows / s.factor < 1) throw ShapeError("max-pool factor exceeds the sequence length");
      return {in.rows / s.factor, in.cols};
    case LayerKind::up_sample1d:
      if (s.factor < 1) throw ShapeError("up-sample factor must be positive");
      return {in.rows * s.factor, in.cols};
    case LayerKind::dense:
      if (in.rows != 1) throw ShapeError("dense layer needs a flattened (1 x n) input");
      if (s.units < 1) throw ShapeError("dense layer needs positive units");
      return {1, s.units};
    case LayerKind::flatten:
      return flatten_shape(s, in);
    case LayerKind::parallel_add: {
      std::size_t offset = 0;
      return compile({s}, in, offset, "parallel")->out;
    }
  }
  throw ShapeError("unknown layer kind");
}

std::size_t layer_parameter_count(const LayerSpec& s, Shape in) {
  switch (s.kind) {
    case LayerKind::conv1d:
      return static_cast<std::size_t>(s.kernel * in.cols * s.filters + s.filters);
    case LayerKind::dense:
      return static_cast<std::size_t>(in.cols * s.units + s.units);
    case LayerKind::parallel_add: {
      std::size_t offset = 0;
      compile({s}, in, offset, "parallel");
      return offset;
    }
    default:
      return 0;
  }
}

Tensor layer_forward(const LayerSpec& spec, std::span<const double> params, const Tensor& input) {
  std::size_t offset = 0;
  const auto net = compile({spec}, {input.rows(), input.cols()}, offset, "layer");
  if (params.size() != offset) throw ShapeError("parameter count mismatch");
  return run_forward(*net, params, input, nullptr);
}

Tensor layer_backward(const LayerSpec& spec, std::span<const double> params, const Tensor& input,
                      const Tensor& grad_output, std::span<double> grad) {
  std::size_t offset = 0;
  const auto net = compile({spec}, {input.rows(), input.cols()}, offset, "layer");
  if (params.size() != offset || grad.size() != offset) throw ShapeError("parameter count mismatch");
  Cache cache;
  const Tensor out = run_forward(*net, params, input, &cache);
  check_input(grad_output, {out.rows(), out.cols()}, "upstream gradient");
  return run_backward(*net, params, cache, grad_output, grad, true);
}

Trace::Trace() = default;
Trace::~Trace() = default;
Trace::Trace(Trace&&) noexcept = default;
Trace& Trace::operator=(Trace&&) noexcept = default;

Network::Network(NetworkSpec spec) : spec_(std::move(spec)) {
  std::size_t offset = 0;
  encoder_ = compile(spec_.encoder, spec_.input, offset, "encoder");
  decoder_ = compile(spec_.decoder, encoder_->out, offset, "decoder");
  if (!(decoder_->out == spec_.input))
    throw ShapeError("decoder output " + std::to_string(decoder_->out.rows) + "x" +
                     std::to_string(decoder_->out.cols) + " does not reproduce the input shape");
}

Network::~Network() = default;
Network::Network(Network&&) noexcept = default;
Network& Network::operator=(Network&&) noexcept = default;

Shape Network::latent_shape() const { return encoder_->out; }

std::size_t Network::parameter_count() const {
  std::size_t total = 0;
  auto count = [&](const Compiled& c, auto&& self) -> void {
    for (const auto& n : c.nodes) {
      if (n.spec.kind == LayerKind::parallel_add) {
        self(*n.a, self);
        self(*n.b, self);
      } else {
        total += n.count;
      }
    }
  };
  count(*encoder_, count);
  count(*decoder_, count);
  return total;
}

std::vector<double> Network::initial_parameters(Rng& rng) const {
  std::vector<double> params(parameter_count(), 0.0);
  init_params(*encoder_, params, rng);
  init_params(*decoder_, params, rng);
  return params;
}

Tensor Network::encode(std::span<const double> params, const Tensor& input) const {
  check_input(input, spec_.input, "encoder input");
  return run_forward(*encoder_, params, input, nullptr);
}

Tensor Network::decode(std::span<const double> params, const Tensor& latent) const {
  check_input(latent, encoder_->out, "decoder input");
  return run_forward(*decoder_, params, latent, nullptr);
}

Tensor Network::forward(std::span<const double> params, const Tensor& input, Trace* trace) const {
  if (params.size() != parameter_count()) throw ShapeError("parameter count mismatch");
  check_input(input, spec_.input, "network input");
  if (trace) {
    trace->encoder = std::make_unique<Cache>();
    trace->decoder = std::make_unique<Cache>();
  }
  const Tensor z = run_forward(*encoder_, params, input, trace ? trace->encoder.get() : nullptr);
  return run_forward(*decoder_, params, z, trace ? trace->decoder.get() : nullptr);
}

void Network::backward(std::span<const double> params, const Trace& trace, const Tensor& grad_output,
                       std::span<double> grad) const {
  if (!trace.encoder || !trace.decoder) throw Error("backward called without a forward trace");
  if (grad.size() != parameter_count()) throw ShapeError("gradient size mismatch");
  check_input(grad_output, spec_.input, "output gradient");
  const Tensor dz = run_backward(*decoder_, params, *trace.decoder, grad_output, grad, true);
  run_backward(*encoder_, params, *trace.encoder, dz, grad, false);
}

// ---------------------------------------------------------------------------
// Loss and optimizer

LossResult masked_logcosh_loss(const Tensor& output, const Tensor& input) {
  if (output.rows() != input.rows() || output.cols() != input.cols())
    throw ShapeError("loss: output and input shapes differ");
  const double n = static_cast<double>(output.size());
  LossResult r;
  r.grad.resize(output.rows(), output.cols());
  double masked = 0.0;
  double full = 0.0;
  for (Eigen::Index c = 0; c < output.cols(); ++c) {
    for (Eigen::Index i = 0; i < output.rows(); ++i) {
      const double d = output(i, c) - input(i, c);
      const double a = std::abs(d);
      // log(cosh(d)) without overflow.
      const double lc = a + std::log1p(std::exp(-2.0 * a)) - std::log(2.0);
      const bool active = input(i, c) != 0.0;
      full += lc;
      if (active) masked += lc;
      r.grad(i, c) = ((active ? 1.0 : 0.0) + 0.1) * std::tanh(d) / n;
    }
  }
  r.loss = masked / n + 0.1 * full / n;
  return r;
}

void AdamState::update(std::span<double> params, std::span<const double> grad, double lr) {
  if (params.size() != m.size() || grad.size() != m.size()) throw ShapeError("Adam state size mismatch");
  ++step;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m[i] = beta1 * m[i] + (1.0 - beta1) * grad[i];
    v[i] = beta2 * v[i] + (1.0 - beta2) * grad[i] * grad[i];
    const double mhat = m[i] / bc1;
    const double vhat = v[i] / bc2;
    params[i] -= lr * mhat / (std::sqrt(vhat) + epsilon);
  }
}

// ---------------------------------------------------------------------------
// Training

TrainedNetwork train_network(const Network& net, std::span<const Tensor> inputs, const TrainConfig& config,
                             std::uint64_t seed) {
  if (config.batch_size == 0) throw ConfigError("batch size must be positive");
  if (!(config.learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
  if (inputs.size() < config.batch_size)
    throw InvariantError("need at least batch-size (" + std::to_string(config.batch_size) +
                         ") training inputs, got " + std::to_string(inputs.size()));
  for (const auto& x : inputs) check_input(x, net.input_shape(), "training input");

  const std::size_t n_val = static_cast<std::size_t>(std::floor(config.validation_fraction *
                                                                static_cast<double>(inputs.size())));
  const std::size_t n_train = inputs.size() - n_val;

  Rng rng(seed);
  TrainedNetwork out;
  out.params = net.initial_parameters(rng);
  AdamState adam(out.params.size());
  std::vector<double> grad(out.params.size());
  std::vector<std::size_t> order(n_train);
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(order);
    double epoch_loss = 0.0;
    std::size_t batch_index = 0;
    for (std::size_t start = 0; start < n_train; start += config.batch_size, ++batch_index) {
      const std::size_t end = std::min(n_train, start + config.batch_size);
      const double scale = 1.0 / static_cast<double>(end - start);
      std::fill(grad.begin(), grad.end(), 0.0);
      for (std::size_t k = start; k < end; ++k) {
        const Tensor& x = inputs[order[k]];
        Trace trace;
        const Tensor y = net.forward(out.params, x, &trace);
        LossResult loss = masked_logcosh_loss(y, x);
        if (!std::isfinite(loss.loss))
          throw Error("non-finite training loss at epoch " + std::to_string(epoch + 1) + ", batch " +
                      std::to_string(batch_index + 1));
        epoch_loss += loss.loss;
        loss.grad *= scale;
        net.backward(out.params, trace, loss.grad, grad);
      }
      adam.update(out.params, grad, config.learning_rate);
    }
    out.curve.train.push_back(epoch_loss / static_cast<double>(n_train));
    if (n_val > 0) {
      double val = 0.0;
      for (std::size_t k = n_train; k < inputs.size(); ++k)
        val += masked_logcosh_loss(net.forward(out.params, inputs[k]), inputs[k]).loss;
      out.curve.validation.push_back(val / static_cast<double>(n_val));
    }
  }
  return out;
}

AutoencoderModel train_autoencoder(const GridScaler& scaler, std::span<const FacadePatch> normalized,
                                   const Architecture& arch, const TrainConfig& config, std::uint64_t seed) {
  const Network net(make_network_spec(arch));
  std::vector<Tensor> inputs;
  inputs.reserve(normalized.size());
  for (const auto& p : normalized) {
    if (!p.normalized) throw InvariantError("autoencoder training needs normalized patches");
    inputs.push_back(p.values);
  }
  auto trained = train_network(net, inputs, config, seed);
  AutoencoderModel model;
  model.architecture = arch;
  model.config = config;
  model.seed = seed;
  model.params = std::move(trained.params);
  model.curve = std::move(trained.curve);
  model.scaler = scaler;
  return model;
}

AutoencoderModel fit_autoencoder(std::span<const FacadePatch> raw, const Architecture& arch,
                                 const TrainConfig& config, std::uint64_t seed) {
  const GridScaler scaler = GridScaler::fit(raw);
  std::vector<FacadePatch> normalized;
  normalized.reserve(raw.size());
  for (const auto& p : raw) normalized.push_back(scaler.normalize(p));
  return train_autoencoder(scaler, normalized, arch, config, seed);
}

Eigen::VectorXd encode(const AutoencoderModel& model, const FacadePatch& normalized) {
  const auto& v = normalized.values;
  if (!normalized.normalized || (v.array() < -1e-9).any() || (v.array() > 1.0 + 1e-9).any())
    throw InvariantError("encode needs a patch normalized to [0, 1] by the model's grid scaler");
  const Network net(make_network_spec(model.architecture));
  const Tensor z = net.encode(model.params, v);
  return z.row(0).transpose();
}

FacadePatch decode(const AutoencoderModel& model, const Eigen::VectorXd& latent) {
  const Network net(make_network_spec(model.architecture));
  FacadePatch out;
  out.normalized = true;
  out.values = net.decode(model.params, latent.transpose());
  return out;
}

Eigen::MatrixXd encode_raw(const AutoencoderModel& model, std::span<const FacadePatch> raw) {
  const Network net(make_network_spec(model.architecture));
  Eigen::MatrixXd out(static_cast<Eigen::Index>(raw.size()), net.latent_shape().cols);
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const FacadePatch p = model.scaler.normalize(raw[i]);
    out.row(static_cast<Eigen::Index>(i)) = net.encode(model.params, p.values).row(0);
  }
  return out;
}

void save_autoencoder(const std::filesystem::path& path, const AutoencoderModel& m) {
  BlobWriter w(BlobKind::autoencoder);
  const auto& a = m.architecture;
  for (int v : {a.input_rows, a.input_cols, a.conv1_filters, a.conv1_kernel, a.pool1, a.branch_filters,
                a.branch_kernel, a.branch_pool, a.conv2_filters, a.conv2_kernel, a.pool2, a.dense_units, a.latent,
                a.output_kernel})
    w.u64(static_cast<std::uint64_t>(v));
  w.str(to_string(a.variant));
  w.f64(m.config.learning_rate);
  w.u64(m.config.batch_size);
  w.u64(m.config.epochs);
  w.f64(m.config.validation_fraction);
  w.u64(m.seed);
  w.f64_array(m.params);
  w.matrix(m.scaler.min());
  w.matrix(m.scaler.max());
  w.f64_array(m.curve.train);
  w.f64_array(m.curve.validation);
  w.save(path);
}

AutoencoderModel load_autoencoder(const std::filesystem::path& path) {
  auto r = BlobReader::load(path, BlobKind::autoencoder);
  AutoencoderModel m;
  auto& a = m.architecture;
  for (int* v : {&a.input_rows, &a.input_cols, &a.conv1_filters, &a.conv1_kernel, &a.pool1, &a.branch_filters,
                 &a.branch_kernel, &a.branch_pool, &a.conv2_filters, &a.conv2_kernel, &a.pool2, &a.dense_units,
                 &a.latent, &a.output_kernel})
    *v = static_cast<int>(r.u64());
  a.variant = parse_variant(r.str());
  m.config.learning_rate = r.f64();
  m.config.batch_size = r.u64();
  m.config.epochs = r.u64();
  m.config.validation_fraction = r.f64();
  m.seed = r.u64();
  m.params = r.f64_array();
  auto lo = r.matrix();
  auto hi = r.matrix();
  m.scaler = GridScaler(std::move(lo), std::move(hi));
  m.curve.train = r.f64_array();
  m.curve.validation = r.f64_array();
  const Network net(make_network_spec(a));
  if (m.params.size() != net.parameter_count()) throw Error("autoencoder parameter count does not match its spec");
  return m;
}

}  // namespace canyonpl::ae
