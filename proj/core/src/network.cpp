#include "calfoa/network.hpp"

#include <algorithm>
#include <cmath>

#include <cstring>

#include "calfoa/error.hpp"

namespace calfoa {

namespace {

// Full-frame passes allocate tens of megabytes of activations per frame.
// Recycling them per thread avoids faulting in fresh pages every time.
constexpr std::size_t kPooledMin = std::size_t{1} << 15;
constexpr std::size_t kPoolCapacity = 32;

std::vector<std::vector<double>>& buffer_pool() {
  thread_local std::vector<std::vector<double>> pool;
  return pool;
}

std::vector<double> take_buffer(std::size_t n) {
  auto& pool = buffer_pool();
  auto best = pool.end();
  for (auto it = pool.begin(); it != pool.end(); ++it)
    if (it->capacity() >= n && (best == pool.end() || it->capacity() < best->capacity())) best = it;
  if (best == pool.end()) return {};
  std::vector<double> v = std::move(*best);
  pool.erase(best);
  return v;
}

}  // namespace

PaddedActivations::PaddedActivations(int c, int h, int w, int p, int c_stride)
    : channels(c), channel_stride(c_stride), height(h), width(w), pad(p) {
  const std::size_t n = static_cast<std::size_t>(h + 2 * p) * row_stride();
  if (n >= kPooledMin) data = take_buffer(n);
  data.assign(n, 0.0);
}

PaddedActivations::~PaddedActivations() {
  if (data.capacity() < kPooledMin) return;
  auto& pool = buffer_pool();
  if (pool.size() < kPoolCapacity) pool.push_back(std::move(data));
}

Patch crop(const Frame& frame, int cx, int cy, int rf) {
  if (rf < 1 || rf % 2 == 0) throw Error("crop: receptive field must be odd");
  const int r = rf / 2;
  Patch p;
  p.width = p.height = rf;
  p.origin_x = cx - r;
  p.origin_y = cy - r;
  p.pixels.assign(static_cast<std::size_t>(rf) * rf, 0.0);
  const PixelRect retina{0, 0, frame.width, frame.height};
  const PixelRect inside = retina.intersect({p.origin_x, p.origin_y, p.origin_x + rf, p.origin_y + rf});
  p.valid = inside.empty() ? PixelRect{} :
            PixelRect{inside.x0 - p.origin_x, inside.y0 - p.origin_y, inside.x1 - p.origin_x, inside.y1 - p.origin_y};
  for (int y = inside.y0; y < inside.y1; ++y)
    for (int x = inside.x0; x < inside.x1; ++x)
      p.pixels[static_cast<std::size_t>(y - p.origin_y) * rf + (x - p.origin_x)] = frame.at(x, y);
  return p;
}

Patch crop_region(const Frame& frame, const PixelRect& region) {
  const PixelRect r = region.intersect({0, 0, frame.width, frame.height});
  if (r.empty()) throw Error("crop_region: region does not intersect the retina");
  Patch p;
  p.width = r.width();
  p.height = r.height();
  p.origin_x = r.x0;
  p.origin_y = r.y0;
  p.valid = {0, 0, p.width, p.height};
  p.pixels.resize(static_cast<std::size_t>(p.width) * p.height);
  for (int y = 0; y < p.height; ++y)
    for (int x = 0; x < p.width; ++x) p.pixels[static_cast<std::size_t>(y) * p.width + x] = frame.at(r.x0 + x, r.y0 + y);
  return p;
}

Patch full_frame(const Frame& frame) { return crop_region(frame, {0, 0, frame.width, frame.height}); }

namespace {

// Output channels are processed in groups of up to three 8-lane vectors, so a
// block of pixels times a group fits the 32 vector registers with room for the
// weights and one broadcast.
constexpr int kLanes = 8;
constexpr int kGroupVectors = 3;
using Vec = double __attribute__((vector_size(kLanes * sizeof(double))));
using VecBits = long long __attribute__((vector_size(kLanes * sizeof(double))));

inline Vec load(const double* p) {
  Vec v;
  std::memcpy(&v, p, sizeof v);
  return v;
}
inline void store(double* p, Vec v) { std::memcpy(p, &v, sizeof v); }
inline Vec splat(double s) { return Vec{s, s, s, s, s, s, s, s}; }
static_assert(kLanes == 8);

int round_up(int c) { return (c + kLanes - 1) / kLanes * kLanes; }

// expm1 on [-40, 0]: y = k ln2 + r with |r| <= ln2/2, expm1(y) = 2^k q(r) + (2^k - 1),
// q(r) = e^r - 1 as a degree-13 Taylor polynomial (truncation below 1e-17).
inline Vec expm1_nonpositive(Vec y) {
  const double magic = 0x1.8p52;
  const Vec t = y * splat(0x1.71547652b82fep0) + splat(magic);
  const Vec k = t - splat(magic);
  const Vec r = (y - k * splat(0x1.62e42fee00000p-1)) - k * splat(0x1.a39ef35793c76p-33);
  Vec q = splat(1.0 / 6227020800.0);
  for (double c : {1.0 / 479001600.0, 1.0 / 39916800.0, 1.0 / 3628800.0, 1.0 / 362880.0, 1.0 / 40320.0,
                   1.0 / 5040.0, 1.0 / 720.0, 1.0 / 120.0, 1.0 / 24.0, 1.0 / 6.0, 0.5, 1.0})
    q = q * r + splat(c);
  q = q * r;
  VecBits kb;
  std::memcpy(&kb, &t, sizeof kb);
  VecBits magic_bits;
  const Vec mv = splat(magic);
  std::memcpy(&magic_bits, &mv, sizeof magic_bits);
  const VecBits e = (kb - magic_bits + 1023) << 52;
  Vec scale;
  std::memcpy(&scale, &e, sizeof scale);
  return scale * q + (scale - splat(1.0));
}

// tanh(x) = -m / (2 + m) with m = expm1(-2|x|), sign restored; accurate to a few ulp
// and exactly +-1 once |x| >= 20.
inline Vec vtanh(Vec x) {
  VecBits bits;
  std::memcpy(&bits, &x, sizeof bits);
  const VecBits sign = bits & (1LL << 63);
  const VecBits abs_bits = bits & ~(1LL << 63);
  Vec a;
  std::memcpy(&a, &abs_bits, sizeof a);
  a = a < splat(20.0) ? a : splat(20.0);
  const Vec m = expm1_nonpositive(splat(-2.0) * a);
  const Vec t = -m / (splat(2.0) + m);
  VecBits tb;
  std::memcpy(&tb, &t, sizeof tb);
  tb |= sign;
  Vec out;
  std::memcpy(&out, &tb, sizeof out);
  return out;
}

enum class Epilogue { Linear, Tanh };

// Weights reordered tap-major for the kernels: w[(tap * cin + ic) * cout_stride + oc],
// tap = ky K + kx, with zero padding lanes beyond the live output channels.
struct TapWeights {
  int K = 0;
  int cin = 0;
  int cout_stride = 0;
  std::vector<double> w;
  std::vector<double> bias;

  const double* tap(int t) const { return w.data() + static_cast<std::size_t>(t) * cin * cout_stride; }
};

// Forward correlation: source layout [out][in][ky][kx].
TapWeights forward_weights(const ParamVector& params, std::size_t l) {
  const LayerSpec& spec = params.layout.arch().layers[l];
  TapWeights t{spec.kernel, spec.in_channels, round_up(spec.out_channels), {}, {}};
  const int K = spec.kernel, KK = K * K;
  t.w.assign(static_cast<std::size_t>(KK) * t.cin * t.cout_stride, 0.0);
  const auto w = params.weights(l);
  for (int oc = 0; oc < spec.out_channels; ++oc)
    for (int ic = 0; ic < spec.in_channels; ++ic)
      for (int k = 0; k < KK; ++k)
        t.w[(static_cast<std::size_t>(k) * t.cin + ic) * t.cout_stride + oc] =
            w[(static_cast<std::size_t>(oc) * spec.in_channels + ic) * KK + k];
  const auto b = params.biases(l);
  t.bias.assign(t.cout_stride, 0.0);
  std::copy(b.begin(), b.end(), t.bias.begin());
  return t;
}

// Adjoint correlation: output-channel gradients in, input-channel gradients out,
// kernel flipped in both axes.
TapWeights adjoint_weights(const ParamVector& params, std::size_t l) {
  const LayerSpec& spec = params.layout.arch().layers[l];
  TapWeights t{spec.kernel, spec.out_channels, round_up(spec.in_channels), {}, {}};
  const int K = spec.kernel, KK = K * K;
  t.w.assign(static_cast<std::size_t>(KK) * t.cin * t.cout_stride, 0.0);
  const auto w = params.weights(l);
  for (int oc = 0; oc < spec.out_channels; ++oc)
    for (int ic = 0; ic < spec.in_channels; ++ic)
      for (int k = 0; k < KK; ++k)
        t.w[(static_cast<std::size_t>(KK - 1 - k) * t.cin + oc) * t.cout_stride + ic] =
            w[(static_cast<std::size_t>(oc) * spec.in_channels + ic) * KK + k];
  t.bias.assign(t.cout_stride, 0.0);
  return t;
}

// NP consecutive output pixels of one row times NV output vectors starting at lane `oc0`.
template <int NV, int NP>
void conv_block(const PaddedActivations& in, const TapWeights& tw, int oc0, int x, int y, Epilogue e,
                PaddedActivations& out) {
  const int K = tw.K, r = K / 2, cs = in.channel_stride, cin = tw.cin, ws = tw.cout_stride;
  const std::size_t rs = in.row_stride();
  Vec acc[NP][NV];
#pragma GCC unroll 16
  for (int p = 0; p < NP; ++p)
#pragma GCC unroll 4
    for (int v = 0; v < NV; ++v) acc[p][v] = Vec{};
  const double* src = in.at(x - r, y - r);
  for (int ky = 0; ky < K; ++ky) {
    for (int kx = 0; kx < K; ++kx) {
      const double* px = src + ky * rs + static_cast<std::size_t>(kx) * cs;
      const double* wk = tw.tap(ky * K + kx) + oc0;
      for (int ic = 0; ic < cin; ++ic, wk += ws) {
        Vec wv[NV];
#pragma GCC unroll 4
        for (int v = 0; v < NV; ++v) wv[v] = load(wk + v * kLanes);
#pragma GCC unroll 16
        for (int p = 0; p < NP; ++p) {
          const Vec s = splat(px[p * cs + ic]);
#pragma GCC unroll 4
          for (int v = 0; v < NV; ++v) acc[p][v] += s * wv[v];
        }
      }
    }
  }
  double* dst = out.at(x, y) + oc0;
  const int ocs = out.channel_stride;
#pragma GCC unroll 16
  for (int p = 0; p < NP; ++p)
#pragma GCC unroll 4
    for (int v = 0; v < NV; ++v) {
      Vec z = acc[p][v] + load(tw.bias.data() + oc0 + v * kLanes);
      if (e == Epilogue::Tanh) z = vtanh(z);
      store(dst + p * ocs + v * kLanes, z);
    }
}

template <int NV>
void conv_row(const PaddedActivations& in, const TapWeights& tw, int oc0, int y, Epilogue e, PaddedActivations& out) {
  constexpr int NP = NV == 3 ? 8 : NV == 2 ? 12 : 16;
  const int W = out.width;
  int x = 0;
  for (; x + NP <= W; x += NP) conv_block<NV, NP>(in, tw, oc0, x, y, e, out);
  if constexpr (NP > 8)
    for (; x + 8 <= W; x += 8) conv_block<NV, 8>(in, tw, oc0, x, y, e, out);
  for (; x + 4 <= W; x += 4) conv_block<NV, 4>(in, tw, oc0, x, y, e, out);
  for (; x + 2 <= W; x += 2) conv_block<NV, 2>(in, tw, oc0, x, y, e, out);
  for (; x < W; ++x) conv_block<NV, 1>(in, tw, oc0, x, y, e, out);
}

// out interior = epilogue(correlate(in, tw) + bias) over all lanes of out's channel stride.
// `in` must be padded by the kernel radius.
void correlate(const PaddedActivations& in, const TapWeights& tw, Epilogue e, PaddedActivations& out) {
  for (int y = 0; y < out.height; ++y)
    for (int oc0 = 0; oc0 < tw.cout_stride; oc0 += kGroupVectors * kLanes) {
      switch (std::min(kGroupVectors, (tw.cout_stride - oc0) / kLanes)) {
        case 3: conv_row<3>(in, tw, oc0, y, e, out); break;
        case 2: conv_row<2>(in, tw, oc0, y, e, out); break;
        default: conv_row<1>(in, tw, oc0, y, e, out); break;
      }
    }
}

// g[(tap * cin + ic) * cout_stride + oc] += sum over rows [y0, y1) of in(x + kx - r, y + ky - r)[ic] * d(x, y)[oc]
// for NI input channels from ic0 and NV output vectors from oc0.
template <int NV, int NI>
void wgrad_block(const PaddedActivations& in, const PaddedActivations& d, int K, int tap, int ic0, int oc0, int y0,
                 int y1, int cin, int ws, double* g) {
  const int r = K / 2, ky = tap / K, kx = tap % K, cs = in.channel_stride, ds = d.channel_stride;
  double* gt = g + (static_cast<std::size_t>(tap) * cin + ic0) * ws + oc0;
  Vec acc[NI][NV];
#pragma GCC unroll 8
  for (int i = 0; i < NI; ++i)
#pragma GCC unroll 4
    for (int v = 0; v < NV; ++v) acc[i][v] = load(gt + i * ws + v * kLanes);
  for (int y = y0; y < y1; ++y) {
    const double* a = in.at(kx - r, y + ky - r) + ic0;
    const double* dv = d.at(0, y) + oc0;
    for (int x = 0; x < d.width; ++x, a += cs, dv += ds) {
      Vec dd[NV];
#pragma GCC unroll 4
      for (int v = 0; v < NV; ++v) dd[v] = load(dv + v * kLanes);
#pragma GCC unroll 8
      for (int i = 0; i < NI; ++i) {
        const Vec s = splat(a[i]);
#pragma GCC unroll 4
        for (int v = 0; v < NV; ++v) acc[i][v] += s * dd[v];
      }
    }
  }
#pragma GCC unroll 8
  for (int i = 0; i < NI; ++i)
#pragma GCC unroll 4
    for (int v = 0; v < NV; ++v) store(gt + i * ws + v * kLanes, acc[i][v]);
}

template <int NV>
void wgrad_channels(const PaddedActivations& in, const PaddedActivations& d, int K, int tap, int oc0, int y0, int y1,
                    int cin, int ws, double* g) {
  int ic = 0;
  for (; ic + 8 <= cin; ic += 8) wgrad_block<NV, 8>(in, d, K, tap, ic, oc0, y0, y1, cin, ws, g);
  for (; ic + 4 <= cin; ic += 4) wgrad_block<NV, 4>(in, d, K, tap, ic, oc0, y0, y1, cin, ws, g);
  for (; ic + 2 <= cin; ic += 2) wgrad_block<NV, 2>(in, d, K, tap, ic, oc0, y0, y1, cin, ws, g);
  for (; ic < cin; ++ic) wgrad_block<NV, 1>(in, d, K, tap, ic, oc0, y0, y1, cin, ws, g);
}

// Tap-major weight gradient; rows are blocked so the slices of `in` and `d` stay cache resident
// across all taps.
std::vector<double> weight_gradient(const PaddedActivations& in, const PaddedActivations& d, int K, int cin) {
  const int ws = d.channel_stride, KK = K * K;
  std::vector<double> g(static_cast<std::size_t>(KK) * cin * ws, 0.0);
  const int rows = std::max(1, 1024 / std::max(1, d.width));
  for (int y0 = 0; y0 < d.height; y0 += rows) {
    const int y1 = std::min(d.height, y0 + rows);
    for (int tap = 0; tap < KK; ++tap)
      for (int oc0 = 0; oc0 < ws; oc0 += kGroupVectors * kLanes) {
        switch (std::min(kGroupVectors, (ws - oc0) / kLanes)) {
          case 3: wgrad_channels<3>(in, d, K, tap, oc0, y0, y1, cin, ws, g.data()); break;
          case 2: wgrad_channels<2>(in, d, K, tap, oc0, y0, y1, cin, ws, g.data()); break;
          default: wgrad_channels<1>(in, d, K, tap, oc0, y0, y1, cin, ws, g.data()); break;
        }
      }
  }
  return g;
}

void zero_outside(PaddedActivations& a, const PixelRect& valid) {
  for (int y = 0; y < a.height; ++y)
    for (int x = 0; x < a.width; ++x)
      if (!valid.contains(x, y)) std::fill_n(a.at(x, y), a.channel_stride, 0.0);
}

void check_layout(const ParamVector& params) {
  if (params.values.size() != params.layout.size()) throw Error("parameter vector does not match its layout");
}

}  // namespace

OutputDistribution forward(const ParamVector& params, const Patch& patch, ForwardCache* cache) {
  check_layout(params);
  const Architecture& arch = params.layout.arch();
  const int W = patch.width, H = patch.height;
  if (W < 1 || H < 1) throw Error("forward: empty patch");
  if (patch.pixels.size() != static_cast<std::size_t>(W) * H) throw Error("forward: patch size mismatch");
  const bool masked = !patch.fully_valid();
  const std::size_t L = arch.layers.size();

  std::vector<PaddedActivations> inputs;
  inputs.reserve(L);
  inputs.emplace_back(1, H, W, arch.layers[0].radius(), 1);
  for (int y = 0; y < H; ++y) std::copy_n(patch.pixels.data() + static_cast<std::size_t>(y) * W, W, inputs[0].at(0, y));

  PaddedActivations logits;
  for (std::size_t l = 0; l < L; ++l) {
    const LayerSpec& spec = arch.layers[l];
    const TapWeights tw = forward_weights(params, l);
    if (l + 1 == L) {
      logits = PaddedActivations(spec.out_channels, H, W, 0, tw.cout_stride);
      correlate(inputs[l], tw, Epilogue::Linear, logits);
      break;
    }
    PaddedActivations next(spec.out_channels, H, W, arch.layers[l + 1].radius(), tw.cout_stride);
    correlate(inputs[l], tw, Epilogue::Tanh, next);
    if (masked) zero_outside(next, patch.valid);
    inputs.push_back(std::move(next));
  }

  OutputDistribution out{arch.symbols(), W, H, {}};
  const std::size_t plane = out.plane_size();
  out.probs.resize(plane * out.symbols);
  const int m = out.symbols;
  std::vector<double> e(m);
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x) {
      const double* z = logits.at(x, y);
      const double mx = *std::max_element(z, z + m);
      double sum = 0.0;
      for (int j = 0; j < m; ++j) sum += (e[j] = std::exp(z[j] - mx));
      const std::size_t i = static_cast<std::size_t>(y) * W + x;
      for (int j = 0; j < m; ++j) out.probs[plane * j + i] = e[j] / sum;
    }

  if (cache) {
    cache->descriptor = arch.descriptor();
    cache->param_fingerprint = params.fingerprint();
    cache->width = W;
    cache->height = H;
    cache->valid = patch.valid;
    cache->inputs = std::move(inputs);
    cache->output = out;
  }
  return out;
}

std::vector<double> backward(const ParamVector& params, const ForwardCache& cache,
                             const std::vector<double>& grad_probs) {
  check_layout(params);
  const Architecture& arch = params.layout.arch();
  if (cache.descriptor != arch.descriptor() || cache.inputs.size() != arch.layers.size()) {
    throw Error("backward: cache was produced by a different architecture");
  }
  if (cache.param_fingerprint != params.fingerprint()) {
    throw Error("backward: stale cache (parameters changed since forward)");
  }
  const int W = cache.width, H = cache.height;
  const std::size_t plane = static_cast<std::size_t>(W) * H;
  const int m = arch.symbols();
  if (grad_probs.size() != plane * m) throw Error("backward: gradient size does not match the output");
  const bool masked = !(cache.valid == PixelRect{0, 0, W, H});

  std::vector<double> grad(params.size(), 0.0);
  const std::size_t L = arch.layers.size();

  // softmax: dz_j = p_j (g_j - sum_k p_k g_k), padded by the last kernel radius
  PaddedActivations delta(m, H, W, arch.layers[L - 1].radius(), round_up(m));
  {
    const double* p = cache.output.probs.data();
    for (int y = 0; y < H; ++y)
      for (int x = 0; x < W; ++x) {
        const std::size_t i = static_cast<std::size_t>(y) * W + x;
        double dot = 0.0;
        for (int j = 0; j < m; ++j) dot += p[plane * j + i] * grad_probs[plane * j + i];
        double* d = delta.at(x, y);
        for (int j = 0; j < m; ++j) d[j] = p[plane * j + i] * (grad_probs[plane * j + i] - dot);
      }
  }

  for (std::size_t l = L; l-- > 0;) {
    const LayerSpec& spec = arch.layers[l];
    const PaddedActivations& in = cache.inputs[l];
    const int K = spec.kernel, KK = K * K;

    double* gb = grad.data() + params.layout.layer(l).bias;
    for (int y = 0; y < H; ++y)
      for (int x = 0; x < W; ++x) {
        const double* d = delta.at(x, y);
        for (int oc = 0; oc < spec.out_channels; ++oc) gb[oc] += d[oc];
      }

    const auto gt = weight_gradient(in, delta, K, spec.in_channels);
    double* gw = grad.data() + params.layout.layer(l).weights;
    for (int oc = 0; oc < spec.out_channels; ++oc)
      for (int ic = 0; ic < spec.in_channels; ++ic)
        for (int k = 0; k < KK; ++k)
          gw[(static_cast<std::size_t>(oc) * spec.in_channels + ic) * KK + k] =
              gt[(static_cast<std::size_t>(k) * spec.in_channels + ic) * delta.channel_stride + oc];
    if (l == 0) break;

    // through tanh' = 1 - a^2 of the previous layer, padded for the next adjoint correlation
    const TapWeights adj = adjoint_weights(params, l);
    PaddedActivations prev(spec.in_channels, H, W, arch.layers[l - 1].radius(), adj.cout_stride);
    correlate(delta, adj, Epilogue::Linear, prev);
    for (int y = 0; y < H; ++y)
      for (int x = 0; x < W; ++x) {
        double* g = prev.at(x, y);
        if (masked && !cache.valid.contains(x, y)) {
          std::fill_n(g, prev.channel_stride, 0.0);
          continue;
        }
        const double* a = in.at(x, y);
        for (int ic = 0; ic < spec.in_channels; ++ic) g[ic] *= 1.0 - a[ic] * a[ic];
      }
    delta = std::move(prev);
  }
  return grad;
}

}  // namespace calfoa
