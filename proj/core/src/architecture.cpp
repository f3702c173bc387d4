#include "calfoa/architecture.hpp"

#include <cmath>
#include <cstring>
#include <sstream>

#include "calfoa/error.hpp"
#include "calfoa/rng.hpp"

namespace calfoa {
namespace {

Architecture make(std::string name, int depth, int hidden, int symbols) {
  Architecture a{std::move(name), {}};
  int in = 1;
  for (int l = 0; l + 1 < depth; ++l) {
    a.layers.push_back({5, in, hidden, Activation::Tanh});
    in = hidden;
  }
  a.layers.push_back({7, in, symbols, Activation::Softmax});
  return a;
}

}  // namespace

void Architecture::validate() const {
  if (layers.empty()) throw ConfigError("architecture " + name + ": no layers");
  int in = 1;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& L = layers[l];
    const bool last = l + 1 == layers.size();
    if (L.kernel < 1 || L.kernel % 2 == 0) throw ConfigError("architecture " + name + ": kernels must be odd");
    if (L.kernel > 11) throw ConfigError("architecture " + name + ": kernels larger than 11 are not supported");
    if (L.in_channels != in) throw ConfigError("architecture " + name + ": channel mismatch at layer " + std::to_string(l));
    if (L.out_channels < 1) throw ConfigError("architecture " + name + ": empty layer");
    if (last != (L.activation == Activation::Softmax)) {
      throw ConfigError("architecture " + name + ": softmax must be the last (and only the last) activation");
    }
    in = L.out_channels;
  }
  if (symbols() < 2) throw ConfigError("architecture " + name + ": need at least two output symbols");
}

std::string Architecture::descriptor() const {
  std::ostringstream os;
  os << name;
  for (const auto& L : layers) {
    os << '|' << L.kernel << ',' << L.in_channels << ',' << L.out_channels << ','
       << (L.activation == Activation::Tanh ? "tanh" : "softmax");
  }
  return os.str();
}

Architecture Architecture::small() { return make("S", 3, 20, 10); }
Architecture Architecture::deeper() { return make("D", 7, 20, 10); }
Architecture Architecture::deeper_large() { return make("DL", 7, 32, 32); }

Architecture Architecture::by_name(const std::string& name) {
  if (name == "S") return small();
  if (name == "D") return deeper();
  if (name == "DL") return deeper_large();
  throw ConfigError("unknown architecture '" + name + "'");
}

Architecture Architecture::from_descriptor(const std::string& text) {
  std::istringstream is(text);
  std::string part;
  Architecture a;
  if (!std::getline(is, a.name, '|')) throw ConfigError("empty architecture descriptor");
  while (std::getline(is, part, '|')) {
    LayerSpec L;
    char c1, c2, c3;
    std::string act;
    std::istringstream ls(part);
    if (!(ls >> L.kernel >> c1 >> L.in_channels >> c2 >> L.out_channels >> c3) || c1 != ',' || c2 != ',' ||
        c3 != ',' || !(ls >> act)) {
      throw ConfigError("malformed architecture descriptor '" + text + "'");
    }
    if (act == "tanh") {
      L.activation = Activation::Tanh;
    } else if (act == "softmax") {
      L.activation = Activation::Softmax;
    } else {
      throw ConfigError("unknown activation '" + act + "'");
    }
    a.layers.push_back(L);
  }
  a.validate();
  return a;
}

int receptive_field(const Architecture& arch) {
  int rf = 1;
  for (const auto& L : arch.layers) rf += L.kernel - 1;
  return rf;
}

ParamLayout::ParamLayout(Architecture arch) : arch_(std::move(arch)) {
  arch_.validate();
  for (const auto& L : arch_.layers) {
    LayerOffsets o;
    o.weights = size_;
    size_ += L.weight_count();
    o.bias = size_;
    size_ += static_cast<std::size_t>(L.out_channels);
    offsets_.push_back(o);
  }
}

std::span<const double> ParamVector::weights(std::size_t l) const {
  return {values.data() + layout.layer(l).weights, layout.arch().layers[l].weight_count()};
}

std::span<const double> ParamVector::biases(std::size_t l) const {
  return {values.data() + layout.layer(l).bias, static_cast<std::size_t>(layout.arch().layers[l].out_channels)};
}

std::uint64_t ParamVector::fingerprint() const {
  std::uint64_t h = 0x9e3779b97f4a7c15ULL ^ values.size();
  for (double v : values) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    h = (h ^ bits) * 0x100000001b3ULL;
    h ^= h >> 29;
  }
  return h;
}

ParamVector zero_params(const Architecture& arch) {
  ParamLayout layout(arch);
  const std::size_t n = layout.size();
  return ParamVector{std::move(layout), std::vector<double>(n, 0.0)};
}

ParamVector init_params(const Architecture& arch, std::uint64_t seed) {
  ParamVector p = zero_params(arch);
  Rng rng = Rng::derive(seed, "network.init");
  for (std::size_t l = 0; l < arch.layers.size(); ++l) {
    const auto& L = arch.layers[l];
    const double bound = 1.0 / std::sqrt(static_cast<double>(L.kernel * L.kernel * L.in_channels));
    double* w = p.values.data() + p.layout.layer(l).weights;
    for (std::size_t i = 0; i < L.weight_count(); ++i) w[i] = rng.uniform(-bound, bound);
  }
  return p;
}

}  // namespace calfoa
