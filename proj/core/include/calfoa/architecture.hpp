#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace calfoa {

enum class Activation { Tanh, Softmax };

struct LayerSpec {
  int kernel = 5;
  int in_channels = 1;
  int out_channels = 1;
  Activation activation = Activation::Tanh;

  int radius() const { return kernel / 2; }
  std::size_t weight_count() const {
    return static_cast<std::size_t>(kernel) * kernel * in_channels * out_channels;
  }
  bool operator==(const LayerSpec&) const = default;
};

/// Stride-1 convolutional stack with 'same' zero padding; tanh hidden layers
/// and a per-pixel softmax over the m output channels.
struct Architecture {
  std::string name;
  std::vector<LayerSpec> layers;

  int symbols() const { return layers.empty() ? 0 : layers.back().out_channels; }
  /// Throws ConfigError on an invalid stack.
  void validate() const;
  /// Compact text form, e.g. "S|5,1,20,tanh|5,20,20,tanh|7,20,10,softmax".
  std::string descriptor() const;

  static Architecture small();         // S
  static Architecture deeper();        // D
  static Architecture deeper_large();  // DL
  static Architecture by_name(const std::string& name);
  static Architecture from_descriptor(const std::string& text);

  bool operator==(const Architecture&) const = default;
};

/// rf = 1 + sum(kernel - 1).
int receptive_field(const Architecture& arch);

struct LayerOffsets {
  std::size_t weights = 0;  // [out][in][ky][kx]
  std::size_t bias = 0;     // [out]
};

class ParamLayout {
 public:
  ParamLayout() = default;
  explicit ParamLayout(Architecture arch);

  const Architecture& arch() const { return arch_; }
  std::size_t size() const { return size_; }
  const LayerOffsets& layer(std::size_t l) const { return offsets_[l]; }
  std::size_t layer_count() const { return offsets_.size(); }

  bool operator==(const ParamLayout& o) const { return arch_ == o.arch_; }

 private:
  Architecture arch_;
  std::vector<LayerOffsets> offsets_;
  std::size_t size_ = 0;
};

/// Flat weight+bias vector w in R^n with its layout.
struct ParamVector {
  ParamLayout layout;
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
  std::span<const double> weights(std::size_t l) const;
  std::span<const double> biases(std::size_t l) const;
  /// Cheap content fingerprint used to detect stale forward caches.
  std::uint64_t fingerprint() const;
};

/// Weights uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)], biases zero.
ParamVector init_params(const Architecture& arch, std::uint64_t seed);
ParamVector zero_params(const Architecture& arch);

}  // namespace calfoa
