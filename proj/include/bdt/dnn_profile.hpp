#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace bdt {

enum class LayerKind { Convolution, Pooling, FullyConnected };

/// Shape of one DNN layer. Conv/pool layers use the (C, H, W) fields and the
/// filter dims; fully-connected layers use `in_size`/`out_size`.
struct LayerSpec {
  LayerKind kind = LayerKind::Convolution;
  std::int64_t batch_size = 1;
  std::int64_t precision_bits = 32;

  std::int64_t in_channels = 0;
  std::int64_t in_height = 0;
  std::int64_t in_width = 0;
  std::int64_t out_channels = 0;
  std::int64_t out_height = 0;
  std::int64_t out_width = 0;
  std::int64_t filter_height = 0;
  std::int64_t filter_width = 0;

  std::int64_t in_size = 0;
  std::int64_t out_size = 0;

  static LayerSpec convolution(std::int64_t in_c, std::int64_t in_h,
                               std::int64_t in_w, std::int64_t out_c,
                               std::int64_t out_h, std::int64_t out_w,
                               std::int64_t filter_h, std::int64_t filter_w,
                               std::int64_t batch = 1,
                               std::int64_t precision = 32);
  static LayerSpec pooling(std::int64_t channels, std::int64_t in_h,
                           std::int64_t in_w, std::int64_t out_h,
                           std::int64_t out_w, std::int64_t filter_h,
                           std::int64_t filter_w, std::int64_t batch = 1,
                           std::int64_t precision = 32);
  static LayerSpec fully_connected(std::int64_t in, std::int64_t out,
                                   std::int64_t batch = 1,
                                   std::int64_t precision = 32);
};

/// Throws InvalidSpecError unless every dimension the layer kind uses is
/// strictly positive (and pooling keeps the channel count).
void validate(const LayerSpec& spec);

/// Floating-point operations of one forward pass through the layer.
double flops_of_layer(const LayerSpec& spec);

/// Size in bits of the layer's forward output. The fully-connected row is
/// scaled by precision like the conv/pool rows, so every value is in bits.
double output_bits_of_layer(const LayerSpec& spec);

struct LayerProfile {
  double flops = 0.0;
  double output_bits = 0.0;
};

/// Per-layer FLOPs/output profile of one DNN. Layers are indexed 1..L as
/// partition points are.
class ModelProfile {
 public:
  ModelProfile(std::string name, std::vector<LayerProfile> layers);

  static ModelProfile from_specs(std::string name,
                                 std::span<const LayerSpec> specs);

  const std::string& name() const { return name_; }
  std::size_t num_layers() const { return layers_.size(); }
  const std::vector<LayerProfile>& layers() const { return layers_; }

  /// 1-based.
  const LayerProfile& layer(std::size_t l) const;
  double output_bits(std::size_t l) const { return layer(l).output_bits; }

  /// Sum of FLOPs over layers 1..l, 0 <= l <= L.
  double prefix_flops(std::size_t l) const;
  /// total_flops() - prefix_flops(l).
  double suffix_flops(std::size_t l) const;
  double total_flops() const { return prefix_.back(); }
  double min_output_bits() const;

 private:
  std::string name_;
  std::vector<LayerProfile> layers_;
  std::vector<double> prefix_;
};

enum class ModelPreset { Vgg11Cifar10, CnnFashionMnist };

ModelPreset parse_model_preset(std::string_view name);
std::string_view to_string(ModelPreset preset);

/// Layer shapes of a preset. VGG-11 (3x3 convs, 2x2 pools) on 3x32x32 gives
/// 8 conv + 5 pool + 3 fc layers; the Fashion-MNIST CNN on 1x28x28 is
/// conv5x5(32)-pool-conv5x5(64)-pool-fc(128)-fc(10).
std::vector<LayerSpec> preset_layers(ModelPreset preset, std::int64_t batch,
                                     std::int64_t precision_bits);

ModelProfile build_preset(ModelPreset preset, std::int64_t batch = 1,
                          std::int64_t precision_bits = 32);

}  // namespace bdt
