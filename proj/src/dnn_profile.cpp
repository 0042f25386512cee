#include "bdt/dnn_profile.hpp"

#include <algorithm>
#include <initializer_list>
#include <limits>

#include "bdt/error.hpp"

namespace bdt {
namespace {

std::int64_t checked_product(std::initializer_list<std::int64_t> factors) {
  std::int64_t acc = 1;
  for (std::int64_t f : factors) {
    if (__builtin_mul_overflow(acc, f, &acc)) {
      throw InvalidSpecError("layer size overflows 64-bit arithmetic");
    }
  }
  return acc;
}

void require_positive(std::int64_t v, const char* field) {
  if (v <= 0) {
    throw InvalidSpecError(std::string("layer field '") + field +
                           "' must be positive");
  }
}

}  // namespace

LayerSpec LayerSpec::convolution(std::int64_t in_c, std::int64_t in_h,
                                 std::int64_t in_w, std::int64_t out_c,
                                 std::int64_t out_h, std::int64_t out_w,
                                 std::int64_t filter_h, std::int64_t filter_w,
                                 std::int64_t batch, std::int64_t precision) {
  LayerSpec s;
  s.kind = LayerKind::Convolution;
  s.batch_size = batch;
  s.precision_bits = precision;
  s.in_channels = in_c;
  s.in_height = in_h;
  s.in_width = in_w;
  s.out_channels = out_c;
  s.out_height = out_h;
  s.out_width = out_w;
  s.filter_height = filter_h;
  s.filter_width = filter_w;
  return s;
}

LayerSpec LayerSpec::pooling(std::int64_t channels, std::int64_t in_h,
                             std::int64_t in_w, std::int64_t out_h,
                             std::int64_t out_w, std::int64_t filter_h,
                             std::int64_t filter_w, std::int64_t batch,
                             std::int64_t precision) {
  LayerSpec s = convolution(channels, in_h, in_w, channels, out_h, out_w,
                            filter_h, filter_w, batch, precision);
  s.kind = LayerKind::Pooling;
  return s;
}

LayerSpec LayerSpec::fully_connected(std::int64_t in, std::int64_t out,
                                     std::int64_t batch,
                                     std::int64_t precision) {
  LayerSpec s;
  s.kind = LayerKind::FullyConnected;
  s.batch_size = batch;
  s.precision_bits = precision;
  s.in_size = in;
  s.out_size = out;
  return s;
}

void validate(const LayerSpec& spec) {
  require_positive(spec.batch_size, "batch_size");
  require_positive(spec.precision_bits, "precision_bits");
  switch (spec.kind) {
    case LayerKind::Convolution:
    case LayerKind::Pooling:
      require_positive(spec.in_channels, "in_channels");
      require_positive(spec.in_height, "in_height");
      require_positive(spec.in_width, "in_width");
      require_positive(spec.out_channels, "out_channels");
      require_positive(spec.out_height, "out_height");
      require_positive(spec.out_width, "out_width");
      require_positive(spec.filter_height, "filter_height");
      require_positive(spec.filter_width, "filter_width");
      if (spec.kind == LayerKind::Pooling &&
          spec.in_channels != spec.out_channels) {
        throw InvalidSpecError("pooling layer must keep the channel count");
      }
      break;
    case LayerKind::FullyConnected:
      require_positive(spec.in_size, "in_size");
      require_positive(spec.out_size, "out_size");
      break;
  }
}

double flops_of_layer(const LayerSpec& spec) {
  validate(spec);
  switch (spec.kind) {
    case LayerKind::Convolution:
      return static_cast<double>(checked_product(
          {2, spec.batch_size, spec.in_channels, spec.filter_height,
           spec.filter_width, spec.out_channels, spec.out_height,
           spec.out_width}));
    case LayerKind::Pooling:
      return static_cast<double>(checked_product(
          {spec.batch_size, spec.in_channels, spec.in_height, spec.in_width}));
    case LayerKind::FullyConnected:
      return static_cast<double>(
          checked_product({2, spec.batch_size, spec.in_size, spec.out_size}));
  }
  return 0.0;
}

double output_bits_of_layer(const LayerSpec& spec) {
  validate(spec);
  switch (spec.kind) {
    case LayerKind::Convolution:
    case LayerKind::Pooling:
      return static_cast<double>(checked_product(
          {spec.precision_bits, spec.batch_size, spec.out_channels,
           spec.out_height, spec.out_width}));
    case LayerKind::FullyConnected:
      return static_cast<double>(checked_product(
          {spec.precision_bits, spec.batch_size, spec.out_size}));
  }
  return 0.0;
}

ModelProfile::ModelProfile(std::string name, std::vector<LayerProfile> layers)
    : name_(std::move(name)), layers_(std::move(layers)) {
  if (layers_.empty()) {
    throw InvalidSpecError("model '" + name_ + "' has no layers");
  }
  prefix_.reserve(layers_.size() + 1);
  prefix_.push_back(0.0);
  for (const LayerProfile& p : layers_) {
    if (!(p.flops >= 0.0) || !(p.output_bits > 0.0)) {
      throw InvalidSpecError("model '" + name_ +
                             "' has a layer with negative FLOPs or "
                             "non-positive output size");
    }
    prefix_.push_back(prefix_.back() + p.flops);
  }
}

ModelProfile ModelProfile::from_specs(std::string name,
                                      std::span<const LayerSpec> specs) {
  std::vector<LayerProfile> layers;
  layers.reserve(specs.size());
  for (const LayerSpec& s : specs) {
    layers.push_back({flops_of_layer(s), output_bits_of_layer(s)});
  }
  return ModelProfile(std::move(name), std::move(layers));
}

const LayerProfile& ModelProfile::layer(std::size_t l) const {
  if (l < 1 || l > layers_.size()) {
    throw OutOfRangeError("layer index " + std::to_string(l) +
                          " outside 1.." + std::to_string(layers_.size()));
  }
  return layers_[l - 1];
}

double ModelProfile::prefix_flops(std::size_t l) const {
  if (l > layers_.size()) {
    throw OutOfRangeError("prefix length " + std::to_string(l) +
                          " exceeds " + std::to_string(layers_.size()));
  }
  return prefix_[l];
}

double ModelProfile::suffix_flops(std::size_t l) const {
  return total_flops() - prefix_flops(l);
}

double ModelProfile::min_output_bits() const {
  double best = std::numeric_limits<double>::infinity();
  for (const LayerProfile& p : layers_) best = std::min(best, p.output_bits);
  return best;
}

ModelPreset parse_model_preset(std::string_view name) {
  if (name == "vgg11_cifar10" || name == "Vgg11Cifar10") {
    return ModelPreset::Vgg11Cifar10;
  }
  if (name == "cnn_fashion_mnist" || name == "CnnFashionMnist") {
    return ModelPreset::CnnFashionMnist;
  }
  throw InvalidSpecError("unknown model preset '" + std::string(name) + "'");
}

std::string_view to_string(ModelPreset preset) {
  switch (preset) {
    case ModelPreset::Vgg11Cifar10:
      return "vgg11_cifar10";
    case ModelPreset::CnnFashionMnist:
      return "cnn_fashion_mnist";
  }
  return "unknown";
}

std::vector<LayerSpec> preset_layers(ModelPreset preset, std::int64_t batch,
                                     std::int64_t precision_bits) {
  if (batch < 1) throw InvalidSpecError("batch size must be >= 1");
  if (precision_bits < 1) throw InvalidSpecError("precision must be >= 1");

  std::vector<LayerSpec> out;
  std::int64_t c = 0;
  std::int64_t h = 0;
  auto conv = [&](std::int64_t out_c, std::int64_t k) {
    // "same" padding, stride 1
    out.push_back(LayerSpec::convolution(c, h, h, out_c, h, h, k, k, batch,
                                         precision_bits));
    c = out_c;
  };
  auto pool = [&]() {
    out.push_back(LayerSpec::pooling(c, h, h, h / 2, h / 2, 2, 2, batch,
                                     precision_bits));
    h /= 2;
  };
  auto fc = [&](std::int64_t in, std::int64_t o) {
    out.push_back(LayerSpec::fully_connected(in, o, batch, precision_bits));
  };

  switch (preset) {
    case ModelPreset::Vgg11Cifar10:
      c = 3;
      h = 32;
      conv(64, 3);
      pool();
      conv(128, 3);
      pool();
      conv(256, 3);
      conv(256, 3);
      pool();
      conv(512, 3);
      conv(512, 3);
      pool();
      conv(512, 3);
      conv(512, 3);
      pool();
      fc(512, 4096);
      fc(4096, 4096);
      fc(4096, 10);
      break;
    case ModelPreset::CnnFashionMnist:
      c = 1;
      h = 28;
      conv(32, 5);
      pool();
      conv(64, 5);
      pool();
      fc(64 * 7 * 7, 128);
      fc(128, 10);
      break;
  }
  return out;
}

ModelProfile build_preset(ModelPreset preset, std::int64_t batch,
                          std::int64_t precision_bits) {
  auto specs = preset_layers(preset, batch, precision_bits);
  return ModelProfile::from_specs(std::string(to_string(preset)), specs);
}

}  // namespace bdt
