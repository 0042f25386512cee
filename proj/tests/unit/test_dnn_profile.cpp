#include <doctest.h>

#include "bdt/dnn_profile.hpp"
#include "bdt/error.hpp"

using namespace bdt;

TEST_CASE("layer FLOPs") {
  CHECK(flops_of_layer(LayerSpec::convolution(3, 32, 32, 64, 32, 32, 3, 3)) ==
        3538944.0);
  CHECK(flops_of_layer(LayerSpec::pooling(64, 32, 32, 16, 16, 2, 2)) ==
        65536.0);
  CHECK(flops_of_layer(LayerSpec::fully_connected(1, 1)) == 2.0);
  CHECK(flops_of_layer(LayerSpec::fully_connected(512, 4096, 2)) ==
        2.0 * 2 * 512 * 4096);
}

TEST_CASE("layer output bits") {
  CHECK(output_bits_of_layer(
            LayerSpec::convolution(3, 32, 32, 64, 32, 32, 3, 3, 1, 32)) ==
        2097152.0);
  CHECK(output_bits_of_layer(LayerSpec::fully_connected(128, 10, 1, 32)) ==
        320.0);
  CHECK(output_bits_of_layer(LayerSpec::pooling(1, 2, 2, 1, 1, 2, 2, 1, 1)) ==
        1.0);
}

TEST_CASE("invalid layer dimensions") {
  CHECK_THROWS_AS(flops_of_layer(LayerSpec::fully_connected(0, 10)),
                  InvalidSpecError);
  CHECK_THROWS_AS(
      flops_of_layer(LayerSpec::convolution(3, 32, 32, -1, 32, 32, 3, 3)),
      InvalidSpecError);
  CHECK_THROWS_AS(output_bits_of_layer(LayerSpec::fully_connected(10, 10, 1, 0)),
                  InvalidSpecError);
  LayerSpec pool = LayerSpec::pooling(8, 4, 4, 2, 2, 2, 2);
  pool.out_channels = 4;
  CHECK_THROWS_AS(validate(pool), InvalidSpecError);
}

TEST_CASE("presets") {
  const ModelProfile vgg = build_preset(ModelPreset::Vgg11Cifar10);
  CHECK(vgg.num_layers() == 16);
  CHECK(vgg.layer(1).flops == 3538944.0);
  CHECK(vgg.output_bits(16) == 320.0);
  const ModelProfile cnn = build_preset(ModelPreset::CnnFashionMnist);
  CHECK(cnn.num_layers() == 6);
  // conv5x5 1->32 on 28x28
  CHECK(cnn.layer(1).flops == 2.0 * 1 * 5 * 5 * 32 * 28 * 28);
  CHECK(cnn.layer(5).flops == 2.0 * 3136 * 128);
  CHECK_THROWS_AS(build_preset(ModelPreset::Vgg11Cifar10, 0), InvalidSpecError);
  CHECK_THROWS_AS(build_preset(ModelPreset::CnnFashionMnist, 0),
                  InvalidSpecError);
  CHECK(parse_model_preset("vgg11_cifar10") == ModelPreset::Vgg11Cifar10);
  CHECK_THROWS(parse_model_preset("resnet"));
}

TEST_CASE("prefix and suffix sums") {
  const ModelProfile m("toy", {{2.0, 8.0}, {3.0, 4.0}, {5.0, 2.0}});
  CHECK(m.prefix_flops(0) == 0.0);
  CHECK(m.prefix_flops(2) == 5.0);
  CHECK(m.prefix_flops(3) == m.total_flops());
  CHECK(m.suffix_flops(1) == 8.0);
  CHECK(m.suffix_flops(3) == 0.0);
  CHECK(m.min_output_bits() == 2.0);
  CHECK_THROWS_AS(m.prefix_flops(4), OutOfRangeError);
  CHECK_THROWS_AS(m.layer(0), OutOfRangeError);

  const ModelProfile vgg = build_preset(ModelPreset::Vgg11Cifar10);
  for (std::size_t l = 0; l <= vgg.num_layers(); ++l) {
    CHECK(vgg.prefix_flops(l) + vgg.suffix_flops(l) == vgg.total_flops());
    if (l > 0) {
      CHECK(vgg.prefix_flops(l) >= vgg.prefix_flops(l - 1));
      CHECK(vgg.output_bits(l) > 0.0);
    }
  }
}

TEST_CASE("empty model rejected") {
  CHECK_THROWS_AS(ModelProfile("empty", {}), InvalidSpecError);
}
