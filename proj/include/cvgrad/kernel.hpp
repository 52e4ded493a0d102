#pragma once

#include <cstdint>
#include <vector>

#include "cvgrad/types.hpp"

namespace cvgrad {

// Feature maps R^2 -> R^2: ReLU between layers, identity at the output.
//   one_layer: 2 -> 64 -> 2            (322 parameters)
//   two_layer: 2 -> 64 -> 64 -> 2      (4482 parameters)
enum class KernelArch { one_layer, two_layer };

struct KernelLayer {
  Matrix W;  // out x in
  Vector b;  // out
};

struct KernelParams {
  std::vector<KernelLayer> layers;
  Index param_count() const;
  void validate() const;  // dimension chaining, 2-in/2-out
};

Index kernel_param_count(KernelArch arch);

// Weights Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)), biases zero.
KernelParams init_kernel(KernelArch arch, std::uint64_t seed);

// Flat layout: W1 row-major, b1, W2 row-major, b2, ... (checkpoint format).
Vector kernel_flatten(const KernelParams& kp);
KernelParams kernel_unflatten(KernelArch arch, VectorRef flat);

struct KernelTape {
  std::vector<Matrix> activations;  // activations[0] = input, per layer after ReLU
  std::vector<Matrix> preacts;      // W a + b per layer, before ReLU
};

// Rows of X are inputs; returns the mapped rows. Pass a tape to enable backward.
Matrix kernel_forward(const KernelParams& kp, MatrixRef X, KernelTape* tape = nullptr);

// Reverse-mode accumulation: given dL/d(output rows), returns the flat
// gradient over parameters. ReLU derivative at exactly 0 is 0.
Vector kernel_backward(const KernelParams& kp, const KernelTape& tape, MatrixRef dL_dV);

}  // namespace cvgrad
