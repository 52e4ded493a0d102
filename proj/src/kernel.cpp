#include "cvgrad/kernel.hpp"

#include <cmath>

#include "cvgrad/errors.hpp"
#include "cvgrad/rng.hpp"

namespace cvgrad {

namespace {

std::vector<std::pair<Index, Index>> layer_dims(KernelArch arch) {
  // (out, in) per layer; 2-D input, 2-D output.
  if (arch == KernelArch::one_layer) return {{64, 2}, {2, 64}};
  return {{64, 2}, {64, 64}, {2, 64}};
}

}  // namespace

Index KernelParams::param_count() const {
  Index count = 0;
  for (const auto& l : layers) count += l.W.size() + l.b.size();
  return count;
}

void KernelParams::validate() const {
  if (layers.empty()) throw ArgumentError("kernel: no layers");
  if (layers.front().W.cols() != 2 || layers.back().W.rows() != 2)
    throw ArgumentError("kernel: must map R^2 -> R^2");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    if (layers[l].b.size() != layers[l].W.rows())
      throw ArgumentError("kernel: bias length must match layer output");
    if (l > 0 && layers[l].W.cols() != layers[l - 1].W.rows())
      throw ArgumentError("kernel: layer dimensions do not chain");
  }
}

Index kernel_param_count(KernelArch arch) {
  Index count = 0;
  for (auto [out, in] : layer_dims(arch)) count += out * in + out;
  return count;
}

KernelParams init_kernel(KernelArch arch, std::uint64_t seed) {
  Rng rng(seed);
  KernelParams kp;
  for (auto [out, in] : layer_dims(arch)) {
    KernelLayer layer;
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    layer.W.resize(out, in);
    for (Index r = 0; r < out; ++r)
      for (Index c = 0; c < in; ++c) layer.W(r, c) = rng.uniform(-bound, bound);
    layer.b = Vector::Zero(out);
    kp.layers.push_back(std::move(layer));
  }
  return kp;
}

Vector kernel_flatten(const KernelParams& kp) {
  Vector flat(kp.param_count());
  Index pos = 0;
  for (const auto& l : kp.layers) {
    for (Index r = 0; r < l.W.rows(); ++r)
      for (Index c = 0; c < l.W.cols(); ++c) flat[pos++] = l.W(r, c);
    for (Index r = 0; r < l.b.size(); ++r) flat[pos++] = l.b[r];
  }
  return flat;
}

KernelParams kernel_unflatten(KernelArch arch, VectorRef flat) {
  if (flat.size() != kernel_param_count(arch))
    throw ArgumentError("kernel: flat vector length does not match architecture");
  KernelParams kp;
  Index pos = 0;
  for (auto [out, in] : layer_dims(arch)) {
    KernelLayer layer;
    layer.W.resize(out, in);
    for (Index r = 0; r < out; ++r)
      for (Index c = 0; c < in; ++c) layer.W(r, c) = flat[pos++];
    layer.b.resize(out);
    for (Index r = 0; r < out; ++r) layer.b[r] = flat[pos++];
    kp.layers.push_back(std::move(layer));
  }
  return kp;
}

Matrix kernel_forward(const KernelParams& kp, MatrixRef X, KernelTape* tape) {
  kp.validate();
  if (X.cols() != 2) throw ArgumentError("kernel: inputs must be 2-D rows");
  const std::size_t L = kp.layers.size();
  if (tape) {
    tape->activations.clear();
    tape->preacts.clear();
    tape->activations.push_back(X);
  }
  Matrix a = X;
  for (std::size_t l = 0; l < L; ++l) {
    Matrix z = (a * kp.layers[l].W.transpose()).rowwise() + kp.layers[l].b.transpose();
    if (tape) tape->preacts.push_back(z);
    if (l + 1 < L) {
      a = z.cwiseMax(0.0);  // derivative at exactly 0 is defined as 0
      if (tape) tape->activations.push_back(a);
    } else {
      a = std::move(z);
    }
  }
  return a;
}

Vector kernel_backward(const KernelParams& kp, const KernelTape& tape, MatrixRef dL_dV) {
  const std::size_t L = kp.layers.size();
  if (tape.preacts.size() != L || tape.activations.size() != L)
    throw ArgumentError("kernel: tape does not match parameters");
  if (dL_dV.rows() != tape.activations[0].rows() || dL_dV.cols() != kp.layers.back().W.rows())
    throw ArgumentError("kernel: upstream gradient shape mismatch");

  std::vector<Matrix> dW(L);
  std::vector<Vector> db(L);
  Matrix delta = dL_dV;  // gradient w.r.t. layer output (post identity / pre ReLU)
  for (std::size_t l = L; l-- > 0;) {
    if (l + 1 < L) {
      // Backprop through the ReLU applied to preacts[l].
      delta = delta.cwiseProduct((tape.preacts[l].array() > 0.0).cast<double>().matrix());
    }
    dW[l] = delta.transpose() * tape.activations[l];
    db[l] = delta.colwise().sum().transpose();
    if (l > 0) delta = delta * kp.layers[l].W;
  }

  Vector flat(kp.param_count());
  Index pos = 0;
  for (std::size_t l = 0; l < L; ++l) {
    for (Index r = 0; r < dW[l].rows(); ++r)
      for (Index c = 0; c < dW[l].cols(); ++c) flat[pos++] = dW[l](r, c);
    for (Index r = 0; r < db[l].size(); ++r) flat[pos++] = db[l][r];
  }
  return flat;
}

}  // namespace cvgrad
