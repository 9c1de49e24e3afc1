#pragma once

// Weight files: "RVAE", u32 version=1, u32 tensor count, then per tensor
// u16 name length, UTF-8 name, u8 ndim, u32 dims, f32 row-major payload.
// Little-endian throughout. BN running statistics are ordinary tensors named
// "<layer>.running_mean" / "<layer>.running_var".

#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "radvae/scenario.hpp"
#include "radvae/vae/model.hpp"

namespace radvae {

/// Rounds every tensor to single precision, the precision weights are
/// stored in. A rounded parameter set survives save/load bit for bit.
inline void round_to_f32(VaeParams& p) {
  p.for_each([](const std::string&, Tensor& t, bool) {
    for (auto& v : t.data) v = static_cast<double>(static_cast<float>(v));
  });
}

inline void save_weights(const VaeParams& p, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open '" + path + "' for writing");
  std::uint32_t count = 0;
  p.for_each([&](const std::string&, const Tensor&, bool) { ++count; });
  os.write("RVAE", 4);
  detail::put_le<std::uint32_t>(os, 1);
  detail::put_le<std::uint32_t>(os, count);
  p.for_each([&](const std::string& name, const Tensor& t, bool) {
    detail::put_le<std::uint16_t>(os, static_cast<std::uint16_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    detail::put_le<std::uint8_t>(os, static_cast<std::uint8_t>(t.shape.size()));
    for (auto d : t.shape) detail::put_le<std::uint32_t>(os, static_cast<std::uint32_t>(d));
    for (double v : t.data) detail::put_le<float>(os, static_cast<float>(v));
  });
  if (!os) throw std::runtime_error("write failed for '" + path + "'");
}

inline VaeParams load_weights(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open weight file '" + path + "'");
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, "RVAE", 4) != 0)
    throw FormatError("'" + path + "' is not a weight file (bad magic)");
  if (detail::get_le<std::uint32_t>(is, "version") != 1)
    throw FormatError("unsupported weight file version in '" + path + "'");
  const auto count = detail::get_le<std::uint32_t>(is, "tensor count");

  std::map<std::string, Tensor> found;
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto len = detail::get_le<std::uint16_t>(is, "name length");
    std::string name(len, '\0');
    if (!is.read(name.data(), len)) throw FormatError("truncated tensor name");
    const auto ndim = detail::get_le<std::uint8_t>(is, "ndim");
    std::vector<std::size_t> dims(ndim);
    for (auto& d : dims) d = detail::get_le<std::uint32_t>(is, "dims");
    Tensor t(dims);
    if (t.size() > (std::size_t{1} << 28)) throw FormatError("tensor '" + name + "' too large");
    for (auto& v : t.data) v = static_cast<double>(detail::get_le<float>(is, name));
    if (!found.emplace(name, std::move(t)).second)
      throw FormatError("duplicate tensor '" + name + "'");
  }

  auto shape_of = [&](const std::string& n) -> const std::vector<std::size_t>& {
    auto it = found.find(n);
    if (it == found.end()) throw FormatError("missing tensor '" + n + "'");
    return it->second.shape;
  };
  const auto& c1w = shape_of("encoder.conv1.weight");
  const auto& c2w = shape_of("encoder.conv2.weight");
  const auto& muw = shape_of("encoder.fc_mu.weight");
  if (c1w.size() != 3 || c2w.size() != 3 || muw.size() != 2 || c2w[0] == 0)
    throw FormatError("inconsistent tensor shapes in '" + path + "'");
  VaeArch arch;
  arch.c1 = c1w[0];
  arch.c2 = c2w[0];
  arch.latent = muw[0];
  arch.m = 4 * muw[1] / arch.c2;
  try {
    arch.validate();
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("inconsistent architecture: ") + e.what());
  }

  VaeParams p(arch);
  std::size_t used = 0;
  p.for_each([&](const std::string& name, Tensor& t, bool) {
    auto it = found.find(name);
    if (it == found.end()) throw FormatError("missing tensor '" + name + "'");
    if (it->second.shape != t.shape)
      throw FormatError("shape mismatch for tensor '" + name + "'");
    t = std::move(it->second);
    ++used;
  });
  if (used != found.size()) throw FormatError("unexpected extra tensors in '" + path + "'");
  for (const auto* bn : {&p.enc_bn1, &p.enc_bn2, &p.dec_bn1})
    for (double v : bn->running_var.data)
      if (!(v > 0.0)) throw FormatError("non-positive running variance in '" + path + "'");
  return p;
}

}  // namespace radvae
