#include "ltrsel/nn.hpp"

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace ltrsel {

std::vector<ad::Var> ParamRegistry::vars() const {
  std::vector<ad::Var> out;
  out.reserve(trainable_.size());
  for (const auto& [name, v] : trainable_) out.push_back(v);
  return out;
}

std::size_t ParamRegistry::total_values() const {
  std::size_t n = 0;
  for (const auto& [name, v] : trainable_) n += v.value().numel();
  for (const auto& [name, t] : buffers_) n += t->numel();
  return n;
}

std::vector<Tensor> ParamRegistry::snapshot() const {
  std::vector<Tensor> snap;
  snap.reserve(trainable_.size() + buffers_.size());
  for (const auto& [name, v] : trainable_) snap.push_back(v.value());
  for (const auto& [name, t] : buffers_) snap.push_back(*t);
  return snap;
}

void ParamRegistry::restore(const std::vector<Tensor>& snap) {
  if (snap.size() != trainable_.size() + buffers_.size())
    throw std::invalid_argument("restore: snapshot entry count mismatch");
  std::size_t i = 0;
  for (auto& [name, v] : trainable_) v.value() = snap[i++];
  for (auto& [name, t] : buffers_) *t = snap[i++];
}

namespace {

void append_blob(std::ofstream& out, const Tensor& t) {
  static_assert(sizeof(double) == 8);
  out.write(reinterpret_cast<const char*>(t.data()),
            static_cast<std::streamsize>(t.numel() * sizeof(double)));
}

void read_blob(std::ifstream& in, Tensor& t) {
  in.read(reinterpret_cast<char*>(t.data()),
          static_cast<std::streamsize>(t.numel() * sizeof(double)));
  if (!in) throw std::runtime_error("checkpoint: params.bin truncated");
}

}  // namespace

void ParamRegistry::save(const std::string& dir) const {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  nlohmann::ordered_json manifest;
  manifest["format"] = "ltrsel-checkpoint-v1";
  manifest["dtype"] = "float64";
  manifest["byte_order"] = "little";
  auto tensors = nlohmann::ordered_json::array();
  std::ofstream bin(fs::path(dir) / "params.bin", std::ios::binary);
  if (!bin) throw std::runtime_error("checkpoint: cannot write " + dir + "/params.bin");
  for (const auto& [name, v] : trainable_) {
    tensors.push_back({{"name", name}, {"shape", v.value().shape}, {"kind", "param"}});
    append_blob(bin, v.value());
  }
  for (const auto& [name, t] : buffers_) {
    tensors.push_back({{"name", name}, {"shape", t->shape}, {"kind", "buffer"}});
    append_blob(bin, *t);
  }
  manifest["tensors"] = std::move(tensors);
  std::ofstream mf(fs::path(dir) / "manifest.json");
  if (!mf) throw std::runtime_error("checkpoint: cannot write " + dir + "/manifest.json");
  mf << manifest.dump(2) << "\n";
}

void ParamRegistry::load(const std::string& dir) {
  namespace fs = std::filesystem;
  std::ifstream mf(fs::path(dir) / "manifest.json");
  if (!mf) throw std::runtime_error("checkpoint: cannot open " + dir + "/manifest.json");
  nlohmann::json manifest = nlohmann::json::parse(mf);
  const auto& tensors = manifest.at("tensors");
  if (tensors.size() != trainable_.size() + buffers_.size())
    throw std::runtime_error("checkpoint: tensor count mismatch in " + dir);
  std::ifstream bin(fs::path(dir) / "params.bin", std::ios::binary);
  if (!bin) throw std::runtime_error("checkpoint: cannot open " + dir + "/params.bin");
  std::size_t i = 0;
  auto check = [&](const std::string& name, const Tensor& t) {
    const auto& entry = tensors.at(i);
    if (entry.at("name").get<std::string>() != name)
      throw std::runtime_error("checkpoint: expected tensor '" + name + "', found '" +
                               entry.at("name").get<std::string>() + "'");
    if (entry.at("shape").get<std::vector<std::size_t>>() != t.shape)
      throw std::runtime_error("checkpoint: shape mismatch for '" + name + "'");
  };
  for (auto& [name, v] : trainable_) {
    check(name, v.value());
    read_blob(bin, v.value());
    ++i;
  }
  for (auto& [name, t] : buffers_) {
    check(name, *t);
    read_blob(bin, *t);
    ++i;
  }
}

Linear::Linear(std::size_t in, std::size_t out, Rng& rng) {
  Tensor wt({out, in});
  const double bound = std::sqrt(6.0 / static_cast<double>(in + out));
  for (double& v : wt.values) v = rng.uniform(-bound, bound);
  w = ad::param(std::move(wt));
  b = ad::param(Tensor({out}));
}

ad::Var Linear::forward(const ad::Var& x) const {
  return ad::add_rowvec(ad::matmul_nt(x, w), b);
}

void Linear::register_params(ParamRegistry& reg, const std::string& prefix) {
  reg.add(prefix + ".w", w);
  reg.add(prefix + ".b", b);
}

BatchNorm::BatchNorm(std::size_t width)
    : gamma(ad::param(Tensor::full({width}, 1.0))),
      beta(ad::param(Tensor({width}))),
      running_mean(Tensor({width})),
      running_var(Tensor::full({width}, 1.0)) {}

ad::Var BatchNorm::forward(const ad::Var& x, bool training) {
  if (training)
    return ad::batchnorm_train(x, gamma, beta, running_mean, running_var, momentum, eps);
  return ad::batchnorm_eval(x, gamma, beta, running_mean, running_var, eps);
}

void BatchNorm::register_params(ParamRegistry& reg, const std::string& prefix) {
  reg.add(prefix + ".gamma", gamma);
  reg.add(prefix + ".beta", beta);
  reg.add_buffer(prefix + ".running_mean", &running_mean);
  reg.add_buffer(prefix + ".running_var", &running_var);
}

FeedForwardNet::FeedForwardNet(std::size_t in, const std::vector<std::size_t>& hidden,
                               std::size_t out, Rng& rng)
    : in_width(in), out_width(out) {
  std::size_t prev = in;
  for (std::size_t width : hidden) {
    layers.emplace_back(prev, width, rng);
    norms.emplace_back(width);
    prev = width;
  }
  head = Linear(prev, out, rng);
}

ad::Var FeedForwardNet::forward(const ad::Var& x, bool training) {
  ad::Var h = x;
  for (std::size_t i = 0; i < layers.size(); ++i)
    h = ad::tanh(norms[i].forward(layers[i].forward(h), training));
  return head.forward(h);
}

void FeedForwardNet::register_params(ParamRegistry& reg, const std::string& prefix) {
  for (std::size_t i = 0; i < layers.size(); ++i) {
    layers[i].register_params(reg, prefix + ".fc" + std::to_string(i));
    norms[i].register_params(reg, prefix + ".bn" + std::to_string(i));
  }
  head.register_params(reg, prefix + ".head");
}

}  // namespace ltrsel
