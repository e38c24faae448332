#pragma once

// Network checkpoints: JSON with a shape header and flat row-major arrays of
// (re, im) pairs. Numbers are emitted in shortest round-trip decimal form,
// so load(dump(net)) reproduces every weight bit for bit.

#include <fstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "crnet/networks.hpp"

namespace crnet {

inline nlohmann::json checkpoint_json(const CRNetwork& net) {
  nlohmann::json j;
  j["format"] = "crnet-checkpoint";
  j["version"] = 1;
  j["kind"] = "complex";
  j["d"] = net.d;
  j["input_bias"] = net.input_bias;
  j["layers"] = nlohmann::json::array();
  for (const CMatrix& w : net.layers) {
    nlohmann::json jl;
    jl["rows"] = w.rows();
    jl["cols"] = w.cols();
    std::vector<double> flat;
    flat.reserve(2 * w.data().size());
    for (const cplx& v : w.data()) {
      flat.push_back(v.real());
      flat.push_back(v.imag());
    }
    jl["data"] = flat;
    j["layers"].push_back(std::move(jl));
  }
  return j;
}

inline nlohmann::json checkpoint_json(const RNetwork& net) {
  nlohmann::json j;
  j["format"] = "crnet-checkpoint";
  j["version"] = 1;
  j["kind"] = "real";
  j["d"] = net.dim;
  j["input_bias"] = net.input_bias;
  j["layers"] = nlohmann::json::array();
  for (const RMatrix& w : net.layers) {
    nlohmann::json jl;
    jl["rows"] = w.rows();
    jl["cols"] = w.cols();
    jl["data"] = w.data();
    j["layers"].push_back(std::move(jl));
  }
  return j;
}

inline CRNetwork cr_network_from_json(const nlohmann::json& j) {
  if (j.at("kind") != "complex") {
    throw std::invalid_argument("checkpoint: not a complex network");
  }
  CRNetwork net;
  net.d = j.at("d").get<int>();
  net.input_bias = j.at("input_bias").get<bool>();
  for (const auto& jl : j.at("layers")) {
    CMatrix w(jl.at("rows").get<int>(), jl.at("cols").get<int>());
    const auto flat = jl.at("data").get<std::vector<double>>();
    if (flat.size() != 2 * w.data().size()) {
      throw std::invalid_argument("checkpoint: layer data size mismatch");
    }
    for (size_t i = 0; i < w.data().size(); ++i) {
      w.data()[i] = cplx(flat[2 * i], flat[2 * i + 1]);
    }
    net.layers.push_back(std::move(w));
  }
  net.validate();
  return net;
}

inline RNetwork r_network_from_json(const nlohmann::json& j) {
  if (j.at("kind") != "real") {
    throw std::invalid_argument("checkpoint: not a real network");
  }
  RNetwork net;
  net.dim = j.at("d").get<int>();
  net.input_bias = j.at("input_bias").get<bool>();
  for (const auto& jl : j.at("layers")) {
    RMatrix w(jl.at("rows").get<int>(), jl.at("cols").get<int>());
    const auto flat = jl.at("data").get<std::vector<double>>();
    if (flat.size() != w.data().size()) {
      throw std::invalid_argument("checkpoint: layer data size mismatch");
    }
    w.data() = flat;
    net.layers.push_back(std::move(w));
  }
  net.validate();
  return net;
}

template <typename Net>
void save_checkpoint(const Net& net, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << checkpoint_json(net).dump(2) << "\n";
}

inline nlohmann::json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  nlohmann::json j;
  in >> j;
  return j;
}

}  // namespace crnet
