#include "survnet/params.hpp"

#include <algorithm>

#include "survnet/error.hpp"

namespace survnet {

Param& ParamSet::add(std::string name, Tensor value, bool nonnegative, int layer) {
  if (contains(name)) throw ConfigError("duplicate parameter '" + name + "'");
  index_[name] = params_.size();
  params_.push_back(Param{std::move(name), std::move(value), nonnegative, layer});
  return params_.back();
}

Param& ParamSet::at(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw ConfigError("unknown parameter '" + name + "'");
  return params_[it->second];
}

const Param& ParamSet::at(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw ConfigError("unknown parameter '" + name + "'");
  return params_[it->second];
}

std::vector<std::string> ParamSet::names() const {
  std::vector<std::string> out;
  out.reserve(params_.size());
  for (const auto& p : params_) out.push_back(p.name);
  return out;
}

std::size_t ParamSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.value.size();
  return n;
}

void ParamSet::bind(diff::Bindings& bindings) const {
  for (const auto& p : params_) bindings.ref(p.name, p.value);
}

void ParamSet::project_nonnegative() {
  for (auto& p : params_) {
    if (!p.nonnegative) continue;
    for (double& v : p.value.values()) v = std::max(v, 0.0);
  }
}

bool ParamSet::satisfies_constraints() const {
  for (const auto& p : params_) {
    if (!p.nonnegative) continue;
    for (double v : p.value.values())
      if (!(v >= 0.0)) return false;
  }
  return true;
}

nlohmann::json ParamSet::to_json() const {
  auto arr = nlohmann::json::array();
  for (const auto& p : params_) {
    arr.push_back({{"name", p.name},
                   {"layer", p.layer},
                   {"shape", {p.value.rows(), p.value.cols()}},
                   {"nonnegative", p.nonnegative},
                   {"values", std::vector<double>(p.value.values().begin(), p.value.values().end())}});
  }
  return arr;
}

ParamSet ParamSet::from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw ParseError("parameter list must be a JSON array");
  ParamSet out;
  for (const auto& e : j) {
    const auto shape = e.at("shape").get<std::vector<std::size_t>>();
    if (shape.size() != 2) throw ParseError("parameter shape must have two entries");
    auto values = e.at("values").get<std::vector<double>>();
    out.add(e.at("name").get<std::string>(), Tensor({shape[0], shape[1]}, std::move(values)),
            e.value("nonnegative", false), e.value("layer", -1));
  }
  return out;
}

bool ParamSet::operator==(const ParamSet& other) const {
  if (params_.size() != other.params_.size()) return false;
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const auto& a = params_[i];
    const auto& b = other.params_[i];
    if (a.name != b.name || a.nonnegative != b.nonnegative || a.layer != b.layer ||
        !(a.value == b.value)) {
      return false;
    }
  }
  return true;
}

}  // namespace survnet
