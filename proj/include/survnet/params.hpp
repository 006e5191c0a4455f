#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "survnet/diff.hpp"
#include "survnet/tensor.hpp"

namespace survnet {

// One trainable tensor. `nonnegative` marks entries that must stay >= 0
// (enforced by projection after each optimizer step).
struct Param {
  std::string name;
  Tensor value;
  bool nonnegative = false;
  int layer = -1;
};

// Ordered collection of named parameters.
class ParamSet {
 public:
  Param& add(std::string name, Tensor value, bool nonnegative = false, int layer = -1);

  bool contains(const std::string& name) const { return index_.count(name) != 0; }
  Param& at(const std::string& name);
  const Param& at(const std::string& name) const;
  Tensor& value(const std::string& name) { return at(name).value; }
  const Tensor& value(const std::string& name) const { return at(name).value; }

  std::vector<Param>& items() { return params_; }
  const std::vector<Param>& items() const { return params_; }
  std::vector<std::string> names() const;
  std::size_t size() const { return params_.size(); }
  std::size_t scalar_count() const;

  // Borrowing bindings; the ParamSet must outlive their use.
  void bind(diff::Bindings& bindings) const;

  // Clamps every constrained entry at zero; unconstrained entries untouched.
  void project_nonnegative();
  bool satisfies_constraints() const;

  nlohmann::json to_json() const;
  static ParamSet from_json(const nlohmann::json& j);

  bool operator==(const ParamSet& other) const;

 private:
  std::vector<Param> params_;
  std::map<std::string, std::size_t> index_;
};

}  // namespace survnet
