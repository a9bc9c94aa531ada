#pragma once

#include "gazekit/mlp.hpp"
#include "gazekit/polynomial.hpp"

#include <Eigen/Core>

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace gazekit {

inline constexpr const char* kModelMagic = "gazekit-model";
inline constexpr int kModelVersion = 1;

/// One serialized model: a `gazekit-model v1 <type>` header line followed by
/// `key=value` lines. Arrays are space-separated reals.
class ModelBlock {
 public:
  explicit ModelBlock(std::string type = {}) : type_(std::move(type)) {}

  const std::string& type() const { return type_; }

  void set(const std::string& key, const std::string& value);
  void set(const std::string& key, double value);
  void set(const std::string& key, long long value);
  void set(const std::string& key, const Eigen::VectorXd& values);

  bool has(const std::string& key) const;
  const std::string& get(const std::string& key) const;  // throws ModelFormat
  double get_real(const std::string& key) const;
  long long get_int(const std::string& key) const;
  Eigen::VectorXd get_reals(const std::string& key) const;

  const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }

 private:
  std::string type_;
  std::vector<std::pair<std::string, std::string>> entries_;
};

void write_model_blocks(std::ostream& out, const std::vector<ModelBlock>& blocks);
std::vector<ModelBlock> read_model_blocks(std::istream& in);

ModelBlock polynomial_to_block(const PolynomialModel& model);
PolynomialModel polynomial_from_block(const ModelBlock& block);

/// Keys are prefixed so several networks can share a block.
void mlp_to_block(const MLPModel& model, ModelBlock& block, const std::string& prefix = {});
MLPModel mlp_from_block(const ModelBlock& block, const std::string& prefix = {});

/// Shortest decimal form that round-trips exactly.
std::string format_exact(double value);
/// 9 significant digits, used for CSV outputs.
std::string format_csv(double value);
/// Strict full-string parse; returns false on any trailing garbage.
bool parse_double(std::string_view text, double& value);
bool parse_int64(std::string_view text, long long& value);

}  // namespace gazekit
