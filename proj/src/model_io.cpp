#include "gazekit/model_io.hpp"

#include "gazekit/error.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

namespace gazekit {

std::string format_exact(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

std::string format_csv(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::general, 9);
  return std::string(buf, res.ptr);
}

bool parse_double(std::string_view text, double& value) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r')) text.remove_suffix(1);
  if (text.empty()) return false;
  if (text.front() == '+') text.remove_prefix(1);
  const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  return res.ec == std::errc() && res.ptr == text.data() + text.size();
}

bool parse_int64(std::string_view text, long long& value) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r')) text.remove_suffix(1);
  if (text.empty()) return false;
  if (text.front() == '+') text.remove_prefix(1);
  const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  return res.ec == std::errc() && res.ptr == text.data() + text.size();
}

void ModelBlock::set(const std::string& key, const std::string& value) {
  for (auto& [k, v] : entries_) {
    if (k == key) {
      v = value;
      return;
    }
  }
  entries_.emplace_back(key, value);
}

void ModelBlock::set(const std::string& key, double value) { set(key, format_exact(value)); }

void ModelBlock::set(const std::string& key, long long value) { set(key, std::to_string(value)); }

void ModelBlock::set(const std::string& key, const Eigen::VectorXd& values) {
  std::string joined;
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    if (i > 0) joined += ' ';
    joined += format_exact(values[i]);
  }
  set(key, joined);
}

bool ModelBlock::has(const std::string& key) const {
  for (const auto& [k, v] : entries_) {
    if (k == key) return true;
  }
  return false;
}

const std::string& ModelBlock::get(const std::string& key) const {
  for (const auto& [k, v] : entries_) {
    if (k == key) return v;
  }
  throw Error(ErrorCode::ModelFormat, "missing key '" + key + "' in " + type_ + " block");
}

double ModelBlock::get_real(const std::string& key) const {
  double v = 0.0;
  if (!parse_double(get(key), v)) throw Error(ErrorCode::ModelFormat, "bad real for key '" + key + "'");
  return v;
}

long long ModelBlock::get_int(const std::string& key) const {
  long long v = 0;
  if (!parse_int64(get(key), v)) throw Error(ErrorCode::ModelFormat, "bad integer for key '" + key + "'");
  return v;
}

Eigen::VectorXd ModelBlock::get_reals(const std::string& key) const {
  std::vector<double> values;
  std::istringstream ss(get(key));
  std::string token;
  while (ss >> token) {
    double v = 0.0;
    if (!parse_double(token, v)) throw Error(ErrorCode::ModelFormat, "bad array entry for key '" + key + "'");
    values.push_back(v);
  }
  return Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

void write_model_blocks(std::ostream& out, const std::vector<ModelBlock>& blocks) {
  for (const auto& block : blocks) {
    out << kModelMagic << " v" << kModelVersion << ' ' << block.type() << '\n';
    for (const auto& [k, v] : block.entries()) out << k << '=' << v << '\n';
  }
}

std::vector<ModelBlock> read_model_blocks(std::istream& in) {
  std::vector<ModelBlock> blocks;
  std::string line;
  const std::string magic = std::string(kModelMagic) + " v";
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (line.rfind(magic, 0) == 0) {
      const auto rest = line.substr(magic.size());
      const auto space = rest.find(' ');
      long long version = 0;
      if (space == std::string::npos || !parse_int64(rest.substr(0, space), version) || version != kModelVersion) {
        throw Error(ErrorCode::ModelFormat, "unsupported model header: " + line);
      }
      blocks.emplace_back(rest.substr(space + 1));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos || blocks.empty()) throw Error(ErrorCode::ModelFormat, "unexpected line: " + line);
    blocks.back().set(line.substr(0, eq), line.substr(eq + 1));
  }
  return blocks;
}

ModelBlock polynomial_to_block(const PolynomialModel& model) {
  ModelBlock block("polynomial");
  block.set("input_dim", static_cast<long long>(model.input_dim));
  block.set("degree", static_cast<long long>(model.degree));
  block.set("output_dim", static_cast<long long>(model.output_dim));
  // Row-major: one run of monomial coefficients per output.
  const Eigen::MatrixXd t = model.coefficients.transpose();
  block.set("coefficients", Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(t.data(), t.size())));
  return block;
}

PolynomialModel polynomial_from_block(const ModelBlock& block) {
  if (block.type() != "polynomial") throw Error(ErrorCode::ModelFormat, "expected polynomial block");
  PolynomialModel model(static_cast<int>(block.get_int("input_dim")), static_cast<int>(block.get_int("degree")),
                        static_cast<int>(block.get_int("output_dim")));
  const Eigen::VectorXd flat = block.get_reals("coefficients");
  if (flat.size() != model.coefficients.size()) throw Error(ErrorCode::ModelFormat, "coefficient count mismatch");
  model.coefficients =
      Eigen::Map<const Eigen::MatrixXd>(flat.data(), model.coefficients.cols(), model.coefficients.rows())
          .transpose();
  return model;
}

void mlp_to_block(const MLPModel& model, ModelBlock& block, const std::string& prefix) {
  Eigen::VectorXd sizes(static_cast<Eigen::Index>(model.layer_sizes.size()));
  for (std::size_t i = 0; i < model.layer_sizes.size(); ++i) sizes[static_cast<Eigen::Index>(i)] = model.layer_sizes[i];
  block.set(prefix + "layer_sizes", sizes);
  block.set(prefix + "output", std::string(model.output == OutputActivation::Softmax ? "softmax" : "identity"));
  for (std::size_t l = 0; l < model.weights.size(); ++l) {
    const auto& w = model.weights[l];
    block.set(prefix + "w" + std::to_string(l), Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(w.data(), w.size())));
    block.set(prefix + "b" + std::to_string(l), Eigen::VectorXd(model.biases[l].transpose()));
  }
}

MLPModel mlp_from_block(const ModelBlock& block, const std::string& prefix) {
  MLPModel model;
  const Eigen::VectorXd sizes = block.get_reals(prefix + "layer_sizes");
  for (Eigen::Index i = 0; i < sizes.size(); ++i) model.layer_sizes.push_back(static_cast<int>(sizes[i]));
  if (model.layer_sizes.size() < 2) throw Error(ErrorCode::ModelFormat, "network needs at least two layers");
  const auto& out = block.get(prefix + "output");
  if (out == "softmax") {
    model.output = OutputActivation::Softmax;
  } else if (out == "identity") {
    model.output = OutputActivation::Identity;
  } else {
    throw Error(ErrorCode::ModelFormat, "unknown output activation '" + out + "'");
  }
  for (std::size_t l = 0; l + 1 < model.layer_sizes.size(); ++l) {
    const Eigen::VectorXd w = block.get_reals(prefix + "w" + std::to_string(l));
    const Eigen::VectorXd b = block.get_reals(prefix + "b" + std::to_string(l));
    const int rows = model.layer_sizes[l];
    const int cols = model.layer_sizes[l + 1];
    if (w.size() != static_cast<Eigen::Index>(rows) * cols || b.size() != cols) {
      throw Error(ErrorCode::ModelFormat, "layer " + std::to_string(l) + " has the wrong size");
    }
    model.weights.emplace_back(Eigen::Map<const Eigen::MatrixXd>(w.data(), rows, cols));
    model.biases.emplace_back(b.transpose());
  }
  return model;
}

}  // namespace gazekit
