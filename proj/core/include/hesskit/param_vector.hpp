#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace hesskit {

/// Flat parameter-space vector. Dimension is fixed at construction; every
/// binary operation checks that both operands share it. All reductions run
/// sequentially left to right so results are reproducible across platforms.
class ParamVector {
public:
  ParamVector() = default;
  explicit ParamVector(std::size_t dim, double fill = 0.0) : data_(dim, fill) {}
  explicit ParamVector(std::vector<double> values) : data_(std::move(values)) {}

  std::size_t size() const { return data_.size(); }
  double operator[](std::size_t i) const { return data_[i]; }
  double& operator[](std::size_t i) { return data_[i]; }
  const std::vector<double>& values() const { return data_; }
  std::vector<double>& values() { return data_; }
  const double* data() const { return data_.data(); }
  double* data() { return data_.data(); }

  bool operator==(const ParamVector& other) const = default;

private:
  std::vector<double> data_;
};

/// Sequential left-to-right inner product (deterministic reduction order).
double dot(const ParamVector& a, const ParamVector& b);

double norm(const ParamVector& v);

/// y += alpha * x
void axpy(double alpha, const ParamVector& x, ParamVector& y);

void scale(ParamVector& v, double alpha);

ParamVector add(const ParamVector& a, const ParamVector& b);
ParamVector sub(const ParamVector& a, const ParamVector& b);

/// Returns v / ||v||. Throws if the norm is zero.
ParamVector normalized(const ParamVector& v);

/// Serialization: optional "# key: value" metadata lines, then a header line
/// "paramvec v1 dim=N", then one 16-digit hex word per component encoding the
/// raw IEEE-754 bit pattern. Round trips are bit-exact.
void write_param_vector(std::ostream& out, const ParamVector& v,
                        const std::map<std::string, std::string>& metadata = {});
ParamVector read_param_vector(std::istream& in,
                              std::map<std::string, std::string>* metadata = nullptr);

void save_param_vector(const std::string& path, const ParamVector& v,
                       const std::map<std::string, std::string>& metadata = {});
ParamVector load_param_vector(const std::string& path,
                              std::map<std::string, std::string>* metadata = nullptr);

}  // namespace hesskit
