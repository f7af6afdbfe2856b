#include "hesskit/param_vector.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace hesskit {

namespace {

void require_same_dim(const ParamVector& a, const ParamVector& b, const char* op) {
  if (a.size() != b.size()) {
    throw std::invalid_argument(std::string(op) + ": dimension mismatch (" +
                                std::to_string(a.size()) + " vs " +
                                std::to_string(b.size()) + ")");
  }
}

}  // namespace

double dot(const ParamVector& a, const ParamVector& b) {
  require_same_dim(a, b, "dot");
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += a[i] * b[i];
  return sum;
}

double norm(const ParamVector& v) { return std::sqrt(dot(v, v)); }

void axpy(double alpha, const ParamVector& x, ParamVector& y) {
  require_same_dim(x, y, "axpy");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

void scale(ParamVector& v, double alpha) {
  for (std::size_t i = 0; i < v.size(); ++i) v[i] *= alpha;
}

ParamVector add(const ParamVector& a, const ParamVector& b) {
  require_same_dim(a, b, "add");
  ParamVector out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
  return out;
}

ParamVector sub(const ParamVector& a, const ParamVector& b) {
  require_same_dim(a, b, "sub");
  ParamVector out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
  return out;
}

ParamVector normalized(const ParamVector& v) {
  const double n = norm(v);
  if (n == 0.0) throw std::invalid_argument("normalized: zero vector");
  ParamVector out = v;
  scale(out, 1.0 / n);
  return out;
}

void write_param_vector(std::ostream& out, const ParamVector& v,
                        const std::map<std::string, std::string>& metadata) {
  for (const auto& [key, value] : metadata) {
    out << "# " << key << ": " << value << "\n";
  }
  out << "paramvec v1 dim=" << v.size() << "\n";
  char buf[17];
  for (std::size_t i = 0; i < v.size(); ++i) {
    const auto bits = std::bit_cast<std::uint64_t>(v[i]);
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(bits));
    out << buf << "\n";
  }
}

ParamVector read_param_vector(std::istream& in,
                              std::map<std::string, std::string>* metadata) {
  std::string line;
  std::size_t dim = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (metadata != nullptr) {
        const auto body = line.substr(1);
        const auto colon = body.find(':');
        if (colon != std::string::npos) {
          auto key = body.substr(0, colon);
          auto value = body.substr(colon + 1);
          const auto trim = [](std::string& s) {
            const auto b = s.find_first_not_of(" \t");
            const auto e = s.find_last_not_of(" \t\r");
            s = (b == std::string::npos) ? "" : s.substr(b, e - b + 1);
          };
          trim(key);
          trim(value);
          (*metadata)[key] = value;
        }
      }
      continue;
    }
    std::istringstream hs(line);
    std::string tag, version, dim_field;
    hs >> tag >> version >> dim_field;
    if (tag != "paramvec" || version != "v1" || dim_field.rfind("dim=", 0) != 0) {
      throw std::runtime_error("read_param_vector: bad header line: " + line);
    }
    dim = std::stoull(dim_field.substr(4));
    header_seen = true;
    break;
  }
  if (!header_seen) throw std::runtime_error("read_param_vector: missing header");

  ParamVector v(dim);
  for (std::size_t i = 0; i < dim; ++i) {
    if (!std::getline(in, line)) {
      throw std::runtime_error("read_param_vector: truncated payload");
    }
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    if (line.size() != 16) {
      throw std::runtime_error("read_param_vector: bad hex word: " + line);
    }
    const auto bits = static_cast<std::uint64_t>(std::stoull(line, nullptr, 16));
    v[i] = std::bit_cast<double>(bits);
  }
  return v;
}

void save_param_vector(const std::string& path, const ParamVector& v,
                       const std::map<std::string, std::string>& metadata) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("save_param_vector: cannot open " + path);
  write_param_vector(f, v, metadata);
}

ParamVector load_param_vector(const std::string& path,
                              std::map<std::string, std::string>* metadata) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("load_param_vector: cannot open " + path);
  return read_param_vector(f, metadata);
}

}  // namespace hesskit
