#pragma once

// Discrete model of X = R x L^2([-r, 0]): a uniform segment grid with
// trapezoid weights, elements (x0, x1) sampled on that grid, and the delay
// kernels a1(.) / b1(.) that act on it.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "json.hpp"

#include "goodwill/errors.hpp"

namespace goodwill {

// Uniform nodes -r = xi_0 < ... < xi_{n-1} = 0 with trapezoid weights.
class SegmentGrid {
 public:
  static constexpr std::size_t kDefaultNodes = 201;

  explicit SegmentGrid(double r, std::size_t n_nodes = kDefaultNodes) : r_(r), n_(n_nodes) {
    if (!(r > 0.0) || !std::isfinite(r)) throw config_error("segment grid: r must be positive and finite");
    if (n_nodes < 2) throw config_error("segment grid: need at least 2 nodes");
    h_ = r / static_cast<double>(n_ - 1);
    nodes_.resize(n_);
    weights_.assign(n_, h_);
    for (std::size_t i = 0; i < n_; ++i) nodes_[i] = -r + h_ * static_cast<double>(i);
    nodes_.front() = -r;
    nodes_.back() = 0.0;
    weights_.front() = 0.5 * h_;
    weights_.back() = 0.5 * h_;
  }

  double r() const { return r_; }
  std::size_t size() const { return n_; }
  double spacing() const { return h_; }
  double node(std::size_t i) const { return nodes_[i]; }
  double weight(std::size_t i) const { return weights_[i]; }
  std::span<const double> nodes() const { return nodes_; }
  std::span<const double> weights() const { return weights_; }

  friend bool operator==(const SegmentGrid& a, const SegmentGrid& b) { return a.r_ == b.r_ && a.n_ == b.n_; }

 private:
  double r_;
  std::size_t n_;
  double h_ = 0.0;
  std::vector<double> nodes_;
  std::vector<double> weights_;
};

// Linear interpolation of samples taken on a uniform grid over [x_start, x_start + (n-1) h].
// Arguments within 1e-9 grid spacings of the ends are clamped; further out is a domain error.
inline double interp_uniform(std::span<const double> values, double x_start, double h, double x) {
  const std::size_t n = values.size();
  if (n == 0) throw dimension_error("interpolation on empty sample set");
  if (n == 1) return values[0];
  const double span = h * static_cast<double>(n - 1);
  const double s = (x - x_start) / h;
  const double slack = 1e-9;
  if (s < -slack || s > static_cast<double>(n - 1) + slack || !std::isfinite(s)) {
    throw domain_error("interpolation argument " + std::to_string(x) + " outside [" + std::to_string(x_start) +
                       ", " + std::to_string(x_start + span) + "]");
  }
  const double sc = std::clamp(s, 0.0, static_cast<double>(n - 1));
  auto i = static_cast<std::size_t>(sc);
  if (i >= n - 1) return values[n - 1];
  const double f = sc - static_cast<double>(i);
  if (f == 0.0) return values[i];
  return values[i] + f * (values[i + 1] - values[i]);
}

// Value of a profile sampled on `grid` at a lag xi in [-r, 0].
inline double profile_at(std::span<const double> x1, const SegmentGrid& grid, double xi) {
  if (x1.size() != grid.size()) throw dimension_error("profile length does not match grid");
  return interp_uniform(x1, -grid.r(), grid.spacing(), xi);
}

// ---------------------------------------------------------------------------
// Elements of X

struct ProfileX {
  double x0 = 0.0;
  std::vector<double> x1;

  static ProfileX zero(const SegmentGrid& grid) { return {0.0, std::vector<double>(grid.size(), 0.0)}; }
  // e1 = (1, 0)
  static ProfileX unit(const SegmentGrid& grid) { return {1.0, std::vector<double>(grid.size(), 0.0)}; }

  template <class F>
  static ProfileX from_function(const SegmentGrid& grid, double x0, F&& f) {
    ProfileX p{x0, std::vector<double>(grid.size())};
    for (std::size_t i = 0; i < grid.size(); ++i) p.x1[i] = f(grid.node(i));
    return p;
  }
};

inline void require_same_shape(const ProfileX& x, const ProfileX& y) {
  if (x.x1.size() != y.x1.size()) throw dimension_error("profiles live on different grids");
}

inline ProfileX operator+(const ProfileX& x, const ProfileX& y) {
  require_same_shape(x, y);
  ProfileX out{x.x0 + y.x0, x.x1};
  for (std::size_t i = 0; i < out.x1.size(); ++i) out.x1[i] += y.x1[i];
  return out;
}

inline ProfileX operator-(const ProfileX& x, const ProfileX& y) {
  require_same_shape(x, y);
  ProfileX out{x.x0 - y.x0, x.x1};
  for (std::size_t i = 0; i < out.x1.size(); ++i) out.x1[i] -= y.x1[i];
  return out;
}

inline ProfileX operator*(double a, const ProfileX& x) {
  ProfileX out{a * x.x0, x.x1};
  for (double& v : out.x1) v *= a;
  return out;
}

inline double inner_product(const ProfileX& x, const ProfileX& y, const SegmentGrid& grid) {
  if (x.x1.size() != grid.size() || y.x1.size() != grid.size()) {
    throw dimension_error("inner_product: profile length does not match grid");
  }
  // x_i * y_i is evaluated before weighting so that swapping x and y is bit-identical.
  double acc = 0.0;
  const auto w = grid.weights();
  for (std::size_t i = 0; i < grid.size(); ++i) acc += w[i] * (x.x1[i] * y.x1[i]);
  return x.x0 * y.x0 + acc;
}

inline double norm(const ProfileX& x, const SegmentGrid& grid) { return std::sqrt(inner_product(x, x, grid)); }

// Nodewise x <= y; the sampled stand-in for "almost everywhere".
inline bool order_leq(const ProfileX& x, const ProfileX& y) {
  require_same_shape(x, y);
  if (!(x.x0 <= y.x0)) return false;
  for (std::size_t i = 0; i < x.x1.size(); ++i) {
    if (!(x.x1[i] <= y.x1[i])) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Delay kernels

struct ZeroKernel {};
struct ConstantKernel {
  double c = 0.0;
};
// amp * exp(-|xi| / decay)
struct ExponentialKernel {
  double amp = 0.0;
  double decay = 1.0;
};
// Samples at the uniform nodes of [-r, 0]; linear in between.
struct SampledKernel {
  double r = 1.0;
  std::vector<double> values;
};

using Kernel = std::variant<ZeroKernel, ConstantKernel, ExponentialKernel, SampledKernel>;

inline bool is_zero(const Kernel& k) {
  return std::visit(
      [](const auto& v) -> bool {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, ZeroKernel>) return true;
        else if constexpr (std::is_same_v<T, ConstantKernel>) return v.c == 0.0;
        else if constexpr (std::is_same_v<T, ExponentialKernel>) return v.amp == 0.0;
        else return std::all_of(v.values.begin(), v.values.end(), [](double s) { return s == 0.0; });
      },
      k);
}

// Kernel value at lag xi; xi must lie in [-r, 0].
inline double kernel_eval(const Kernel& k, double xi, double r) {
  const double slack = 1e-12 * std::max(1.0, r);
  if (!(xi >= -r - slack && xi <= slack)) {
    throw domain_error("kernel_eval: lag " + std::to_string(xi) + " outside [-" + std::to_string(r) + ", 0]");
  }
  return std::visit(
      [&](const auto& v) -> double {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, ZeroKernel>) {
          return 0.0;
        } else if constexpr (std::is_same_v<T, ConstantKernel>) {
          return v.c;
        } else if constexpr (std::is_same_v<T, ExponentialKernel>) {
          return v.amp * std::exp(-std::abs(xi) / v.decay);
        } else {
          const double h = v.r / static_cast<double>(v.values.size() - 1);
          return interp_uniform(v.values, -v.r, h, xi);
        }
      },
      k);
}

inline std::vector<double> sample_kernel(const Kernel& k, const SegmentGrid& grid) {
  std::vector<double> out(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) out[i] = kernel_eval(k, grid.node(i), grid.r());
  return out;
}

inline void validate_kernel(const Kernel& k, const char* name) {
  std::visit(
      [&](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, ConstantKernel>) {
          if (!std::isfinite(v.c)) throw config_error(std::string(name) + ": constant must be finite");
        } else if constexpr (std::is_same_v<T, ExponentialKernel>) {
          if (!(v.decay > 0.0) || !std::isfinite(v.decay)) {
            throw config_error(std::string(name) + ": exponential decay scale must be positive");
          }
          if (!std::isfinite(v.amp)) throw config_error(std::string(name) + ": amplitude must be finite");
        } else if constexpr (std::is_same_v<T, SampledKernel>) {
          if (v.values.size() < 2) throw config_error(std::string(name) + ": sampled kernel needs >= 2 values");
          if (!(v.r > 0.0)) throw config_error(std::string(name) + ": sampled kernel needs r > 0");
          for (double s : v.values) {
            if (!std::isfinite(s)) throw config_error(std::string(name) + ": non-finite sample");
          }
        }
      },
      k);
}

// True when the kernel is >= 0 everywhere on [-r, 0].
inline bool is_nonnegative(const Kernel& k) {
  return std::visit(
      [](const auto& v) -> bool {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, ZeroKernel>) return true;
        else if constexpr (std::is_same_v<T, ConstantKernel>) return v.c >= 0.0;
        else if constexpr (std::is_same_v<T, ExponentialKernel>) return v.amp >= 0.0;
        else return std::all_of(v.values.begin(), v.values.end(), [](double s) { return s >= 0.0; });
      },
      k);
}

// JSON: {"type": "zero"|"constant"|"exponential"|"sampled", "c", "amp", "delta", "values"}.
// A sampled kernel takes its support [-r, 0] from the surrounding model.
inline nlohmann::json kernel_to_json(const Kernel& k) {
  return std::visit(
      [](const auto& v) -> nlohmann::json {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, ZeroKernel>) return {{"type", "zero"}};
        else if constexpr (std::is_same_v<T, ConstantKernel>) return {{"type", "constant"}, {"c", v.c}};
        else if constexpr (std::is_same_v<T, ExponentialKernel>)
          return {{"type", "exponential"}, {"amp", v.amp}, {"delta", v.decay}};
        else return {{"type", "sampled"}, {"values", v.values}};
      },
      k);
}

inline Kernel kernel_from_json(const nlohmann::json& j, double r) {
  if (!j.is_object() || !j.contains("type") || !j["type"].is_string()) {
    throw config_error("kernel: expected an object with a string \"type\"");
  }
  const std::string type = j["type"].get<std::string>();
  auto allow = [&](std::initializer_list<const char*> keys) {
    for (const auto& [key, _] : j.items()) {
      if (key == "type") continue;
      if (std::none_of(keys.begin(), keys.end(), [&](const char* k) { return key == k; })) {
        throw config_error("kernel of type '" + type + "': unknown key '" + key + "'");
      }
    }
  };
  auto number = [&](const char* key) {
    if (!j.contains(key) || !j[key].is_number()) {
      throw config_error("kernel of type '" + type + "': missing numeric '" + key + "'");
    }
    return j[key].get<double>();
  };
  Kernel k;
  if (type == "zero") {
    allow({});
    k = ZeroKernel{};
  } else if (type == "constant") {
    allow({"c"});
    k = ConstantKernel{number("c")};
  } else if (type == "exponential") {
    allow({"amp", "delta"});
    k = ExponentialKernel{number("amp"), number("delta")};
  } else if (type == "sampled") {
    allow({"values"});
    if (!j.contains("values") || !j["values"].is_array()) throw config_error("sampled kernel: missing 'values'");
    SampledKernel s{r, {}};
    for (const auto& v : j["values"]) {
      if (!v.is_number()) throw config_error("sampled kernel: non-numeric value");
      s.values.push_back(v.get<double>());
    }
    k = std::move(s);
  } else {
    throw config_error("kernel: unknown type '" + type + "'");
  }
  validate_kernel(k, "kernel");
  return k;
}

}  // namespace goodwill
