#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <queue>
#include <vector>

#include "amdkit/errors.hpp"
#include "amdkit/geometry.hpp"

namespace amdkit {

void QuadratureSpec::validate() const {
  if (gauss_order < 2 || gauss_order > 64) throw InvalidInput("quadrature order must be in [2, 64]");
  if (max_subdivision_depth < 0 || max_subdivision_depth > 20) {
    throw InvalidInput("quadrature subdivision depth must be in [0, 20]");
  }
  if (!(target_rel_tol > 0.0)) throw InvalidInput("quadrature tolerance must be positive");
  if (target_abs_tol < 0.0) throw InvalidInput("quadrature absolute tolerance must be non-negative");
  if (max_evaluations < 1) throw InvalidInput("quadrature evaluation budget must be positive");
}

const GaussRule& gauss_legendre(int order) {
  static std::mutex mu;
  static std::map<int, std::unique_ptr<GaussRule>> cache;
  if (order < 1) throw InvalidInput("Gauss-Legendre order must be positive");
  std::lock_guard lock(mu);
  auto& slot = cache[order];
  if (slot) return *slot;
  auto rule = std::make_unique<GaussRule>();
  rule->nodes.resize(order);
  rule->weights.resize(order);
  const int n = order;
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0;
      double p1 = x;
      for (int m = 2; m <= n; ++m) {
        const double p2 = ((2.0 * m - 1.0) * x * p1 - (m - 1.0) * p0) / m;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    double p0 = 1.0;
    double p1 = x;
    for (int m = 2; m <= n; ++m) {
      const double p2 = ((2.0 * m - 1.0) * x * p1 - (m - 1.0) * p0) / m;
      p0 = p1;
      p1 = p2;
    }
    dp = n * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule->nodes[i] = -x;
    rule->nodes[n - 1 - i] = x;
    rule->weights[i] = w;
    rule->weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) rule->nodes[n / 2] = 0.0;
  slot = std::move(rule);
  return *slot;
}

namespace {

using Box = std::vector<Interval>;
using Integrand = std::function<double(std::span<const double>)>;

enum class CellKind { Inside, Outside, Cut };

struct Item {
  double error = 0.0;
  double value = 0.0;
  Box cell;
  int depth = 0;
};

struct ByError {
  bool operator()(const Item& a, const Item& b) const { return a.error < b.error; }
};

class Integrator {
 public:
  Integrator(const Region& region, const Integrand& f, const QuadratureSpec& spec)
      : region_(region), f_(f), spec_(spec), k_(region.dim()), point_(k_) {}

  QuadratureResult run() {
    QuadratureResult out;
    double root_volume = 1.0;
    for (const auto& iv : region_.box()) root_volume *= iv.width();
    if (root_volume == 0.0) return out;
    seed(region_.box(), 0);
    while (!active_.empty()) {
      const double tau = std::max(spec_.target_rel_tol * std::abs(total_value_), spec_.target_abs_tol);
      if (total_error_ <= tau) break;
      if (evaluations_ > spec_.max_evaluations) {
        out.warning = true;
        break;
      }
      Item top = active_.top();
      active_.pop();
      if (top.depth >= spec_.max_subdivision_depth) {
        finished_.push_back(std::move(top));
        continue;
      }
      total_value_ -= top.value;
      total_error_ -= top.error;
      split(top.cell, top.depth + 1);
    }
    // Sum in a fixed order so results do not depend on heap internals.
    std::vector<Item> all = std::move(finished_);
    while (!active_.empty()) {
      all.push_back(active_.top());
      active_.pop();
    }
    for (const Item& it : all) {
      out.value += it.value;
      out.error_estimate += it.error;
    }
    out.cells = static_cast<int>(all.size());
    out.evaluations = evaluations_;
    if (out.error_estimate > std::max(spec_.target_rel_tol * std::abs(out.value), spec_.target_abs_tol)) {
      out.warning = true;
    }
    return out;
  }

 private:
  // Cut cells are split a few levels up front so that small features of
  // the boundary are seen by the classification lattice.
  void seed(const Box& cell, int depth) {
    const CellKind kind = classify(cell);
    if (kind == CellKind::Outside) return;
    if (kind == CellKind::Cut && depth < std::min(2, spec_.max_subdivision_depth)) {
      for_children(cell, [&](const Box& c) { seed(c, depth + 1); });
      return;
    }
    push(cell, depth, kind);
  }

  void split(const Box& cell, int depth) {
    for_children(cell, [&](const Box& c) {
      const CellKind kind = classify(c);
      if (kind != CellKind::Outside) push(c, depth, kind);
    });
  }

  template <class F>
  void for_children(const Box& cell, F&& visit) {
    Box child(cell);
    for (int c = 0; c < (1 << k_); ++c) {
      for (int i = 0; i < k_; ++i) {
        const double mid = 0.5 * (cell[i].lo + cell[i].hi);
        child[i] = ((c >> i) & 1) ? Interval{mid, cell[i].hi} : Interval{cell[i].lo, mid};
      }
      visit(child);
    }
  }

  void push(const Box& cell, int depth, CellKind kind) {
    const int hi = spec_.gauss_order;
    const int lo = std::max(2, hi / 2);
    Item it;
    it.cell = cell;
    it.depth = depth;
    if (kind == CellKind::Inside) {
      it.value = tensor(cell, hi);
      it.error = std::abs(it.value - tensor(cell, lo));
    } else {
      const int axis = transverse_axis(cell);
      it.value = clipped(cell, hi, axis);
      it.error = std::abs(it.value - clipped(cell, lo, axis));
    }
    total_value_ += it.value;
    total_error_ += it.error;
    active_.push(std::move(it));
  }

  CellKind classify(const Box& cell) {
    if (!region_.clipped()) return CellKind::Inside;
    // 3^k lattice: corners, edge midpoints, face centers and the center.
    int inside = 0;
    int total = 1;
    for (int i = 0; i < k_; ++i) total *= 3;
    for (int idx = 0; idx < total; ++idx) {
      int rest = idx;
      for (int i = 0; i < k_; ++i) {
        point_[i] = cell[i].lo + 0.5 * (rest % 3) * cell[i].width();
        rest /= 3;
      }
      inside += region_.contains(point_) ? 1 : 0;
    }
    if (inside == total) return CellKind::Inside;
    if (inside == 0) return CellKind::Outside;
    return CellKind::Cut;
  }

  // Axis along which the predicate changes fastest at the cell center, so
  // integration lines cross the boundary transversally.
  int transverse_axis(const Box& cell) {
    if (k_ == 1) return 0;
    for (int i = 0; i < k_; ++i) point_[i] = 0.5 * (cell[i].lo + cell[i].hi);
    int best = k_ - 1;
    double best_slope = -1.0;
    for (int i = 0; i < k_; ++i) {
      const double h = 1e-3 * cell[i].width();
      const double mid = point_[i];
      point_[i] = mid + h;
      const double up = region_.predicate_value(point_);
      point_[i] = mid - h;
      const double down = region_.predicate_value(point_);
      point_[i] = mid;
      const double slope = std::abs(up - down) / (2.0 * h) * cell[i].width();
      if (slope > best_slope) {
        best_slope = slope;
        best = i;
      }
    }
    return best;
  }

  double eval(std::span<const double> p) {
    ++evaluations_;
    return f_(p);
  }

  double tensor(const Box& cell, int order) {
    const GaussRule& g = gauss_legendre(order);
    long total = 1;
    for (int i = 0; i < k_; ++i) total *= order;
    double sum = 0.0;
    for (long idx = 0; idx < total; ++idx) {
      long rest = idx;
      double w = 1.0;
      for (int i = 0; i < k_; ++i) {
        const int c = static_cast<int>(rest % order);
        rest /= order;
        const double half = 0.5 * cell[i].width();
        point_[i] = cell[i].lo + half * (g.nodes[c] + 1.0);
        w *= half * g.weights[c];
      }
      sum += w * eval(point_);
    }
    return sum;
  }

  // Outer tensor rule over the other axes; along `axis` the integrand is
  // restricted to the inside segments, whose endpoints are located by
  // bisection between equispaced probes.
  double clipped(const Box& cell, int order, int axis) {
    const GaussRule& g = gauss_legendre(order);
    long total = 1;
    for (int i = 0; i < k_ - 1; ++i) total *= order;
    const Interval line = cell[axis];
    const int probes = order + 1;
    std::vector<double> ts(probes);
    std::vector<char> in(probes);
    double sum = 0.0;
    for (long idx = 0; idx < total; ++idx) {
      long rest = idx;
      double w = 1.0;
      for (int i = 0; i < k_; ++i) {
        if (i == axis) continue;
        const int c = static_cast<int>(rest % order);
        rest /= order;
        const double half = 0.5 * cell[i].width();
        point_[i] = cell[i].lo + half * (g.nodes[c] + 1.0);
        w *= half * g.weights[c];
      }
      for (int s = 0; s < probes; ++s) {
        ts[s] = line.lo + line.width() * s / (probes - 1);
        point_[axis] = ts[s];
        in[s] = region_.contains(point_) ? 1 : 0;
      }
      double acc = 0.0;
      double start = ts[0];
      bool open = in[0];
      for (int s = 0; s + 1 < probes; ++s) {
        if (in[s] == in[s + 1]) continue;
        const double x = crossing(ts[s], ts[s + 1], in[s] != 0, axis);
        if (open) {
          acc += segment(start, x, order, axis);
          open = false;
        } else {
          start = x;
          open = true;
        }
      }
      if (open) acc += segment(start, ts[probes - 1], order, axis);
      sum += w * acc;
    }
    return sum;
  }

  double crossing(double a, double b, bool a_inside, int axis) {
    for (int it = 0; it < 48; ++it) {
      const double mid = 0.5 * (a + b);
      point_[axis] = mid;
      if (region_.contains(point_) == a_inside) {
        a = mid;
      } else {
        b = mid;
      }
    }
    return 0.5 * (a + b);
  }

  double segment(double a, double b, int order, int axis) {
    if (b <= a) return 0.0;
    const GaussRule& g = gauss_legendre(order);
    const double half = 0.5 * (b - a);
    double s = 0.0;
    for (int c = 0; c < order; ++c) {
      point_[axis] = a + half * (g.nodes[c] + 1.0);
      s += g.weights[c] * eval(point_);
    }
    return half * s;
  }

  const Region& region_;
  const Integrand& f_;
  const QuadratureSpec& spec_;
  int k_;
  std::vector<double> point_;
  std::priority_queue<Item, std::vector<Item>, ByError> active_;
  std::vector<Item> finished_;
  double total_value_ = 0.0;
  double total_error_ = 0.0;
  long evaluations_ = 0;
};

}  // namespace

QuadratureResult integrate(const Region& region, const Integrand& f, const QuadratureSpec& spec) {
  spec.validate();
  if (region.dim() == 0) throw InvalidInput("cannot integrate over a zero-dimensional region");
  Integrator it(region, f, spec);
  return it.run();
}

}  // namespace amdkit
