#ifndef GRASPFORCE_QUADRATURE_HPP
#define GRASPFORCE_QUADRATURE_HPP

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

namespace graspforce {

struct QuadratureOptions {
  double abs_tol = 1e-8;
  double rel_tol = 1e-6;
  int max_intervals = 4096;
};

template <typename Scalar>
struct QuadratureResult {
  Scalar value = 0;
  Scalar error = 0;      // accumulated error estimate
  long evaluations = 0;  // integrand evaluations
  bool converged = false;
};

namespace detail {

// Gauss(7)-Kronrod(15) nodes and weights on [-1, 1] (QUADPACK values).
inline constexpr double kKronrodNodes[8] = {
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000};

inline constexpr double kKronrodWeights[8] = {
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714};

// Gauss-7 weights; nodes are kKronrodNodes[1], [3], [5], [7].
inline constexpr double kGaussWeights[4] = {
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327};

template <typename Scalar, typename F>
std::pair<Scalar, Scalar> gauss_kronrod_15(F&& f, Scalar a, Scalar b) {
  const Scalar center = Scalar(0.5) * (a + b);
  const Scalar half = Scalar(0.5) * (b - a);
  Scalar kronrod = 0;
  Scalar gauss = 0;
  for (int i = 0; i < 8; ++i) {
    const Scalar x = half * Scalar(kKronrodNodes[i]);
    const Scalar fsum =
        (i < 7) ? f(center - x) + f(center + x) : f(center);
    kronrod += Scalar(kKronrodWeights[i]) * fsum;
    if (i % 2 == 1) gauss += Scalar(kGaussWeights[i / 2]) * fsum;
  }
  kronrod *= half;
  gauss *= half;
  const Scalar err = std::abs(kronrod - gauss);
  return {kronrod, err};
}

}  // namespace detail

/// Adaptive Gauss-Kronrod integration of f over [a, b]. Intervals whose local
/// error exceeds their share of the tolerance are bisected, worst first.
template <typename Scalar, typename F>
QuadratureResult<Scalar> integrate_adaptive(F&& f, Scalar a, Scalar b,
                                            const QuadratureOptions& opt = {}) {
  QuadratureResult<Scalar> res;
  if (a == b) {
    res.converged = true;
    return res;
  }

  struct Interval {
    Scalar a, b, value, error;
  };
  std::vector<Interval> heap;
  auto worse = [](const Interval& lhs, const Interval& rhs) {
    return lhs.error < rhs.error;
  };

  auto [v0, e0] = detail::gauss_kronrod_15<Scalar>(f, a, b);
  res.evaluations = 15;
  heap.push_back({a, b, v0, e0});

  Scalar total = v0;
  Scalar total_err = e0;
  while (static_cast<int>(heap.size()) < opt.max_intervals) {
    const Scalar tol =
        std::max(Scalar(opt.abs_tol), Scalar(opt.rel_tol) * std::abs(total));
    if (total_err <= tol) break;

    std::pop_heap(heap.begin(), heap.end(), worse);
    Interval cur = heap.back();
    heap.pop_back();

    const Scalar mid = Scalar(0.5) * (cur.a + cur.b);
    if (mid <= cur.a || mid >= cur.b) {  // interval at floating-point floor
      heap.push_back(cur);
      std::push_heap(heap.begin(), heap.end(), worse);
      break;
    }
    auto [vl, el] = detail::gauss_kronrod_15<Scalar>(f, cur.a, mid);
    auto [vr, er] = detail::gauss_kronrod_15<Scalar>(f, mid, cur.b);
    res.evaluations += 30;

    total += vl + vr - cur.value;
    total_err += el + er - cur.error;

    heap.push_back({cur.a, mid, vl, el});
    std::push_heap(heap.begin(), heap.end(), worse);
    heap.push_back({mid, cur.b, vr, er});
    std::push_heap(heap.begin(), heap.end(), worse);
  }

  res.value = total;
  res.error = total_err;
  res.converged =
      total_err <=
      std::max(Scalar(opt.abs_tol), Scalar(opt.rel_tol) * std::abs(total));
  return res;
}

}  // namespace graspforce

#endif  // GRASPFORCE_QUADRATURE_HPP
