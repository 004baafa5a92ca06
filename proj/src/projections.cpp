#include "fistasep/projections.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace fistasep::proj {

SocPoint project_soc(const SocPoint& p) {
  const double nt = p.tail.norm();
  if (nt <= p.head) return p;
  if (nt <= -p.head) return SocPoint{0.0, Vector::Zero(p.tail.size())};
  const double a = 0.5 * (p.head + nt);  // here nt > |head| >= 0, so nt > 0
  SocPoint out{a, (a / nt) * p.tail};
  // pin the head to the recomputed tail norm so membership is exact and
  // re-projection is a bitwise fixed point
  out.head = out.tail.norm();
  return out;
}

ProductConePoint project_product_cone(const ProductConePoint& p) {
  ProductConePoint out;
  out.blocks.reserve(p.blocks.size());
  for (const auto& b : p.blocks) out.blocks.push_back(project_soc(b));
  return out;
}

void project_product_cone_inplace(Eigen::Ref<Vector> x, Index block_dim) {
  for (Index off = 0; off + block_dim <= x.size(); off += block_dim) {
    auto tail = x.segment(off + 1, block_dim - 1);
    const double head = x[off];
    const double nt = tail.norm();
    if (nt <= head) continue;
    if (nt <= -head) {
      x.segment(off, block_dim).setZero();
      continue;
    }
    const double a = 0.5 * (head + nt);
    tail *= a / nt;
    x[off] = tail.norm();
  }
}

namespace {

double clamp_sum(const KnapsackProblem& kp, double lam) {
  double s = 0.0;
  for (Index i = 0; i < kp.q.size(); ++i)
    s += std::clamp(kp.q[i] - lam, kp.lower[i], kp.upper[i]);
  return s;
}

// Count of coordinates strictly between their bounds at lambda; used for the
// exact one-segment correction after the bracket search.
long free_count(const KnapsackProblem& kp, double lam) {
  long c = 0;
  for (Index i = 0; i < kp.q.size(); ++i) {
    const double v = kp.q[i] - lam;
    if (v > kp.lower[i] && v < kp.upper[i]) ++c;
  }
  return c;
}

void validate(const KnapsackProblem& kp) {
  const Index n = kp.q.size();
  if (kp.lower.size() != n || kp.upper.size() != n)
    throw std::invalid_argument("project_knapsack: dimension mismatch");
  double sl = 0.0, su = 0.0;
  for (Index i = 0; i < n; ++i) {
    if (!(kp.lower[i] <= kp.upper[i]))
      throw std::invalid_argument("project_knapsack: lower > upper");
    sl += kp.lower[i];
    su += kp.upper[i];
  }
  if (sl > kp.target || su < kp.target)
    throw InfeasibleBox("project_knapsack: e'lower <= target <= e'upper violated");
}

// Optimal-multiplier interval, endpoints clipped to the breakpoint range.
// g is nonincreasing and piecewise linear; the interval is
// [min{lam : g(lam) <= target}, max{lam : g(lam) >= target}].
std::pair<double, double> multiplier_interval_sorted(const KnapsackProblem& kp) {
  const Index n = kp.q.size();

  struct Event {
    double lam;
    double d_fixed;  // change in the clamped-contribution sum
    double d_q;      // change in the free-coordinate q sum
    int d_free;
  };
  std::vector<Event> ev;
  ev.reserve(2 * static_cast<size_t>(n));
  double sum_upper = 0.0;
  for (Index i = 0; i < n; ++i) {
    sum_upper += kp.upper[i];
    ev.push_back({kp.q[i] - kp.upper[i], -kp.upper[i], kp.q[i], +1});
    ev.push_back({kp.q[i] - kp.lower[i], +kp.lower[i], -kp.q[i], -1});
  }
  std::sort(ev.begin(), ev.end(), [](const Event& a, const Event& b) { return a.lam < b.lam; });

  // g at each distinct breakpoint; continuity makes the post-event aggregates
  // valid at the breakpoint itself.
  std::vector<double> lams, gs;
  lams.reserve(ev.size());
  gs.reserve(ev.size());
  double fixed = sum_upper, qfree = 0.0;
  long nfree = 0;
  size_t a = 0;
  while (a < ev.size()) {
    const double lam = ev[a].lam;
    while (a < ev.size() && ev[a].lam == lam) {
      fixed += ev[a].d_fixed;
      qfree += ev[a].d_q;
      nfree += ev[a].d_free;
      ++a;
    }
    lams.push_back(lam);
    gs.push_back(fixed + qfree - static_cast<double>(nfree) * lam);
  }
  const size_t m = lams.size();

  auto crossing = [&](size_t left, size_t right) {
    // the exact values kill error accumulated in the sweep aggregates
    const double gl = clamp_sum(kp, lams[left]);
    const double gr = clamp_sum(kp, lams[right]);
    if (gl == gr) return 0.5 * (lams[left] + lams[right]);
    const double lam = lams[left] + (kp.target - gl) * (lams[right] - lams[left]) / (gr - gl);
    return std::clamp(lam, lams[left], lams[right]);
  };

  double lo;
  if (gs[0] <= kp.target) {
    lo = lams[0];
  } else {
    size_t k = 0;
    while (k < m && gs[k] > kp.target) ++k;
    lo = crossing(k - 1, k);
  }

  double hi;
  if (gs[m - 1] >= kp.target) {
    hi = lams[m - 1];
  } else {
    size_t k = m - 1;
    while (k > 0 && gs[k] < kp.target) --k;
    hi = crossing(k, k + 1);
  }

  if (hi < lo) hi = lo;  // FP jitter on a unique crossing
  return {lo, hi};
}

double solve_multiplier_sorted(const KnapsackProblem& kp) {
  auto [lo, hi] = multiplier_interval_sorted(kp);
  return 0.5 * (lo + hi);
}

double solve_multiplier_median(const KnapsackProblem& kp) {
  const Index n = kp.q.size();
  double sl = 0.0, su = 0.0;
  for (Index i = 0; i < n; ++i) {
    sl += kp.lower[i];
    su += kp.upper[i];
  }
  // extreme targets sit on unbounded flat segments; the sorted path owns the
  // interval convention there
  if (kp.target == sl || kp.target == su) return solve_multiplier_sorted(kp);

  const double inf = std::numeric_limits<double>::infinity();
  double lo = -inf, hi = inf;
  double fixed = 0.0, qfree = 0.0;
  long nfree = 0;
  std::vector<Index> undecided(static_cast<size_t>(n));
  for (Index i = 0; i < n; ++i) undecided[static_cast<size_t>(i)] = i;
  std::vector<double> bps;
  bps.reserve(undecided.size() * 2);

  while (true) {
    bps.clear();
    for (Index i : undecided) {
      const double bu = kp.q[i] - kp.upper[i];
      const double bl = kp.q[i] - kp.lower[i];
      if (bu > lo && bu < hi) bps.push_back(bu);
      if (bl > lo && bl < hi) bps.push_back(bl);
    }
    if (bps.empty()) break;

    auto mid = bps.begin() + static_cast<std::ptrdiff_t>(bps.size() / 2);
    std::nth_element(bps.begin(), mid, bps.end());
    const double pivot = *mid;

    double g = fixed + qfree - static_cast<double>(nfree) * pivot;
    for (Index i : undecided) g += std::clamp(kp.q[i] - pivot, kp.lower[i], kp.upper[i]);

    if (g > kp.target) {
      lo = pivot;
    } else if (g < kp.target) {
      hi = pivot;
    } else {
      return solve_multiplier_sorted(kp);  // exact tie: delegate the interval rule
    }

    // retire coordinates whose behavior is settled on the open bracket
    size_t w = 0;
    for (size_t r = 0; r < undecided.size(); ++r) {
      const Index i = undecided[r];
      const double bu = kp.q[i] - kp.upper[i];
      const double bl = kp.q[i] - kp.lower[i];
      if (bl <= lo) {
        fixed += kp.lower[i];
      } else if (bu >= hi) {
        fixed += kp.upper[i];
      } else if (bu <= lo && bl >= hi) {
        qfree += kp.q[i];
        ++nfree;
      } else {
        undecided[w++] = i;
      }
    }
    undecided.resize(w);
  }

  for (Index i : undecided) {
    // no breakpoints left inside (lo, hi): classify against the endpoints
    const double bu = kp.q[i] - kp.upper[i];
    const double bl = kp.q[i] - kp.lower[i];
    if (bl <= lo) {
      fixed += kp.lower[i];
    } else if (bu >= hi) {
      fixed += kp.upper[i];
    } else {
      qfree += kp.q[i];
      ++nfree;
    }
  }

  if (nfree == 0) return solve_multiplier_sorted(kp);  // flat segment tie
  double lam = (fixed + qfree - kp.target) / static_cast<double>(nfree);

  // one exact correction pass within the located segment
  const long nf = free_count(kp, lam);
  if (nf > 0) lam += (clamp_sum(kp, lam) - kp.target) / static_cast<double>(nf);
  return lam;
}

}  // namespace

KnapsackSolution project_knapsack(const KnapsackProblem& kp, KnapsackMethod method) {
  validate(kp);
  const Index n = kp.q.size();
  if (n == 0) return {Vector(0), 0.0};

  const double lam = method == KnapsackMethod::SortBreakpoints ? solve_multiplier_sorted(kp)
                                                               : solve_multiplier_median(kp);
  KnapsackSolution sol;
  sol.multiplier = lam;
  sol.r.resize(n);
  for (Index i = 0; i < n; ++i) sol.r[i] = std::clamp(kp.q[i] - lam, kp.lower[i], kp.upper[i]);
  return sol;
}

std::pair<Vector, Vector> project_omega(const Vector& u, const Vector& v, double gamma,
                                        KnapsackMethod method) {
  if (!(gamma > 0)) throw std::invalid_argument("project_omega: gamma must be positive");
  const Index j = u.size(), l = v.size();
  KnapsackProblem kp;
  kp.q.resize(j + l);
  kp.q.head(j) = u;
  kp.q.tail(l) = -v;
  kp.lower.resize(j + l);
  kp.lower.head(j).setZero();
  kp.lower.tail(l).setConstant(-gamma);
  kp.upper.resize(j + l);
  kp.upper.head(j).setConstant(gamma);
  kp.upper.tail(l).setZero();
  kp.target = 0.0;
  const auto sol = project_knapsack(kp, method);
  return {sol.r.head(j), -sol.r.tail(l)};
}

void project_omega_inplace(Vector& z, Index j, double gamma, KnapsackMethod method) {
  const Index l = z.size() - j;
  auto [u, v] = project_omega(z.head(j), z.tail(l), gamma, method);
  z.head(j) = u;
  z.tail(l) = v;
}

}  // namespace fistasep::proj
