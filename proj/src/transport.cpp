#include "gmmot/transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace gmmot {

Vector TransportPlan::row_sums() const {
  Vector r(gamma.rows(), 0.0);
  for (int i = 0; i < gamma.rows(); ++i)
    for (int j = 0; j < gamma.cols(); ++j) r[i] += gamma(i, j);
  return r;
}

Vector TransportPlan::col_sums() const {
  Vector c(gamma.cols(), 0.0);
  for (int i = 0; i < gamma.rows(); ++i)
    for (int j = 0; j < gamma.cols(); ++j) c[j] += gamma(i, j);
  return c;
}

namespace {

std::vector<int> stable_order(const Vector& values) {
  std::vector<int> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int i, int j) { return values[i] < values[j]; });
  return order;
}

}  // namespace

Coupling1d coupling_1d(const PointMeasure1d& a, const PointMeasure1d& b) {
  const std::vector<int> oa = stable_order(a.supports);
  const std::vector<int> ob = stable_order(b.supports);
  const int na = a.size(), nb = b.size();
  Coupling1d out;
  out.pairs.reserve(na + nb);
  out.mass.reserve(na + nb);
  int i = 0, j = 0;
  double ra = a.weights[oa[0]];
  double rb = b.weights[ob[0]];
  while (i < na && j < nb) {
    const double m = std::min(ra, rb);
    const int ia = oa[i], jb = ob[j];
    out.pairs.push_back({ia, jb});
    out.mass.push_back(m);
    const double diff = a.supports[ia] - b.supports[jb];
    out.cost += m * diff * diff;
    ra -= m;
    rb -= m;
    const bool ea = (ra <= 0.0), eb = (rb <= 0.0);
    if (ea && eb) {
      ++i;
      ++j;
      if (i < na) ra = a.weights[oa[i]];
      if (j < nb) rb = b.weights[ob[j]];
    } else if (ea) {
      ++i;
      if (i < na) ra = a.weights[oa[i]];
    } else {
      ++j;
      if (j < nb) rb = b.weights[ob[j]];
    }
  }
  // Rounding can leave a sliver on one side; drain it against the last atom.
  while (i < na) {
    out.pairs.push_back({oa[i], ob[nb - 1]});
    out.mass.push_back(std::max(0.0, ra));
    const double diff = a.supports[oa[i]] - b.supports[ob[nb - 1]];
    out.cost += std::max(0.0, ra) * diff * diff;
    ++i;
    if (i < na) ra = a.weights[oa[i]];
  }
  while (j < nb) {
    out.pairs.push_back({oa[na - 1], ob[j]});
    out.mass.push_back(std::max(0.0, rb));
    const double diff = a.supports[oa[na - 1]] - b.supports[ob[j]];
    out.cost += std::max(0.0, rb) * diff * diff;
    ++j;
    if (j < nb) rb = b.weights[ob[j]];
  }
  return out;
}

DualPotentials duals_1d(const PointMeasure1d& a, const PointMeasure1d& b,
                        const Coupling1d& coupling) {
  const auto cost = [&](int i, int j) {
    const double d = a.supports[i] - b.supports[j];
    return d * d;
  };
  const double nan = std::numeric_limits<double>::quiet_NaN();
  Vector f(a.size(), nan), g(b.size(), nan);
  std::vector<int> old_a, old_b;   // atoms of already resolved segments
  std::vector<int> seg_a, seg_b;   // atoms of the open segment
  Vector seg_f, seg_g;             // chain values with segment constant 0

  const auto close_segment = [&]() {
    if (seg_a.empty()) return;
    double t = 0.0;
    if (!old_a.empty()) {
      // Feasibility band for the segment constant against resolved atoms:
      //   (f~ + t) + g_old <= c  and  f_old + (g~ - t) <= c.
      double hi = std::numeric_limits<double>::infinity();
      double lo = -hi;
      for (std::size_t p = 0; p < seg_a.size(); ++p)
        for (int jo : old_b)
          hi = std::min(hi, cost(seg_a[p], jo) - g[jo] - seg_f[p]);
      for (std::size_t q = 0; q < seg_b.size(); ++q)
        for (int io : old_a)
          lo = std::max(lo, f[io] + seg_g[q] - cost(io, seg_b[q]));
      t = (lo > hi) ? 0.5 * (lo + hi) : std::clamp(0.0, lo, hi);
    }
    for (std::size_t p = 0; p < seg_a.size(); ++p) f[seg_a[p]] = seg_f[p] + t;
    for (std::size_t q = 0; q < seg_b.size(); ++q) g[seg_b[q]] = seg_g[q] - t;
    old_a.insert(old_a.end(), seg_a.begin(), seg_a.end());
    old_b.insert(old_b.end(), seg_b.begin(), seg_b.end());
    seg_a.clear();
    seg_b.clear();
    seg_f.clear();
    seg_g.clear();
  };

  for (const auto& pair : coupling.pairs) {
    const int i = pair[0], j = pair[1];
    const bool have_i = !seg_a.empty() && seg_a.back() == i;
    const bool have_j = !seg_b.empty() && seg_b.back() == j;
    if (have_i && !have_j) {
      seg_b.push_back(j);
      seg_g.push_back(cost(i, j) - seg_f.back());
    } else if (have_j && !have_i) {
      seg_a.push_back(i);
      seg_f.push_back(cost(i, j) - seg_g.back());
    } else if (!have_i && !have_j) {
      close_segment();
      seg_a.push_back(i);
      seg_f.push_back(0.0);
      seg_b.push_back(j);
      seg_g.push_back(cost(i, j));
    }
    // have_i && have_j: the chain revisits the same pair; nothing to add.
  }
  close_segment();
  return {std::move(f), std::move(g)};
}

TransportResult w2_point_1d(const PointMeasure1d& a, const PointMeasure1d& b) {
  const Coupling1d coupling = coupling_1d(a, b);
  TransportResult result;
  result.cost = coupling.cost;
  result.plan.gamma = Matrix(a.size(), b.size());
  for (std::size_t e = 0; e < coupling.pairs.size(); ++e)
    result.plan.gamma(coupling.pairs[e][0], coupling.pairs[e][1]) += coupling.mass[e];
  result.potentials = duals_1d(a, b, coupling);
  return result;
}

double quantile(const PointMeasure1d& a, double t) {
  if (!(t > 0.0 && t < 1.0)) throw InvalidInput("quantile: t must lie in (0, 1)");
  const std::vector<int> order = stable_order(a.supports);
  double cum = 0.0;
  for (int idx : order) {
    cum += a.weights[idx];
    if (cum > t) return a.supports[idx];
  }
  return a.supports[order.back()];
}

// ---------------------------------------------------------------------------
// Exact solver: primal network simplex on the dense bipartite transportation
// graph. Sources are nodes 0..n-1, sinks n..n+m-1; the basis is a spanning
// tree stored through parent/children links with the to-parent arc flow kept
// at the child.
// ---------------------------------------------------------------------------

namespace {

class NetworkSimplex {
 public:
  NetworkSimplex(const Matrix& cost, const Vector& w0, const Vector& w1_scaled)
      : c_(cost),
        n_(static_cast<int>(w0.size())),
        m_(static_cast<int>(w1_scaled.size())),
        total_(n_ + m_),
        w0_(w0),
        w1_(w1_scaled),
        parent_(total_, -1),
        depth_(total_, 0),
        flow_(total_, 0.0),
        pot_(total_, 0.0),
        children_(total_) {}

  TransportResult run() {
    build_initial_basis();
    refresh_subtree(0);

    double cmax = 0.0;
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < m_; ++j) cmax = std::max(cmax, std::fabs(c_(i, j)));
    const double tol = 1e-12 * (1.0 + cmax);

    const long long arc_count = static_cast<long long>(n_) * m_;
    const long long max_pivots = 2000LL * total_ + 100000;
    int cursor_row = 0;
    long long pivots = 0;
    int degenerate_streak = 0;
    bool bland = false;

    while (true) {
      int best_i = -1, best_j = -1;
      if (!bland) {
        // Row pricing: a cheap vectorizable min pass per row, then an
        // argmin pass only on the first row holding a negative reduced cost.
        // A fruitless sweep over all rows proves optimality.
        const double* gpot = pot_.data() + n_;
        const double inf = std::numeric_limits<double>::infinity();
        constexpr int kChunk = 128;
        int i = cursor_row;
        for (int rows = 0; rows < n_; ++rows) {
          const double* crow = c_.data() + static_cast<std::size_t>(i) * m_;
          const double fi = pot_[i];
          double row_best = inf;
          int row_chunk = 0;
          for (int j0 = 0; j0 < m_; j0 += kChunk) {
            const int j1 = std::min(m_, j0 + kChunk);
            double m0 = inf, m1 = inf, m2 = inf, m3 = inf;
            int j = j0;
            for (; j + 4 <= j1; j += 4) {
              m0 = std::min(m0, crow[j] - gpot[j]);
              m1 = std::min(m1, crow[j + 1] - gpot[j + 1]);
              m2 = std::min(m2, crow[j + 2] - gpot[j + 2]);
              m3 = std::min(m3, crow[j + 3] - gpot[j + 3]);
            }
            for (; j < j1; ++j) m0 = std::min(m0, crow[j] - gpot[j]);
            const double chunk_min = std::min(std::min(m0, m1), std::min(m2, m3));
            if (chunk_min < row_best) {
              row_best = chunk_min;
              row_chunk = j0;
            }
          }
          if (row_best - fi < -tol) {
            best_i = i;
            double best_r = inf;
            for (int q = row_chunk; q < std::min(m_, row_chunk + kChunk); ++q) {
              const double r = crow[q] - gpot[q];
              if (r < best_r) {
                best_r = r;
                best_j = q;
              }
            }
            cursor_row = i;
            break;
          }
          if (++i == n_) i = 0;
        }
      } else {
        for (long long a = 0; a < arc_count && best_i < 0; ++a) {
          const int i = static_cast<int>(a / m_);
          const int j = static_cast<int>(a % m_);
          if (c_(i, j) - pot_[i] - pot_[n_ + j] < -tol) {
            best_i = i;
            best_j = j;
          }
        }
      }
      if (best_i < 0) break;  // optimal within tolerance

      const bool degenerate = pivot(best_i, best_j, bland);
      if (++pivots > max_pivots)
        throw NumericalError("solve_exact: pivot limit exceeded");
      // The in-loop potentials accumulate constant-shift updates; re-derive
      // them exactly from the tree now and then to cap the drift.
      if ((pivots & 0x3fff) == 0) refresh_subtree(0);
      degenerate_streak = degenerate ? degenerate_streak + 1 : 0;
      bland = degenerate_streak > 5 * total_;
    }

    repair_flows();
    refresh_subtree(0);  // exact potentials for the returned duals
    return extract();
  }

 private:
  // Row-minimum greedy start: each row pours its supply into the cheapest
  // columns with remaining demand. Every allocation exhausts a row or a
  // column, so the allocation cells form a forest; zero-flow arcs then stitch
  // the components into one spanning tree.
  void build_initial_basis() {
    Vector rb = w1_;
    std::vector<std::array<int, 2>> cells;
    std::vector<double> amounts;
    cells.reserve(total_);
    amounts.reserve(total_);
    for (int i = 0; i < n_; ++i) {
      double ra = w0_[i];
      if (i == n_ - 1) {
        // Last row absorbs every remaining demand so rounding residue cannot
        // strand mass.
        for (int j = 0; j < m_; ++j)
          if (rb[j] > 0.0) {
            cells.push_back({i, j});
            amounts.push_back(rb[j]);
            ra -= rb[j];
            rb[j] = 0.0;
          }
        continue;
      }
      while (ra > 0.0) {
        int jbest = -1;
        const double* crow = c_.data() + static_cast<std::size_t>(i) * m_;
        double cbest = std::numeric_limits<double>::infinity();
        for (int j = 0; j < m_; ++j)
          if (rb[j] > 0.0 && crow[j] < cbest) {
            cbest = crow[j];
            jbest = j;
          }
        if (jbest < 0) break;  // demands exhausted by rounding
        const double x = std::min(ra, rb[jbest]);
        cells.push_back({i, jbest});
        amounts.push_back(x);
        ra -= x;
        rb[jbest] -= x;
      }
    }

    // Union-find over the allocation forest, then stitch components to the
    // component of node 0 with degenerate arcs.
    std::vector<int> root(total_);
    std::iota(root.begin(), root.end(), 0);
    const auto find = [&](int x) {
      while (root[x] != x) x = root[x] = root[root[x]];
      return x;
    };
    std::vector<std::vector<std::array<int, 2>>> adj(total_);  // (other, cell id)
    for (std::size_t e = 0; e < cells.size(); ++e) {
      const int a = cells[e][0], b = n_ + cells[e][1];
      if (find(a) == find(b)) continue;  // unreachable: allocations are acyclic
      adj[a].push_back({b, static_cast<int>(e)});
      adj[b].push_back({a, static_cast<int>(e)});
      root[find(a)] = find(b);
    }
    int anchor_sink = -1;
    for (int j = 0; j < m_ && anchor_sink < 0; ++j)
      if (find(n_ + j) == find(0)) anchor_sink = n_ + j;
    if (anchor_sink < 0) {
      anchor_sink = n_;  // node 0 is isolated; adopt the first sink
      adj[0].push_back({anchor_sink, -1});
      adj[anchor_sink].push_back({0, -1});
      root[find(anchor_sink)] = find(0);
    }
    for (int v = 0; v < total_; ++v) {
      if (find(v) == find(0)) continue;
      const int other = (v < n_) ? anchor_sink : 0;
      adj[v].push_back({other, -1});
      adj[other].push_back({v, -1});
      root[find(v)] = find(0);
    }

    // Orient the tree away from node 0.
    stack_.clear();
    stack_.push_back(0);
    parent_[0] = -1;
    std::vector<bool> seen(total_, false);
    seen[0] = true;
    while (!stack_.empty()) {
      const int v = stack_.back();
      stack_.pop_back();
      for (const auto& [o, e] : adj[v]) {
        if (seen[o]) continue;
        seen[o] = true;
        parent_[o] = v;
        flow_[o] = e >= 0 ? amounts[e] : 0.0;
        children_[v].push_back(o);
        stack_.push_back(o);
      }
    }
  }

  // Recomputes depth and potential on the subtree rooted at `node` from its
  // (already correct) parent link.
  void refresh_subtree(int node) {
    stack_.clear();
    stack_.push_back(node);
    while (!stack_.empty()) {
      const int v = stack_.back();
      stack_.pop_back();
      if (v == 0) {
        depth_[v] = 0;
        pot_[v] = 0.0;
      } else {
        const int p = parent_[v];
        depth_[v] = depth_[p] + 1;
        pot_[v] = arc_cost(v, p) - pot_[p];
      }
      for (int ch : children_[v]) stack_.push_back(ch);
    }
  }

  double arc_cost(int u, int v) const {
    return (u < n_) ? c_(u, v - n_) : c_(v, u - n_);
  }

  // Shifts potentials over the re-rooted subtree: on the cut side the source
  // potentials move by +delta and the sink potentials by -delta, which keeps
  // every internal tree equality and zeroes the entering arc's reduced cost.
  void shift_subtree(int node, double delta) {
    stack_.clear();
    stack_.push_back(node);
    while (!stack_.empty()) {
      const int v = stack_.back();
      stack_.pop_back();
      depth_[v] = (v == 0) ? 0 : depth_[parent_[v]] + 1;
      pot_[v] += (v < n_) ? delta : -delta;
      for (int ch : children_[v]) stack_.push_back(ch);
    }
  }

  // Returns true when the pivot was degenerate (zero flow change).
  bool pivot(int i, int j, bool bland) {
    const int u0 = i, v0 = n_ + j;
    const double reduced = c_(i, j) - pot_[u0] - pot_[v0];
    uside_.clear();
    vside_.clear();
    int u = u0, v = v0;
    while (depth_[u] > depth_[v]) {
      uside_.push_back(u);
      u = parent_[u];
    }
    while (depth_[v] > depth_[u]) {
      vside_.push_back(v);
      v = parent_[v];
    }
    while (u != v) {
      uside_.push_back(u);
      u = parent_[u];
      vside_.push_back(v);
      v = parent_[v];
    }
    // Arcs with alternating deltas starting at -t on both sides.
    double tmax = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < uside_.size(); k += 2)
      tmax = std::min(tmax, flow_[uside_[k]]);
    for (std::size_t k = 0; k < vside_.size(); k += 2)
      tmax = std::min(tmax, flow_[vside_[k]]);

    // Leaving arc: traverse the cycle in the direction of the entering arc
    // (apex -> u0, entering, v0 -> apex) and keep the last blocking arc; with
    // Bland's rule active, keep the blocking arc of least arc id instead.
    const auto arc_id = [&](int child) {
      const int p = parent_[child];
      return (child < n_) ? static_cast<long long>(child) * m_ + (p - n_)
                          : static_cast<long long>(p) * m_ + (child - n_);
    };
    int leave = -1;
    bool leave_on_uside = true;
    for (std::size_t k = uside_.size(); k-- > 0;) {
      if (k % 2 == 0 && flow_[uside_[k]] <= tmax &&
          (leave < 0 || !bland || arc_id(uside_[k]) < arc_id(leave))) {
        leave = uside_[k];
        leave_on_uside = true;
      }
    }
    for (std::size_t k = 0; k < vside_.size(); ++k) {
      if (k % 2 == 0 && flow_[vside_[k]] <= tmax &&
          (leave < 0 || !bland || arc_id(vside_[k]) < arc_id(leave))) {
        leave = vside_[k];
        leave_on_uside = false;
      }
    }

    for (std::size_t k = 0; k < uside_.size(); ++k)
      flow_[uside_[k]] += (k % 2 == 0) ? -tmax : tmax;
    for (std::size_t k = 0; k < vside_.size(); ++k)
      flow_[vside_[k]] += (k % 2 == 0) ? -tmax : tmax;

    // Detach the leaving arc and re-root the cut-off subtree at the entering
    // arc's endpoint inside it.
    detach(leave);
    const int w = leave_on_uside ? u0 : v0;
    const int other = leave_on_uside ? v0 : u0;
    reverse_path(w, leave);
    parent_[w] = other;
    flow_[w] = tmax;
    children_[other].push_back(w);
    shift_subtree(w, leave_on_uside ? reduced : -reduced);
    return tmax == 0.0;
  }

  void detach(int node) {
    auto& sib = children_[parent_[node]];
    sib.erase(std::find(sib.begin(), sib.end(), node));
    parent_[node] = -1;
  }

  // Reverses parent pointers along w -> ... -> top (top has parent -1 after
  // detach), moving the stored to-parent flows to the new child side.
  void reverse_path(int w, int top) {
    int child = w;
    int node = parent_[w];
    double carried = flow_[w];
    // w becomes the subtree root; its own parent/flow are set by the caller.
    while (child != top) {
      auto& sib = children_[node];
      sib.erase(std::find(sib.begin(), sib.end(), child));
      const int next = parent_[node];
      const double next_carried = flow_[node];
      parent_[node] = child;
      flow_[node] = carried;
      children_[child].push_back(node);
      child = node;
      node = next;
      carried = next_carried;
      if (child == top) break;
    }
  }

  // Tree flows are uniquely determined by the marginals; recompute them from
  // scratch to cancel the drift accumulated over pivots.
  void repair_flows() {
    std::vector<int> order(total_);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](int x, int y) { return depth_[x] > depth_[y]; });
    Vector residual(total_);
    for (int i = 0; i < n_; ++i) residual[i] = w0_[i];
    for (int j = 0; j < m_; ++j) residual[n_ + j] = -w1_[j];
    for (int v : order) {
      if (v == 0) continue;
      const double x = (v < n_) ? residual[v] : -residual[v];
      flow_[v] = std::max(0.0, x);
      residual[parent_[v]] += residual[v];
    }
  }

  TransportResult extract() {
    TransportResult result;
    result.plan.gamma = Matrix(n_, m_);
    double cost = 0.0;
    for (int v = 1; v < total_; ++v) {
      const int p = parent_[v];
      const int i = (v < n_) ? v : p;
      const int j = (v < n_) ? p - n_ : v - n_;
      result.plan.gamma(i, j) += flow_[v];
      cost += flow_[v] * c_(i, j);
    }
    result.cost = cost;
    result.potentials.f.assign(pot_.begin(), pot_.begin() + n_);
    result.potentials.g.assign(pot_.begin() + n_, pot_.end());
    // Gauge: f of the first positive-weight source is zero.
    for (int i = 0; i < n_; ++i) {
      if (w0_[i] > 0.0) {
        const double s = result.potentials.f[i];
        for (double& x : result.potentials.f) x -= s;
        for (double& x : result.potentials.g) x += s;
        break;
      }
    }
    return result;
  }

  const Matrix& c_;
  const int n_, m_, total_;
  const Vector& w0_;
  const Vector& w1_;
  std::vector<int> parent_, depth_;
  Vector flow_, pot_;
  std::vector<std::vector<int>> children_;
  std::vector<int> stack_, uside_, vside_;
};

}  // namespace

TransportResult solve_exact(const Matrix& cost, const Vector& w0, const Vector& w1) {
  const int n = static_cast<int>(w0.size());
  const int m = static_cast<int>(w1.size());
  if (n < 1 || m < 1 || cost.rows() != n || cost.cols() != m)
    throw InvalidInput("solve_exact: shape mismatch");
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j)
      if (!std::isfinite(cost(i, j)) || cost(i, j) < 0.0)
        throw InvalidInput("solve_exact: costs must be finite and nonnegative");
  double s0 = 0.0, s1 = 0.0;
  for (double w : w0) {
    if (w < 0.0) throw InvalidInput("solve_exact: negative weight");
    s0 += w;
  }
  for (double w : w1) {
    if (w < 0.0) throw InvalidInput("solve_exact: negative weight");
    s1 += w;
  }
  if (s0 <= 0.0 || s1 <= 0.0) throw InvalidInput("solve_exact: zero total mass");
  if (std::fabs(s0 - s1) > 1e-7)
    throw InvalidInput("solve_exact: marginal sums differ by more than 1e-7");
  Vector w1s = w1;
  const double scale = s0 / s1;
  for (double& w : w1s) w *= scale;
  NetworkSimplex solver(cost, w0, w1s);
  return solver.run();
}

// ---------------------------------------------------------------------------
// Entropic approximation
// ---------------------------------------------------------------------------

namespace {

double log_sum_exp(const Vector& terms) {
  double mx = -std::numeric_limits<double>::infinity();
  for (double t : terms) mx = std::max(mx, t);
  if (!std::isfinite(mx)) return mx;
  double s = 0.0;
  for (double t : terms) s += std::exp(t - mx);
  return mx + std::log(s);
}

}  // namespace

TransportResult solve_sinkhorn(const Matrix& cost, const Vector& w0, const Vector& w1,
                               double epsilon, int max_iters) {
  if (epsilon <= 0.0) throw InvalidInput("solve_sinkhorn: epsilon must be positive");
  const int n = static_cast<int>(w0.size());
  const int m = static_cast<int>(w1.size());
  if (cost.rows() != n || cost.cols() != m)
    throw InvalidInput("solve_sinkhorn: shape mismatch");

  const double neg_inf = -std::numeric_limits<double>::infinity();
  Vector lw0(n), lw1(m);
  for (int i = 0; i < n; ++i) lw0[i] = w0[i] > 0.0 ? std::log(w0[i]) : neg_inf;
  for (int j = 0; j < m; ++j) lw1[j] = w1[j] > 0.0 ? std::log(w1[j]) : neg_inf;

  Vector phi(n, 0.0), psi(m, 0.0), terms;
  bool converged = false;
  for (int it = 0; it < max_iters; ++it) {
    for (int i = 0; i < n; ++i) {
      terms.assign(m, 0.0);
      for (int j = 0; j < m; ++j) terms[j] = lw1[j] + psi[j] - cost(i, j) / epsilon;
      phi[i] = -log_sum_exp(terms);
    }
    for (int j = 0; j < m; ++j) {
      terms.assign(n, 0.0);
      for (int i = 0; i < n; ++i) terms[i] = lw0[i] + phi[i] - cost(i, j) / epsilon;
      psi[j] = -log_sum_exp(terms);
    }
    // After the psi update column sums are exact; check the rows.
    double violation = 0.0;
    for (int i = 0; i < n; ++i) {
      double row = 0.0;
      for (int j = 0; j < m; ++j)
        row += std::exp(lw0[i] + lw1[j] + phi[i] + psi[j] - cost(i, j) / epsilon);
      violation = std::max(violation, std::fabs(row - w0[i]));
    }
    if (violation < 1e-6) {
      converged = true;
      break;
    }
  }

  TransportResult result;
  result.approximate = true;
  result.converged = converged;
  result.plan.gamma = Matrix(n, m);
  double total_cost = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) {
      const double g = std::exp(lw0[i] + lw1[j] + phi[i] + psi[j] - cost(i, j) / epsilon);
      result.plan.gamma(i, j) = g;
      total_cost += g * cost(i, j);
    }
  result.cost = total_cost;
  result.potentials.f.resize(n);
  result.potentials.g.resize(m);
  for (int i = 0; i < n; ++i) result.potentials.f[i] = epsilon * phi[i];
  for (int j = 0; j < m; ++j) result.potentials.g[j] = epsilon * psi[j];
  return result;
}

}  // namespace gmmot
