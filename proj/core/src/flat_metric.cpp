#include "kineq/flat_metric.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include "kineq/errors.hpp"

namespace kineq {

namespace {

constexpr double kWeightTolerance = 1e-15;

struct SupportPoint {
  Point x;
  double c;  // net weight of mu - nu
};

// Union support with net signed weights; coincident atoms merged by the
// DiscreteMeasure canonical form.
std::vector<SupportPoint> union_support(const DiscreteMeasure& mu,
                                        const DiscreteMeasure& nu) {
  std::vector<Point> atoms = mu.atoms();
  std::vector<double> weights = mu.weights();
  atoms.insert(atoms.end(), nu.atoms().begin(), nu.atoms().end());
  for (double w : nu.weights()) weights.push_back(-w);
  DiscreteMeasure diff(std::move(atoms), std::move(weights), MassKind::Signed);
  std::vector<SupportPoint> pts;
  pts.reserve(diff.size());
  for (std::size_t i = 0; i < diff.size(); ++i) {
    pts.push_back({diff.atoms()[i], diff.weights()[i]});
  }
  return pts;
}

// ----------------------------------------------------------------------
// 1-d: exact DP over the sorted support. g_i(v) = best objective over
// f_0..f_i with f_i = v is concave piecewise-linear; the sliding-window
// max over |u - v| <= gap keeps it concave, and adding c*v is linear.
// ----------------------------------------------------------------------

struct Pwl {
  std::vector<double> v;  // strictly increasing, spans [-1, 1]
  std::vector<double> y;

  double eval(double at) const {
    if (at <= v.front()) return y.front();
    if (at >= v.back()) return y.back();
    auto it = std::upper_bound(v.begin(), v.end(), at);
    const std::size_t hi = static_cast<std::size_t>(it - v.begin());
    const std::size_t lo = hi - 1;
    const double t = (at - v[lo]) / (v[hi] - v[lo]);
    return y[lo] + t * (y[hi] - y[lo]);
  }

  double max_value() const {
    double m = y.front();
    for (double val : y) m = std::max(m, val);
    return m;
  }

  void push(double vv, double yy) {
    if (!v.empty() && vv - v.back() < 1e-15) {
      y.back() = std::max(y.back(), yy);
      return;
    }
    v.push_back(vv);
    y.push_back(yy);
  }
};

Pwl window_max(const Pwl& g, double gap) {
  std::size_t first_peak = 0, last_peak = 0;
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < g.v.size(); ++k) {
    if (g.y[k] > best) {
      best = g.y[k];
      first_peak = last_peak = k;
    } else if (g.y[k] == best) {
      last_peak = k;
    }
  }

  // Raw result on [-1-gap, 1+gap]: rising branch shifted left, plateau of
  // width 2*gap, falling branch shifted right; then clamp to [-1, 1].
  Pwl raw;
  for (std::size_t k = 0; k <= first_peak; ++k) raw.push(g.v[k] - gap, g.y[k]);
  raw.push(g.v[first_peak] - gap, best);
  raw.push(g.v[last_peak] + gap, best);
  for (std::size_t k = last_peak; k < g.v.size(); ++k) raw.push(g.v[k] + gap, g.y[k]);

  Pwl out;
  out.push(-1.0, raw.eval(-1.0));
  for (std::size_t k = 0; k < raw.v.size(); ++k) {
    if (raw.v[k] > -1.0 + 1e-15 && raw.v[k] < 1.0 - 1e-15) {
      out.push(raw.v[k], raw.y[k]);
    }
  }
  out.push(1.0, raw.eval(1.0));
  return out;
}

double flat_distance_1d(const std::vector<SupportPoint>& pts) {
  Pwl g;
  g.push(-1.0, -pts[0].c);
  g.push(1.0, pts[0].c);
  for (std::size_t i = 1; i < pts.size(); ++i) {
    const double gap = pts[i].x[0] - pts[i - 1].x[0];
    g = window_max(g, gap);
    for (std::size_t k = 0; k < g.v.size(); ++k) g.y[k] += pts[i].c * g.v[k];
  }
  return g.max_value();
}

// ----------------------------------------------------------------------
// General dimension: transportation dual. Each unit of surplus either
// moves to a deficit atom at Euclidean cost or is disposed of at cost 1;
// each unfilled deficit unit is created at cost 1. Solved as min-cost
// max-flow with a free transshipment hub absorbing the slack.
// ----------------------------------------------------------------------

struct FlowNetwork {
  struct Arc {
    int to;
    double cap;
    double cost;
    int rev;
  };
  std::vector<std::vector<Arc>> adj;

  explicit FlowNetwork(int n) : adj(static_cast<std::size_t>(n)) {}

  void add(int from, int to, double cap, double cost) {
    adj[static_cast<std::size_t>(from)].push_back(
        {to, cap, cost, static_cast<int>(adj[static_cast<std::size_t>(to)].size())});
    adj[static_cast<std::size_t>(to)].push_back(
        {from, 0.0, -cost, static_cast<int>(adj[static_cast<std::size_t>(from)].size()) - 1});
  }
};

std::string dump_instance(const std::vector<SupportPoint>& pts) {
  std::ostringstream os;
  os.precision(17);
  for (const auto& p : pts) {
    os << " [";
    for (std::size_t k = 0; k < p.x.size(); ++k) os << (k ? "," : "") << p.x[k];
    os << "]:" << p.c;
  }
  return os.str();
}

double flat_distance_flow(const std::vector<SupportPoint>& pts) {
  std::vector<int> surplus, deficit;
  double total_pos = 0.0, total_neg = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (pts[i].c > kWeightTolerance) {
      surplus.push_back(static_cast<int>(i));
      total_pos += pts[i].c;
    } else if (pts[i].c < -kWeightTolerance) {
      deficit.push_back(static_cast<int>(i));
      total_neg += -pts[i].c;
    }
  }
  if (surplus.empty() && deficit.empty()) return 0.0;

  // Node ids: 0 = source, 1 = sink, 2 = hub, 3.. = participating atoms.
  const int n_nodes = 3 + static_cast<int>(surplus.size() + deficit.size());
  FlowNetwork net(n_nodes);
  std::vector<int> node_of(pts.size(), -1);
  int next = 3;
  for (int i : surplus) node_of[static_cast<std::size_t>(i)] = next++;
  for (int j : deficit) node_of[static_cast<std::size_t>(j)] = next++;

  const double inf = std::numeric_limits<double>::infinity();
  for (int i : surplus) {
    const int u = node_of[static_cast<std::size_t>(i)];
    net.add(0, u, pts[static_cast<std::size_t>(i)].c, 0.0);
    net.add(u, 2, inf, 1.0);  // disposal
    for (int j : deficit) {
      net.add(u, node_of[static_cast<std::size_t>(j)], inf,
              euclidean_distance(pts[static_cast<std::size_t>(i)].x,
                                 pts[static_cast<std::size_t>(j)].x));
    }
  }
  for (int j : deficit) {
    const int v = node_of[static_cast<std::size_t>(j)];
    net.add(v, 1, -pts[static_cast<std::size_t>(j)].c, 0.0);
    net.add(2, v, inf, 1.0);  // creation
  }
  // Creation budget in, disposal exit out: sized so max-flow must saturate
  // every supply and demand arc, while transported units free up exactly
  // matching slack through the hub.
  net.add(0, 2, total_neg, 0.0);
  net.add(2, 1, total_pos, 0.0);

  const double required = total_pos + total_neg;
  double routed = 0.0, cost = 0.0;
  const int guard = 16 * (n_nodes + 4) * (n_nodes + 4);
  int rounds = 0;
  while (routed < required - 1e-13) {
    if (++rounds > guard) {
      throw NumericError("flat_distance flow solver failed to converge on" +
                         dump_instance(pts));
    }
    // Bellman-Ford on the residual network.
    std::vector<double> dist(static_cast<std::size_t>(n_nodes), inf);
    std::vector<int> prev_node(static_cast<std::size_t>(n_nodes), -1);
    std::vector<int> prev_arc(static_cast<std::size_t>(n_nodes), -1);
    dist[0] = 0.0;
    for (int pass = 0; pass < n_nodes; ++pass) {
      bool changed = false;
      for (int u = 0; u < n_nodes; ++u) {
        if (!std::isfinite(dist[static_cast<std::size_t>(u)])) continue;
        const auto& arcs = net.adj[static_cast<std::size_t>(u)];
        for (std::size_t a = 0; a < arcs.size(); ++a) {
          if (arcs[a].cap <= 1e-15) continue;
          const double nd = dist[static_cast<std::size_t>(u)] + arcs[a].cost;
          if (nd < dist[static_cast<std::size_t>(arcs[a].to)] - 1e-15) {
            dist[static_cast<std::size_t>(arcs[a].to)] = nd;
            prev_node[static_cast<std::size_t>(arcs[a].to)] = u;
            prev_arc[static_cast<std::size_t>(arcs[a].to)] = static_cast<int>(a);
            changed = true;
          }
        }
      }
      if (!changed) break;
    }
    if (!std::isfinite(dist[1])) {
      throw NumericError("flat_distance flow network disconnected on" +
                         dump_instance(pts));
    }
    double push = required - routed;
    for (int v = 1; v != 0; v = prev_node[static_cast<std::size_t>(v)]) {
      const int u = prev_node[static_cast<std::size_t>(v)];
      const auto& arc = net.adj[static_cast<std::size_t>(u)]
                            [static_cast<std::size_t>(prev_arc[static_cast<std::size_t>(v)])];
      push = std::min(push, arc.cap);
    }
    for (int v = 1; v != 0; v = prev_node[static_cast<std::size_t>(v)]) {
      const int u = prev_node[static_cast<std::size_t>(v)];
      auto& arc = net.adj[static_cast<std::size_t>(u)]
                      [static_cast<std::size_t>(prev_arc[static_cast<std::size_t>(v)])];
      arc.cap -= push;
      net.adj[static_cast<std::size_t>(arc.to)][static_cast<std::size_t>(arc.rev)].cap += push;
      cost += push * arc.cost;
    }
    routed += push;
  }
  return cost;
}

}  // namespace

double flat_distance(const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
  if (mu.dim() != nu.dim()) {
    throw StructuralError("flat_distance: dimension mismatch");
  }
  const auto pts = union_support(mu, nu);
  bool trivial = true;
  for (const auto& p : pts) {
    if (std::abs(p.c) > kWeightTolerance) {
      trivial = false;
      break;
    }
  }
  if (trivial) return 0.0;
  const double d =
      mu.dim() == 1 ? flat_distance_1d(pts) : flat_distance_flow(pts);
  return std::max(d, 0.0);
}

double path_distance(const MeasurePath& xi, const MeasurePath& eta) {
  if (xi.nodes() != eta.nodes() ||
      std::abs(xi.horizon() - eta.horizon()) > MeasurePath::kGridTolerance) {
    throw StructuralError("path_distance: grid mismatch");
  }
  double best = 0.0;
  for (std::size_t k = 0; k < xi.nodes(); ++k) {
    best = std::max(best, flat_distance(xi.at(k), eta.at(k)));
  }
  return best;
}

}  // namespace kineq
