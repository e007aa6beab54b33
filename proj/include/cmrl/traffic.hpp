#pragma once

#include <cmath>
#include <cstdint>
#include <fmt/format.h>
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cmrl/detail/text.hpp"
#include "cmrl/error.hpp"
#include "cmrl/topology.hpp"

namespace cmrl {

/// Demand volumes D(u, v) between every ordered node pair for one interval.
class TrafficMatrix {
 public:
  TrafficMatrix() = default;
  explicit TrafficMatrix(int n) : n_(n), d_(static_cast<std::size_t>(n) * n, 0.0) {}

  int node_count() const { return n_; }
  double operator()(NodeId u, NodeId v) const { return d_[index(u, v)]; }
  double& operator()(NodeId u, NodeId v) { return d_[index(u, v)]; }

  double total() const {
    double s = 0.0;
    for (double x : d_) s += x;
    return s;
  }

  TrafficMatrix scaled(double c) const {
    TrafficMatrix out = *this;
    for (double& x : out.d_) x *= c;
    return out;
  }

  bool operator==(const TrafficMatrix&) const = default;

 private:
  std::size_t index(NodeId u, NodeId v) const {
    return static_cast<std::size_t>(u) * n_ + v;
  }
  int n_ = 0;
  std::vector<double> d_;
};

struct TmSeries {
  std::vector<TrafficMatrix> snapshots;
  std::string source;
  std::string interval;

  int size() const { return static_cast<int>(snapshots.size()); }
  int node_count() const { return snapshots.empty() ? 0 : snapshots.front().node_count(); }
};

/// TMSERIES v1: `TMSERIES v1 nodes=<n> count=<k> [source=..] [interval=..]`
/// followed by k blocks of n rows of n decimals, blocks separated by blank
/// lines.
inline TmSeries load_tm_series(std::string_view text,
                               std::string_view source = "tmseries") {
  const std::string src(source);
  const auto lines = detail::split_lines(text);
  std::size_t i = 0;
  while (i < lines.size() && detail::trim(lines[i]).empty()) ++i;
  if (i == lines.size()) throw ParseError(src, 1, "empty input");

  long long n = -1, count = -1;
  TmSeries series;
  {
    const auto tok = detail::split_ws(detail::trim(lines[i]));
    if (tok.size() < 4 || tok[0] != "TMSERIES" || tok[1] != "v1")
      throw ParseError(src, static_cast<int>(i) + 1,
                       "expected header 'TMSERIES v1 nodes=<n> count=<k>'");
    for (std::size_t t = 2; t < tok.size(); ++t) {
      const auto eq = tok[t].find('=');
      if (eq == std::string_view::npos)
        throw ParseError(src, static_cast<int>(i) + 1, "bad header field");
      const auto key = tok[t].substr(0, eq);
      const auto val = tok[t].substr(eq + 1);
      if (key == "nodes") {
        if (!detail::parse_int(val, n) || n < 1)
          throw ParseError(src, static_cast<int>(i) + 1, "bad nodes=");
      } else if (key == "count") {
        if (!detail::parse_int(val, count) || count < 1)
          throw ParseError(src, static_cast<int>(i) + 1, "bad count=");
      } else if (key == "source") {
        series.source = std::string(val);
      } else if (key == "interval") {
        series.interval = std::string(val);
      }
    }
    if (n < 0 || count < 0)
      throw ParseError(src, static_cast<int>(i) + 1, "header needs nodes= and count=");
  }
  ++i;

  const int nn = static_cast<int>(n);
  TrafficMatrix current(nn);
  int row = 0;
  for (; i < lines.size(); ++i) {
    const int lineno = static_cast<int>(i) + 1;
    const auto body = detail::trim(lines[i]);
    if (body.empty()) {
      if (row != 0)
        throw ParseError(src, lineno, fmt::format("block ended after {} of {} rows", row, nn));
      continue;
    }
    if (static_cast<long long>(series.snapshots.size()) == count)
      throw ParseError(src, lineno, fmt::format("more than count={} blocks", count));
    const auto tok = detail::split_ws(body);
    if (static_cast<int>(tok.size()) != nn)
      throw ParseError(src, lineno, fmt::format("expected {} values, got {}", nn, tok.size()));
    for (int c = 0; c < nn; ++c) {
      double v = 0.0;
      if (!detail::parse_double(tok[c], v) || !std::isfinite(v))
        throw ParseError(src, lineno, "bad demand value");
      if (v < 0.0) throw ParseError(src, lineno, "negative demand");
      if (c == row && v != 0.0) throw ParseError(src, lineno, "nonzero diagonal demand");
      current(row, c) = v;
    }
    if (++row == nn) {
      series.snapshots.push_back(std::move(current));
      current = TrafficMatrix(nn);
      row = 0;
    }
  }
  if (row != 0)
    throw ParseError(src, static_cast<int>(lines.size()), "truncated final block");
  if (static_cast<long long>(series.snapshots.size()) != count)
    throw ParseError(src, static_cast<int>(lines.size()),
                     fmt::format("count={} but found {} blocks", count,
                                 series.snapshots.size()));
  return series;
}

inline std::string write_tm_series(const TmSeries& series) {
  if (series.snapshots.empty()) throw Error("cannot write an empty TM series");
  const int n = series.node_count();
  std::string out = fmt::format("TMSERIES v1 nodes={} count={}", n, series.size());
  if (!series.source.empty()) out += " source=" + series.source;
  if (!series.interval.empty()) out += " interval=" + series.interval;
  out += '\n';
  for (int k = 0; k < series.size(); ++k) {
    if (k > 0) out += '\n';
    const auto& tm = series.snapshots[k];
    for (int u = 0; u < n; ++u) {
      for (int v = 0; v < n; ++v) {
        if (v > 0) out += ' ';
        out += detail::format_g17(tm(u, v));
      }
      out += '\n';
    }
  }
  return out;
}

struct GravityParams {
  int count = 1;
  std::uint64_t seed = 1;
  double total_volume = 1.0;
  double noise_cv = 0.0;
  double weight_sigma = 1.0;  // log-std of the per-node weights
};

/// Gravity-model TMs: D(u,v) proportional to w_u * w_v with lognormal node
/// weights drawn once per series, scaled to total_volume, then multiplied
/// entrywise by mean-one lognormal noise with coefficient of variation
/// noise_cv.
inline TmSeries gen_gravity_tms(const Topology& topo, const GravityParams& p) {
  if (p.count < 1) throw Error("gravity: count must be >= 1");
  if (!(p.total_volume > 0.0)) throw Error("gravity: total_volume must be > 0");
  if (!(p.noise_cv >= 0.0)) throw Error("gravity: noise_cv must be >= 0");
  const int n = topo.node_count();
  std::mt19937_64 rng(p.seed);
  std::lognormal_distribution<double> weight_dist(0.0, p.weight_sigma);
  std::vector<double> w(n);
  for (double& x : w) x = weight_dist(rng);

  TrafficMatrix base(n);
  double sum = 0.0;
  for (int u = 0; u < n; ++u)
    for (int v = 0; v < n; ++v)
      if (u != v) sum += base(u, v) = w[u] * w[v];
  if (sum > 0.0)
    for (int u = 0; u < n; ++u)
      for (int v = 0; v < n; ++v) base(u, v) *= p.total_volume / sum;

  const double s2 = std::log1p(p.noise_cv * p.noise_cv);
  std::lognormal_distribution<double> noise(-0.5 * s2, std::sqrt(s2));
  TmSeries series;
  series.source = "gravity";
  series.snapshots.reserve(p.count);
  for (int k = 0; k < p.count; ++k) {
    TrafficMatrix tm = base;
    if (p.noise_cv > 0.0)
      for (int u = 0; u < n; ++u)
        for (int v = 0; v < n; ++v)
          if (u != v) tm(u, v) = std::max(0.0, tm(u, v) * noise(rng));
    series.snapshots.push_back(std::move(tm));
  }
  return series;
}

/// Chronological split: the first floor(count * fraction) snapshots train.
inline std::pair<TmSeries, TmSeries> split_train_test(const TmSeries& series,
                                                      double train_fraction = 0.8) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw Error("train_fraction must lie in (0, 1)");
  const int total = series.size();
  const int n_train = static_cast<int>(std::floor(total * train_fraction + 1e-9));
  if (n_train < 1 || n_train >= total)
    throw Error(fmt::format("split of {} snapshots at {} leaves a side empty",
                            total, train_fraction));
  TmSeries train{{}, series.source, series.interval};
  TmSeries test{{}, series.source, series.interval};
  train.snapshots.assign(series.snapshots.begin(), series.snapshots.begin() + n_train);
  test.snapshots.assign(series.snapshots.begin() + n_train, series.snapshots.end());
  return {std::move(train), std::move(test)};
}

}  // namespace cmrl
