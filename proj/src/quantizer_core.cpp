#include "cilayer/quantizer_core.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

#include "cilayer/error.hpp"

namespace cilayer {

void ScalarQuantizer::validate() const {
  if (boundaries.size() < 2 || reps.size() + 1 != boundaries.size() || probs.size() != reps.size())
    fail(ErrorCode::Config, "quantizer needs N+1 boundaries, N reps and N probs");
  for (std::size_t i = 0; i + 1 < boundaries.size(); ++i) {
    if (!(boundaries[i] < boundaries[i + 1]))
      fail(ErrorCode::Config, "quantizer boundaries must be strictly increasing");
    const double slack = 1e-9 * std::max(1.0, std::abs(reps[i]));
    if (reps[i] < boundaries[i] - slack || reps[i] > boundaries[i + 1] + slack)
      fail(ErrorCode::Config, "quantizer rep lies outside its cell");
    if (!(probs[i] >= 0.0)) fail(ErrorCode::Config, "quantizer probabilities must be nonnegative");
  }
}

ScalarQuantizer quantizer_from_boundaries(const ScalarSource& src, std::vector<double> boundaries) {
  ScalarQuantizer q;
  q.boundaries = std::move(boundaries);
  const std::size_t n = q.boundaries.size() - 1;
  q.reps.resize(n);
  q.probs.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double lo = q.boundaries[i], hi = q.boundaries[i + 1];
    q.probs[i] = src.interval_probability(lo, hi);
    if (q.probs[i] > 0.0) {
      q.reps[i] = src.interval_centroid(lo, hi);
    } else {
      q.reps[i] = std::isfinite(lo) && std::isfinite(hi) ? 0.5 * (lo + hi)
                  : std::isfinite(lo)                    ? lo
                                                         : hi;
    }
  }
  return q;
}

double CostWeights::common(const std::string& label) const {
  auto it = lambda_common.find(label);
  return it == lambda_common.end() ? 0.0 : it->second;
}

double CostWeights::packet_weight(const PacketTopology& topo, std::size_t packet) const {
  if (!topo.is_common(packet)) return lambda_private.at(packet);
  double w = common(topo.label(packet));
  for (auto l : topo.span(packet)) w += lambda_private.at(l);
  return w;
}

void CostWeights::validate(const PacketTopology& topo) const {
  const std::size_t L = topo.decoders();
  if (a.size() != L || lambda_private.size() != L)
    fail(ErrorCode::Config, "cost weights must list one a and one lambda per decoder");
  bool any_positive = false;
  for (std::size_t l = 0; l < L; ++l) {
    if (!(a[l] >= 0.0) || !(lambda_private[l] >= 0.0) || !std::isfinite(a[l]) ||
        !std::isfinite(lambda_private[l]))
      fail(ErrorCode::Config, "distortion weights and private lambdas must be finite and >= 0");
    any_positive = any_positive || a[l] > 0.0;
  }
  if (!any_positive) fail(ErrorCode::Config, "at least one distortion weight must be positive");
  for (const auto& [label, value] : lambda_common) {
    const std::size_t p = topo.find(label);
    if (p == PacketTopology::npos || !topo.is_common(p))
      fail(ErrorCode::Config, "unknown common packet label '" + label + "'");
    if (!std::isfinite(value)) fail(ErrorCode::Config, "common lambda must be finite");
  }
  for (std::size_t p = L; p < topo.packet_count(); ++p)
    if (packet_weight(topo, p) < -1e-12)
      fail(ErrorCode::Config, "effective price of common packet '" + topo.label(p) + "' is negative");
}

CostWeights CostWeights::with_sharing(std::vector<double> lambdas, double theta) {
  CostWeights w;
  const std::size_t L = lambdas.size();
  w.a.assign(L, 1.0);
  const auto topo = PacketTopology::nested_chain(L);
  for (std::size_t p = L; p < topo.packet_count(); ++p) {
    double sum = 0.0;
    for (auto l : topo.span(p)) sum += lambdas[l];
    w.lambda_common[topo.label(p)] = -theta * sum;
  }
  w.lambda_private = std::move(lambdas);
  return w;
}

double CostWeights::sharing() const {
  if (lambda_common.empty()) return 0.0;
  const auto topo = PacketTopology::nested_chain(decoders());
  const std::size_t p = decoders();
  double sum = 0.0;
  for (auto l : topo.span(p)) sum += lambda_private[l];
  return sum > 0.0 ? -common(topo.label(p)) / sum : 0.0;
}

double RDRecord::rate(const std::string& label) const {
  for (std::size_t i = 0; i < packet_labels.size(); ++i)
    if (packet_labels[i] == label) return packet_rates[i];
  fail(ErrorCode::Config, "record has no packet '" + label + "'");
}

double RDRecord::common_rate() const {
  const std::size_t L = receive_rates.size();
  return packet_rates.size() > L ? packet_rates[L] : 0.0;
}

double RDRecord::transmit_reduction() const {
  const double ns = std::accumulate(receive_rates.begin(), receive_rates.end(), 0.0);
  return ns > 0.0 ? (ns - transmit_rate) / ns : 0.0;
}

RDRecord make_record(const PacketTopology& topo, const std::vector<double>& packet_rates,
                     const std::vector<double>& distortion, const CostWeights& w) {
  const std::size_t L = topo.decoders();
  if (packet_rates.size() != topo.packet_count() || distortion.size() != L)
    fail(ErrorCode::Config, "record sizes do not match the topology");
  RDRecord r;
  r.packet_labels = topo.labels();
  r.packet_rates = packet_rates;
  r.distortion = distortion;
  r.receive_rates.assign(L, 0.0);
  for (std::size_t l = 0; l < L; ++l)
    for (auto p : topo.routing(l)) r.receive_rates[l] += packet_rates[p];
  r.transmit_rate = std::accumulate(packet_rates.begin(), packet_rates.end(), 0.0);
  r.cost = 0.0;
  for (std::size_t l = 0; l < L; ++l) {
    r.distortion_db.push_back(distortion[l] > 0.0 ? to_db(distortion[l])
                                                  : -std::numeric_limits<double>::infinity());
    r.cost += w.a[l] * distortion[l];
  }
  for (std::size_t p = 0; p < topo.packet_count(); ++p)
    r.cost += w.packet_weight(topo, p) * packet_rates[p];
  return r;
}

ScalarEvaluation evaluate_scalar(const ScalarQuantizer& q, const ScalarSource& src) {
  q.validate();
  if (q.lo() > src.support_lo() || q.hi() < src.support_hi()) {
    std::ostringstream os;
    os << "quantizer range [" << q.lo() << ", " << q.hi() << "] does not cover the support of "
       << src.describe();
    fail(ErrorCode::Coverage, os.str());
  }
  ScalarEvaluation e;
  std::vector<double> p(q.cells());
  for (std::size_t i = 0; i < q.cells(); ++i) {
    p[i] = src.interval_probability(q.boundaries[i], q.boundaries[i + 1]);
    e.distortion += src.interval_mse(q.boundaries[i], q.boundaries[i + 1], q.reps[i]);
  }
  e.rate = entropy_bits(p);
  return e;
}

double entropy_bits(std::span<const double> probs) {
  double h = 0.0;
  for (double p : probs) h += plogp(p);
  return h;
}

double to_db(double mse) {
  if (!(mse > 0.0)) fail(ErrorCode::Domain, "dB conversion needs a positive distortion");
  return 10.0 * std::log10(mse);
}

}  // namespace cilayer
