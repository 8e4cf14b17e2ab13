#include <cmath>

#include "cilayer/error.hpp"
#include "cilayer/quantizer_core.hpp"
#include "cilayer/topology.hpp"
#include "doctest.h"

using namespace cilayer;

TEST_CASE("nested chain topology") {
  const auto t2 = PacketTopology::nested_chain(2);
  CHECK(t2.labels() == std::vector<std::string>{"1", "2", "12"});
  CHECK(t2.routing(0) == std::vector<std::size_t>{0, 2});
  const auto t3 = PacketTopology::nested_chain(3);
  CHECK(t3.labels() == std::vector<std::string>{"1", "2", "3", "123", "23"});
  CHECK(t3.span(t3.find("23")) == std::vector<std::size_t>{1, 2});
  CHECK(t3.routing(0) == std::vector<std::size_t>{0, 3});
  CHECK(t3.routing(2) == std::vector<std::size_t>{2, 3, 4});
  CHECK(t3.find("13") == PacketTopology::npos);
}

TEST_CASE("entropy and dB helpers") {
  const std::vector<double> p{0.5, 0.25, 0.25, 0.0};
  CHECK(entropy_bits(p) == doctest::Approx(1.5));
  CHECK(to_db(0.1) == doctest::Approx(-10.0));
  CHECK(plogp(0.0) == 0.0);
}

TEST_CASE("sharing weights give the effective packet price") {
  const auto w = CostWeights::with_sharing({0.2, 0.6}, 0.25);
  const auto topo = PacketTopology::nested_chain(2);
  CHECK(w.common("12") == doctest::Approx(-0.25 * 0.8));
  CHECK(w.packet_weight(topo, 2) == doctest::Approx(0.75 * 0.8));
  CHECK(w.packet_weight(topo, 0) == doctest::Approx(0.2));
  CHECK(w.sharing() == doctest::Approx(0.25));
  CHECK_NOTHROW(w.validate(topo));
  // An effective common price below zero is rejected.
  CHECK_THROWS_AS(CostWeights::with_sharing({0.2, 0.6}, 1.5).validate(topo), Error);
  const auto w3 = CostWeights::with_sharing({1.0, 1.0, 2.0}, 0.5);
  const auto t3 = PacketTopology::nested_chain(3);
  CHECK(w3.common("123") == doctest::Approx(-2.0));
  CHECK(w3.common("23") == doctest::Approx(-1.5));
}

TEST_CASE("record bookkeeping") {
  const auto topo = PacketTopology::nested_chain(2);
  const auto w = CostWeights::with_sharing({0.1, 0.2}, 0.5);
  const auto r = make_record(topo, {1.0, std::log2(3.0), 1.0}, {0.1875, 1.0 / 12.0}, w);
  CHECK(r.receive_rates[0] == doctest::Approx(2.0));
  CHECK(r.receive_rates[1] == doctest::Approx(1.0 + std::log2(3.0)));
  CHECK(r.transmit_rate == doctest::Approx(2.0 + std::log2(3.0)));
  CHECK(r.common_rate() == doctest::Approx(1.0));
  CHECK(r.transmit_reduction() == doctest::Approx(1.0 / (3.0 + std::log2(3.0))));
  const double j = 0.1875 + 1.0 / 12.0 + 0.1 * 1.0 + 0.2 * std::log2(3.0) + 0.15 * 1.0;
  CHECK(r.cost == doctest::Approx(j));
  CHECK(r.distortion_db[0] == doctest::Approx(10.0 * std::log10(0.1875)));
}

TEST_CASE("quantizer from boundaries") {
  const auto src = ScalarSource::uniform(0.0, 4.0);
  const auto q = quantizer_from_boundaries(src, {0.0, 1.0, 4.0});
  CHECK(q.reps == std::vector<double>{0.5, 2.5});
  CHECK(q.probs[1] == doctest::Approx(0.75));
  const auto e = evaluate_scalar(q, src);
  CHECK(e.distortion == doctest::Approx(0.25 / 12.0 + 0.75 * 9.0 / 12.0));
  CHECK(e.rate == doctest::Approx(entropy_bits(q.probs)));
  ScalarQuantizer bad = q;
  bad.boundaries = {0.0, 2.0, 1.0};
  CHECK_THROWS_AS(bad.validate(), Error);
}
