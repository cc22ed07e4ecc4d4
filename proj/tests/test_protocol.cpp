#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "tfqkd/optics.hpp"
#include "tfqkd/protocol.hpp"

using namespace tfqkd;
using namespace tfqkd::protocol;

namespace {

EncodingBits bits_of(int v) {
  return {static_cast<std::uint8_t>(v & 1),
          static_cast<std::uint8_t>((v >> 1) & 1)};
}

}  // namespace

TEST_CASE("encode_frame phases") {
  const auto f = encode_frame({1, 0}, 0.1, 3);
  CHECK(f.frame_index == 3);
  CHECK(f.bins[0].phase == doctest::Approx(0.0));
  CHECK(f.bins[1].phase == doctest::Approx(optics::kPi));
  CHECK(f.bins[2].phase == doctest::Approx(0.0));
  for (const auto& b : f.bins) {
    CHECK(b.mean_photons == doctest::Approx(0.1));
  }
  CHECK_THROWS_AS(encode_frame({2, 0}, 0.1, 0), std::invalid_argument);
}

// Brute-force oracle over all 16 bit combinations under ideal optics: the
// port predicted by interference determines the sifting row, and Alice's and
// Bob's derived bits always agree.
TEST_CASE("sifting table equivalence, all 16 combinations") {
  for (int a = 0; a < 4; ++a) {
    for (int b = 0; b < 4; ++b) {
      const auto alice = bits_of(a);
      const auto bob = bits_of(b);
      const auto ports = optics::predict_pattern(
          encode_frame(alice, 0.1, 0), encode_frame(bob, 0.1, 0));
      // Bin 1 is the unmodulated reference: always constructive.
      CHECK(ports[0].constructive > ports[0].destructive);
      for (int bin = 2; bin <= 3; ++bin) {
        // Ideal optics light exactly one port per bin.
        const bool destructive_lit =
            ports[bin - 1].destructive > ports[bin - 1].constructive;
        const auto port =
            destructive_lit ? Port::kDestructive : Port::kConstructive;
        const int rel = bin == 2 ? (alice.bit1 ^ bob.bit1)
                                 : (alice.bit2 ^ bob.bit2);
        CHECK(destructive_lit == (rel == 1));

        const auto outcome =
            conclusive_outcome({{bin, port}}, /*frame_index=*/7);
        REQUIRE(outcome.has_value());
        CHECK(outcome->bin == bin);
        CHECK(outcome->port == port);
        const auto ka = derive_key_bit(*outcome, alice, Role::kAlice);
        const auto kb = derive_key_bit(*outcome, bob, Role::kBob);
        CHECK(ka == kb);
        // The announcement exposes only the relation, never the bit value.
        CHECK(announced_relation(*outcome) ==
              (rel == 0 ? Relation::kEqual : Relation::kXorOne));
      }
    }
  }
}

TEST_CASE("conclusive_outcome sifting rules") {
  SUBCASE("single key click is conclusive") {
    const auto o = conclusive_outcome({{2, Port::kConstructive}}, 1);
    REQUIRE(o.has_value());
    CHECK(o->bin == 2);
    CHECK(o->frame_index == 1);
  }
  SUBCASE("bin-1 clicks never invalidate") {
    const auto o = conclusive_outcome(
        {{1, Port::kConstructive}, {3, Port::kDestructive}}, 4);
    REQUIRE(o.has_value());
    CHECK(o->bin == 3);
    CHECK(o->port == Port::kDestructive);
  }
  SUBCASE("two distinct key clicks are inconclusive") {
    CHECK_FALSE(conclusive_outcome(
                    {{2, Port::kConstructive}, {3, Port::kConstructive}}, 0)
                    .has_value());
    CHECK_FALSE(conclusive_outcome(
                    {{2, Port::kConstructive}, {2, Port::kDestructive}}, 0)
                    .has_value());
  }
  SUBCASE("duplicate clicks on one position collapse") {
    const auto o = conclusive_outcome(
        {{3, Port::kConstructive}, {3, Port::kConstructive}}, 0);
    REQUIRE(o.has_value());
    CHECK(o->bin == 3);
  }
  SUBCASE("no key clicks at all") {
    CHECK_FALSE(conclusive_outcome({}, 0).has_value());
    CHECK_FALSE(conclusive_outcome({{1, Port::kDestructive}}, 0).has_value());
  }
}

TEST_CASE("derive_key_bit flip rule") {
  const Announcement con{0, 2, Port::kConstructive};
  const Announcement des{0, 2, Port::kDestructive};
  const EncodingBits one{1, 0};
  CHECK(derive_key_bit(con, one, Role::kAlice) == 1);
  CHECK(derive_key_bit(con, one, Role::kBob) == 1);
  CHECK(derive_key_bit(des, one, Role::kAlice) == 1);
  CHECK(derive_key_bit(des, one, Role::kBob) == 0);  // Bob flips
  CHECK_THROWS_AS(derive_key_bit({0, 1, Port::kConstructive}, one,
                                 Role::kAlice),
                  std::invalid_argument);
}

TEST_CASE("reference visibility") {
  auto v = reference_visibility(939, 61);
  REQUIRE(v.has_value());
  CHECK(*v == doctest::Approx(0.878).epsilon(1e-12));
  CHECK_FALSE(reference_visibility(0, 0).has_value());
  CHECK(*reference_visibility(10, 0) == doctest::Approx(1.0));
  CHECK(*reference_visibility(0, 10) == doctest::Approx(-1.0));
}

namespace {

std::vector<RawSiftedEvent> sample_events() {
  std::vector<RawSiftedEvent> events;
  for (std::uint64_t f : {100ULL, 1100ULL, 2100ULL}) {
    RawSiftedEvent ev;
    ev.frame_index = f;
    ev.bin = 2;
    ev.port = Port::kConstructive;
    ev.alice = {1, 0};
    ev.bob = {1, 0};  // equal bits, constructive port: error-free
    events.push_back(ev);
  }
  return events;
}

}  // namespace

TEST_CASE("flip correction by window visibility") {
  const auto events = sample_events();
  SUBCASE("healthy windows leave ports untouched") {
    const std::vector<ReferenceWindow> windows{{90, 10}, {95, 5}, {80, 20}};
    const auto recs = flip_correction(events, windows, 1000, 0.0);
    REQUIRE(recs.size() == 3);
    for (const auto& r : recs) {
      CHECK_FALSE(r.corrected);
      CHECK(r.alice_bit == r.bob_bit);
    }
    // Matches the uncorrected derivation exactly.
    const auto plain = derive_records(events);
    for (std::size_t i = 0; i < recs.size(); ++i) {
      CHECK(recs[i].alice_bit == plain[i].alice_bit);
      CHECK(recs[i].bob_bit == plain[i].bob_bit);
      CHECK(recs[i].announcement.port == plain[i].announcement.port);
    }
  }
  SUBCASE("misaligned window inverts the port interpretation") {
    // In a pi-shifted window, equal bits physically land on the destructive
    // port; uncorrected derivation disagrees, corrected derivation agrees.
    auto shifted = events;
    shifted[1].port = Port::kDestructive;
    const auto plain = derive_records(shifted);
    CHECK(plain[1].alice_bit != plain[1].bob_bit);

    const std::vector<ReferenceWindow> windows{{90, 10}, {5, 95}, {80, 20}};
    const auto recs = flip_correction(shifted, windows, 1000, 0.0);
    CHECK_FALSE(recs[0].corrected);
    CHECK(recs[1].corrected);
    CHECK(recs[1].announcement.port == Port::kConstructive);
    CHECK(recs[1].alice_bit == recs[1].bob_bit);
    CHECK_FALSE(recs[2].corrected);
  }
  SUBCASE("empty windows inherit the previous decision and are flagged") {
    const std::vector<ReferenceWindow> windows{{5, 95}, {0, 0}, {80, 20}};
    const auto recs = flip_correction(events, windows, 1000, 0.0);
    CHECK(recs[0].corrected);
    CHECK(recs[1].corrected);  // inherited from window 0
    CHECK(recs[1].window_no_data);
    CHECK_FALSE(recs[2].corrected);
    CHECK_FALSE(recs[2].window_no_data);
  }
  SUBCASE("double inversion is the identity") {
    const std::vector<ReferenceWindow> bad{{5, 95}, {5, 95}, {5, 95}};
    auto flipped = flip_correction(events, bad, 1000, 0.0);
    // Re-deriving from the flipped ports with another inversion restores the
    // original records.
    std::vector<RawSiftedEvent> twice = events;
    for (std::size_t i = 0; i < twice.size(); ++i) {
      twice[i].port = flipped[i].announcement.port;
    }
    const auto restored = flip_correction(twice, bad, 1000, 0.0);
    const auto plain = derive_records(events);
    for (std::size_t i = 0; i < restored.size(); ++i) {
      CHECK(restored[i].announcement.port == plain[i].announcement.port);
    }
  }
  CHECK_THROWS_AS(flip_correction(events, {}, 0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(flip_correction(events, {}, 10, 1.5), std::invalid_argument);
}

TEST_CASE("flip correction by raw counts") {
  const auto events = sample_events();
  const std::vector<ReferenceWindow> windows{{50, 2}, {3, 40}, {0, 0}};
  const auto recs = flip_correction_raw(events, windows, 1000, 10);
  CHECK_FALSE(recs[0].corrected);  // 50 >= 10
  CHECK(recs[1].corrected);        // 3 < 10
  CHECK(recs[2].corrected);        // empty window inherits
  CHECK(recs[2].window_no_data);
}

TEST_CASE("record serialization") {
  CHECK(record_header() ==
        "frame_index bin port alice_bit bob_bit corrected_flag");
  SiftedRecord r;
  r.announcement = {12, 3, Port::kDestructive};
  r.alice_bit = 1;
  r.bob_bit = 0;
  r.corrected = true;
  CHECK(to_line(r) == "12 3 D 1 0 1");
  r.announcement.port = Port::kConstructive;
  r.corrected = false;
  CHECK(to_line(r) == "12 3 C 1 0 0");
}
