#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "aidps/ips.hpp"

using namespace aidps;
using namespace aidps::ips;

namespace {

// one honest exchange over a pair built with make_session_pair
struct HonestRun {
    BuoyContext buoy;
    NodeContext node;
    SessionKey buoy_key;

    static HonestRun run(std::uint64_t seed) {
        auto [buoy, node] = make_session_pair(seed);
        buoy.registry[7] = {-80.0, -40.0};
        const double now = 1000.0;
        auto m1 = buoy_initiate(buoy, 7, -60.0, now);
        REQUIRE(m1.ok());
        auto m2 = node_handle_m1(node, *m1.value, -60.0, now + 1.0);
        REQUIRE(m2.ok());
        auto key = buoy_handle_m2(buoy, 7, *m2.value, now + 2.0);
        REQUIRE(key.ok());
        node_install_pending(node);
        return {std::move(buoy), std::move(node), *key.value};
    }
};

}  // namespace

TEST_CASE("wire fields round trip and reject truncation") {
    Bytes buf;
    put_field(buf, {1, 2, 3});
    put_field(buf, {});
    put_field(buf, {9});
    std::size_t pos = 0;
    CHECK(get_field(buf, pos) == Bytes{1, 2, 3});
    CHECK(get_field(buf, pos) == Bytes{});
    CHECK(get_field(buf, pos) == Bytes{9});
    CHECK(pos == buf.size());

    Bytes cut(buf.begin(), buf.begin() + 5);  // field body truncated: 4 + 3 > 5
    pos = 0;
    CHECK_THROWS_AS(get_field(cut, pos), data_error);
    Bytes short_prefix = {1, 2};  // length prefix itself truncated
    pos = 0;
    CHECK_THROWS_AS(get_field(short_prefix, pos), data_error);

    CHECK(field_double(double_field(3.25)) == doctest::Approx(3.25));
    CHECK_THROWS_AS(field_double({1, 2, 3}), data_error);
}

TEST_CASE("box encryption round trips and authenticates") {
    rng_t rng(3);
    auto a = Identity::from_seed(rng);
    auto b = Identity::from_seed(rng);
    auto mallory = Identity::from_seed(rng);
    const Bytes msg = {'h', 'e', 'l', 'l', 'o'};
    const Bytes wire = box_encrypt(msg, b.box_pk, a.box_sk, rng);

    const auto pt = box_decrypt(wire, a.box_pk, b.box_sk);
    REQUIRE(pt.has_value());
    CHECK(*pt == msg);

    CHECK(!box_decrypt(wire, mallory.box_pk, b.box_sk).has_value());  // wrong sender key
    Bytes tampered = wire;
    tampered.back() ^= 0x01;
    CHECK(!box_decrypt(tampered, a.box_pk, b.box_sk).has_value());
    CHECK(!box_decrypt({1, 2, 3}, a.box_pk, b.box_sk).has_value());
}

TEST_CASE("detached signatures verify and reject tampering") {
    rng_t rng(5);
    auto id = Identity::from_seed(rng);
    const Bytes msg = {'m', 's', 'g'};
    const Bytes sig = sign_detached(msg, id.sign_sk);
    CHECK(verify_detached(msg, sig, id.sign_pk));
    Bytes bad = sig;
    bad[0] ^= 0xff;
    CHECK(!verify_detached(msg, bad, id.sign_pk));
    CHECK(!verify_detached({'x'}, sig, id.sign_pk));
    CHECK(!verify_detached(msg, {1, 2}, id.sign_pk));
}

TEST_CASE("session key derivation is deterministic and input-sensitive") {
    rng_t rng(7);
    const Bytes p1 = random_bytes(rng, kNonceLen);
    const Bytes p2 = random_bytes(rng, kNonceLen);
    const Bytes eps = random_bytes(rng, kNonceLen);
    const auto k1 = derive_session_key(p1, p2, eps);
    const auto k2 = derive_session_key(p1, p2, eps);
    CHECK(k1 == k2);
    CHECK(!k1.key.empty());
    Bytes p1b = p1;
    p1b[0] ^= 1;
    CHECK(!(derive_session_key(p1b, p2, eps) == k1));
    CHECK(!(derive_session_key(p2, p1, eps) == k1));  // order matters
    CHECK_THROWS_AS(derive_session_key(Bytes(8, 0), p2, eps), data_error);
}

TEST_CASE("rssi gate is fail-closed and inclusive") {
    RssiRegistry reg;
    reg[3] = {-70.0, -50.0};
    CHECK(rssi_within_range(reg, 3, -60.0));
    CHECK(rssi_within_range(reg, 3, -70.0));
    CHECK(rssi_within_range(reg, 3, -50.0));
    CHECK(!rssi_within_range(reg, 3, -49.9));
    CHECK(!rssi_within_range(reg, 3, -70.1));
    CHECK(!rssi_within_range(reg, 4, -60.0));  // unregistered node
    rng_t rng(1);
    // log-distance model: farther is weaker
    CHECK(synth_rssi(100.0, rng, 0.0) < synth_rssi(10.0, rng, 0.0));
}

TEST_CASE("honest exchange yields the same key on both sides") {
    for (std::uint64_t seed : {1ULL, 2ULL, 42ULL, 1234ULL}) {
        auto run = HonestRun::run(seed);
        REQUIRE(run.node.session_key.has_value());
        CHECK(run.buoy_key == *run.node.session_key);
        CHECK(run.buoy.sk_old == run.buoy_key.key);  // buoy rotates the stored key
        CHECK(run.node.sk_old == run.buoy_key.key);
        CHECK(run.buoy.pending.empty());
        CHECK(run.buoy.isolated.empty());
        CHECK(!run.node.pending_key.has_value());
    }
}

TEST_CASE("successive exchanges produce fresh keys") {
    auto run = HonestRun::run(9);
    const double now = 2000.0;
    auto m1 = buoy_initiate(run.buoy, 7, -60.0, now);
    REQUIRE(m1.ok());
    auto m2 = node_handle_m1(run.node, *m1.value, -60.0, now);
    REQUIRE(m2.ok());
    auto key = buoy_handle_m2(run.buoy, 7, *m2.value, now);
    REQUIRE(key.ok());
    CHECK(!(*key.value == run.buoy_key));
}

TEST_CASE("out-of-range rssi at initiation isolates the node") {
    auto [buoy, node] = make_session_pair(11);
    buoy.registry[7] = {-80.0, -40.0};
    auto r = buoy_initiate(buoy, 7, -20.0, 1000.0);
    CHECK(!r.ok());
    CHECK(buoy.isolated.count(7) == 1);
    CHECK(buoy.pending.empty());
    CHECK(!buoy.log.empty());
}

TEST_CASE("duplicate initiation while pending is refused") {
    auto [buoy, node] = make_session_pair(13);
    buoy.registry[7] = {-80.0, -40.0};
    REQUIRE(buoy_initiate(buoy, 7, -60.0, 1000.0).ok());
    auto dup = buoy_initiate(buoy, 7, -60.0, 1001.0);
    CHECK(!dup.ok());
    CHECK(buoy.isolated.empty());  // a duplicate is not an attack verdict
}

TEST_CASE("node rejects a stale T1") {
    auto [buoy, node] = make_session_pair(17);
    buoy.registry[7] = {-80.0, -40.0};
    auto m1 = buoy_initiate(buoy, 7, -60.0, 1000.0);
    REQUIRE(m1.ok());
    auto m2 = node_handle_m1(node, *m1.value, -60.0, 1000.0 + node.delta_t + 1.0);
    CHECK(!m2.ok());
    CHECK(!node.pending_key.has_value());
}

TEST_CASE("node rejects a tampered M1") {
    auto [buoy, node] = make_session_pair(19);
    buoy.registry[7] = {-80.0, -40.0};
    auto m1 = buoy_initiate(buoy, 7, -60.0, 1000.0);
    REQUIRE(m1.ok());
    M1 bad = *m1.value;
    bad.ciphertext[bad.ciphertext.size() / 2] ^= 0x40;
    auto m2 = node_handle_m1(node, bad, -60.0, 1001.0);
    CHECK(!m2.ok());
    CHECK(!node.pending_key.has_value());
}

TEST_CASE("buoy aborts on a stale T2") {
    auto [buoy, node] = make_session_pair(23);
    buoy.registry[7] = {-80.0, -40.0};
    auto m1 = buoy_initiate(buoy, 7, -60.0, 1000.0);
    REQUIRE(m1.ok());
    auto m2 = node_handle_m1(node, *m1.value, -60.0, 1001.0);
    REQUIRE(m2.ok());
    auto key = buoy_handle_m2(buoy, 7, *m2.value, 1001.0 + buoy.delta_t + 1.0);
    CHECK(!key.ok());
    CHECK(buoy.isolated.count(7) == 1);
    CHECK(buoy.pending.empty());
    node_abort_pending(node);
    CHECK(!node.session_key.has_value());
}

TEST_CASE("buoy aborts on a tampered M2 ciphertext or signature") {
    for (int variant : {0, 1}) {
        auto [buoy, node] = make_session_pair(29 + variant);
        buoy.registry[7] = {-80.0, -40.0};
        auto m1 = buoy_initiate(buoy, 7, -60.0, 1000.0);
        REQUIRE(m1.ok());
        auto m2 = node_handle_m1(node, *m1.value, -60.0, 1001.0);
        REQUIRE(m2.ok());
        M2 bad = *m2.value;
        if (variant == 0) bad.ciphertext[8] ^= 0x01;
        else bad.signature[8] ^= 0x01;
        auto key = buoy_handle_m2(buoy, 7, bad, 1002.0);
        CHECK(!key.ok());
        CHECK(buoy.isolated.count(7) == 1);
    }
}

TEST_CASE("buoy aborts when M2 reports an out-of-range rssi") {
    auto [buoy, node] = make_session_pair(31);
    buoy.registry[7] = {-80.0, -40.0};
    auto m1 = buoy_initiate(buoy, 7, -60.0, 1000.0);
    REQUIRE(m1.ok());
    // node reports a reading the registry does not allow
    auto m2 = node_handle_m1(node, *m1.value, -10.0, 1001.0);
    REQUIRE(m2.ok());
    auto key = buoy_handle_m2(buoy, 7, *m2.value, 1002.0);
    CHECK(!key.ok());
    CHECK(buoy.isolated.count(7) == 1);
}

TEST_CASE("a replayed M2 is rejected without a fresh abort") {
    auto run = HonestRun::run(37);
    // capture a valid M2 from a new exchange, complete it, then replay
    auto m1 = buoy_initiate(run.buoy, 7, -60.0, 2000.0);
    REQUIRE(m1.ok());
    auto m2 = node_handle_m1(run.node, *m1.value, -60.0, 2001.0);
    REQUIRE(m2.ok());
    REQUIRE(buoy_handle_m2(run.buoy, 7, *m2.value, 2002.0).ok());
    const auto isolated_before = run.buoy.isolated;
    auto replay = buoy_handle_m2(run.buoy, 7, *m2.value, 2003.0);
    CHECK(!replay.ok());
    CHECK(run.buoy.isolated == isolated_before);  // replay of a closed exchange: no pending state
}

TEST_CASE("node completion hooks") {
    auto [buoy, node] = make_session_pair(41);
    CHECK_THROWS_AS(node_install_pending(node), model_error);
    node.pending_key = SessionKey{Bytes(32, 7)};
    node_abort_pending(node);
    CHECK(!node.pending_key.has_value());
    CHECK(!node.session_key.has_value());
}
