#pragma once

#include <cmath>
#include <cstring>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <sodium.h>

#include "aidps/common.hpp"

namespace aidps::ips {

using Bytes = std::vector<unsigned char>;

inline constexpr std::size_t kNonceLen = 32;  // psi/epsilon length
inline constexpr const char* kZeroSignal = "AIDPS-ZERO-SIGNAL";
inline constexpr const char* kConfirmMessage = "AIDPS-M-CONF";
inline constexpr const char* kKdfSalt = "AIDPS-SESSION-KDF-v1";

inline void sodium_ready() {
    static const int rc = sodium_init();
    if (rc < 0) throw model_error("libsodium initialisation failed");
}

inline Bytes random_bytes(rng_t& rng, std::size_t n) {
    Bytes out(n);
    for (auto& b : out) b = static_cast<unsigned char>(rng() & 0xff);
    return out;
}

// ---------------------------------------------------------------------------
// Wire helpers: u32 little-endian length prefix, fields in declared order.

inline void put_field(Bytes& out, const Bytes& field) {
    const std::uint32_t len = static_cast<std::uint32_t>(field.size());
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>((len >> (8 * i)) & 0xff));
    out.insert(out.end(), field.begin(), field.end());
}

inline Bytes get_field(const Bytes& in, std::size_t& pos) {
    if (pos + 4 > in.size()) throw data_error("wire: truncated length prefix");
    std::uint32_t len = 0;
    for (int i = 0; i < 4; ++i) len |= static_cast<std::uint32_t>(in[pos + i]) << (8 * i);
    pos += 4;
    if (pos + len > in.size()) throw data_error("wire: truncated field");
    Bytes f(in.begin() + pos, in.begin() + pos + len);
    pos += len;
    return f;
}

inline Bytes double_field(double v) {
    Bytes b(sizeof(double));
    std::memcpy(b.data(), &v, sizeof(double));
    return b;
}

inline double field_double(const Bytes& b) {
    if (b.size() != sizeof(double)) throw data_error("wire: bad double field");
    double v;
    std::memcpy(&v, b.data(), sizeof(double));
    return v;
}

// ---------------------------------------------------------------------------
// Long-term key material: an encryption pair (X25519 box) and a signing
// pair (Ed25519), both derived deterministically from a seed.

struct Identity {
    Bytes box_pk, box_sk, sign_pk, sign_sk;

    static Identity from_seed(rng_t& rng) {
        sodium_ready();
        Identity id;
        id.box_pk.resize(crypto_box_PUBLICKEYBYTES);
        id.box_sk.resize(crypto_box_SECRETKEYBYTES);
        id.sign_pk.resize(crypto_sign_PUBLICKEYBYTES);
        id.sign_sk.resize(crypto_sign_SECRETKEYBYTES);
        const Bytes bseed = random_bytes(rng, crypto_box_SEEDBYTES);
        const Bytes sseed = random_bytes(rng, crypto_sign_SEEDBYTES);
        crypto_box_seed_keypair(id.box_pk.data(), id.box_sk.data(), bseed.data());
        crypto_sign_seed_keypair(id.sign_pk.data(), id.sign_sk.data(), sseed.data());
        return id;
    }
};

inline Bytes box_encrypt(const Bytes& plaintext, const Bytes& receiver_pk, const Bytes& sender_sk,
                         rng_t& rng) {
    Bytes nonce = random_bytes(rng, crypto_box_NONCEBYTES);
    Bytes ct(plaintext.size() + crypto_box_MACBYTES);
    if (crypto_box_easy(ct.data(), plaintext.data(), plaintext.size(), nonce.data(),
                        receiver_pk.data(), sender_sk.data()) != 0)
        throw model_error("box encryption failed");
    Bytes out;
    put_field(out, nonce);
    put_field(out, ct);
    return out;
}

inline std::optional<Bytes> box_decrypt(const Bytes& wire, const Bytes& sender_pk,
                                        const Bytes& receiver_sk) {
    std::size_t pos = 0;
    Bytes nonce, ct;
    try {
        nonce = get_field(wire, pos);
        ct = get_field(wire, pos);
    } catch (const data_error&) {
        return std::nullopt;
    }
    if (nonce.size() != crypto_box_NONCEBYTES || ct.size() < crypto_box_MACBYTES)
        return std::nullopt;
    Bytes pt(ct.size() - crypto_box_MACBYTES);
    if (crypto_box_open_easy(pt.data(), ct.data(), ct.size(), nonce.data(), sender_pk.data(),
                             receiver_sk.data()) != 0)
        return std::nullopt;
    return pt;
}

inline Bytes sign_detached(const Bytes& msg, const Bytes& sign_sk) {
    Bytes sig(crypto_sign_BYTES);
    crypto_sign_detached(sig.data(), nullptr, msg.data(), msg.size(), sign_sk.data());
    return sig;
}

inline bool verify_detached(const Bytes& msg, const Bytes& sig, const Bytes& sign_pk) {
    return sig.size() == crypto_sign_BYTES &&
           crypto_sign_verify_detached(sig.data(), msg.data(), msg.size(), sign_pk.data()) == 0;
}

inline Bytes hash_bytes(const Bytes& data) {
    Bytes out(crypto_generichash_BYTES);
    crypto_generichash(out.data(), out.size(), data.data(), data.size(), nullptr, 0);
    return out;
}

struct SessionKey {
    Bytes key;
    bool operator==(const SessionKey&) const = default;
};

inline SessionKey derive_session_key(const Bytes& psi1, const Bytes& psi2, const Bytes& epsilon) {
    sodium_ready();
    if (psi1.size() < 16 || psi2.size() < 16 || epsilon.size() < 16)
        throw data_error("derive_session_key: inputs must be at least 16 bytes");
    Bytes input;
    put_field(input, psi1);
    put_field(input, psi2);
    put_field(input, epsilon);
    SessionKey sk;
    sk.key.resize(crypto_generichash_BYTES);
    crypto_generichash(sk.key.data(), sk.key.size(), input.data(), input.size(),
                       reinterpret_cast<const unsigned char*>(kKdfSalt), std::strlen(kKdfSalt));
    return sk;
}

// ---------------------------------------------------------------------------
// RSSI gate: fail-closed inclusive band per registered node.

struct RssiRange {
    double lo = 0, hi = 0;
};

using RssiRegistry = std::map<int, RssiRange>;

inline bool rssi_within_range(const RssiRegistry& registry, int node_id, double measured) {
    const auto it = registry.find(node_id);
    if (it == registry.end()) return false;
    return measured >= it->second.lo && measured <= it->second.hi;
}

// Desk-scale RSSI synthesis: log-distance model with seeded noise.
inline double synth_rssi(double distance_m, rng_t& rng, double noise_db = 1.0) {
    const double d = std::max(distance_m, 1.0);
    return -40.0 - 20.0 * std::log10(d) + std::normal_distribution<double>(0.0, noise_db)(rng);
}

// ---------------------------------------------------------------------------
// Protocol messages. Wire layout is length-prefixed fields in the
// declared order.

struct M1 {
    Bytes ciphertext;  // Enc(sig(Z_signal), psi1, T1) under the node's box key
};

struct M2 {
    Bytes ciphertext;  // Enc(epsilon, psi2, T2, RSSI) under the buoy's box key
    Bytes signature;   // Sign(M_Conf || Delta) under the node's signing key, Delta = H(ct || sk_old)
};

template <typename T>
struct ProtoResult {
    std::optional<T> value;
    std::string error;  // empty on success
    bool ok() const { return value.has_value(); }
};

struct PendingExchange {
    Bytes psi1;
    double t1 = 0;
};

struct BuoyContext {
    Identity self;
    Bytes node_box_pk, node_sign_pk;
    Bytes sk_old;  // current session key with the node
    double delta_t = 30.0;
    RssiRegistry registry;
    std::map<int, PendingExchange> pending;
    std::set<int> isolated;
    std::vector<std::string> log;
    rng_t rng{1};
};

struct NodeContext {
    Identity self;
    Bytes buoy_box_pk, buoy_sign_pk;
    Bytes sk_old;
    double delta_t = 30.0;
    std::optional<SessionKey> pending_key;  // installed only when the exchange completes
    std::optional<SessionKey> session_key;
    rng_t rng{2};
};

inline ProtoResult<M1> buoy_initiate(BuoyContext& ctx, int node_id, double measured_rssi,
                                     double now) {
    sodium_ready();
    if (!rssi_within_range(ctx.registry, node_id, measured_rssi)) {
        ctx.isolated.insert(node_id);
        ctx.log.push_back("isolate node " + std::to_string(node_id) + ": rssi out of range");
        return {std::nullopt, "rssi out of registered range; node isolated"};
    }
    if (ctx.pending.count(node_id)) return {std::nullopt, "duplicate trigger: exchange pending"};

    const Bytes zsig = sign_detached(
        Bytes(kZeroSignal, kZeroSignal + std::strlen(kZeroSignal)), ctx.self.sign_sk);
    const Bytes psi1 = random_bytes(ctx.rng, kNonceLen);
    Bytes plain;
    put_field(plain, zsig);
    put_field(plain, psi1);
    put_field(plain, double_field(now));
    M1 m1{box_encrypt(plain, ctx.node_box_pk, ctx.self.box_sk, ctx.rng)};
    ctx.pending[node_id] = {psi1, now};
    return {m1, ""};
}

inline ProtoResult<M2> node_handle_m1(NodeContext& ctx, const M1& m1, double measured_rssi,
                                      double now) {
    sodium_ready();
    const auto plain = box_decrypt(m1.ciphertext, ctx.buoy_box_pk, ctx.self.box_sk);
    if (!plain) return {std::nullopt, "M1 decryption failed"};
    Bytes zsig, psi1, t1f;
    try {
        std::size_t pos = 0;
        zsig = get_field(*plain, pos);
        psi1 = get_field(*plain, pos);
        t1f = get_field(*plain, pos);
    } catch (const data_error& e) {
        return {std::nullopt, std::string("M1 malformed: ") + e.what()};
    }
    const double t1 = field_double(t1f);
    if (std::fabs(now - t1) > ctx.delta_t) return {std::nullopt, "stale T1"};
    if (!verify_detached(Bytes(kZeroSignal, kZeroSignal + std::strlen(kZeroSignal)), zsig,
                         ctx.buoy_sign_pk))
        return {std::nullopt, "zero-signal signature verification failed"};

    const Bytes epsilon = random_bytes(ctx.rng, kNonceLen);
    const Bytes psi2 = random_bytes(ctx.rng, kNonceLen);
    Bytes inner;
    put_field(inner, epsilon);
    put_field(inner, psi2);
    put_field(inner, double_field(now));
    put_field(inner, double_field(measured_rssi));
    M2 m2;
    m2.ciphertext = box_encrypt(inner, ctx.buoy_box_pk, ctx.self.box_sk, ctx.rng);
    Bytes bound = m2.ciphertext;
    bound.insert(bound.end(), ctx.sk_old.begin(), ctx.sk_old.end());
    const Bytes delta = hash_bytes(bound);
    Bytes signed_msg(kConfirmMessage, kConfirmMessage + std::strlen(kConfirmMessage));
    signed_msg.insert(signed_msg.end(), delta.begin(), delta.end());
    m2.signature = sign_detached(signed_msg, ctx.self.sign_sk);
    ctx.pending_key = derive_session_key(psi1, psi2, epsilon);
    return {m2, ""};
}

inline ProtoResult<SessionKey> buoy_handle_m2(BuoyContext& ctx, int node_id, const M2& m2,
                                              double now) {
    sodium_ready();
    const auto it = ctx.pending.find(node_id);
    if (it == ctx.pending.end()) return {std::nullopt, "no pending exchange (possible replay)"};
    auto abort = [&](const std::string& why) -> ProtoResult<SessionKey> {
        ctx.pending.erase(node_id);
        ctx.isolated.insert(node_id);
        ctx.log.push_back("abort exchange with node " + std::to_string(node_id) + ": " + why);
        return {std::nullopt, why};
    };

    const auto inner = box_decrypt(m2.ciphertext, ctx.node_box_pk, ctx.self.box_sk);
    if (!inner) return abort("M2 decryption failed");
    Bytes epsilon, psi2, t2f, rssif;
    try {
        std::size_t pos = 0;
        epsilon = get_field(*inner, pos);
        psi2 = get_field(*inner, pos);
        t2f = get_field(*inner, pos);
        rssif = get_field(*inner, pos);
    } catch (const data_error& e) {
        return abort(std::string("M2 malformed: ") + e.what());
    }
    if (std::fabs(now - field_double(t2f)) > ctx.delta_t) return abort("stale T2");
    if (!rssi_within_range(ctx.registry, node_id, field_double(rssif)))
        return abort("reported RSSI out of registered range");

    Bytes bound = m2.ciphertext;
    bound.insert(bound.end(), ctx.sk_old.begin(), ctx.sk_old.end());
    const Bytes delta = hash_bytes(bound);
    Bytes signed_msg(kConfirmMessage, kConfirmMessage + std::strlen(kConfirmMessage));
    signed_msg.insert(signed_msg.end(), delta.begin(), delta.end());
    if (!verify_detached(signed_msg, m2.signature, ctx.node_sign_pk))
        return abort("M_Conf/Delta signature verification failed");

    SessionKey sk = derive_session_key(it->second.psi1, psi2, epsilon);
    ctx.pending.erase(node_id);
    ctx.isolated.erase(node_id);
    ctx.sk_old = sk.key;
    return {sk, ""};
}

// Completion hooks for the node side: the candidate key becomes the
// session key only when the exchange as a whole succeeded.
inline void node_install_pending(NodeContext& ctx) {
    if (!ctx.pending_key) throw model_error("no pending key to install");
    ctx.session_key = ctx.pending_key;
    ctx.sk_old = ctx.pending_key->key;
    ctx.pending_key.reset();
}

inline void node_abort_pending(NodeContext& ctx) { ctx.pending_key.reset(); }

// Paired contexts with shared public keys and session key, for tests and
// the scripted demo.
inline std::pair<BuoyContext, NodeContext> make_session_pair(std::uint64_t seed,
                                                             double delta_t = 30.0) {
    sodium_ready();
    rng_t rng(seed);
    BuoyContext buoy;
    NodeContext node;
    buoy.self = Identity::from_seed(rng);
    node.self = Identity::from_seed(rng);
    buoy.node_box_pk = node.self.box_pk;
    buoy.node_sign_pk = node.self.sign_pk;
    node.buoy_box_pk = buoy.self.box_pk;
    node.buoy_sign_pk = buoy.self.sign_pk;
    buoy.sk_old = random_bytes(rng, 32);
    node.sk_old = buoy.sk_old;
    buoy.delta_t = delta_t;
    node.delta_t = delta_t;
    buoy.rng = rng_t(seed * 2654435761ULL + 1);
    node.rng = rng_t(seed * 2654435761ULL + 2);
    return {std::move(buoy), std::move(node)};
}

}  // namespace aidps::ips
