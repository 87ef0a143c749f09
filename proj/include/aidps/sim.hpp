#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "aidps/common.hpp"
#include "aidps/trace.hpp"

namespace aidps::sim {

inline constexpr double kSoundSpeedMps = 1500.0;

enum class AttackKind { none, blackhole, grayhole, flooding };

inline const char* attack_name(AttackKind k) {
    switch (k) {
        case AttackKind::none: return "none";
        case AttackKind::blackhole: return "blackhole";
        case AttackKind::grayhole: return "grayhole";
        case AttackKind::flooding: return "flooding";
    }
    return "none";
}

inline AttackKind attack_from_name(const std::string& s) {
    if (s == "none") return AttackKind::none;
    if (s == "blackhole") return AttackKind::blackhole;
    if (s == "grayhole") return AttackKind::grayhole;
    if (s == "flooding") return AttackKind::flooding;
    throw config_error("unknown attack kind: " + s);
}

enum class Behaviour { honest, blackhole, grayhole, flooder };

struct Vec3 {
    double x = 0, y = 0, z = 0;
};

inline double dist(const Vec3& a, const Vec3& b) {
    const double dx = a.x - b.x, dy = a.y - b.y, dz = a.z - b.z;
    return std::sqrt(dx * dx + dy * dy + dz * dz);
}

// Perpendicular distance from p to the segment a->b.
inline double point_segment_distance(const Vec3& p, const Vec3& a, const Vec3& b) {
    const double vx = b.x - a.x, vy = b.y - a.y, vz = b.z - a.z;
    const double len2 = vx * vx + vy * vy + vz * vz;
    if (len2 == 0.0) throw data_error("degenerate routing vector (source equals sink)");
    double t = ((p.x - a.x) * vx + (p.y - a.y) * vy + (p.z - a.z) * vz) / len2;
    t = std::clamp(t, 0.0, 1.0);
    const Vec3 q{a.x + t * vx, a.y + t * vy, a.z + t * vz};
    return dist(p, q);
}

struct SimConfig {
    int node_count = 16;
    std::set<int> malicious_ids;
    AttackKind attack_kind = AttackKind::none;
    double grayhole_drop_fraction = 0.4;
    double topo_x = 100.0, topo_y = 100.0, topo_z = 100.0;
    double sim_duration = 600.0;
    double data_interval = 0.1;
    double initial_energy = 20000.0;
    double frequency_khz = 25.0;
    double vbf_pipe_radius = 20.0;
    std::uint64_t rng_seed = 1;
    // Workbench knobs not fixed by the Aquasim parameter table.
    double comm_range = 50.0;
    int flood_multiple = 10;
    int trace_sample_every = 3;
    double tx_cost = 2.0;
    double rx_cost = 0.75;

    void validate() const {
        if (node_count < 2) throw config_error("node_count must be >= 2");
        for (int id : malicious_ids)
            if (id < 0 || id >= node_count)
                throw config_error("malicious id out of range: " + std::to_string(id));
        if (!(grayhole_drop_fraction > 0.0 && grayhole_drop_fraction < 1.0))
            throw config_error("grayhole_drop_fraction must be in (0,1)");
        if (topo_x <= 0 || topo_y <= 0 || topo_z <= 0) throw config_error("topography dims must be > 0");
        if (attack_kind == AttackKind::flooding && malicious_ids.size() < 3)
            throw config_error("flooding requires at least 3 malicious nodes");
        if (attack_kind != AttackKind::none && malicious_ids.empty())
            throw config_error("attack configured but no malicious ids given");
        if (trace_sample_every < 1) throw config_error("trace_sample_every must be >= 1");
        if (flood_multiple < 1) throw config_error("flood_multiple must be >= 1");
    }
};

struct Node {
    int id = 0;
    Vec3 position;
    double residual_energy = 0.0;
    double et = 0.0;  // cumulative transmit energy
    double er = 0.0;  // cumulative receive energy
    Behaviour behaviour = Behaviour::honest;
};

// Node ids 0 and 1 have fixed roles: 0 is the surface sink at the centre
// of the top face, 1 is the application source near the bottom centre.
// A column of relay nodes sits along the source->sink axis so the VBF
// pipe is never empty; remaining nodes go on a jittered grid.
inline int relay_count(int node_count) { return std::max(3, node_count / 8); }

inline std::vector<Node> build_topology(const SimConfig& cfg) {
    cfg.validate();
    rng_t rng(cfg.rng_seed);
    std::vector<Node> nodes(cfg.node_count);
    const double cx = cfg.topo_x / 2.0, cy = cfg.topo_y / 2.0;

    for (int i = 0; i < cfg.node_count; ++i) {
        nodes[i].id = i;
        nodes[i].residual_energy = cfg.initial_energy;
    }
    nodes[0].position = {cx, cy, 0.0};
    nodes[1].position = {cx + uniform_real(rng, -2.0, 2.0), cy + uniform_real(rng, -2.0, 2.0),
                         0.9 * cfg.topo_z};

    const int n_relay = std::min(relay_count(cfg.node_count), cfg.node_count - 2);
    const double z_src = nodes[1].position.z;
    const double jit = cfg.vbf_pipe_radius / 4.0;
    for (int k = 0; k < n_relay; ++k) {
        const double frac = static_cast<double>(k + 1) / (n_relay + 1);
        nodes[2 + k].position = {cx + uniform_real(rng, -jit, jit), cy + uniform_real(rng, -jit, jit),
                                 z_src * (1.0 - frac)};
    }

    // Remaining nodes: grid with jitter over the cube.
    const int rest = cfg.node_count - 2 - n_relay;
    if (rest > 0) {
        const int side = std::max(2, static_cast<int>(std::ceil(std::cbrt(static_cast<double>(rest)))));
        int placed = 0;
        for (int gz = 0; gz < side && placed < rest; ++gz)
            for (int gy = 0; gy < side && placed < rest; ++gy)
                for (int gx = 0; gx < side && placed < rest; ++gx) {
                    Vec3 p{cfg.topo_x * (gx + 0.5) / side, cfg.topo_y * (gy + 0.5) / side,
                           cfg.topo_z * (gz + 0.5) / side};
                    p.x = std::clamp(p.x + uniform_real(rng, -5.0, 5.0), 0.0, cfg.topo_x);
                    p.y = std::clamp(p.y + uniform_real(rng, -5.0, 5.0), 0.0, cfg.topo_y);
                    p.z = std::clamp(p.z + uniform_real(rng, -5.0, 5.0), 0.0, cfg.topo_z);
                    nodes[2 + n_relay + placed].position = p;
                    ++placed;
                }
    }

    for (int id : cfg.malicious_ids) {
        switch (cfg.attack_kind) {
            case AttackKind::none: break;
            case AttackKind::blackhole: nodes[id].behaviour = Behaviour::blackhole; break;
            case AttackKind::grayhole: nodes[id].behaviour = Behaviour::grayhole; break;
            case AttackKind::flooding: nodes[id].behaviour = Behaviour::flooder; break;
        }
    }
    return nodes;
}

enum class ForwardDecision { forward, ignore };

inline ForwardDecision vbf_forward_decision(const Node& node, const Vec3& source_pos,
                                            const Vec3& sink_pos, double pipe_radius) {
    if (pipe_radius <= 0) throw config_error("pipe_radius must be > 0");
    return point_segment_distance(node.position, source_pos, sink_pos) <= pipe_radius
               ? ForwardDecision::forward
               : ForwardDecision::ignore;
}

inline double propagation_delay(double distance_m) {
    if (distance_m < 0) throw data_error("negative distance");
    return distance_m / kSoundSpeedMps;
}

enum class AttackOutcome { forwarded, dropped };

inline AttackOutcome apply_attack_behaviour(const Node& node, double grayhole_drop_fraction,
                                            rng_t& rng) {
    switch (node.behaviour) {
        case Behaviour::blackhole: return AttackOutcome::dropped;
        case Behaviour::grayhole:
            return uniform_real(rng, 0.0, 1.0) < grayhole_drop_fraction ? AttackOutcome::dropped
                                                                        : AttackOutcome::forwarded;
        default: return AttackOutcome::forwarded;
    }
}

namespace detail {

// Greedy VBF next hop: reachable in-pipe node with the most progress
// toward the sink. Nodes without energy to receive do not participate.
inline std::optional<int> next_hop(const std::vector<Node>& nodes, int current, const Vec3& src_pos,
                                   const SimConfig& cfg) {
    const Vec3& sink = nodes[0].position;
    const double d_cur = dist(nodes[current].position, sink);
    std::optional<int> best;
    double best_d = d_cur;
    for (const auto& n : nodes) {
        if (n.id == current || n.id == 1) continue;
        if (n.residual_energy < cfg.rx_cost) continue;
        if (dist(nodes[current].position, n.position) > cfg.comm_range) continue;
        if (n.id != 0 &&
            vbf_forward_decision(n, src_pos, sink, cfg.vbf_pipe_radius) != ForwardDecision::forward)
            continue;
        const double d = dist(n.position, sink);
        if (d < best_d - 1e-9) {
            best_d = d;
            best = n.id;
        }
    }
    return best;
}

}  // namespace detail

struct SimResult {
    std::vector<Node> final_nodes;
    std::vector<TraceRecord> trace;
};

// Sink interest beacons fire once every kBeaconStride application packets.
inline constexpr int kBeaconStride = 10;
// Transmit-power scale used by selfish (grayhole) relays.
inline constexpr double kGrayholeTxScale = 0.05;

// Single-threaded packet-level run. Every application packet is routed
// greedily through the VBF pipe; trace rows are emitted for every
// sampled packet (send at RTR, receive at MAC per hop, delivery at RTR).
inline SimResult run_simulation(const SimConfig& cfg) {
    cfg.validate();
    auto nodes = build_topology(cfg);
    rng_t attack_rng(cfg.rng_seed ^ 0x9e3779b97f4a7c15ULL);
    std::vector<TraceRecord> out;

    const int kSrcPort = 1, kDstPort = 2, kInfo2 = 1;
    auto emit = [&](PacketStatus st, double t, int sender, int receiver, TraceLayer layer,
                    long pkt, int node_at) {
        TraceRecord r;
        r.status = st;
        r.time = t;
        r.sender = sender;
        r.receiver = receiver;
        r.layer = layer;
        r.packet_number = pkt;
        r.src_port = kSrcPort;
        r.dst_port = kDstPort;
        r.flag = layer == TraceLayer::RTR ? 1 : 0;
        r.info2 = kInfo2;
        r.energy = nodes[node_at].residual_energy;
        r.et = nodes[node_at].et;
        r.er = nodes[node_at].er;
        out.push_back(r);
    };

    auto spend_tx = [&](int id) {
        if (nodes[id].residual_energy < cfg.tx_cost) return false;
        nodes[id].residual_energy -= cfg.tx_cost;
        nodes[id].et += cfg.tx_cost;
        return true;
    };
    auto spend_rx = [&](int id) {
        if (nodes[id].residual_energy < cfg.rx_cost) return false;
        nodes[id].residual_energy -= cfg.rx_cost;
        nodes[id].er += cfg.rx_cost;
        return true;
    };

    // Main application flow: source (node 1) toward the sink (node 0).
    const Vec3 src_pos = nodes[1].position;
    const long n_packets = static_cast<long>(cfg.sim_duration / cfg.data_interval);

    // The trace collector has a fixed log budget: the sampling stride scales
    // with the route length so bigger topologies do not inflate row volume.
    int route_hops = 0;
    std::set<int> route_nodes{0, 1};
    for (int cur = 1; cur != 0 && route_hops < cfg.node_count; ) {
        auto step = detail::next_hop(nodes, cur, src_pos, cfg);
        if (!step) break;
        ++route_hops;
        cur = *step;
        route_nodes.insert(cur);
    }
    if (route_hops < 1) route_hops = 1;
    const int main_sample = std::max<int>(
        1, static_cast<int>(std::lround(cfg.trace_sample_every * route_hops / 2.0)));

    // Flooder parents are fixed at simulation start.
    std::map<int, int> flood_parent;
    if (cfg.attack_kind == AttackKind::flooding) {
        // The flood targets an idle neighbour (energy exhaustion), never a
        // node that carries the application flow.
        auto eligible = [&](int id, int cand) {
            return cand != id && !route_nodes.count(cand) && !cfg.malicious_ids.count(cand);
        };
        for (int id : cfg.malicious_ids) {
            auto nh = detail::next_hop(nodes, id, nodes[id].position, cfg);
            if (!nh || !eligible(id, *nh)) {
                double best = 1e300;
                int pick = -1;
                for (const auto& n : nodes)
                    if (eligible(id, n.id) && dist(n.position, nodes[id].position) < best) {
                        best = dist(n.position, nodes[id].position);
                        pick = n.id;
                    }
                if (pick < 0) throw config_error("no eligible flood target");
                nh = pick;
            }
            flood_parent[id] = *nh;
        }
    }

    const double flood_interval = cfg.data_interval / cfg.flood_multiple;
    // Per-flooder stride grows with the flooder count so the logged flood
    // volume stays roughly constant across topologies.
    const int flood_sample = cfg.trace_sample_every * cfg.flood_multiple *
                             std::max<int>(1, static_cast<int>(flood_parent.size()));

    struct PendingFlood {
        long next_pkt = 0;
    };
    std::map<int, PendingFlood> flood_state;
    for (auto& [id, _] : flood_parent) flood_state[id] = {};

    for (long p = 0; p < n_packets; ++p) {
        const double t0 = p * cfg.data_interval;

        // Interleave flood packets due before this application packet.
        for (auto& [fid, st] : flood_state) {
            while (st.next_pkt * flood_interval < t0 + cfg.data_interval &&
                   st.next_pkt * flood_interval < cfg.sim_duration) {
                const long fp = st.next_pkt++;
                const double ft = fp * flood_interval;
                const int parent = flood_parent[fid];
                const bool logged = (fp % flood_sample == 0);
                if (!spend_tx(fid)) {
                    if (logged) emit(PacketStatus::drop, ft, fid, fid, TraceLayer::MAC, fp, fid);
                    continue;
                }
                if (logged) emit(PacketStatus::send, ft, fid, -1, TraceLayer::MAC, fp, fid);
                const double ta = ft + propagation_delay(dist(nodes[fid].position, nodes[parent].position));
                if (spend_rx(parent)) {
                    if (logged) emit(PacketStatus::receive, ta, fid, parent, TraceLayer::MAC, fp, parent);
                } else if (logged) {
                    emit(PacketStatus::drop, ta, fid, parent, TraceLayer::MAC, fp, parent);
                }
            }
        }

        // Sink beacon: periodic interest broadcast, so the sink spends
        // transmit energy like every other live node.
        if (p % kBeaconStride == 0 && spend_tx(0)) {
            if (p % (kBeaconStride * main_sample) == 0)
                emit(PacketStatus::send, t0, 0, -1, TraceLayer::RTR, p, 0);
        }

        // Trace conventions: send rows are VBF broadcasts (receiver -1,
        // sender = transmitter); receive and drop rows carry the previous
        // hop as sender and the acting node as receiver.
        const bool logged = (p % main_sample == 0);
        int current = 1;
        double t = t0;
        auto nh = detail::next_hop(nodes, current, src_pos, cfg);
        if (!nh || !spend_tx(current)) {
            if (logged) emit(PacketStatus::drop, t, current, current, TraceLayer::RTR, p, current);
            continue;
        }
        if (logged) emit(PacketStatus::send, t, current, -1, TraceLayer::RTR, p, current);

        // Hop-by-hop traversal.
        while (true) {
            const int next = *nh;
            t += propagation_delay(dist(nodes[current].position, nodes[next].position));
            if (!spend_rx(next)) {
                if (logged) emit(PacketStatus::drop, t, current, next, TraceLayer::MAC, p, next);
                break;
            }
            if (next == 0) {
                // delivery is logged once, at the routing layer
                if (logged) emit(PacketStatus::receive, t, current, next, TraceLayer::RTR, p, next);
                break;
            }
            // Attack behaviour of the forwarding node. Malicious nodes run a
            // raw MAC shim instead of the routing agent, so the monitor sees
            // their dropped frames and transmissions but no routing-layer
            // receive bookkeeping.
            if (nodes[next].behaviour != Behaviour::honest &&
                (cfg.attack_kind == AttackKind::blackhole ||
                 cfg.attack_kind == AttackKind::grayhole)) {
                if (apply_attack_behaviour(nodes[next], cfg.grayhole_drop_fraction, attack_rng) ==
                    AttackOutcome::dropped) {
                    if (logged) emit(PacketStatus::drop, t, current, next, TraceLayer::MAC, p, next);
                    break;
                }
                // Selfish low-power re-send: the packet dies in transit.
                const double cost = cfg.tx_cost * kGrayholeTxScale;
                if (nodes[next].residual_energy >= cost) {
                    nodes[next].residual_energy -= cost;
                    nodes[next].et += cost;
                }
                if (logged) emit(PacketStatus::send, t, next, -1, TraceLayer::MAC, p, next);
                break;
            }
            if (logged) emit(PacketStatus::receive, t, current, next, TraceLayer::MAC, p, next);
            auto onward = detail::next_hop(nodes, next, src_pos, cfg);
            if (!onward || !spend_tx(next)) {
                if (logged) emit(PacketStatus::drop, t, current, next, TraceLayer::RTR, p, next);
                break;
            }
            if (logged) emit(PacketStatus::send, t, next, -1, TraceLayer::RTR, p, next);
            current = next;
            nh = onward;
        }
    }

    std::stable_sort(out.begin(), out.end(),
                     [](const TraceRecord& a, const TraceRecord& b) { return a.time < b.time; });
    return {std::move(nodes), std::move(out)};
}

// key=value config file, one field per line, '#' comments.
inline SimConfig parse_config_text(const std::string& text) {
    SimConfig cfg;
    std::stringstream ss(text);
    std::string line;
    while (std::getline(ss, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t");
            const auto e = s.find_last_not_of(" \t");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (key.empty()) continue;
        try {
            if (key == "node_count") cfg.node_count = std::stoi(val);
            else if (key == "malicious_ids") {
                cfg.malicious_ids.clear();
                std::stringstream vs(val);
                std::string tok;
                while (std::getline(vs, tok, ',')) {
                    tok = trim(tok);
                    if (!tok.empty()) cfg.malicious_ids.insert(std::stoi(tok));
                }
            } else if (key == "attack_kind") cfg.attack_kind = attack_from_name(val);
            else if (key == "grayhole_drop_fraction") cfg.grayhole_drop_fraction = std::stod(val);
            else if (key == "topo_x") cfg.topo_x = std::stod(val);
            else if (key == "topo_y") cfg.topo_y = std::stod(val);
            else if (key == "topo_z") cfg.topo_z = std::stod(val);
            else if (key == "sim_duration") cfg.sim_duration = std::stod(val);
            else if (key == "data_interval") cfg.data_interval = std::stod(val);
            else if (key == "initial_energy") cfg.initial_energy = std::stod(val);
            else if (key == "frequency_khz") cfg.frequency_khz = std::stod(val);
            else if (key == "vbf_pipe_radius") cfg.vbf_pipe_radius = std::stod(val);
            else if (key == "rng_seed") cfg.rng_seed = std::stoull(val);
            else if (key == "comm_range") cfg.comm_range = std::stod(val);
            else if (key == "flood_multiple") cfg.flood_multiple = std::stoi(val);
            else if (key == "trace_sample_every") cfg.trace_sample_every = std::stoi(val);
            else if (key == "tx_cost") cfg.tx_cost = std::stod(val);
            else if (key == "rx_cost") cfg.rx_cost = std::stod(val);
            else throw config_error("unknown config key: " + key);
        } catch (const config_error&) {
            throw;
        } catch (const std::exception&) {
            throw config_error("bad value for " + key + ": " + val);
        }
    }
    return cfg;
}

inline std::string config_to_text(const SimConfig& cfg) {
    std::string s;
    s += "node_count = " + std::to_string(cfg.node_count) + "\n";
    s += "malicious_ids = ";
    bool first = true;
    for (int id : cfg.malicious_ids) {
        if (!first) s += ",";
        s += std::to_string(id);
        first = false;
    }
    s += "\n";
    s += std::string("attack_kind = ") + attack_name(cfg.attack_kind) + "\n";
    s += "grayhole_drop_fraction = " + format_fixed(cfg.grayhole_drop_fraction) + "\n";
    s += "topo_x = " + format_fixed(cfg.topo_x) + "\n";
    s += "topo_y = " + format_fixed(cfg.topo_y) + "\n";
    s += "topo_z = " + format_fixed(cfg.topo_z) + "\n";
    s += "sim_duration = " + format_fixed(cfg.sim_duration) + "\n";
    s += "data_interval = " + format_fixed(cfg.data_interval) + "\n";
    s += "initial_energy = " + format_fixed(cfg.initial_energy) + "\n";
    s += "frequency_khz = " + format_fixed(cfg.frequency_khz) + "\n";
    s += "vbf_pipe_radius = " + format_fixed(cfg.vbf_pipe_radius) + "\n";
    s += "rng_seed = " + std::to_string(cfg.rng_seed) + "\n";
    s += "comm_range = " + format_fixed(cfg.comm_range) + "\n";
    s += "flood_multiple = " + std::to_string(cfg.flood_multiple) + "\n";
    s += "trace_sample_every = " + std::to_string(cfg.trace_sample_every) + "\n";
    s += "tx_cost = " + format_fixed(cfg.tx_cost) + "\n";
    s += "rx_cost = " + format_fixed(cfg.rx_cost) + "\n";
    return s;
}

// The route the main flow takes through a freshly built topology.
inline std::vector<int> main_route(const SimConfig& cfg) {
    auto nodes = build_topology(cfg);
    std::vector<int> route;
    int current = 1;
    while (current != 0) {
        auto nh = detail::next_hop(nodes, current, nodes[1].position, cfg);
        if (!nh) break;
        route.push_back(*nh);
        current = *nh;
        if (route.size() > nodes.size()) break;  // geometry bug guard
    }
    return route;
}

// Canonical per-scenario configs used by the workbench: blackhole and
// grayhole corrupt forwarding nodes on the actual route, flooding picks
// grid nodes (their parent is computed at run time).
inline SimConfig scenario_config(AttackKind kind, int node_count, std::uint64_t seed,
                                 int malicious_count = 0) {
    SimConfig cfg;
    cfg.node_count = node_count;
    cfg.attack_kind = kind;
    cfg.rng_seed = seed;
    if (kind == AttackKind::none) return cfg;
    SimConfig probe = cfg;
    probe.attack_kind = AttackKind::none;
    probe.malicious_ids.clear();
    const auto route = main_route(probe);
    const int n_relay = std::min(relay_count(node_count), node_count - 2);
    if (kind == AttackKind::blackhole || kind == AttackKind::grayhole) {
        if (malicious_count <= 0) malicious_count = 1;
        for (int hop : route)
            if (hop != 0 && hop != 1 && static_cast<int>(cfg.malicious_ids.size()) < malicious_count)
                cfg.malicious_ids.insert(hop);
        for (int id = 2 + n_relay;
             static_cast<int>(cfg.malicious_ids.size()) < malicious_count && id < node_count; ++id)
            cfg.malicious_ids.insert(id);
    } else {
        if (malicious_count < 3) malicious_count = 3;
        for (int id = 2 + n_relay;
             static_cast<int>(cfg.malicious_ids.size()) < malicious_count && id < node_count; ++id)
            cfg.malicious_ids.insert(id);
        for (int id = node_count - 1; static_cast<int>(cfg.malicious_ids.size()) < 3 && id >= 2; --id)
            cfg.malicious_ids.insert(id);
    }
    return cfg;
}

}  // namespace aidps::sim
