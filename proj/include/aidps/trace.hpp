#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "aidps/common.hpp"

namespace aidps {

enum class PacketStatus : char { receive = 'r', send = 's', drop = 'd' };
enum class TraceLayer : int { RTR = 0, MAC = 1 };

inline const char* layer_name(TraceLayer l) { return l == TraceLayer::RTR ? "RTR" : "MAC"; }

// One simulator event row. Energies are those of the node where the
// event happened, sampled at event time.
struct TraceRecord {
    PacketStatus status = PacketStatus::send;
    double time = 0.0;
    int sender = 0;
    int receiver = 0;
    TraceLayer layer = TraceLayer::RTR;
    long packet_number = 0;
    int src_port = 0;
    int dst_port = 0;
    int flag = 0;
    int info2 = 0;
    double energy = 0.0;
    double et = 0.0;
    double er = 0.0;
};

inline constexpr const char* kTraceCsvHeader =
    "status,time,sender,receiver,layer,pkt_no,src_port,dst_port,flag,info2,energy,et,er";

inline std::string trace_to_csv(const TraceRecord& r) {
    std::string line;
    line += static_cast<char>(r.status);
    line += ',';
    line += format_fixed(r.time);
    line += ',' + std::to_string(r.sender);
    line += ',' + std::to_string(r.receiver);
    line += ',';
    line += layer_name(r.layer);
    line += ',' + std::to_string(r.packet_number);
    line += ',' + std::to_string(r.src_port);
    line += ',' + std::to_string(r.dst_port);
    line += ',' + std::to_string(r.flag);
    line += ',' + std::to_string(r.info2);
    line += ',' + format_fixed(r.energy);
    line += ',' + format_fixed(r.et);
    line += ',' + format_fixed(r.er);
    return line;
}

inline TraceRecord parse_trace(const std::string& line, std::size_t row_index = 0) {
    const auto fields = split_csv_line(line);
    if (fields.size() != 13)
        throw data_error("trace row " + std::to_string(row_index) + ": expected 13 columns, got " +
                         std::to_string(fields.size()));
    TraceRecord r;
    const std::string& st = fields[0];
    if (st != "r" && st != "s" && st != "d")
        throw data_error("trace row " + std::to_string(row_index) + ": bad status '" + st + "'");
    r.status = static_cast<PacketStatus>(st[0]);
    try {
        r.time = std::stod(fields[1]);
        r.sender = std::stoi(fields[2]);
        r.receiver = std::stoi(fields[3]);
        if (fields[4] == "RTR")
            r.layer = TraceLayer::RTR;
        else if (fields[4] == "MAC")
            r.layer = TraceLayer::MAC;
        else
            throw data_error("bad layer '" + fields[4] + "'");
        r.packet_number = std::stol(fields[5]);
        r.src_port = std::stoi(fields[6]);
        r.dst_port = std::stoi(fields[7]);
        r.flag = std::stoi(fields[8]);
        r.info2 = std::stoi(fields[9]);
        r.energy = std::stod(fields[10]);
        r.et = std::stod(fields[11]);
        r.er = std::stod(fields[12]);
    } catch (const data_error&) {
        throw;
    } catch (const std::exception& e) {
        throw data_error("trace row " + std::to_string(row_index) + ": " + e.what());
    }
    return r;
}

inline std::string traces_to_csv(const std::vector<TraceRecord>& records) {
    std::string out(kTraceCsvHeader);
    out += '\n';
    for (const auto& r : records) {
        out += trace_to_csv(r);
        out += '\n';
    }
    return out;
}

inline std::vector<TraceRecord> traces_from_csv(const std::string& text) {
    std::vector<TraceRecord> out;
    std::stringstream ss(text);
    std::string line;
    std::size_t idx = 0;
    bool first = true;
    while (std::getline(ss, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (first) {
            first = false;
            if (line != kTraceCsvHeader) throw data_error("trace csv: unexpected header");
            continue;
        }
        if (line.empty()) continue;
        out.push_back(parse_trace(line, idx));
        ++idx;
    }
    return out;
}

}  // namespace aidps
