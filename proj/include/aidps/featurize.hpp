#pragma once

#include <array>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "aidps/common.hpp"
#include "aidps/sim.hpp"
#include "aidps/trace.hpp"

namespace aidps::featurize {

inline constexpr int kFeatureCount = 16;

inline constexpr const char* kDatasetCsvHeader =
    "Packet_Status_Cat,Sender_MAC,ET,Packet_Information2_Cat,Cumulative_Count,Sender_RTR,"
    "MAC_Ratio,ER,RTR_Ratio,Energy,Time,Sent_Packet_Number,Dst_Port_Cat,Src_Port_Cat,"
    "Flag_Cat,Trace_Type_Cat,Attack_Cat";

// Table-ordered engineered features plus the label.
struct FeatureVector {
    double packet_status_cat = 0;
    double sender_mac = 0;
    double et = 0;
    double packet_info2_cat = 0;
    double cumulative_count = 0;
    double sender_rtr = 0;
    double mac_ratio = 0;
    double er = 0;
    double rtr_ratio = 0;
    double energy = 0;
    double time = 0;
    double sent_packet_number = 0;
    double dst_port_cat = 0;
    double src_port_cat = 0;
    double flag_cat = 0;
    double trace_type_cat = 0;
    int label = 0;

    std::array<double, kFeatureCount> values() const {
        return {packet_status_cat, sender_mac,        et,       packet_info2_cat,
                cumulative_count,  sender_rtr,        mac_ratio, er,
                rtr_ratio,         energy,            time,      sent_packet_number,
                dst_port_cat,      src_port_cat,      flag_cat,  trace_type_cat};
    }
};

// Stable first-seen dictionary encoding for the categorical columns,
// persisted as a JSON sidecar so train and test share one table.
class CategoryEncoder {
  public:
    static constexpr std::array<const char*, 6> kColumns = {"status", "info2",      "dst_port",
                                                            "src_port", "flag", "trace_type"};

    int encode(const std::string& column, const std::string& value) {
        auto& table = tables_[column];
        auto it = table.find(value);
        if (it != table.end()) return it->second;
        const int code = static_cast<int>(table.size());
        table[value] = code;
        return code;
    }

    // Lookup without extending the table; throws for unseen categories.
    int encode_strict(const std::string& column, const std::string& value) const {
        auto ct = tables_.find(column);
        if (ct == tables_.end()) throw data_error("unknown categorical column: " + column);
        auto it = ct->second.find(value);
        if (it == ct->second.end())
            throw data_error("unencoded categorical value '" + value + "' in column " + column);
        return it->second;
    }

    std::string decode(const std::string& column, int code) const {
        auto ct = tables_.find(column);
        if (ct == tables_.end()) throw data_error("unknown categorical column: " + column);
        for (const auto& [k, v] : ct->second)
            if (v == code) return k;
        throw data_error("unknown code " + std::to_string(code) + " in column " + column);
    }

    nlohmann::json to_json() const {
        nlohmann::json j;
        for (const auto& [col, table] : tables_)
            for (const auto& [k, v] : table) j[col][k] = v;
        return j;
    }

    static CategoryEncoder from_json(const nlohmann::json& j) {
        CategoryEncoder e;
        for (auto& [col, table] : j.items())
            for (auto& [k, v] : table.items()) e.tables_[col][k] = v.get<int>();
        return e;
    }

  private:
    std::map<std::string, std::map<std::string, int>> tables_;
};

// Streaming running-count state behind derive_features; single pass,
// chunkable (processing a stream equals processing its concatenated chunks).
struct FeatureState {
    std::map<int, long> sender_rtr;
    std::map<int, long> sender_mac;
    long cum_rtr = 0;
    long cum_mac = 0;
    double last_rtr_ratio = 0.0;
    double last_mac_ratio = 0.0;
};

inline FeatureVector derive_one(FeatureState& st, const TraceRecord& r, CategoryEncoder& enc) {
    FeatureVector f;
    if (r.layer == TraceLayer::RTR) {
        st.sender_rtr[r.sender]++;
        st.cum_rtr++;
        st.last_rtr_ratio = static_cast<double>(st.sender_rtr[r.sender]) / st.cum_rtr;
        f.cumulative_count = static_cast<double>(st.cum_rtr);
    } else {
        st.sender_mac[r.sender]++;
        st.cum_mac++;
        st.last_mac_ratio = static_cast<double>(st.sender_mac[r.sender]) / st.cum_mac;
        f.cumulative_count = static_cast<double>(st.cum_mac);
    }
    f.packet_status_cat = enc.encode("status", std::string(1, static_cast<char>(r.status)));
    f.sender_mac = static_cast<double>(st.sender_mac.count(r.sender) ? st.sender_mac[r.sender] : 0);
    f.et = r.et;
    f.packet_info2_cat = enc.encode("info2", std::to_string(r.info2));
    f.sender_rtr = static_cast<double>(st.sender_rtr.count(r.sender) ? st.sender_rtr[r.sender] : 0);
    f.mac_ratio = st.last_mac_ratio;
    f.er = r.er;
    f.rtr_ratio = st.last_rtr_ratio;
    f.energy = r.energy;
    f.time = r.time;
    f.sent_packet_number = static_cast<double>(r.packet_number);
    f.dst_port_cat = enc.encode("dst_port", std::to_string(r.dst_port));
    f.src_port_cat = enc.encode("src_port", std::to_string(r.src_port));
    f.flag_cat = enc.encode("flag", std::to_string(r.flag));
    f.trace_type_cat = enc.encode("trace_type", layer_name(r.layer));
    return f;
}

inline std::vector<FeatureVector> derive_features(const std::vector<TraceRecord>& records,
                                                  CategoryEncoder& enc) {
    FeatureState st;
    std::vector<FeatureVector> out;
    out.reserve(records.size());
    for (const auto& r : records) out.push_back(derive_one(st, r, enc));
    return out;
}

inline int label_record(const TraceRecord& r, const std::set<int>& malicious,
                        sim::AttackKind scenario) {
    switch (scenario) {
        case sim::AttackKind::blackhole:
            return malicious.count(r.receiver) ? 1 : 0;
        case sim::AttackKind::grayhole:
            return (malicious.count(r.sender) || malicious.count(r.receiver)) ? 2 : 0;
        case sim::AttackKind::flooding:
            return malicious.count(r.sender) ? 3 : 0;
        default:
            return 0;
    }
}

enum class DatasetMode { d1, d2 };

struct ScenarioTrace {
    std::vector<TraceRecord> records;  // time-ordered
    sim::AttackKind scenario = sim::AttackKind::none;
    std::set<int> malicious;
};

struct Dataset {
    std::vector<FeatureVector> rows;
    CategoryEncoder encoder;
};

// Scenario order is preserved; counts reset per scenario by default.
inline Dataset assemble_dataset(const std::vector<ScenarioTrace>& scenarios, DatasetMode mode,
                                bool reset_counts_per_scenario = true) {
    Dataset ds;
    FeatureState st;
    for (const auto& sc : scenarios) {
        if (reset_counts_per_scenario) st = FeatureState{};
        for (const auto& r : sc.records) {
            FeatureVector f = derive_one(st, r, ds.encoder);
            int label = label_record(r, sc.malicious, sc.scenario);
            if (label < 0 || label > 3)
                throw data_error("label out of range: " + std::to_string(label));
            if (mode == DatasetMode::d2 && label > 0) label = 1;
            f.label = label;
            ds.rows.push_back(f);
        }
    }
    return ds;
}

inline std::string dataset_to_csv(const Dataset& ds) {
    std::string out(kDatasetCsvHeader);
    out += '\n';
    for (const auto& f : ds.rows) {
        const auto v = f.values();
        // categorical and count columns are integral by construction
        const std::array<bool, kFeatureCount> integral = {true,  true,  false, true, true, true,
                                                          false, false, false, false, false, true,
                                                          true,  true,  true,  true};
        for (int i = 0; i < kFeatureCount; ++i) {
            if (i) out += ',';
            out += integral[i] ? std::to_string(static_cast<long>(v[i])) : format_fixed(v[i]);
        }
        out += ',' + std::to_string(f.label) + '\n';
    }
    return out;
}

inline std::vector<FeatureVector> dataset_rows_from_csv(const std::string& text) {
    std::vector<FeatureVector> rows;
    std::stringstream ss(text);
    std::string line;
    bool first = true;
    std::size_t idx = 0;
    while (std::getline(ss, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (first) {
            first = false;
            if (line != kDatasetCsvHeader) throw data_error("dataset csv: unexpected header");
            continue;
        }
        if (line.empty()) continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != kFeatureCount + 1)
            throw data_error("dataset row " + std::to_string(idx) + ": expected 17 columns");
        FeatureVector f;
        try {
            f.packet_status_cat = std::stod(fields[0]);
            f.sender_mac = std::stod(fields[1]);
            f.et = std::stod(fields[2]);
            f.packet_info2_cat = std::stod(fields[3]);
            f.cumulative_count = std::stod(fields[4]);
            f.sender_rtr = std::stod(fields[5]);
            f.mac_ratio = std::stod(fields[6]);
            f.er = std::stod(fields[7]);
            f.rtr_ratio = std::stod(fields[8]);
            f.energy = std::stod(fields[9]);
            f.time = std::stod(fields[10]);
            f.sent_packet_number = std::stod(fields[11]);
            f.dst_port_cat = std::stod(fields[12]);
            f.src_port_cat = std::stod(fields[13]);
            f.flag_cat = std::stod(fields[14]);
            f.trace_type_cat = std::stod(fields[15]);
            f.label = std::stoi(fields[16]);
        } catch (const std::exception& e) {
            throw data_error("dataset row " + std::to_string(idx) + ": " + e.what());
        }
        rows.push_back(f);
        ++idx;
    }
    return rows;
}

}  // namespace aidps::featurize
