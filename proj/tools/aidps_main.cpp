// aidps command-line workbench: simulation, featurization, model
// training, the hybrid detection pipeline, drift tooling, the key-reset
// demo and report emission.

#include <deque>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "aidps/anomaly.hpp"
#include "aidps/common.hpp"
#include "aidps/drift.hpp"
#include "aidps/featurize.hpp"
#include "aidps/ips.hpp"
#include "aidps/metrics.hpp"
#include "aidps/pipeline.hpp"
#include "aidps/sim.hpp"
#include "aidps/stream_learn.hpp"
#include "aidps/trace.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::vector<aidps::featurize::FeatureVector> load_dataset(const std::string& path) {
    return aidps::featurize::dataset_rows_from_csv(aidps::read_text_file(path));
}

std::vector<aidps::anomaly::Sample> dataset_samples(
    const std::vector<aidps::featurize::FeatureVector>& rows) {
    std::vector<aidps::anomaly::Sample> xs;
    xs.reserve(rows.size());
    for (const auto& r : rows) xs.push_back(aidps::pipeline::PipelineState::to_sample(r));
    return xs;
}

std::vector<aidps::anomaly::Sample> normal_samples(
    const std::vector<aidps::featurize::FeatureVector>& rows, std::size_t cap) {
    std::vector<aidps::anomaly::Sample> xs;
    for (const auto& r : rows)
        if (r.label == 0) xs.push_back(aidps::pipeline::PipelineState::to_sample(r));
    if (xs.empty()) throw aidps::data_error("dataset has no label-0 rows to train on");
    if (cap > 0 && xs.size() > cap) {
        std::vector<aidps::anomaly::Sample> thin;
        const double stride = static_cast<double>(xs.size()) / cap;
        for (std::size_t i = 0; i < cap; ++i)
            thin.push_back(xs[static_cast<std::size_t>(i * stride)]);
        xs = std::move(thin);
    }
    return xs;
}

json metrics_json(const aidps::metrics::MetricsReport& m) {
    json j;
    j["accuracy"] = m.accuracy;
    j["precision"] = m.precision;
    j["recall"] = m.recall;
    j["f1"] = m.f1;
    j["kappa"] = m.kappa;
    j["mcc"] = m.mcc;
    j["tpr"] = m.tpr;
    j["fnr"] = m.fnr;
    j["tnr"] = m.tnr;
    j["fpr"] = m.fpr;
    j["auc"] = m.auc;
    j["n"] = m.n;
    return j;
}

// ---------------------------------------------------------------------------

struct SimArgs {
    std::string config_path, out;
    int nodes = 16;
    std::string attack = "none";
    int malicious_count = 0;
    double duration = 600.0, interval = 0.1;
    std::uint64_t seed = 1;
};

int cmd_sim(const SimArgs& a) {
    aidps::sim::SimConfig cfg;
    if (!a.config_path.empty()) {
        cfg = aidps::sim::parse_config_text(aidps::read_text_file(a.config_path));
    } else {
        cfg = aidps::sim::scenario_config(aidps::sim::attack_from_name(a.attack), a.nodes, a.seed,
                                          a.malicious_count);
        cfg.sim_duration = a.duration;
        cfg.data_interval = a.interval;
    }
    const auto res = aidps::sim::run_simulation(cfg);
    aidps::write_text_file(a.out, aidps::traces_to_csv(res.trace));

    json meta;
    meta["attack"] = aidps::sim::attack_name(cfg.attack_kind);
    meta["malicious"] = std::vector<int>(cfg.malicious_ids.begin(), cfg.malicious_ids.end());
    meta["node_count"] = cfg.node_count;
    meta["seed"] = cfg.rng_seed;
    aidps::write_text_file(a.out + ".meta.json", meta.dump(2) + "\n");

    std::cout << "wrote " << res.trace.size() << " trace rows to " << a.out << "\n";
    return 0;
}

struct FeaturizeArgs {
    std::vector<std::string> traces;
    std::string mode = "d1";
    std::string out;
};

int cmd_featurize(const FeaturizeArgs& a) {
    std::vector<aidps::featurize::ScenarioTrace> scenarios;
    for (const auto& path : a.traces) {
        aidps::featurize::ScenarioTrace sc;
        sc.records = aidps::traces_from_csv(aidps::read_text_file(path));
        const json meta = json::parse(aidps::read_text_file(path + ".meta.json"));
        sc.scenario = aidps::sim::attack_from_name(meta.at("attack").get<std::string>());
        for (int id : meta.at("malicious")) sc.malicious.insert(id);
        scenarios.push_back(std::move(sc));
    }
    const auto mode = a.mode == "d1" ? aidps::featurize::DatasetMode::d1
                      : a.mode == "d2" ? aidps::featurize::DatasetMode::d2
                                       : throw aidps::config_error("mode must be d1 or d2");
    const auto ds = aidps::featurize::assemble_dataset(scenarios, mode);
    aidps::write_text_file(a.out, aidps::featurize::dataset_to_csv(ds));
    aidps::write_text_file(a.out + ".encoder.json", ds.encoder.to_json().dump(2) + "\n");
    std::cout << "wrote " << ds.rows.size() << " dataset rows to " << a.out << "\n";
    return 0;
}

struct TrainAnomalyArgs {
    std::string dataset, kind = "ocsvm", out;
    double nu = 0.01, gamma = 0.3, contamination = 0.1;
    int members = 11, trees = 100;
    std::size_t cap = 3000;
    std::uint64_t seed = 1;
};

int cmd_train_anomaly(const TrainAnomalyArgs& a) {
    const auto rows = load_dataset(a.dataset);
    const auto xs = normal_samples(rows, a.cap);
    long outliers = 0;
    if (a.kind == "ocsvm") {
        const auto m = aidps::anomaly::train_ocsvm(xs, a.nu, a.gamma);
        for (const auto& x : xs)
            if (aidps::anomaly::ocsvm_decision(m, x).verdict == -1) ++outliers;
        if (!a.out.empty()) aidps::write_text_file(a.out, aidps::anomaly::ocsvm_save(m));
    } else if (a.kind == "ensemble") {
        const auto e = aidps::anomaly::train_bagged_ensemble(xs, a.members, a.nu, a.gamma, a.seed);
        for (const auto& x : xs)
            if (aidps::anomaly::ensemble_vote(e, x) == -1) ++outliers;
        if (!a.out.empty()) aidps::write_text_file(a.out, aidps::anomaly::ensemble_save(e));
    } else if (a.kind == "iforest") {
        const auto m = aidps::anomaly::train_iforest(xs, a.trees, 256, a.contamination, a.seed);
        for (const auto& x : xs)
            if (aidps::anomaly::iforest_verdict(m, x) == -1) ++outliers;
        if (!a.out.empty())
            throw aidps::config_error("isolation forest persistence is not supported");
    } else {
        throw aidps::config_error("kind must be ocsvm, ensemble or iforest");
    }
    std::cout << "trained " << a.kind << " on " << xs.size() << " normal rows; "
              << "training outlier fraction " << static_cast<double>(outliers) / xs.size() << "\n";
    return 0;
}

struct TrainForestArgs {
    std::string dataset, detector = "adwin", out;
    int trees = 50;
    double delta_warning = 0.01, delta_drift = 0.001, split_confidence = 0.001;
    std::size_t window = 1000;
    std::uint64_t seed = 1;
};

int cmd_train_forest(const TrainForestArgs& a) {
    const auto rows = load_dataset(a.dataset);
    const auto xs = dataset_samples(rows);
    std::vector<int> ys;
    int n_classes = 2;
    for (const auto& r : rows) {
        ys.push_back(r.label);
        n_classes = std::max(n_classes, r.label + 1);
    }
    aidps::stream_learn::ArfConfig cfg;
    cfg.n_trees = a.trees;
    cfg.n_classes = n_classes;
    cfg.detector = aidps::stream_learn::detector_from_name(a.detector);
    cfg.delta_warning = a.delta_warning;
    cfg.delta_drift = a.delta_drift;
    cfg.split_confidence = a.split_confidence;
    cfg.seed = a.seed;
    aidps::stream_learn::AdaptiveRandomForest forest(cfg);
    const auto points =
        aidps::stream_learn::prequential_evaluate(xs, ys, forest, a.window, xs.size());
    if (!a.out.empty()) aidps::write_text_file(a.out, forest.save());
    std::cout << "prequential accuracy " << points.back().running_accuracy << " (windowed "
              << points.back().windowed_accuracy << ") over " << xs.size() << " rows\n";
    return 0;
}

struct RunPipelineArgs {
    std::string dataset, eval_dataset, mode = "train-eval", out;
    int trees = 50;
    double train_fraction = 0.7;
    bool no_kdq = false;
    std::string detector = "adwin";
    std::uint64_t seed = 1;
};

int cmd_run_pipeline(const RunPipelineArgs& a) {
    if (a.mode != "train-eval" && a.mode != "detect")
        throw aidps::config_error("mode must be train-eval or detect");
    if (a.mode == "detect" && a.eval_dataset.empty())
        throw aidps::config_error("detect mode requires --eval-dataset");

    const auto rows = load_dataset(a.dataset);
    aidps::pipeline::PipelineConfig cfg;
    cfg.seed = a.seed;
    cfg.train_fraction = a.train_fraction;
    cfg.kdq_enabled = !a.no_kdq;
    cfg.arf.n_trees = a.trees;
    cfg.arf.seed = a.seed;
    cfg.arf.detector = aidps::stream_learn::detector_from_name(a.detector);
    cfg.prequential_labels = a.mode == "train-eval";
    int n_classes = 2;
    for (const auto& r : rows) n_classes = std::max(n_classes, r.label + 1);
    cfg.arf.n_classes = n_classes;

    aidps::pipeline::RunReport rep;
    std::vector<aidps::featurize::FeatureVector> eval_rows;
    if (!a.eval_dataset.empty()) {
        eval_rows = load_dataset(a.eval_dataset);
        auto models = aidps::pipeline::train_pipeline(rows, cfg);
        rep = aidps::pipeline::evaluate_pipeline(std::move(models), eval_rows, cfg);
    } else {
        const std::size_t split = static_cast<std::size_t>(cfg.train_fraction * rows.size());
        eval_rows.assign(rows.begin() + split, rows.end());
        rep = aidps::pipeline::run_pipeline(rows, cfg);
    }

    fs::create_directories(a.out);
    std::string verdicts, drifts, triggers;
    for (const auto& v : rep.verdicts) {
        json j;
        j["index"] = v.index;
        j["stage"] = aidps::pipeline::stage_name(v.stage);
        j["label"] = v.attack ? "attack" : "normal";
        j["attack_class"] = v.attack_class ? json(*v.attack_class) : json(nullptr);
        j["truth"] = eval_rows[v.index].label;
        verdicts += j.dump() + "\n";
    }
    for (const auto& d : rep.drift_events) {
        json j;
        j["index"] = d.index;
        j["detector"] = d.detector;
        j["kind"] = d.kind;
        j["detail"] = d.detail;
        drifts += j.dump() + "\n";
    }
    for (std::size_t i : rep.trigger_indices) triggers += json{{"index", i}}.dump() + "\n";
    aidps::write_text_file((fs::path(a.out) / "verdicts.jsonl").string(), verdicts);
    aidps::write_text_file((fs::path(a.out) / "drift_events.jsonl").string(), drifts);
    aidps::write_text_file((fs::path(a.out) / "triggers.jsonl").string(), triggers);

    json mj = metrics_json(rep.binary);
    mj["counters"] = {{"processed", rep.counters.processed},
                      {"anomalies", rep.counters.anomalies},
                      {"attacks", rep.counters.attacks},
                      {"triggers", rep.counters.triggers}};
    aidps::write_text_file((fs::path(a.out) / "metrics.json").string(), mj.dump(2) + "\n");

    std::cout << "evaluated " << rep.verdicts.size() << " rows: tpr " << rep.binary.tpr << ", fpr "
              << rep.binary.fpr << ", accuracy " << rep.binary.accuracy << "\n";
    return 0;
}

struct DriftScanArgs {
    std::string input, column = "0", detector = "adwin", out;
};

int cmd_drift_scan(const DriftScanArgs& a) {
    const auto text = aidps::read_text_file(a.input);
    std::stringstream ss(text);
    std::string line;
    if (!std::getline(ss, line)) throw aidps::data_error("empty input file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto header = aidps::split_csv_line(line);
    int col = -1;
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == a.column) col = static_cast<int>(i);
    if (col < 0) {
        try {
            col = std::stoi(a.column);
        } catch (const std::exception&) {
            throw aidps::config_error("column '" + a.column + "' not found in header");
        }
        if (col < 0 || col >= static_cast<int>(header.size()))
            throw aidps::config_error("column index out of range");
    }
    std::vector<double> values;
    std::size_t row = 0;
    while (std::getline(ss, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto fields = aidps::split_csv_line(line);
        if (col >= static_cast<int>(fields.size()))
            throw aidps::data_error("row " + std::to_string(row) + ": too few columns");
        try {
            values.push_back(std::stod(fields[col]));
        } catch (const std::exception&) {
            throw aidps::data_error("row " + std::to_string(row) + ": non-numeric value");
        }
        ++row;
    }

    std::optional<aidps::drift::Adwin> adwin;
    std::optional<aidps::drift::Ddm> ddm;
    std::optional<aidps::drift::Kswin> kswin;
    std::optional<aidps::drift::PageHinkley> ph;
    const auto kind = aidps::stream_learn::detector_from_name(a.detector);
    switch (kind) {
        case aidps::stream_learn::DetectorKind::adwin: adwin.emplace(0.001, 0.01); break;
        case aidps::stream_learn::DetectorKind::ddm: ddm.emplace(); break;
        case aidps::stream_learn::DetectorKind::kswin: kswin.emplace(100, 30, 0.005, 1); break;
        case aidps::stream_learn::DetectorKind::page_hinkley: ph.emplace(50.0, 0.005); break;
    }
    auto update = [&](double v) {
        if (adwin) return adwin->update(v);
        if (ddm) return ddm->update(static_cast<int>(v));
        if (kswin) return kswin->update(v);
        return ph->update(v);
    };
    std::string report;
    for (std::size_t i = 0; i < values.size(); ++i) {
        const auto sig = update(values[i]);
        if (sig.kind == aidps::drift::SignalKind::stable) continue;
        json j;
        j["index"] = i;
        j["detector"] = a.detector;
        j["kind"] = sig.kind == aidps::drift::SignalKind::drift ? "drift" : "warning";
        j["detail"] = sig.detail;
        report += j.dump() + "\n";
    }
    if (a.out.empty())
        std::cout << report;
    else
        aidps::write_text_file(a.out, report);
    return 0;
}

struct SynthStreamArgs {
    std::string kind = "abrupt", out;
    std::size_t length = 4000, period = 0;
    std::uint64_t seed = 1;
};

int cmd_synth_stream(const SynthStreamArgs& a) {
    aidps::drift::DriftShape shape;
    if (a.kind == "abrupt") shape = aidps::drift::DriftShape::abrupt;
    else if (a.kind == "gradual") shape = aidps::drift::DriftShape::gradual;
    else if (a.kind == "incremental") shape = aidps::drift::DriftShape::incremental;
    else if (a.kind == "recurring") shape = aidps::drift::DriftShape::recurring;
    else throw aidps::config_error("kind must be abrupt, gradual, incremental or recurring");

    const auto s = aidps::drift::synth_drift_stream(shape, a.length, a.seed, a.period);
    std::string csv = "index,value\n";
    for (std::size_t i = 0; i < s.values.size(); ++i)
        csv += std::to_string(i) + "," + aidps::format_fixed(s.values[i]) + "\n";
    aidps::write_text_file(a.out, csv);
    json j;
    j["change_points"] = s.change_points;
    std::cout << j.dump() << "\n";
    return 0;
}

struct SweepArgs {
    std::string dataset, out;
    std::size_t limit = 8000;
    std::uint64_t seed = 1;
};

int cmd_sweep(const SweepArgs& a) {
    auto rows = load_dataset(a.dataset);
    if (a.limit > 0 && rows.size() > a.limit) {
        // deterministic stride subsample preserves chronology and class mix
        std::vector<aidps::featurize::FeatureVector> thin;
        const double stride = static_cast<double>(rows.size()) / a.limit;
        for (std::size_t i = 0; i < a.limit; ++i)
            thin.push_back(rows[static_cast<std::size_t>(i * stride)]);
        rows = std::move(thin);
    }
    const auto xs = dataset_samples(rows);
    std::vector<int> ys;
    int n_classes = 2;
    for (const auto& r : rows) {
        ys.push_back(r.label);
        n_classes = std::max(n_classes, r.label + 1);
    }
    const std::size_t split = xs.size() * 7 / 10;
    if (split == 0 || split == xs.size()) throw aidps::data_error("dataset too small to sweep");

    const std::vector<int> tree_grid = {20, 40, 60, 80, 100};
    const std::vector<std::string> detectors = {"adwin", "ddm", "kswin", "page_hinkley"};
    std::string csv = "n_trees,detector,tpr,accuracy\n";
    for (int n_trees : tree_grid) {
        for (const auto& det : detectors) {
            aidps::stream_learn::ArfConfig cfg;
            cfg.n_trees = n_trees;
            cfg.n_classes = n_classes;
            cfg.detector = aidps::stream_learn::detector_from_name(det);
            cfg.seed = a.seed;
            aidps::stream_learn::AdaptiveRandomForest forest(cfg);
            for (std::size_t i = 0; i < split; ++i) forest.learn_one(xs[i], ys[i]);
            long tp = 0, pos = 0, correct = 0;
            for (std::size_t i = split; i < xs.size(); ++i) {
                const int pred = forest.predict(xs[i]);
                if (pred == ys[i]) ++correct;
                if (ys[i] > 0) {
                    ++pos;
                    if (pred > 0) ++tp;
                }
            }
            const double tpr = pos ? static_cast<double>(tp) / pos : 0.0;
            const double acc = static_cast<double>(correct) / (xs.size() - split);
            csv += std::to_string(n_trees) + "," + det + "," + aidps::format_fixed(tpr) + "," +
                   aidps::format_fixed(acc) + "\n";
            std::cout << n_trees << " trees, " << det << ": tpr " << tpr << ", accuracy " << acc
                      << "\n";
        }
    }
    aidps::write_text_file(a.out, csv);
    return 0;
}

// ---------------------------------------------------------------------------
// ips-demo scripted scenarios over an in-process loopback.

struct ScenarioOutcome {
    std::string name;
    bool completed = false;
    bool keys_match = false;
    std::string error;
};

ScenarioOutcome run_ips_scenario(const std::string& name, std::uint64_t seed) {
    namespace ips = aidps::ips;
    auto [buoy, node] = ips::make_session_pair(seed);
    buoy.registry[7] = {-75.0, -55.0};
    const double rssi = -65.0;
    ScenarioOutcome out{name, false, false, ""};
    double now = 1000.0;

    const double m1_rssi = name == "out-of-range-rssi" ? -30.0 : rssi;
    auto m1 = ips::buoy_initiate(buoy, 7, m1_rssi, now);
    if (!m1.ok()) {
        out.error = m1.error;
        return out;
    }
    if (name == "tampered-m1") m1.value->ciphertext[8] ^= 0x01;

    const double node_now = name == "stale-t1" ? now + 120.0 : now + 1.0;
    auto m2 = ips::node_handle_m1(node, *m1.value, rssi, node_now);
    if (!m2.ok()) {
        ips::node_abort_pending(node);
        out.error = m2.error;
        return out;
    }
    if (name == "tampered-m2") m2.value->ciphertext[8] ^= 0x01;

    const double buoy_now = name == "stale-t2" ? node_now + 120.0 : node_now + 1.0;
    auto key = ips::buoy_handle_m2(buoy, 7, *m2.value, buoy_now);
    if (!key.ok()) {
        ips::node_abort_pending(node);
        out.error = key.error;
        return out;
    }
    ips::node_install_pending(node);
    out.completed = true;
    out.keys_match = node.session_key && node.session_key->key == key.value->key;

    if (name == "replayed-m2") {
        auto replay = ips::buoy_handle_m2(buoy, 7, *m2.value, buoy_now + 1.0);
        out.completed = false;
        out.error = replay.ok() ? "replay accepted (BUG)" : replay.error;
    }
    return out;
}

struct IpsDemoArgs {
    std::uint64_t seed = 1;
    std::string out;
};

int cmd_ips_demo(const IpsDemoArgs& a) {
    const std::vector<std::string> scenarios = {"honest",      "stale-t1",  "stale-t2",
                                                "tampered-m1", "tampered-m2", "replayed-m2",
                                                "out-of-range-rssi"};
    json report = json::array();
    std::cout << "scenario            outcome    keys_match  error\n";
    for (const auto& s : scenarios) {
        const auto o = run_ips_scenario(s, a.seed);
        std::cout << s;
        for (std::size_t i = s.size(); i < 20; ++i) std::cout << ' ';
        std::cout << (o.completed ? "completed" : "aborted  ") << "  "
                  << (o.keys_match ? "yes" : "no ") << "        " << o.error << "\n";
        report.push_back({{"scenario", s},
                          {"completed", o.completed},
                          {"keys_match", o.keys_match},
                          {"error", o.error}});
    }
    if (!a.out.empty()) aidps::write_text_file(a.out, report.dump(2) + "\n");
    return 0;
}

struct ReportArgs {
    std::string run_dir;
    std::size_t window = 500;
};

int cmd_report(const ReportArgs& a) {
    const fs::path dir(a.run_dir);
    const json m = json::parse(aidps::read_text_file((dir / "metrics.json").string()));
    const auto verdict_text = aidps::read_text_file((dir / "verdicts.jsonl").string());

    // windowed binary accuracy time series from the verdict log
    std::string series = "index,windowed_accuracy\n";
    std::deque<int> recent;
    long recent_correct = 0;
    std::stringstream ss(verdict_text);
    std::string line;
    long drift_count = 0, trigger_count = 0;
    while (std::getline(ss, line)) {
        if (line.empty()) continue;
        const json v = json::parse(line);
        const int pred = v.at("label").get<std::string>() == "attack" ? 1 : 0;
        const int truth = v.at("truth").get<int>() > 0 ? 1 : 0;
        const int ok = pred == truth ? 1 : 0;
        recent.push_back(ok);
        recent_correct += ok;
        if (recent.size() > a.window) {
            recent_correct -= recent.front();
            recent.pop_front();
        }
        series += std::to_string(v.at("index").get<long>()) + "," +
                  aidps::format_fixed(static_cast<double>(recent_correct) / recent.size()) + "\n";
    }
    {
        std::stringstream ds(aidps::read_text_file((dir / "drift_events.jsonl").string()));
        while (std::getline(ds, line))
            if (!line.empty()) ++drift_count;
        std::stringstream ts(aidps::read_text_file((dir / "triggers.jsonl").string()));
        while (std::getline(ts, line))
            if (!line.empty()) ++trigger_count;
    }

    std::string md = "# Pipeline run report\n\n";
    md += "| Accuracy | Precision | Recall | F1 | AUC | Kappa | MCC | TPR | FPR |\n";
    md += "|---|---|---|---|---|---|---|---|---|\n| ";
    for (const char* k : {"accuracy", "precision", "recall", "f1", "auc", "kappa", "mcc", "tpr",
                          "fpr"})
        md += aidps::format_fixed(m.at(k).get<double>(), 4) + " | ";
    md += "\n\nRows evaluated: " + std::to_string(m.at("n").get<long>()) + "\n";
    md += "Drift events: " + std::to_string(drift_count) + "\n";
    md += "IPS triggers: " + std::to_string(trigger_count) + "\n";
    md += "\nTime series: `accuracy_timeseries.csv` (windowed accuracy, window " +
          std::to_string(a.window) + ").\n";
    aidps::write_text_file((dir / "report.md").string(), md);
    aidps::write_text_file((dir / "accuracy_timeseries.csv").string(), series);
    std::cout << "wrote report.md and accuracy_timeseries.csv to " << a.run_dir << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"aidps: underwater-network intrusion detection workbench"};
    app.require_subcommand(1);

    SimArgs sim_a;
    auto* sim = app.add_subcommand("sim", "run the UW-ASN simulator and write a trace CSV");
    sim->add_option("--config", sim_a.config_path, "key=value config file (overrides flags)");
    sim->add_option("--nodes", sim_a.nodes, "node count");
    sim->add_option("--attack", sim_a.attack, "none|blackhole|grayhole|flooding");
    sim->add_option("--malicious-count", sim_a.malicious_count, "number of malicious nodes");
    sim->add_option("--duration", sim_a.duration, "simulated seconds");
    sim->add_option("--interval", sim_a.interval, "data packet interval (s)");
    sim->add_option("--seed", sim_a.seed, "rng seed");
    sim->add_option("--out", sim_a.out, "trace csv path")->required();

    FeaturizeArgs feat_a;
    auto* feat = app.add_subcommand("featurize", "derive a labelled dataset from trace CSVs");
    feat->add_option("--trace", feat_a.traces, "trace csv (repeatable; needs .meta.json sidecar)")
        ->required();
    feat->add_option("--mode", feat_a.mode, "d1 (multiclass) or d2 (binary)");
    feat->add_option("--out", feat_a.out, "dataset csv path")->required();

    TrainAnomalyArgs an_a;
    auto* an = app.add_subcommand("train-anomaly", "train an anomaly detector on normal rows");
    an->add_option("--dataset", an_a.dataset, "dataset csv")->required();
    an->add_option("--kind", an_a.kind, "ocsvm|ensemble|iforest");
    an->add_option("--nu", an_a.nu, "ocsvm nu");
    an->add_option("--gamma", an_a.gamma, "rbf gamma");
    an->add_option("--members", an_a.members, "ensemble size (odd)");
    an->add_option("--trees", an_a.trees, "isolation forest trees");
    an->add_option("--contamination", an_a.contamination, "isolation forest contamination");
    an->add_option("--cap", an_a.cap, "training row cap (stride subsample)");
    an->add_option("--seed", an_a.seed, "rng seed");
    an->add_option("--out", an_a.out, "model output path");

    TrainForestArgs tf_a;
    auto* tf = app.add_subcommand("train-forest", "prequential ARF training");
    tf->add_option("--dataset", tf_a.dataset, "dataset csv")->required();
    tf->add_option("--trees", tf_a.trees, "n_trees");
    tf->add_option("--detector", tf_a.detector, "adwin|ddm|kswin|page_hinkley");
    tf->add_option("--delta-warning", tf_a.delta_warning, "warning confidence");
    tf->add_option("--delta-drift", tf_a.delta_drift, "drift confidence");
    tf->add_option("--split-confidence", tf_a.split_confidence, "hoeffding split confidence");
    tf->add_option("--window", tf_a.window, "windowed accuracy width");
    tf->add_option("--seed", tf_a.seed, "rng seed");
    tf->add_option("--out", tf_a.out, "model checkpoint path");

    RunPipelineArgs rp_a;
    auto* rp = app.add_subcommand("run-pipeline", "hybrid gate->ARF->ensemble pipeline");
    rp->add_option("--dataset", rp_a.dataset, "training dataset csv")->required();
    rp->add_option("--eval-dataset", rp_a.eval_dataset, "separate evaluation dataset csv");
    rp->add_option("--mode", rp_a.mode, "train-eval (70/30 split) or detect");
    rp->add_option("--trees", rp_a.trees, "ARF n_trees");
    rp->add_option("--detector", rp_a.detector, "per-tree detector kind");
    rp->add_option("--train-fraction", rp_a.train_fraction, "chronological split fraction");
    rp->add_flag("--no-kdq", rp_a.no_kdq, "disable the kdq-tree drift scan");
    rp->add_option("--seed", rp_a.seed, "rng seed");
    rp->add_option("--out", rp_a.out, "output directory")->required();

    DriftScanArgs dsc_a;
    auto* dsc = app.add_subcommand("drift-scan", "run a drift detector over a CSV column");
    dsc->add_option("--input", dsc_a.input, "csv file")->required();
    dsc->add_option("--column", dsc_a.column, "column name or 0-based index");
    dsc->add_option("--detector", dsc_a.detector, "adwin|ddm|kswin|page_hinkley");
    dsc->add_option("--out", dsc_a.out, "jsonl output (default stdout)");

    SynthStreamArgs sy_a;
    auto* sy = app.add_subcommand("synth-stream", "generate a synthetic drift stream");
    sy->add_option("--kind", sy_a.kind, "abrupt|gradual|incremental|recurring");
    sy->add_option("--length", sy_a.length, "stream length");
    sy->add_option("--period", sy_a.period, "recurrence period (recurring kind)");
    sy->add_option("--seed", sy_a.seed, "rng seed");
    sy->add_option("--out", sy_a.out, "csv output path")->required();

    SweepArgs sw_a;
    auto* sw = app.add_subcommand("sweep", "tree-count x detector TPR grid");
    sw->add_option("--dataset", sw_a.dataset, "dataset csv")->required();
    sw->add_option("--limit", sw_a.limit, "row cap (stride subsample, 0 = all)");
    sw->add_option("--seed", sw_a.seed, "rng seed");
    sw->add_option("--out", sw_a.out, "grid csv path")->required();

    IpsDemoArgs ip_a;
    auto* ip = app.add_subcommand("ips-demo", "scripted key-reset protocol scenarios");
    ip->add_option("--seed", ip_a.seed, "rng seed");
    ip->add_option("--out", ip_a.out, "verdict json path");

    ReportArgs rep_a;
    auto* rep = app.add_subcommand("report", "emit report.md from a run-pipeline directory");
    rep->add_option("--run-dir", rep_a.run_dir, "run-pipeline output directory")->required();
    rep->add_option("--window", rep_a.window, "accuracy window");

    try {
        app.parse(argc, argv);
        if (sim->parsed()) return cmd_sim(sim_a);
        if (feat->parsed()) return cmd_featurize(feat_a);
        if (an->parsed()) return cmd_train_anomaly(an_a);
        if (tf->parsed()) return cmd_train_forest(tf_a);
        if (rp->parsed()) return cmd_run_pipeline(rp_a);
        if (dsc->parsed()) return cmd_drift_scan(dsc_a);
        if (sy->parsed()) return cmd_synth_stream(sy_a);
        if (sw->parsed()) return cmd_sweep(sw_a);
        if (ip->parsed()) return cmd_ips_demo(ip_a);
        if (rep->parsed()) return cmd_report(rep_a);
        return 1;
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;  // usage errors
    } catch (const aidps::config_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const aidps::data_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 3;
    }
}
