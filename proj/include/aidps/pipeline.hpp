#pragma once

#include <deque>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "aidps/anomaly.hpp"
#include "aidps/common.hpp"
#include "aidps/drift.hpp"
#include "aidps/featurize.hpp"
#include "aidps/metrics.hpp"
#include "aidps/stream_learn.hpp"

namespace aidps::pipeline {

enum class VerdictStage { gate_normal, arf_attack, ensemble_outlier, ensemble_inlier };

inline const char* stage_name(VerdictStage s) {
    switch (s) {
        case VerdictStage::gate_normal: return "gate_normal";
        case VerdictStage::arf_attack: return "arf_attack";
        case VerdictStage::ensemble_outlier: return "ensemble_outlier";
        case VerdictStage::ensemble_inlier: return "ensemble_inlier";
    }
    return "gate_normal";
}

struct FinalVerdict {
    bool attack = false;
    VerdictStage stage = VerdictStage::gate_normal;
    std::optional<int> attack_class;  // 1..3 when supplied by ARF
};

// Pure decision table: gate verdict, then ARF class, then the bagged
// ensemble re-check of ARF-normal instances.
inline FinalVerdict final_decision(int gate_verdict, std::optional<int> arf_label,
                                   std::optional<int> ensemble_verdict) {
    if (gate_verdict == +1) {
        if (arf_label || ensemble_verdict)
            throw data_error("final_decision: gate-normal rows take no ARF/ensemble input");
        return {false, VerdictStage::gate_normal, std::nullopt};
    }
    if (gate_verdict != -1) throw data_error("final_decision: gate verdict must be +1 or -1");
    if (!arf_label) throw data_error("final_decision: ARF label required for gate anomalies");
    if (*arf_label != 0) {
        if (ensemble_verdict) throw data_error("final_decision: ensemble input on an ARF attack");
        return {true, VerdictStage::arf_attack, *arf_label};
    }
    if (!ensemble_verdict) throw data_error("final_decision: ensemble verdict required");
    if (*ensemble_verdict == -1) return {true, VerdictStage::ensemble_outlier, std::nullopt};
    return {false, VerdictStage::ensemble_inlier, std::nullopt};
}

struct PipelineConfig {
    double train_fraction = 0.7;
    double nu = 0.01;
    double gamma = 0.3;
    double ensemble_gamma = 0.05;  // wider kernel so the re-check tolerates drifted normals
    int ensemble_size = 11;
    std::size_t gate_train_cap = 3000;      // deterministic stride subsample caps
    std::size_t ensemble_train_cap = 1500;
    bool prequential_labels = true;   // ARF keeps learning on gated rows
    bool ensemble_always = false;     // run the ensemble even on ARF attacks
    bool kdq_enabled = true;
    drift::KdqParams kdq;
    stream_learn::ArfConfig arf;
    std::uint64_t seed = 1;
};

struct PipelineModels {
    anomaly::OcsvmModel gate;
    anomaly::OcsvmEnsemble ensemble;
    stream_learn::AdaptiveRandomForest forest;
};

struct Counters {
    long processed = 0;
    long anomalies = 0;
    long attacks = 0;
    long triggers = 0;
};

struct DriftEvent {
    std::size_t index = 0;
    std::string detector;
    std::string kind;
    std::string detail;
};

class PipelineState {
  public:
    PipelineState(PipelineModels models, const PipelineConfig& cfg)
        : models_(std::move(models)), cfg_(cfg) {}

    FinalVerdict step(const featurize::FeatureVector& fv, std::optional<int> y) {
        const auto x = to_sample(fv);
        ++counters_.processed;

        const int gate = anomaly::ocsvm_decision(models_.gate, x).verdict;
        FinalVerdict v;
        if (gate == +1) {
            v = final_decision(+1, std::nullopt, std::nullopt);
        } else {
            ++counters_.anomalies;
            const int arf_label = models_.forest.predict(x);
            if (y) models_.forest.learn_one(x, *y);
            std::optional<int> ens;
            if (arf_label == 0 || cfg_.ensemble_always)
                ens = anomaly::ensemble_vote(models_.ensemble, x);
            if (arf_label != 0) {
                v = final_decision(-1, arf_label, std::nullopt);
                if (ens && *ens == -1) v.stage = VerdictStage::arf_attack;  // class wins
            } else {
                v = final_decision(-1, 0, ens);
            }
        }
        if (v.attack) {
            ++counters_.attacks;
            ++counters_.triggers;
        }
        if (cfg_.kdq_enabled) update_kdq(x);
        return v;
    }

    const Counters& counters() const { return counters_; }
    const std::vector<DriftEvent>& drift_events() const { return drift_events_; }
    const PipelineModels& models() const { return models_; }
    PipelineModels& models() { return models_; }
    double last_gate_score(const featurize::FeatureVector& fv) const {
        return anomaly::ocsvm_decision(models_.gate, to_sample(fv)).score;
    }

    static anomaly::Sample to_sample(const featurize::FeatureVector& fv) {
        const auto a = fv.values();
        return anomaly::Sample(a.begin(), a.end());
    }

  private:
    PipelineModels models_;
    PipelineConfig cfg_;
    Counters counters_;
    std::vector<DriftEvent> drift_events_;
    std::deque<anomaly::Sample> kdq_buffer_;
    std::optional<drift::KdqTree> kdq_tree_;
    std::size_t kdq_seen_ = 0;

    // Consecutive-window kdqTree scan; a distribution drift acts as a
    // forced warning for the forest and is logged as context.
    void update_kdq(const anomaly::Sample& x) {
        ++kdq_seen_;
        kdq_buffer_.push_back(x);
        if (kdq_buffer_.size() < cfg_.kdq.window_size) return;
        std::vector<anomaly::Sample> window(kdq_buffer_.begin(), kdq_buffer_.end());
        kdq_buffer_.clear();
        if (!kdq_tree_) {
            kdq_tree_ = drift::KdqTree(window, cfg_.kdq);
            return;
        }
        auto sig = kdq_tree_->detect(window, cfg_.seed + kdq_seen_);
        if (sig.kind == drift::SignalKind::drift) {
            drift_events_.push_back({kdq_seen_ - 1, "kdqtree", "drift", sig.detail});
            models_.forest.forced_warning();
        }
        kdq_tree_ = drift::KdqTree(window, cfg_.kdq);
    }
};

namespace detail {

inline std::vector<anomaly::Sample> normal_rows(const std::vector<featurize::FeatureVector>& rows,
                                                std::size_t cap) {
    std::vector<anomaly::Sample> out;
    for (const auto& r : rows)
        if (r.label == 0) out.push_back(PipelineState::to_sample(r));
    if (cap > 0 && out.size() > cap) {
        std::vector<anomaly::Sample> thin;
        const double stride = static_cast<double>(out.size()) / cap;
        for (std::size_t i = 0; i < cap; ++i)
            thin.push_back(out[static_cast<std::size_t>(i * stride)]);
        out = std::move(thin);
    }
    return out;
}

}  // namespace detail

inline PipelineModels train_pipeline(const std::vector<featurize::FeatureVector>& train_rows,
                                     const PipelineConfig& cfg) {
    const auto gate_data = detail::normal_rows(train_rows, cfg.gate_train_cap);
    if (gate_data.size() < 2) throw data_error("train_pipeline: not enough normal rows");
    const auto ens_data = detail::normal_rows(train_rows, cfg.ensemble_train_cap);

    PipelineModels m{anomaly::train_ocsvm(gate_data, cfg.nu, cfg.gamma),
                     anomaly::train_bagged_ensemble(ens_data, cfg.ensemble_size, cfg.nu,
                                                    cfg.ensemble_gamma, cfg.seed),
                     stream_learn::AdaptiveRandomForest(cfg.arf)};
    for (const auto& r : train_rows)
        m.forest.learn_one(PipelineState::to_sample(r), r.label);
    return m;
}

struct VerdictRecord {
    std::size_t index = 0;
    bool attack = false;
    VerdictStage stage = VerdictStage::gate_normal;
    std::optional<int> attack_class;
};

struct RunReport {
    metrics::MetricsReport binary;     // attack-vs-normal on the evaluated rows
    std::vector<VerdictRecord> verdicts;
    std::vector<DriftEvent> drift_events;
    std::vector<std::size_t> trigger_indices;
    Counters counters;
};

inline RunReport evaluate_pipeline(PipelineModels models,
                                   const std::vector<featurize::FeatureVector>& eval_rows,
                                   const PipelineConfig& cfg) {
    if (eval_rows.empty()) throw data_error("evaluate_pipeline: empty evaluation set");
    PipelineState state(std::move(models), cfg);
    RunReport rep;
    std::vector<int> preds, truths;
    std::vector<double> scores;
    for (std::size_t i = 0; i < eval_rows.size(); ++i) {
        const auto& fv = eval_rows[i];
        scores.push_back(-state.last_gate_score(fv));
        const auto v =
            state.step(fv, cfg.prequential_labels ? std::optional<int>(fv.label) : std::nullopt);
        rep.verdicts.push_back({i, v.attack, v.stage, v.attack_class});
        if (v.attack) rep.trigger_indices.push_back(i);
        preds.push_back(v.attack ? 1 : 0);
        truths.push_back(fv.label > 0 ? 1 : 0);
    }
    rep.binary = metrics::compute_metrics(preds, truths, 1);
    bool both = false;
    for (int t : truths)
        if (t != truths.front()) both = true;
    if (both) rep.binary.auc = metrics::auc_score(scores, truths);
    rep.drift_events = state.drift_events();
    rep.counters = state.counters();
    return rep;
}

// Chronological split, train on the head, prequential evaluation on the tail.
inline RunReport run_pipeline(const std::vector<featurize::FeatureVector>& rows,
                              const PipelineConfig& cfg) {
    if (rows.size() < 10) throw data_error("run_pipeline: dataset too small");
    const std::size_t split = static_cast<std::size_t>(cfg.train_fraction * rows.size());
    std::vector<featurize::FeatureVector> train(rows.begin(), rows.begin() + split);
    std::vector<featurize::FeatureVector> test(rows.begin() + split, rows.end());
    auto models = train_pipeline(train, cfg);
    return evaluate_pipeline(std::move(models), test, cfg);
}

}  // namespace aidps::pipeline
