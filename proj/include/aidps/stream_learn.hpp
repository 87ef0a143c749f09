#pragma once

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <memory>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "aidps/common.hpp"
#include "aidps/drift.hpp"

namespace aidps::stream_learn {

using Sample = std::vector<double>;

inline double hoeffding_bound(double range, double delta, double n) {
    if (n < 1 || delta <= 0 || delta >= 1 || range <= 0)
        throw config_error("hoeffding_bound: invalid parameters");
    return std::sqrt(range * range * std::log(1.0 / delta) / (2.0 * n));
}

// ---------------------------------------------------------------------------
// Hoeffding tree with per-class Gaussian summaries at the leaves and a
// fixed number of candidate thresholds per numeric attribute.

struct HtConfig {
    int n_classes = 2;
    int n_features = 1;
    long grace_period = 50;
    double split_confidence = 0.001;
    double tie_threshold = 0.05;
    int candidate_thresholds = 10;
    int max_depth = 20;
    int max_features = 0;  // 0: all features considered at each split attempt
    std::uint64_t seed = 1;
};

class HoeffdingTree {
  public:
    HoeffdingTree() = default;
    explicit HoeffdingTree(const HtConfig& cfg) : cfg_(cfg), rng_(cfg.seed) {
        nodes_.push_back(make_leaf(cfg_, 0));
    }

    void learn_one(const Sample& x, int y, double weight = 1.0) {
        if (y < 0 || y >= cfg_.n_classes) throw model_error("label outside the configured class set");
        if (static_cast<int>(x.size()) != cfg_.n_features)
            throw model_error("feature dimension mismatch");
        if (weight <= 0) return;
        const int leaf = route(x);
        Node& nd = nodes_[leaf];
        nd.class_counts[y] += weight;
        nd.weight_seen += weight;
        for (int f = 0; f < cfg_.n_features; ++f) {
            auto& g = nd.stats[f * cfg_.n_classes + y];
            g.add(x[f], weight);
            nd.fmin[f] = std::min(nd.fmin[f], x[f]);
            nd.fmax[f] = std::max(nd.fmax[f], x[f]);
        }
        nd.weight_since_attempt += weight;
        if (nd.weight_since_attempt >= cfg_.grace_period && nd.depth < cfg_.max_depth)
            attempt_split(leaf);
    }

    int predict(const Sample& x) const { return predict_dist(x).second; }

    std::pair<std::vector<double>, int> predict_dist(const Sample& x) const {
        const Node& nd = nodes_[route(x)];
        std::vector<double> dist(cfg_.n_classes, 0.0);
        double tot = std::accumulate(nd.class_counts.begin(), nd.class_counts.end(), 0.0);
        if (tot <= 0) {
            // empty leaf: uniform prior, tie resolved toward class 0
            std::fill(dist.begin(), dist.end(), 1.0 / cfg_.n_classes);
            return {dist, 0};
        }
        int best = 0;
        for (int c = 0; c < cfg_.n_classes; ++c) {
            dist[c] = nd.class_counts[c] / tot;
            if (nd.class_counts[c] > nd.class_counts[best]) best = c;
        }
        return {dist, best};
    }

    const HtConfig& config() const { return cfg_; }
    std::size_t node_count() const { return nodes_.size(); }

    std::string save() const {
        std::ostringstream os;
        os.precision(17);
        os << "ht " << nodes_.size() << "\n";
        for (const auto& n : nodes_) {
            os << n.feature << ' ' << n.threshold << ' ' << n.left << ' ' << n.right << ' '
               << n.depth << ' ' << n.weight_seen << ' ' << n.weight_since_attempt << "\n";
            for (double c : n.class_counts) os << c << ' ';
            os << "\n";
            if (n.feature < 0) {
                for (const auto& g : n.stats) os << g.count << ' ' << g.mean << ' ' << g.m2 << ' ';
                os << "\n";
                for (int f = 0; f < cfg_.n_features; ++f) os << n.fmin[f] << ' ' << n.fmax[f] << ' ';
                os << "\n";
            }
        }
        return os.str();
    }

    static HoeffdingTree load(std::istream& in, const HtConfig& cfg) {
        std::string tag;
        std::size_t count = 0;
        in >> tag >> count;
        if (tag != "ht") throw model_error("bad hoeffding tree section");
        HoeffdingTree t(cfg);
        t.nodes_.clear();
        for (std::size_t i = 0; i < count; ++i) {
            Node n = make_leaf(cfg, 0);
            in >> n.feature >> n.threshold >> n.left >> n.right >> n.depth >> n.weight_seen >>
                n.weight_since_attempt;
            for (auto& c : n.class_counts) in >> c;
            if (n.feature < 0) {
                for (auto& g : n.stats) in >> g.count >> g.mean >> g.m2;
                // fmin/fmax of untouched leaves are +-inf, which the
                // stream extractor cannot parse; go through strtod
                auto read_double = [&in]() {
                    std::string tok;
                    in >> tok;
                    return in ? std::stod(tok) : 0.0;
                };
                for (int f = 0; f < cfg.n_features; ++f) {
                    n.fmin[f] = read_double();
                    n.fmax[f] = read_double();
                }
            } else {
                n.stats.clear();
                n.fmin.clear();
                n.fmax.clear();
            }
            t.nodes_.push_back(std::move(n));
        }
        if (!in) throw model_error("truncated hoeffding tree");
        return t;
    }

  private:
    struct Gaussian {
        double count = 0, mean = 0, m2 = 0;
        void add(double v, double w) {
            count += w;
            const double d = v - mean;
            mean += w * d / count;
            m2 += w * d * (v - mean);
        }
        double stddev() const { return count > 1 ? std::sqrt(std::max(m2 / count, 1e-12)) : 0.0; }
        // probability mass below t under the fitted normal
        double cdf(double t) const {
            if (count <= 0) return 0.5;
            const double sd = stddev();
            if (sd < 1e-9) return t >= mean ? 1.0 : 0.0;
            return 0.5 * std::erfc(-(t - mean) / (sd * std::sqrt(2.0)));
        }
    };

    struct Node {
        int feature = -1;  // -1: leaf
        double threshold = 0;
        int left = -1, right = -1;
        int depth = 0;
        std::vector<double> class_counts;
        std::vector<Gaussian> stats;  // [feature * n_classes + class]
        std::vector<double> fmin, fmax;
        double weight_seen = 0, weight_since_attempt = 0;
    };

    HtConfig cfg_;
    rng_t rng_{1};
    std::vector<Node> nodes_;

    static Node make_leaf(const HtConfig& cfg, int depth) {
        Node n;
        n.depth = depth;
        n.class_counts.assign(cfg.n_classes, 0.0);
        n.stats.assign(static_cast<std::size_t>(cfg.n_features) * cfg.n_classes, Gaussian{});
        n.fmin.assign(cfg.n_features, std::numeric_limits<double>::infinity());
        n.fmax.assign(cfg.n_features, -std::numeric_limits<double>::infinity());
        return n;
    }

    int route(const Sample& x) const {
        int idx = 0;
        while (nodes_[idx].feature >= 0)
            idx = x[nodes_[idx].feature] < nodes_[idx].threshold ? nodes_[idx].left
                                                                 : nodes_[idx].right;
        return idx;
    }

    static double entropy(const std::vector<double>& counts) {
        const double tot = std::accumulate(counts.begin(), counts.end(), 0.0);
        if (tot <= 0) return 0;
        double h = 0;
        for (double c : counts)
            if (c > 0) h -= c / tot * std::log2(c / tot);
        return h;
    }

    struct SplitCandidate {
        int feature = -1;
        double threshold = 0;
        double gain = 0;
        std::vector<double> left_counts, right_counts;
    };

    SplitCandidate evaluate_feature(const Node& nd, int f) const {
        SplitCandidate best;
        best.feature = f;
        if (!(nd.fmax[f] > nd.fmin[f])) return best;
        const double h0 = entropy(nd.class_counts);
        const double tot = std::accumulate(nd.class_counts.begin(), nd.class_counts.end(), 0.0);
        for (int k = 1; k <= cfg_.candidate_thresholds; ++k) {
            const double t =
                nd.fmin[f] + (nd.fmax[f] - nd.fmin[f]) * k / (cfg_.candidate_thresholds + 1);
            std::vector<double> lc(cfg_.n_classes, 0.0), rc(cfg_.n_classes, 0.0);
            for (int c = 0; c < cfg_.n_classes; ++c) {
                const auto& g = nd.stats[f * cfg_.n_classes + c];
                const double below = nd.class_counts[c] * g.cdf(t);
                lc[c] = below;
                rc[c] = nd.class_counts[c] - below;
            }
            const double lw = std::accumulate(lc.begin(), lc.end(), 0.0);
            const double rw = tot - lw;
            if (lw < 1e-9 || rw < 1e-9) continue;
            const double gain = h0 - (lw / tot * entropy(lc) + rw / tot * entropy(rc));
            if (gain > best.gain) {
                best.gain = gain;
                best.threshold = t;
                best.left_counts = lc;
                best.right_counts = rc;
            }
        }
        return best;
    }

    void attempt_split(int leaf) {
        Node& nd = nodes_[leaf];
        nd.weight_since_attempt = 0;
        int distinct = 0;
        for (double c : nd.class_counts)
            if (c > 0) ++distinct;
        if (distinct < 2) return;

        std::vector<int> feats(cfg_.n_features);
        std::iota(feats.begin(), feats.end(), 0);
        if (cfg_.max_features > 0 && cfg_.max_features < cfg_.n_features) {
            std::shuffle(feats.begin(), feats.end(), rng_);
            feats.resize(cfg_.max_features);
        }

        SplitCandidate best, second;
        for (int f : feats) {
            SplitCandidate c = evaluate_feature(nd, f);
            if (c.gain > best.gain) {
                second = best;
                best = c;
            } else if (c.gain > second.gain) {
                second = c;
            }
        }
        if (best.feature < 0 || best.gain <= 1e-9) return;

        const double range = std::log2(std::max(2, cfg_.n_classes));
        const double eps = hoeffding_bound(range, cfg_.split_confidence, nd.weight_seen);
        if (best.gain - second.gain > eps || eps < cfg_.tie_threshold) {
            Node l = make_leaf(cfg_, nd.depth + 1);
            Node r = make_leaf(cfg_, nd.depth + 1);
            l.class_counts = best.left_counts;
            r.class_counts = best.right_counts;
            const int li = static_cast<int>(nodes_.size());
            Node& nd2 = nodes_[leaf];
            nd2.feature = best.feature;
            nd2.threshold = best.threshold;
            nd2.left = li;
            nd2.right = li + 1;
            nd2.stats.clear();
            nd2.stats.shrink_to_fit();
            nodes_.push_back(std::move(l));
            nodes_.push_back(std::move(r));
        }
    }
};

// ---------------------------------------------------------------------------
// Two-level (warning/drift) detector wrapper so ARF can swap detector
// families for the parameter sweep.

enum class DetectorKind { adwin, ddm, kswin, page_hinkley };

inline const char* detector_name(DetectorKind k) {
    switch (k) {
        case DetectorKind::adwin: return "adwin";
        case DetectorKind::ddm: return "ddm";
        case DetectorKind::kswin: return "kswin";
        case DetectorKind::page_hinkley: return "page_hinkley";
    }
    return "adwin";
}

inline DetectorKind detector_from_name(const std::string& s) {
    if (s == "adwin") return DetectorKind::adwin;
    if (s == "ddm") return DetectorKind::ddm;
    if (s == "kswin") return DetectorKind::kswin;
    if (s == "page_hinkley" || s == "ph") return DetectorKind::page_hinkley;
    throw config_error("unknown detector kind: " + s);
}

class ErrorDetector {
  public:
    ErrorDetector() = default;
    ErrorDetector(DetectorKind kind, double delta_warning, double delta_drift, std::uint64_t seed)
        : kind_(kind) {
        switch (kind) {
            case DetectorKind::adwin: adwin_.emplace(delta_drift, delta_warning); break;
            case DetectorKind::ddm: ddm_.emplace(); break;
            case DetectorKind::kswin: kswin_.emplace(100, 30, 0.005, seed); break;
            case DetectorKind::page_hinkley: ph_.emplace(50.0, 0.005); break;
        }
    }

    drift::SignalKind update(int error) {
        switch (kind_) {
            case DetectorKind::adwin: return adwin_->update(error).kind;
            case DetectorKind::ddm: return ddm_->update(error).kind;
            case DetectorKind::kswin: return kswin_->update(error).kind;
            case DetectorKind::page_hinkley: return ph_->update(error).kind;
        }
        return drift::SignalKind::stable;
    }

  private:
    DetectorKind kind_ = DetectorKind::adwin;
    std::optional<drift::Adwin> adwin_;
    std::optional<drift::Ddm> ddm_;
    std::optional<drift::Kswin> kswin_;
    std::optional<drift::PageHinkley> ph_;
};

// ---------------------------------------------------------------------------
// Adaptive random forest.

struct ArfConfig {
    int n_trees = 50;
    int n_classes = 4;
    int n_features = 16;
    int max_features = 0;  // 0: ceil(log2(n_features))
    double lambda_poisson = 6.0;
    double delta_warning = 0.01;
    double delta_drift = 0.001;
    double split_confidence = 0.001;
    long grace_period = 50;
    double weight_decay = 0.99;
    DetectorKind detector = DetectorKind::adwin;
    bool detectors_enabled = true;
    bool force_unit_resample = false;  // lambda fixed to multiplicity 1
    int archive_capacity = 4;          // replaced foreground trees, reinstatement off
    std::uint64_t seed = 1;

    int effective_max_features() const {
        if (max_features > 0) return max_features;
        return std::max(1, static_cast<int>(std::ceil(std::log2(std::max(2, n_features)))));
    }
};

struct ArfStepSummary {
    drift::SignalKind kind = drift::SignalKind::stable;
    int warnings = 0;
    int replacements = 0;
};

class AdaptiveRandomForest {
  public:
    AdaptiveRandomForest() = default;
    explicit AdaptiveRandomForest(const ArfConfig& cfg) : cfg_(cfg), rng_(cfg.seed) {
        for (int i = 0; i < cfg_.n_trees; ++i) {
            slots_.emplace_back();
            slots_.back().tree = make_tree();
            slots_.back().detector = make_detector();
            slots_.back().weight = 1.0;
            slots_.back().rng = rng_t(cfg_.seed * 7919 + i);
        }
    }

    int predict(const Sample& x) const { return predict_votes(x).first; }

    // weighted majority, ties toward the lowest label index
    std::pair<int, std::vector<double>> predict_votes(const Sample& x) const {
        std::vector<double> votes(cfg_.n_classes, 0.0);
        for (const auto& s : slots_) votes[s.tree->predict(x)] += s.weight;
        int best = 0;
        for (int c = 1; c < cfg_.n_classes; ++c)
            if (votes[c] > votes[best]) best = c;
        return {best, votes};
    }

    ArfStepSummary learn_one(const Sample& x, int y) {
        ArfStepSummary summary;
        for (auto& s : slots_) {
            const int pred = s.tree->predict(x);
            const int error = pred == y ? 0 : 1;
            s.weight = cfg_.weight_decay * s.weight + (1.0 - cfg_.weight_decay) * (1 - error);

            long mult = 1;
            if (!cfg_.force_unit_resample)
                mult = std::poisson_distribution<long>(cfg_.lambda_poisson)(s.rng);
            if (mult > 0) s.tree->learn_one(x, y, static_cast<double>(mult));
            if (s.background) {
                const int bpred = s.background->predict(x);
                s.background_weight =
                    cfg_.weight_decay * s.background_weight + (1.0 - cfg_.weight_decay) * (bpred == y);
                if (mult > 0) s.background->learn_one(x, y, static_cast<double>(mult));
            }

            if (!cfg_.detectors_enabled) continue;
            const auto sig = s.detector.update(error);
            if (sig == drift::SignalKind::warning) {
                ++warnings_;
                ++summary.warnings;
                if (summary.kind == drift::SignalKind::stable) summary.kind = drift::SignalKind::warning;
                if (!s.background) spawn_background(s);
            } else if (sig == drift::SignalKind::drift) {
                ++warnings_;  // the drift condition subsumes the warning condition
                ++drifts_;
                ++summary.replacements;
                summary.kind = drift::SignalKind::drift;
                replace_with_background(s);
            }
        }
        return summary;
    }

    // kdqTree coupling: an external distribution-change signal acts as a
    // warning for every tree that has no background tree yet.
    void forced_warning() {
        for (auto& s : slots_)
            if (!s.background) spawn_background(s);
    }

    long warning_count() const { return warnings_; }
    long drift_count() const { return drifts_; }
    long replacement_count() const { return replacements_; }
    const ArfConfig& config() const { return cfg_; }
    std::vector<double> weights() const {
        std::vector<double> w;
        for (const auto& s : slots_) w.push_back(s.weight);
        return w;
    }
    std::size_t background_count() const {
        std::size_t n = 0;
        for (const auto& s : slots_)
            if (s.background) ++n;
        return n;
    }
    std::size_t archive_size() const { return archive_.size(); }

    std::string save() const {
        std::ostringstream os;
        os.precision(17);
        os << "aidps-arf v1\n";
        os << "n_trees " << cfg_.n_trees << " n_classes " << cfg_.n_classes << " n_features "
           << cfg_.n_features << " detector " << detector_name(cfg_.detector) << " seed "
           << cfg_.seed << "\n";
        for (const auto& s : slots_) {
            os << "weight " << s.weight << "\n";
            os << s.tree->save();
        }
        return os.str();
    }

    static AdaptiveRandomForest load(const std::string& text, ArfConfig cfg) {
        std::istringstream in(text);
        std::string magic, version, key, det;
        in >> magic >> version;
        if (magic != "aidps-arf") throw model_error("not an arf model file");
        if (version != "v1") throw model_error("unsupported arf model version: " + version);
        in >> key >> cfg.n_trees >> key >> cfg.n_classes >> key >> cfg.n_features >> key >> det >>
            key >> cfg.seed;
        cfg.detector = detector_from_name(det);
        AdaptiveRandomForest f(cfg);
        HtConfig ht = f.base_ht_config();
        for (auto& s : f.slots_) {
            in >> key >> s.weight;
            s.tree = std::make_unique<HoeffdingTree>(HoeffdingTree::load(in, ht));
        }
        return f;
    }

  private:
    struct Slot {
        std::unique_ptr<HoeffdingTree> tree;
        std::unique_ptr<HoeffdingTree> background;
        double background_weight = 1.0;
        ErrorDetector detector;
        double weight = 1.0;
        rng_t rng{1};
    };

    ArfConfig cfg_;
    rng_t rng_{1};
    std::vector<Slot> slots_;
    std::deque<std::unique_ptr<HoeffdingTree>> archive_;
    long warnings_ = 0, drifts_ = 0, replacements_ = 0;
    std::uint64_t tree_seed_ctr_ = 1;

    HtConfig base_ht_config() const {
        HtConfig ht;
        ht.n_classes = cfg_.n_classes;
        ht.n_features = cfg_.n_features;
        ht.grace_period = cfg_.grace_period;
        ht.split_confidence = cfg_.split_confidence;
        ht.max_features = cfg_.effective_max_features();
        return ht;
    }

    std::unique_ptr<HoeffdingTree> make_tree() {
        HtConfig ht = base_ht_config();
        ht.seed = cfg_.seed * 104729 + tree_seed_ctr_++;
        return std::make_unique<HoeffdingTree>(ht);
    }

    ErrorDetector make_detector() {
        return ErrorDetector(cfg_.detector, cfg_.delta_warning, cfg_.delta_drift,
                             cfg_.seed * 31 + tree_seed_ctr_);
    }

    void spawn_background(Slot& s) {
        s.background = make_tree();
        s.background_weight = 1.0;
    }

    void replace_with_background(Slot& s) {
        if (static_cast<int>(archive_.size()) >= cfg_.archive_capacity && !archive_.empty())
            archive_.pop_front();
        if (cfg_.archive_capacity > 0) archive_.push_back(std::move(s.tree));
        if (s.background) {
            s.tree = std::move(s.background);
            s.weight = s.background_weight;
        } else {
            s.tree = make_tree();
            s.weight = 1.0;
        }
        s.background.reset();
        s.detector = make_detector();
        ++replacements_;
    }
};

// ---------------------------------------------------------------------------
// Prequential (test-then-train) evaluation.

struct PrequentialPoint {
    std::size_t index = 0;
    double running_accuracy = 0;
    double windowed_accuracy = 0;
};

template <typename Model>
std::vector<PrequentialPoint> prequential_evaluate(const std::vector<Sample>& xs,
                                                   const std::vector<int>& ys, Model& model,
                                                   std::size_t window = 1000,
                                                   std::size_t emit_every = 1) {
    if (xs.size() != ys.size()) throw data_error("prequential: xs/ys length mismatch");
    std::vector<PrequentialPoint> out;
    std::deque<int> recent;
    long correct = 0, recent_correct = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const int pred = model.predict(xs[i]);
        const int ok = pred == ys[i] ? 1 : 0;
        correct += ok;
        recent.push_back(ok);
        recent_correct += ok;
        if (recent.size() > window) {
            recent_correct -= recent.front();
            recent.pop_front();
        }
        model.learn_one(xs[i], ys[i]);
        if ((i + 1) % emit_every == 0 || i + 1 == xs.size()) {
            PrequentialPoint p;
            p.index = i;
            p.running_accuracy = static_cast<double>(correct) / (i + 1);
            p.windowed_accuracy = static_cast<double>(recent_correct) / recent.size();
            out.push_back(p);
        }
    }
    return out;
}

// Labelled synthetic concept stream: two numeric features in [0,1], the
// label follows an axis threshold on feature 0; the concept flips at the
// given indices.
struct LabelledStream {
    std::vector<Sample> xs;
    std::vector<int> ys;
    std::vector<std::size_t> change_points;
};

inline LabelledStream synth_labelled_stream(std::size_t length, std::uint64_t seed,
                                            std::vector<std::size_t> flips = {}) {
    rng_t rng(seed);
    LabelledStream s;
    s.change_points = flips;
    bool flipped = false;
    std::size_t next_flip = 0;
    for (std::size_t i = 0; i < length; ++i) {
        if (next_flip < flips.size() && i == flips[next_flip]) {
            flipped = !flipped;
            ++next_flip;
        }
        Sample x = {uniform_real(rng, 0.0, 1.0), uniform_real(rng, 0.0, 1.0)};
        int y = x[0] < 0.5 ? 0 : 1;
        if (flipped) y = 1 - y;
        s.xs.push_back(std::move(x));
        s.ys.push_back(y);
    }
    return s;
}

}  // namespace aidps::stream_learn
