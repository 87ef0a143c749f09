#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "aidps/common.hpp"

namespace aidps::anomaly {

using Sample = std::vector<double>;

inline double rbf_kernel(const Sample& x, const Sample& y, double gamma) {
    if (x.size() != y.size()) throw data_error("rbf_kernel: dimension mismatch");
    if (gamma <= 0) throw config_error("rbf_kernel: gamma must be > 0");
    double d2 = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = x[i] - y[i];
        d2 += d * d;
    }
    return std::exp(-gamma * d2);
}

// Per-feature min-max scaling to [0,1], statistics frozen at fit time.
struct MinMaxScaler {
    std::vector<double> mins, ranges;

    void fit(const std::vector<Sample>& data) {
        const std::size_t d = data.at(0).size();
        mins.assign(d, std::numeric_limits<double>::infinity());
        std::vector<double> maxs(d, -std::numeric_limits<double>::infinity());
        for (const auto& x : data)
            for (std::size_t i = 0; i < d; ++i) {
                mins[i] = std::min(mins[i], x[i]);
                maxs[i] = std::max(maxs[i], x[i]);
            }
        ranges.resize(d);
        for (std::size_t i = 0; i < d; ++i) ranges[i] = std::max(maxs[i] - mins[i], 1e-12);
    }

    Sample transform(const Sample& x) const {
        if (x.size() != mins.size()) throw data_error("scaler: dimension mismatch");
        Sample out(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) out[i] = (x[i] - mins[i]) / ranges[i];
        return out;
    }
};

struct OcsvmModel {
    std::vector<Sample> support_vectors;  // scaled space
    std::vector<double> alphas;
    double rho = 0;
    double gamma = 0.3;
    double nu = 0.01;
    MinMaxScaler scaler;
};

namespace detail {

// SMO over the one-class dual: min 1/2 a'Ka, 0 <= a_i <= 1/(nu n),
// sum a = 1. Gram held in single precision; maximal-violating-pair
// selection; stops at the KKT gap tolerance.
inline void smo_solve(const std::vector<Sample>& x, double gamma, double box_c,
                      std::vector<double>& alpha, std::vector<double>& grad,
                      double tol = 1e-4) {
    const std::size_t n = x.size();
    std::vector<float> gram(n * n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j) {
            const float k = static_cast<float>(rbf_kernel(x[i], x[j], gamma));
            gram[i * n + j] = k;
            gram[j * n + i] = k;
        }

    alpha.assign(n, 1.0 / n);
    grad.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double g = 0;
        for (std::size_t j = 0; j < n; ++j) g += gram[i * n + j] * alpha[j];
        grad[i] = g;
    }

    const std::size_t max_iter = std::max<std::size_t>(200 * n, 20000);
    for (std::size_t iter = 0; iter < max_iter; ++iter) {
        // i: most negative gradient among a_i < C; j: most positive among a_j > 0
        std::size_t i_up = n, i_low = n;
        double g_up = std::numeric_limits<double>::infinity();
        double g_low = -std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < n; ++k) {
            if (alpha[k] < box_c - 1e-15 && grad[k] < g_up) {
                g_up = grad[k];
                i_up = k;
            }
            if (alpha[k] > 1e-15 && grad[k] > g_low) {
                g_low = grad[k];
                i_low = k;
            }
        }
        if (i_up == n || i_low == n || g_low - g_up <= tol) break;

        double eta = static_cast<double>(gram[i_up * n + i_up]) + gram[i_low * n + i_low] -
                     2.0 * gram[i_up * n + i_low];
        if (eta <= 1e-12) eta = 1e-12;
        double delta = (g_low - g_up) / eta;
        delta = std::min(delta, std::min(box_c - alpha[i_up], alpha[i_low]));
        if (delta <= 0) break;
        alpha[i_up] += delta;
        alpha[i_low] -= delta;
        for (std::size_t k = 0; k < n; ++k)
            grad[k] += delta * (static_cast<double>(gram[i_up * n + k]) - gram[i_low * n + k]);
    }
}

}  // namespace detail

inline OcsvmModel train_ocsvm(const std::vector<Sample>& data, double nu, double gamma) {
    if (data.size() < 2) throw model_error("train_ocsvm: need at least 2 samples");
    if (!(nu > 0 && nu <= 1)) throw config_error("train_ocsvm: nu must be in (0,1]");
    bool all_same = true;
    for (const auto& x : data)
        if (x != data.front()) {
            all_same = false;
            break;
        }
    if (all_same) throw model_error("train_ocsvm: degenerate data (all points identical)");

    OcsvmModel m;
    m.nu = nu;
    m.gamma = gamma;
    m.scaler.fit(data);
    std::vector<Sample> scaled;
    scaled.reserve(data.size());
    for (const auto& x : data) scaled.push_back(m.scaler.transform(x));

    const std::size_t n = scaled.size();
    const double box_c = 1.0 / (nu * n);
    std::vector<double> alpha, grad;
    detail::smo_solve(scaled, gamma, box_c, alpha, grad);

    // rho from margin support vectors; fall back to all support vectors.
    double rho_sum = 0;
    std::size_t rho_n = 0;
    for (std::size_t i = 0; i < n; ++i)
        if (alpha[i] > 1e-10 && alpha[i] < box_c - 1e-10) {
            rho_sum += grad[i];
            ++rho_n;
        }
    if (rho_n == 0) {
        for (std::size_t i = 0; i < n; ++i)
            if (alpha[i] > 1e-10) {
                rho_sum += grad[i];
                ++rho_n;
            }
    }
    m.rho = rho_sum / static_cast<double>(rho_n);

    for (std::size_t i = 0; i < n; ++i)
        if (alpha[i] > 1e-10) {
            m.support_vectors.push_back(scaled[i]);
            m.alphas.push_back(alpha[i]);
        }
    return m;
}

struct OcsvmDecision {
    double score = 0;
    int verdict = +1;  // +1 inlier, -1 outlier; sign(0) = +1
};

inline OcsvmDecision ocsvm_decision(const OcsvmModel& m, const Sample& x) {
    const Sample xs = m.scaler.transform(x);
    double s = -m.rho;
    for (std::size_t i = 0; i < m.support_vectors.size(); ++i)
        s += m.alphas[i] * rbf_kernel(m.support_vectors[i], xs, m.gamma);
    return {s, s < 0 ? -1 : +1};
}

struct OcsvmEnsemble {
    std::vector<OcsvmModel> members;
};

inline OcsvmEnsemble train_bagged_ensemble(const std::vector<Sample>& data, int k, double nu,
                                           double gamma, std::uint64_t seed) {
    if (k < 1 || k % 2 == 0) throw config_error("ensemble size must be odd");
    if (data.empty()) throw data_error("ensemble: empty training data");
    OcsvmEnsemble e;
    rng_t rng(seed);
    for (int m = 0; m < k; ++m) {
        std::vector<Sample> boot;
        boot.reserve(data.size());
        for (std::size_t i = 0; i < data.size(); ++i) boot.push_back(data[uniform_index(rng, data.size())]);
        e.members.push_back(train_ocsvm(boot, nu, gamma));
    }
    return e;
}

inline int ensemble_vote(const OcsvmEnsemble& e, const Sample& x) {
    int outliers = 0;
    for (const auto& m : e.members)
        if (ocsvm_decision(m, x).verdict < 0) ++outliers;
    return 2 * outliers > static_cast<int>(e.members.size()) ? -1 : +1;
}

// ---------------------------------------------------------------------------
// Isolation forest baseline.

struct IsoNode {
    int feature = -1;
    double threshold = 0;
    int left = -1, right = -1;
    std::size_t size = 0;  // leaf sample count
};

struct IsoTree {
    std::vector<IsoNode> nodes;
};

struct IsolationForestModel {
    std::vector<IsoTree> trees;
    std::size_t subsample = 256;
    double contamination = 0.1;
    double threshold = 0.5;  // anomaly-score cut calibrated on training data
};

namespace detail {

inline double avg_path_length(double n) {
    if (n <= 1.0) return 0.0;
    if (n == 2.0) return 1.0;
    return 2.0 * (std::log(n - 1.0) + 0.5772156649) - 2.0 * (n - 1.0) / n;
}

inline int build_iso_node(IsoTree& tree, std::vector<const Sample*>& pts, int depth, int max_depth,
                          rng_t& rng) {
    IsoNode node;
    node.size = pts.size();
    const int idx = static_cast<int>(tree.nodes.size());
    tree.nodes.push_back(node);
    if (pts.size() <= 1 || depth >= max_depth) return idx;

    const std::size_t d = pts.front()->size();
    // find a splittable feature
    std::vector<std::size_t> feats(d);
    std::iota(feats.begin(), feats.end(), 0);
    std::shuffle(feats.begin(), feats.end(), rng);
    for (std::size_t f : feats) {
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (const auto* p : pts) {
            lo = std::min(lo, (*p)[f]);
            hi = std::max(hi, (*p)[f]);
        }
        if (hi - lo < 1e-12) continue;
        const double cut = uniform_real(rng, lo, hi);
        std::vector<const Sample*> left, right;
        for (const auto* p : pts)
            ((*p)[f] < cut ? left : right).push_back(p);
        if (left.empty() || right.empty()) continue;
        tree.nodes[idx].feature = static_cast<int>(f);
        tree.nodes[idx].threshold = cut;
        tree.nodes[idx].left = build_iso_node(tree, left, depth + 1, max_depth, rng);
        tree.nodes[idx].right = build_iso_node(tree, right, depth + 1, max_depth, rng);
        return idx;
    }
    return idx;  // no splittable feature: leaf
}

inline double iso_path_length(const IsoTree& tree, const Sample& x) {
    int idx = 0;
    double depth = 0;
    while (tree.nodes[idx].feature >= 0) {
        idx = x[tree.nodes[idx].feature] < tree.nodes[idx].threshold ? tree.nodes[idx].left
                                                                     : tree.nodes[idx].right;
        depth += 1.0;
    }
    return depth + avg_path_length(static_cast<double>(tree.nodes[idx].size));
}

}  // namespace detail

inline double iforest_score(const IsolationForestModel& m, const Sample& x) {
    double sum = 0;
    for (const auto& t : m.trees) sum += detail::iso_path_length(t, x);
    const double mean = sum / m.trees.size();
    return std::pow(2.0, -mean / detail::avg_path_length(static_cast<double>(m.subsample)));
}

inline IsolationForestModel train_iforest(const std::vector<Sample>& data, int n_trees,
                                          std::size_t subsample, double contamination,
                                          std::uint64_t seed) {
    if (!(contamination > 0 && contamination <= 0.5))
        throw config_error("contamination must be in (0, 0.5]");
    if (data.empty()) throw data_error("iforest: empty training data");
    IsolationForestModel m;
    m.subsample = std::min(subsample, data.size());
    m.contamination = contamination;
    const int max_depth = static_cast<int>(std::ceil(std::log2(static_cast<double>(m.subsample)))) + 1;
    rng_t rng(seed);
    for (int t = 0; t < n_trees; ++t) {
        std::vector<const Sample*> pts;
        pts.reserve(m.subsample);
        for (std::size_t i = 0; i < m.subsample; ++i) pts.push_back(&data[uniform_index(rng, data.size())]);
        IsoTree tree;
        detail::build_iso_node(tree, pts, 0, max_depth, rng);
        m.trees.push_back(std::move(tree));
    }
    // calibrate the score threshold so roughly `contamination` of the
    // training set lands above it
    std::vector<double> scores;
    scores.reserve(data.size());
    for (const auto& x : data) scores.push_back(iforest_score(m, x));
    std::sort(scores.begin(), scores.end());
    const std::size_t cut =
        std::min(data.size() - 1,
                 static_cast<std::size_t>(std::floor((1.0 - contamination) * data.size())));
    m.threshold = scores[cut];
    return m;
}

inline int iforest_verdict(const IsolationForestModel& m, const Sample& x) {
    return iforest_score(m, x) > m.threshold ? -1 : +1;
}

// ---------------------------------------------------------------------------
// Versioned text persistence. Loaders reject unknown versions.

inline std::string ocsvm_save(const OcsvmModel& m) {
    std::ostringstream os;
    os.precision(17);
    os << "aidps-ocsvm v1\n";
    os << "nu " << m.nu << "\ngamma " << m.gamma << "\nrho " << m.rho << "\n";
    os << "dim " << m.scaler.mins.size() << "\n";
    os << "scale_min";
    for (double v : m.scaler.mins) os << ' ' << v;
    os << "\nscale_range";
    for (double v : m.scaler.ranges) os << ' ' << v;
    os << "\nnsv " << m.support_vectors.size() << "\n";
    for (std::size_t i = 0; i < m.support_vectors.size(); ++i) {
        os << m.alphas[i];
        for (double v : m.support_vectors[i]) os << ' ' << v;
        os << "\n";
    }
    return os.str();
}

inline OcsvmModel ocsvm_load(std::istream& in) {
    std::string magic, version;
    in >> magic >> version;
    if (magic != "aidps-ocsvm") throw model_error("not an ocsvm model file");
    if (version != "v1") throw model_error("unsupported ocsvm model version: " + version);
    OcsvmModel m;
    std::string key;
    std::size_t dim = 0, nsv = 0;
    in >> key >> m.nu >> key >> m.gamma >> key >> m.rho >> key >> dim;
    in >> key;
    m.scaler.mins.resize(dim);
    for (auto& v : m.scaler.mins) in >> v;
    in >> key;
    m.scaler.ranges.resize(dim);
    for (auto& v : m.scaler.ranges) in >> v;
    in >> key >> nsv;
    m.alphas.resize(nsv);
    m.support_vectors.assign(nsv, Sample(dim));
    for (std::size_t i = 0; i < nsv; ++i) {
        in >> m.alphas[i];
        for (auto& v : m.support_vectors[i]) in >> v;
    }
    if (!in) throw model_error("truncated ocsvm model file");
    return m;
}

inline OcsvmModel ocsvm_load(const std::string& text) {
    std::istringstream is(text);
    return ocsvm_load(is);
}

inline std::string ensemble_save(const OcsvmEnsemble& e) {
    std::ostringstream os;
    os << "aidps-ocsvm-ensemble v1\nmembers " << e.members.size() << "\n";
    for (const auto& m : e.members) os << ocsvm_save(m);
    return os.str();
}

inline OcsvmEnsemble ensemble_load(const std::string& text) {
    std::istringstream in(text);
    std::string magic, version, key;
    in >> magic >> version;
    if (magic != "aidps-ocsvm-ensemble") throw model_error("not an ensemble model file");
    if (version != "v1") throw model_error("unsupported ensemble version: " + version);
    std::size_t k = 0;
    in >> key >> k;
    OcsvmEnsemble e;
    for (std::size_t i = 0; i < k; ++i) e.members.push_back(ocsvm_load(in));
    return e;
}

}  // namespace aidps::anomaly
