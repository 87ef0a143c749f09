#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <vector>

#include "aidps/common.hpp"

namespace aidps::metrics {

struct MetricsReport {
    double accuracy = 0, precision = 0, recall = 0, f1 = 0;
    double kappa = 0, mcc = 0;
    double tpr = 0, fnr = 0, tnr = 0, fpr = 0;
    double auc = 0;  // filled by auc_score when scores are available
    std::map<int, std::map<int, long>> confusion;  // confusion[truth][pred]
    std::size_t n = 0;
};

// Macro-averaged P/R/F1 for multiclass input, positive-class values for
// binary; tpr/fpr are always one-vs-rest against positive_class.
// Zero denominators yield 0.
inline MetricsReport compute_metrics(const std::vector<int>& predictions,
                                     const std::vector<int>& truths, int positive_class) {
    if (predictions.size() != truths.size()) throw data_error("predictions/truths length mismatch");
    if (predictions.empty()) throw data_error("empty input");
    MetricsReport m;
    m.n = truths.size();

    std::set<int> classes;
    for (std::size_t i = 0; i < truths.size(); ++i) {
        m.confusion[truths[i]][predictions[i]]++;
        classes.insert(truths[i]);
        classes.insert(predictions[i]);
    }

    long correct = 0;
    for (std::size_t i = 0; i < truths.size(); ++i)
        if (truths[i] == predictions[i]) ++correct;
    m.accuracy = static_cast<double>(correct) / m.n;

    auto class_counts = [&](int c, long& tp, long& fp, long& fn, long& tn) {
        tp = fp = fn = tn = 0;
        for (std::size_t i = 0; i < truths.size(); ++i) {
            const bool t = truths[i] == c, p = predictions[i] == c;
            if (t && p) ++tp;
            else if (!t && p) ++fp;
            else if (t && !p) ++fn;
            else ++tn;
        }
    };

    auto safe_div = [](double a, double b) { return b == 0.0 ? 0.0 : a / b; };

    if (classes.size() <= 2) {
        long tp, fp, fn, tn;
        class_counts(positive_class, tp, fp, fn, tn);
        m.precision = safe_div(tp, tp + fp);
        m.recall = safe_div(tp, tp + fn);
        m.f1 = safe_div(2.0 * m.precision * m.recall, m.precision + m.recall);
    } else {
        double psum = 0, rsum = 0, fsum = 0;
        for (int c : classes) {
            long tp, fp, fn, tn;
            class_counts(c, tp, fp, fn, tn);
            const double p = safe_div(tp, tp + fp), r = safe_div(tp, tp + fn);
            psum += p;
            rsum += r;
            fsum += safe_div(2.0 * p * r, p + r);
        }
        m.precision = psum / classes.size();
        m.recall = rsum / classes.size();
        m.f1 = fsum / classes.size();
    }

    {
        long tp, fp, fn, tn;
        class_counts(positive_class, tp, fp, fn, tn);
        m.tpr = safe_div(tp, tp + fn);
        m.fnr = safe_div(fn, tp + fn);
        m.tnr = safe_div(tn, tn + fp);
        m.fpr = safe_div(fp, tn + fp);
    }

    // Cohen's kappa.
    {
        std::map<int, long> tc, pc;
        for (std::size_t i = 0; i < truths.size(); ++i) {
            tc[truths[i]]++;
            pc[predictions[i]]++;
        }
        double pe = 0;
        for (int c : classes)
            pe += static_cast<double>(tc[c]) / m.n * static_cast<double>(pc[c]) / m.n;
        m.kappa = pe >= 1.0 ? 0.0 : (m.accuracy - pe) / (1.0 - pe);
    }

    // Generalised (Rk) correlation; equals the binary MCC for two classes.
    {
        std::map<int, long> tc, pc;
        for (std::size_t i = 0; i < truths.size(); ++i) {
            tc[truths[i]]++;
            pc[predictions[i]]++;
        }
        const double s = static_cast<double>(m.n), c = static_cast<double>(correct);
        double dot = 0, p2 = 0, t2 = 0;
        for (int k : classes) {
            dot += static_cast<double>(pc[k]) * tc[k];
            p2 += static_cast<double>(pc[k]) * pc[k];
            t2 += static_cast<double>(tc[k]) * tc[k];
        }
        const double denom = std::sqrt((s * s - p2) * (s * s - t2));
        m.mcc = denom == 0.0 ? 0.0 : (c * s - dot) / denom;
    }
    return m;
}

// Mann-Whitney AUC with ties counted half.
inline double auc_score(const std::vector<double>& scores, const std::vector<int>& truths) {
    if (scores.size() != truths.size()) throw data_error("scores/truths length mismatch");
    long n_pos = 0, n_neg = 0;
    for (int t : truths) (t != 0 ? n_pos : n_neg)++;
    if (n_pos == 0 || n_neg == 0) throw data_error("AUC undefined: single-class truth");

    // rank-sum formulation, average ranks for ties
    std::vector<std::size_t> order(scores.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
    std::vector<double> rank(scores.size());
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]]) ++j;
        const double avg = (static_cast<double>(i) + j) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) rank[order[k]] = avg;
        i = j + 1;
    }
    double rank_sum_pos = 0;
    for (std::size_t k = 0; k < truths.size(); ++k)
        if (truths[k] != 0) rank_sum_pos += rank[k];
    const double u = rank_sum_pos - static_cast<double>(n_pos) * (n_pos + 1) / 2.0;
    return u / (static_cast<double>(n_pos) * n_neg);
}

}  // namespace aidps::metrics
