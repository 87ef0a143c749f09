#pragma once

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "aidps/common.hpp"

namespace aidps::drift {

enum class SignalKind { stable, warning, drift };

struct Region {
    std::vector<double> lo, hi;  // original feature space
};

struct DriftSignal {
    SignalKind kind = SignalKind::stable;
    std::size_t position = 0;
    std::string detail;
    std::optional<Region> region;
};

// ---------------------------------------------------------------------------
// ADWIN: adaptive window backed by an exponential histogram. The window
// is cut where the two sub-window means differ beyond the confidence
// bound; a looser confidence gives the warning level.

class Adwin {
  public:
    explicit Adwin(double delta_drift = 0.001, double delta_warning = 0.01, int check_every = 32)
        : delta_d_(delta_drift), delta_w_(delta_warning), check_every_(check_every) {}

    DriftSignal update(double value) {
        if (value < 0.0 || value > 1.0) throw data_error("adwin: value must be in [0,1]");
        ++index_;
        insert(value);
        DriftSignal sig;
        sig.position = index_ - 1;
        if (width_ >= 10 && index_ % check_every_ == 0) {
            bool warned = scan_and_cut(delta_w_, /*shrink=*/false);
            bool drifted = scan_and_cut(delta_d_, /*shrink=*/true);
            if (drifted) sig.kind = SignalKind::drift;
            else if (warned) sig.kind = SignalKind::warning;
        }
        return sig;
    }

    std::size_t width() const { return width_; }
    double mean() const { return width_ ? total_ / width_ : 0.0; }
    double variance() const { return width_ ? var_ / width_ : 0.0; }

  private:
    struct Bucket {
        double total = 0, variance = 0;
    };
    static constexpr int kMaxBucketsPerRow = 5;

    // rows_[r] holds buckets of 2^r elements, oldest first
    std::vector<std::deque<Bucket>> rows_;
    double total_ = 0, var_ = 0;
    std::size_t width_ = 0, index_ = 0;
    double delta_d_, delta_w_;
    int check_every_;

    void insert(double v) {
        if (rows_.empty()) rows_.emplace_back();
        const double old_mean = width_ > 0 ? total_ / width_ : 0.0;
        rows_[0].push_back({v, 0.0});
        total_ += v;
        ++width_;
        if (width_ > 1) var_ += (v - old_mean) * (v - total_ / width_);
        compress();
    }

    void compress() {
        for (std::size_t r = 0; r < rows_.size(); ++r) {
            if (rows_[r].size() <= kMaxBucketsPerRow + 1) break;
            if (r + 1 == rows_.size()) rows_.emplace_back();
            const double cap = std::pow(2.0, static_cast<double>(r));
            Bucket a = rows_[r].front();
            rows_[r].pop_front();
            Bucket b = rows_[r].front();
            rows_[r].pop_front();
            Bucket merged;
            merged.total = a.total + b.total;
            const double u1 = a.total / cap, u2 = b.total / cap;
            merged.variance = a.variance + b.variance + cap * cap / (2 * cap) * (u1 - u2) * (u1 - u2);
            rows_[r + 1].push_back(merged);
        }
    }

    void drop_oldest() {
        for (std::size_t r = rows_.size(); r-- > 0;) {
            if (rows_[r].empty()) continue;
            const double cap = std::pow(2.0, static_cast<double>(r));
            const Bucket b = rows_[r].front();
            rows_[r].pop_front();
            total_ -= b.total;
            var_ -= b.variance;
            const double mu = b.total / cap;
            if (width_ > cap) {
                const double rest_mu = total_ / (width_ - cap);
                var_ -= cap * (width_ - cap) / width_ * (mu - rest_mu) * (mu - rest_mu);
            }
            width_ -= static_cast<std::size_t>(cap);
            if (var_ < 0) var_ = 0;
            return;
        }
    }

    bool cut_exists(double delta) const {
        if (width_ < 10) return false;
        const double v = width_ ? var_ / width_ : 0.0;
        const double dd = std::log(2.0 * std::log(static_cast<double>(width_)) / delta);
        double n0 = 0, s0 = 0;
        // walk buckets oldest-first
        for (std::size_t r = rows_.size(); r-- > 0;) {
            const double cap = std::pow(2.0, static_cast<double>(r));
            for (const auto& b : rows_[r]) {
                n0 += cap;
                s0 += b.total;
                const double n1 = static_cast<double>(width_) - n0;
                if (n0 < 5 || n1 < 5) continue;
                const double u0 = s0 / n0, u1 = (total_ - s0) / n1;
                const double m = 1.0 / (1.0 / n0 + 1.0 / n1);
                const double eps = std::sqrt(2.0 / m * v * dd) + 2.0 / (3.0 * m) * dd;
                if (std::fabs(u0 - u1) > eps) return true;
            }
        }
        return false;
    }

    bool scan_and_cut(double delta, bool shrink) {
        bool found = false;
        while (cut_exists(delta)) {
            found = true;
            if (!shrink) break;
            drop_oldest();
            if (width_ < 10) break;
        }
        return found;
    }
};

// ---------------------------------------------------------------------------
// DDM on a binary error stream; classic 2/3 sigma thresholds.

class Ddm {
  public:
    DriftSignal update(int error) {
        if (error != 0 && error != 1) throw data_error("ddm: error must be 0 or 1");
        ++index_;
        ++n_;
        p_ += (error - p_) / n_;
        s_ = std::sqrt(std::max(p_ * (1 - p_) / n_, 0.0));
        DriftSignal sig;
        sig.position = index_ - 1;
        if (n_ < 30) return sig;
        if (p_ + s_ <= p_min_ + s_min_) {
            p_min_ = p_;
            s_min_ = s_;
        }
        if (p_ + s_ >= p_min_ + 3.0 * s_min_) {
            sig.kind = SignalKind::drift;
            reset();
        } else if (p_ + s_ >= p_min_ + 2.0 * s_min_) {
            sig.kind = SignalKind::warning;
        }
        return sig;
    }

  private:
    void reset() {
        n_ = 0;
        p_ = 0;
        s_ = 0;
        p_min_ = std::numeric_limits<double>::infinity();
        s_min_ = std::numeric_limits<double>::infinity();
    }
    double n_ = 0, p_ = 0, s_ = 0;
    double p_min_ = std::numeric_limits<double>::infinity();
    double s_min_ = std::numeric_limits<double>::infinity();
    std::size_t index_ = 0;
};

// ---------------------------------------------------------------------------
// Page-Hinkley (increase direction) with a fading cumulative sum.

class PageHinkley {
  public:
    explicit PageHinkley(double lambda = 50.0, double delta = 0.005, double fading = 0.9999)
        : lambda_(lambda), delta_(delta), fading_(fading) {}

    DriftSignal update(double value) {
        ++index_;
        ++n_;
        mean_ += (value - mean_) / n_;
        sum_ = fading_ * sum_ + (value - mean_ - delta_);
        min_sum_ = std::min(min_sum_, sum_);
        DriftSignal sig;
        sig.position = index_ - 1;
        const double stat = sum_ - min_sum_;
        if (stat >= lambda_) {
            sig.kind = SignalKind::drift;
            n_ = 0;
            mean_ = 0;
            sum_ = 0;
            min_sum_ = 0;
        } else if (stat >= lambda_ / 2.0) {
            sig.kind = SignalKind::warning;
        }
        return sig;
    }

  private:
    double lambda_, delta_, fading_;
    double n_ = 0, mean_ = 0, sum_ = 0, min_sum_ = 0;
    std::size_t index_ = 0;
};

// ---------------------------------------------------------------------------
// KSWIN: two-sample Kolmogorov-Smirnov between the newest stat_size
// points and a seeded random sample from the older part of the window.

inline double ks_statistic(std::vector<double> a, std::vector<double> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    double d = 0;
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        // consume every sample equal to the current value from both sides
        // before comparing the ECDFs, so ties do not inflate the statistic
        const double v = std::min(a[i], b[j]);
        while (i < a.size() && a[i] == v) ++i;
        while (j < b.size() && b[j] == v) ++j;
        const double fa = static_cast<double>(i) / a.size();
        const double fb = static_cast<double>(j) / b.size();
        d = std::max(d, std::fabs(fa - fb));
    }
    return d;
}

class Kswin {
  public:
    explicit Kswin(std::size_t window_size = 100, std::size_t stat_size = 30, double alpha = 0.005,
                   std::uint64_t seed = 1)
        : window_size_(window_size), stat_size_(stat_size), alpha_(alpha), rng_(seed) {}

    DriftSignal update(double value) {
        ++index_;
        window_.push_back(value);
        if (window_.size() > window_size_) window_.pop_front();
        DriftSignal sig;
        sig.position = index_ - 1;
        if (window_.size() < window_size_) return sig;  // stable until filled

        std::vector<double> recent(window_.end() - stat_size_, window_.end());
        std::vector<double> older;
        const std::size_t pool = window_.size() - stat_size_;
        for (std::size_t k = 0; k < stat_size_; ++k)
            older.push_back(window_[uniform_index(rng_, pool)]);
        const double d = ks_statistic(older, recent);
        const double n = static_cast<double>(stat_size_);
        const double crit = std::sqrt(-std::log(alpha_ / 2.0) / 2.0) * std::sqrt(2.0 / n);
        if (d > crit) {
            sig.kind = SignalKind::drift;
            window_.erase(window_.begin(), window_.end() - stat_size_);
        } else if (d > 0.9 * crit) {
            sig.kind = SignalKind::warning;
        }
        return sig;
    }

  private:
    std::size_t window_size_, stat_size_;
    double alpha_;
    rng_t rng_;
    std::deque<double> window_;
    std::size_t index_ = 0;
};

// ---------------------------------------------------------------------------
// KL divergence.

inline double kl_divergence(const std::vector<double>& p, const std::vector<double>& q) {
    if (p.size() != q.size()) throw data_error("kl_divergence: mismatched supports");
    double kl = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (q[i] <= 0) throw data_error("kl_divergence: q must be strictly positive");
        if (p[i] > 0) kl += p[i] * std::log(p[i] / q[i]);
    }
    return std::max(kl, 0.0);
}

// add-0.5 smoothing per cell, then normalise
inline double kl_from_counts(const std::vector<long>& p_counts, const std::vector<long>& q_counts) {
    if (p_counts.size() != q_counts.size()) throw data_error("kl_from_counts: mismatched supports");
    std::vector<double> p(p_counts.size()), q(q_counts.size());
    double ps = 0, qs = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        p[i] = p_counts[i] + 0.5;
        q[i] = q_counts[i] + 0.5;
        ps += p[i];
        qs += q[i];
    }
    for (std::size_t i = 0; i < p.size(); ++i) {
        p[i] /= ps;
        q[i] /= qs;
    }
    return kl_divergence(p, q);
}

// ---------------------------------------------------------------------------
// kdqTree: axis-aligned midpoint partition of the reference window,
// cycled through dimensions; drift when the KL divergence between
// reference and test leaf-count distributions exceeds a bootstrap
// threshold; localisation by Kulldorff's scan statistic.

struct KdqParams {
    std::size_t window_size = 500;
    double alpha = 0.05;
    std::size_t bootstrap_samples = 500;
    long count_bound = 50;
    double min_side = std::pow(2.0, -10.0);
};

class KdqTree {
  public:
    KdqTree() = default;

    // reference window; min-max normalisation stats frozen here
    KdqTree(const std::vector<std::vector<double>>& reference, const KdqParams& params)
        : params_(params) {
        if (reference.empty()) throw data_error("kdqtree: empty reference window");
        dim_ = reference.front().size();
        mins_.assign(dim_, std::numeric_limits<double>::infinity());
        std::vector<double> maxs(dim_, -std::numeric_limits<double>::infinity());
        for (const auto& x : reference)
            for (std::size_t i = 0; i < dim_; ++i) {
                mins_[i] = std::min(mins_[i], x[i]);
                maxs[i] = std::max(maxs[i], x[i]);
            }
        ranges_.resize(dim_);
        for (std::size_t i = 0; i < dim_; ++i) ranges_[i] = std::max(maxs[i] - mins_[i], 1e-12);

        std::vector<std::vector<double>> scaled;
        scaled.reserve(reference.size());
        for (const auto& x : reference) scaled.push_back(scale(x));

        nodes_.clear();
        std::vector<const std::vector<double>*> pts;
        pts.reserve(scaled.size());
        for (const auto& x : scaled) pts.push_back(&x);
        std::vector<double> lo(dim_, 0.0), hi(dim_, 1.0);
        build(pts, 0, lo, hi);
        ref_counts_ = leaf_counts_of(scaled);
        ref_points_scaled_ = std::move(scaled);
    }

    std::size_t leaf_count() const { return leaves_; }
    const std::vector<long>& reference_counts() const { return ref_counts_; }
    const KdqParams& params() const { return params_; }

    std::vector<long> leaf_counts_of(const std::vector<std::vector<double>>& scaled_pts) const {
        std::vector<long> counts(leaves_, 0);
        for (const auto& x : scaled_pts) counts[route(x)]++;
        return counts;
    }

    std::vector<double> scale(const std::vector<double>& x) const {
        if (x.size() != dim_) throw data_error("kdqtree: dimension mismatch");
        std::vector<double> out(dim_);
        for (std::size_t i = 0; i < dim_; ++i)
            out[i] = std::clamp((x[i] - mins_[i]) / ranges_[i], 0.0, 1.0);
        return out;
    }

    Region unscale_region(const std::vector<double>& lo, const std::vector<double>& hi) const {
        Region r;
        r.lo.resize(dim_);
        r.hi.resize(dim_);
        for (std::size_t i = 0; i < dim_; ++i) {
            r.lo[i] = mins_[i] + lo[i] * ranges_[i];
            r.hi[i] = mins_[i] + hi[i] * ranges_[i];
        }
        return r;
    }

    DriftSignal detect(const std::vector<std::vector<double>>& test, std::uint64_t seed = 1) {
        if (test.size() != ref_points_scaled_.size())
            throw data_error("kdqtree: test window size mismatch");
        ensure_threshold(seed);
        std::vector<std::vector<double>> scaled;
        scaled.reserve(test.size());
        for (const auto& x : test) scaled.push_back(scale(x));
        const auto test_counts = leaf_counts_of(scaled);
        const double kl = kl_from_counts(test_counts, ref_counts_);
        DriftSignal sig;
        sig.position = 0;
        if (kl > threshold_) {
            sig.kind = SignalKind::drift;
            sig.region = localize(test_counts);
            sig.detail = "kl=" + format_fixed(kl) + " thr=" + format_fixed(threshold_);
        }
        return sig;
    }

    // Kulldorff scan: leaf with the largest likelihood-ratio increase of
    // the test rate over the reference rate.
    Region localize(const std::vector<long>& test_counts) const {
        double best = -1;
        std::size_t best_leaf = 0;
        double c_tot = 0, b_tot = 0;
        for (std::size_t i = 0; i < test_counts.size(); ++i) {
            c_tot += test_counts[i] + 0.5;
            b_tot += ref_counts_[i] + 0.5;
        }
        for (std::size_t i = 0; i < test_counts.size(); ++i) {
            const double c = test_counts[i] + 0.5;
            const double e = c_tot * (ref_counts_[i] + 0.5) / b_tot;
            if (c <= e) continue;
            const double lr = c * std::log(c / e) + (c_tot - c) * std::log((c_tot - c) / (c_tot - e));
            if (lr > best) {
                best = lr;
                best_leaf = i;
            }
        }
        for (const auto& n : nodes_)
            if (n.leaf_index == static_cast<long>(best_leaf)) return unscale_region(n.lo, n.hi);
        return Region{};
    }

  private:
    struct NodeRec {
        int axis = -1;
        double split = 0;
        int left = -1, right = -1;
        long leaf_index = -1;
        std::vector<double> lo, hi;
    };

    KdqParams params_;
    std::size_t dim_ = 0, leaves_ = 0;
    std::vector<double> mins_, ranges_;
    std::vector<NodeRec> nodes_;
    std::vector<long> ref_counts_;
    std::vector<std::vector<double>> ref_points_scaled_;
    double threshold_ = -1;

    int build(std::vector<const std::vector<double>*>& pts, int depth, std::vector<double>& lo,
              std::vector<double>& hi) {
        const int idx = static_cast<int>(nodes_.size());
        nodes_.emplace_back();
        nodes_[idx].lo = lo;
        nodes_[idx].hi = hi;
        const int axis = depth % static_cast<int>(dim_);
        const double side = hi[axis] - lo[axis];
        if (static_cast<long>(pts.size()) <= params_.count_bound || side <= params_.min_side) {
            nodes_[idx].leaf_index = static_cast<long>(leaves_++);
            return idx;
        }
        const double mid = (lo[axis] + hi[axis]) / 2.0;
        std::vector<const std::vector<double>*> l, r;
        for (const auto* p : pts) ((*p)[axis] < mid ? l : r).push_back(p);
        nodes_[idx].axis = axis;
        nodes_[idx].split = mid;
        {
            const double keep = hi[axis];
            hi[axis] = mid;
            nodes_[idx].left = build(l, depth + 1, lo, hi);
            hi[axis] = keep;
        }
        {
            const double keep = lo[axis];
            lo[axis] = mid;
            nodes_[idx].right = build(r, depth + 1, lo, hi);
            lo[axis] = keep;
        }
        return idx;
    }

    std::size_t route(const std::vector<double>& x) const {
        int idx = 0;
        while (nodes_[idx].leaf_index < 0)
            idx = x[nodes_[idx].axis] < nodes_[idx].split ? nodes_[idx].left : nodes_[idx].right;
        return static_cast<std::size_t>(nodes_[idx].leaf_index);
    }

    // (1-alpha) quantile of KL over reference-vs-reference resamples.
    void ensure_threshold(std::uint64_t seed) {
        if (threshold_ >= 0) return;
        rng_t rng(seed);
        const std::size_t w = ref_points_scaled_.size();
        std::vector<double> kls;
        kls.reserve(params_.bootstrap_samples);
        std::vector<long> a(leaves_), b(leaves_);
        for (std::size_t s = 0; s < params_.bootstrap_samples; ++s) {
            std::fill(a.begin(), a.end(), 0);
            std::fill(b.begin(), b.end(), 0);
            for (std::size_t i = 0; i < w; ++i)
                a[route(ref_points_scaled_[uniform_index(rng, w)])]++;
            for (std::size_t i = 0; i < w; ++i)
                b[route(ref_points_scaled_[uniform_index(rng, w)])]++;
            kls.push_back(kl_from_counts(a, b));
        }
        std::sort(kls.begin(), kls.end());
        const std::size_t q = std::min(
            kls.size() - 1, static_cast<std::size_t>(std::ceil((1.0 - params_.alpha) * kls.size())));
        threshold_ = kls[q];
    }
};

inline KdqTree kdqtree_build(const std::vector<std::vector<double>>& reference,
                             const KdqParams& params = {}) {
    if (reference.size() != params.window_size)
        throw data_error("kdqtree_build: |reference| must equal window_size");
    return KdqTree(reference, params);
}

inline DriftSignal kdqtree_detect(KdqTree& tree, const std::vector<std::vector<double>>& test,
                                  std::uint64_t seed = 1) {
    return tree.detect(test, seed);
}

// ---------------------------------------------------------------------------
// Synthetic drift streams with ground-truth change points.

enum class DriftShape { abrupt, gradual, incremental, recurring };

struct SynthStream {
    std::vector<double> values;
    std::vector<std::size_t> change_points;
};

inline SynthStream synth_drift_stream(DriftShape kind, std::size_t length, std::uint64_t seed,
                                      std::size_t period = 0) {
    if (length == 0) throw config_error("synth_drift_stream: length must be > 0");
    if (period == 0) period = length / 2;
    rng_t rng(seed);
    std::normal_distribution<double> noise(0.0, 0.1);
    const double mean_a = 0.2, mean_b = 0.8;
    SynthStream s;
    s.values.reserve(length);
    const std::size_t half = length / 2;
    const std::size_t span = std::max<std::size_t>(length / 10, 1);

    switch (kind) {
        case DriftShape::abrupt:
            s.change_points.push_back(half);
            for (std::size_t i = 0; i < length; ++i)
                s.values.push_back((i < half ? mean_a : mean_b) + noise(rng));
            break;
        case DriftShape::gradual: {
            s.change_points.push_back(half);
            for (std::size_t i = 0; i < length; ++i) {
                double p_b;
                if (i < half) p_b = 0.0;
                else if (i >= half + span) p_b = 1.0;
                else p_b = static_cast<double>(i - half) / span;
                const bool use_b = uniform_real(rng, 0.0, 1.0) < p_b;
                s.values.push_back((use_b ? mean_b : mean_a) + noise(rng));
            }
            break;
        }
        case DriftShape::incremental: {
            s.change_points.push_back(half);
            for (std::size_t i = 0; i < length; ++i) {
                double m;
                if (i < half) m = mean_a;
                else if (i >= half + span) m = mean_b;
                else m = mean_a + (mean_b - mean_a) * static_cast<double>(i - half) / span;
                s.values.push_back(m + noise(rng));
            }
            break;
        }
        case DriftShape::recurring: {
            for (std::size_t i = 0; i < length; ++i) {
                const std::size_t concept_idx = i / period;
                if (i > 0 && i % period == 0 && i < length) s.change_points.push_back(i);
                s.values.push_back((concept_idx % 2 == 0 ? mean_a : mean_b) + noise(rng));
            }
            break;
        }
    }
    return s;
}

}  // namespace aidps::drift
