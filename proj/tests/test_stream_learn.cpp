#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "aidps/stream_learn.hpp"

using namespace aidps;
using namespace aidps::stream_learn;

namespace {

// trivial model with a known prediction rule, used as a prequential oracle
struct ConstantModel {
    int label = 1;
    int predict(const Sample&) const { return label; }
    void learn_one(const Sample&, int) {}
};

}  // namespace

TEST_CASE("hoeffding bound formula and guards") {
    // sqrt(R^2 ln(1/d) / 2n) with R=1, d=0.05, n=100
    CHECK(hoeffding_bound(1.0, 0.05, 100) ==
          doctest::Approx(std::sqrt(std::log(20.0) / 200.0)).epsilon(1e-12));
    CHECK(hoeffding_bound(2.0, 0.05, 100) == doctest::Approx(2.0 * hoeffding_bound(1.0, 0.05, 100)));
    // monotonically shrinking in n
    CHECK(hoeffding_bound(1.0, 0.05, 400) < hoeffding_bound(1.0, 0.05, 100));
    CHECK_THROWS_AS(hoeffding_bound(1.0, 0.05, 0), config_error);
    CHECK_THROWS_AS(hoeffding_bound(1.0, 1.5, 10), config_error);
    CHECK_THROWS_AS(hoeffding_bound(-1.0, 0.05, 10), config_error);
}

TEST_CASE("hoeffding tree learns a separable threshold concept") {
    HtConfig cfg;
    cfg.n_features = 2;
    const auto stream = synth_labelled_stream(3000, 5);
    HoeffdingTree ht(cfg);
    for (std::size_t i = 0; i < stream.xs.size(); ++i) ht.learn_one(stream.xs[i], stream.ys[i]);
    CHECK(ht.node_count() > 1);  // it actually split

    const auto test = synth_labelled_stream(1000, 6);
    int correct = 0;
    for (std::size_t i = 0; i < test.xs.size(); ++i)
        if (ht.predict(test.xs[i]) == test.ys[i]) ++correct;
    CHECK(static_cast<double>(correct) / test.xs.size() > 0.9);

    const auto [dist, best] = ht.predict_dist({0.9, 0.5});
    CHECK(dist[0] + dist[1] == doctest::Approx(1.0));
    CHECK(best == 1);

    CHECK_THROWS_AS(ht.learn_one({0.1, 0.2}, 5), model_error);
    CHECK_THROWS_AS(ht.learn_one({0.1}, 0), model_error);
}

TEST_CASE("hoeffding tree save/load preserves predictions") {
    HtConfig cfg;
    cfg.n_features = 2;
    const auto stream = synth_labelled_stream(2000, 9);
    HoeffdingTree ht(cfg);
    for (std::size_t i = 0; i < stream.xs.size(); ++i) ht.learn_one(stream.xs[i], stream.ys[i]);
    std::istringstream in(ht.save());
    const auto back = HoeffdingTree::load(in, cfg);
    const auto probes = synth_labelled_stream(300, 10);
    for (const auto& x : probes.xs) CHECK(back.predict(x) == ht.predict(x));
}

TEST_CASE("detector registry round trips names") {
    for (DetectorKind k : {DetectorKind::adwin, DetectorKind::ddm, DetectorKind::kswin,
                           DetectorKind::page_hinkley})
        CHECK(detector_from_name(detector_name(k)) == k);
    CHECK(detector_from_name("ph") == DetectorKind::page_hinkley);
    CHECK_THROWS_AS(detector_from_name("bogus"), config_error);
}

TEST_CASE("error detector wrapper reacts to an error-rate jump") {
    for (DetectorKind k : {DetectorKind::adwin, DetectorKind::ddm, DetectorKind::kswin,
                           DetectorKind::page_hinkley}) {
        ErrorDetector det(k, 0.01, 0.001, 3);
        rng_t rng(3);
        std::bernoulli_distribution low(0.05), high(0.9);
        for (int i = 0; i < 1000; ++i) det.update(low(rng) ? 1 : 0);
        bool drifted = false;
        for (int i = 0; i < 600 && !drifted; ++i)
            drifted = det.update(high(rng) ? 1 : 0) == drift::SignalKind::drift;
        CHECK(drifted);
    }
}

TEST_CASE("prequential evaluation matches a hand oracle on a constant model") {
    // 10 samples, truth = 1 for the first 4 only
    std::vector<Sample> xs(10, Sample{0.0});
    std::vector<int> ys = {1, 1, 1, 1, 0, 0, 0, 0, 0, 0};
    ConstantModel m;
    const auto pts = prequential_evaluate(xs, ys, m, /*window=*/4, /*emit_every=*/1);
    REQUIRE(pts.size() == 10);
    CHECK(pts[3].running_accuracy == doctest::Approx(1.0));
    CHECK(pts[9].running_accuracy == doctest::Approx(0.4));
    // last window holds ys[6..9] = all zeros -> 0 correct
    CHECK(pts[9].windowed_accuracy == doctest::Approx(0.0));
    CHECK(pts[4].windowed_accuracy == doctest::Approx(0.75));
    CHECK_THROWS_AS(prequential_evaluate(xs, {1, 0}, m), data_error);
}

TEST_CASE("arf learns the stationary concept") {
    ArfConfig cfg;
    cfg.n_trees = 10;
    cfg.n_classes = 2;
    cfg.n_features = 2;
    AdaptiveRandomForest arf(cfg);
    const auto stream = synth_labelled_stream(4000, 21);
    const auto pts = prequential_evaluate(stream.xs, stream.ys, arf, 500, 500);
    REQUIRE(!pts.empty());
    CHECK(pts.back().windowed_accuracy > 0.9);
    CHECK(arf.weights().size() == 10);
}

TEST_CASE("arf detects a concept flip and replaces trees") {
    ArfConfig cfg;
    cfg.n_trees = 10;
    cfg.n_classes = 2;
    cfg.n_features = 2;
    cfg.seed = 4;
    AdaptiveRandomForest arf(cfg);
    const auto stream = synth_labelled_stream(6000, 22, {3000});
    const auto pts = prequential_evaluate(stream.xs, stream.ys, arf, 500, 500);
    CHECK(arf.drift_count() > 0);
    CHECK(arf.replacement_count() > 0);
    // recovered accuracy at the end of the stream
    CHECK(pts.back().windowed_accuracy > 0.85);
}

TEST_CASE("arf without detectors never adapts") {
    ArfConfig cfg;
    cfg.n_trees = 5;
    cfg.n_classes = 2;
    cfg.n_features = 2;
    cfg.detectors_enabled = false;
    AdaptiveRandomForest arf(cfg);
    const auto stream = synth_labelled_stream(3000, 23, {1500});
    for (std::size_t i = 0; i < stream.xs.size(); ++i) arf.learn_one(stream.xs[i], stream.ys[i]);
    CHECK(arf.drift_count() == 0);
    CHECK(arf.replacement_count() == 0);
    CHECK(arf.background_count() == 0);
}

TEST_CASE("forced warning spawns background learners") {
    ArfConfig cfg;
    cfg.n_trees = 8;
    cfg.n_classes = 2;
    cfg.n_features = 2;
    AdaptiveRandomForest arf(cfg);
    CHECK(arf.background_count() == 0);
    arf.forced_warning();
    CHECK(arf.background_count() == 8);
}

TEST_CASE("arf save/load preserves predictions and rejects bad headers") {
    ArfConfig cfg;
    cfg.n_trees = 5;
    cfg.n_classes = 2;
    cfg.n_features = 2;
    AdaptiveRandomForest arf(cfg);
    const auto stream = synth_labelled_stream(1500, 31);
    for (std::size_t i = 0; i < stream.xs.size(); ++i) arf.learn_one(stream.xs[i], stream.ys[i]);
    const auto back = AdaptiveRandomForest::load(arf.save(), cfg);
    const auto probes = synth_labelled_stream(200, 32);
    for (const auto& x : probes.xs) CHECK(back.predict(x) == arf.predict(x));
    CHECK_THROWS_AS(AdaptiveRandomForest::load("aidps-arf v9\n", cfg), model_error);
    CHECK_THROWS_AS(AdaptiveRandomForest::load("other v1\n", cfg), model_error);
}

TEST_CASE("synthetic labelled stream is deterministic with ground truth") {
    const auto a = synth_labelled_stream(500, 7, {250});
    const auto b = synth_labelled_stream(500, 7, {250});
    REQUIRE(a.xs.size() == 500);
    CHECK(a.change_points == std::vector<std::size_t>{250});
    for (std::size_t i = 0; i < a.xs.size(); ++i) {
        CHECK(a.xs[i] == b.xs[i]);
        CHECK(a.ys[i] == b.ys[i]);
    }
    // concept check: before flip y = [x0 >= 0.5], after flip inverted
    for (std::size_t i = 0; i < 250; ++i) CHECK(a.ys[i] == (a.xs[i][0] < 0.5 ? 0 : 1));
    for (std::size_t i = 250; i < 500; ++i) CHECK(a.ys[i] == (a.xs[i][0] < 0.5 ? 1 : 0));
}
