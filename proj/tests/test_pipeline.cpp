#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <optional>
#include <vector>

#include "aidps/pipeline.hpp"

using namespace aidps;
using namespace aidps::pipeline;

namespace {

featurize::FeatureVector make_fv(rng_t& rng, int label) {
    featurize::FeatureVector f;
    f.packet_status_cat = static_cast<double>(rng() % 3);
    f.sender_mac = uniform_real(rng, 0, 50);
    f.et = uniform_real(rng, 0, 1);
    f.packet_info2_cat = 0;
    f.cumulative_count = uniform_real(rng, 0, 1000);
    f.sender_rtr = uniform_real(rng, 0, 50);
    f.mac_ratio = uniform_real(rng, 0, 1);
    f.er = uniform_real(rng, 0, 1);
    f.rtr_ratio = uniform_real(rng, 0, 1);
    f.energy = uniform_real(rng, 50, 100);
    f.time = uniform_real(rng, 0, 600);
    f.sent_packet_number = uniform_real(rng, 0, 6000);
    f.dst_port_cat = 0;
    f.src_port_cat = 0;
    f.flag_cat = static_cast<double>(rng() % 2);
    f.trace_type_cat = static_cast<double>(rng() % 2);
    f.label = label;
    if (label > 0) {
        // attacks sit far outside the normal feature envelope
        f.et = 5.0 + uniform_real(rng, 0, 1);
        f.energy = uniform_real(rng, 0, 10);
        f.er = 4.0 + uniform_real(rng, 0, 1);
    }
    return f;
}

std::vector<featurize::FeatureVector> synthetic_rows(std::size_t n, std::uint64_t seed) {
    rng_t rng(seed);
    std::vector<featurize::FeatureVector> rows;
    for (std::size_t i = 0; i < n; ++i) rows.push_back(make_fv(rng, i % 10 == 0 ? 1 : 0));
    return rows;
}

PipelineConfig small_config() {
    PipelineConfig cfg;
    cfg.nu = 0.05;
    cfg.ensemble_size = 3;
    cfg.gate_train_cap = 500;
    cfg.ensemble_train_cap = 300;
    cfg.arf.n_trees = 5;
    cfg.arf.n_classes = 4;
    cfg.arf.n_features = featurize::kFeatureCount;
    cfg.kdq.window_size = 200;
    cfg.kdq.bootstrap_samples = 100;
    return cfg;
}

}  // namespace

TEST_CASE("final_decision truth table") {
    // gate-normal rows are final: no downstream input allowed
    const auto a = final_decision(+1, std::nullopt, std::nullopt);
    CHECK(!a.attack);
    CHECK(a.stage == VerdictStage::gate_normal);
    CHECK(!a.attack_class);

    // gate anomaly + ARF class -> attack with that class
    const auto b = final_decision(-1, 2, std::nullopt);
    CHECK(b.attack);
    CHECK(b.stage == VerdictStage::arf_attack);
    CHECK(b.attack_class == 2);

    // gate anomaly + ARF normal -> ensemble decides
    const auto c = final_decision(-1, 0, -1);
    CHECK(c.attack);
    CHECK(c.stage == VerdictStage::ensemble_outlier);
    CHECK(!c.attack_class);
    const auto d = final_decision(-1, 0, +1);
    CHECK(!d.attack);
    CHECK(d.stage == VerdictStage::ensemble_inlier);

    // inconsistent combinations are hard errors
    CHECK_THROWS_AS(final_decision(+1, 1, std::nullopt), data_error);
    CHECK_THROWS_AS(final_decision(+1, std::nullopt, -1), data_error);
    CHECK_THROWS_AS(final_decision(0, 1, std::nullopt), data_error);
    CHECK_THROWS_AS(final_decision(-1, std::nullopt, std::nullopt), data_error);
    CHECK_THROWS_AS(final_decision(-1, 3, -1), data_error);
    CHECK_THROWS_AS(final_decision(-1, 0, std::nullopt), data_error);
}

TEST_CASE("normal_rows filters by label and caps with a stride") {
    rng_t rng(1);
    std::vector<featurize::FeatureVector> rows;
    for (int i = 0; i < 100; ++i) rows.push_back(make_fv(rng, i < 80 ? 0 : 1));
    const auto all = detail::normal_rows(rows, 0);
    CHECK(all.size() == 80);
    const auto capped = detail::normal_rows(rows, 25);
    CHECK(capped.size() == 25);
    CHECK(capped.front() == all.front());
}

TEST_CASE("pipeline separates synthetic attacks from normals") {
    const auto rows = synthetic_rows(3000, 11);
    const auto rep = run_pipeline(rows, small_config());

    CHECK(rep.binary.tpr >= 0.95);
    CHECK(rep.binary.fpr <= 0.10);
    CHECK(rep.binary.auc > 0.9);

    // one verdict per evaluated row; trigger indices match attack verdicts
    const std::size_t eval_n = rows.size() - static_cast<std::size_t>(0.7 * rows.size());
    CHECK(rep.verdicts.size() == eval_n);
    CHECK(rep.counters.processed == static_cast<long>(eval_n));
    std::vector<std::size_t> attacks;
    for (const auto& v : rep.verdicts)
        if (v.attack) attacks.push_back(v.index);
    CHECK(attacks == rep.trigger_indices);
    CHECK(rep.counters.triggers == static_cast<long>(attacks.size()));
    CHECK(rep.counters.attacks == rep.counters.triggers);
    CHECK(rep.counters.anomalies >= rep.counters.attacks);
}

TEST_CASE("pipeline counters and stages are coherent step by step") {
    const auto rows = synthetic_rows(2000, 13);
    auto cfg = small_config();
    const std::size_t split = static_cast<std::size_t>(0.7 * rows.size());
    std::vector<featurize::FeatureVector> train(rows.begin(), rows.begin() + split);
    auto models = train_pipeline(train, cfg);
    PipelineState st(std::move(models), cfg);

    long attacks = 0;
    for (std::size_t i = split; i < rows.size(); ++i) {
        const auto v = st.step(rows[i], rows[i].label);
        if (v.attack) {
            ++attacks;
            CHECK((v.stage == VerdictStage::arf_attack || v.stage == VerdictStage::ensemble_outlier));
            if (v.stage == VerdictStage::arf_attack) {
                REQUIRE(v.attack_class.has_value());
                CHECK(*v.attack_class >= 1);
                CHECK(*v.attack_class <= 3);
            }
        } else {
            CHECK((v.stage == VerdictStage::gate_normal || v.stage == VerdictStage::ensemble_inlier));
            CHECK(!v.attack_class);
        }
    }
    CHECK(st.counters().attacks == attacks);
    CHECK(st.counters().processed == static_cast<long>(rows.size() - split));
}

TEST_CASE("ensemble_always exercises the re-check on ARF attacks too") {
    const auto rows = synthetic_rows(1500, 17);
    auto cfg = small_config();
    cfg.ensemble_always = true;
    const auto rep = run_pipeline(rows, cfg);
    CHECK(rep.binary.tpr >= 0.9);
}

TEST_CASE("detect-only mode works without labels") {
    const auto rows = synthetic_rows(1500, 19);
    auto cfg = small_config();
    cfg.prequential_labels = false;
    const std::size_t split = static_cast<std::size_t>(0.7 * rows.size());
    std::vector<featurize::FeatureVector> train(rows.begin(), rows.begin() + split);
    auto models = train_pipeline(train, cfg);
    PipelineState st(std::move(models), cfg);
    for (std::size_t i = split; i < rows.size(); ++i)
        CHECK_NOTHROW(st.step(rows[i], std::nullopt));
    CHECK(st.counters().processed > 0);
}

TEST_CASE("kdq coupling runs over full windows without spurious alarms") {
    const auto rows = synthetic_rows(2500, 23);
    auto cfg = small_config();
    cfg.kdq.window_size = 150;
    const auto rep = run_pipeline(rows, cfg);
    // stationary synthetic stream: the distribution monitor stays quiet
    // (a rare boundary alarm is tolerated)
    CHECK(rep.drift_events.size() <= 2);
}

TEST_CASE("degenerate inputs are rejected") {
    CHECK_THROWS_AS(run_pipeline({}, small_config()), data_error);
    const auto rows = synthetic_rows(2000, 29);
    auto cfg = small_config();
    std::vector<featurize::FeatureVector> attacks_only;
    for (const auto& r : rows)
        if (r.label != 0) attacks_only.push_back(r);
    CHECK_THROWS_AS(train_pipeline(attacks_only, cfg), data_error);
    auto models = train_pipeline(rows, cfg);
    CHECK_THROWS_AS(evaluate_pipeline(std::move(models), {}, cfg), data_error);
}
