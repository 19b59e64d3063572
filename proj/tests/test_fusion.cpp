#include <doctest.h>

#include <algorithm>
#include <random>
#include <sstream>

#include "csbc/error.hpp"
#include "csbc/experiment.hpp"
#include "csbc/fusion.hpp"
#include "csbc/model_io.hpp"
#include "oracles.hpp"

using namespace csbc;

namespace {

std::string written(const DetectionSet& set) {
    std::ostringstream out;
    write_detections(set, out);
    return out.str();
}

oracle::Window as_window(const Detection& d) {
    return {d.frame_id, {d.bbox.x(), d.bbox.y(), d.bbox.w(), d.bbox.h()}, d.score};
}

FusionConfig csbc_config(double lo = 0.0, double hi = 1.0) {
    FusionConfig cfg;
    cfg.mode = FusionMode::Csbc;
    cfg.clamp_low = lo;
    cfg.clamp_high = hi;
    return cfg;
}

// Three detectors on two frames: root windows with zero, one and several
// supporting windows.
struct Fixture {
    DetectionSet root{"root"};
    std::vector<DetectionSet> others{DetectionSet("b"), DetectionSet("c")};
    CalibrationTable cal;

    Fixture() {
        root.add({"f1", BoundingBox(0, 0, 10, 20), 1.0, "root"});
        root.add({"f1", BoundingBox(100, 0, 10, 20), 0.7, "root"});   // unsupported
        root.add({"f1", BoundingBox(40, 10, 12, 24), 0.3, "root"});
        root.add({"f2", BoundingBox(5, 5, 20, 40), -0.2, "root"});
        others[0].add({"f1", BoundingBox(1, 0, 10, 20), 2.0, "b"});
        others[0].add({"f1", BoundingBox(0, 2, 10, 19), 1.5, "b"});
        others[0].add({"f1", BoundingBox(41, 11, 12, 24), 0.4, "b"});
        others[0].add({"f2", BoundingBox(300, 300, 20, 40), 9.0, "b"});
        others[1].add({"f1", BoundingBox(2, 1, 9, 20), 12.0, "c"});
        others[1].add({"f1", BoundingBox(39, 8, 13, 25), 8.0, "c"});
        others[1].add({"f2", BoundingBox(6, 4, 20, 42), 10.0, "c"});
        cal.emplace("b", CalibrationMap("b", 0.5, -0.25, 0, 3));
        cal.emplace("c", CalibrationMap("c", 0.1, -0.9, 0, 20));
    }
};

}  // namespace

TEST_CASE("support lists overlapping windows of other detectors") {
    const Detection root("f", BoundingBox(0, 0, 10, 10), 1.0, "root");
    FusionConfig cfg;
    std::vector<DetectionSet> others{DetectionSet("b")};
    CHECK(find_support(root, others, cfg).empty());

    others[0].add({"f", BoundingBox(0, 0, 10, 10), 0.5, "b"});
    auto s = find_support(root, others, cfg);
    REQUIRE(s.size() == 1);
    CHECK(s[0].jaccard == 1.0);

    std::vector<DetectionSet> third{DetectionSet("b")};
    third[0].add({"f", BoundingBox(5, 0, 10, 10), 0.5, "b"});
    CHECK(find_support(root, third, cfg).empty());
    cfg.overlap_threshold = 0.25;
    CHECK(find_support(root, third, cfg).size() == 1);
}

TEST_CASE("one supporting window adds its calibrated score times overlap") {
    DetectionSet root("root");
    root.add({"f", BoundingBox(0, 0, 10, 10), 1.0, "root"});
    std::vector<DetectionSet> others{DetectionSet("b")};
    // jaccard 1/2: 10x10 against a 10x15 box sharing the top
    others[0].add({"f", BoundingBox(0, 0, 10, 20), 1.6, "b"});
    CalibrationTable cal{{"b", CalibrationMap("b", 0.5, 0.0, 0, 2)}};
    FusionConfig cfg;
    const auto result = fuse_sc(root, others, cal, cfg);
    REQUIRE(result.fused.size() == 1);
    CHECK(result.fused.frame("f")[0].score == doctest::Approx(1.4).epsilon(1e-15));
}

TEST_CASE("spatial fusion matches a double loop over all window pairs") {
    const Fixture fx;
    FusionConfig cfg;
    cfg.overlap_threshold = 0.3;
    const auto result = fuse_sc(fx.root, fx.others, fx.cal, cfg);

    std::vector<std::vector<oracle::Window>> others;
    std::vector<oracle::Affine> cal;
    for (const auto& set : fx.others) {
        std::vector<oracle::Window> ws;
        for (const auto& d : set.flatten()) {
            ws.push_back(as_window(d));
        }
        others.push_back(ws);
        const auto& m = fx.cal.at(set.detector_id());
        cal.push_back({m.slope, m.intercept});
    }
    std::vector<double> expected;
    for (const auto& d : fx.root.flatten()) {
        if (auto s = oracle::spatial_consensus(as_window(d), others, cal, cfg.overlap_threshold)) {
            expected.push_back(*s);
        }
    }
    const auto fused = result.fused.flatten();
    REQUIRE(fused.size() == expected.size());
    REQUIRE(fused.size() == 3);
    for (std::size_t i = 0; i < fused.size(); ++i) {
        CHECK(std::abs(fused[i].score - expected[i]) < 1e-12);
    }
    CHECK(result.stats.windows_in == 4);
    CHECK(result.stats.discarded == 1);
    CHECK(result.stats.windows_out == 3);
    for (const auto& d : fused) {
        CHECK(d.detector_id == "root");
        CHECK_FALSE(d.bbox == BoundingBox(100, 0, 10, 20));
    }
}

TEST_CASE("missing calibration or duplicate detectors are configuration errors") {
    Fixture fx;
    FusionConfig cfg;
    CalibrationTable partial{{"b", fx.cal.at("b")}};
    CHECK_THROWS_AS(fuse_sc(fx.root, fx.others, partial, cfg), ConfigError);
    std::vector<DetectionSet> dup{fx.others[0], fx.others[0]};
    CHECK_THROWS_AS(fuse_sc(fx.root, dup, fx.cal, cfg), ConfigError);
    std::vector<DetectionSet> self{fx.root};
    CalibrationTable root_cal{{"root", CalibrationMap::identity("root")}};
    CHECK_THROWS_AS(fuse_sc(fx.root, self, root_cal, cfg), ConfigError);
    cfg.overlap_threshold = 0.0;
    CHECK_THROWS_AS(fuse_sc(fx.root, fx.others, fx.cal, cfg), ConfigError);
}

TEST_CASE("unit weights reduce content fusion to spatial fusion without overlap factors") {
    const Fixture fx;
    ModelTable models;
    models.emplace("b", PlsModel::constant(kGrayLength, 3.0, DescriptorTag::Gray));
    models.emplace("c", PlsModel::constant(kGrayLength, 3.0, DescriptorTag::Gray));
    InMemoryImages images;
    images.insert("f1", GrayImage(400, 400, 0.5));
    images.insert("f2", GrayImage(400, 400, 0.5));
    const auto result = fuse_csbc(fx.root, fx.others, fx.cal, models, images, FeatureExtractor(DescriptorTag::Gray),
                                  csbc_config(1.0, 1.0));

    FusionConfig sc;
    const auto fused = result.fused.flatten();
    std::size_t k = 0;
    for (const auto& d : fx.root.flatten()) {
        const auto support = find_support(d, fx.others, sc);
        if (support.empty()) {
            continue;
        }
        double expected = d.score;
        for (const auto& s : support) {
            expected += fx.cal.at(s.window->detector_id).apply(s.window->score);
        }
        REQUIRE(k < fused.size());
        CHECK(fused[k].score == doctest::Approx(expected).epsilon(1e-12));
        ++k;
    }
    CHECK(k == fused.size());
}

TEST_CASE("zero weight keeps the root score and the window") {
    const Fixture fx;
    ModelTable models;
    models.emplace("b", PlsModel::constant(kGrayLength, -4.0, DescriptorTag::Gray));
    models.emplace("c", PlsModel::constant(kGrayLength, -4.0, DescriptorTag::Gray));
    InMemoryImages images;
    images.insert("f1", GrayImage(400, 400, 0.5));
    images.insert("f2", GrayImage(400, 400, 0.5));
    const auto result = fuse_csbc(fx.root, fx.others, fx.cal, models, images, FeatureExtractor(DescriptorTag::Gray),
                                  csbc_config());
    CHECK(result.stats.windows_out == 3);
    for (const auto& d : result.fused.flatten()) {
        bool found = false;
        for (const auto& r : fx.root.flatten()) {
            if (r.bbox == d.bbox && r.frame_id == d.frame_id) {
                CHECK(d.score == r.score);
                found = true;
            }
        }
        CHECK(found);
    }
}

TEST_CASE("content fusion validates its models and images") {
    const Fixture fx;
    InMemoryImages images;
    images.insert("f1", GrayImage(400, 400, 0.5));
    ModelTable models;
    models.emplace("b", PlsModel::constant(kGrayLength, 1.0, DescriptorTag::Gray));
    const FeatureExtractor gray(DescriptorTag::Gray);
    CHECK_THROWS_AS(fuse_csbc(fx.root, fx.others, fx.cal, models, images, gray, csbc_config()), ConfigError);
    models.emplace("c", PlsModel::constant(kGlcmLength, 1.0, DescriptorTag::Glcm));
    CHECK_THROWS_AS(fuse_csbc(fx.root, fx.others, fx.cal, models, images, gray, csbc_config()), ConfigError);
    models.erase("c");
    models.emplace("c", PlsModel::constant(kGrayLength, 1.0, DescriptorTag::Gray));
    // f2 has a supported root window but no image
    CHECK_THROWS_AS(fuse_csbc(fx.root, fx.others, fx.cal, models, images, gray, csbc_config()), IoError);
    CHECK_THROWS_AS(fuse_sc(fx.root, fx.others, fx.cal, csbc_config()), ConfigError);
}

TEST_CASE("content weights lower roots supported by the wrong content") {
    // one feature per window: 1 for class-A content, 0 for class-B content
    auto table = std::make_shared<PrecomputedFeatures>();
    DetectionSet root("root");
    std::vector<DetectionSet> others{DetectionSet("d")};
    for (int i = 0; i < 10; ++i) {
        const std::string frame = "f" + std::to_string(i);
        const BoundingBox r(10, 10, 20, 40);
        const BoundingBox s(11, 10, 20, 40);
        root.add({frame, r, 0.5, "root"});
        others[0].add({frame, s, 2.0 + 0.1 * i, "d"});
        table->insert(frame, s, {i % 2 == 0 ? 1.0 : 0.0});
    }
    Eigen::MatrixXd X(4, 1);
    X << 1, 0, 1, 0;
    Eigen::VectorXd y(4);
    y << 0.95, 0.05, 0.9, 0.0;
    ModelTable models;
    models.emplace("d", fit_pls(X, y, 1));
    const CalibrationTable cal{{"d", CalibrationMap::identity("d")}};
    const InMemoryImages none;
    const auto sc = fuse_sc(root, others, cal, FusionConfig{}).fused.flatten();
    const auto cb = fuse_csbc(root, others, cal, models, none, FeatureExtractor(table), csbc_config()).fused.flatten();
    REQUIRE(sc.size() == 10);
    REQUIRE(cb.size() == 10);
    for (std::size_t i = 0; i < 10; ++i) {
        if (i % 2 == 1) {
            CHECK(cb[i].score < sc[i].score);
        }
    }
}

TEST_CASE("best-per-detector policy keeps one window per detector") {
    const Fixture fx;
    FusionConfig cfg;
    cfg.support_policy = SupportPolicy::BestPerDetector;
    const Detection& first = fx.root.frame("f1")[0];
    const auto all = find_support(first, fx.others, FusionConfig{});
    const auto best = find_support(first, fx.others, cfg);
    CHECK(all.size() == 3);
    REQUIRE(best.size() == 2);
    CHECK(best[0].window->detector_id == "b");
    CHECK(best[0].jaccard == std::max(all[0].jaccard, all[1].jaccard));
}

TEST_CASE("multiplying by overlap scales content terms") {
    const Fixture fx;
    ModelTable models;
    models.emplace("b", PlsModel::constant(kGrayLength, 1.0, DescriptorTag::Gray));
    models.emplace("c", PlsModel::constant(kGrayLength, 1.0, DescriptorTag::Gray));
    InMemoryImages images;
    images.insert("f1", GrayImage(400, 400, 0.5));
    images.insert("f2", GrayImage(400, 400, 0.5));
    auto cfg = csbc_config();
    cfg.multiply_jaccard = true;
    const auto cb = fuse_csbc(fx.root, fx.others, fx.cal, models, images, FeatureExtractor(DescriptorTag::Gray), cfg);
    const auto sc = fuse_sc(fx.root, fx.others, fx.cal, FusionConfig{});
    CHECK(written(cb.fused) == written(sc.fused));
}

TEST_CASE("support detector order does not change the output") {
    auto exp = default_experiment();
    std::mt19937_64 rng(77);
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        const auto ds = make_dataset(seed, 15, exp.scene, exp.profiles);
        CalibrationTable cal;
        std::vector<DetectionSet> support(ds.detections.begin() + 1, ds.detections.end());
        for (const auto& s : support) {
            cal.emplace(s.detector_id(), CalibrationMap(s.detector_id(), 0.3, -0.1, 0, 1));
        }
        const auto reference = written(fuse_sc(ds.detections[0], support, cal, FusionConfig{}).fused);
        for (int k = 0; k < 5; ++k) {
            std::shuffle(support.begin(), support.end(), rng);
            CHECK(written(fuse_sc(ds.detections[0], support, cal, FusionConfig{}).fused) == reference);
        }
    }
}
