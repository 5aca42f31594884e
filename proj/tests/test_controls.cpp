#include <catch2/catch_amalgamated.hpp>

#include <sanet/controls.hpp>
#include <sanet/image.hpp>

using namespace sanet;

namespace {

// network with nonzero W_cs so attention actually contributes
TransformNet test_net() {
    TransformNet net = make_network<float>(81, 82, 16, 8);
    Rng rng(83);
    for (auto [name, t] : net.params())
        for (auto& v : t->data) v += 0.05f * static_cast<float>(rng.uniform() - 0.5);
    return net;
}

MaskSet halves(int h, int w, bool flipped = false) {
    Tensor left(Shape{1, 1, h, w}), right(Shape{1, 1, h, w});
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const bool is_left = x < w / 2;
            left.at(0, 0, y, x) = is_left ? 1.0f : 0.0f;
            right.at(0, 0, y, x) = is_left ? 0.0f : 1.0f;
        }
    MaskSet ms;
    if (flipped) {
        ms.masks = {right, left};
    } else {
        ms.masks = {left, right};
    }
    return ms;
}

}  // namespace

TEST_CASE("tradeoff validates alpha", "[controls]") {
    TransformNet net = test_net();
    Tensor c = synth_image(SynthKind::Blobs, 1, 32);
    Tensor s = synth_image(SynthKind::Stripes, 2, 32);
    CHECK_THROWS_AS(tradeoff_features(net, c, s, -0.1), std::invalid_argument);
    CHECK_THROWS_AS(tradeoff_features(net, c, s, 1.1), std::invalid_argument);
    CHECK_THROWS_AS(tradeoff_features(net, c, s, std::nan("")), std::invalid_argument);
}

TEST_CASE("tradeoff endpoints are bit-exact", "[controls]") {
    TransformNet net = test_net();
    Tensor c = synth_image(SynthKind::Blobs, 3, 32);
    Tensor s = synth_image(SynthKind::Stripes, 4, 32);
    CHECK(exactly_equal(tradeoff_features(net, c, s, 1.0), stylize(net, c, s).features));
    CHECK(exactly_equal(tradeoff_features(net, c, s, 0.0), stylize(net, c, c).features));
    // decoded endpoint too
    CHECK(exactly_equal(tradeoff(net, c, s, 1.0), stylize(net, c, s).image));
}

TEST_CASE("tradeoff midpoint matches a scalar reference", "[controls]") {
    TransformNet net = test_net();
    Tensor c = synth_image(SynthKind::Blobs, 5, 32);
    Tensor s = synth_image(SynthKind::Stripes, 6, 32);
    Tensor mid = tradeoff_features(net, c, s, 0.5);
    Tensor f_cs = stylize(net, c, s).features;
    Tensor f_cc = stylize(net, c, c).features;
    REQUIRE(mid.shape == f_cs.shape);
    for (int i = 0; i < mid.numel(); ++i) {
        const float want = static_cast<float>(0.5 * static_cast<double>(f_cs.data[i]) +
                                              0.5 * static_cast<double>(f_cc.data[i]));
        REQUIRE(mid.data[i] == want);
    }
    // the blend actually changes something
    CHECK(max_abs_diff(mid, f_cs) > 0.0);
}

TEST_CASE("interpolate validates its weights", "[controls]") {
    TransformNet net = test_net();
    Tensor c = synth_image(SynthKind::Blobs, 7, 32);
    std::vector<Tensor> styles{synth_image(SynthKind::Stripes, 8, 32),
                               synth_image(SynthKind::Checker, 9, 32)};
    CHECK_THROWS_AS(interpolate_features(net, c, styles, {0.5}), std::invalid_argument);
    CHECK_THROWS_AS(interpolate_features(net, c, styles, {0.7, 0.7}), std::invalid_argument);
    CHECK_THROWS_AS(interpolate_features(net, c, styles, {1.5, -0.5}), std::invalid_argument);
    CHECK_THROWS_AS(interpolate_features(net, c, {}, {}), std::invalid_argument);
}

TEST_CASE("interpolate with a single unit weight is stylize", "[controls]") {
    TransformNet net = test_net();
    Tensor c = synth_image(SynthKind::Blobs, 10, 32);
    Tensor s = synth_image(SynthKind::Stripes, 11, 32);
    Tensor f = interpolate_features(net, c, {s}, {1.0});
    CHECK(exactly_equal(f, stylize(net, c, s).features));
}

TEST_CASE("interpolate over copies of one style is stylize", "[controls]") {
    TransformNet net = test_net();
    Tensor c = synth_image(SynthKind::Blobs, 12, 32);
    Tensor s = synth_image(SynthKind::Checker, 13, 32);
    Tensor f = interpolate_features(net, c, {s, s}, {0.3, 1.0 - 0.3});
    CHECK(exactly_equal(f, stylize(net, c, s).features));
}

TEST_CASE("interpolate matches a manual weighted sum", "[controls]") {
    TransformNet net = test_net();
    Tensor c = synth_image(SynthKind::Blobs, 14, 32);
    std::vector<Tensor> styles{synth_image(SynthKind::Stripes, 15, 32),
                               synth_image(SynthKind::Checker, 16, 32),
                               synth_image(SynthKind::Blobs, 17, 32)};
    std::vector<double> w{0.2, 0.3, 0.5};
    Tensor got = interpolate_features(net, c, styles, w);
    Tensor want(got.shape);
    std::vector<double> acc(static_cast<size_t>(got.numel()), 0.0);
    for (size_t k = 0; k < styles.size(); ++k) {
        Tensor f = stylize(net, c, styles[k]).features;
        for (int i = 0; i < f.numel(); ++i) acc[i] += w[k] * static_cast<double>(f.data[i]);
    }
    for (int i = 0; i < want.numel(); ++i) want.data[i] = static_cast<float>(acc[i]);
    CHECK(max_abs_diff(got, want) < 1e-6);
}

TEST_CASE("check_partition accepts exact covers and rejects the rest", "[controls]") {
    CHECK_NOTHROW(check_partition(halves(4, 4)));

    MaskSet empty;
    CHECK_THROWS_AS(check_partition(empty), std::invalid_argument);

    MaskSet overlap = halves(4, 4);
    overlap.masks[1].at(0, 0, 0, 0) = 1.0f;  // position covered twice
    CHECK_THROWS_WITH(check_partition(overlap), Catch::Matchers::ContainsSubstring("partition"));

    MaskSet gap = halves(4, 4);
    gap.masks[1].at(0, 0, 0, 3) = 0.0f;  // position uncovered
    CHECK_THROWS_AS(check_partition(gap), std::invalid_argument);

    MaskSet soft = halves(4, 4);
    soft.masks[0].at(0, 0, 0, 0) = 0.5f;
    CHECK_THROWS_WITH(check_partition(soft), Catch::Matchers::ContainsSubstring("0/1"));

    MaskSet mixed = halves(4, 4);
    mixed.masks[1] = Tensor(Shape{1, 1, 2, 8});
    CHECK_THROWS_AS(check_partition(mixed), std::invalid_argument);
}

TEST_CASE("make_mask_set samples the red channel at stride points", "[controls]") {
    // 32x32 mask images at stride 8 -> 4x4 feature masks
    Tensor left(Shape{1, 3, 32, 32}), right(Shape{1, 3, 32, 32});
    for (int y = 0; y < 32; ++y)
        for (int x = 0; x < 32; ++x) {
            left.at(0, 0, y, x) = x < 16 ? 0.8f : 0.0f;
            right.at(0, 0, y, x) = x < 16 ? 0.0f : 0.8f;
            right.at(0, 1, y, x) = 1.0f;  // green channel is ignored
        }
    MaskSet ms = make_mask_set({left, right}, 4, 4, 8);
    REQUIRE(ms.masks.size() == 2);
    for (int y = 0; y < 4; ++y) {
        CHECK(ms.masks[0].at(0, 0, y, 0) == 1.0f);
        CHECK(ms.masks[0].at(0, 0, y, 3) == 0.0f);
        CHECK(ms.masks[1].at(0, 0, y, 0) == 0.0f);
        CHECK(ms.masks[1].at(0, 0, y, 3) == 1.0f);
    }
    CHECK_THROWS_AS(make_mask_set({Tensor(Shape{1, 3, 16, 16})}, 4, 4, 8), std::invalid_argument);
}

TEST_CASE("spatial control with one all-ones mask is stylize", "[controls]") {
    TransformNet net = test_net();
    Tensor c = synth_image(SynthKind::Blobs, 18, 32);
    Tensor s = synth_image(SynthKind::Stripes, 19, 32);
    Tensor f_cs = stylize(net, c, s).features;
    MaskSet ones;
    ones.masks.push_back(Tensor(Shape{1, 1, f_cs.shape.h, f_cs.shape.w}));
    std::fill(ones.masks[0].data.begin(), ones.masks[0].data.end(), 1.0f);
    CHECK(exactly_equal(spatial_features(net, c, {s}, ones), f_cs));
}

TEST_CASE("spatial control with identical styles is stylize", "[controls]") {
    TransformNet net = test_net();
    Tensor c = synth_image(SynthKind::Blobs, 20, 32);
    Tensor s = synth_image(SynthKind::Checker, 21, 32);
    Tensor f_cs = stylize(net, c, s).features;
    CHECK(exactly_equal(spatial_features(net, c, {s, s}, halves(f_cs.shape.h, f_cs.shape.w)), f_cs));
}

TEST_CASE("spatial control copies blocks from the right style", "[controls]") {
    TransformNet net = test_net();
    Tensor c = synth_image(SynthKind::Blobs, 22, 32);
    Tensor s1 = synth_image(SynthKind::Stripes, 23, 32);
    Tensor s2 = synth_image(SynthKind::Checker, 24, 32);
    Tensor f1 = stylize(net, c, s1).features;
    Tensor f2 = stylize(net, c, s2).features;
    Tensor mixed = spatial_features(net, c, {s1, s2}, halves(f1.shape.h, f1.shape.w));
    const int half = f1.shape.w / 2;
    for (int ch = 0; ch < mixed.shape.c; ++ch)
        for (int y = 0; y < mixed.shape.h; ++y)
            for (int x = 0; x < mixed.shape.w; ++x) {
                const float want = x < half ? f1.at(0, ch, y, x) : f2.at(0, ch, y, x);
                REQUIRE(mixed.at(0, ch, y, x) == want);
            }
}

TEST_CASE("spatial control validates counts and extents", "[controls]") {
    TransformNet net = test_net();
    Tensor c = synth_image(SynthKind::Blobs, 25, 32);
    Tensor s = synth_image(SynthKind::Stripes, 26, 32);
    MaskSet ones;
    ones.masks.push_back(Tensor(Shape{1, 1, 4, 4}));
    std::fill(ones.masks[0].data.begin(), ones.masks[0].data.end(), 1.0f);
    CHECK_THROWS_AS(spatial_features(net, c, {s, s}, ones), std::invalid_argument);
    // masks at the wrong resolution
    CHECK_THROWS_AS(spatial_features(net, c, {s, s}, halves(2, 2)), std::invalid_argument);
}
