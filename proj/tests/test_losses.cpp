#include <catch2/catch_amalgamated.hpp>

#include <sanet/image.hpp>
#include <sanet/losses.hpp>
#include <sanet/network.hpp>

using namespace sanet;

namespace {

EncodeTapsT<float> leaf_taps(Graph& g, const std::array<Tensor, kNumTaps>& t) {
    EncodeTapsT<float> out;
    for (int i = 0; i < kNumTaps; ++i) out.taps[i] = g.leaf(t[i]);
    return out;
}

std::array<Tensor, kNumTaps> random_taps(Rng& rng, float shift = 0.0f) {
    std::array<Tensor, kNumTaps> t{
        random_tensor<float>(Shape{1, 4, 16, 16}, rng), random_tensor<float>(Shape{1, 6, 8, 8}, rng),
        random_tensor<float>(Shape{1, 6, 4, 4}, rng),   random_tensor<float>(Shape{1, 6, 2, 2}, rng),
        random_tensor<float>(Shape{1, 6, 1, 1}, rng)};
    for (auto& x : t)
        for (auto& v : x.data) v += shift;
    return t;
}

}  // namespace

TEST_CASE("paper loss weights", "[losses]") {
    LossWeights w;
    CHECK(w.lambda_c == 1.0);
    CHECK(w.lambda_s == 3.0);
    CHECK(w.lambda_id1 == 1.0);
    CHECK(w.lambda_id2 == 50.0);
}

TEST_CASE("losses vanish exactly on identical inputs", "[losses]") {
    Graph g;
    Rng rng(3);
    auto t = random_taps(rng);
    EncodeTapsT<float> a = leaf_taps(g, t);
    EncodeTapsT<float> b = leaf_taps(g, t);
    CHECK(content_loss_graph(a, b).tensor().item() == 0.0f);
    CHECK(style_loss_graph(a, b).total.tensor().item() == 0.0f);
    CHECK(identity2_loss_graph(a, b, a, b).tensor().item() == 0.0f);
    Value img = g.leaf(random_tensor<float>(Shape{1, 3, 8, 8}, rng));
    CHECK(identity1_loss_graph(img, img, img, img).tensor().item() == 0.0f);
}

TEST_CASE("content loss ignores per-channel affine changes", "[losses]") {
    Graph g;
    Rng rng(5);
    auto t = random_taps(rng);
    auto scaled = t;
    for (auto& x : scaled)
        for (auto& v : x.data) v = 1.7f * v - 0.4f;
    Value loss = content_loss_graph(leaf_taps(g, scaled), leaf_taps(g, t));
    CHECK(std::abs(loss.tensor().item()) < 1e-4);
}

TEST_CASE("content loss sees non-affine changes", "[losses]") {
    Graph g;
    Rng rng(7);
    auto t = random_taps(rng);
    auto other = random_taps(rng, 0.3f);
    Value loss = content_loss_graph(leaf_taps(g, other), leaf_taps(g, t));
    CHECK(loss.tensor().item() > 1e-3f);
}

TEST_CASE("style loss hand value on constant taps", "[losses]") {
    // constant channels: means differ by 2 per channel, stds are equal,
    // so each tap contributes mse(mu) = 4 and the five taps sum to 20
    Graph g;
    std::array<Tensor, kNumTaps> out, sty;
    for (int i = 0; i < kNumTaps; ++i) {
        out[i] = Tensor(Shape{1, 3, 4, 4});
        sty[i] = Tensor(Shape{1, 3, 4, 4});
        std::fill(out[i].data.begin(), out[i].data.end(), 2.0f);
    }
    StyleLossGraphT<float> sl = style_loss_graph(leaf_taps(g, out), leaf_taps(g, sty));
    for (int i = 0; i < kNumTaps; ++i)
        CHECK(sl.layers[i].tensor().item() == Catch::Approx(4.0).margin(1e-6));
    CHECK(sl.total.tensor().item() == Catch::Approx(20.0).margin(1e-5));
}

TEST_CASE("style loss is invariant to spatial shuffling within a tap", "[losses]") {
    Graph g;
    Rng rng(11);
    auto t = random_taps(rng);
    auto shuffled = t;
    // reverse every plane; channel statistics cannot tell
    for (auto& x : shuffled) {
        Shape s = x.shape;
        for (int c = 0; c < s.c; ++c) {
            std::reverse(x.data.begin() + static_cast<long>(x.index(0, c, 0, 0)),
                         x.data.begin() + static_cast<long>(x.index(0, c, 0, 0)) + s.h * s.w);
        }
    }
    Rng rng2(13);
    auto ref = random_taps(rng2);
    Value a = style_loss_graph(leaf_taps(g, t), leaf_taps(g, ref)).total;
    Value b = style_loss_graph(leaf_taps(g, shuffled), leaf_taps(g, ref)).total;
    CHECK(std::abs(a.tensor().item() - b.tensor().item()) < 1e-6);
}

TEST_CASE("identity1 hand value", "[losses]") {
    Graph g;
    Tensor x(Shape{1, 3, 2, 2});
    Tensor y = x;
    for (auto& v : y.data) v += 1.0f;  // mse = 1
    Value loss = identity1_loss_graph(g.leaf(y), g.leaf(x), g.leaf(x), g.leaf(x));
    CHECK(loss.tensor().item() == 1.0f);
}

TEST_CASE("identity2 hand value", "[losses]") {
    Graph g;
    Rng rng(17);
    auto t = random_taps(rng);
    auto off = t;
    for (auto& x : off)
        for (auto& v : x.data) v += 0.5f;  // mse = 0.25 per tap, one pair
    Value loss = identity2_loss_graph(leaf_taps(g, off), leaf_taps(g, t), leaf_taps(g, t),
                                      leaf_taps(g, t));
    CHECK(loss.tensor().item() == Catch::Approx(0.25 * kNumTaps).margin(1e-5));
}

TEST_CASE("total loss is the weighted sum of its parts", "[losses]") {
    TransformNet net = make_network<float>(23, 24, 8, 4);
    Rng rng(29);
    for (auto [name, t] : net.params())
        for (auto& v : t->data) v += 0.05f * static_cast<float>(rng.uniform() - 0.5);
    Tensor content = synth_image(SynthKind::Blobs, 31, 32);
    Tensor style = synth_image(SynthKind::Stripes, 32, 32);
    Graph g;
    NetValuesT<float> v = net_leaves(g, net, true);
    LossWeights w;
    w.lambda_c = 2.0;
    w.lambda_s = 5.0;
    w.lambda_id1 = 0.5;
    w.lambda_id2 = 10.0;
    TotalLossGraphT<float> l = total_loss_graph(g, net, v, g.leaf(content), g.leaf(style), w);
    LossReport r = l.report();
    CHECK(r.total ==
          Catch::Approx(2.0 * r.content + 5.0 * r.style + 0.5 * r.identity1 + 10.0 * r.identity2)
              .epsilon(1e-5));
    CHECK(r.total > 0.0);
    double layer_sum = 0;
    for (double s : r.style_layers) layer_sum += s;
    CHECK(r.style == Catch::Approx(layer_sum).epsilon(1e-5));
    CHECK_NOTHROW(g.backward(l.total));
}

TEST_CASE("loss csv header and row formatting", "[losses]") {
    CHECK(loss_csv_header() == "step,total,content,style,identity1,identity2");
    LossReport r;
    r.total = 1.0;
    r.content = 2.0;
    r.style = 3.5;
    r.identity1 = 4.0;
    r.identity2 = 5.0;
    CHECK(loss_csv_row(7, r) == "7,1,2,3.5,4,5");
}
