#include <catch2/catch_amalgamated.hpp>

#include <sanet/ops.hpp>
#include <sanet/tensor.hpp>

using namespace sanet;

namespace {

Tensor make(Shape s, std::initializer_list<float> vals) {
    Tensor t(s);
    REQUIRE(static_cast<size_t>(t.numel()) == vals.size());
    std::copy(vals.begin(), vals.end(), t.data.begin());
    return t;
}

}  // namespace

TEST_CASE("shape numel and indexing", "[tensor]") {
    Shape s{2, 3, 4, 5};
    CHECK(s.numel() == 120);
    Tensor t(s);
    CHECK(t.numel() == 120);
    t.at(1, 2, 3, 4) = 9.0f;
    CHECK(t.data[119] == 9.0f);  // row-major NCHW: last coordinate is last slot
    t.at(0, 0, 0, 1) = 5.0f;
    CHECK(t.data[1] == 5.0f);
}

TEST_CASE("item requires scalar", "[tensor]") {
    Tensor t(Shape{1, 1, 1, 1});
    t.data[0] = 3.5f;
    CHECK(t.item() == 3.5f);
    Tensor t2(Shape{1, 1, 1, 2});
    CHECK_THROWS_AS(t2.item(), std::invalid_argument);
}

TEST_CASE("max_abs_diff and exactly_equal", "[tensor]") {
    Tensor a = make(Shape{1, 1, 1, 3}, {1.0f, 2.0f, 3.0f});
    Tensor b = make(Shape{1, 1, 1, 3}, {1.0f, 2.5f, 3.0f});
    CHECK(max_abs_diff(a, b) == 0.5);
    CHECK(exactly_equal(a, a));
    CHECK_FALSE(exactly_equal(a, b));
    Tensor c(Shape{1, 1, 3, 1});
    CHECK_THROWS_AS(max_abs_diff(a, c), std::invalid_argument);
    // -0 and +0 compare equal under operator!=
    Tensor z1 = make(Shape{1, 1, 1, 1}, {0.0f});
    Tensor z2 = make(Shape{1, 1, 1, 1}, {-0.0f});
    CHECK(exactly_equal(z1, z2));
}

TEST_CASE("graph backward requires scalar loss and same graph", "[tensor]") {
    Graph g;
    Value x = g.leaf(make(Shape{1, 1, 1, 2}, {1.0f, 2.0f}), true);
    CHECK_THROWS_AS(g.backward(x), std::invalid_argument);
    Graph g2;
    Value y = g2.leaf(make(Shape{1, 1, 1, 1}, {1.0f}));
    CHECK_THROWS_AS(g.backward(y), std::invalid_argument);
}

TEST_CASE("gradients accumulate across reuse", "[tensor]") {
    Graph g;
    Value x = g.leaf(make(Shape{1, 1, 1, 1}, {3.0f}), true);
    Value loss = sum_all(add(x, x));
    g.backward(loss);
    CHECK(g.grad(x.id).data[0] == 2.0f);
}

TEST_CASE("relu forward and subgradient at zero", "[tensor]") {
    Graph g;
    Value x = g.leaf(make(Shape{1, 1, 1, 4}, {-1.0f, 0.0f, 0.5f, 2.0f}), true);
    Value y = relu(x);
    CHECK(y.tensor().data == std::vector<float>{0.0f, 0.0f, 0.5f, 2.0f});
    g.backward(sum_all(y));
    // relu'(0) = 0 by convention
    CHECK(g.grad(x.id).data == std::vector<float>{0.0f, 0.0f, 1.0f, 1.0f});
}

TEST_CASE("elementwise arithmetic and backward", "[tensor]") {
    Graph g;
    Value a = g.leaf(make(Shape{1, 1, 1, 2}, {1.0f, 2.0f}), true);
    Value b = g.leaf(make(Shape{1, 1, 1, 2}, {3.0f, 5.0f}), true);
    CHECK(add(a, b).tensor().data == std::vector<float>{4.0f, 7.0f});
    CHECK(sub(a, b).tensor().data == std::vector<float>{-2.0f, -3.0f});
    CHECK(mul(a, b).tensor().data == std::vector<float>{3.0f, 10.0f});
    CHECK(scale(a, 2.5).tensor().data == std::vector<float>{2.5f, 5.0f});

    Value loss = sum_all(mul(a, b));
    g.backward(loss);
    CHECK(g.grad(a.id).data == std::vector<float>{3.0f, 5.0f});
    CHECK(g.grad(b.id).data == std::vector<float>{1.0f, 2.0f});

    Tensor other(Shape{1, 1, 2, 1});
    Graph g2;
    CHECK_THROWS_AS(add(g2.leaf(make(Shape{1, 1, 1, 2}, {0, 0})), g2.leaf(other)),
                    std::invalid_argument);
}

TEST_CASE("mse hand value and gradient", "[tensor]") {
    Graph g;
    Value a = g.leaf(make(Shape{1, 1, 1, 2}, {0.0f, 2.0f}), true);
    Value b = g.leaf(make(Shape{1, 1, 1, 2}, {0.0f, 0.0f}));
    Value loss = mse(a, b);
    CHECK(loss.tensor().item() == 2.0f);  // (0 + 4) / 2
    g.backward(loss);
    CHECK(g.grad(a.id).data == std::vector<float>{0.0f, 2.0f});  // 2(a-b)/n
}

TEST_CASE("pad2d reflect mirrors without repeating the edge", "[tensor]") {
    Graph g;
    Value x = g.leaf(make(Shape{1, 1, 2, 4}, {1, 2, 3, 4, 5, 6, 7, 8}));
    Value y = pad2d(x, 1, PadMode::Reflect);
    CHECK(y.tensor().shape == Shape{1, 1, 4, 6});
    std::vector<float> top(y.tensor().data.begin(), y.tensor().data.begin() + 6);
    std::vector<float> row1(y.tensor().data.begin() + 6, y.tensor().data.begin() + 12);
    CHECK(top == std::vector<float>{6, 5, 6, 7, 8, 7});  // vertical then horizontal mirror
    CHECK(row1 == std::vector<float>{2, 1, 2, 3, 4, 3});

    Value thin = g.leaf(make(Shape{1, 1, 1, 4}, {1, 2, 3, 4}));
    CHECK_THROWS_AS(pad2d(thin, 1, PadMode::Reflect), std::invalid_argument);
}

TEST_CASE("pad2d zero fills borders", "[tensor]") {
    Graph g;
    Value x = g.leaf(make(Shape{1, 1, 1, 2}, {5.0f, 7.0f}));
    Value y = pad2d(x, 1, PadMode::Zero);
    CHECK(y.tensor().shape == Shape{1, 1, 3, 4});
    CHECK(y.tensor().at(0, 0, 0, 0) == 0.0f);
    CHECK(y.tensor().at(0, 0, 1, 1) == 5.0f);
    CHECK(y.tensor().at(0, 0, 1, 2) == 7.0f);
    CHECK(y.tensor().at(0, 0, 2, 3) == 0.0f);
}

TEST_CASE("conv2d all-ones kernel counts window size", "[tensor]") {
    // 5x5 ones, 3x3 ones kernel, zero pad 1: center sees 9 cells, corner 4
    Graph g;
    Tensor x(Shape{1, 1, 5, 5});
    std::fill(x.data.begin(), x.data.end(), 1.0f);
    Tensor w(Shape{1, 1, 3, 3});
    std::fill(w.data.begin(), w.data.end(), 1.0f);
    Tensor b(Shape{1, 1, 1, 1});
    Value y = conv2d(g.leaf(x), g.leaf(w), g.leaf(b), 1, 1, PadMode::Zero);
    CHECK(y.tensor().shape == Shape{1, 1, 5, 5});
    CHECK(y.tensor().at(0, 0, 2, 2) == 9.0f);
    CHECK(y.tensor().at(0, 0, 0, 0) == 4.0f);
    CHECK(y.tensor().at(0, 0, 0, 2) == 6.0f);

    // reflect pad: every window sees 9 ones
    Value yr = conv2d(g.leaf(x), g.leaf(w), g.leaf(b), 1, 1, PadMode::Reflect);
    for (float v : yr.tensor().data) CHECK(v == 9.0f);
}

TEST_CASE("conv2d identity kernel is bit-exact", "[tensor]") {
    Graph g;
    Rng rng(11);
    Tensor x = random_tensor<float>(Shape{1, 2, 6, 6}, rng);
    Tensor w(Shape{2, 2, 3, 3});  // center-tap identity per channel
    w.at(0, 0, 1, 1) = 1.0f;
    w.at(1, 1, 1, 1) = 1.0f;
    Tensor b(Shape{1, 1, 1, 2});
    Value y = conv2d(g.leaf(x), g.leaf(w), g.leaf(b), 1, 1, PadMode::Reflect);
    CHECK(exactly_equal(y.tensor(), x));
}

TEST_CASE("conv2d bias broadcasts per output channel", "[tensor]") {
    Graph g;
    Tensor x(Shape{1, 1, 3, 3});
    Tensor w(Shape{2, 1, 1, 1});
    Tensor b = make(Shape{1, 1, 1, 2}, {0.5f, -1.5f});
    Value y = conv2d(g.leaf(x), g.leaf(w), g.leaf(b));
    for (int i = 0; i < 9; ++i) {
        CHECK(y.tensor().data[i] == 0.5f);
        CHECK(y.tensor().data[9 + i] == -1.5f);
    }
}

TEST_CASE("conv2d stride two output extents", "[tensor]") {
    Graph g;
    Tensor x(Shape{1, 1, 8, 8});
    Tensor w(Shape{3, 1, 3, 3});
    Tensor b(Shape{1, 1, 1, 3});
    Value y = conv2d(g.leaf(x), g.leaf(w), g.leaf(b), 2, 1, PadMode::Reflect);
    CHECK(y.tensor().shape == Shape{1, 3, 4, 4});
}

TEST_CASE("conv2d rejects channel mismatch", "[tensor]") {
    Graph g;
    Tensor x(Shape{1, 2, 4, 4});
    Tensor w(Shape{1, 3, 3, 3});
    Tensor b(Shape{1, 1, 1, 1});
    CHECK_THROWS_AS(conv2d(g.leaf(x), g.leaf(w), g.leaf(b), 1, 1, PadMode::Zero),
                    std::invalid_argument);
}

TEST_CASE("upsample_nearest repeats pixels and sums gradients", "[tensor]") {
    Graph g;
    Value x = g.leaf(make(Shape{1, 1, 2, 2}, {1.0f, 2.0f, 3.0f, 4.0f}), true);
    Value y = upsample_nearest(x, 2);
    CHECK(y.tensor().shape == Shape{1, 1, 4, 4});
    CHECK(y.tensor().at(0, 0, 0, 0) == 1.0f);
    CHECK(y.tensor().at(0, 0, 0, 1) == 1.0f);
    CHECK(y.tensor().at(0, 0, 1, 1) == 1.0f);
    CHECK(y.tensor().at(0, 0, 3, 3) == 4.0f);
    g.backward(sum_all(y));
    CHECK(g.grad(x.id).data == std::vector<float>{4.0f, 4.0f, 4.0f, 4.0f});
}

TEST_CASE("reshape preserves data and validates numel", "[tensor]") {
    Graph g;
    Value x = g.leaf(make(Shape{1, 1, 2, 3}, {1, 2, 3, 4, 5, 6}));
    Value y = reshape(x, Shape{1, 2, 1, 3});
    CHECK(y.tensor().shape == Shape{1, 2, 1, 3});
    CHECK(y.tensor().data == x.tensor().data);
    CHECK_THROWS_AS(reshape(x, Shape{1, 1, 2, 2}), std::invalid_argument);
}

TEST_CASE("transpose_mat swaps the trailing matrix dims", "[tensor]") {
    Graph g;
    Value x = g.leaf(make(Shape{1, 1, 2, 3}, {1, 2, 3, 4, 5, 6}));
    Value y = transpose_mat(x);
    CHECK(y.tensor().shape == Shape{1, 1, 3, 2});
    CHECK(y.tensor().data == std::vector<float>{1, 4, 2, 5, 3, 6});
}

TEST_CASE("matmul hand value", "[tensor]") {
    Graph g;
    Value a = g.leaf(make(Shape{1, 1, 2, 2}, {1, 2, 3, 4}));
    Value b = g.leaf(make(Shape{1, 1, 2, 1}, {1, 1}));
    Value y = matmul(a, b);
    CHECK(y.tensor().shape == Shape{1, 1, 2, 1});
    CHECK(y.tensor().data == std::vector<float>{3.0f, 7.0f});
    Value c = g.leaf(Tensor(Shape{1, 1, 3, 1}));
    CHECK_THROWS_AS(matmul(a, c), std::invalid_argument);
}

TEST_CASE("softmax_rows frozen reference", "[tensor]") {
    Graph g;
    Value x = g.leaf(make(Shape{1, 1, 1, 3}, {1.0f, 2.0f, 3.0f}));
    Value y = softmax_rows(x);
    // softmax([1,2,3])
    CHECK(y.tensor().data[0] == Catch::Approx(0.09003057).epsilon(1e-5));
    CHECK(y.tensor().data[1] == Catch::Approx(0.24472847).epsilon(1e-5));
    CHECK(y.tensor().data[2] == Catch::Approx(0.66524096).epsilon(1e-5));
    double s = 0;
    for (float v : y.tensor().data) s += v;
    CHECK(s == Catch::Approx(1.0).margin(1e-6));
}

TEST_CASE("softmax_rows is stable for large inputs", "[tensor]") {
    Graph g;
    Value x = g.leaf(make(Shape{1, 1, 1, 2}, {1000.0f, 1001.0f}));
    Value y = softmax_rows(x);
    CHECK(y.tensor().all_finite());
    CHECK(y.tensor().data[1] == Catch::Approx(1.0 / (1.0 + std::exp(-1.0))).epsilon(1e-5));
}

TEST_CASE("mean_var_normalize two-value channel", "[tensor]") {
    Graph g;
    Value x = g.leaf(make(Shape{1, 1, 1, 2}, {1.0f, 3.0f}));
    Value y = mean_var_normalize(x);
    // mean 2, var 1 -> (x - 2) / sqrt(1 + eps)
    CHECK(y.tensor().data[0] == Catch::Approx(-1.0).margin(1e-4));
    CHECK(y.tensor().data[1] == Catch::Approx(1.0).margin(1e-4));
}

TEST_CASE("mean_var_normalize constant channel maps to zero", "[tensor]") {
    Graph g;
    Tensor x(Shape{1, 2, 3, 3});
    std::fill(x.data.begin(), x.data.end(), 4.0f);
    Value y = mean_var_normalize(g.leaf(x));
    for (float v : y.tensor().data) CHECK(v == 0.0f);
}

TEST_CASE("channel stats of a two-value channel", "[tensor]") {
    Graph g;
    Value x = g.leaf(make(Shape{1, 1, 1, 2}, {0.0f, 2.0f}));
    auto [mu, sigma] = channel_stats(x);
    CHECK(mu.tensor().shape == Shape{1, 1, 1, 1});
    CHECK(mu.tensor().item() == 1.0f);
    CHECK(sigma.tensor().item() == Catch::Approx(1.0).margin(1e-4));
}

TEST_CASE("sum_all and mean_all", "[tensor]") {
    Graph g;
    Value x = g.leaf(make(Shape{1, 1, 2, 2}, {1, 2, 3, 4}), true);
    CHECK(sum_all(x).tensor().item() == 10.0f);
    CHECK(mean_all(x).tensor().item() == 2.5f);
    g.backward(mean_all(x));
    for (float v : g.grad(x.id).data) CHECK(v == 0.25f);
}

TEST_CASE("reflect_index walks back and forth", "[tensor]") {
    CHECK(detail::reflect_index(-1, 4) == 1);
    CHECK(detail::reflect_index(-2, 4) == 2);
    CHECK(detail::reflect_index(0, 4) == 0);
    CHECK(detail::reflect_index(3, 4) == 3);
    CHECK(detail::reflect_index(4, 4) == 2);
    CHECK(detail::reflect_index(5, 4) == 1);
    CHECK(detail::reflect_index(-1, 1) == 0);
}
