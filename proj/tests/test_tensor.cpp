#include <catch2/catch.hpp>

#include <cmath>

#include "saaformer/tensor.hpp"

using namespace saaformer;
using Catch::Matchers::Contains;

namespace {

Tensor<double> random_tensor(Shape shape, RngStream& rng) {
  Tensor<double> t(std::move(shape));
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.next_normal();
  return t;
}

// Loss with fixed random weights; keeps every coordinate gradient-live.
Tensor<double> weighted_sum(Tape<double>& tape, Tensor<double> t, std::uint64_t key) {
  RngStream rng(key);
  Tensor<double> w(Shape{1, t.size()});
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = rng.next_normal();
  Tensor<double> flat = reshape(tape, t, Shape{t.size(), 1});
  return reshape(tape, matmul(tape, w, flat), Shape{1});
}

}  // namespace

TEST_CASE("tensor shape/data consistency is enforced") {
  CHECK_THROWS_AS(Tensor<double>(Shape{2, 3}, std::vector<double>{1, 2}), ShapeError);
  Tensor<double> t(Shape{2, 3});
  CHECK(t.size() == 6);
  CHECK(t.at({1, 2}) == 0.0);
}

TEST_CASE("matmul identity and zero cases") {
  Tape<double> tape(false);
  Tensor<double> eye(Shape{2, 2}, {1, 0, 0, 1});
  Tensor<double> b(Shape{2, 3}, {1, 2, 3, 4, 5, 6});
  auto y = matmul(tape, eye, b);
  CHECK(y.data() == b.data());

  Tensor<double> zero(Shape{2, 2});
  auto z = matmul(tape, zero, b);
  for (std::size_t i = 0; i < z.size(); ++i) CHECK(z[i] == 0.0);
}

TEST_CASE("matmul worked 2x2 example") {
  Tape<double> tape(false);
  Tensor<double> a(Shape{2, 2}, {1, 2, 3, 4});
  Tensor<double> b(Shape{2, 2}, {5, 6, 7, 8});
  auto y = matmul(tape, a, b);
  CHECK(y[0] == 19.0);
  CHECK(y[1] == 22.0);
  CHECK(y[2] == 43.0);
  CHECK(y[3] == 50.0);
}

TEST_CASE("matmul matches triple-loop oracle on random 8x8") {
  RngStream rng(11);
  for (int trial = 0; trial < 5; ++trial) {
    Tape<double> tape(false);
    auto a = random_tensor({8, 8}, rng);
    auto b = random_tensor({8, 8}, rng);
    auto y = matmul(tape, a, b);
    for (std::size_t i = 0; i < 8; ++i)
      for (std::size_t j = 0; j < 8; ++j) {
        double s = 0;
        for (std::size_t p = 0; p < 8; ++p) s += a[i * 8 + p] * b[p * 8 + j];
        const double denom = std::max(std::abs(s), 1.0);
        CHECK(std::abs(y[i * 8 + j] - s) / denom < 1e-12);
      }
  }
}

TEST_CASE("matmul shape mismatch names both shapes") {
  Tape<double> tape(false);
  Tensor<double> a(Shape{2, 3});
  Tensor<double> b(Shape{2, 3});
  CHECK_THROWS_WITH(matmul(tape, a, b), Contains("[2x3]"));
  Tensor<double> c(Shape{4, 2});
  CHECK_THROWS_WITH(matmul(tape, a, c), Contains("[2x3]") && Contains("[4x2]"));
}

TEST_CASE("softmax trivial cases") {
  Tape<double> tape(false);
  Tensor<double> c(Shape{3}, {4.2, 4.2, 4.2});
  auto y = softmax_axis(tape, c, 0);
  for (std::size_t i = 0; i < 3; ++i) CHECK(y[i] == Approx(1.0 / 3.0).epsilon(1e-14));

  Tensor<double> one(Shape{1}, {123.0});
  CHECK(softmax_axis(tape, one, 0)[0] == 1.0);
}

TEST_CASE("softmax of [0, ln 2] is [1/3, 2/3]") {
  Tape<double> tape(false);
  Tensor<double> x(Shape{2}, {0.0, std::log(2.0)});
  auto y = softmax_axis(tape, x, 0);
  CHECK(y[0] == Approx(1.0 / 3.0).epsilon(1e-14));
  CHECK(y[1] == Approx(2.0 / 3.0).epsilon(1e-14));
}

TEST_CASE("softmax slices sum to one and stay positive") {
  RngStream rng(22);
  for (int trial = 0; trial < 10; ++trial) {
    Tape<double> tape(false);
    auto x = random_tensor({3, 4, 5}, rng);
    for (std::size_t axis = 0; axis < 3; ++axis) {
      auto y = softmax_axis(tape, x, axis);
      for (std::size_t i = 0; i < y.size(); ++i) CHECK(y[i] > 0.0);
      std::size_t outer = 1, n = 1, inner = 1;
      detail::axis_split(x.shape(), axis, outer, n, inner);
      for (std::size_t o = 0; o < outer; ++o)
        for (std::size_t j = 0; j < inner; ++j) {
          double s = 0;
          for (std::size_t i = 0; i < n; ++i) s += y[(o * n + i) * inner + j];
          CHECK(std::abs(s - 1.0) <= 1e-12);
        }
    }
  }
  Tape<double> tape(false);
  Tensor<double> huge(Shape{2}, {1000.0, 1001.0});  // stability contract
  auto y = softmax_axis(tape, huge, 0);
  CHECK(std::isfinite(y[0]));
  CHECK(y[0] + y[1] == Approx(1.0));
}

TEST_CASE("softmax is monotone in its inputs") {
  RngStream rng(23);
  Tape<double> tape(false);
  Tensor<double> x(Shape{5});
  for (std::size_t i = 0; i < 5; ++i) x[i] = rng.next_normal();
  auto base = softmax_axis(tape, x, 0);
  for (std::size_t i = 0; i < 5; ++i) {
    auto bumped = x.clone();
    bumped[i] += 0.5;
    auto y = softmax_axis(tape, bumped, 0);
    CHECK(y[i] > base[i]);
    for (std::size_t j = 0; j < 5; ++j)
      if (j != i) CHECK(y[j] < base[j]);
  }
}

TEST_CASE("reduce_max trivial and oracle cases") {
  Tape<double> tape(false);
  Tensor<double> c(Shape{2, 3}, {7, 7, 7, 7, 7, 7});
  auto y = reduce_max_axis(tape, c, 1);
  CHECK(y.shape() == Shape{2, 1});
  CHECK(y[0] == 7.0);
  CHECK(y[1] == 7.0);

  Tensor<double> single(Shape{2, 1}, {3, 5});
  auto idy = reduce_max_axis(tape, single, 1);
  CHECK(idy.data() == single.data());

  RngStream rng(33);
  auto x = random_tensor({3, 4}, rng);
  auto m = reduce_max_axis(tape, x, 1);
  for (std::size_t r = 0; r < 3; ++r) {
    double best = x[r * 4];
    for (std::size_t j = 1; j < 4; ++j) best = std::max(best, x[r * 4 + j]);
    CHECK(m[r] == best);
  }
}

TEST_CASE("reduce_max backward routes to lowest-index argmax and preserves mass") {
  Tape<double> tape;
  Tensor<double> x(Shape{1, 4}, {2.0, 5.0, 5.0, 1.0});  // tie between 1 and 2
  x.set_requires_grad(true);
  auto m = reduce_max_axis(tape, x, 1);
  auto loss = reduce_sum(tape, m);
  tape.backward(loss);
  CHECK(x.grad()[1] == 1.0);
  CHECK(x.grad()[2] == 0.0);

  RngStream rng(44);
  Tape<double> tape2;
  auto y = random_tensor({4, 5}, rng);
  y.set_requires_grad(true);
  auto m2 = reduce_max_axis(tape2, y, 0);
  auto loss2 = reduce_sum(tape2, m2);
  tape2.backward(loss2);
  double mass = 0;
  for (double g : y.grad()) mass += g;
  CHECK(mass == Approx(5.0));  // one unit per collapsed slice
}

TEST_CASE("backward twice without reset doubles gradients") {
  Tape<double> tape;
  Tensor<double> x(Shape{3}, {1, 2, 3});
  x.set_requires_grad(true);
  auto y = scale(tape, x, 2.0);
  auto loss = reduce_sum(tape, y);
  tape.backward(loss);
  CHECK(x.grad()[0] == 2.0);
  tape.backward(loss);
  CHECK(x.grad()[0] == 4.0);
}

TEST_CASE("grad_check on linear and quadratic functions") {
  RngStream rng(55);
  auto x = random_tensor({7}, rng);

  auto linear_rep = grad_check(
      [&](Tape<double>& t) {
        Tensor<double> xx = x;
        return reduce_sum(t, xx);
      },
      x, 1e-5);
  CHECK(linear_rep.max_rel_error < 1e-9);

  auto square_rep = grad_check(
      [&](Tape<double>& t) {
        Tensor<double> row = reshape(t, x, Shape{1, 7});
        return reshape(t, matmul(t, row, reshape(t, x, Shape{7, 1})), Shape{1});
      },
      x, 1e-5);
  CHECK(square_rep.max_rel_error < 1e-7);
  CHECK(square_rep.worst_coord < 7);

  CHECK_THROWS_AS(grad_check(
                      [&](Tape<double>& t) {
                        Tensor<double> xx = x;
                        return reduce_sum(t, xx);
                      },
                      x, 0.0),
                  ValueError);
}

TEST_CASE("elementwise and structural ops pass grad_check on 10 seeds") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    RngStream rng(seed);
    auto a = random_tensor({3, 4}, rng);
    auto b = random_tensor({3, 4}, rng);
    auto m = random_tensor({4, 3}, rng);

    auto check = [&](auto&& fn, std::vector<Tensor<double>> params) {
      auto rep = grad_check(fn, std::move(params), 1e-5);
      CHECK(rep.max_rel_error < 1e-6);
    };

    check([&](Tape<double>& t) { return weighted_sum(t, add(t, a, b), seed); }, {a, b});
    check([&](Tape<double>& t) { return weighted_sum(t, scale(t, a, 1.7), seed); }, {a});
    check([&](Tape<double>& t) { return weighted_sum(t, matmul(t, a, m), seed); }, {a, m});
    check([&](Tape<double>& t) { return weighted_sum(t, transpose(t, a), seed); }, {a});
    check([&](Tape<double>& t) { return weighted_sum(t, reshape(t, a, Shape{2, 6}), seed); }, {a});
    check([&](Tape<double>& t) { return weighted_sum(t, softmax_axis(t, a, 1), seed); }, {a});
    check([&](Tape<double>& t) { return weighted_sum(t, reduce_max_axis(t, a, 0), seed); }, {a});
    check([&](Tape<double>& t) { return weighted_sum(t, reduce_mean_axis(t, a, 1), seed); }, {a});
    check([&](Tape<double>& t) { return weighted_sum(t, slice_last(t, a, 1, 2), seed); }, {a});
    check([&](Tape<double>& t) { return weighted_sum(t, slice_rows(t, a, 1, 2), seed); }, {a});
    check([&](Tape<double>& t) { return weighted_sum(t, roll_last(t, a, 3), seed); }, {a});
    check(
        [&](Tape<double>& t) {
          return weighted_sum(t, concat_last(t, std::vector<Tensor<double>>{a, b}), seed);
        },
        {a, b});
    check([&](Tape<double>& t) { return weighted_sum(t, outer_add(t, a, b), seed); }, {a, b});
  }
}

TEST_CASE("roll_last rotates cyclically") {
  Tape<double> tape(false);
  Tensor<double> x(Shape{1, 4}, {10, 11, 12, 13});
  auto y = roll_last(tape, x, 1);
  CHECK(y.data() == std::vector<double>{11, 12, 13, 10});
  auto z = roll_last(tape, y, 3);
  CHECK(z.data() == x.data());
}

TEST_CASE("slice and concat reconstruct the channel axis") {
  RngStream rng(66);
  Tape<double> tape(false);
  auto x = random_tensor({2, 3, 6}, rng);
  std::vector<Tensor<double>> parts;
  for (std::size_t s = 0; s < 6; s += 2) parts.push_back(slice_last(tape, x, s, 2));
  auto back = concat_last(tape, parts);
  CHECK(back.data() == x.data());
  CHECK_THROWS_AS(slice_last(tape, x, 5, 2), ShapeError);
}

TEST_CASE("outer_add definition") {
  Tape<double> tape(false);
  Tensor<double> row(Shape{2, 1}, {1, 2});
  Tensor<double> col(Shape{3, 1}, {10, 20, 30});
  auto y = outer_add(tape, row, col);
  CHECK(y.shape() == Shape{2, 3, 1});
  CHECK(y.at({0, 0, 0}) == 11.0);
  CHECK(y.at({1, 2, 0}) == 32.0);
}
