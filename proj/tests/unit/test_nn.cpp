#include "doctest.h"

#include <random>

#include "deepkm/losses.hpp"
#include "deepkm/nn.hpp"
#include "oracles.hpp"

using namespace deepkm;

namespace {

Architecture tiny(int m, int hidden, int l) {
  const int widths[] = {hidden};
  return mirrored_architecture(m, widths, l);
}

AutoencoderParams single_linear(int m, int l, double value) {
  Architecture arch;
  arch.encoder = {{m, l, Activation::Linear}};
  arch.decoder = {{l, m, Activation::Linear}};
  AutoencoderParams p = init_autoencoder(arch, 0);
  for (auto* part : {&p.encoder, &p.decoder}) {
    for (auto& layer : *part) {
      layer.weight.setConstant(value);
      layer.bias.setConstant(value);
    }
  }
  return p;
}

// Scalar objective used for gradient checks: MSE reconstruction plus a fixed
// linear functional of the latent, so both upstream paths are exercised.
double probe_loss(const AutoencoderParams& p, const Matrix& x, const Matrix& latent_weights) {
  const ForwardPass pass = forward(p, x);
  return reconstruction_loss(pass.output(), x).value + (pass.latent().array() * latent_weights.array()).sum();
}

}  // namespace

TEST_CASE("architecture validation") {
  Architecture arch;
  arch.encoder = {{4, 3, Activation::ReLU}, {2, 2, Activation::Linear}};
  arch.decoder = {{2, 4, Activation::Linear}};
  CHECK_THROWS_AS(validate_architecture(arch), ConfigError);
  CHECK_THROWS_AS(init_autoencoder(arch, 1), ConfigError);

  arch.encoder = {{4, 2, Activation::Linear}};
  arch.decoder = {{3, 4, Activation::Linear}};
  CHECK_THROWS_AS(validate_architecture(arch), ConfigError);

  const Architecture def = default_architecture(784);
  REQUIRE(def.encoder.size() == 4);
  CHECK(def.encoder[0].output_dim == 500);
  CHECK(def.encoder[2].output_dim == 2000);
  CHECK(def.latent_dim() == 10);
  CHECK(def.encoder.back().activation == Activation::Linear);
  CHECK(def.encoder.front().activation == Activation::ReLU);
  CHECK(def.decoder.back().activation == Activation::Linear);
  CHECK(def.decoder.back().output_dim == 784);
}

TEST_CASE("init_autoencoder is deterministic and seeded") {
  const auto arch = tiny(4, 3, 2);
  const auto a = init_autoencoder(arch, 7);
  const auto b = init_autoencoder(arch, 7);
  CHECK(a == b);
  CHECK_FALSE(init_autoencoder(arch, 1) == init_autoencoder(arch, 2));

  for (const auto& layer : a.encoder) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(layer.weight.rows()));
    CHECK(layer.weight.cwiseAbs().maxCoeff() <= bound);
    CHECK(layer.bias.isZero(0.0));
  }

  Matrix x = Matrix::Random(5, 4);
  const Matrix z = encode(a, x);
  CHECK(z.cols() == 2);
  CHECK(decode(a, z).cols() == 4);
}

TEST_CASE("encode/decode special cases") {
  SUBCASE("zero parameters give zero outputs") {
    const auto p = single_linear(3, 2, 0.0);
    const Matrix x = Matrix::Random(4, 3);
    CHECK(encode(p, x).isZero(0.0));
    CHECK(decode(p, Matrix::Random(4, 2)).isZero(0.0));
  }
  SUBCASE("identity layers reproduce their input") {
    auto p = single_linear(3, 3, 0.0);
    p.encoder[0].weight = Matrix::Identity(3, 3);
    p.decoder[0].weight = Matrix::Identity(3, 3);
    const Matrix x = Matrix::Random(4, 3);
    CHECK(encode(p, x) == x);
    CHECK(decode(p, x) == x);
  }
  SUBCASE("shape mismatch") {
    const auto p = single_linear(3, 2, 0.1);
    CHECK_THROWS_AS(encode(p, Matrix::Zero(2, 4)), ShapeError);
    CHECK_THROWS_AS(decode(p, Matrix::Zero(2, 3)), ShapeError);
  }
}

TEST_CASE("batch evaluation equals row-by-row evaluation") {
  const auto p = init_autoencoder(tiny(6, 5, 3), 11);
  std::mt19937_64 rng(3);
  const Matrix x = oracle::random_matrix(3, 6, rng);
  const Matrix z = encode(p, x);
  const Matrix y = decode(p, z);
  for (Index i = 0; i < x.rows(); ++i) {
    const Matrix zi = encode(p, x.row(i));
    const Matrix yi = decode(p, zi);
    CHECK((z.row(i) - zi.row(0)).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK((y.row(i) - yi.row(0)).cwiseAbs().maxCoeff() <= 1e-12);
  }
  CHECK(encode_chunked(p, x, 2) == encode(p, x));
  // pure: repeated calls are bitwise identical
  CHECK(encode(p, x) == z);
}

TEST_CASE("backward edge cases") {
  const auto p = init_autoencoder(tiny(4, 3, 2), 5);
  const Matrix x = Matrix::Random(3, 4);

  ForwardPass empty;
  CHECK_THROWS_AS(backward(p, empty, Matrix::Zero(3, 4)), StateError);

  const ForwardPass pass = forward(p, x);
  const Gradients g = backward(p, pass, Matrix::Zero(3, 4), Matrix::Zero(3, 2));
  CHECK(g.congruent_with(p));
  CHECK(g.squared_norm() == 0.0);
  CHECK_THROWS_AS(backward(p, pass, Matrix::Zero(2, 4)), ShapeError);
}

TEST_CASE("single linear layer gradient has the closed form") {
  // Encoder x -> xW + b with identity decoder; loss |xW + b - t|^2 on one sample.
  Architecture arch;
  arch.encoder = {{3, 2, Activation::Linear}};
  arch.decoder = {{2, 3, Activation::Linear}};
  auto p = init_autoencoder(arch, 9);
  const Matrix x = (Matrix(1, 3) << 0.5, -1.0, 2.0).finished();
  const Matrix t = (Matrix(1, 2) << 0.25, -0.75).finished();
  const ForwardPass pass = forward(p, x);
  const Matrix residual = pass.latent() - t;
  const Gradients g = backward(p, pass, Matrix(), 2.0 * residual);
  const Matrix expected = x.transpose() * (2.0 * residual);
  CHECK((g.encoder[0].weight - expected).cwiseAbs().maxCoeff() < 1e-14);
  CHECK((g.encoder[0].bias - 2.0 * residual).cwiseAbs().maxCoeff() < 1e-14);
  CHECK(g.decoder[0].weight.isZero(0.0));
}

TEST_CASE("analytic gradients match central differences") {
  std::mt19937_64 rng(42);
  for (int trial = 0; trial < 20; ++trial) {
    std::uniform_int_distribution<int> dim(1, 6);
    const int m = dim(rng) + 1, h = dim(rng), l = dim(rng);
    auto p = init_autoencoder(tiny(m, h, l), 100 + trial);
    // Nonzero biases so ReLU kinks are not hit at zero.
    for (auto* part : {&p.encoder, &p.decoder})
      for (auto& layer : *part) layer.bias = oracle::random_matrix(1, layer.bias.size(), rng, 0.3);
    const Matrix x = oracle::random_matrix(std::uniform_int_distribution<int>(1, 4)(rng), m, rng);
    const Matrix lw = oracle::random_matrix(x.rows(), l, rng);

    const ForwardPass pass = forward(p, x);
    const auto recon = reconstruction_loss(pass.output(), x);
    const Gradients g = backward(p, pass, recon.grad_output, lw);
    auto f = [&] { return probe_loss(p, x, lw); };
    for (std::size_t i = 0; i < p.encoder.size(); ++i) {
      CHECK(oracle::all_close(g.encoder[i].weight, oracle::central_difference(f, p.encoder[i].weight)));
      CHECK(oracle::all_close(g.encoder[i].bias, oracle::central_difference(f, p.encoder[i].bias)));
    }
    for (std::size_t i = 0; i < p.decoder.size(); ++i) {
      CHECK(oracle::all_close(g.decoder[i].weight, oracle::central_difference(f, p.decoder[i].weight)));
      CHECK(oracle::all_close(g.decoder[i].bias, oracle::central_difference(f, p.decoder[i].bias)));
    }
  }
}

TEST_CASE("optimizer steps") {
  SUBCASE("SGD arithmetic") {
    Matrix p = Matrix::Constant(1, 1, 1.0);
    OptimizerState state({OptimizerKind::SGD, 0.1});
    optimizer_step(p, Matrix::Constant(1, 1, 2.0), state);
    CHECK(p(0, 0) == doctest::Approx(0.8).epsilon(1e-15));
    CHECK(state.step_count() == 1);
  }
  SUBCASE("zero gradient leaves parameters unchanged") {
    auto params = init_autoencoder(tiny(4, 3, 2), 1);
    const auto before = params;
    OptimizerState sgd({OptimizerKind::SGD, 0.5});
    optimizer_step(params, Gradients::zeros_like(params), sgd);
    CHECK(params == before);
    OptimizerState adam;
    optimizer_step(params, Gradients::zeros_like(params), adam);
    CHECK(params == before);
  }
  SUBCASE("Adam first step") {
    Matrix p = Matrix::Zero(1, 1);
    OptimizerState state;  // Adam, lr 1e-3
    optimizer_step(p, Matrix::Constant(1, 1, 1.0), state);
    // m_hat = 1, v_hat = 1 -> p = -lr / (1 + eps)
    CHECK(p(0, 0) == doctest::Approx(-1e-3 / (1.0 + 1e-8)).epsilon(1e-14));
  }
  SUBCASE("step counter increases") {
    Matrix p = Matrix::Zero(2, 2);
    OptimizerState state;
    for (int i = 1; i <= 3; ++i) {
      optimizer_step(p, Matrix::Ones(2, 2), state);
      CHECK(state.step_count() == i);
    }
  }
  SUBCASE("non-finite gradient is rejected and named") {
    auto params = init_autoencoder(tiny(4, 3, 2), 1);
    const auto before = params;
    auto g = Gradients::zeros_like(params);
    g.decoder[1].bias[0] = std::numeric_limits<double>::quiet_NaN();
    OptimizerState state;
    try {
      optimizer_step(params, g, state);
      FAIL("expected NumericError");
    } catch (const NumericError& e) {
      CHECK(std::string(e.what()).find("decoder[1].bias") != std::string::npos);
    }
    CHECK(params == before);
  }
  SUBCASE("incongruent gradients") {
    auto params = init_autoencoder(tiny(4, 3, 2), 1);
    auto other = init_autoencoder(tiny(4, 2, 2), 1);
    OptimizerState state;
    CHECK_THROWS_AS(optimizer_step(params, Gradients::zeros_like(other), state), ShapeError);
  }
}

TEST_CASE("small SGD step does not increase a convex reconstruction loss") {
  Architecture arch;
  arch.encoder = {{3, 3, Activation::Linear}};
  arch.decoder = {{3, 3, Activation::Linear}};
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 10; ++trial) {
    auto p = init_autoencoder(arch, 50 + trial);
    const Matrix x = oracle::random_matrix(4, 3, rng);
    // Only the decoder moves, so the loss is convex in the updated weights.
    const ForwardPass pass = forward(p, x);
    const auto before = reconstruction_loss(pass.output(), x);
    Gradients g = backward(p, pass, before.grad_output);
    g.encoder[0].weight.setZero();
    g.encoder[0].bias.setZero();
    OptimizerState sgd({OptimizerKind::SGD, 1e-3});
    optimizer_step(p, g, sgd);
    const auto after = reconstruction_loss(decode(p, encode(p, x)), x);
    CHECK(after.value <= before.value);
  }
}
