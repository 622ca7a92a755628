// Copyright 2026 The figsep Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <random>
#include <sstream>

#include "doctest.h"
#include "figsep/nn/adam.hpp"
#include "figsep/nn/backbone.hpp"
#include "figsep/nn/layers.hpp"
#include "figsep/nn/math.hpp"
#include "figsep/nn/serialize.hpp"
#include "oracles.hpp"

using namespace figsep;
using namespace figsep::nn;

namespace {

FeatureMap<double> random_map(int c, int h, int w, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  auto m = FeatureMap<double>::zeros(c, h, w);
  for (Eigen::Index k = 0; k < m.data.size(); ++k) m.data.data()[k] = n(rng);
  return m;
}

std::vector<double> flatten(const Matrix<double>& m) { return {m.data(), m.data() + m.size()}; }

double dot(const FeatureMap<double>& a, const FeatureMap<double>& b) {
  return (a.data.array() * b.data.array()).sum();
}

}  // namespace

TEST_CASE("conv2d gradients match central differences") {
  std::mt19937_64 rng(1);
  for (const auto& [k, stride, act] : {std::tuple{3, 1, Activation::kLeaky}, std::tuple{3, 2, Activation::kLeaky},
                                       std::tuple{1, 1, Activation::kNone}, std::tuple{3, 2, Activation::kNone}}) {
    Conv2d<double> conv(3, 4, k, stride, act);
    conv.init(rng);
    std::normal_distribution<double> n(0.0, 0.1);
    for (Eigen::Index i = 0; i < conv.bias.value.size(); ++i) conv.bias.value(i) = n(rng);
    const auto x = random_map(3, 7, 6, rng);
    Conv2d<double>::Cache cache;
    const auto y = conv.forward(x, &cache);
    const auto r = random_map(y.channels, y.height, y.width, rng);
    conv.weight.zero_grad();
    conv.bias.zero_grad();
    const auto dx = conv.backward(r, cache);

    auto loss_w = [&](const std::vector<double>& w) {
      Conv2d<double> c2 = conv;
      std::copy(w.begin(), w.end(), c2.weight.value.data());
      return dot(c2.forward(x), r);
    };
    CHECK(testing::max_relative_error(loss_w, flatten(conv.weight.value), flatten(conv.weight.grad)) < 1e-5);
    auto loss_x = [&](const std::vector<double>& v) {
      FeatureMap<double> x2 = x;
      std::copy(v.begin(), v.end(), x2.data.data());
      return dot(conv.forward(x2), r);
    };
    CHECK(testing::max_relative_error(loss_x, flatten(x.data), flatten(dx.data)) < 1e-5);
    auto loss_b = [&](const std::vector<double>& b) {
      Conv2d<double> c2 = conv;
      std::copy(b.begin(), b.end(), c2.bias.value.data());
      return dot(c2.forward(x), r);
    };
    CHECK(testing::max_relative_error(loss_b, flatten(conv.bias.value), flatten(conv.bias.grad)) < 1e-5);
  }
}

TEST_CASE("conv2d output geometry") {
  Conv2d<float> conv(2, 5, 3, 2, Activation::kLeaky);
  const auto y = conv.forward(FeatureMap<float>::zeros(2, 9, 8));
  CHECK(y.channels == 5);
  CHECK(y.height == 5);
  CHECK(y.width == 4);
  CHECK_THROWS_AS(Conv2d<float>(2, 2, 2, 1, Activation::kNone), std::invalid_argument);
}

TEST_CASE("upsample and pooling backward are adjoint to forward") {
  std::mt19937_64 rng(2);
  const auto x = random_map(3, 4, 5, rng);
  const auto up = upsample_nearest(x, 8, 10);
  const auto g = random_map(3, 8, 10, rng);
  CHECK(dot(up, g) == doctest::Approx(dot(x, upsample_nearest_backward(g, 4, 5))));
  const auto pooled = global_average_pool(x);
  const auto gp = random_map(3, 1, 1, rng);
  CHECK(dot(pooled, gp) == doctest::Approx(dot(x, global_average_pool_backward(gp, 4, 5))));
}

TEST_CASE("backbone gradients match central differences") {
  std::mt19937_64 rng(3);
  BackboneConfig cfg{2, {3, 4, 5}, 1, 4, {2, 4}};
  Backbone<double> net(cfg);
  net.init(rng);
  const auto x = random_map(2, 16, 16, rng);
  Backbone<double>::Tape tape;
  const auto outs = net.forward(x, &tape);
  REQUIRE(outs.size() == 2);
  CHECK(outs[0].height == 8);
  CHECK(outs[1].height == 4);
  std::vector<FeatureMap<double>> rs;
  for (const auto& o : outs) rs.push_back(random_map(o.channels, o.height, o.width, rng));
  for (auto* p : net.parameters()) p->zero_grad();
  const auto dx = net.backward(rs, tape, true);
  auto total = [&](const Backbone<double>& n, const FeatureMap<double>& in) {
    const auto o = n.forward(in);
    return dot(o[0], rs[0]) + dot(o[1], rs[1]);
  };
  auto params = net.parameters();
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto loss = [&](const std::vector<double>& w) {
      Backbone<double> n2 = net;
      auto p2 = n2.parameters();
      std::copy(w.begin(), w.end(), p2[k]->value.data());
      return total(n2, x);
    };
    CHECK(testing::max_relative_error(loss, flatten(params[k]->value), flatten(params[k]->grad)) < 1e-4);
  }
  auto loss_x = [&](const std::vector<double>& v) {
    FeatureMap<double> x2 = x;
    std::copy(v.begin(), v.end(), x2.data.data());
    return total(net, x2);
  };
  CHECK(testing::max_relative_error(loss_x, flatten(x.data), flatten(dx.data)) < 1e-4);
}

TEST_CASE("adam minimizes a quadratic and consumes gradients") {
  Parameter<double> p;
  p.resize(3, 1);
  p.value << 1.0, -2.0, 3.0;
  AdamOptions opts;
  opts.learning_rate = 0.05;
  Adam<double> adam(opts);
  for (int t = 0; t < 2000; ++t) {
    p.grad = 2.0 * p.value;
    adam.step({&p});
    CHECK(p.grad.squaredNorm() == 0.0);
  }
  CHECK(p.value.norm() < 1e-2);
  CHECK(adam.steps() == 2000);
}

TEST_CASE("step decay") {
  CHECK(step_decay(1.0, 0, 10, 0.1) == doctest::Approx(1.0));
  CHECK(step_decay(1.0, 9, 10, 0.1) == doctest::Approx(1.0));
  CHECK(step_decay(1.0, 10, 10, 0.1) == doctest::Approx(0.1));
  CHECK(step_decay(1.0, 25, 10, 0.1) == doctest::Approx(0.01));
  CHECK(step_decay(0.5, 1000, 0, 0.1) == doctest::Approx(0.5));
}

TEST_CASE("softmax and argmax") {
  Eigen::VectorXd z(4);
  z << 1.0, 3.0, 3.0, -2.0;
  const Eigen::VectorXd p = softmax(z);
  CHECK(p.sum() == doctest::Approx(1.0));
  CHECK(argmax(std::vector<double>{p.data(), p.data() + 4}) == 1);
  CHECK(argmax(std::vector<double>(5, 0.2)) == 0);
  Eigen::VectorXd big(2);
  big << 1000.0, 1000.0;
  CHECK(softmax(big)(0) == doctest::Approx(0.5));
  CHECK(softplus(-800.0) == doctest::Approx(0.0));
  CHECK(softplus(800.0) == doctest::Approx(800.0));
}

TEST_CASE("parameters round-trip through serialization") {
  std::mt19937_64 rng(4);
  Conv2d<float> a(2, 3, 3, 1, Activation::kLeaky), b(2, 3, 3, 1, Activation::kLeaky);
  a.init(rng);
  std::stringstream ss;
  write_parameters(ss, a.parameters());
  read_parameters(ss, b.parameters());
  CHECK(a.weight.value == b.weight.value);
  CHECK(a.bias.value == b.bias.value);
  Conv2d<float> wrong(2, 4, 3, 1, Activation::kLeaky);
  std::stringstream ss2;
  write_parameters(ss2, a.parameters());
  CHECK_THROWS(read_parameters(ss2, wrong.parameters()));
}
