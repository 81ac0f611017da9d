// Copyright 2026 The SCGNet Authors. All Rights Reserved.
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

#include "scgnet/gradcheck.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <random>

#include "scgnet/gcn.hpp"
#include "scgnet/scg.hpp"

namespace scg {

namespace {

using Rng = std::mt19937_64;

Tensor uniform(Shape shape, Rng& rng, Real lo, Real hi, bool requires_grad = true) {
  std::uniform_real_distribution<Real> d(lo, hi);
  Buffer v(shape_numel(shape));
  for (auto& x : v) x = d(rng);
  return Tensor::from_data(std::move(shape), std::move(v), requires_grad);
}

// Magnitude in [lo, hi], random sign: keeps relu and abs-like kinks out of reach.
Tensor signed_away(Shape shape, Rng& rng, Real lo = 0.1, Real hi = 1.0) {
  std::uniform_real_distribution<Real> d(lo, hi);
  std::bernoulli_distribution sign(0.5);
  Buffer v(shape_numel(shape));
  for (auto& x : v) x = sign(rng) ? d(rng) : -d(rng);
  return Tensor::from_data(std::move(shape), std::move(v), true);
}

// Nonnegative square matrices with a diagonal inside (0.1, 0.9), so that the
// clamp in the diagonal loss is never at a kink.
Tensor random_adjacency(std::size_t b, std::size_t n, Rng& rng) {
  std::uniform_real_distribution<Real> off(0.0, 1.0);
  std::uniform_real_distribution<Real> diag(0.1, 0.9);
  Buffer v(b * n * n);
  for (std::size_t s = 0; s < b; ++s)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) v[s * n * n + i * n + j] = i == j ? diag(rng) : off(rng);
  return Tensor::from_data({b, n, n}, std::move(v), true);
}

Labels random_labels(std::size_t b, std::size_t h, std::size_t w, std::size_t classes, Rng& rng) {
  std::uniform_int_distribution<std::int32_t> d(0, static_cast<std::int32_t>(classes) - 1);
  Labels l{b, h, w, std::vector<std::int32_t>(b * h * w)};
  for (auto& v : l.values) v = d(rng);
  return l;
}

void make_trainable(ConvParams& p) {
  p.kernel.set_requires_grad(true);
  p.bias.set_requires_grad(true);
}

// Randomizes a zero-initialized convolution so its gradient path is exercised.
void randomize(ConvParams& p, Rng& rng, Real bound) {
  std::uniform_real_distribution<Real> d(-bound, bound);
  for (auto& v : p.kernel.mutable_data()) v = d(rng);
  for (auto& v : p.bias.mutable_data()) v = d(rng);
}

struct Case {
  std::vector<NamedTensor> inputs;
  std::function<std::vector<Tensor>()> forward;
  double step = 1e-6;
};

using Builder = std::function<Case(Rng&)>;

struct ScopeDef {
  GradTier tier;
  Builder build;
};

Case binary(Tensor (*op)(const Tensor&, const Tensor&), Rng& rng, bool positive_rhs) {
  auto a = uniform({2, 3, 4}, rng, -1.0, 1.0);
  auto b = positive_rhs ? uniform({3, 1}, rng, 0.5, 2.0) : uniform({4}, rng, -1.0, 1.0);
  return {{{"a", a}, {"b", b}}, [=] { return std::vector<Tensor>{op(a, b)}; }};
}

ModelConfig micro_config() {
  ModelConfig c;
  c.image_size = 16;
  c.in_channels = 3;
  c.backbone_widths = {4, 8, 8};
  c.node_h = 2;
  c.node_w = 2;
  c.classes = 3;
  c.gcn_layers = 2;
  c.seed = 7;
  return c;
}

struct MicroModel {
  std::shared_ptr<Model> model;
  Tensor image;
  Labels labels;
};

MicroModel micro_model(Rng& rng) {
  auto cfg = micro_config();
  cfg.seed = rng();
  MicroModel m{std::make_shared<Model>(cfg), uniform({2, 3, 16, 16}, rng, 0.0, 1.0, false), {}};
  // Nonzero log-sigma weights so the variance path carries gradient.
  randomize(m.model->scg.log_sigma_conv, rng, 0.1);
  m.labels = random_labels(2, 16, 16, cfg.classes, rng);
  return m;
}

const std::map<std::string, ScopeDef>& registry() {
  static const std::map<std::string, ScopeDef> scopes = [] {
    std::map<std::string, ScopeDef> s;
    const auto E = GradTier::Elementary;
    const auto C = GradTier::Composite;

    // ---- tensor ops ----
    s["add"] = {E, [](Rng& r) { return binary(add, r, false); }};
    s["sub"] = {E, [](Rng& r) { return binary(sub, r, false); }};
    s["mul"] = {E, [](Rng& r) { return binary(mul, r, false); }};
    s["div"] = {E, [](Rng& r) { return binary(div, r, true); }};
    auto unary = [](Tensor (*op)(const Tensor&), Real lo, Real hi) {
      return [=](Rng& r) {
        auto a = uniform({3, 4}, r, lo, hi);
        return Case{{{"a", a}}, [=] { return std::vector<Tensor>{op(a)}; }};
      };
    };
    s["neg"] = {E, unary(neg, -1.0, 1.0)};
    s["exp"] = {E, unary(exp, -1.0, 1.0)};
    s["log"] = {E, unary(log, 0.5, 2.0)};
    s["sqrt"] = {E, unary(sqrt, 0.5, 2.0)};
    s["square"] = {E, unary(square, -1.0, 1.0)};
    s["relu"] = {E, [](Rng& r) {
                   auto a = signed_away({3, 4}, r);
                   return Case{{{"a", a}}, [=] { return std::vector<Tensor>{relu(a)}; }};
                 }};
    s["clamp"] = {E, [](Rng& r) {
                    // Entries in (-1, -0.1), (0.1, 0.9) or (1.1, 2): both bounds and the interior.
                    std::uniform_int_distribution<int> band(0, 2);
                    std::uniform_real_distribution<Real> u(0.0, 1.0);
                    Buffer v(12);
                    for (auto& x : v) {
                      const int k = band(r);
                      x = k == 0 ? -1.0 + 0.9 * u(r) : (k == 1 ? 0.1 + 0.8 * u(r) : 1.1 + 0.9 * u(r));
                    }
                    auto a = Tensor::from_data({3, 4}, std::move(v), true);
                    return Case{{{"a", a}}, [=] { return std::vector<Tensor>{clamp(a, 0.0, 1.0)}; }};
                  }};
    s["scale"] = {E, [](Rng& r) {
                    auto a = uniform({3, 4}, r, -1.0, 1.0);
                    return Case{{{"a", a}}, [=] { return std::vector<Tensor>{scale(a, -1.7)}; }};
                  }};
    s["add_scalar"] = {E, [](Rng& r) {
                         auto a = uniform({3, 4}, r, -1.0, 1.0);
                         return Case{{{"a", a}}, [=] { return std::vector<Tensor>{add_scalar(a, 0.3)}; }};
                       }};
    s["matmul"] = {E, [](Rng& r) {
                     auto a = uniform({3, 4}, r, -1.0, 1.0);
                     auto b = uniform({4, 2}, r, -1.0, 1.0);
                     auto ba = uniform({2, 3, 4}, r, -1.0, 1.0);
                     auto bb = uniform({2, 4, 5}, r, -1.0, 1.0);
                     return Case{{{"a", a}, {"b", b}, {"batched_a", ba}, {"batched_b", bb}}, [=] {
                                   return std::vector<Tensor>{matmul(a, b), matmul(ba, bb), matmul(ba, b)};
                                 }};
                   }};
    s["transpose"] = {E, [](Rng& r) {
                        auto a = uniform({2, 3, 4}, r, -1.0, 1.0);
                        return Case{{{"a", a}}, [=] { return std::vector<Tensor>{transpose(a)}; }};
                      }};
    s["reshape"] = {E, [](Rng& r) {
                      auto a = uniform({2, 3, 4}, r, -1.0, 1.0);
                      return Case{{{"a", a}}, [=] { return std::vector<Tensor>{reshape(a, {6, 4})}; }};
                    }};
    s["permute"] = {E, [](Rng& r) {
                      auto a = uniform({2, 3, 4}, r, -1.0, 1.0);
                      return Case{{{"a", a}}, [=] { return std::vector<Tensor>{permute(a, {2, 0, 1})}; }};
                    }};
    s["diagonal"] = {E, [](Rng& r) {
                       auto a = uniform({2, 3, 3}, r, -1.0, 1.0);
                       return Case{{{"a", a}}, [=] { return std::vector<Tensor>{diagonal(a)}; }};
                     }};
    s["diag_embed"] = {E, [](Rng& r) {
                         auto a = uniform({2, 3}, r, -1.0, 1.0);
                         return Case{{{"a", a}}, [=] { return std::vector<Tensor>{diag_embed(a)}; }};
                       }};
    s["softmax"] = {E, [](Rng& r) {
                      auto a = uniform({2, 3, 4}, r, -2.0, 2.0);
                      return Case{{{"a", a}}, [=] { return std::vector<Tensor>{softmax(a, 1), softmax(a, 2)}; }};
                    }};
    s["sum"] = {E, [](Rng& r) {
                  auto a = uniform({2, 3, 4}, r, -1.0, 1.0);
                  return Case{{{"a", a}}, [=] {
                                return std::vector<Tensor>{sum(a, {1}), sum(a, {0, 2}, true), sum_all(a)};
                              }};
                }};
    s["mean"] = {E, [](Rng& r) {
                   auto a = uniform({2, 3, 4}, r, -1.0, 1.0);
                   return Case{{{"a", a}}, [=] {
                                 return std::vector<Tensor>{mean(a, {2}), mean(a, {0}, true), mean_all(a)};
                               }};
                 }};

    // ---- nn layers ----
    s["conv2d"] = {E, [](Rng& r) {
                     auto x = uniform({2, 2, 5, 5}, r, -1.0, 1.0);
                     auto strided = make_conv(2, 3, 3, 2, 1, r);
                     auto plain = make_conv(2, 2, 3, 1, 1, r);
                     auto pointwise = make_conv(2, 3, 1, 1, 0, r);
                     return Case{{{"x", x},
                                  {"strided.kernel", strided.kernel},
                                  {"strided.bias", strided.bias},
                                  {"plain.kernel", plain.kernel},
                                  {"plain.bias", plain.bias},
                                  {"pointwise.kernel", pointwise.kernel},
                                  {"pointwise.bias", pointwise.bias}},
                                 [=] {
                                   return std::vector<Tensor>{conv2d(x, strided), conv2d(x, plain),
                                                              conv2d(x, pointwise)};
                                 }};
                   }};
    s["adaptive_avg_pool2d"] = {E, [](Rng& r) {
                                  auto x = uniform({2, 3, 5, 7}, r, -1.0, 1.0);
                                  return Case{{{"x", x}}, [=] {
                                                return std::vector<Tensor>{adaptive_avg_pool2d(x, 2, 3),
                                                                           adaptive_avg_pool2d(x, 5, 7)};
                                              }};
                                }};
    s["bilinear_upsample"] = {E, [](Rng& r) {
                                auto x = uniform({2, 2, 3, 3}, r, -1.0, 1.0);
                                return Case{{{"x", x}}, [=] {
                                              return std::vector<Tensor>{bilinear_upsample(x, 5, 7),
                                                                         bilinear_upsample(x, 12, 12)};
                                            }};
                              }};
    s["batchnorm"] = {E, [](Rng& r) {
                        auto x = uniform({3, 2, 2, 2}, r, -1.0, 1.0);
                        auto p = std::make_shared<BatchNormParams>(make_batchnorm(2));
                        for (auto& v : p->scale.mutable_data()) v = std::uniform_real_distribution<Real>(0.5, 1.5)(r);
                        for (auto& v : p->shift.mutable_data()) v = std::uniform_real_distribution<Real>(-0.5, 0.5)(r);
                        auto rm = uniform({2}, r, -0.5, 0.5, false);
                        auto rv = uniform({2}, r, 0.5, 1.5, false);
                        return Case{{{"x", x}, {"scale", p->scale}, {"shift", p->shift}}, [=] {
                                      p->training = true;
                                      auto train = batchnorm(x, *p);
                                      BatchNormParams frozen = *p;
                                      frozen.training = false;
                                      frozen.running_mean = rm;
                                      frozen.running_var = rv;
                                      return std::vector<Tensor>{train, batchnorm(x, frozen)};
                                    }};
                      }};

    // ---- graph construction ----
    s["kl_loss"] = {E, [](Rng& r) {
                      auto mu = uniform({2, 4, 3}, r, -1.0, 1.0);
                      auto ls = uniform({2, 4, 3}, r, -0.5, 0.5);
                      return Case{{{"mu", mu}, {"log_sigma", ls}},
                                  [=] { return std::vector<Tensor>{kl_loss({mu, ls})}; }};
                    }};
    s["pool_to_nodes"] = {C, [](Rng& r) {
                            auto x = uniform({2, 3, 4, 6}, r, -1.0, 1.0);
                            return Case{{{"x", x}}, [=] { return std::vector<Tensor>{pool_to_nodes(x, 2, 3)}; }};
                          }};
    s["encode"] = {C, [](Rng& r) {
                     auto nodes = uniform({2, 4, 5}, r, -1.0, 1.0);
                     auto p = std::make_shared<ScgParams>(make_scg_params(5, 3, 2, 2, r));
                     randomize(p->log_sigma_conv, r, 0.3);
                     make_trainable(p->log_sigma_conv);
                     return Case{{{"nodes", nodes},
                                  {"mu_conv.kernel", p->mu_conv.kernel},
                                  {"mu_conv.bias", p->mu_conv.bias},
                                  {"log_sigma_conv.kernel", p->log_sigma_conv.kernel},
                                  {"log_sigma_conv.bias", p->log_sigma_conv.bias}},
                                 [=] {
                                   auto g = encode(nodes, *p);
                                   return std::vector<Tensor>{g.mu, g.log_sigma};
                                 }};
                   }};
    s["reparameterize"] = {C, [](Rng& r) {
                             auto mu = uniform({2, 4, 3}, r, -1.0, 1.0);
                             auto ls = uniform({2, 4, 3}, r, -0.5, 0.5);
                             const auto seed = r();
                             return Case{{{"mu", mu}, {"log_sigma", ls}}, [=] {
                                           auto train = reparameterize({mu, ls}, Mode::Train, seed);
                                           auto eval = reparameterize({mu, ls}, Mode::Eval, seed);
                                           return std::vector<Tensor>{train.z, train.z_hat, eval.z};
                                         }};
                           }};
    s["decode_adjacency"] = {C, [](Rng& r) {
                               auto z = uniform({2, 4, 3}, r, -1.0, 1.0);
                               return Case{{{"z", z}}, [=] {
                                             LatentState l;
                                             l.z = z;
                                             return std::vector<Tensor>{decode_adjacency(l)};
                                           }};
                             }};
    s["adaptive_gamma"] = {C, [](Rng& r) {
                             auto a = random_adjacency(2, 4, r);
                             return Case{{{"a_raw", a}}, [=] { return std::vector<Tensor>{adaptive_gamma(a)}; }};
                           }};
    s["dl_loss"] = {C, [](Rng& r) {
                      auto a = random_adjacency(2, 4, r);
                      return Case{{{"a_raw", a}}, [=] { return std::vector<Tensor>{dl_loss(a, adaptive_gamma(a))}; }};
                    }};
    s["enhance_and_normalize"] = {C, [](Rng& r) {
                                    auto a = random_adjacency(2, 4, r);
                                    auto gamma = uniform({2}, r, 1.5, 3.0);
                                    return Case{{{"a_raw", a}, {"gamma", gamma}}, [=] {
                                                  return std::vector<Tensor>{enhance_and_normalize(a, gamma),
                                                                             enhance_and_normalize(a, adaptive_gamma(a))};
                                                }};
                                  }};
    s["residual_prediction"] = {C, [](Rng& r) {
                                  auto z_hat = uniform({2, 4, 3}, r, -1.0, 1.0);
                                  auto gamma = uniform({2}, r, 1.5, 3.0);
                                  return Case{{{"z_hat", z_hat}, {"gamma", gamma}}, [=] {
                                                LatentState l;
                                                l.z_hat = z_hat;
                                                return std::vector<Tensor>{residual_prediction(l, gamma)};
                                              }};
                                }};
    s["scg_forward"] = {C, [](Rng& r) {
                          auto x = uniform({2, 5, 4, 4}, r, -1.0, 1.0);
                          auto p = std::make_shared<ScgParams>(make_scg_params(5, 3, 2, 2, r));
                          randomize(p->log_sigma_conv, r, 0.3);
                          make_trainable(p->log_sigma_conv);
                          const auto seed = r();
                          return Case{{{"x", x},
                                       {"mu_conv.kernel", p->mu_conv.kernel},
                                       {"mu_conv.bias", p->mu_conv.bias},
                                       {"log_sigma_conv.kernel", p->log_sigma_conv.kernel},
                                       {"log_sigma_conv.bias", p->log_sigma_conv.bias}},
                                      [=] {
                                        Rng noise(seed);
                                        auto out = scg_forward(x, *p, Mode::Train, noise);
                                        return std::vector<Tensor>{out.y_hat, out.graph.a_norm, out.kl, out.dl};
                                      }};
                        }};

    // ---- graph convolution ----
    s["normalize_adjacency"] = {C, [](Rng& r) {
                                  auto a = random_adjacency(2, 4, r);
                                  return Case{{{"a", a}}, [=] { return std::vector<Tensor>{normalize_adjacency(a)}; }};
                                }};
    s["gcn_layer"] = {C, [](Rng& r) {
                        auto a = random_adjacency(2, 4, r);
                        auto x = uniform({2, 4, 5}, r, -1.0, 1.0);
                        auto hidden = std::make_shared<GcnLayerParams>(make_gcn_layer(5, 3, true, r));
                        auto plain = std::make_shared<GcnLayerParams>(make_gcn_layer(5, 2, false, r));
                        return Case{{{"a_hat", a},
                                     {"x", x},
                                     {"hidden.theta", hidden->theta},
                                     {"hidden.bn.scale", hidden->bn.scale},
                                     {"hidden.bn.shift", hidden->bn.shift},
                                     {"plain.theta", plain->theta}},
                                    [=] {
                                      return std::vector<Tensor>{gcn_layer(a, x, *hidden), gcn_layer(a, x, *plain)};
                                    }};
                      }};
    s["gcn_stack"] = {C, [](Rng& r) {
                        auto a = random_adjacency(2, 4, r);
                        auto x = uniform({2, 4, 6}, r, -1.0, 1.0);
                        auto layers = std::make_shared<std::vector<GcnLayerParams>>();
                        layers->push_back(make_gcn_layer(6, 3, true, r));
                        layers->push_back(make_gcn_layer(3, 2, false, r));
                        return Case{{{"a_hat", a}, {"x", x}, {"0.theta", (*layers)[0].theta},
                                     {"0.bn.scale", (*layers)[0].bn.scale}, {"0.bn.shift", (*layers)[0].bn.shift},
                                     {"1.theta", (*layers)[1].theta}},
                                    [=] { return std::vector<Tensor>{gcn_stack(a, x, *layers)}; }};
                      }};

    // ---- model pipeline ----
    s["backbone"] = {C, [](Rng& r) {
                       auto m = micro_model(r);
                       Case c;
                       for (auto& p : m.model->named_parameters())
                         if (p.name.rfind("backbone.", 0) == 0) c.inputs.push_back(p);
                       c.forward = [m] { return std::vector<Tensor>{backbone_forward(m.image, *m.model, Mode::Train)}; };
                       return c;
                     }};
    s["dice_loss"] = {C, [](Rng& r) {
                        auto logits = uniform({2, 3, 4, 4}, r, -2.0, 2.0);
                        auto labels = random_labels(2, 4, 4, 3, r);
                        return Case{{{"logits", logits}}, [=] {
                                      return std::vector<Tensor>{dice_loss(logits, labels), dice_loss(logits, labels, 0.1)};
                                    }};
                      }};
    s["total_loss"] = {C, [](Rng& r) {
                         auto d = uniform({}, r, 0.1, 1.0);
                         auto k = uniform({}, r, 0.1, 1.0);
                         auto l = uniform({}, r, 0.1, 1.0);
                         return Case{{{"dice", d}, {"kl", k}, {"dl", l}},
                                     [=] { return std::vector<Tensor>{total_loss(d, k, l).total}; }};
                       }};
    s["model"] = {GradTier::Model, [](Rng& r) {
                    auto m = micro_model(r);
                    const auto seed = r();
                    Case c;
                    c.inputs = m.model->named_parameters();
                    c.forward = [m, seed] {
                      Rng noise(seed);
                      auto out = model_forward(m.image, *m.model, Mode::Train, noise);
                      return std::vector<Tensor>{total_loss(dice_loss(out.logits, m.labels), out.scg.kl, out.scg.dl).total};
                    };
                    return c;
                  }};
    return s;
  }();
  return scopes;
}

}  // namespace

double tier_tolerance(GradTier tier) {
  switch (tier) {
    case GradTier::Elementary: return 1e-6;
    case GradTier::Composite: return 1e-5;
    case GradTier::Model: return 1e-3;
  }
  return 0.0;
}

const char* tier_name(GradTier tier) {
  switch (tier) {
    case GradTier::Elementary: return "elementary";
    case GradTier::Composite: return "composite";
    case GradTier::Model: return "model";
  }
  return "?";
}

ModelConfig micro_model_config() { return micro_config(); }

FdResult finite_difference_check(const std::function<Tensor()>& loss, const std::vector<NamedTensor>& inputs,
                                 double step) {
  std::vector<Buffer> frozen;
  for (const auto& in : inputs) {
    Tensor t = in.tensor;
    t.zero_grad();
  }
  {
    FrozenDetachScope record(FrozenDetachScope::Mode::Record, &frozen);
    auto l = loss();
    if (l.numel() != 1) throw ShapeError("finite_difference_check needs a scalar loss, got " + shape_str(l.shape()));
    l.backward();
  }
  auto eval = [&] {
    FrozenDetachScope replay(FrozenDetachScope::Mode::Replay, &frozen);
    NoGradGuard no_grad;
    return loss().item();
  };
  struct Raw {
    double max_diff = 0.0, max_mag = 0.0;
  };
  std::vector<Raw> raw;
  double global_mag = 0.0;
  for (const auto& in : inputs) {
    Tensor t = in.tensor;
    Buffer analytic = t.has_grad() ? Buffer(t.grad().begin(), t.grad().end()) : Buffer(t.numel(), 0.0);
    auto data = t.mutable_data();
    Raw r;
    for (std::size_t i = 0; i < data.size(); ++i) {
      const double orig = data[i];
      data[i] = orig + step;
      const double up = eval();
      data[i] = orig - step;
      const double down = eval();
      data[i] = orig;
      const double numeric = (up - down) / (2.0 * step);
      r.max_diff = std::max(r.max_diff, std::abs(numeric - analytic[i]));
      r.max_mag = std::max({r.max_mag, std::abs(numeric), std::abs(analytic[i])});
    }
    global_mag = std::max(global_mag, r.max_mag);
    raw.push_back(r);
  }
  const double floor = std::max(1e-3 * global_mag, 1e-12);
  FdResult result;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    GroupError g{inputs[k].name, inputs[k].tensor.numel(), raw[k].max_diff / std::max(raw[k].max_mag, floor)};
    result.max_rel_error = std::max(result.max_rel_error, g.max_rel_error);
    result.groups.push_back(std::move(g));
  }
  return result;
}

std::vector<std::string> grad_check_scopes() {
  std::vector<std::string> out;
  for (auto tier : {GradTier::Elementary, GradTier::Composite, GradTier::Model})
    for (const auto& [name, def] : registry())
      if (def.tier == tier) out.push_back(name);
  return out;
}

GradTier scope_tier(const std::string& scope) {
  auto it = registry().find(scope);
  if (it == registry().end()) throw UnknownScopeError("unknown grad-check scope '" + scope + "'");
  return it->second.tier;
}

ScopeReport grad_check(const std::string& scope, std::size_t trials, std::optional<double> tolerance,
                       std::uint64_t seed) {
  const GradTier tier = scope_tier(scope);
  const auto& def = registry().at(scope);
  ScopeReport rep;
  rep.scope = scope;
  rep.tier = tier;
  rep.tolerance = tolerance.value_or(tier_tolerance(tier));
  rep.trials = trials != 0 ? trials : (tier == GradTier::Model ? 1 : 3);
  const auto start = std::chrono::steady_clock::now();
  std::seed_seq seq(scope.begin(), scope.end());
  std::vector<std::uint64_t> mix(1);
  seq.generate(mix.begin(), mix.end());
  Rng rng(seed ^ mix[0]);
  for (std::size_t t = 0; t < rep.trials; ++t) {
    Case c = def.build(rng);
    std::vector<Tensor> weights;
    auto loss = [&] {
      auto outs = c.forward();
      if (weights.empty())
        for (const auto& o : outs) weights.push_back(uniform(o.shape(), rng, -1.0, 1.0, false));
      Tensor l = Tensor::scalar(0.0);
      for (std::size_t k = 0; k < outs.size(); ++k) l = l + sum_all(outs[k] * weights[k]);
      return l;
    };
    auto fd = finite_difference_check(loss, c.inputs, c.step);
    rep.max_rel_error = std::max(rep.max_rel_error, fd.max_rel_error);
    for (auto& g : fd.groups) {
      auto it = std::find_if(rep.groups.begin(), rep.groups.end(), [&](const GroupError& e) { return e.name == g.name; });
      if (it == rep.groups.end()) rep.groups.push_back(g);
      else it->max_rel_error = std::max(it->max_rel_error, g.max_rel_error);
    }
  }
  rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  rep.passed = rep.max_rel_error < rep.tolerance;
  return rep;
}

std::vector<ScopeReport> grad_check_all(std::size_t trials, std::optional<double> tolerance, std::uint64_t seed,
                                        const std::function<void(const ScopeReport&)>& on_report) {
  std::vector<ScopeReport> out;
  for (const auto& scope : grad_check_scopes()) {
    out.push_back(grad_check(scope, trials, tolerance, seed));
    if (on_report) on_report(out.back());
  }
  return out;
}

}  // namespace scg
