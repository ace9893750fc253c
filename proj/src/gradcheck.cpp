// Copyright 2026 The hetembed Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hetembed/error.hpp"
#include "hetembed/rng.hpp"
#include "hetembed/tensor.hpp"

namespace hetembed {

namespace {

struct Probe {
  double value;
  std::uint64_t kinks;
};

// Untaped evaluation that also reports the piecewise branch signature.
template <typename F>
Probe probe(const F& f) {
  detail::KinkTrace trace;
  const Tensor y = f();
  if (y.size() != 1) throw ShapeError("grad_check: function must return a scalar");
  return {y.item(), trace.signature()};
}

double relative_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max(1e-8, std::abs(analytic) + std::abs(numeric));
}

void require_finite(double v) {
  if (!std::isfinite(v)) throw NumericError("grad_check: function value is not finite");
}

}  // namespace

GradCheckResult grad_check(const std::function<Tensor(const Tensor&)>& f, const Tensor& point,
                           double step) {
  if (!(step > 0.0)) throw ConfigError("grad_check: step must be positive");
  Tensor x(point.shape(), point.to_vector(), true);
  Tape tape;
  Tensor y;
  {
    TapeScope scope(tape);
    y = f(x);
  }
  if (y.size() != 1) throw ShapeError("grad_check: function must return a scalar");
  require_finite(y.item());
  std::vector<double> analytic(x.size(), 0.0);
  if (y.requires_grad()) {
    backward(tape, y);
    if (x.has_grad()) analytic.assign(x.grad().begin(), x.grad().end());
  }

  const std::vector<double> base = point.to_vector();
  const auto eval_at = [&](std::vector<double> values) {
    const Tensor moved(point.shape(), std::move(values), false);
    return probe([&] { return f(moved); });
  };
  NoGradScope guard;
  const Probe center = eval_at(base);
  GradCheckResult result;
  for (std::size_t i = 0; i < base.size(); ++i) {
    std::vector<double> plus = base, minus = base;
    plus[i] += step;
    minus[i] -= step;
    const Probe up = eval_at(std::move(plus));
    const Probe down = eval_at(std::move(minus));
    require_finite(up.value);
    require_finite(down.value);
    if (up.kinks != center.kinks || down.kinks != center.kinks) {
      ++result.skipped_kinks;
      continue;
    }
    const double numeric = (up.value - down.value) / (2.0 * step);
    result.max_rel_error = std::max(result.max_rel_error, relative_error(analytic[i], numeric));
    ++result.checked;
  }
  return result;
}

GradCheckResult grad_check_params(const std::function<Tensor()>& f, std::vector<Tensor> params,
                                  double step, std::size_t max_coords_per_param,
                                  std::uint64_t seed) {
  if (!(step > 0.0)) throw ConfigError("grad_check: step must be positive");
  for (Tensor& p : params) p.zero_grad();
  Tape tape;
  Tensor y;
  {
    TapeScope scope(tape);
    y = f();
  }
  if (y.size() != 1) throw ShapeError("grad_check: function must return a scalar");
  require_finite(y.item());
  if (y.requires_grad()) backward(tape, y);
  tape.clear();

  std::vector<std::vector<double>> analytic;
  for (Tensor& p : params) {
    analytic.emplace_back(p.has_grad() ? std::vector<double>(p.grad().begin(), p.grad().end())
                                       : std::vector<double>(p.size(), 0.0));
    p.zero_grad();
  }

  Rng rng(seed);
  NoGradScope guard;
  const Probe center = probe(f);
  GradCheckResult result;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Tensor& p = params[pi];
    std::vector<std::size_t> coords(p.size());
    std::iota(coords.begin(), coords.end(), std::size_t{0});
    if (max_coords_per_param != 0 && coords.size() > max_coords_per_param) {
      rng.shuffle(coords);
      coords.resize(max_coords_per_param);
    }
    auto data = p.mutable_data();
    for (std::size_t i : coords) {
      const double original = data[i];
      data[i] = original + step;
      const Probe up = probe(f);
      data[i] = original - step;
      const Probe down = probe(f);
      data[i] = original;
      require_finite(up.value);
      require_finite(down.value);
      if (up.kinks != center.kinks || down.kinks != center.kinks) {
        ++result.skipped_kinks;
        continue;
      }
      const double numeric = (up.value - down.value) / (2.0 * step);
      result.max_rel_error =
          std::max(result.max_rel_error, relative_error(analytic[pi][i], numeric));
      ++result.checked;
    }
  }
  return result;
}

}  // namespace hetembed
