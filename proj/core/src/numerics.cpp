#include "embkit/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace embkit::num {

namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
  x += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

}  // namespace

Rng::Rng(std::uint64_t seed) : seed_(seed) {
  std::uint64_t x = seed;
  for (auto& s : state_) s = splitmix64(x);
}

std::uint64_t Rng::u64() {
  const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
  const std::uint64_t t = state_[1] << 17;
  state_[2] ^= state_[0];
  state_[3] ^= state_[1];
  state_[1] ^= state_[2];
  state_[0] ^= state_[3];
  state_[2] ^= t;
  state_[3] = rotl(state_[3], 45);
  return result;
}

std::uint64_t Rng::below(std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("Rng::below: n must be positive");
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t v;
  do {
    v = u64();
  } while (v >= limit);
  return v % n;
}

Rng Rng::spawn(std::uint64_t salt) const {
  std::uint64_t x = seed_ ^ (salt * 0xD1B54A32D192ED03ULL + 0x8CB92BA72F3D8DD7ULL);
  return Rng(splitmix64(x));
}

std::size_t ParamSet::add(const std::string& name, std::size_t rows, std::size_t cols) {
  if (lookup_.contains(name)) {
    throw std::invalid_argument("ParamSet: duplicate parameter '" + name + "'");
  }
  const std::size_t h = values_.size();
  names_.push_back(name);
  lookup_.emplace(name, h);
  values_.emplace_back(rows, cols);
  grads_.emplace_back(rows, cols);
  return h;
}

std::size_t ParamSet::handle(std::string_view name) const {
  auto it = lookup_.find(std::string(name));
  if (it == lookup_.end()) {
    throw std::invalid_argument("ParamSet: unknown parameter '" + std::string(name) + "'");
  }
  return it->second;
}

bool ParamSet::contains(std::string_view name) const {
  return lookup_.contains(std::string(name));
}

void ParamSet::zero_grads() {
  for (auto& g : grads_) g.fill(0.0);
}

void ParamSet::scale_grads(double factor) {
  for (auto& g : grads_) {
    double* p = g.data();
    for (std::size_t i = 0; i < g.size(); ++i) p[i] *= factor;
  }
}

double ParamSet::grad_sq_norm() const {
  double s = 0.0;
  for (const auto& g : grads_) {
    const double* p = g.data();
    for (std::size_t i = 0; i < g.size(); ++i) s += p[i] * p[i];
  }
  return s;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

void axpy(double a, std::span<const double> x, std::span<double> y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

void matvec_add(const Matrix& a, std::span<const double> x, std::span<double> y) {
  for (std::size_t r = 0; r < a.rows(); ++r) {
    const double* row = a.data() + r * a.cols();
    double s = 0.0;
    for (std::size_t c = 0; c < a.cols(); ++c) s += row[c] * x[c];
    y[r] += s;
  }
}

void matvec_t_add(const Matrix& a, std::span<const double> x, std::span<double> y) {
  for (std::size_t r = 0; r < a.rows(); ++r) {
    const double* row = a.data() + r * a.cols();
    const double xr = x[r];
    for (std::size_t c = 0; c < a.cols(); ++c) y[c] += row[c] * xr;
  }
}

void outer_add(Matrix& a, double scale, std::span<const double> x,
               std::span<const double> y) {
  for (std::size_t r = 0; r < a.rows(); ++r) {
    double* row = a.data() + r * a.cols();
    const double xr = scale * x[r];
    for (std::size_t c = 0; c < a.cols(); ++c) row[c] += xr * y[c];
  }
}

double log_sum_exp(std::span<const double> v) {
  if (v.empty()) throw std::invalid_argument("log_sum_exp: empty input");
  const double m = *std::max_element(v.begin(), v.end());
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

Vector softmax(std::span<const double> logits) {
  if (logits.empty()) throw std::invalid_argument("softmax: empty input");
  const double m = *std::max_element(logits.begin(), logits.end());
  Vector out(logits.size());
  double s = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - m);
    s += out[i];
  }
  for (double& x : out) x /= s;
  return out;
}

GruParams make_gru(ParamSet& ps, const std::string& prefix, std::size_t in,
                   std::size_t out) {
  GruParams g;
  g.wz = ps.add(prefix + ".Wz", out, in);
  g.uz = ps.add(prefix + ".Uz", out, out);
  g.bz = ps.add(prefix + ".bz", 1, out);
  g.wr = ps.add(prefix + ".Wr", out, in);
  g.ur = ps.add(prefix + ".Ur", out, out);
  g.br = ps.add(prefix + ".br", 1, out);
  g.wh = ps.add(prefix + ".Wh", out, in);
  g.uh = ps.add(prefix + ".Uh", out, out);
  g.bh = ps.add(prefix + ".bh", 1, out);
  g.in = in;
  g.out = out;
  return g;
}

GruParams find_gru(const ParamSet& ps, const std::string& prefix) {
  GruParams g;
  g.wz = ps.handle(prefix + ".Wz");
  g.uz = ps.handle(prefix + ".Uz");
  g.bz = ps.handle(prefix + ".bz");
  g.wr = ps.handle(prefix + ".Wr");
  g.ur = ps.handle(prefix + ".Ur");
  g.br = ps.handle(prefix + ".br");
  g.wh = ps.handle(prefix + ".Wh");
  g.uh = ps.handle(prefix + ".Uh");
  g.bh = ps.handle(prefix + ".bh");
  g.in = ps.value(g.wz).cols();
  g.out = ps.value(g.wz).rows();
  return g;
}

Vector gru_step(const ParamSet& ps, const GruParams& g, std::span<const double> x,
                std::span<const double> h, GruCache* cache) {
  if (x.size() != g.in) {
    throw std::invalid_argument(ps.name(g.wz) + ": input size " + std::to_string(x.size()) +
                                ", expected " + std::to_string(g.in));
  }
  if (h.size() != g.out) {
    throw std::invalid_argument(ps.name(g.uz) + ": state size " + std::to_string(h.size()) +
                                ", expected " + std::to_string(g.out));
  }
  const std::size_t n = g.out;
  Vector z(ps.value(g.bz).row(0).begin(), ps.value(g.bz).row(0).end());
  Vector r(ps.value(g.br).row(0).begin(), ps.value(g.br).row(0).end());
  matvec_add(ps.value(g.wz), x, z);
  matvec_add(ps.value(g.uz), h, z);
  matvec_add(ps.value(g.wr), x, r);
  matvec_add(ps.value(g.ur), h, r);
  for (std::size_t i = 0; i < n; ++i) {
    z[i] = sigmoid(z[i]);
    r[i] = sigmoid(r[i]);
  }
  Vector rh(n);
  for (std::size_t i = 0; i < n; ++i) rh[i] = r[i] * h[i];
  Vector hbar(ps.value(g.bh).row(0).begin(), ps.value(g.bh).row(0).end());
  matvec_add(ps.value(g.wh), x, hbar);
  matvec_add(ps.value(g.uh), rh, hbar);
  for (std::size_t i = 0; i < n; ++i) hbar[i] = std::tanh(hbar[i]);
  Vector h_new(n);
  for (std::size_t i = 0; i < n; ++i) h_new[i] = (1.0 - z[i]) * h[i] + z[i] * hbar[i];
  if (cache) {
    cache->x.assign(x.begin(), x.end());
    cache->h_prev.assign(h.begin(), h.end());
    cache->z = z;
    cache->r = r;
    cache->hbar = hbar;
    cache->rh = std::move(rh);
  }
  return h_new;
}

void gru_backward(ParamSet& ps, const GruParams& g, const GruCache& c,
                  std::span<const double> dh_new, std::span<double> dx,
                  std::span<double> dh_prev) {
  const std::size_t n = g.out;
  Vector dz(n), dhbar(n), dh(n);
  for (std::size_t i = 0; i < n; ++i) {
    dz[i] = dh_new[i] * (c.hbar[i] - c.h_prev[i]);
    dhbar[i] = dh_new[i] * c.z[i];
    dh[i] = dh_new[i] * (1.0 - c.z[i]);
  }

  // hbar = tanh(Wh x + Uh rh + bh)
  Vector da_h(n);
  for (std::size_t i = 0; i < n; ++i) da_h[i] = dhbar[i] * (1.0 - c.hbar[i] * c.hbar[i]);
  outer_add(ps.grad(g.wh), 1.0, da_h, c.x);
  outer_add(ps.grad(g.uh), 1.0, da_h, c.rh);
  axpy(1.0, da_h, ps.grad(g.bh).row(0));
  matvec_t_add(ps.value(g.wh), da_h, dx);
  Vector drh(n);
  matvec_t_add(ps.value(g.uh), da_h, drh);
  Vector dr(n);
  for (std::size_t i = 0; i < n; ++i) {
    dr[i] = drh[i] * c.h_prev[i];
    dh[i] += drh[i] * c.r[i];
  }

  // z and r pre-activations
  Vector da_z(n), da_r(n);
  for (std::size_t i = 0; i < n; ++i) {
    da_z[i] = dz[i] * c.z[i] * (1.0 - c.z[i]);
    da_r[i] = dr[i] * c.r[i] * (1.0 - c.r[i]);
  }
  outer_add(ps.grad(g.wz), 1.0, da_z, c.x);
  outer_add(ps.grad(g.uz), 1.0, da_z, c.h_prev);
  axpy(1.0, da_z, ps.grad(g.bz).row(0));
  matvec_t_add(ps.value(g.wz), da_z, dx);
  matvec_t_add(ps.value(g.uz), da_z, dh);

  outer_add(ps.grad(g.wr), 1.0, da_r, c.x);
  outer_add(ps.grad(g.ur), 1.0, da_r, c.h_prev);
  axpy(1.0, da_r, ps.grad(g.br).row(0));
  matvec_t_add(ps.value(g.wr), da_r, dx);
  matvec_t_add(ps.value(g.ur), da_r, dh);

  axpy(1.0, dh, dh_prev);
}

void sgd_update(ParamSet& params, double learning_rate, std::optional<double> clip_norm) {
  if (learning_rate <= 0.0) {
    throw std::invalid_argument("sgd_update: learning rate must be positive");
  }
  const double sq = params.grad_sq_norm();
  if (!std::isfinite(sq)) throw std::runtime_error("gradient overflow");
  double scale = 1.0;
  if (clip_norm) {
    const double norm = std::sqrt(sq);
    if (norm > *clip_norm) scale = *clip_norm / norm;
  }
  for (std::size_t h = 0; h < params.count(); ++h) {
    Matrix& v = params.value(h);
    Matrix& g = params.grad(h);
    double* vp = v.data();
    double* gp = g.data();
    for (std::size_t i = 0; i < v.size(); ++i) {
      vp[i] -= learning_rate * scale * gp[i];
      gp[i] = 0.0;
    }
  }
}

GradCheckReport grad_check(const std::function<double(ParamSet&)>& loss_fn,
                           ParamSet& params, const GradCheckOptions& opts, Rng& rng) {
  params.zero_grads();
  loss_fn(params);
  std::vector<Matrix> analytic;
  analytic.reserve(params.count());
  for (std::size_t h = 0; h < params.count(); ++h) analytic.push_back(params.grad(h));

  GradCheckReport report;
  const double eps = opts.epsilon;
  for (std::size_t h = 0; h < params.count(); ++h) {
    Matrix& v = params.value(h);
    const std::size_t total = v.size();
    if (total == 0) continue;
    std::vector<std::size_t> coords;
    if (total <= opts.samples_per_matrix) {
      coords.resize(total);
      for (std::size_t i = 0; i < total; ++i) coords[i] = i;
    } else {
      // sample distinct coordinates
      std::vector<std::size_t> all(total);
      for (std::size_t i = 0; i < total; ++i) all[i] = i;
      for (std::size_t i = 0; i < opts.samples_per_matrix; ++i) {
        std::swap(all[i], all[i + rng.below(total - i)]);
        coords.push_back(all[i]);
      }
    }
    for (std::size_t idx : coords) {
      const double saved = v.data()[idx];
      v.data()[idx] = saved + eps;
      params.zero_grads();
      const double up = loss_fn(params);
      v.data()[idx] = saved - eps;
      params.zero_grads();
      const double down = loss_fn(params);
      v.data()[idx] = saved;
      const double numeric = (up - down) / (2.0 * eps);
      const double a = analytic[h].data()[idx];
      const double rel = std::abs(a - numeric) /
                         std::max({std::abs(a), std::abs(numeric), 1e-8});
      ++report.coords_checked;
      if (rel > report.max_rel_error) {
        report.max_rel_error = rel;
        report.worst_param = params.name(h);
        report.worst_index = idx;
        report.worst_analytic = a;
        report.worst_numeric = numeric;
      }
    }
  }
  params.zero_grads();
  return report;
}

}  // namespace embkit::num
