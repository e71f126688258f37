#include "hydrosense/ealstm.hpp"

#include <cmath>

namespace hydrosense::ealstm {

namespace {

constexpr std::array<std::string_view, kNumGates> kGateNames = {"f", "g", "o"};

void require(bool ok, const std::string& what) {
    if (!ok) throw ContractViolation("ealstm: " + what);
}

/// Core recurrence step writing into caller-owned storage.
void step_into(const Params& p, std::span<const double> x, std::span<const double> h_prev,
               std::span<const double> c_prev, std::span<const double> i, std::span<double> f,
               std::span<double> g, std::span<double> o, std::span<double> c, std::span<double> h,
               long step) {
    const std::size_t H = p.hidden;
    std::array<std::span<double>, kNumGates> pre = {f, g, o};
    for (std::size_t q = 0; q < kNumGates; ++q) {
        const auto& gp = p.gates[q];
        std::copy(gp.b.begin(), gp.b.end(), pre[q].begin());
        matvec_acc(gp.W, x, pre[q]);
        matvec_acc(gp.U, h_prev, pre[q]);
    }
    for (std::size_t k = 0; k < H; ++k) {
        f[k] = sigmoid(f[k]);
        g[k] = std::tanh(g[k]);
        o[k] = sigmoid(o[k]);
        c[k] = f[k] * c_prev[k] + i[k] * g[k];
        h[k] = o[k] * std::tanh(c[k]);
        if (!std::isfinite(c[k]) || !std::isfinite(h[k]))
            throw NumericFault("ealstm: non-finite cell state", step);
    }
}

}  // namespace

Params Params::zeros(std::size_t hidden, std::size_t n_static, std::size_t n_dynamic) {
    require(hidden > 0, "hidden size must be positive");
    Params p;
    p.hidden = hidden;
    p.n_static = n_static;
    p.n_dynamic = n_dynamic;
    p.W_i = Matrix(hidden, n_static);
    p.b_i = Vector(hidden, 0.0);
    for (auto& g : p.gates) {
        g.W = Matrix(hidden, n_dynamic);
        g.U = Matrix(hidden, hidden);
        g.b = Vector(hidden, 0.0);
    }
    p.head_w = Vector(hidden, 0.0);
    p.head_b = 0.0;
    return p;
}

void Params::validate() const {
    const std::size_t H = hidden;
    require(H > 0, "hidden size must be positive");
    require(W_i.rows() == H && W_i.cols() == n_static, "W_i shape");
    require(b_i.size() == H, "b_i length");
    for (std::size_t q = 0; q < kNumGates; ++q) {
        const auto& g = gates[q];
        const std::string n(kGateNames[q]);
        require(g.W.rows() == H && g.W.cols() == n_dynamic, "W_" + n + " shape");
        require(g.U.rows() == H && g.U.cols() == H, "U_" + n + " shape");
        require(g.b.size() == H, "b_" + n + " length");
    }
    require(head_w.size() == H, "head_w length");
}

std::size_t Params::num_values() const {
    std::size_t n = 0;
    for_each([&](std::string_view, std::span<const double> t) { n += t.size(); });
    return n;
}

void Params::for_each(const std::function<void(std::string_view, std::span<double>)>& fn) {
    fn("W_i", W_i.flat());
    fn("b_i", b_i);
    static constexpr std::array<std::array<std::string_view, 3>, kNumGates> names = {{
        {"W_f", "U_f", "b_f"},
        {"W_g", "U_g", "b_g"},
        {"W_o", "U_o", "b_o"},
    }};
    for (std::size_t q = 0; q < kNumGates; ++q) {
        fn(names[q][0], gates[q].W.flat());
        fn(names[q][1], gates[q].U.flat());
        fn(names[q][2], gates[q].b);
    }
    fn("head_w", head_w);
    fn("head_b", std::span<double>(&head_b, 1));
}

void Params::for_each(
    const std::function<void(std::string_view, std::span<const double>)>& fn) const {
    const_cast<Params*>(this)->for_each(
        [&](std::string_view name, std::span<double> t) { fn(name, t); });
}

Params init_params(std::size_t hidden, std::size_t n_static, std::size_t n_dynamic,
                   std::uint64_t seed) {
    Params p = Params::zeros(hidden, n_static, n_dynamic);
    const double a = 1.0 / std::sqrt(static_cast<double>(hidden));
    Rng rng(seed);
    p.for_each([&](std::string_view name, std::span<double> t) {
        if (name.front() == 'W' || name.front() == 'U' || name == "head_w")
            for (auto& v : t) v = rng.uniform(-a, a);
    });
    std::fill(p.gates[kForget].b.begin(), p.gates[kForget].b.end(), 3.0);
    return p;
}

Vector static_gate(const Params& p, std::span<const double> x_s) {
    require(x_s.size() == p.n_static, "x_s length != n_static");
    Vector i = p.b_i;
    matvec_acc(p.W_i, x_s, i);
    for (auto& v : i) v = sigmoid(v);
    return i;
}

std::pair<CellState, StepCache> cell_step(const Params& p, std::span<const double> x_d_t,
                                          const CellState& prev, std::span<const double> i,
                                          long step) {
    const std::size_t H = p.hidden;
    require(x_d_t.size() == p.n_dynamic, "x_d[t] length != n_dynamic");
    require(prev.h.size() == H && prev.c.size() == H, "state length != hidden");
    require(i.size() == H, "input gate length != hidden");
    CellState next{Vector(H), Vector(H)};
    StepCache sc{Vector(H), Vector(H), Vector(H)};
    step_into(p, x_d_t, prev.h, prev.c, i, sc.f, sc.g, sc.o, next.c, next.h, step);
    return {std::move(next), std::move(sc)};
}

ForwardResult forward(const Params& p, std::span<const double> x_s, const Matrix& x_d) {
    const std::size_t H = p.hidden;
    const std::size_t T = x_d.rows();
    require(T >= 1, "sequence must have at least one step");
    require(x_d.cols() == p.n_dynamic, "x_d columns != n_dynamic");

    ForwardResult res;
    ForwardCache& cache = res.cache;
    cache.x_s.assign(x_s.begin(), x_s.end());
    cache.i = static_gate(p, x_s);
    cache.x_d = x_d;
    cache.f = Matrix(T, H);
    cache.g = Matrix(T, H);
    cache.o = Matrix(T, H);
    cache.c = Matrix(T, H);
    cache.h = Matrix(T, H);
    cache.initial = CellState{Vector(H, 0.0), Vector(H, 0.0)};

    for (std::size_t t = 0; t < T; ++t) {
        std::span<const double> h_prev = t == 0 ? std::span<const double>(cache.initial.h)
                                                : std::as_const(cache.h).row(t - 1);
        std::span<const double> c_prev = t == 0 ? std::span<const double>(cache.initial.c)
                                                : std::as_const(cache.c).row(t - 1);
        step_into(p, x_d.row(t), h_prev, c_prev, cache.i, cache.f.row(t), cache.g.row(t),
                  cache.o.row(t), cache.c.row(t), cache.h.row(t), static_cast<long>(t + 1));
    }
    res.yhat = dot(p.head_w, std::as_const(cache.h).row(T - 1)) + p.head_b;
    if (!std::isfinite(res.yhat))
        throw NumericFault("ealstm: non-finite prediction", static_cast<long>(T));
    return res;
}

double predict(const Params& p, std::span<const double> x_s, const Matrix& x_d) {
    const std::size_t H = p.hidden;
    const std::size_t T = x_d.rows();
    require(T >= 1, "sequence must have at least one step");
    require(x_d.cols() == p.n_dynamic, "x_d columns != n_dynamic");
    const Vector i = static_gate(p, x_s);
    Vector h(H, 0.0), c(H, 0.0), h_next(H), c_next(H), f(H), g(H), o(H);
    for (std::size_t t = 0; t < T; ++t) {
        step_into(p, x_d.row(t), h, c, i, f, g, o, c_next, h_next, static_cast<long>(t + 1));
        std::swap(h, h_next);
        std::swap(c, c_next);
    }
    const double y = dot(p.head_w, h) + p.head_b;
    if (!std::isfinite(y)) throw NumericFault("ealstm: non-finite prediction", static_cast<long>(T));
    return y;
}

namespace {

/**
 * Shared reverse sweep. When grads is null only the input-gate cotangent is
 * accumulated (enough for d_xs); otherwise parameter and x_d gradients are
 * filled as well. Arithmetic on the d_i path is identical in both modes.
 */
Vector reverse_sweep(const ForwardCache& cache, const Params& p, double d_yhat,
                     SequenceGrads* grads) {
    const std::size_t H = p.hidden;
    const std::size_t T = cache.steps();
    require(T >= 1, "empty cache");
    require(cache.i.size() == H && cache.h.cols() == H, "cache hidden size != params");
    require(cache.x_d.cols() == p.n_dynamic, "cache n_dynamic != params");
    require(cache.x_s.size() == p.n_static, "cache n_static != params");

    Vector dh(H), dc(H, 0.0), d_i(H, 0.0);
    for (std::size_t k = 0; k < H; ++k) dh[k] = d_yhat * p.head_w[k];
    if (grads) {
        const auto hT = cache.h.row(T - 1);
        for (std::size_t k = 0; k < H; ++k) grads->d_params.head_w[k] = d_yhat * hT[k];
        grads->d_params.head_b = d_yhat;
    }

    std::array<Vector, kNumGates> dz;
    for (auto& v : dz) v.assign(H, 0.0);
    Vector dh_prev(H);

    for (std::size_t tt = T; tt-- > 0;) {
        const auto f = cache.f.row(tt);
        const auto g = cache.g.row(tt);
        const auto o = cache.o.row(tt);
        const auto c = cache.c.row(tt);
        const std::span<const double> c_prev =
            tt == 0 ? std::span<const double>(cache.initial.c) : cache.c.row(tt - 1);
        const std::span<const double> h_prev =
            tt == 0 ? std::span<const double>(cache.initial.h) : cache.h.row(tt - 1);

        for (std::size_t k = 0; k < H; ++k) {
            const double tc = std::tanh(c[k]);
            const double d_o = dh[k] * tc;
            dc[k] += dh[k] * o[k] * (1.0 - tc * tc);
            const double d_f = dc[k] * c_prev[k];
            const double d_g = dc[k] * cache.i[k];
            d_i[k] += dc[k] * g[k];
            dz[kForget][k] = d_f * f[k] * (1.0 - f[k]);
            dz[kCell][k] = d_g * (1.0 - g[k] * g[k]);
            dz[kOutput][k] = d_o * o[k] * (1.0 - o[k]);
            dc[k] *= f[k];
        }

        std::fill(dh_prev.begin(), dh_prev.end(), 0.0);
        for (std::size_t q = 0; q < kNumGates; ++q) {
            const auto& gp = p.gates[q];
            matTvec_acc(gp.U, dz[q], dh_prev);
            if (grads) {
                auto& dg = grads->d_params.gates[q];
                add_outer(dg.W, dz[q], cache.x_d.row(tt));
                add_outer(dg.U, dz[q], h_prev);
                for (std::size_t k = 0; k < H; ++k) dg.b[k] += dz[q][k];
                matTvec_acc(gp.W, dz[q], grads->d_xd.row(tt));
            }
        }
        std::swap(dh, dh_prev);
    }

    Vector dz_i(H);
    for (std::size_t k = 0; k < H; ++k) dz_i[k] = d_i[k] * cache.i[k] * (1.0 - cache.i[k]);
    Vector d_xs(p.n_static, 0.0);
    matTvec_acc(p.W_i, dz_i, d_xs);
    if (grads) {
        add_outer(grads->d_params.W_i, dz_i, cache.x_s);
        grads->d_params.b_i = dz_i;
    }
    return d_xs;
}

}  // namespace

SequenceGrads backward(const ForwardCache& cache, const Params& p, double d_yhat) {
    SequenceGrads grads;
    grads.d_params = Params::zeros(p.hidden, p.n_static, p.n_dynamic);
    grads.d_xd = Matrix(cache.steps(), p.n_dynamic);
    grads.d_xs = reverse_sweep(cache, p, d_yhat, &grads);
    return grads;
}

Vector backward_static(const ForwardCache& cache, const Params& p, double d_yhat) {
    return reverse_sweep(cache, p, d_yhat, nullptr);
}

}  // namespace hydrosense::ealstm

namespace hydrosense::ealstm {

void accumulate(Params& acc, const Params& g, double factor) {
    std::vector<std::span<const double>> src;
    g.for_each([&](std::string_view, std::span<const double> t) { src.push_back(t); });
    std::size_t idx = 0;
    acc.for_each([&](std::string_view name, std::span<double> t) {
        const auto s = src.at(idx++);
        if (s.size() != t.size())
            throw ContractViolation("ealstm: accumulate shape mismatch in " + std::string(name));
        for (std::size_t k = 0; k < t.size(); ++k) t[k] += factor * s[k];
    });
}

void scale(Params& p, double factor) {
    p.for_each([&](std::string_view, std::span<double> t) {
        for (auto& v : t) v *= factor;
    });
}

double squared_norm(const Params& p) {
    double acc = 0.0;
    p.for_each([&](std::string_view, std::span<const double> t) {
        for (double v : t) acc += v * v;
    });
    return acc;
}

bool all_finite(const Params& p) {
    bool ok = true;
    p.for_each([&](std::string_view, std::span<const double> t) { ok = ok && hydrosense::all_finite(t); });
    return ok;
}

}  // namespace hydrosense::ealstm
