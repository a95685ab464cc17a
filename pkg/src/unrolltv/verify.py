"""Self-verification suites wiring the oracles against the main code paths.

Each check pits an implementation against an independent route to the
same number: brute-force grid minimization for the proximal operator,
central finite differences for every analytic gradient, the exact
taut-string solver for ADMM, and the frozen-prediction diagnostic for
the unroll recursion. The checks call through the module namespaces on
purpose, so a patched-in bug is exercised rather than a stale import.
"""

import time
from typing import NamedTuple

import numpy as np

from . import mlp, oracles, regularizers
from .experiments import PcSignalSpec, data_term, generate_pc_signal
from .fields import gradient_adjoint, spatial_gradient

__all__ = [
    "CheckResult",
    "check_proximal",
    "check_regularizer_gradients",
    "check_predictor_gradients",
    "check_full_loss_gradients",
    "check_admm_vs_exact",
    "check_unroll_vs_admm",
    "run_verification",
    "LEVELS",
]

LEVELS = ("fast", "full")


class CheckResult(NamedTuple):
    name: str
    passed: bool
    detail: str


def check_proximal(n_pairs=100, seed=0):
    """soft_threshold against brute-force minimization of its objective.

    For random (x, kappa), grid-search kappa*|q| + (q - x)^2 / 2 over
    q in [-2|x|, 2|x|] at step 1e-4; the closed form must land within
    one grid step of the winner.
    """
    rng = np.random.default_rng(seed)
    step = 1e-4
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(n_pairs):
        x = rng.uniform(-3.0, 3.0)
        kappa = rng.uniform(0.0, 1.5)
        grid = np.arange(-2.0 * abs(x), 2.0 * abs(x) + step, step)
        if grid.size == 0:
            grid = np.array([0.0])
        objective = kappa * np.abs(grid) + 0.5 * (grid - x) ** 2
        best = grid[np.argmin(objective)]
        worst = max(worst, abs(regularizers.soft_threshold(x, kappa) - best))
    elapsed = time.perf_counter() - t0
    return CheckResult(
        "proximal brute force",
        bool(worst <= step + 1e-12),
        f"max gap {worst:.3e} over {n_pairs} pairs (tol {step:g}), {elapsed:.2f}s",
    )


def _fd_wrt_c(value_fn, c, step=1e-6):
    """Central finite differences of a scalar function of a grid."""
    num = np.zeros_like(c)
    flat = num.ravel()
    base = c.copy().ravel()
    for i in range(base.size):
        probe = base.copy()
        probe[i] = base[i] + step
        hi = value_fn(probe.reshape(c.shape))
        probe[i] = base[i] - step
        lo = value_fn(probe.reshape(c.shape))
        flat[i] = (hi - lo) / (2.0 * step)
    return num


def _max_rel(analytic, numeric):
    a = np.asarray(analytic).ravel()
    n = np.asarray(numeric).ravel()
    return float(np.max(np.abs(a - n) / np.maximum(np.maximum(np.abs(a), np.abs(n)), 1e-12)))


def check_regularizer_gradients(seeds=range(5), tol=1e-6):
    """All four smoothness gradients against central differences on c.

    Entries are drawn away from the TV and Huber kinks so the analytic
    subgradient is the true derivative at every probe.
    """
    worst = 0.0
    k = 0.3
    eps = 0.05
    rcfg = regularizers.RegularizerConfig(lam=0.35, rho=1.2, eta=0.5, steps=3)
    for seed in seeds:
        rng = np.random.default_rng(seed)
        mags = rng.uniform(0.45, 1.5, size=(1, 12))
        c = mags * rng.choice([-1.0, 1.0], size=mags.shape)

        state = regularizers.unroll_updates(c, rcfg)
        cases = [
            (lambda cc: regularizers.tv_smoothness(cc).value,
             regularizers.tv_smoothness(c).grad),
            (lambda cc: regularizers.huber_smoothness(cc, k).value,
             regularizers.huber_smoothness(c, k).grad),
            (lambda cc: regularizers.charbonnier_smoothness(cc, eps).value,
             regularizers.charbonnier_smoothness(c, eps).grad),
            (lambda cc: regularizers.unrolled_smoothness(cc, state, rcfg).value,
             regularizers.unrolled_smoothness(c, state, rcfg).grad),
        ]
        for value_fn, grad in cases:
            worst = max(worst, _max_rel(grad, _fd_wrt_c(value_fn, c)))
    return CheckResult(
        "regularizer gradients",
        bool(worst < tol),
        f"max rel err {worst:.3e} over {len(list(seeds))} seeds (tol {tol:g})",
    )


def check_predictor_gradients(seeds=range(3), tol=1e-6):
    """Hand-written backprop against finite differences.

    Covers the trivial quadratic loss (exact gradient) and a random
    linear functional of the network output.
    """
    # central differences are exact for a quadratic at any step, so a
    # large step and coordinates away from 0 leave only rounding noise
    base = mlp.init_mlp((1, 6, 6, 6, 1), 0)
    vec = mlp.params_to_vector(base)
    quad_params = mlp.vector_to_params(vec + 0.25 * np.sign(vec), base)
    quad_report = mlp.finite_diff_check(
        quad_params,
        lambda p: (0.5 * float(np.sum(mlp.params_to_vector(p) ** 2)),
                   mlp.vector_to_params(mlp.params_to_vector(p), p)),
        step=1e-2,
    )
    # enough points and positive upstream weights keep every parameter
    # gradient well above the finite-difference noise floor
    worst = 0.0
    for seed in seeds:
        rng = np.random.default_rng(seed)
        params = mlp.init_mlp((1, 6, 6, 6, 1), rng)
        xs = rng.uniform(-2.0, 2.0, size=40)
        upstream = rng.uniform(0.5, 1.5, size=40)

        def loss_fn(p):
            value = float(np.dot(upstream, mlp.mlp_forward(p, xs)))
            return value, mlp.mlp_backward(p, xs, upstream)

        report = mlp.finite_diff_check(params, loss_fn, step=1e-5)
        worst = max(worst, report.max_rel_error)
    passed = quad_report.max_rel_error < 1e-9 and worst < tol
    return CheckResult(
        "predictor gradients",
        bool(passed),
        f"quadratic {quad_report.max_rel_error:.3e} (tol 1e-09), "
        f"linear-functional {worst:.3e} over {len(list(seeds))} seeds (tol {tol:g})",
    )


def _experiment_loss_fn(signal, penalty_name, lam, rcfg, huber_k, charb_eps, center_c):
    """Full data + smoothness loss over parameters, smoothness frozen
    where it must be: the unrolled state is built once from the center
    parameters and reused at every probe."""
    xs_all = np.concatenate([signal.xs_sample, signal.xs_dense])
    m = signal.xs_sample.size
    if penalty_name == "unrolled":
        state = regularizers.unroll_updates(center_c, rcfg)
        smooth = lambda c: regularizers.unrolled_smoothness(c, state, rcfg)
    elif penalty_name == "tv":
        smooth = lambda c: _scale(regularizers.tv_smoothness(c), lam)
    elif penalty_name == "huber":
        smooth = lambda c: _scale(regularizers.huber_smoothness(c, huber_k), lam)
    elif penalty_name == "charbonnier":
        smooth = lambda c: _scale(regularizers.charbonnier_smoothness(c, charb_eps), lam)
    else:
        raise ValueError(f"unknown penalty {penalty_name!r}")

    def loss_fn(params):
        out = mlp.mlp_forward(params, xs_all)
        dval, dgrad = data_term(out[:m], signal.ys_sample)
        c = spatial_gradient(out[m:])
        sval, sgrad = smooth(c)
        grads = mlp.mlp_backward(params, xs_all, np.concatenate([dgrad, gradient_adjoint(sgrad)]))
        return dval + sval, grads

    return loss_fn


def _scale(result, lam):
    return regularizers.SmoothnessResult(lam * result.value, lam * result.grad)


def check_full_loss_gradients(seeds=range(2), tol=1e-5, step=1e-5):
    """Finite differences of the entire experiment loss w.r.t. every
    network parameter, for each of the four penalties.

    Initializations whose dense gradient lands too close to a TV or
    Huber kink are reseeded deterministically, since the comparison is
    only meaningful where the loss is differentiable.
    """
    lam = 0.05
    huber_k = 0.02
    charb_eps = 0.01
    rcfg = regularizers.RegularizerConfig(lam=0.05, rho=1.0, eta=0.5, steps=2)
    margin = 1e-4
    predicates = {
        "tv": lambda c: float(np.min(np.abs(c[0, :-1]))) > margin,
        "huber": lambda c: float(np.min(np.abs(np.abs(c[0, :-1]) - huber_k))) > margin,
        "charbonnier": lambda c: True,
        "unrolled": lambda c: True,
    }
    worst = 0.0
    worst_name = ""
    for seed in seeds:
        signal = generate_pc_signal(PcSignalSpec(n_samples=16, dense_resolution=64, seed=seed))
        xs_all = np.concatenate([signal.xs_sample, signal.xs_dense])
        m = signal.xs_sample.size
        for name in regularizers.PENALTY_NAMES:
            params = center_c = None
            for attempt in range(10):
                rng = np.random.default_rng(np.random.SeedSequence([seed + 1000 * attempt, 1]))
                candidate = mlp.init_mlp((1, 8, 8, 8, 1), rng)
                c = spatial_gradient(mlp.mlp_forward(candidate, xs_all)[m:])
                if predicates[name](c):
                    params, center_c = candidate, c
                    break
            if params is None:
                return CheckResult(
                    "full loss gradients", False,
                    f"could not find a kink-free init for {name} at seed {seed}",
                )
            loss_fn = _experiment_loss_fn(signal, name, lam, rcfg, huber_k, charb_eps, center_c)
            report = mlp.finite_diff_check(params, loss_fn, step=step)
            if report.max_rel_error > worst:
                worst, worst_name = report.max_rel_error, name
    return CheckResult(
        "full loss gradients",
        bool(worst < tol),
        f"max rel err {worst:.3e} ({worst_name}) over {len(list(seeds))} seeds (tol {tol:g})",
    )


def check_admm_vs_exact(n_problems=5, n=64, iters=500, tol=1e-3, seed0=100):
    """ADMM denoiser against the exact taut-string solver."""
    worst = 0.0
    for i in range(n_problems):
        rng = np.random.default_rng(seed0 + i)
        y = 0.25 * np.cumsum(rng.standard_normal(n))
        problem = oracles.DenoiseProblem(y=y, lam=float(rng.uniform(0.05, 0.5)))
        f_admm, _ = oracles.admm_denoise(problem, rho=1.0, eta=1.0, iters=iters)
        f_exact = oracles.exact_tv_denoise_1d(problem)
        worst = max(worst, float(np.max(np.abs(f_admm - f_exact))))
    return CheckResult(
        "admm vs exact denoiser",
        bool(worst <= tol),
        f"max inf-norm gap {worst:.3e} over {n_problems} problems, N={n} (tol {tol:g})",
    )


def check_unroll_vs_admm(tol=1e-12):
    """Unroll recursion against ADMM's Q/beta steps with F frozen."""
    rng = np.random.default_rng(7)
    f_source = rng.standard_normal(24)
    worst = 0.0
    for eta in (0.5, 1.0):
        rcfg = regularizers.RegularizerConfig(lam=0.4, rho=1.3, eta=eta, steps=4)
        report = oracles.unroll_vs_admm_diagnostic(f_source, rcfg)
        worst = max(worst, report.max_gap)
    zero = oracles.unroll_vs_admm_diagnostic(
        f_source, regularizers.RegularizerConfig(lam=0.0, rho=1.0, eta=1.0, steps=4)
    )
    worst = max(worst, zero.max_gap)
    return CheckResult(
        "unroll vs admm",
        bool(worst <= tol),
        f"max iterate gap {worst:.3e} over T=4, eta in (0.5, 1), lam 0 (tol {tol:g})",
    )


def run_verification(level="fast"):
    """Run every check suite; 'full' uses the 20-seed oracle sweeps."""
    if level not in LEVELS:
        raise ValueError(f"level must be one of {LEVELS}, got {level!r}")
    if level == "fast":
        return [
            check_proximal(),
            check_regularizer_gradients(seeds=range(5)),
            check_predictor_gradients(seeds=range(3)),
            check_full_loss_gradients(seeds=range(2)),
            check_admm_vs_exact(n_problems=5),
            check_unroll_vs_admm(),
        ]
    return [
        check_proximal(),
        check_regularizer_gradients(seeds=range(20)),
        check_predictor_gradients(seeds=range(20)),
        check_full_loss_gradients(seeds=range(20)),
        check_admm_vs_exact(n_problems=20),
        check_unroll_vs_admm(),
    ]
