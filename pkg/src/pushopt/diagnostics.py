"""Error metrics, Lyapunov functions, inequality spot-checks, and rate fits."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mixing import MixingMatrix, NormTransform
from .objectives import ObjectiveSuite, global_minimizer
from .solvers import APDParams, APDSCParams, SolverState

__all__ = [
    "RunTrace",
    "TraceRecorder",
    "IdentityMonitor",
    "optimality_gap",
    "consensus_error",
    "lyapunov_smooth",
    "lyapunov_sc",
    "check_inexact_bounds",
    "InexactBoundsReport",
    "fit_sublinear_rate",
    "fit_linear_rate",
    "iterations_to_threshold",
]

TRACE_COLUMNS = (
    "k",
    "loss",
    "consensus_error",
    "projection_error",
    "grad_avg_norm",
    "phi1",
    "phi2",
    "phi3",
    "phi4",
    "v_min",
)


@dataclass
class RunTrace:
    """Per-iteration diagnostics of one solver run.

    phi1..phi4 are present only when the recorder was given a NormTransform
    (phi1/phi2 for the schedule-based solver, phi3/phi4 for the
    constant-coefficient one).
    """

    label: str
    k: np.ndarray
    loss: np.ndarray
    consensus_error: np.ndarray
    projection_error: np.ndarray
    grad_avg_norm: np.ndarray
    v_min: np.ndarray
    phi1: np.ndarray | None = None
    phi2: np.ndarray | None = None
    phi3: np.ndarray | None = None
    phi4: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self.k)

    def column(self, name: str):
        return getattr(self, name)


def optimality_gap(suite: ObjectiveSuite, output: np.ndarray, xstar, fstar) -> float:
    """Mean over agents of f(estimate_i) - f*, f being the average objective.

    Evaluated in extended precision against a re-evaluated reference so the
    deep tail of the gap is resolvable.
    """
    rows = np.asarray(output, dtype=np.longdouble)
    if xstar is not None:
        ref = suite.average_value(np.asarray(xstar, dtype=np.longdouble))
    else:
        ref = np.longdouble(fstar)
    return float(suite.average_values(rows).mean() - ref)


def consensus_error(state: SolverState, p: np.ndarray) -> tuple:
    """(u_err, proj_err): agent-estimate spread and projected iterate size.

    u_err is the Frobenius distance of V^{-1} X from the all-rows-equal
    stack of the plain row average of X; proj_err projects X onto the
    complement of the Perron direction.
    """
    n = state.n
    xbar = state.X.mean(axis=0)
    U = state.X / state.v[:, None]
    u_err = float(np.linalg.norm(U - xbar[None, :]))
    Pi = np.eye(n) - np.outer(p, np.ones(n)) / n
    proj_err = float(np.linalg.norm(Pi @ state.X))
    return u_err, proj_err


def _c3(pa: float, delta: float) -> float:
    return 3.0 * (delta**2 + 2.0 * pa**2 * delta + 4.0 * pa**2)


def _c5(alpha_tau: float, delta: float) -> float:
    return (8.0 / 7.0) * (
        1.5 * delta + 6.0 * alpha_tau**2 * delta + 48.0 * alpha_tau**2 / 7.0
    )


def lyapunov_smooth(
    state: SolverState, k: int, params: APDParams, nt: NormTransform
) -> tuple:
    """(phi1, phi2) for the schedule-based solver at iteration k.

    phi1 weights the average parts by the decayed push-sum error; phi2
    combines the weighted-norm consensus errors of X, Z and G.
    """
    d = nt.delta
    tau_k = params.tau(k)
    xbar = state.X.mean(axis=0)
    zbar = state.Z.mean(axis=0)
    phi1 = (1.0 - d) ** (2 * k) * (
        float(xbar @ xbar) + (8.0 / d**2) * tau_k**2 * float(zbar @ zbar)
    )
    Pi = nt.projector()
    phi2 = (
        nt.mat_norm(Pi @ state.X) ** 2
        + (6.0 / d**2) * nt.mat_norm(Pi @ state.Z) ** 2
        + (_c3(params.pa, d) * params.eta**2 / d**4) * nt.mat_norm(Pi @ state.G) ** 2
    )
    return float(phi1), float(phi2)


def lyapunov_sc(
    state: SolverState, k: int, params: APDSCParams, nt: NormTransform
) -> tuple:
    """(phi3, phi4), the constant-coefficient analogues of (phi1, phi2)."""
    d = nt.delta
    xbar = state.X.mean(axis=0)
    zbar = state.Z.mean(axis=0)
    phi3 = (1.0 - d) ** (2 * k) * (
        float(xbar @ xbar) + (8.0 / d**2) * params.tau**2 * float(zbar @ zbar)
    )
    Pi = nt.projector()
    at = params.alpha * params.tau
    phi4 = (
        nt.mat_norm(Pi @ state.X) ** 2
        + (24.0 / (7.0 * d**2)) * nt.mat_norm(Pi @ state.Z) ** 2
        + (_c5(at, d) * params.eta**2 / d**4) * nt.mat_norm(Pi @ state.G) ** 2
    )
    return float(phi3), float(phi4)


@dataclass(frozen=True)
class InexactBoundsReport:
    """Outcome of the inexact convexity/strong-convexity spot-checks."""

    trials: int
    min_slack: float
    sc_slack: float | None
    violations: int


def check_inexact_bounds(
    suite: ObjectiveSuite,
    state: SolverState,
    trials: int,
    seed: int,
    xstar: np.ndarray | None = None,
) -> InexactBoundsReport:
    """Verify the descent bounds that hold despite gradient-average error.

    Samples random row pairs (a, b) and checks
    f(a) - f(b) <= <gbar, a - b> + (L / 2n) ||U - 1 a||_F^2; when the suite
    is strongly convex also checks the mu-variant at (xbar, x*). Slack is
    RHS - LHS; violations are counted below -1e-8 * scale.
    """
    rng = np.random.default_rng(seed)
    n, dim, L = suite.n, suite.dim, suite.L
    gbar = state.G.mean(axis=0)
    U = state.X / state.v[:, None]
    xbar = state.X.mean(axis=0)
    scale_ref = 1.0 + float(np.linalg.norm(xbar))

    min_slack = np.inf
    violations = 0
    for _ in range(trials):
        a = scale_ref * rng.standard_normal(dim)
        b = scale_ref * rng.standard_normal(dim)
        lhs = float(suite.average_value(a) - suite.average_value(b))
        rhs = float(gbar @ (a - b)) + (L / (2.0 * n)) * float(
            np.linalg.norm(U - a[None, :]) ** 2
        )
        slack = rhs - lhs
        min_slack = min(min_slack, slack)
        if slack < -1e-8 * (1.0 + abs(lhs) + abs(rhs)):
            violations += 1

    sc_slack = None
    if suite.mu > 0:
        if xstar is None:
            xstar, _ = global_minimizer(suite)
        lhs = float(suite.average_value(xbar))
        rhs = (
            float(suite.average_value(xstar))
            + float(gbar @ (xbar - xstar))
            - 0.25 * suite.mu * float(np.linalg.norm(xbar - xstar) ** 2)
            + (L / n) * float(np.linalg.norm(U - xbar[None, :]) ** 2)
        )
        sc_slack = rhs - lhs
        if sc_slack < -1e-8 * (1.0 + abs(lhs) + abs(rhs)):
            violations += 1
    return InexactBoundsReport(
        trials=trials, min_slack=float(min_slack), sc_slack=sc_slack, violations=violations
    )


def _fit_window(trace: RunTrace, k_lo: int, k_hi: int) -> tuple:
    if not k_hi > k_lo >= 1:
        raise ValueError("need k_hi > k_lo >= 1")
    mask = (trace.k >= k_lo) & (trace.k <= k_hi)
    if mask.sum() < 2:
        raise ValueError("fewer than two trace records in the fit window")
    k = trace.k[mask].astype(float)
    loss = trace.loss[mask]
    if not (loss > 0).all():
        raise ValueError("non-positive loss in fit window; rate fit undefined")
    return k, loss


def fit_sublinear_rate(trace: RunTrace, k_lo: int, k_hi: int) -> float:
    """Least-squares slope of log(loss) against log(k) on [k_lo, k_hi]."""
    k, loss = _fit_window(trace, k_lo, k_hi)
    return float(np.polyfit(np.log(k), np.log(loss), 1)[0])


def fit_linear_rate(trace: RunTrace, k_lo: int, k_hi: int) -> float:
    """Per-iteration decay factor: exp of the slope of log(loss) against k."""
    k, loss = _fit_window(trace, k_lo, k_hi)
    return float(np.exp(np.polyfit(k, np.log(loss), 1)[0]))


def iterations_to_threshold(trace: RunTrace, threshold: float):
    """First recorded iteration whose loss is at or below the threshold."""
    hits = np.nonzero(trace.loss <= threshold)[0]
    return int(trace.k[hits[0]]) if hits.size else None


class TraceRecorder:
    """Hook that accumulates a RunTrace while a solver runs.

    Pass as `hooks=` to any run; the run returns recorder.trace(). The
    reference value for the loss column is re-evaluated in extended
    precision at x*. With stride="auto" every iteration is recorded up to
    k = 10_000 and every 10th beyond.
    """

    def __init__(
        self,
        suite: ObjectiveSuite,
        mixing: MixingMatrix,
        xstar=None,
        fstar=None,
        params=None,
        norm_transform: NormTransform | None = None,
        estimate: str = "Y",
        stride="auto",
        label: str = "",
    ):
        self.suite = suite
        self.mixing = mixing
        self.params = params
        self.nt = norm_transform
        self.estimate = estimate
        self.stride = stride
        self.label = label
        if xstar is not None:
            self._ref = suite.average_value(np.asarray(xstar, dtype=np.longdouble))
        elif fstar is not None:
            self._ref = np.longdouble(fstar)
        else:
            self._ref = None
        self._rows = {name: [] for name in TRACE_COLUMNS}

    def _due(self, k: int) -> bool:
        if self.stride == "auto":
            return k <= 10_000 or k % 10 == 0
        return k % int(self.stride) == 0

    def __call__(self, state: SolverState) -> None:
        if not self._due(state.k):
            return
        r = self._rows
        r["k"].append(state.k)
        if self._ref is not None:
            est = np.asarray(state.ratio(self.estimate), dtype=np.longdouble)
            r["loss"].append(float(self.suite.average_values(est).mean() - self._ref))
        else:
            r["loss"].append(np.nan)
        u_err, proj_err = consensus_error(state, self.mixing.p)
        r["consensus_error"].append(u_err)
        r["projection_error"].append(proj_err)
        r["grad_avg_norm"].append(float(np.linalg.norm(state.G.mean(axis=0))))
        r["v_min"].append(float(state.v.min()))
        if self.nt is not None and isinstance(self.params, APDParams):
            phi1, phi2 = lyapunov_smooth(state, state.k, self.params, self.nt)
            r["phi1"].append(phi1)
            r["phi2"].append(phi2)
        elif self.nt is not None and isinstance(self.params, APDSCParams):
            phi3, phi4 = lyapunov_sc(state, state.k, self.params, self.nt)
            r["phi3"].append(phi3)
            r["phi4"].append(phi4)

    def trace(self) -> RunTrace:
        r = self._rows
        def col(name):
            return np.array(r[name]) if r[name] else None
        return RunTrace(
            label=self.label,
            k=np.array(r["k"], dtype=int),
            loss=np.array(r["loss"]),
            consensus_error=np.array(r["consensus_error"]),
            projection_error=np.array(r["projection_error"]),
            grad_avg_norm=np.array(r["grad_avg_norm"]),
            v_min=np.array(r["v_min"]),
            phi1=col("phi1"),
            phi2=col("phi2"),
            phi3=col("phi3"),
            phi4=col("phi4"),
        )


class IdentityMonitor:
    """Hook that tracks the worst residuals of the exact average-iterate
    identities along a run.

    kind is "apd", "apdsc", or "pushdiging". Residuals are normalized by
    1 + the norms of the terms entering each identity, so the recorded
    maxima are directly comparable against a tolerance.
    """

    def __init__(self, mixing: MixingMatrix, params=None, kind: str = "apd"):
        if kind not in ("apd", "apdsc", "pushdiging"):
            raise ValueError(f"unknown kind {kind!r}")
        self.n = mixing.n
        self.params = params
        self.kind = kind
        self.prev: SolverState | None = None
        self.max_mass_err = 0.0
        self.max_tracking_err = 0.0
        self.max_ybar_res = 0.0
        self.max_zbar_res = 0.0
        self.max_xbar_res = 0.0
        self.max_coupling_res = 0.0  # x - z vs (1 - tau)/tau (y - x)

    def __call__(self, state: SolverState) -> None:
        nrm = np.linalg.norm
        self.max_mass_err = max(self.max_mass_err, abs(float(state.v.sum()) - self.n))
        gbar_true = state.grad_U.mean(axis=0)
        track = nrm(state.G.mean(axis=0) - gbar_true) / (1.0 + nrm(gbar_true))
        self.max_tracking_err = max(self.max_tracking_err, float(track))

        if self.kind in ("apd", "apdsc"):
            tau_k = (
                self.params.tau(state.k)
                if self.kind == "apd"
                else self.params.tau
            )
            xbar = state.X.mean(axis=0)
            ybar = state.Y.mean(axis=0)
            zbar = state.Z.mean(axis=0)
            coef = (1.0 - tau_k) / tau_k
            res = nrm((xbar - zbar) - coef * (ybar - xbar))
            scale = 1.0 + nrm(xbar) + nrm(zbar) + coef * (nrm(ybar) + nrm(xbar))
            self.max_coupling_res = max(self.max_coupling_res, float(res / scale))

        prev = self.prev
        if prev is not None and state.k == prev.k + 1:
            eta = self.params.eta if self.params is not None else None
            xbar0 = prev.X.mean(axis=0)
            zbar0 = prev.Z.mean(axis=0)
            gbar0 = prev.G.mean(axis=0)
            ybar1 = state.Y.mean(axis=0)
            zbar1 = state.Z.mean(axis=0)
            xbar1 = state.X.mean(axis=0)
            if self.kind == "pushdiging":
                res = nrm(xbar1 - (xbar0 - eta * gbar0))
                scale = 1.0 + nrm(xbar0) + eta * nrm(gbar0)
                self.max_xbar_res = max(self.max_xbar_res, float(res / scale))
            else:
                res = nrm(ybar1 - (xbar0 - eta * gbar0))
                scale = 1.0 + nrm(xbar0) + eta * nrm(gbar0)
                self.max_ybar_res = max(self.max_ybar_res, float(res / scale))
                if self.kind == "apd":
                    a_k = self.params.alpha(prev.k)
                    expect_z = zbar0 - a_k * eta * gbar0
                    scale_z = 1.0 + nrm(zbar0) + a_k * eta * nrm(gbar0)
                    tau1 = self.params.tau(state.k)
                else:
                    b = self.params.beta
                    expect_z = (
                        (1.0 - b) * zbar0
                        + b * xbar0
                        - self.params.alpha * eta * gbar0
                    )
                    scale_z = (
                        1.0
                        + nrm(zbar0)
                        + nrm(xbar0)
                        + self.params.alpha * eta * nrm(gbar0)
                    )
                    tau1 = self.params.tau
                self.max_zbar_res = max(
                    self.max_zbar_res, float(nrm(zbar1 - expect_z) / scale_z)
                )
                expect_x = (1.0 - tau1) * ybar1 + tau1 * zbar1
                scale_x = 1.0 + nrm(ybar1) + nrm(zbar1)
                self.max_xbar_res = max(
                    self.max_xbar_res, float(nrm(xbar1 - expect_x) / scale_x)
                )
        self.prev = state

    def worst(self) -> dict:
        return {
            "mass": self.max_mass_err,
            "tracking": self.max_tracking_err,
            "ybar": self.max_ybar_res,
            "zbar": self.max_zbar_res,
            "xbar": self.max_xbar_res,
            "coupling": self.max_coupling_res,
        }
