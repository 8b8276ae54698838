"""Discrete-event Monte Carlo of the birth/death/transformation process.

Two stepping modes:

``fixed``
    The Bernoulli scheme: over a step dt, each elementary event fires with
    probability rate*dt, at most one event per step, chosen by a single
    uniform draw against the cumulative probabilities.  The step must keep
    the total probability at or below one; sizes are chosen from the initial
    total rate with a safety factor and halved automatically (and logged)
    whenever a path's rates grow past the bound.

``exact``
    Competing exponential clocks: the waiting time is exponential in the
    total rate and the event is chosen proportionally to its rate.  For
    time-dependent reactivity the rates are frozen at the jump's start time,
    which is first order in rho_dot * tau.

Yield handling:

``fractional``
    Event vectors are applied verbatim, so a fission adds the real-valued
    expected yields (-1 + (1-beta) nu neutrons, beta_i nu to group i).  This
    is the process whose mean and covariance match the drift/diffusion pair
    term by term, and the mode used for table reproduction.

``integer``
    A fission draws an integer total yield in {floor(nu), ceil(nu)} with mean
    nu; each yielded neutron is delayed with probability beta, and delayed
    neutrons pick group i with probability beta_i/beta.  Populations stay
    integral and never go negative; the mean matches the drift exactly but
    the fission block of the covariance differs from the diffusion matrix
    (Bernoulli-thinned yields), so it is not used for the covariance checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError, StepSizeError
from .kinetics import KineticsParameters, State, as_state_vector, event_rates, event_vectors
from .solvers import NoiseSource

__all__ = [
    "McConfig",
    "McTrajectory",
    "mc_step_fixed",
    "mc_step_exact",
    "mc_trajectory",
    "sample_increments",
    "run_mc_paths",
    "McPathsResult",
]

MODE_FIXED = "fixed"
MODE_EXACT = "exact"
YIELD_FRACTIONAL = "fractional"
YIELD_INTEGER = "integer"

_BUFFER = 4096  # per-path pregenerated uniforms (even: exact mode consumes pairs)


@dataclass(frozen=True)
class McConfig:
    """Monte Carlo stepping configuration.

    ``dt=None`` picks safety / (total rate at the initial state) for the
    fixed mode.  ``record_times`` defaults to the horizon only.
    """

    mode: str = MODE_FIXED
    yield_model: str = YIELD_FRACTIONAL
    dt: float = None
    safety: float = 0.1
    record_times: tuple = None

    def __post_init__(self):
        if self.mode not in (MODE_FIXED, MODE_EXACT):
            raise ParameterError(f"unknown MC mode {self.mode!r}")
        if self.yield_model not in (YIELD_FRACTIONAL, YIELD_INTEGER):
            raise ParameterError(f"unknown yield model {self.yield_model!r}")
        if self.dt is not None and not self.dt > 0:
            raise ParameterError("fixed-step dt must be positive")
        if not 0 < self.safety <= 1:
            raise ParameterError("safety factor must be in (0, 1]")
        if self.record_times is not None:
            rt = tuple(float(t) for t in self.record_times)
            if any(t < 0 for t in rt) or list(rt) != sorted(rt):
                raise ParameterError("record_times must be sorted and nonnegative")
            object.__setattr__(self, "record_times", rt)


@dataclass
class McTrajectory:
    """States sampled at the record times plus event counts by kind."""

    times: np.ndarray
    states: np.ndarray
    event_counts: dict
    seed: object = None
    diagnostics: dict = field(default_factory=dict)


def _event_count_dict(p: KineticsParameters, counts: np.ndarray) -> dict:
    out = {"capture": int(counts[0]), "fission": int(counts[1])}
    for i in range(p.m):
        out[f"transformation_{i + 1}"] = int(counts[2 + i])
    out["source"] = int(counts[-1])
    return out


def _clipped_rates(p: KineticsParameters, vec: np.ndarray, t: float) -> np.ndarray:
    """Event rates with populations below zero contributing zero rate, so a
    fractional-mode path that has transiently undershot keeps evolving."""
    return event_rates(p, np.clip(vec, 0.0, None), t)


def mc_step_fixed(p: KineticsParameters, x, t: float, dt: float, noise: NoiseSource) -> State:
    """One Bernoulli step of size dt from a nonnegative state.

    Raises StepSizeError (carrying the admissible bound) when the event
    probabilities sum past one.
    """
    vec = as_state_vector(x, p)
    rates = event_rates(p, vec, t)  # validates nonnegativity
    probs = rates * dt
    total = probs.sum()
    if total > 1.0:
        raise StepSizeError(
            f"sum of event probabilities {total:.4g} exceeds 1 at t={t:g}; "
            f"need dt <= {1.0 / rates.sum():.4g}",
            max_allowed_dt=1.0 / rates.sum(),
        )
    u = float(noise.uniforms())
    idx = int(np.searchsorted(np.cumsum(probs), u, side="right"))
    if idx >= probs.size:
        return State.from_vector(vec)
    delta = event_vectors(p)[idx].delta
    return State.from_vector(vec + delta)


def mc_step_exact(p: KineticsParameters, x, t: float, noise: NoiseSource):
    """One exact jump: returns (waiting time, new state).

    The waiting time is exponential in the total rate; the event is selected
    with probability rate/total.  A zero total rate signals an absorbing
    state: the waiting time is +inf and the state is returned unchanged.
    """
    vec = as_state_vector(x, p)
    rates = event_rates(p, vec, t)
    total = rates.sum()
    if total <= 0.0:
        return math.inf, State.from_vector(vec)
    u_wait = float(noise.uniforms())
    u_sel = float(noise.uniforms())
    tau = -math.log1p(-u_wait) / total
    idx = int(np.searchsorted(np.cumsum(rates), u_sel * total, side="right"))
    idx = min(idx, rates.size - 1)
    delta = event_vectors(p)[idx].delta
    return tau, State.from_vector(vec + delta)


def _integer_fission_delta(p: KineticsParameters, noise: NoiseSource) -> np.ndarray:
    """Sample an integer fission yield and its prompt/delayed split."""
    base = math.floor(p.nu)
    frac = p.nu - base
    total_yield = base + (float(noise.uniforms()) < frac)
    delayed = int(noise.generator.binomial(total_yield, p.beta_total)) if total_yield else 0
    delta = np.zeros(p.dim)
    delta[0] = total_yield - 1 - delayed
    if delayed:
        groups = noise.generator.multinomial(delayed, p.beta / p.beta_total)
        delta[1:] = groups
    return delta


def mc_trajectory(
    p: KineticsParameters,
    x0,
    horizon: float,
    cfg: McConfig,
    noise: NoiseSource,
) -> McTrajectory:
    """Simulate one sample path on [0, horizon], sampling at the record grid.

    Fixed mode validates the probability bound every step and halves the
    step permanently on violation (each halving is logged in the
    diagnostics).  Exact mode fast-forwards absorbed paths to the horizon.
    """
    vec = as_state_vector(x0, p)
    if np.any(vec < 0):
        raise ParameterError("Monte Carlo requires a nonnegative initial state")
    if cfg.yield_model == YIELD_INTEGER:
        vec = np.rint(vec)
    if horizon < 0:
        raise ParameterError("horizon must be nonnegative")
    record = np.asarray(
        cfg.record_times if cfg.record_times is not None else [horizon], dtype=float
    )
    if record.size and record[-1] > horizon * (1 + 1e-12):
        raise ParameterError("record times must lie within the horizon")

    events = event_vectors(p)
    counts = np.zeros(p.m + 3, dtype=np.int64)
    states = np.empty((record.size, p.dim))
    halvings = []
    negative_captures = 0

    t = 0.0
    rec_pos = 0
    # record times at or before the start see the initial state
    while rec_pos < record.size and record[rec_pos] <= 0.0:
        states[rec_pos] = vec
        rec_pos += 1

    if cfg.mode == MODE_FIXED:
        rates0 = _clipped_rates(p, vec, 0.0)
        total0 = rates0.sum()
        if cfg.dt is not None:
            dt = cfg.dt
        elif total0 > 0:
            dt = cfg.safety / total0
        else:
            dt = horizon if horizon > 0 else 1.0
        while t < horizon - 1e-15 * max(1.0, horizon):
            t_target = record[rec_pos] if rec_pos < record.size else horizon
            step = min(dt, t_target - t)
            rates = _clipped_rates(p, vec, t)
            while rates.sum() * step > 1.0:
                dt *= 0.5
                step = min(dt, t_target - t)
                halvings.append((t, dt))
            probs = rates * step
            u = float(noise.uniforms())
            idx = int(np.searchsorted(np.cumsum(probs), u, side="right"))
            if idx < probs.size:
                if idx == 1 and cfg.yield_model == YIELD_INTEGER:
                    vec = vec + _integer_fission_delta(p, noise)
                else:
                    if idx == 0 and vec[0] < 1.0:
                        negative_captures += 1
                    vec = vec + events[idx].delta
                counts[idx] += 1
            t += step
            while rec_pos < record.size and record[rec_pos] <= t * (1 + 1e-12):
                states[rec_pos] = vec
                rec_pos += 1
    else:
        while t < horizon:
            rates = _clipped_rates(p, vec, t)
            total = rates.sum()
            if total <= 0.0:
                break  # absorbing: fast-forward to horizon
            u_wait = float(noise.uniforms())
            u_sel = float(noise.uniforms())
            t_new = t - math.log1p(-u_wait) / total
            if t_new > horizon:
                t = horizon
                break
            while rec_pos < record.size and record[rec_pos] < t_new:
                states[rec_pos] = vec
                rec_pos += 1
            idx = int(np.searchsorted(np.cumsum(rates), u_sel * total, side="right"))
            idx = min(idx, rates.size - 1)
            if idx == 1 and cfg.yield_model == YIELD_INTEGER:
                vec = vec + _integer_fission_delta(p, noise)
            else:
                if idx == 0 and vec[0] < 1.0:
                    negative_captures += 1
                vec = vec + events[idx].delta
            counts[idx] += 1
            t = t_new

    while rec_pos < record.size:
        states[rec_pos] = vec
        rec_pos += 1

    return McTrajectory(
        times=record,
        states=states,
        event_counts=_event_count_dict(p, counts),
        seed=noise.seed,
        diagnostics={
            "halvings": halvings,
            "negative_captures": negative_captures,
            "mode": cfg.mode,
            "yield_model": cfg.yield_model,
        },
    )


# ---------------------------------------------------------------------------
# vectorized one-step sampler (moment checks)
# ---------------------------------------------------------------------------

def sample_increments(
    p: KineticsParameters,
    x,
    t: float,
    dt: float,
    n_samples: int,
    rng: np.random.Generator,
    yield_model: str = YIELD_FRACTIONAL,
) -> np.ndarray:
    """Draw n_samples independent fixed-step increments from one state.

    Returns an (n_samples, m+1) array of state changes, suitable for checking
    the one-step mean against drift*dt and (in fractional mode) the one-step
    second moment against diffusion*dt.
    """
    vec = as_state_vector(x, p)
    rates = event_rates(p, vec, t)
    probs = rates * dt
    if probs.sum() > 1.0:
        raise StepSizeError(
            f"sum of event probabilities {probs.sum():.4g} exceeds 1",
            max_allowed_dt=1.0 / rates.sum(),
        )
    cum = np.cumsum(probs)
    u = rng.random(n_samples)
    idx = np.searchsorted(cum, u, side="right")  # == m+3 means no event
    deltas = np.vstack([ev.delta for ev in event_vectors(p)] + [np.zeros(p.dim)])
    out = deltas[np.minimum(idx, p.m + 3)].copy()
    if yield_model == YIELD_INTEGER:
        fis = np.flatnonzero(idx == 1)
        if fis.size:
            base = math.floor(p.nu)
            frac = p.nu - base
            yields = base + (rng.random(fis.size) < frac)
            delayed = rng.binomial(yields, p.beta_total)
            pvals = p.beta / p.beta_total
            groups = np.zeros((fis.size, p.m), dtype=np.int64)
            nonzero = np.flatnonzero(delayed)
            if nonzero.size:
                groups[nonzero] = np.array(
                    [rng.multinomial(k, pvals) for k in delayed[nonzero]]
                )
            out[fis, 0] = yields - 1 - delayed
            out[fis, 1:] = groups
    elif yield_model != YIELD_FRACTIONAL:
        raise ParameterError(f"unknown yield model {yield_model!r}")
    return out


# ---------------------------------------------------------------------------
# batched path engine (fractional yields) used by the ensemble layer
# ---------------------------------------------------------------------------

@dataclass
class McPathsResult:
    states: np.ndarray        # (n_paths, n_record, dim)
    record_times: np.ndarray
    failed: np.ndarray        # all-False today; kept for interface symmetry
    event_counts: np.ndarray  # (n_paths, m+3)
    halvings: list
    negative_captures: np.ndarray


def _rate_constants(p: KineticsParameters, t: float):
    rho = float(p.reactivity(t))
    k_cap = (-rho + 1.0 - p.alpha) / p.gen_time
    k_fis = 1.0 / (p.nu * p.gen_time)
    if k_cap < 0:
        raise ParameterError(f"negative capture rate coefficient at rho={rho:g}")
    return k_cap, k_fis, float(p.source(t))


def run_mc_paths(
    p: KineticsParameters,
    x0,
    horizon: float,
    cfg: McConfig,
    generators,
    record_times,
) -> McPathsResult:
    """Advance a batch of fractional-yield MC paths, one Generator per path.

    Fixed mode shares one clock across the batch: all paths take the same
    step sizes, and the step is halved globally when any path's total
    probability would pass the bound.  Each path consumes exactly one uniform
    per step (fixed) or two per jump (exact), matching
    :func:`mc_trajectory` draw for draw.
    """
    if cfg.yield_model != YIELD_FRACTIONAL:
        raise ParameterError("the batched engine supports fractional yields only")
    vec0 = as_state_vector(x0, p)
    if np.any(vec0 < 0):
        raise ParameterError("Monte Carlo requires a nonnegative initial state")
    n_paths = len(generators)
    d = p.dim
    m = p.m
    lam = p.lam
    record = np.asarray(record_times, dtype=float)
    X = np.tile(vec0, (n_paths, 1))
    counts = np.zeros((n_paths, m + 3), dtype=np.int64)
    out = np.empty((n_paths, record.size, d))
    neg_cap = np.zeros(n_paths, dtype=np.int64)
    halvings = []

    bt = p.beta_total
    fis_dn = -1.0 + (1.0 - bt) * p.nu
    fis_dc = p.beta * p.nu

    def apply_events(idx, sel_paths):
        """idx: event index per selected path (m+3 = none)."""
        Xs = X[sel_paths]
        cap = idx == 0
        neg_cap[sel_paths[cap]] += Xs[cap, 0] < 1.0
        Xs[cap, 0] -= 1.0
        fis = idx == 1
        Xs[fis, 0] += fis_dn
        Xs[fis, 1:] += fis_dc
        for g in range(m):
            tr = idx == 2 + g
            Xs[tr, 0] += 1.0
            Xs[tr, 1 + g] -= 1.0
        src = idx == m + 2
        Xs[src, 0] += 1.0
        X[sel_paths] = Xs
        fired = idx < m + 3
        counts[sel_paths[fired], idx[fired]] += 1

    if cfg.mode == MODE_FIXED:
        k_cap, k_fis, q = _rate_constants(p, 0.0)
        total0 = (k_cap + k_fis) * vec0[0] + float((lam * vec0[1:]).sum()) + q
        if cfg.dt is not None:
            dt = cfg.dt
        elif total0 > 0:
            dt = cfg.safety / total0
        else:
            dt = horizon if horizon > 0 else 1.0

        buf = np.empty((n_paths, _BUFFER))
        for i, g in enumerate(generators):
            buf[i] = g.random(_BUFFER)
        cursor = 0

        t = 0.0
        rec_pos = 0
        while rec_pos < record.size and record[rec_pos] <= 0.0:
            out[:, rec_pos] = X
            rec_pos += 1
        all_paths = np.arange(n_paths)
        while t < horizon - 1e-15 * max(1.0, horizon):
            k_cap, k_fis, q = _rate_constants(p, t)
            t_target = record[rec_pos] if rec_pos < record.size else horizon
            step = min(dt, t_target - t)
            n = np.clip(X[:, 0], 0.0, None)
            lc = np.clip(X[:, 1:], 0.0, None) * lam
            totals = (k_cap + k_fis) * n + lc.sum(axis=1) + q
            while totals.max() * step > 1.0:
                dt *= 0.5
                step = min(dt, t_target - t)
                halvings.append((t, dt))
            cum = np.empty((n_paths, m + 3))
            cum[:, 0] = k_cap * n * step
            cum[:, 1] = cum[:, 0] + k_fis * n * step
            np.cumsum(lc * step, axis=1, out=cum[:, 2 : 2 + m])
            cum[:, 2 : 2 + m] += cum[:, 1][:, None]
            cum[:, m + 2] = cum[:, m + 1] + q * step
            if cursor >= _BUFFER:
                for i, g in enumerate(generators):
                    buf[i] = g.random(_BUFFER)
                cursor = 0
            u = buf[:, cursor]
            cursor += 1
            idx = (u[:, None] >= cum).sum(axis=1)
            apply_events(idx, all_paths)
            t += step
            while rec_pos < record.size and record[rec_pos] <= t * (1 + 1e-12):
                out[:, rec_pos] = X
                rec_pos += 1
        while rec_pos < record.size:
            out[:, rec_pos] = X
            rec_pos += 1
    else:
        # exact jumps: per-path clocks, per-path pregenerated uniform pairs
        from .kinetics import ConstantReactivity, ConstantSource

        autonomous = isinstance(p.reactivity, ConstantReactivity) and isinstance(
            p.source, ConstantSource
        )
        if autonomous:
            k_cap0, k_fis0, q0 = _rate_constants(p, 0.0)
        t_path = np.zeros(n_paths)
        active = np.ones(n_paths, dtype=bool)
        rec_ptr = np.zeros(n_paths, dtype=np.int64)
        buf = np.empty((n_paths, _BUFFER))
        cursor = np.zeros(n_paths, dtype=np.int64)
        for i, g in enumerate(generators):
            buf[i] = g.random(_BUFFER)
        while active.any():
            ia = np.flatnonzero(active)
            refill = ia[cursor[ia] + 1 >= _BUFFER]
            for i in refill:
                buf[i] = generators[i].random(_BUFFER)
                cursor[i] = 0
            if autonomous:
                k_caps = k_cap0
                k_fiss = k_fis0
                qs = q0
            else:
                k_caps = np.empty(ia.size)
                k_fiss = np.empty(ia.size)
                qs = np.empty(ia.size)
                for j, i in enumerate(ia):  # rho frozen at each jump's start time
                    k_caps[j], k_fiss[j], qs[j] = _rate_constants(p, t_path[i])
            n = np.clip(X[ia, 0], 0.0, None)
            lc = np.clip(X[ia, 1:], 0.0, None) * lam
            rates = np.empty((ia.size, m + 3))
            rates[:, 0] = k_caps * n
            rates[:, 1] = k_fiss * n
            rates[:, 2 : 2 + m] = lc
            rates[:, m + 2] = qs
            totals = rates.sum(axis=1)
            dead = totals <= 0.0
            u_wait = buf[ia, cursor[ia]]
            u_sel = buf[ia, cursor[ia] + 1]
            cursor[ia] += 2
            with np.errstate(divide="ignore"):
                tau = np.where(dead, np.inf, -np.log1p(-u_wait) / np.where(dead, 1.0, totals))
            t_new = t_path[ia] + tau
            done = (t_new > horizon) | dead
            # record times strictly before this jump land on the pre-jump state
            landing = np.where(done, horizon * (1 + 1e-12), t_new)
            new_ptr = np.searchsorted(record, landing, side="left")
            moved = np.flatnonzero(new_ptr > rec_ptr[ia])
            for j in moved:
                i = ia[j]
                out[i, rec_ptr[i] : new_ptr[j]] = X[i]
                rec_ptr[i] = new_ptr[j]
            fire = ~done
            f = ia[fire]
            if f.size:
                cum = np.cumsum(rates[fire], axis=1)
                idx = (u_sel[fire][:, None] * totals[fire][:, None] >= cum).sum(axis=1)
                idx = np.minimum(idx, m + 2)
                apply_events(idx, f)
                t_path[f] = t_new[fire]
            stopped = ia[done]
            active[stopped] = False
        # absorbed / finished paths: fill any remaining record slots
        for i in range(n_paths):
            if rec_ptr[i] < record.size:
                out[i, rec_ptr[i] :] = X[i]

    return McPathsResult(
        states=out,
        record_times=record,
        failed=np.zeros(n_paths, dtype=bool),
        event_counts=counts,
        halvings=halvings,
        negative_captures=neg_cap,
    )
