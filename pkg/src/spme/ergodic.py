"""Ensemble Monte Carlo: invariant-measure estimates and mixing rates.

P_t F(x) = E F(X_t(x)) is estimated by independent trajectories; the
mixing gap max_x |P_t F(x) - mu(F)| over a finite set of initial data is
fitted against the predicted power law t^(-1/(r-1)) (or exponential rate
sigma - delta in the strictly monotone regime).  The invariant-measure
moment of |X|^(r+1) is estimated from post-burn-in samples.
"""

from dataclasses import dataclass, field

import numpy as np

from . import noise as noise_mod
from .bounds import fit_exp_rate, fit_power_law
from .solver import SimConfig, initial_coeffs, run_batch


@dataclass(frozen=True)
class Functional:
    """Lipschitz test functional on H with a declared constant."""

    name: str
    lipschitz: float

    def __call__(self, coeffs, operator):
        raise NotImplementedError


@dataclass(frozen=True)
class HNormFunctional(Functional):
    name: str = "h_norm"
    lipschitz: float = 1.0

    def __call__(self, coeffs, operator):
        return operator.h_norm(coeffs)


@dataclass(frozen=True)
class TanhHNormFunctional(Functional):
    name: str = "tanh_h_norm"
    lipschitz: float = 1.0

    def __call__(self, coeffs, operator):
        return np.tanh(operator.h_norm(coeffs))


@dataclass(frozen=True)
class ClippedCoordFunctional(Functional):
    """First H-coordinate x -> min(<x,e1>_H * sqrt(lambda_1), M).

    The scaling makes the map 1-Lipschitz in the H-norm; the clip keeps
    the constant honest on all of H.
    """

    name: str = "coord_1"
    lipschitz: float = 1.0
    clip: float = 1e6

    def __call__(self, coeffs, operator):
        lam1 = operator.eigenvalues[0]
        return np.minimum(coeffs[..., 0] / np.sqrt(lam1), self.clip)


BUILTIN_FUNCTIONALS = {
    "h_norm": HNormFunctional(),
    "tanh_h_norm": TanhHNormFunctional(),
    "coord_1": ClippedCoordFunctional(),
}


@dataclass(frozen=True)
class EnsembleConfig:
    base: SimConfig
    n_traj: int
    burn_in: float = 1.0
    sample_times: tuple = ()
    initial_set: tuple = (("zero", 1.0), ("e1", 1.0))
    functionals: tuple = ("tanh_h_norm",)

    def __post_init__(self):
        if self.n_traj < 2:
            raise ValueError("need at least 2 trajectories")
        st = np.asarray(self.sample_times, dtype=float)
        if len(st) == 0 or np.any(np.diff(st) <= 0):
            raise ValueError("sample_times must be increasing and nonempty")
        for name in self.functionals:
            if name not in BUILTIN_FUNCTIONALS:
                raise ValueError(f"unknown functional {name!r}")


@dataclass
class EnsembleSamples:
    """Raw sample tensors from one ensemble run."""

    sample_times: np.ndarray
    # func_values[initial_label] has shape (n_traj, n_times, n_functionals)
    func_values: dict
    # lrp1[initial_label] has shape (n_traj, n_times): |X|^(r+1) mass
    lrp1: dict
    h_sq: dict
    final_coeffs: dict
    excluded: dict
    functionals: tuple


@dataclass
class ErgodicReport:
    sample_times: np.ndarray
    mu_estimates: dict  # functional -> (mean, std_err)
    mixing_series: dict  # (functional, initial) -> gap series
    mixing_gap: dict  # functional -> max-over-initials gap series
    ptf: dict  # (functional, initial) -> (mean series, SE series)
    fit: object
    fit_kind: str
    moment_estimate: tuple
    uniqueness_diagnostic: dict  # functional -> (max pair gap, combined SE)


def _initial_label(preset, scale):
    return preset if scale == 1.0 else f"{scale:g}*{preset}"


def run_ensemble(config, base_stream_offset=0):
    """Simulate n_traj trajectories per initial preset.

    Stream ids are allocated per trajectory (shared across initial
    presets, which realizes the shared-noise coupling between ensembles).
    Blown-up trajectories are excluded and counted; more than 1%
    exclusions fail the run.
    """
    base = config.base
    op = base.operator
    funcs = [BUILTIN_FUNCTIONALS[name] for name in config.functionals]
    dt = base.dt
    sample_times = np.asarray(config.sample_times, dtype=float)
    snap = tuple(float(t) for t in sample_times)

    func_values, lrp1, h_sq, finals, excluded = {}, {}, {}, {}, {}
    for preset, scale in config.initial_set:
        label = _initial_label(preset, scale)
        a0 = np.tile(
            initial_coeffs(base, preset=preset, scale=scale), (config.n_traj, 1)
        )
        streams = None
        if not base.noise.is_zero:
            streams = [
                noise_mod.NoiseStream(base.noise, base_stream_offset + j)
                for j in range(config.n_traj)
            ]
        cfg = SimConfig(
            operator=op,
            model=base.model,
            noise=base.noise,
            dt=dt,
            t_end=base.t_end,
            scheme=base.scheme,
            record_every=base.record_every,
            initial=preset,
            initial_scale=scale,
            gate_override=base.gate_override,
            snapshot_times=snap,
        )
        rec = run_batch(cfg, streams, a0)
        n_excl = int(np.sum(rec.blown))
        if n_excl / config.n_traj > 0.01:
            raise RuntimeError(
                f"{n_excl}/{config.n_traj} trajectories blew up for initial {label}"
            )
        live = ~rec.blown
        snaps = rec.snapshots[:, live, :]  # (S, B_live, n)
        fv = np.empty((snaps.shape[1], len(sample_times), len(funcs)))
        for fi, fn in enumerate(funcs):
            fv[:, :, fi] = fn(snaps, op).T
        func_values[label] = fv
        # sample-time observables from the snapshots themselves
        vals = op.synth(snaps)
        lrp1[label] = op.lp_power(vals, base.model.r + 1.0).T
        h_sq[label] = (op.h_norm(snaps) ** 2).T
        finals[label] = rec.final_coeffs[live]
        excluded[label] = n_excl

    return EnsembleSamples(
        sample_times=sample_times,
        func_values=func_values,
        lrp1=lrp1,
        h_sq=h_sq,
        final_coeffs=finals,
        excluded=excluded,
        functionals=tuple(config.functionals),
    )


def _mean_se(x, axis=0):
    n = x.shape[axis]
    return np.mean(x, axis=axis), np.std(x, axis=axis, ddof=1) / np.sqrt(n)


def estimate_invariant(samples, burn_in):
    """Per-functional invariant-measure estimates from post-burn-in samples.

    Each trajectory contributes its post-burn-in time average; the
    trajectory averages are iid, giving an honest standard error.
    """
    mask = samples.sample_times > burn_in
    if not np.any(mask):
        raise ValueError("no sample times beyond burn_in")
    out = {}
    for fi, name in enumerate(samples.functionals):
        per_traj = []
        for label, fv in samples.func_values.items():
            per_traj.append(np.mean(fv[:, mask, fi], axis=1))
        pooled = np.concatenate(per_traj)
        mean, se = _mean_se(pooled)
        out[name] = (float(mean), float(se))
    return out


def moment_check(samples, burn_in, doubled_samples=None):
    """Estimate the invariant moment of |X|^(r+1).

    Returns (estimate, standard error, stability flag); the flag needs a
    second run at doubled mode count and is None without one.
    """
    mask = samples.sample_times > burn_in
    if not np.any(mask):
        raise ValueError("no sample times beyond burn_in")

    def estimate(s):
        per_traj = np.concatenate(
            [np.mean(m[:, mask], axis=1) for m in s.lrp1.values()]
        )
        return _mean_se(per_traj)

    mean, se = estimate(samples)
    flag = None
    if doubled_samples is not None:
        mean2, _ = estimate(doubled_samples)
        denom = max(abs(mean), 1e-300)
        flag = bool(abs(mean2 - mean) / denom < 0.10)
    return float(mean), float(se), flag


def mixing_experiment(config, base_stream_offset=0, exponential=False,
                      fit_window=None, reference_rate=None):
    """Estimate the mixing gap toward the invariant measure and fit its rate.

    The reference mu(F) is taken from the most mixed ensemble (the one
    started at zero if present, else the first) at the largest sample
    time.
    """
    if len(config.initial_set) < 2:
        raise ValueError("need at least two initial presets")
    samples = run_ensemble(config, base_stream_offset)
    times = samples.sample_times
    labels = list(samples.func_values)
    ref_label = next((l for l in labels if l.endswith("zero")), labels[0])

    ptf, mixing_series, mixing_gap, mu_est, uniq = {}, {}, {}, {}, {}
    for fi, name in enumerate(samples.functionals):
        mu, mu_se = _mean_se(samples.func_values[ref_label][:, -1, fi])
        mu_est[name] = (float(mu), float(mu_se))
        gap_stack = []
        ptf_finals = []
        for label in labels:
            mean, se = _mean_se(samples.func_values[label][:, :, fi])
            ptf[(name, label)] = (mean, se)
            mixing_series[(name, label)] = np.abs(mean - mu)
            gap_stack.append(np.abs(mean - mu))
            ptf_finals.append((mean[-1], se[-1]))
        mixing_gap[name] = np.max(gap_stack, axis=0)
        worst, comb = 0.0, 0.0
        for i in range(len(ptf_finals)):
            for j in range(i + 1, len(ptf_finals)):
                gap = abs(ptf_finals[i][0] - ptf_finals[j][0])
                if gap > worst:
                    worst = gap
                    comb = np.hypot(ptf_finals[i][1], ptf_finals[j][1])
        uniq[name] = (float(worst), float(comb))

    gap = mixing_gap[samples.functionals[0]]
    if fit_window is None:
        # default to the later half of the sample times
        fit_window = (float(times[len(times) // 2]), float(times[-1]))
    if exponential:
        fit = fit_exp_rate(times, np.maximum(gap, 1e-300), fit_window)
        fit_kind = "exponential"
    else:
        fit = fit_power_law(times, np.maximum(gap, 1e-300), fit_window)
        fit_kind = "power"

    mom = moment_check(samples, burn_in=config.burn_in)
    return ErgodicReport(
        sample_times=times,
        mu_estimates=mu_est,
        mixing_series=mixing_series,
        mixing_gap=mixing_gap,
        ptf=ptf,
        fit=fit,
        fit_kind=fit_kind,
        moment_estimate=mom,
        uniqueness_diagnostic=uniq,
    ), samples
