"""Synthetic grouped additive-noise data generation.

A random group-level DAG is drawn from an Erdős–Rényi scheme, each non-root
group receives a nonlinear mechanism sampled from randomly weighted sums of
Gaussian-process draws, and additive noise comes from multivariate
log-normal distributions.  Signal columns are rescaled so that each output
coordinate attains a fixed signal-to-noise ratio before the final
standardization of the dataset.

All randomness is derived from the single seed in :class:`GanmSpec`;
regenerating with the same spec is bit-reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from ._seeds import derive_seed
from .data import GroupSpec, GroupedDataset, standardize_matrix
from .graphs import GroupDag

__all__ = [
    "GenerationError",
    "GanmSpec",
    "MechanismRecord",
    "NoiseRecord",
    "GroundTruth",
    "sample_er_dag",
    "sample_gp_mechanism",
    "lognormal_noise_parameters",
    "sample_lognormal_noise",
    "clip_to_correlation",
    "generate",
]

# Seed-path tags separating the generator's independent random streams.
_PATH_DAG = 0
_PATH_MECHANISM = 1
_PATH_NOISE = 2

# Diagonal jitter ladder for Gram-matrix factorization.
_JITTERS = (1e-6, 1e-4)

# Floor for eigenvalues when repairing an indefinite correlation matrix.
_EIGENVALUE_FLOOR = 1e-3


class GenerationError(RuntimeError):
    """Raised when a synthetic draw cannot be completed."""


@dataclass(frozen=True)
class GanmSpec:
    """Parameters of one synthetic grouped additive-noise dataset.

    ``edge_probability`` is either a probability in [0, 1] (0 yields an
    empty graph whose nodes are pure noise) or the string
    ``"proportional"``, which resolves to ``min(1, 2/p)`` so the expected
    parent count stays fixed as the graph grows.
    """

    p: int
    group_dims: tuple[int, ...]
    edge_probability: Union[float, str]
    n: int
    seed: int
    snr: float = 2.0
    gp_summands: int = 2
    gp_lengthscale: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "group_dims", tuple(int(d) for d in self.group_dims))
        if self.p < 1:
            raise ValueError("p must be at least 1")
        if len(self.group_dims) != self.p:
            raise ValueError("group_dims must have one entry per group")
        if any(d < 1 for d in self.group_dims):
            raise ValueError("group dimensions must be positive")
        if self.n < 2:
            raise ValueError("n must be at least 2")
        if not (self.snr > 0.0):
            raise ValueError("snr must be positive")
        if self.gp_summands < 1:
            raise ValueError("gp_summands must be at least 1")
        if not (self.gp_lengthscale > 0.0):
            raise ValueError("gp_lengthscale must be positive")
        prob = self.edge_probability
        if isinstance(prob, str):
            if prob != "proportional":
                raise ValueError(
                    "edge_probability must be a probability or 'proportional'"
                )
        elif not (0.0 <= float(prob) <= 1.0):
            raise ValueError("edge_probability must lie in [0, 1]")

    def resolved_edge_probability(self) -> float:
        if self.edge_probability == "proportional":
            return min(1.0, 2.0 / self.p)
        return float(self.edge_probability)

    def group_spec(self) -> GroupSpec:
        return GroupSpec(
            tuple((f"g{i}", d) for i, d in enumerate(self.group_dims))
        )

    def to_dict(self) -> dict:
        return {
            "p": self.p,
            "group_dims": list(self.group_dims),
            "edge_probability": self.edge_probability,
            "n": self.n,
            "seed": self.seed,
            "snr": self.snr,
            "gp_summands": self.gp_summands,
            "gp_lengthscale": self.gp_lengthscale,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "GanmSpec":
        return cls(
            p=int(obj["p"]),
            group_dims=tuple(int(d) for d in obj["group_dims"]),
            edge_probability=(
                obj["edge_probability"]
                if isinstance(obj["edge_probability"], str)
                else float(obj["edge_probability"])
            ),
            n=int(obj["n"]),
            seed=int(obj["seed"]),
            snr=float(obj["snr"]),
            gp_summands=int(obj.get("gp_summands", 2)),
            gp_lengthscale=float(obj.get("gp_lengthscale", 1.0)),
        )


@dataclass(frozen=True)
class MechanismRecord:
    """How one non-root group's signal was drawn."""

    node: int
    parents: tuple[int, ...]
    seed: int
    summands: int
    lengthscale: float
    weights: tuple[tuple[float, ...], ...]  # (summand, output coordinate)
    signal_scale: tuple[float, ...]  # per output coordinate
    achieved_snr: tuple[float, ...]  # per output coordinate

    def to_dict(self) -> dict:
        return {
            "node": self.node,
            "parents": list(self.parents),
            "seed": self.seed,
            "summands": self.summands,
            "lengthscale": self.lengthscale,
            "weights": [list(row) for row in self.weights],
            "signal_scale": list(self.signal_scale),
            "achieved_snr": list(self.achieved_snr),
        }


@dataclass(frozen=True)
class NoiseRecord:
    """Parameters of one group's log-normal noise draw."""

    node: int
    seed: int
    mean: tuple[float, ...]
    covariance: tuple[tuple[float, ...], ...]

    def to_dict(self) -> dict:
        return {
            "node": self.node,
            "seed": self.seed,
            "mean": list(self.mean),
            "covariance": [list(row) for row in self.covariance],
        }


@dataclass(frozen=True)
class GroundTruth:
    """Everything needed to score a discovery run on generated data.

    ``signal_values`` and ``noise_values`` hold the realized
    pre-standardization draws per group — the signal after its
    signal-to-noise rescaling, the noise as added — so their variance
    ratio per coordinate is the achieved ratio (``signal_values[g]`` is
    ``None`` for root groups).
    """

    dag: GroupDag
    order: tuple[int, ...]
    group_names: tuple[str, ...]
    mechanisms: tuple[Optional[MechanismRecord], ...]
    noises: tuple[NoiseRecord, ...]
    signal_values: tuple[Optional[np.ndarray], ...] = field(repr=False)
    noise_values: tuple[np.ndarray, ...] = field(repr=False)

    def __post_init__(self):
        for g in range(self.dag.p):
            has_parents = bool(self.dag.parents(g))
            has_mechanism = self.mechanisms[g] is not None
            if has_parents != has_mechanism:
                raise ValueError(
                    f"group {g} must have a mechanism exactly when it has parents"
                )
        for arr in self.signal_values + self.noise_values:
            if arr is not None:
                arr.setflags(write=False)

    def provenance(self) -> dict:
        """All sampled parameters, seeds, and achieved ratios (no arrays)."""
        return {
            "group_names": list(self.group_names),
            "generation_order": list(self.order),
            "edges": sorted(map(list, self.dag.edges)),
            "mechanisms": [
                m.to_dict() for m in self.mechanisms if m is not None
            ],
            "noises": [rec.to_dict() for rec in self.noises],
        }


def sample_er_dag(p: int, edge_probability: float, seed: int) -> GroupDag:
    """Random DAG: permutation order plus independent forward edges."""
    if p < 1:
        raise ValueError("p must be at least 1")
    if not (0.0 <= float(edge_probability) <= 1.0):
        raise ValueError("edge_probability must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    order = rng.permutation(p)
    edges = set()
    for i in range(p):
        for j in range(i + 1, p):
            if rng.random() < edge_probability:
                edges.add((int(order[i]), int(order[j])))
    return GroupDag(p, frozenset(edges))


def _gram_cholesky(Z: np.ndarray, lengthscale: float) -> np.ndarray:
    sq = np.sum(Z * Z, axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (Z @ Z.T)
    np.clip(d2, 0.0, None, out=d2)
    K = np.exp(-d2 / (2.0 * lengthscale * lengthscale))
    for jitter in _JITTERS:
        try:
            return np.linalg.cholesky(K + jitter * np.eye(K.shape[0]))
        except np.linalg.LinAlgError:
            continue
    raise GenerationError(
        "Gaussian-process kernel factorization failed even with "
        f"diagonal jitter {_JITTERS[-1]:g}"
    )


def _weighted_gp_values(
    inputs: np.ndarray,
    q: int,
    rng: np.random.Generator,
    n_outputs: int,
    lengthscale: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Draw weighted GP sums at ``inputs``; returns (values, weights).

    Function values are drawn on the unique input rows and broadcast back,
    so duplicate inputs always receive identical outputs.  The kernel acts
    on standardized input columns, making the unit lengthscale meaningful
    regardless of the inputs' raw scale.
    """
    unique_rows, inverse = np.unique(inputs, axis=0, return_inverse=True)
    L = _gram_cholesky(standardize_matrix(unique_rows), lengthscale)
    m = unique_rows.shape[0]
    magnitudes = rng.uniform(0.5, 2.0, size=(q, n_outputs))
    signs = rng.choice((-1.0, 1.0), size=(q, n_outputs))
    weights = magnitudes * signs
    draws = L @ rng.standard_normal((m, q * n_outputs))
    draws = draws.reshape(m, q, n_outputs)
    values = np.einsum("mqk,qk->mk", draws, weights)
    return values[inverse], weights


def sample_gp_mechanism(
    inputs: np.ndarray,
    q: int,
    seed: int,
    *,
    n_outputs: int = 1,
    lengthscale: float = 1.0,
) -> np.ndarray:
    """Values of randomly weighted Gaussian-process sums at ``inputs``.

    Each of the ``n_outputs`` coordinates is an independent sum of ``q``
    zero-mean GP draws (RBF kernel, unit lengthscale on standardized
    inputs) with weights uniform on [0.5, 2] carrying a random sign.
    Returns an ``(n, n_outputs)`` array.
    """
    inputs = np.asarray(inputs, dtype=float)
    if inputs.ndim != 2:
        raise ValueError("inputs must be a 2-d array")
    if inputs.shape[0] < 2:
        raise ValueError("need at least 2 input rows")
    if q < 1:
        raise ValueError("q must be at least 1")
    if n_outputs < 1:
        raise ValueError("n_outputs must be at least 1")
    if not (lengthscale > 0.0):
        raise ValueError("lengthscale must be positive")
    rng = np.random.default_rng(seed)
    values, _ = _weighted_gp_values(inputs, q, rng, n_outputs, lengthscale)
    return values


def clip_to_correlation(matrix: np.ndarray) -> np.ndarray:
    """Nearest usable correlation matrix: clip eigenvalues, renormalize.

    Eigenvalues are floored at a small positive constant and the result is
    rescaled to a unit diagonal, so the output is symmetric positive
    definite with ones on the diagonal.
    """
    matrix = np.asarray(matrix, dtype=float)
    eigenvalues, vectors = np.linalg.eigh(matrix)
    clipped = np.maximum(eigenvalues, _EIGENVALUE_FLOOR)
    repaired = (vectors * clipped) @ vectors.T
    scale = 1.0 / np.sqrt(np.diag(repaired))
    repaired = repaired * scale[:, None] * scale[None, :]
    return (repaired + repaired.T) / 2.0


def _draw_noise_parameters(
    rng: np.random.Generator, d: int
) -> tuple[np.ndarray, np.ndarray]:
    mean = rng.uniform(-0.8, 0.8, size=d)
    raw = np.eye(d)
    for i in range(d):
        for j in range(i + 1, d):
            raw[i, j] = raw[j, i] = rng.uniform(-0.8, 0.8)
    return mean, clip_to_correlation(raw)


def lognormal_noise_parameters(d: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Mean vector and repaired correlation matrix used by the noise draw."""
    if d < 1:
        raise ValueError("d must be at least 1")
    return _draw_noise_parameters(np.random.default_rng(seed), d)


def sample_lognormal_noise(n: int, d: int, seed: int) -> np.ndarray:
    """``(n, d)`` multivariate log-normal noise sample.

    Log-scale means and correlations are uniform on [-0.8, 0.8]; the raw
    correlation matrix is repaired to positive definite before use, and
    the Gaussian draw is exponentiated component-wise.
    """
    if d < 1:
        raise ValueError("d must be at least 1")
    if n < 1:
        raise ValueError("n must be at least 1")
    rng = np.random.default_rng(seed)
    mean, correlation = _draw_noise_parameters(rng, d)
    L = np.linalg.cholesky(correlation)
    gaussian = mean + rng.standard_normal((n, d)) @ L.T
    return np.exp(gaussian)


def _population_variance(column: np.ndarray) -> float:
    return float(np.var(column))


def generate(spec: GanmSpec) -> tuple[GroupedDataset, GroundTruth]:
    """Sample one dataset and its ground truth from ``spec``.

    Groups are visited in a topological order of the sampled DAG; each
    non-root group's signal is a GP mechanism of its parents' realized
    values, rescaled per coordinate to ``spec.snr`` against the realized
    noise variance.  All columns are standardized at the end.
    """
    dag = sample_er_dag(
        spec.p, spec.resolved_edge_probability(), derive_seed(spec.seed, _PATH_DAG)
    )
    order = dag.topological_order()
    assert order is not None  # GroupDag construction guarantees acyclicity
    group_spec = spec.group_spec()

    values: list[Optional[np.ndarray]] = [None] * spec.p
    signal_values: list[Optional[np.ndarray]] = [None] * spec.p
    noise_values: list[Optional[np.ndarray]] = [None] * spec.p
    mechanisms: list[Optional[MechanismRecord]] = [None] * spec.p
    noises: list[Optional[NoiseRecord]] = [None] * spec.p

    for g in order.sequence:
        d_g = spec.group_dims[g]
        noise_seed = derive_seed(spec.seed, _PATH_NOISE, g)
        noise_rng = np.random.default_rng(noise_seed)
        mean, correlation = _draw_noise_parameters(noise_rng, d_g)
        L = np.linalg.cholesky(correlation)
        noise = np.exp(mean + noise_rng.standard_normal((spec.n, d_g)) @ L.T)
        noise_values[g] = noise
        noises[g] = NoiseRecord(
            node=g,
            seed=noise_seed,
            mean=tuple(map(float, mean)),
            covariance=tuple(tuple(map(float, row)) for row in correlation),
        )

        parents = sorted(dag.parents(g))
        if not parents:
            values[g] = noise
            continue

        inputs = np.concatenate([values[parent] for parent in parents], axis=1)
        mechanism_seed = derive_seed(spec.seed, _PATH_MECHANISM, g)
        raw_signal, weights = _weighted_gp_values(
            inputs,
            spec.gp_summands,
            np.random.default_rng(mechanism_seed),
            d_g,
            spec.gp_lengthscale,
        )
        scales = np.empty(d_g)
        ratios = np.empty(d_g)
        for k in range(d_g):
            signal_var = _population_variance(raw_signal[:, k])
            noise_var = _population_variance(noise[:, k])
            if signal_var <= 0.0:
                raise GenerationError(
                    f"degenerate constant mechanism draw for group {g}, "
                    f"coordinate {k}"
                )
            scales[k] = np.sqrt(spec.snr * noise_var / signal_var)
            ratios[k] = (scales[k] ** 2) * signal_var / noise_var
        signal = raw_signal * scales
        signal_values[g] = signal
        values[g] = signal + noise
        mechanisms[g] = MechanismRecord(
            node=g,
            parents=tuple(parents),
            seed=mechanism_seed,
            summands=spec.gp_summands,
            lengthscale=spec.gp_lengthscale,
            weights=tuple(tuple(map(float, row)) for row in weights),
            signal_scale=tuple(map(float, scales)),
            achieved_snr=tuple(map(float, ratios)),
        )

    raw = np.concatenate([values[g] for g in range(spec.p)], axis=1)
    dataset = GroupedDataset(standardize_matrix(raw), group_spec, standardized=True)
    truth = GroundTruth(
        dag=dag,
        order=tuple(order.sequence),
        group_names=tuple(group_spec.names),
        mechanisms=tuple(mechanisms),
        noises=tuple(noises),
        signal_values=tuple(signal_values),
        noise_values=tuple(noise_values),
    )
    return dataset, truth
