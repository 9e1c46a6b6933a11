"""The stochastic decision rule: a fully-connected ReLU/softmax network.

Maps the nine-component state to a probability over the candidate
irrigation amounts. Parameters live in one flat float64 vector so the
whole rule can be updated with a single axpy per learning step and
checkpointed as raw bytes; the layout is weights row-major (n_out,
n_in) then bias per layer, first hidden layer biasless unless
configured otherwise.

Inputs are fed raw by default. Optional per-feature affine
normalization ((x - offset) / scale) is available for small desk-scale
networks where raw magnitudes saturate the ReLU stack; it is part of
the run configuration, not of the checkpoint.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from . import _kernels
from .core import DomainError, NumericError, StateVector
from .soil import DEFAULT_SOIL_LAYERS

CHECKPOINT_MAGIC = b"IRRLCKPT"
CHECKPOINT_VERSION = 1

# Feature centers/half-ranges for optional input normalization: stage,
# LAI, per-layer ESW (half of each monitored layer's capacity in the
# default soil), cumulative irrigation and rain.
DEFAULT_INPUT_OFFSET = np.array(
    [45.0, 3.5] + [0.5 * l.pawc_mm for l in DEFAULT_SOIL_LAYERS[:5]] + [300.0, 300.0]
)
DEFAULT_INPUT_SCALE = np.array(
    [40.0, 3.5] + [0.5 * l.pawc_mm for l in DEFAULT_SOIL_LAYERS[:5]] + [300.0, 300.0]
)


class CheckpointError(Exception):
    """Checkpoint file unreadable, corrupt, or incompatible."""


@dataclass(frozen=True)
class Architecture:
    """Network shape; the default is five hidden layers 400-600-800-600-400."""

    input_dim: int = 9
    hidden_dims: tuple[int, ...] = (400, 600, 800, 600, 400)
    output_dim: int = 5
    bias_on_first_hidden: bool = False

    def __post_init__(self):
        dims = (self.input_dim, *self.hidden_dims, self.output_dim)
        if any(int(d) != d or d < 1 for d in dims):
            raise DomainError(f"all layer dims must be integers >= 1, got {dims}")

    @property
    def dims(self) -> tuple[int, ...]:
        return (self.input_dim, *self.hidden_dims, self.output_dim)

    def dims_array(self) -> np.ndarray:
        return np.array(self.dims, dtype=np.int64)


def param_count(arch: Architecture) -> int:
    """Number of parameters: per-layer weights plus biases where present."""
    dims = arch.dims
    n_affine = len(dims) - 1
    total = 0
    for layer in range(n_affine):
        total += dims[layer] * dims[layer + 1]
        if layer > 0 or n_affine == 1 or arch.bias_on_first_hidden:
            total += dims[layer + 1]
    return total


@dataclass
class PolicyParameters:
    """Flat parameter vector plus its architecture descriptor.

    input_offset/input_scale, when set, define the affine input
    normalization applied before the first layer.
    """

    theta: np.ndarray
    arch: Architecture
    input_offset: Optional[np.ndarray] = None
    input_scale: Optional[np.ndarray] = None

    def __post_init__(self):
        self.theta = np.ascontiguousarray(self.theta, dtype=np.float64)
        expected = param_count(self.arch)
        if self.theta.shape != (expected,):
            raise DomainError(
                f"theta has {self.theta.shape} entries, architecture needs ({expected},)"
            )
        if not np.isfinite(self.theta).all():
            raise DomainError("theta contains non-finite entries")
        for name in ("input_offset", "input_scale"):
            v = getattr(self, name)
            if v is not None:
                v = np.asarray(v, dtype=np.float64)
                if v.shape != (self.arch.input_dim,):
                    raise DomainError(f"{name} must have shape ({self.arch.input_dim},)")
                object.__setattr__(self, name, v)
        if self.input_scale is not None and np.any(self.input_scale <= 0):
            raise DomainError("input_scale entries must be > 0")

    def copy(self) -> "PolicyParameters":
        return PolicyParameters(
            theta=self.theta.copy(),
            arch=self.arch,
            input_offset=self.input_offset,
            input_scale=self.input_scale,
        )


def init_parameters(
    arch: Architecture,
    rng: np.random.Generator,
    scale: float = 1.0,
    input_offset: Optional[np.ndarray] = None,
    input_scale: Optional[np.ndarray] = None,
) -> PolicyParameters:
    """Draw every entry i.i.d. Normal(0, scale^2)."""
    if scale <= 0:
        raise DomainError(f"init scale must be > 0, got {scale}")
    theta = rng.standard_normal(param_count(arch)) * scale
    return PolicyParameters(
        theta=theta, arch=arch, input_offset=input_offset, input_scale=input_scale
    )


def _as_input(params: PolicyParameters, state: Union[StateVector, Sequence[float]]) -> np.ndarray:
    x = state.to_array() if isinstance(state, StateVector) else np.asarray(state, dtype=np.float64)
    if x.shape != (params.arch.input_dim,):
        raise DomainError(
            f"state has shape {x.shape}, network expects ({params.arch.input_dim},)"
        )
    if params.input_offset is not None:
        x = (x - params.input_offset) / params.input_scale
    return np.ascontiguousarray(x)


def forward(params: PolicyParameters, state: Union[StateVector, Sequence[float]]) -> np.ndarray:
    """Action probabilities for a state; each in (0,1), summing to 1."""
    x = _as_input(params, state)
    probs, status = _kernels.forward_probs(
        params.theta, params.arch.dims_array(), int(params.arch.bias_on_first_hidden), x
    )
    if status >= 0:
        raise NumericError(f"non-finite activation in layer {status} of forward pass")
    return probs


def sample_action(probs: Sequence[float], rng: np.random.Generator) -> int:
    """Inverse-CDF draw over the ordered action set."""
    p = np.asarray(probs, dtype=np.float64)
    if p.ndim != 1 or p.size == 0:
        raise DomainError("probs must be a non-empty vector")
    if np.any(p < 0):
        raise DomainError("probs must be non-negative")
    total = float(p.sum())
    if abs(total - 1.0) > 1e-6:
        raise DomainError(f"probs sum to {total!r}, expected 1 within 1e-6")
    u = rng.random()
    acc = 0.0
    last_positive = 0
    for i in range(p.size):
        if p[i] > 0.0:
            last_positive = i
        acc += p[i]
        if u < acc:
            return i
    return last_positive


def grad_log_prob(
    params: PolicyParameters,
    state: Union[StateVector, Sequence[float]],
    action_index: int,
) -> np.ndarray:
    """Exact gradient of log pi(action | state) w.r.t. every theta entry."""
    if not 0 <= action_index < params.arch.output_dim:
        raise DomainError(f"action index {action_index} out of range")
    x = _as_input(params, state)
    grad, _probs, status = _kernels.grad_log_prob_kernel(
        params.theta,
        params.arch.dims_array(),
        int(params.arch.bias_on_first_hidden),
        x,
        int(action_index),
    )
    if status >= 0:
        raise NumericError(f"non-finite activation in layer {status} of forward pass")
    return grad


def apply_update(
    params: PolicyParameters, alpha: float, g_return: float, grad: np.ndarray
) -> PolicyParameters:
    """theta += alpha * g_return * grad, in place. Returns the same object."""
    if grad.shape != params.theta.shape:
        raise DomainError(
            f"grad shape {grad.shape} does not match theta shape {params.theta.shape}"
        )
    ok = _kernels.update_params(params.theta, float(alpha) * float(g_return), grad)
    if not ok:
        raise NumericError(
            f"parameter update produced non-finite entries (alpha={alpha}, G={g_return})"
        )
    return params


def save_checkpoint(params: PolicyParameters, path) -> None:
    """Write magic, version, architecture, and the raw little-endian vector."""
    arch = params.arch
    dims = arch.dims
    header = CHECKPOINT_MAGIC
    header += struct.pack("<I", CHECKPOINT_VERSION)
    header += struct.pack("<B", 1 if arch.bias_on_first_hidden else 0)
    header += struct.pack("<I", len(dims))
    header += struct.pack(f"<{len(dims)}I", *dims)
    header += struct.pack("<Q", params.theta.size)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(params.theta.astype("<f8", copy=False).tobytes())


def checkpoint_header_size(arch: Architecture) -> int:
    return len(CHECKPOINT_MAGIC) + 4 + 1 + 4 + 4 * len(arch.dims) + 8


def load_checkpoint(path) -> PolicyParameters:
    """Read a checkpoint; round-trips save_checkpoint bit-exactly."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < len(CHECKPOINT_MAGIC) or blob[: len(CHECKPOINT_MAGIC)] != CHECKPOINT_MAGIC:
        raise CheckpointError(f"{path}: not a checkpoint (bad magic)")
    off = len(CHECKPOINT_MAGIC)
    try:
        (version,) = struct.unpack_from("<I", blob, off)
        off += 4
        if version != CHECKPOINT_VERSION:
            raise CheckpointError(
                f"{path}: unsupported checkpoint version {version}"
            )
        (bias_flag,) = struct.unpack_from("<B", blob, off)
        off += 1
        (n_dims,) = struct.unpack_from("<I", blob, off)
        off += 4
        if n_dims < 2:
            raise CheckpointError(f"{path}: corrupt dims count {n_dims}")
        dims = struct.unpack_from(f"<{n_dims}I", blob, off)
        off += 4 * n_dims
        (n_params,) = struct.unpack_from("<Q", blob, off)
        off += 8
    except struct.error as exc:
        raise CheckpointError(f"{path}: truncated header") from exc
    arch = Architecture(
        input_dim=dims[0],
        hidden_dims=tuple(dims[1:-1]),
        output_dim=dims[-1],
        bias_on_first_hidden=bool(bias_flag),
    )
    if n_params != param_count(arch):
        raise CheckpointError(
            f"{path}: header claims {n_params} parameters, architecture needs {param_count(arch)}"
        )
    payload = blob[off:]
    if len(payload) != 8 * n_params:
        raise CheckpointError(
            f"{path}: truncated payload ({len(payload)} bytes, expected {8 * n_params})"
        )
    theta = np.frombuffer(payload, dtype="<f8").astype(np.float64)
    return PolicyParameters(theta=theta, arch=arch)
