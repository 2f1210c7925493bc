"""Binary quadratic formulation of SNR-maximizing selection and its spin / QUBO forms.

Selection vector layout: ``b = [x_0 .. x_{n*n_t-1}, y_0 .. y_{n*n_r-1}]``, i.e.
transmitter one-hot blocks first, then receiver blocks.  The spin problem
prepends an auxiliary spin at index 0.

Sign conventions (validated exhaustively in the test-suite):

* spin form: maximize ``s0ᵀ J_λ s0`` with ``J_λ = (1-λ)Fn(J) - λFn(J0)``;
* QUBO form: ``W = -(1-λ)Θ + λΞ`` is an energy, *minimized* (``sense="min"``).
  Maximizing it would select the worst infeasible vectors.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import Configuration, FullChannel, SystemDims

MAX_BRUTE_VARS = 24


@dataclass(frozen=True)
class QuadraticObjective:
    dims: SystemDims
    q_matrix: np.ndarray


@dataclass(frozen=True)
class ConstraintForm:
    dims: SystemDims
    r_matrix: np.ndarray
    linear: np.ndarray

    def penalty(self, b) -> np.ndarray:
        """``bᵀRb - 2·1ᵀb``; accepts a single vector or a stack (rows)."""
        b = np.asarray(b, dtype=float)
        return np.einsum("...i,ij,...j->...", b, self.r_matrix, b) + b @ self.linear


@dataclass(frozen=True)
class IsingProblem:
    dims: SystemDims
    j_matrix: np.ndarray
    lam: float

    @property
    def size(self) -> int:
        return self.j_matrix.shape[0]

    def energy(self, s0) -> np.ndarray:
        s0 = np.asarray(s0, dtype=float)
        return np.einsum("...i,ij,...j->...", s0, self.j_matrix, s0)


@dataclass(frozen=True)
class QuboProblem:
    dims: SystemDims | None
    w_matrix: np.ndarray
    lam: float = float("nan")
    sense: str = "min"

    @property
    def size(self) -> int:
        return self.w_matrix.shape[0]

    def value(self, b) -> np.ndarray:
        b = np.asarray(b, dtype=float)
        return np.einsum("...i,ij,...j->...", b, self.w_matrix, b)


def eta(m: np.ndarray) -> float:
    """Max-norm of a matrix; 1 for the all-zero matrix."""
    v = float(np.max(np.abs(m))) if m.size else 0.0
    return v if v > 0 else 1.0


def zero_diag(m: np.ndarray) -> np.ndarray:
    out = np.array(m, dtype=float, copy=True)
    np.fill_diagonal(out, 0.0)
    return out


def fn_normalize(m: np.ndarray) -> np.ndarray:
    z = zero_diag(m)
    return z / eta(z)


def border(core: np.ndarray) -> np.ndarray:
    """Embed ``core`` with a leading zero row/column for the auxiliary spin."""
    k = core.shape[0]
    out = np.zeros((k + 1, k + 1))
    out[1:, 1:] = core
    return out


def linear_to_border(q: np.ndarray) -> np.ndarray:
    """Symmetric bordered matrix C with ``s0ᵀ C s0 = s_aux · qᵀs``."""
    k = q.shape[0]
    out = np.zeros((k + 1, k + 1))
    out[0, 1:] = 0.5 * q
    out[1:, 0] = 0.5 * q
    return out


def build_objective(ch: FullChannel) -> QuadraticObjective:
    d = ch.dims
    t = (np.abs(ch.g) ** 2).T  # (n*n_t, n*n_r)
    q = np.zeros((d.total_bits, d.total_bits))
    q[: d.tx_cols, d.tx_cols :] = 0.5 * t
    q[d.tx_cols :, : d.tx_cols] = 0.5 * t.T
    return QuadraticObjective(d, q)


def build_constraint(dims: SystemDims) -> ConstraintForm:
    r = np.kron(np.eye(dims.n_antennas), np.ones((dims.n, dims.n)))
    return ConstraintForm(dims, r, -2.0 * np.ones(dims.total_bits))


def spin_linear_term(m: np.ndarray, linear: np.ndarray) -> np.ndarray:
    """Linear spin coefficients of ``bᵀMb + linearᵀb`` under ``b = (s+1)/2``."""
    return 0.5 * (m @ np.ones(m.shape[0])) + 0.5 * linear


def objective_spin_matrix(obj: QuadraticObjective) -> np.ndarray:
    """J with ``s0ᵀJs0 = bᵀQb + const`` for ``s_aux = +1``."""
    q = obj.q_matrix
    return 0.25 * border(q) + linear_to_border(spin_linear_term(q, np.zeros(q.shape[0])))


def constraint_spin_matrix(con: ConstraintForm) -> np.ndarray:
    """J0 with ``s0ᵀJ0s0 = bᵀRb - 2·1ᵀb + const`` for ``s_aux = +1``."""
    r = con.r_matrix
    return 0.25 * border(r) + linear_to_border(spin_linear_term(r, con.linear))


def _check_lambda(lam: float) -> float:
    lam = float(lam)
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"penalty weight must lie in [0, 1], got {lam}")
    return lam


def to_ising(obj: QuadraticObjective, con: ConstraintForm, lam: float) -> IsingProblem:
    lam = _check_lambda(lam)
    j_obj = fn_normalize(objective_spin_matrix(obj))
    j_con = fn_normalize(constraint_spin_matrix(con))
    return IsingProblem(obj.dims, (1.0 - lam) * j_obj - lam * j_con, lam)


def build_qubo(obj: QuadraticObjective, con: ConstraintForm, lam: float) -> QuboProblem:
    lam = _check_lambda(lam)
    q = obj.q_matrix
    xi = con.r_matrix - 2.0 * np.eye(q.shape[0])
    w = -(1.0 - lam) * q / eta(q) + lam * xi / eta(xi)
    return QuboProblem(obj.dims, w, lam, "min")


def ising_for_channel(ch: FullChannel, lam: float) -> IsingProblem:
    return to_ising(build_objective(ch), build_constraint(ch.dims), lam)


def qubo_for_channel(ch: FullChannel, lam: float) -> QuboProblem:
    return build_qubo(build_objective(ch), build_constraint(ch.dims), lam)


# --- encoding / decoding -----------------------------------------------------


def encode_config(cfg: Configuration, dims: SystemDims) -> np.ndarray:
    cfg.validate(dims)
    b = np.zeros(dims.total_bits, dtype=np.int8)
    b[cfg.cols(dims.n)] = 1
    b[dims.tx_cols + cfg.rows(dims.n)] = 1
    return b


def encode_spins(cfg: Configuration, dims: SystemDims, aux: int = 1) -> np.ndarray:
    b = encode_config(cfg, dims).astype(np.int8)
    tail = (2 * b - 1) * aux
    return np.concatenate([[aux], tail]).astype(np.int8)


def decode_bits(b, dims: SystemDims) -> Configuration | None:
    """Configuration of a one-hot feasible selection vector, else ``None``."""
    b = np.asarray(b)
    if b.shape != (dims.total_bits,):
        raise ValueError(f"selection vector must have length {dims.total_bits}")
    blocks = b.reshape(dims.n_antennas, dims.n)
    if not np.all(blocks.sum(axis=1) == 1):
        return None
    states = np.argmax(blocks, axis=1)
    return Configuration(states[: dims.n_t], states[dims.n_t :])


def spins_to_bits(s0) -> np.ndarray:
    """Undo the global flip (multiply by the auxiliary spin) and map to {0, 1}."""
    s0 = np.asarray(s0)
    tail = s0[..., 1:] * s0[..., :1]
    return ((tail + 1) // 2).astype(np.int8)


def decode_spins(s0, dims: SystemDims) -> Configuration | None:
    s0 = np.asarray(s0)
    if s0.shape != (dims.total_bits + 1,):
        raise ValueError(f"spin vector must have length {dims.total_bits + 1}, got {s0.shape}")
    if not np.all(np.abs(s0) == 1):
        raise ValueError("spin entries must be ±1")
    return decode_bits(spins_to_bits(s0), dims)


def feasible_mask(bits: np.ndarray, dims: SystemDims) -> np.ndarray:
    """Row-wise one-hot check for a stack of selection vectors."""
    blocks = bits.reshape(bits.shape[0], dims.n_antennas, dims.n)
    return np.all(blocks.sum(axis=2) == 1, axis=1)


# --- exhaustive oracles ------------------------------------------------------


def _enumerate(n_vars: int, start: int, stop: int) -> np.ndarray:
    idx = np.arange(start, stop, dtype=np.int64)
    shifts = np.arange(n_vars - 1, -1, -1, dtype=np.int64)
    return ((idx[:, None] >> shifts[None, :]) & 1).astype(np.int8)


def _brute(m: np.ndarray, spins: bool, maximize: bool, chunk: int = 1 << 16):
    n_vars = m.shape[0]
    if n_vars > MAX_BRUTE_VARS:
        raise ValueError(f"brute force refused: {n_vars} variables exceeds cap {MAX_BRUTE_VARS}")
    best_val, best_vec = None, None
    for start in range(0, 1 << n_vars, chunk):
        v = _enumerate(n_vars, start, min(start + chunk, 1 << n_vars)).astype(float)
        if spins:
            v = 2.0 * v - 1.0
        vals = np.einsum("ki,ij,kj->k", v, m, v)
        i = int(np.argmax(vals)) if maximize else int(np.argmin(vals))
        better = best_val is None or (vals[i] > best_val if maximize else vals[i] < best_val)
        if better:
            best_val, best_vec = float(vals[i]), v[i].astype(np.int8)
    return best_vec, best_val


def brute_force_spins(problem) -> tuple[np.ndarray, float]:
    """Exact maximizer of ``sᵀJs`` over ±1 vectors; lexicographically smallest on ties."""
    j = problem.j_matrix if isinstance(problem, IsingProblem) else np.asarray(problem, dtype=float)
    return _brute(j, spins=True, maximize=True)


def brute_force_qubo(problem, sense: str | None = None) -> tuple[np.ndarray, float]:
    """Exact optimum of ``bᵀWb`` over {0,1} vectors.

    ``sense`` defaults to the problem's own sense for a :class:`QuboProblem`
    and to ``"max"`` for a bare matrix.
    """
    if isinstance(problem, QuboProblem):
        w, default = problem.w_matrix, problem.sense
    else:
        w, default = np.asarray(problem, dtype=float), "max"
    sense = sense or default
    if sense not in ("min", "max"):
        raise ValueError(f"sense must be 'min' or 'max', got {sense!r}")
    return _brute(w, spins=False, maximize=sense == "max")


# --- coordinate-list export ---------------------------------------------------


def serialize_qubo(problem) -> str:
    """Coordinate-list text of an upper-triangular folded QUBO.

    Header ``qubo <size> <nnz>``, then ``i j value`` for ``i <= j`` in (i, j)
    order, where off-diagonal values fold both symmetric halves.  Values are
    written with ``repr`` so they round-trip exactly.
    """
    w = problem.w_matrix if isinstance(problem, QuboProblem) else np.asarray(problem, dtype=float)
    if not np.all(np.isfinite(w)):
        raise ValueError("QUBO matrix has non-finite entries")
    size = w.shape[0]
    lines = []
    for i in range(size):
        for j in range(i, size):
            v = float(w[i, i]) if i == j else float(w[i, j] + w[j, i])
            if v != 0.0:
                lines.append(f"{i} {j} {v!r}")
    return "\n".join([f"qubo {size} {len(lines)}", *lines]) + "\n"


def parse_qubo(text: str) -> np.ndarray:
    """Symmetric matrix from coordinate-list text (off-diagonals split evenly)."""
    rows = [ln.split() for ln in text.strip().splitlines() if ln.strip()]
    if not rows or rows[0][0] != "qubo" or len(rows[0]) != 3:
        raise ValueError("missing 'qubo <size> <nnz>' header")
    size, nnz = int(rows[0][1]), int(rows[0][2])
    if len(rows) - 1 != nnz:
        raise ValueError(f"header announces {nnz} entries, found {len(rows) - 1}")
    w = np.zeros((size, size))
    for parts in rows[1:]:
        i, j, v = int(parts[0]), int(parts[1]), float(parts[2])
        if not 0 <= i <= j < size:
            raise ValueError(f"bad coordinate ({i}, {j})")
        if i == j:
            w[i, i] = v
        else:
            w[i, j] = w[j, i] = v / 2.0
    return w
