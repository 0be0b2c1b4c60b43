"""Alice's eight-outcome POVM for the King's problem with spin observables
n_k . sigma along three arbitrary unit directions.

Every element has the form

    E_K = C_K |v_K><v_K|,    |v_K> = |Psi0> + sum_k (S^K M^-1)_k |n_k>

where M is the Gram matrix of the directions and S^K one of eight sign
vectors. The coefficients C_K form a one-parameter family C_K(r); the set is
a valid POVM iff |n1 +- n2 +- n3| >= 1 for every sign choice and r lies in
the interval that keeps all C_K nonnegative.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Optional

import numpy as np

from .core import (
    IDENTITY4,
    TOL_OPERATOR,
    TOL_STATE,
    projector,
    unit_vector,
)
from .errors import (
    DegenerateTriple,
    FormMismatch,
    Infeasible,
    InvariantViolation,
    ROutOfRange,
)
from .states import bob_post_state, raw_vector_ket, singlet, vector_ket

LABELS = "ABCDEFGH"

SIGNS = np.array(
    [
        [+1, +1, +1],  # A
        [+1, -1, -1],  # B
        [-1, +1, -1],  # C
        [-1, -1, +1],  # D
        [-1, -1, -1],  # E
        [-1, +1, +1],  # F
        [+1, -1, +1],  # G
        [+1, +1, -1],  # H
    ],
    dtype=int,
)
SIGN_VECTORS = {label: SIGNS[i] for i, label in enumerate(LABELS)}

# +r for A..D, -r for E..H
R_SIGN = np.array([1, 1, 1, 1, -1, -1, -1, -1], dtype=float)

# signs on (n2, n3) with n1 positive: ++, +-, -+, --
SIGN_PATTERNS = np.array([[1, 1, 1], [1, 1, -1], [1, -1, 1], [1, -1, -1]], dtype=int)
PATTERN_NAMES = ("++", "+-", "-+", "--")

INDEPENDENCE_TOL = 1e-9
PARALLEL_TOL = 1e-9
FORM_TOL = 1e-13
COEFF_TOL = 1e-12

DEGENERACY_CLASSES = ("independent", "dependent_nonparallel", "contains_parallel_pair")

# rows of the probability table: (k, beta) in Table order
TABLE_ROWS = tuple((k, beta) for k in (1, 2, 3) for beta in (1, -1))


@dataclass(frozen=True)
class VectorTriple:
    """Bob's three measurement directions, stored as rows of a 3x3 array.

    Each input must be unit length within 1e-9; it is then renormalized so
    Gram diagonals are exactly one.
    """

    vectors: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.vectors, dtype=float)
        if arr.shape != (3, 3):
            raise ValueError(f"expected three 3-vectors, got shape {arr.shape}")
        arr = np.stack([unit_vector(v) for v in arr])
        arr.setflags(write=False)
        object.__setattr__(self, "vectors", arr)

    @classmethod
    def of(cls, n1, n2, n3) -> "VectorTriple":
        return cls(np.array([n1, n2, n3], dtype=float))

    @property
    def n1(self):
        return self.vectors[0]

    @property
    def n2(self):
        return self.vectors[1]

    @property
    def n3(self):
        return self.vectors[2]

    def __iter__(self):
        return iter(self.vectors)

    def __eq__(self, other):
        return isinstance(other, VectorTriple) and np.array_equal(self.vectors, other.vectors)

    def __hash__(self):
        return hash(self.vectors.tobytes())


def as_triple(t) -> VectorTriple:
    return t if isinstance(t, VectorTriple) else VectorTriple(t)


def gram(t) -> np.ndarray:
    """Gram matrix M_ij = n_i . n_j, exactly symmetric with unit diagonal."""
    v = as_triple(t).vectors
    m = v @ v.T
    m = 0.5 * (m + m.T)
    np.fill_diagonal(m, 1.0)
    return m


def reciprocal_basis(t) -> np.ndarray:
    """Rows m_l with m_l . n_k = delta_lk, i.e. sum_k (M^-1)_lk n_k.

    Taken from the inverse of the direction matrix itself rather than of the
    Gram matrix, whose condition number is the square of it.
    """
    return np.linalg.inv(as_triple(t).vectors).T


def dual_kets(t) -> np.ndarray:
    """Rows |d_j> = sum_k (V^-1)_jk |n_k>, where V has rows n_k.

    Since M^-1 = V^-T V^-1, sum_kl (M^-1)_kl |n_k><n_l| = sum_j |d_j><d_j|;
    the right-hand side avoids inverting M and stays accurate for badly
    conditioned triples.
    """
    t = as_triple(t)
    nk = np.stack([vector_ket(n) for n in t.vectors])
    return np.linalg.inv(t.vectors) @ nk


def constraint_system(m) -> tuple[np.ndarray, np.ndarray]:
    """Seven linear equations on (C_A, ..., C_H) from sum_K E_K = 1.

    Rows: normalization, the three off-diagonal Gram entries (12, 13, 23),
    and the three vanishing first moments sum_K C_K S^K_l.
    """
    s = SIGNS.astype(float)
    rows = [
        np.ones(8),
        s[:, 0] * s[:, 1],
        s[:, 0] * s[:, 2],
        s[:, 1] * s[:, 2],
        s[:, 0],
        s[:, 1],
        s[:, 2],
    ]
    rhs = [1.0, m[0, 1], m[0, 2], m[1, 2], 0.0, 0.0, 0.0]
    return np.array(rows), np.array(rhs)


# ---------------------------------------------------------------- coefficients


@dataclass(frozen=True)
class CoefficientSet:
    r: float
    c: np.ndarray

    def __getitem__(self, label: str) -> float:
        return float(self.c[LABELS.index(label)])

    def as_dict(self) -> dict[str, float]:
        return {label: float(v) for label, v in zip(LABELS, self.c)}

    @property
    def nonnegative(self) -> bool:
        return bool(np.all(self.c >= -COEFF_TOL))

    def negative_labels(self) -> list[str]:
        return [label for label, v in zip(LABELS, self.c) if v < -COEFF_TOL]

    def residuals(self, m) -> dict[str, float]:
        """Max violation of the normalization, first-moment and second-moment
        constraints for Gram matrix ``m``."""
        s = SIGNS.astype(float)
        first = s.T @ self.c
        second = np.einsum("k,ki,kj->ij", self.c, s, s)
        return {
            "normalization": abs(float(self.c.sum()) - 1.0),
            "first_moment": float(np.max(np.abs(first))),
            "second_moment": float(np.max(np.abs(second - m))),
        }


def _pair_products(signs) -> np.ndarray:
    return np.stack([signs[:, 0] * signs[:, 1], signs[:, 0] * signs[:, 2], signs[:, 1] * signs[:, 2]], axis=1)


def solve_coefficients(t, r: float = 0.0) -> CoefficientSet:
    """The one-parameter solution C_K(r), evaluated in two closed forms.

    Dot-product form: C_K = (1 +- r + sum_{k<l} S_k S_l M_kl) / 8.
    Norm form:        C_K = (|sum_k S_k n_k|^2 +- 2r - 1) / 16.

    The forms are algebraically identical; FormMismatch is raised if they
    differ by more than 1e-13. Nonnegativity is not enforced here.
    """
    t = as_triple(t)
    r = float(r)
    m = gram(t)
    dots = np.array([m[0, 1], m[0, 2], m[1, 2]])
    dot_form = (1.0 + R_SIGN * r + _pair_products(SIGNS) @ dots) / 8.0
    sq = np.sum((SIGNS @ t.vectors) ** 2, axis=1)
    norm_form = (sq + 2.0 * R_SIGN * r - 1.0) / 16.0
    gap = float(np.max(np.abs(dot_form - norm_form)))
    if gap > FORM_TOL:
        raise FormMismatch(f"closed forms disagree by {gap:.3e}")
    return CoefficientSet(r=r, c=dot_form)


# ---------------------------------------------------------------- degeneracy


@dataclass(frozen=True)
class NoSolutionCertificate:
    """Evidence that a linearly dependent, non-parallel triple admits no POVM.

    ``ray`` is the unit ket |n1 x n2>; ``complement_rank`` is the dimension
    spanned by every vector an element a_K may be supported on (1 here, so
    sum_K E_K has rank <= 1 < 4).
    """

    ray: np.ndarray
    complement_rank: int
    ray_alignment: float
    min_sign_gap: float
    forced_sum_rank: int

    @property
    def certified(self) -> bool:
        return (
            self.complement_rank <= 1
            and self.forced_sum_rank <= 1
            and abs(self.ray_alignment - 1.0) < 1e-10
        )


@dataclass(frozen=True)
class DegeneracyReport:
    kind: str
    determinant: float
    coefficients: Optional[tuple[float, float]] = None
    pair: Optional[tuple[int, int]] = None
    certificate: Optional[NoSolutionCertificate] = None


def _numerical_rank(a, tol: float = 1e-10) -> int:
    sv = np.linalg.svd(np.atleast_2d(a), compute_uv=False)
    return int(np.sum(sv > tol))


def _annihilated_complement(t: VectorTriple, signs) -> np.ndarray:
    """Orthonormal basis of the kets orthogonal to every |n_k> - S_k |Psi0>.

    a_K = |Phi><w| kills the states ruled out by outcome K exactly when w
    lies in this subspace.
    """
    psi0 = singlet()
    cols = np.stack([raw_vector_ket(n) - s * psi0 for n, s in zip(t.vectors, signs)], axis=1)
    u, sv, _ = np.linalg.svd(cols, full_matrices=True)
    rank = int(np.sum(sv > 1e-10))
    return u[:, rank:]


def _no_solution_certificate(t: VectorTriple, x: float, y: float) -> NoSolutionCertificate:
    cross = np.cross(t.n1, t.n2)
    ray = raw_vector_ket(cross / np.linalg.norm(cross))
    complements = [_annihilated_complement(t, s) for s in SIGNS]
    union = np.concatenate(complements, axis=1)
    alignment = min(
        float(np.linalg.norm(comp.conj().T @ ray)) if comp.shape[1] else 0.0 for comp in complements
    )
    # any nonnegative weights: use unit weights on every available direction
    forced = sum(projector(comp[:, j]) for comp in complements for j in range(comp.shape[1]))
    gaps = np.abs(SIGNS[:, 2] - x * SIGNS[:, 0] - y * SIGNS[:, 1])
    return NoSolutionCertificate(
        ray=ray,
        complement_rank=_numerical_rank(union),
        ray_alignment=alignment,
        min_sign_gap=float(np.min(gaps)),
        forced_sum_rank=_numerical_rank(forced),
    )


def classify_degenerate(t) -> DegeneracyReport:
    """Classify a triple as independent, dependent but non-parallel, or
    containing a (anti)parallel pair.

    For dependent non-parallel triples the report carries (x, y) with
    n3 = x n1 + y n2 and a certificate that no POVM of the required form
    can sum to the identity.
    """
    t = as_triple(t)
    v = t.vectors
    det = float(np.linalg.det(v))
    if abs(det) > INDEPENDENCE_TOL:
        return DegeneracyReport("independent", det)
    for i, j in combinations(range(3), 2):
        if np.linalg.norm(np.cross(v[i], v[j])) < PARALLEL_TOL:
            return DegeneracyReport("contains_parallel_pair", det, pair=(i + 1, j + 1))
    basis = np.stack([t.n1, t.n2], axis=1)
    (x, y), *_ = np.linalg.lstsq(basis, t.n3, rcond=None)
    x, y = float(x), float(y)
    return DegeneracyReport(
        "dependent_nonparallel",
        det,
        coefficients=(x, y),
        certificate=_no_solution_certificate(t, x, y),
    )


# ---------------------------------------------------------------- feasibility


@dataclass(frozen=True)
class FeasibilityReport:
    feasible: bool
    sign_norms: tuple[float, float, float, float]
    r_interval: Optional[tuple[float, float]]
    fcon1_holds: bool
    degeneracy: str

    @property
    def min_sign_norm(self) -> float:
        return min(self.sign_norms)

    def as_dict(self) -> dict:
        return {
            "feasible": self.feasible,
            "sign_norms": dict(zip(PATTERN_NAMES, self.sign_norms)),
            "min_sign_norm": self.min_sign_norm,
            "r_interval": list(self.r_interval) if self.r_interval is not None else None,
            "fcon1_holds": self.fcon1_holds,
            "degeneracy": self.degeneracy,
        }


def sign_norms(t) -> np.ndarray:
    """|n1 + n2 + n3|, |n1 + n2 - n3|, |n1 - n2 + n3|, |n1 - n2 - n3|."""
    return np.linalg.norm(SIGN_PATTERNS @ as_triple(t).vectors, axis=1)


def fcon1(t) -> bool:
    """Sufficient test 1 > |n1.n2| + |n2.n3| + |n3.n1|."""
    m = gram(t)
    return bool(abs(m[0, 1]) + abs(m[1, 2]) + abs(m[0, 2]) < 1.0)


def r_interval(norms) -> tuple[float, float]:
    """Raw bounds [max_s (1 - q_s)/2, min_s (q_s - 1)/2]; lo > hi means empty."""
    q = np.asarray(norms, dtype=float) ** 2
    return float(np.max((1.0 - q) / 2.0)), float(np.min((q - 1.0) / 2.0))


def feasibility(t) -> FeasibilityReport:
    t = as_triple(t)
    norms = sign_norms(t)
    kind = classify_degenerate(t).kind
    feasible = kind == "independent" and float(norms.min()) >= 1.0 - TOL_STATE
    interval = None
    if feasible:
        lo, hi = r_interval(norms)
        if lo > hi:
            # min norm within tolerance below 1: collapse onto the single point r = 0
            lo = hi = 0.0
        interval = (lo, hi)
    return FeasibilityReport(
        feasible=feasible,
        sign_norms=tuple(float(v) for v in norms),
        r_interval=interval,
        fcon1_holds=fcon1(t),
        degeneracy=kind,
    )


# ---------------------------------------------------------------- POVM


@dataclass(frozen=True)
class PovmSet:
    triple: VectorTriple
    coefficients: CoefficientSet
    elements: np.ndarray  # (8, 4, 4), ordered A..H

    @property
    def r(self) -> float:
        return self.coefficients.r

    def element(self, label: str) -> np.ndarray:
        return self.elements[LABELS.index(label)]

    def total(self) -> np.ndarray:
        return self.elements.sum(axis=0)

    def completeness_residual(self) -> float:
        return float(np.linalg.norm(self.total() - IDENTITY4))

    def probabilities(self, psi) -> np.ndarray:
        """<psi|E_K|psi> for all eight labels."""
        psi = np.asarray(psi, dtype=complex)
        return np.einsum("i,kij,j->k", psi.conj(), self.elements, psi).real


def element_kets(t) -> np.ndarray:
    """Rows |v_K> = |Psi0> + sum_k (S^K M^-1)_k |n_k> for K = A..H."""
    t = as_triple(t)
    # sum_k (S M^-1)_k n_k = sum_l S_l m_l with m_l the reciprocal basis
    return singlet()[None, :] + raw_vector_ket(SIGNS @ reciprocal_basis(t))


def assemble_povm(t, coefficients: CoefficientSet) -> PovmSet:
    """Form E_K = C_K |v_K><v_K| without any feasibility validation."""
    t = as_triple(t)
    kets = element_kets(t)
    elements = coefficients.c[:, None, None] * np.einsum("ki,kj->kij", kets, kets.conj())
    return PovmSet(triple=t, coefficients=coefficients, elements=elements)


def build_povm(t, r: float = 0.0, validate: bool = True) -> PovmSet:
    """Alice's POVM for directions ``t`` at parameter ``r``.

    With ``validate`` the triple must be independent and feasible and r must
    lie inside the feasible interval (no clamping). ``validate=False`` builds
    the elements for any invertible Gram matrix, e.g. to inspect how an
    infeasible triple fails.
    """
    t = as_triple(t)
    if validate:
        report = feasibility(t)
        if report.degeneracy != "independent":
            raise DegenerateTriple(f"directions are {report.degeneracy.replace('_', ' ')}")
        if not report.feasible:
            worst = PATTERN_NAMES[int(np.argmin(report.sign_norms))]
            raise Infeasible(
                f"|n1 {worst[0]} n2 {worst[1]} n3| = {report.min_sign_norm:.6g} < 1",
                sign_norms=report.sign_norms,
            )
        lo, hi = report.r_interval
        if not (lo - COEFF_TOL <= r <= hi + COEFF_TOL):
            raise ROutOfRange(f"r = {r!r} outside [{lo!r}, {hi!r}]", interval=(lo, hi))
    return assemble_povm(t, solve_coefficients(t, r))


@dataclass
class PovmDiagnostics:
    completeness_residual: float
    min_eigenvalues: np.ndarray
    second_eigenvalues: np.ndarray
    probability_table: np.ndarray  # (6, 8), rows in TABLE_ROWS order
    row_sums: np.ndarray
    required_zeros_ok: bool
    nonzero_cells_ok: bool
    negative_coefficients: list[str]

    @property
    def completeness_ok(self) -> bool:
        return self.completeness_residual < TOL_OPERATOR

    @property
    def positive_ok(self) -> bool:
        return bool(np.all(self.min_eigenvalues >= -TOL_OPERATOR))

    @property
    def rank_ok(self) -> bool:
        return bool(np.all(self.second_eigenvalues < TOL_OPERATOR))

    @property
    def row_sums_ok(self) -> bool:
        return bool(np.all(np.abs(self.row_sums - 1.0) <= TOL_OPERATOR))

    @property
    def zero_pattern_ok(self) -> bool:
        return self.required_zeros_ok and self.nonzero_cells_ok

    @property
    def ok(self) -> bool:
        return (
            self.completeness_ok
            and self.positive_ok
            and self.rank_ok
            and self.row_sums_ok
            and self.zero_pattern_ok
            and not self.negative_coefficients
        )


def zero_mask() -> np.ndarray:
    """(6, 8) boolean: True where outcome K is impossible for (k, beta)."""
    return np.array([[SIGNS[K, k - 1] == beta for K in range(8)] for k, beta in TABLE_ROWS])


def probability_table(p: PovmSet) -> np.ndarray:
    return np.array([p.probabilities(bob_post_state(p.triple.vectors[k - 1], beta)) for k, beta in TABLE_ROWS])


def verify_povm(p: PovmSet) -> PovmDiagnostics:
    """Numerical audit of a POVM; failures are reported, never raised.

    The zero pattern has two halves. Required zeros: the cell is below 1e-12
    wherever S^K_k = beta. Allowed outcomes: wherever S^K_k = -beta the cell
    equals 2 C_K, so it is nonzero exactly when the element itself is.
    """
    eig = np.array([np.linalg.eigvalsh(e) for e in p.elements])
    table = probability_table(p)
    mask = zero_mask()
    expected = np.broadcast_to(2.0 * p.coefficients.c, table.shape)
    return PovmDiagnostics(
        completeness_residual=p.completeness_residual(),
        min_eigenvalues=eig[:, 0],
        second_eigenvalues=eig[:, -2],
        probability_table=table,
        row_sums=table.sum(axis=1),
        required_zeros_ok=bool(np.all(np.abs(table[mask]) < TOL_STATE)),
        nonzero_cells_ok=bool(np.all(np.abs(table[~mask] - expected[~mask]) < TOL_OPERATOR)),
        negative_coefficients=p.coefficients.negative_labels(),
    )


# ---------------------------------------------------------------- reductions


@dataclass(frozen=True)
class ProjectiveMeasurement:
    labels: tuple[str, ...]
    projectors: np.ndarray  # (4, 4, 4)


def reduce_to_projective(t, tol: float = TOL_OPERATOR) -> Optional[ProjectiveMeasurement]:
    """Four-outcome projective measurement (r = 1, C_A..D = 1/4) when the
    directions are mutually orthogonal; None otherwise."""
    t = as_triple(t)
    if np.max(np.abs(gram(t) - np.eye(3))) > tol:
        return None
    p = build_povm(t, 1.0, validate=False)
    return ProjectiveMeasurement(labels=tuple(LABELS[:4]), projectors=p.elements[:4].copy())


def zero_pattern_search(t, tol: float = 1e-10) -> list[dict]:
    """Try every way of forcing four of the eight C_K to zero.

    For each of the 70 patterns the remaining four unknowns are fitted to
    the seven constraint equations by least squares; ``solvable`` means the
    residual vanishes, ``nonnegative`` that the fitted values are >= 0 too.
    """
    a, b = constraint_system(gram(t))
    out = []
    for zeroed in combinations(range(8), 4):
        keep = [i for i in range(8) if i not in zeroed]
        x, *_ = np.linalg.lstsq(a[:, keep], b, rcond=None)
        residual = float(np.max(np.abs(a[:, keep] @ x - b)))
        c = np.zeros(8)
        c[keep] = x
        out.append(
            {
                "zeroed": "".join(LABELS[i] for i in zeroed),
                "solvable": residual < tol,
                "nonnegative": bool(np.all(x >= -tol)),
                "residual": residual,
                "coefficients": c,
            }
        )
    return out


# ---------------------------------------------------------------- consistency


@dataclass(frozen=True)
class QuadraticFormReport:
    patterns: tuple[str, ...]
    lhs: np.ndarray  # |sum_k s_k n_k|^2
    rhs: np.ndarray  # sum_K C_K (sum_l s_l S^K_l)^2
    max_deviation: float
    forms_at_least_one: bool

    @property
    def implies_infeasible(self) -> bool:
        """Some |n1 +- n2 +- n3|^2 < 1, so no nonnegative C_K can exist."""
        return bool(np.any(self.lhs < 1.0 - TOL_STATE))


def ben_menahem_check(c: CoefficientSet, t, tol: float = TOL_STATE) -> QuadraticFormReport:
    """Check |sum_k s_k n_k|^2 = sum_K C_K (s . S^K)^2 for the four patterns.

    The right side is at least sum_K C_K = 1 whenever every C_K >= 0, since
    (s . S^K)^2 is 1 or 9. Raises InvariantViolation if the identity fails,
    which means ``c`` does not satisfy the second-moment constraints.
    """
    t = as_triple(t)
    lhs = np.sum((SIGN_PATTERNS @ t.vectors) ** 2, axis=1)
    weights = (SIGN_PATTERNS @ SIGNS.T).astype(float) ** 2  # (4, 8)
    rhs = weights @ c.c
    dev = float(np.max(np.abs(lhs - rhs)))
    if dev > tol:
        raise InvariantViolation(f"quadratic-form identity off by {dev:.3e}")
    return QuadraticFormReport(
        patterns=PATTERN_NAMES,
        lhs=lhs,
        rhs=rhs,
        max_deviation=dev,
        forms_at_least_one=bool(np.all(rhs >= 1.0 - tol)),
    )


# ---------------------------------------------------------------- families


def tilted_planar_triple(eps: float) -> VectorTriple:
    """Three directions 120 degrees apart in the xy-plane, tilted by ``eps``
    toward z: n_k = (cos eps cos p_k, cos eps sin p_k, sin eps)."""
    phis = 2.0 * np.pi * np.arange(3) / 3.0
    ce, se = np.cos(eps), np.sin(eps)
    return VectorTriple(np.stack([ce * np.cos(phis), ce * np.sin(phis), np.full(3, se)], axis=1))


def random_triples(rng: np.random.Generator, count: int) -> np.ndarray:
    """(count, 3, 3) directions uniform on the sphere."""
    g = rng.standard_normal((count, 3, 3))
    return g / np.linalg.norm(g, axis=2, keepdims=True)
