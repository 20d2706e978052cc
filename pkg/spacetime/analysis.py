"""
Dense verification of the preconditioner theory.

Every check assembles L and P_eps densely on a small instance and compares
a measured quantity against what the analysis predicts: the closed-form
inverse, the spectrum of P^{-1}L, the low-rank structure of P^{-1}L - I,
its eigendecomposition, the eps-scaled norm bound and the GMRES contraction
envelope. Checks never raise on a mismatch; they return a CheckReport.
"""

import csv
from dataclasses import asdict, dataclass, field
from functools import cached_property
from typing import Iterable, Optional

import numpy as np
import scipy.linalg as la

from logger import get_logger

from .discretization import (
    AllAtOnceSystem,
    Grid2D,
    TimeStencil,
    assemble,
    bdf_stencil,
    build_heat_fd,
    build_heat_q1,
    dense_L,
)
from .errors import ConfigError, SpaceTimeError
from .krylov import GmresConfig, solve_system
from .preconditioner import BECPreconditioner, choose_epsilon, r_eps_pattern

DENSE_CAP = 2000
RANK_THRESHOLD = 1e-8
SPECTRUM_TOL = 1e-8
FORMULA_TOL = 1e-9
INVERSE_TOL = 1e-10
ASSEMBLY_TOL = 1e-13

PASS, FAIL, SKIP, INFO = "pass", "fail", "skip", "info"


@dataclass
class CheckReport:
    """One row of the verification table."""
    name: str
    status: str
    measured: Optional[float] = None
    bound: Optional[float] = None
    params: dict = field(default_factory=dict)
    details: str = ""

    @property
    def ok(self) -> bool:
        return self.status != FAIL

    def to_dict(self) -> dict:
        return asdict(self)

    def to_row(self) -> dict:
        row = {"name": self.name, "status": self.status}
        for key in ("scheme", "N", "m", "J", "eps", "delta"):
            row[key] = self.params.get(key, "")
        row["measured"] = "" if self.measured is None else repr(self.measured)
        row["bound"] = "" if self.bound is None else repr(self.bound)
        row["details"] = self.details
        return row


CSV_FIELDS = ["name", "status", "scheme", "N", "m", "J", "eps", "delta", "measured", "bound", "details"]


def write_reports_csv(reports: Iterable[CheckReport], path: str) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_FIELDS)
        writer.writeheader()
        for report in reports:
            writer.writerow(report.to_row())


def _status(ok: bool) -> str:
    return PASS if ok else FAIL


def _log(report: CheckReport) -> CheckReport:
    get_logger().check_result(report.name, report.status, {
        "measured": report.measured, "bound": report.bound, **report.params,
    })
    return report


# =============================================================================
# DENSE INSTANCES
# =============================================================================

@dataclass
class DenseInstance:
    system: AllAtOnceSystem
    eps: float
    L: np.ndarray
    P: np.ndarray
    M: np.ndarray
    K: np.ndarray

    @classmethod
    def from_system(cls, system: AllAtOnceSystem, eps: float, cap: int = DENSE_CAP) -> "DenseInstance":
        if system.size > cap:
            raise ConfigError(f"dense instance limited to N*J <= {cap}, got {system.size}")
        M = system.pair.M.toarray()
        K = system.pair.K.toarray()
        R_eps = r_eps_pattern(system.stencil, eps, system.N)
        P = np.kron(R_eps, M) + system.tau * np.kron(np.eye(system.N), K)
        return cls(system=system, eps=float(eps), L=dense_L(system), P=P, M=M, K=K)

    @property
    def N(self) -> int:
        return self.system.N

    @property
    def J(self) -> int:
        return self.system.J

    @property
    def p(self) -> int:
        return self.system.stencil.p

    @property
    def tau(self) -> float:
        return self.system.tau

    @property
    def A0(self) -> np.ndarray:
        return self.system.stencil.r0 * self.M + self.tau * self.K

    @property
    def params(self) -> dict:
        grid = self.system.pair.grid
        return {
            "scheme": f"bdf{self.p}",
            "N": self.N,
            "m": grid.m if grid is not None else "",
            "J": self.J,
            "eps": self.eps,
        }

    @cached_property
    def L_inv(self) -> np.ndarray:
        return la.inv(self.L)

    @cached_property
    def P_inv_L(self) -> np.ndarray:
        return la.solve(self.P, self.L)

    @cached_property
    def generalized_eigs(self) -> tuple[np.ndarray, np.ndarray]:
        """(lam, W) with A0 W = M W diag(lam), W^T M W = I."""
        return la.eigh(self.A0, self.M)

    def L_inv_block(self, i: int, j: int = 0) -> np.ndarray:
        J = self.J
        return self.L_inv[i * J:(i + 1) * J, j * J:(j + 1) * J]

    def Z_eps(self) -> np.ndarray:
        """eps^{-1} [I - eps (A0^{-1} M)^N] M^{-1} (one-step schemes)."""
        J = self.J
        G = np.linalg.matrix_power(la.solve(self.A0, self.M), self.N)
        return (np.eye(J) - self.eps * G) @ la.inv(self.M) / self.eps

    def mapped_eigenvalues(self) -> np.ndarray:
        """lam^N / (lam^N - eps) for lam in sigma(M^{-1/2} A0 M^{-1/2}), stably."""
        lam, _ = self.generalized_eigs
        return 1.0 / (1.0 - self.eps * lam ** (-float(self.N)))

    def c0(self) -> float:
        mass = la.eigvalsh(self.M)
        return float(np.sqrt(mass[-1] / mass[0]))


def _one_step_only(inst: DenseInstance, name: str) -> Optional[CheckReport]:
    if inst.p != 1:
        return CheckReport(name, SKIP, params=inst.params,
                           details="closed form derived for one-step schemes")
    return None


def _needs_symmetric(inst: DenseInstance, name: str) -> Optional[CheckReport]:
    if not inst.system.pair.symmetric_K:
        return CheckReport(name, SKIP, params=inst.params, details="requires symmetric K")
    return None


# =============================================================================
# CHECKS
# =============================================================================

def check_dense_assembly(system: AllAtOnceSystem, cap: int = DENSE_CAP) -> CheckReport:
    """Matrix-free apply_L, column by column, against R kron M + tau I kron K."""
    n = system.size
    if n > cap:
        raise ConfigError(f"dense assembly check limited to N*J <= {cap}, got {n}")
    columns = np.empty((n, n))
    unit = np.zeros(n)
    for i in range(n):
        unit[i] = 1.0
        columns[:, i] = system.apply(unit)
        unit[i] = 0.0
    reference = dense_L(system)
    err = float(np.max(np.abs(columns - reference)) / max(np.max(np.abs(reference)), 1.0))
    grid = system.pair.grid
    params = {"scheme": f"bdf{system.stencil.p}", "N": system.N,
              "m": grid.m if grid else "", "J": system.J}
    return _log(CheckReport("dense_assembly", _status(err <= ASSEMBLY_TOL), err, ASSEMBLY_TOL, params))


def check_fast_inverse(inst: DenseInstance, inner: str = "auto", seed: int = 0) -> CheckReport:
    """apply_inverse against the dense P_eps on a random vector."""
    name = f"fast_inverse[{inner}]"
    try:
        pre = BECPreconditioner.setup(inst.system, inst.eps, inner=inner)
    except SpaceTimeError as e:
        return _log(CheckReport(name, FAIL, params=inst.params, details=str(e)))
    y = np.random.default_rng(seed).standard_normal(inst.system.size)
    z = pre.apply_inverse(y)
    err = float(np.linalg.norm(inst.P @ z - y) / np.linalg.norm(y))
    return _log(CheckReport(name, _status(err <= INVERSE_TOL), err, INVERSE_TOL, inst.params))


def capacitance_inverse(inst: DenseInstance) -> np.ndarray:
    """
    P^{-1} from the low-rank update P = L + U (eps C kron M) V^T, where U and
    V select the first and last p time blocks and C[i, l] = r_{p-l+i}, l >= i.
    """
    N, J, p = inst.N, inst.J, inst.p
    r = inst.system.stencil.coefficients
    C = np.zeros((p, p))
    for i in range(p):
        for l in range(i, p):
            C[i, l] = r[p - l + i]
    U = np.zeros((N * J, p * J))
    U[: p * J] = np.eye(p * J)
    V = np.zeros((N * J, p * J))
    V[(N - p) * J:] = np.eye(p * J)
    G = inst.eps * np.kron(C, inst.M)
    Linv = inst.L_inv
    capacitance = la.inv(G) + V.T @ Linv @ U
    return Linv - Linv @ U @ la.solve(capacitance, V.T @ Linv)


def check_inverse_formula(inst: DenseInstance) -> CheckReport:
    """
    One-step schemes: P^{-1} = L^{-1} + L^{-1} E_1 Z^{-1} E_N^T L^{-1}.
    Multistep schemes: the equivalent capacitance form.
    """
    J, N = inst.J, inst.N
    reference = la.inv(inst.P)
    if inst.p == 1:
        Linv = inst.L_inv
        Z_inv = la.inv(inst.Z_eps())
        formula = Linv + Linv[:, :J] @ Z_inv @ Linv[(N - 1) * J:, :]
        label = "inverse_formula"
    else:
        formula = capacitance_inverse(inst)
        label = "inverse_formula[capacitance]"
    err = float(np.linalg.norm(formula - reference) / np.linalg.norm(reference))
    return _log(CheckReport(label, _status(err <= FORMULA_TOL), err, FORMULA_TOL, inst.params))


def _sorted(values: np.ndarray) -> np.ndarray:
    values = np.asarray(values, dtype=complex)
    return values[np.lexsort((values.imag, values.real))]


def check_spectrum(inst: DenseInstance) -> CheckReport:
    """
    sigma(P^{-1}L) is (N-1)J copies of 1 plus lam^N/(lam^N - eps), and for
    eps < 1 every eigenvalue lies within eps/(1-eta) of 1 with eta = eps.
    """
    name = "spectrum"
    skipped = _one_step_only(inst, name) or _needs_symmetric(inst, name)
    if skipped:
        return _log(skipped)
    computed = _sorted(la.eigvals(inst.P_inv_L))
    expected = _sorted(np.concatenate([np.ones((inst.N - 1) * inst.J), inst.mapped_eigenvalues()]))
    mismatch = float(np.max(np.abs(computed - expected) / np.maximum(1.0, np.abs(expected))))
    ok = mismatch <= SPECTRUM_TOL
    details = f"multiset mismatch {mismatch:.2e}"
    radius, bound = float(np.max(np.abs(computed - 1.0))), None
    if inst.eps < 1.0:
        bound = inst.eps / (1.0 - inst.eps)
        ok = ok and radius <= bound * (1 + 1e-12) + SPECTRUM_TOL
        details += f"; cluster radius {radius:.3e}"
    return _log(CheckReport(name, _status(ok), radius if bound else mismatch, bound, inst.params, details))


def check_rank_defect(inst: DenseInstance) -> CheckReport:
    """rank(P^{-1}L - I) = pJ with singular values above 1e-8 sigma_max counted."""
    sv = la.svdvals(inst.P_inv_L - np.eye(inst.system.size))
    rank = int(np.sum(sv > RANK_THRESHOLD * sv[0])) if sv[0] > 0 else 0
    expected = inst.p * inst.J
    gap = sv[expected - 1] / sv[0] if 0 < expected <= len(sv) and sv[0] > 0 else 0.0
    return _log(CheckReport("rank_defect", _status(rank == expected), float(rank), float(expected),
                            inst.params, f"smallest retained/largest = {gap:.2e}"))


def check_diagonalization(inst: DenseInstance) -> CheckReport:
    """
    Build V-hat and D-hat from the generalized eigenpairs of (A0, M) and check
    L V-hat = P V-hat D-hat column by column; also report the D > 1 margin
    and the condition number of V-hat.
    """
    name = "diagonalization"
    skipped = _one_step_only(inst, name) or _needs_symmetric(inst, name)
    if skipped:
        return _log(skipped)
    N, J, eps = inst.N, inst.J, inst.eps
    lam, V = inst.generalized_eigs
    D = inst.mapped_eigenvalues()
    # (I - D)^{-1} without the cancellation in 1 - D
    one_minus_D_inv = -(lam ** float(N) / eps - 1.0)
    Z_inv = la.inv(inst.Z_eps())

    V_hat = np.zeros((N * J, N * J))
    V_hat[: (N - 1) * J, : (N - 1) * J] = np.eye((N - 1) * J)
    for i in range(N - 1):
        V_i = inst.L_inv_block(i) @ Z_inv @ V * one_minus_D_inv[None, :]
        V_hat[i * J:(i + 1) * J, (N - 1) * J:] = V_i
    V_hat[(N - 1) * J:, (N - 1) * J:] = -V
    D_hat = np.concatenate([np.ones((N - 1) * J), D])

    lhs = inst.L @ V_hat
    rhs = inst.P @ V_hat * D_hat[None, :]
    scale = np.maximum(np.linalg.norm(lhs, axis=0), np.linalg.norm(rhs, axis=0))
    err = float(np.max(np.linalg.norm(lhs - rhs, axis=0) / np.where(scale > 0, scale, 1.0)))
    margin = float(np.min(eps * lam ** (-float(N)) / (1.0 - eps * lam ** (-float(N)))))
    ok = err <= FORMULA_TOL and np.all(lam > 1.0 - 1e-12)
    kappa = float(np.linalg.cond(V_hat))
    return _log(CheckReport(name, _status(ok), err, FORMULA_TOL, inst.params,
                            f"min(D)-1 = {margin:.3e}; cond(V_hat) = {kappa:.3e}"))


def check_norm_bound(inst: DenseInstance, eta: Optional[float] = None) -> CheckReport:
    """||P^{-1}L - I||_2 <= eps c0 sqrt(N) / (1 - eta), eps <= eta < 1."""
    name = "norm_bound"
    skipped = _one_step_only(inst, name) or _needs_symmetric(inst, name)
    if skipped:
        return _log(skipped)
    eta = inst.eps if eta is None else eta
    measured = float(la.norm(inst.P_inv_L - np.eye(inst.system.size), 2))
    if eta >= 1.0:
        return _log(CheckReport(name, INFO, measured, None, inst.params,
                                "no bound for eta >= 1 (block circulant case)"))
    if inst.eps > eta:
        return _log(CheckReport(name, SKIP, measured, None, inst.params, "requires eps <= eta"))
    c0 = inst.c0()
    bound = inst.eps * c0 * np.sqrt(inst.N) / (1.0 - eta)
    return _log(CheckReport(name, _status(measured <= bound * (1 + 1e-12)), measured, float(bound),
                            inst.params, f"c0 = {c0:.4f}, eta = {eta}"))


def rate_epsilon(delta: float, tau: float, T: float, c0: float) -> float:
    """b_tau = delta sqrt(tau) / (delta sqrt(tau) + c0 sqrt(T))."""
    return delta * np.sqrt(tau) / (delta * np.sqrt(tau) + c0 * np.sqrt(T))


def check_gmres_rate(delta: float, N: int = 16, m: int = 15, T: float = 1.0,
                     a: float = 1e-5) -> CheckReport:
    """
    With eps = b_tau the preconditioned GMRES residuals obey
    ||r_k|| / ||r_0|| <= (2 sqrt(delta) / (1 + delta))^k.
    """
    params = {"scheme": "bdf1", "N": N, "m": m, "J": m * m, "delta": delta}
    if not 0.0 < delta < 1.0:
        return _log(CheckReport("gmres_rate", SKIP, params=params, details="delta must lie in (0, 1)"))
    grid = Grid2D(m)
    pair = build_heat_fd(grid, a)
    system = assemble(grid, pair, bdf_stencil(1), T, N, initial=lambda x, y: x * (x - 1) * y * (y - 1))
    mass = la.eigvalsh(pair.M.toarray()) if pair.J <= DENSE_CAP else pair.M.diagonal()
    c0 = float(np.sqrt(mass.max() / mass.min()))
    eps = float(rate_epsilon(delta, system.tau, T, c0))
    params["eps"] = eps
    _, report = solve_system(system, "bec", eps, GmresConfig(tol=1e-12, restart=50, maxiter=200))
    history = np.asarray(report.history)
    k = np.arange(len(history))
    envelope = (2 * np.sqrt(delta) / (1 + delta)) ** k
    slack = float(np.max(history - envelope))
    ok = slack <= 1e-12
    return _log(CheckReport("gmres_rate", _status(ok), float(history[-1]), float(envelope[-1]), params,
                            f"{report.iterations} iterations; max(history - envelope) = {slack:.2e}"))


def compare_bc_bec(system: AllAtOnceSystem, config: Optional[GmresConfig] = None,
                   inner: str = "auto", u_exact: Optional[np.ndarray] = None) -> CheckReport:
    """GMRES with eps = 1 and eps = min(0.5, 0.5 tau) under identical settings."""
    config = config or GmresConfig()
    grid = system.pair.grid
    params = {"scheme": f"bdf{system.stencil.p}", "N": system.N,
              "m": grid.m if grid else "", "J": system.J}
    _, bc = solve_system(system, "bc", 1.0, config, inner=inner, u_exact=u_exact)
    eps = choose_epsilon(system.tau)
    _, bec = solve_system(system, "bec", eps, config, inner=inner, u_exact=u_exact)
    params["eps"] = eps
    details = (f"BEC iter={bec.iterations} res={bec.res:.2e} | "
               f"BC iter={bc.iterations} res={bc.res:.2e}")
    if u_exact is not None:
        details += f" | E: BEC {bec.error:.2e} BC {bc.error:.2e}"
    return _log(CheckReport("compare_bc_bec", _status(bec.iterations <= bc.iterations),
                            float(bec.iterations), float(bc.iterations), params, details))


# =============================================================================
# SUITE
# =============================================================================

def dense_instance(N: int, m: int, stencil: TimeStencil, eps: float, a: float = 1.0,
                   T: float = 1.0, cap: int = DENSE_CAP) -> DenseInstance:
    """Q1 heat pair with zero data; the checks only look at operators."""
    grid = Grid2D(m)
    system = assemble(grid, build_heat_q1(grid, a), stencil, T, N)
    return DenseInstance.from_system(system, eps, cap)


def run_theorem_suite(
    Ns: Iterable[int] = (3, 4, 8),
    ms: Iterable[int] = (2, 3, 7),
    eps_values: Iterable[float] = (1.0, 0.5, 0.1, 0.01),
    schemes: Iterable[str] = ("bdf1", "bdf2"),
    deltas: Iterable[float] = (0.5, 0.9),
    cap: int = DENSE_CAP,
    seed: int = 0,
) -> list[CheckReport]:
    """Run every dense check over the instance matrix; instances with N < p+2 are skipped."""
    reports: list[CheckReport] = []
    for scheme in schemes:
        stencil = bdf_stencil(int(scheme[-1]))
        for N in Ns:
            for m in ms:
                params = {"scheme": scheme, "N": N, "m": m, "J": m * m}
                if N < stencil.p + 2:
                    reports.append(_log(CheckReport("instance", SKIP, params=params,
                                                    details=f"N must be at least {stencil.p + 2}")))
                    continue
                if N * m * m > cap:
                    reports.append(_log(CheckReport("instance", SKIP, params=params,
                                                    details=f"N*J exceeds cap {cap}")))
                    continue
                first = True
                for eps in eps_values:
                    inst = dense_instance(N, m, stencil, eps, cap=cap)
                    if first:
                        reports.append(check_dense_assembly(inst.system, cap))
                        first = False
                    reports.append(check_fast_inverse(inst, "auto", seed))
                    reports.append(check_inverse_formula(inst))
                    reports.append(check_spectrum(inst))
                    reports.append(check_rank_defect(inst))
                    reports.append(check_diagonalization(inst))
                    reports.append(check_norm_bound(inst))
    for delta in deltas:
        reports.append(check_gmres_rate(delta))
    return reports


def summarize(reports: Iterable[CheckReport]) -> dict:
    counts = {PASS: 0, FAIL: 0, SKIP: 0, INFO: 0}
    for report in reports:
        counts[report.status] = counts.get(report.status, 0) + 1
    return counts
