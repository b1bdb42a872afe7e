"""Named check suites.  Each takes a run configuration and returns a CheckReport."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import curv_opt
from .errors import ConfigError
from .nk_algebra import (
    NKAlgebraData,
    bianchi_relations,
    contraction_identity_defect,
    hol_sect_tensor,
    kahler_type_defects,
    q_residual,
    sigma_forms,
    split_curvature,
    torsion_bianchi_defect,
    weitzenboeck_residual,
)
from .qk_models import FAMILIES, QKPoint, build_model, default_scal
from .report import CheckRecord, CheckReport, lower, near, upper
from .tensor_core import CurvTensor, FourForm, bianchi_map, iota_embed, min_eig_on_sym, q_endomorphism, sectional
from .twistor import TwistorPoint, VerticalVec, build_twistor, oneill_defect, ricci_rbar

SUITES = ("model-invariants", "twistor-assembly", "nk-identities", "bounds", "equivalence")
FORMATS = ("json", "csv")
EXACT_TOL = 1e-12
RICCI_MIXED_TOL = 1e-10
PARALLEL_TOL = 1e-8


@dataclass
class RunConfig:
    family: str = "hpn"
    n: int = 2
    scal: Optional[float] = None
    eps: int = -1
    suites: tuple = SUITES
    seed: int = 0
    restarts: int = 16
    samples: int = 20000
    workers: int = 1
    identity_tol: float = 1e-9
    opt_tol: float = 1e-6
    out: str = "qkcurv-reports"
    fmt: str = "json"

    def __post_init__(self):
        if self.scal is None and isinstance(self.n, int) and self.n >= 1:
            self.scal = default_scal(self.n)
        self.suites = tuple(self.suites)

    def validate(self) -> "RunConfig":
        if self.family not in FAMILIES:
            raise ConfigError(f"unknown model {self.family!r}; expected one of {', '.join(FAMILIES)}")
        if not isinstance(self.n, int) or self.n < 2:
            raise ConfigError(f"n must be an integer >= 2 (real dimension 4n >= 8), got {self.n}")
        if self.scal is None or not self.scal > 0:
            raise ConfigError(f"scal must be positive, got {self.scal}")
        if self.eps not in (-1, 1):
            raise ConfigError(f"eps must be -1 or 1, got {self.eps}")
        unknown = [s for s in self.suites if s not in SUITES]
        if unknown or not self.suites:
            raise ConfigError(f"unknown suite(s) {unknown}; valid suites: {', '.join(SUITES)}")
        if not (self.identity_tol > 0 and self.opt_tol > 0):
            raise ConfigError("tolerances must be positive")
        if self.restarts < 1 or self.samples < 0 or self.workers < 1:
            raise ConfigError("restarts and workers must be >= 1 and samples >= 0")
        if self.fmt not in FORMATS:
            raise ConfigError(f"unknown format {self.fmt!r}; expected one of {', '.join(FORMATS)}")
        return self

    def ordered_suites(self) -> list[str]:
        return [s for s in SUITES if s in self.suites]


@dataclass
class Context:
    """Models shared by the suites of one run, built on first use."""

    config: RunConfig
    _base: Optional[QKPoint] = field(default=None, repr=False)
    _twistor: Optional[TwistorPoint] = field(default=None, repr=False)

    @property
    def base(self) -> QKPoint:
        if self._base is None:
            self._base = build_model(self.config.family, self.config.n, self.config.scal)
        return self._base

    @property
    def twistor(self) -> TwistorPoint:
        if self._twistor is None:
            self._twistor = build_twistor(self.base, self.config.eps)
        return self._twistor

    def descriptor(self, with_eps: bool = True) -> dict:
        return curv_opt.model_descriptor(self.base, self.config.eps if with_eps else None)


def _rng(cfg: RunConfig, tag: int) -> np.random.Generator:
    return np.random.default_rng([cfg.seed, tag])


def model_invariants(ctx: Context) -> CheckReport:
    cfg, p = ctx.config, ctx.base
    report = CheckReport("model-invariants", ctx.descriptor(False), seed=cfg.seed)
    tol = cfg.identity_tol
    d = p.invariant_defects()
    anchors = {
        "frame": "J_a^2 = -Id, J_a orthogonal, J_1 J_2 = J_3",
        "pair_symmetry": "R(X,Y,Z,W) = R(Z,W,X,Y), relative",
        "bianchi": "first Bianchi identity of the base curvature, relative",
        "einstein": "Ric = scal/(4n) g, relative",
        "scal": "trace of Ric equals the requested scal, relative",
        "commutator": "[R(X,Y), I] = c4 (-<KX,Y> J + <JX,Y> K), relative to c4",
    }
    for key, anchor in anchors.items():
        report.add(upper(key, anchor, d[key], tol))
    if p.lie is None:
        reason = "no Lie-algebra realisation for this family"
        for name in ("symmetric_space", "ad_invariance", "lie_orthonormality", "bracket_curvature"):
            report.add(CheckRecord.skipped(name, "Lie-algebra structure of the model", reason))
    else:
        lie = p.lie
        report.add(upper("symmetric_space", "[k,k] in k, [k,m] in m, [m,m] in k", lie.symmetric_space_defect(), tol))
        report.add(upper("ad_invariance", "ad(k) and ad(su(2)) skew on m", lie.ad_invariance_defect(), tol))
        report.add(upper("lie_orthonormality", "k and m bases orthonormal", lie.orthonormality_defect(), tol))
        report.add(upper("bracket_curvature", "R(X,Y,Y,X) = |[X,Y]_k|^2 before rescaling",
                         lie.bracket_curvature_defect(seed=cfg.seed), tol))
    return report


def twistor_assembly(ctx: Context) -> CheckReport:
    cfg, p = ctx.config, ctx.base
    t = ctx.twistor
    n, scal = p.n, p.scal
    report = CheckReport("twistor-assembly", ctx.descriptor(), seed=cfg.seed)
    c2 = (n + 2) / (2 * scal) if cfg.eps == -1 else (n + 2) / scal
    report.add(near("c2", "c^2 = (n+2)/(2 scal) (eps=-1) or (n+2)/scal (eps=+1)", t.c2, c2, EXACT_TOL))
    Jz = t.Jz
    eye = np.eye(t.dim)
    report.add(upper("complex_structure", "J^2 = -Id and J orthogonal on H + V",
                     float(max(np.abs(Jz @ Jz + eye).max(), np.abs(Jz.T @ Jz - eye).max())), EXACT_TOL))
    gram = t.vertical_gram()
    report.add(near("vertical_norm", "|J*|^2 = |K*|^2 = 4n c^2", float(gram[0, 0]), 4 * n * c2, EXACT_TOL))
    report.add(upper("vertical_orthogonal", "g(J*, K*) = 0 and |J*| = |K*|",
                     float(max(abs(gram[0, 1]), abs(gram[0, 0] - gram[1, 1]))), EXACT_TOL))
    det = t.det(VerticalVec(1, 0), VerticalVec(0, 1))
    report.add(near("det_vertical", "det(J*, K*) = 4n c^2 (= 2n(n+2)/scal for eps=-1)", det, 4 * n * c2, EXACT_TOL))
    report.add(near("det_squared", "det(J*, K*)^2 = |J* ^ K*|^2", det**2, float(np.linalg.det(gram)), EXACT_TOL))

    names = ("fibre_sectional", "ricci_horizontal", "ricci_vertical", "ricci_mixed", "ricci_isotropy",
             "torsion_skew", "torsion_type", "oneill", "rbar_pair_symmetry", "rbar_j_invariance")
    if t.Rbar is None:
        for name in names:
            report.add(CheckRecord.skipped(name, "canonical connection of the nearly Kähler structure",
                                           "torsion and Rbar are only assembled for eps=-1"))
        return report

    h = t.dim_h
    fibre = scal / (2 * n * (n + 2))
    report.add(near("fibre_sectional", "fibre sectional curvature = scal/(2n(n+2))",
                    sectional(t.Rbar, eye[h], eye[h + 1]), fibre, EXACT_TOL))
    fit = ricci_rbar(t)
    report.add(near("ricci_horizontal", "Ric on H = (n+1) scal/(4n(n+2))",
                    fit.horizontal, (n + 1) * scal / (4 * n * (n + 2)), EXACT_TOL))
    report.add(near("ricci_vertical", "Ric on V = scal/(2n(n+2))", fit.vertical, fibre, EXACT_TOL))
    report.add(upper("ricci_mixed", "Ric(H, V) = 0", fit.mixed_defect, RICCI_MIXED_TOL))
    report.add(upper("ricci_isotropy", "Ric is a multiple of g on H and on V",
                     max(fit.horizontal_residual, fit.vertical_residual), cfg.identity_tol))

    data = NKAlgebraData.from_twistor(t)
    inv = data.invariant_defects()
    report.add(upper("torsion_skew", "torsion is a 3-form", inv["torsion_skew"], cfg.identity_tol))
    report.add(upper("torsion_type", "tau(X, JY, JZ) = -tau(X, Y, Z)", inv["torsion_type"], cfg.identity_tol))
    rng = _rng(cfg, 21)
    worst = max(oneill_defect(t, *rng.standard_normal((2, h))) for _ in range(32))
    report.add(upper("oneill", "vertical part of tau_X Y = [R(X,Y), I]/2", worst, cfg.identity_tol))
    report.add(upper("rbar_pair_symmetry", "Rbar pair symmetric", t.Rbar.pair_symmetry_defect, cfg.identity_tol))
    jdef = kahler_type_defects(t.Rbar, Jz)["j_invariance"] / max(1.0, float(np.abs(t.Rbar.matrix).max()))
    report.add(upper("rbar_j_invariance", "Rbar takes values in (1,1)-forms", jdef, cfg.identity_tol))
    return report


def _random_pair_symmetric(dim: int, rng: np.random.Generator) -> CurvTensor:
    a = rng.standard_normal((dim * (dim - 1) // 2,) * 2)
    return CurvTensor(0.5 * (a + a.T))


def nk_identities(ctx: Context) -> CheckReport:
    cfg = ctx.config
    report = CheckReport("nk-identities", ctx.descriptor(), seed=cfg.seed)
    t = ctx.twistor
    names = ("nk_data", "torsion_bianchi", "b_rbar", "b_minus", "b_plus", "b_tilde", "sigma_two_ways",
             "b_iota", "contraction_rbar", "contraction_random", "rk_bianchi", "rk_j_invariance",
             "r0_pair_symmetry", "weitzenboeck", "q_r0", "q_symmetric", "min_eig_sym2", "min_eig_sym4",
             "holomorphic_sectional")
    if t.Rbar is None:
        for name in names:
            report.add(CheckRecord.skipped(name, "nearly Kähler curvature identities",
                                           "the Kähler branch (eps=+1) carries no torsion"))
        return report
    tol = cfg.identity_tol
    data = NKAlgebraData.from_twistor(t)
    report.add(upper("nk_data", "J orthogonal complex structure, tau a (2,0)+(0,2)-valued 3-form",
                     max(data.invariant_defects().values()), tol))
    report.add(upper("torsion_bianchi", "cyclic sum of Rbar(X,Y,Z,W) - 4 <tau_X Y, tau_Z W> = 0 (1000 quadruples)",
                     torsion_bianchi_defect(data, 1000, cfg.seed), tol))
    rel = bianchi_relations(data)
    report.add(upper("b_rbar", "b(Rbar) = 8 sigma", rel["rbar"], tol))
    report.add(upper("b_minus", "b(sigma-) = 2 sigma", rel["minus"], tol))
    report.add(upper("b_plus", "b(sigma+) = -4 sigma", rel["plus"], tol))
    report.add(upper("b_tilde", "2 sigma- + sigma+ is Bianchi-flat", rel["tilde"], tol))
    parts = sigma_forms(data)
    shown = 2.0 * parts.minus.full - 2.0 * parts.plus.full
    from_b = (bianchi_map(t.Rbar) * 0.125).full()
    report.add(upper("sigma_two_ways", "2 sigma- - 2 sigma+ = b(Rbar)/8",
                     float(np.linalg.norm(shown - from_b) / max(parts.sigma.norm(), 1.0)), tol))

    rng = _rng(cfg, 31)
    worst = 0.0
    for _ in range(20):
        s = FourForm(t.dim, rng.standard_normal(len(FourForm.zero(t.dim).coeffs)))
        worst = max(worst, (bianchi_map(iota_embed(s)) - s * 12.0).norm() / s.norm())
    report.add(upper("b_iota", "b(iota(s)) = 12 s on 20 random 4-forms", worst, tol))
    report.add(upper("contraction_rbar", "Sym^2 part of e_j ^ e_i -| Rbar_{e_i,e_j} Rbar = q(Rbar) Rbar / 2",
                     contraction_identity_defect(t.Rbar), tol))
    worst = max(contraction_identity_defect(_random_pair_symmetric(t.dim, rng)) for _ in range(5))
    report.add(upper("contraction_random", "same contraction identity on 5 random pair-symmetric tensors", worst, tol))

    RK, R0 = split_curvature(data)
    kd = kahler_type_defects(RK, data.J)
    scale = max(RK.norm(), 1.0)
    report.add(upper("rk_bianchi", "RK = Rbar - R0 satisfies the first Bianchi identity", kd["bianchi"] / scale, tol))
    report.add(upper("rk_j_invariance", "RK is J-invariant in both pairs", kd["j_invariance"] / scale, tol))
    report.add(upper("r0_pair_symmetry", "R0 = -2 sigma+ is pair symmetric", R0.pair_symmetry_defect, tol))
    report.add(upper("weitzenboeck", "|q(Rbar) Rbar| / |Rbar|^2 = 0 on symmetric models",
                     weitzenboeck_residual(data), PARALLEL_TOL))
    report.add(upper("q_r0", "|q(Rbar) R0| / |R0|^2 = 0", q_residual(t.Rbar, R0), PARALLEL_TOL))
    A, B = _random_pair_symmetric(t.dim, rng), _random_pair_symmetric(t.dim, rng)
    qa, qb = q_endomorphism(t.Rbar, A), q_endomorphism(t.Rbar, B)
    asym = abs(np.sum(qa.full * B.full) - np.sum(A.full * qb.full)) / (A.norm() * B.norm() * t.Rbar.norm())
    report.add(upper("q_symmetric", "<q(Rbar) A, B> = <A, q(Rbar) B>", float(asym), tol))
    for deg in (2, 4):
        report.add(lower(f"min_eig_sym{deg}", f"q(Rbar) >= 0 on Sym^{deg}", min_eig_on_sym(t.Rbar, deg), -PARALLEL_TOL))
    S = hol_sect_tensor(RK, data.J)
    xs = rng.standard_normal((1000, t.dim))
    xs /= np.linalg.norm(xs, axis=1, keepdims=True)
    jx = xs @ data.J.T
    direct = np.einsum("abcd,na,nb,nc,nd->n", RK.full, xs, jx, jx, xs)
    polar = np.einsum("abcd,na,nb,nc,nd->n", S.full(), xs, xs, xs, xs)
    report.add(upper("holomorphic_sectional", "S(X,X,X,X) = RK(X,JX,JX,X) on 1000 unit vectors",
                     float(np.abs(direct - polar).max() / scale), tol))
    return report


def bounds(ctx: Context) -> CheckReport:
    cfg, p = ctx.config, ctx.base
    family = "hpn" if p.family == "hpn" else "wolf_general"
    return curv_opt.verify_bounds(p, family, restarts=cfg.restarts, seed=cfg.seed, samples=cfg.samples,
                                  opt_tol=cfg.opt_tol, identity_tol=cfg.identity_tol, workers=cfg.workers)


def equivalence(ctx: Context) -> CheckReport:
    cfg, p = ctx.config, ctx.base
    if cfg.eps != -1:
        report = CheckReport("equivalence", ctx.descriptor(), seed=cfg.seed)
        report.add(CheckRecord.skipped("equivalence", "nearly Kähler twistor curvature vs quaternionic sectional curvature",
                                       "requires the nearly Kähler branch eps=-1"))
        return report
    return curv_opt.equivalence_check(p, restarts=cfg.restarts, seed=cfg.seed, samples=cfg.samples,
                                      opt_tol=cfg.opt_tol, identity_tol=cfg.identity_tol, workers=cfg.workers)


RUNNERS: dict[str, Callable[[Context], CheckReport]] = {
    "model-invariants": model_invariants,
    "twistor-assembly": twistor_assembly,
    "nk-identities": nk_identities,
    "bounds": bounds,
    "equivalence": equivalence,
}


def run_suite(name: str, ctx: Context) -> CheckReport:
    start = time.perf_counter()
    report = RUNNERS[name](ctx)
    report.wall_time = time.perf_counter() - start
    return report


def run_all(config: RunConfig) -> list[CheckReport]:
    ctx = Context(config.validate())
    return [run_suite(name, ctx) for name in config.ordered_suites()]
