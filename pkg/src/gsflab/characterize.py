"""
Rule-based structural conclusions from ``(d, n, F_g, f_g)`` and the curve table for
the noisy family with distinguishable and identical particles.

Rule identifiers:

* ``C1.unit_fidelity``: f_g = 1 (within 1e-6) implies distinguishable particles.
* ``C1.above_bound``: F_g > 1 + (n-1)/d implies identical particles.
* ``C2.fg_entangled`` / ``C2.fg_separable``: f_g compared with 2/(d+1) (strict ``>``).
* ``C2.Fg_entangled``: F_g > n/d.   ``C2.Fg_separable``: F_g <= 1/d.
* ``C3.one_mes``: f_g = 1 gives one maximally entangled structure.
* ``C3.all_mes``: F_g = n (within 1e-6) gives n structures.
* ``C4.multi_dof``: F_g > 1 implies n > 1.
* ``C4.dof_count``: with f_g <= 2/(d+1) and F_g known, n = ceil(d F_g).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .channels import RelationParams, relation_fg

UNIT_TOL = 1e-6
CEIL_NUDGE = 1e-9


@dataclass(frozen=True)
class CharacterizationInput:
    d: int
    n: int | None = None
    F_g: float | None = None
    f_g: float | None = None


@dataclass
class CharacterizationReport:
    distinguishability: str = "unknown"
    entanglement: str = "unknown"
    mes_count: int | None = None
    dof_conclusion: str | None = None
    fired_rules: list[str] = field(default_factory=list)
    contradictions: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "distinguishability": self.distinguishability,
            "entanglement": self.entanglement,
            "mesCount": self.mes_count,
            "dofConclusion": self.dof_conclusion,
            "firedRules": list(self.fired_rules),
            "contradictions": list(self.contradictions),
        }


def _set(report, attr, value, rule):
    current = getattr(report, attr)
    if current not in ("unknown", None) and current != value:
        report.contradictions.append(f"{rule} says {attr}={value} but earlier rules gave {current}")
        setattr(report, attr, "unknown")
    else:
        setattr(report, attr, value)
    report.fired_rules.append(rule)


def characterize(inp: CharacterizationInput) -> CharacterizationReport:
    """
    Apply the decision rules in order. Conflicting conclusions are reported in
    ``contradictions`` and the affected field falls back to ``"unknown"``.

    Raises
    ------
    ValueError
        Neither ``F_g`` nor ``f_g`` is given, or ``d < 2``.
    """
    d, n, Fg, fg = inp.d, inp.n, inp.F_g, inp.f_g
    if Fg is None and fg is None:
        raise ValueError("need at least one of F_g, f_g")
    if d < 2:
        raise ValueError("d must be >= 2")
    if n is not None and n < 1:
        raise ValueError("n must be >= 1")
    rep = CharacterizationReport()
    unit_f = fg is not None and abs(fg - 1.0) <= UNIT_TOL
    threshold = 2 / (d + 1)

    # Case 1
    if unit_f:
        _set(rep, "distinguishability", "distinguishable", "C1.unit_fidelity")
    if Fg is not None and n is not None and Fg > 1 + (n - 1) / d:
        _set(rep, "distinguishability", "indistinguishable", "C1.above_bound")

    # Case 2
    ent_votes = []
    if fg is not None:
        ent_votes.append(("entangled", "C2.fg_entangled") if fg > threshold
                         else ("separable", "C2.fg_separable"))
    if Fg is not None:
        if n is not None and Fg > n / d:
            ent_votes.append(("entangled", "C2.Fg_entangled"))
        elif Fg <= 1 / d:
            ent_votes.append(("separable", "C2.Fg_separable"))
    for value, rule in ent_votes:
        _set(rep, "entanglement", value, rule)
    if len({v for v, _ in ent_votes}) > 1:
        rep.entanglement = "unknown"

    # Case 3
    if unit_f:
        rep.mes_count = 1
        rep.fired_rules.append("C3.one_mes")
    if Fg is not None and n is not None and abs(Fg - n) <= UNIT_TOL:
        if rep.mes_count not in (None, n):
            rep.contradictions.append(f"C3.all_mes gives {n} structures but C3.one_mes gave 1")
        rep.mes_count = n
        rep.fired_rules.append("C3.all_mes")

    # Case 4
    if Fg is not None and Fg > 1:
        rep.dof_conclusion = "n>1"
        rep.fired_rules.append("C4.multi_dof")
        if n == 1:
            rep.contradictions.append("F_g > 1 requires more than one DoF but n=1 was given")
    if fg is not None and fg <= threshold and Fg is not None:
        n_est = max(1, math.ceil(d * Fg - CEIL_NUDGE))
        rep.dof_conclusion = f"n={n_est}"
        rep.fired_rules.append("C4.dof_count")
        if n is not None and n != n_est:
            rep.contradictions.append(f"C4.dof_count gives n={n_est} but n={n} was given")
    return rep


###############################################################################

FIG3_COLUMNS = ("n", "Fg_min", "Fg_max", "fg_min", "fg_max", "regime")


def fig3_curves(d: int, n_values, f_max_indist: float, f_max_dist: float = 1.0) -> list[dict]:
    """
    Endpoints of the affine ``F_g -> f_g`` relation for each ``n``.

    Distinguishable rows use ``F_max = 1 + (n-1)/d``; identical-particle rows use
    ``F_max = n`` and the caller's ``f_max_indist``, which must be below 1.
    """
    n_values = list(n_values)
    if not n_values:
        raise ValueError("n range is empty")
    if not f_max_indist < 1:
        raise ValueError("identical-particle f_max must be below 1")
    rows = []
    for n in n_values:
        for regime, f_max, F_max in (("distinguishable", f_max_dist, 1 + (n - 1) / d),
                                     ("indistinguishable", f_max_indist, float(n))):
            p = RelationParams(n, d, f_max, F_max)
            lo = n / d ** 2
            rows.append({
                "n": n,
                "Fg_min": lo,
                "Fg_max": F_max,
                "fg_min": relation_fg(lo, p),
                "fg_max": relation_fg(F_max, p),
                "regime": regime,
            })
    return rows
