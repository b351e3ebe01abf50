"""Turn out-of-range forecasts into adjusted daily nutrient allowances.

A forecast above the safe range tightens the linked nutrient's maximum intake
by the fraction ``rho``; a forecast below it raises the adequate intake by
the same fraction; an in-range forecast changes nothing. The adjustment is
applied exactly once per call, so the service layer must invoke it once per
prediction cycle.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from .errors import InvalidRho, MissingLink, MissingRange
from .patient import MandatoryElectrolyte, MandatoryNutrient
from .reference import ANALYTE_NUTRIENT_LINKS

DEFAULT_RHO = 0.10


@dataclass
class Adjustment:
    """Provenance for one analyte's effect on one nutrient allowance."""

    analyte: str
    predicted: float
    branch: str                 # "high" | "low" | "in_range"
    nutrient: str | None = None
    bound: str | None = None    # "ai" | "mi"
    old: float | None = None
    new: float | None = None
    note: str | None = None

    def to_dict(self) -> dict:
        return {"analyte": self.analyte, "predicted": self.predicted,
                "branch": self.branch, "nutrient": self.nutrient, "bound": self.bound,
                "old": self.old, "new": self.new, "note": self.note}


@dataclass
class OptimizedRequirements:
    nutrients: list[MandatoryNutrient]
    provenance: list[Adjustment] = field(default_factory=list)
    rho: float = DEFAULT_RHO

    def by_name(self) -> dict[str, MandatoryNutrient]:
        return {n.nutrient: n for n in self.nutrients}

    def to_dict(self) -> dict:
        return {"nutrients": [n.to_dict() for n in self.nutrients],
                "provenance": [a.to_dict() for a in self.provenance],
                "rho": self.rho}

    @classmethod
    def from_dict(cls, d: dict) -> "OptimizedRequirements":
        return cls(
            nutrients=[MandatoryNutrient.from_dict(n) for n in d["nutrients"]],
            provenance=[Adjustment(**a) for a in d.get("provenance", [])],
            rho=float(d.get("rho", DEFAULT_RHO)),
        )


def optimize(
    mandatory_nutrients: list[MandatoryNutrient],
    predictions: dict[str, float],
    electrolyte_ranges: list[MandatoryElectrolyte],
    links: dict[str, tuple[str, ...]] | None = None,
    rho: float = DEFAULT_RHO,
) -> OptimizedRequirements:
    """Apply the +/- rho adjustment once per predicted analyte.

    Nutrients not linked to any predicted analyte come out bit-identical.
    When the bound a branch would move is undefined (not mandatory), the
    branch is a no-op recorded with a warning note. If raising AI would cross
    MI, AI is clamped to MI and flagged.
    """
    if not 0.0 < rho < 1.0:
        raise InvalidRho(f"rho must be in (0, 1), got {rho}")
    links = links if links is not None else ANALYTE_NUTRIENT_LINKS
    ranges = {e.analyte: e for e in electrolyte_ranges}
    adjusted = {n.nutrient: n for n in mandatory_nutrients}
    provenance: list[Adjustment] = []

    for analyte, pe in predictions.items():
        rng = ranges.get(analyte)
        if rng is None:
            raise MissingRange(f"no safe serum range on file for {analyte!r}")
        linked = links.get(analyte)
        if not linked:
            raise MissingLink(f"no nutrient linked to {analyte!r}")
        missing = [n for n in linked if n not in adjusted]
        if missing:
            raise MissingLink(
                f"{analyte!r} links to {missing}, absent from the mandatory nutrients")

        if pe > rng.max:
            branch = "high"
        elif pe < rng.min:
            branch = "low"
        else:
            provenance.append(Adjustment(analyte=analyte, predicted=pe, branch="in_range"))
            continue

        for name in linked:
            nut = adjusted[name]
            if branch == "high":
                if nut.mi is None:
                    provenance.append(Adjustment(
                        analyte=analyte, predicted=pe, branch=branch, nutrient=name,
                        bound="mi", note="maximum intake not mandatory; nothing to lower"))
                    continue
                new_mi = nut.mi - nut.mi * rho
                adjusted[name] = replace(nut, mi=new_mi)
                provenance.append(Adjustment(analyte=analyte, predicted=pe, branch=branch,
                                             nutrient=name, bound="mi",
                                             old=nut.mi, new=new_mi))
            else:
                if nut.ai is None:
                    provenance.append(Adjustment(
                        analyte=analyte, predicted=pe, branch=branch, nutrient=name,
                        bound="ai", note="adequate intake not mandatory; nothing to raise"))
                    continue
                new_ai = nut.ai + nut.ai * rho
                note = None
                if nut.mi is not None and new_ai > nut.mi:
                    new_ai = nut.mi
                    note = "raised adequate intake clamped to the maximum intake"
                adjusted[name] = replace(nut, ai=new_ai)
                provenance.append(Adjustment(analyte=analyte, predicted=pe, branch=branch,
                                             nutrient=name, bound="ai",
                                             old=nut.ai, new=new_ai, note=note))

    out = [adjusted[n.nutrient] for n in mandatory_nutrients]
    return OptimizedRequirements(nutrients=out, provenance=provenance, rho=rho)
