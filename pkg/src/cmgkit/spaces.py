"""Declarative catalog entries: build (metric, germ) pairs from config dicts."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from . import catalog, germs
from .geometry import MetricChart
from .germs import GermSpec

KINDS = ("euclidean", "sphere", "hyperbolic", "revolution", "product", "conformal_perturbation")
MAX_PRODUCT_DIM = 6


class UnknownEntryError(LookupError):
    """A space or germ name that is neither a config entry nor a known shorthand."""


@dataclass(frozen=True)
class CatalogEntry:
    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise UnknownEntryError(f"unknown catalog kind {self.kind!r}")
        if self.params.get("bump", "saddle") not in catalog.BUMPS:
            raise UnknownEntryError(f"unknown bump {self.params['bump']!r}")
        if self.kind == "product" and len(self.params.get("factors", ())) != 2:
            raise UnknownEntryError("product entries need exactly two factors")
        c = self.params.get("c", 1.0)
        if self.kind in ("sphere", "hyperbolic") and not float(c) > 0:
            raise ValueError("c must be positive")


@dataclass
class Space:
    metric: MetricChart
    germ: Optional[GermSpec]  # the natural conformal germ, when the space has one
    entry: CatalogEntry


def build(entry: CatalogEntry, entries: dict | None = None) -> Space:
    entries = entries or {}
    p = entry.params
    n = int(p.get("n", 3))
    c = float(p.get("c", 1.0))
    if entry.kind in ("euclidean", "sphere", "hyperbolic"):
        m, f = germs.model_germ(entry.kind, n, c) if n >= 2 else (catalog.euclidean(n), None)
        return Space(m, f, entry)
    if entry.kind == "revolution":
        prof = catalog.parse_profile(str(p.get("phi", "cubic(1)")))
        m, f = germs.revolution_germ(prof)
        return Space(m, f, entry)
    if entry.kind == "product":
        a, b = (resolve(ref, entries, c=c).metric for ref in p["factors"])
        if a.dim + b.dim > MAX_PRODUCT_DIM:
            raise ValueError(f"product dimension {a.dim + b.dim} exceeds {MAX_PRODUCT_DIM}")
        return Space(catalog.product(a, b), None, entry)
    base = resolve(p.get("base", "sphere"), entries, n=n, c=c)
    m = catalog.conformal_perturbation(base.metric, float(p.get("eps", 0.1)), p.get("bump", "saddle"))
    return Space(m, base.germ, entry)


def short_entry(spec: str, n: int = 3, c: float = 1.0, eps: float = 0.1, bump: str = "saddle") -> CatalogEntry:
    """Entry from a command-line shorthand such as ``sphere`` or ``product:s2xs2``."""
    if spec in ("euclidean", "sphere", "hyperbolic"):
        return CatalogEntry(spec, {"n": n, "c": c})
    if spec.startswith("revolution"):
        phi = spec.split(":", 1)[1] if ":" in spec else "cubic(1)"
        return CatalogEntry("revolution", {"phi": phi})
    if spec == "product:s2xs2":
        return CatalogEntry("product", {"factors": ["s2", "s2"], "c": c})
    if spec == "product:s2xr":
        return CatalogEntry("product", {"factors": ["s2", "r1"], "c": c})
    if spec in ("s2", "r1"):
        return CatalogEntry("sphere", {"n": 2, "c": c}) if spec == "s2" else CatalogEntry("euclidean", {"n": 1})
    if spec == "perturbed-sphere":
        return CatalogEntry("conformal_perturbation", {"base": "sphere", "n": n, "c": c, "eps": eps, "bump": bump})
    raise UnknownEntryError(f"unknown space {spec!r}")


def resolve(name: str, entries: dict | None = None, **kw) -> Space:
    entries = entries or {}
    if name in entries:
        e = entries[name]
        if isinstance(e, CatalogEntry):
            entry = e
        elif isinstance(e, dict) and "kind" in e:
            entry = CatalogEntry(e["kind"], {k: v for k, v in e.items() if k != "kind"})
        else:
            raise UnknownEntryError(f"space entry {name!r} needs a 'kind'")
        return build(entry, entries)
    return build(short_entry(name, **kw), entries)


def germ_for(space: Space, name: str) -> GermSpec:
    """``model`` (the space's own germ), ``saddle2d``, ``morse:k``; a leading ``-`` negates."""
    if name.startswith("-"):
        return -germ_for(space, name[1:])
    n = space.metric.dim
    if name == "model":
        if space.germ is None:
            raise ValueError(f"{space.metric.name} has no catalog germ")
        return space.germ
    if name == "saddle2d":
        if n != 2:
            raise ValueError("saddle2d needs a 2-dimensional space")
        return germs.quadratic_germ([1.0, -1.0])
    if name.startswith("morse:"):
        k = name.split(":", 1)[1]
        if not k.isdigit():
            raise UnknownEntryError(f"morse germ needs an integer index, got {name!r}")
        return germs.morse_germ(n, int(k))
    raise UnknownEntryError(f"unknown germ {name!r}")
