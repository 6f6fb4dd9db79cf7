"""Core data model: banks, exposure matrices, staged financial networks.

Conventions used throughout the package:

* The exposure matrix entry ``(i, j)`` is the amount lender ``i`` is owed by
  borrower ``j``; it is ``i``'s interbank asset and ``j``'s interbank
  liability.  Interbank assets are therefore row sums and interbank
  liabilities column sums.
* Bank order in ``FinancialNetwork.banks`` is the canonical index order for
  every matrix, vector and layout derived from the network.
* Networks are immutable after construction; simulation stages produce new
  snapshots (``FN_o -> FN_s -> FN_i -> FN_is``) instead of mutating.
"""

from __future__ import annotations

import io
import json
import csv
from dataclasses import dataclass, field, replace

import numpy as np
from numpy.typing import NDArray

STAGES = ("FN_o", "FN_s", "FN_i", "FN_is")

FORMAT_VERSION = 1


@dataclass(frozen=True)
class Bank:
    """One bank's balance-sheet attributes.

    ``interbank_assets``/``interbank_liabilities`` are derived from the
    exposure matrix and kept redundantly for inspection; ``capital_buffer``
    must be non-negative at load time but may go negative in later stages to
    record insolvency depth.
    """

    id: str
    external_assets: float
    interbank_assets: float
    interbank_liabilities: float
    capital_buffer: float
    weight: float


@dataclass(frozen=True)
class FinancialNetwork:
    """Banks plus a dense non-negative exposure matrix at one pipeline stage."""

    banks: tuple[Bank, ...]
    exposures: NDArray[np.float64]
    stage_tag: str = "FN_o"

    def __post_init__(self) -> None:
        exposures = np.ascontiguousarray(self.exposures, dtype=np.float64)
        if exposures.ndim != 2 or exposures.shape[0] != exposures.shape[1]:
            raise ValueError(f"exposure matrix must be square, got {exposures.shape}")
        if exposures.shape[0] != len(self.banks):
            raise ValueError(
                f"{len(self.banks)} banks but {exposures.shape[0]}x{exposures.shape[1]} matrix"
            )
        if self.stage_tag not in STAGES:
            raise ValueError(f"unknown stage tag {self.stage_tag!r}")
        exposures = exposures.copy()
        exposures.setflags(write=False)
        object.__setattr__(self, "exposures", exposures)
        object.__setattr__(self, "banks", tuple(self.banks))

    @property
    def n(self) -> int:
        return len(self.banks)

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(b.id for b in self.banks)

    def index_of(self, bank_id: str) -> int:
        try:
            return self.ids.index(bank_id)
        except ValueError:
            raise KeyError(f"unknown bank id {bank_id!r}") from None

    def buffers(self) -> NDArray[np.float64]:
        return np.array([b.capital_buffer for b in self.banks])

    def weights(self) -> NDArray[np.float64]:
        return np.array([b.weight for b in self.banks])

    def external_assets(self) -> NDArray[np.float64]:
        return np.array([b.external_assets for b in self.banks])

    def with_stage(self, stage_tag: str) -> "FinancialNetwork":
        return replace(self, stage_tag=stage_tag)


@dataclass(frozen=True)
class Violation:
    code: str
    message: str


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)

    def add(self, code: str, message: str) -> None:
        self.violations.append(Violation(code, message))

    @property
    def ok(self) -> bool:
        return not self.violations

    def __iter__(self):
        return iter(self.violations)

    def __len__(self) -> int:
        return len(self.violations)


def validate_network(net: FinancialNetwork) -> ValidationReport:
    """Check structural invariants; reports violations, never raises.

    Covers negative exposures, nonzero diagonal, duplicate ids, weight-sum
    drift and stored-vs-recomputed marginal mismatches.
    """
    report = ValidationReport()
    e = net.exposures
    neg = np.argwhere(e < 0)
    for i, j in neg:
        report.add("negative_entry", f"negative exposure {e[i, j]} at ({i},{j})")
    diag = np.flatnonzero(np.diagonal(e) != 0)
    for i in diag:
        report.add("nonzero_diagonal", f"nonzero diagonal at ({i},{i})")
    seen: set[str] = set()
    for b in net.banks:
        if b.id in seen:
            report.add("duplicate_id", f"duplicate bank id {b.id!r}")
        seen.add(b.id)
    if net.n:
        wsum = float(sum(b.weight for b in net.banks))
        if abs(wsum - 1.0) > 1e-9:
            report.add("weight_sum", f"weights sum {wsum:.12g} != 1")
    row = e.sum(axis=1)
    col = e.sum(axis=0)
    for i, b in enumerate(net.banks):
        scale = max(abs(row[i]), abs(b.interbank_assets), 1.0)
        if abs(row[i] - b.interbank_assets) > 1e-9 * scale:
            report.add(
                "marginal_mismatch",
                f"bank {b.id}: stored interbank_assets {b.interbank_assets} != row sum {row[i]}",
            )
        scale = max(abs(col[i]), abs(b.interbank_liabilities), 1.0)
        if abs(col[i] - b.interbank_liabilities) > 1e-9 * scale:
            report.add(
                "marginal_mismatch",
                f"bank {b.id}: stored interbank_liabilities {b.interbank_liabilities} != column sum {col[i]}",
            )
    return report


def recompute_marginals(net: FinancialNetwork) -> FinancialNetwork:
    """Return a copy with interbank assets/liabilities refreshed from the matrix."""
    row = net.exposures.sum(axis=1)
    col = net.exposures.sum(axis=0)
    banks = tuple(
        replace(b, interbank_assets=float(row[i]), interbank_liabilities=float(col[i]))
        for i, b in enumerate(net.banks)
    )
    return replace(net, banks=banks)


def degree_adjacency(net: FinancialNetwork, threshold: float = 0.0) -> NDArray[np.int_]:
    """Binary adjacency: 1 where exposure exceeds ``threshold``."""
    return (net.exposures > threshold).astype(np.int_)


def make_network(
    ids: list[str],
    exposures: NDArray[np.float64],
    external_assets: NDArray[np.float64] | list[float],
    capital_buffer: NDArray[np.float64] | list[float],
    weight: NDArray[np.float64] | list[float] | None = None,
    stage_tag: str = "FN_o",
) -> FinancialNetwork:
    """Assemble a network, deriving marginals and normalizing weights."""
    exposures = np.asarray(exposures, dtype=np.float64)
    n = len(ids)
    row = exposures.sum(axis=1)
    col = exposures.sum(axis=0)
    external_assets = np.asarray(external_assets, dtype=np.float64)
    capital_buffer = np.asarray(capital_buffer, dtype=np.float64)
    if weight is None:
        total = external_assets + row
        weight = total / total.sum() if total.sum() > 0 else np.full(n, 1.0 / n)
    weight = np.asarray(weight, dtype=np.float64)
    banks = tuple(
        Bank(
            id=ids[i],
            external_assets=float(external_assets[i]),
            interbank_assets=float(row[i]),
            interbank_liabilities=float(col[i]),
            capital_buffer=float(capital_buffer[i]),
            weight=float(weight[i]),
        )
        for i in range(n)
    )
    return FinancialNetwork(banks=banks, exposures=exposures, stage_tag=stage_tag)


# ---------------------------------------------------------------------------
# Canonical file format
# ---------------------------------------------------------------------------

def network_to_document(net: FinancialNetwork) -> dict:
    """Canonical document form: versioned, sparse triplets sorted by (from, to)."""
    triplets = []
    e = net.exposures
    ids = net.ids
    for i in range(net.n):
        for j in range(net.n):
            if e[i, j] != 0.0:
                triplets.append({"from": ids[i], "to": ids[j], "amount": float(e[i, j])})
    return {
        "version": FORMAT_VERSION,
        "stage": net.stage_tag,
        "banks": [
            {
                "id": b.id,
                "external_assets": b.external_assets,
                "capital_buffer": b.capital_buffer,
                "weight": b.weight,
            }
            for b in net.banks
        ],
        "exposures": triplets,
    }


def network_from_document(doc: dict) -> FinancialNetwork:
    if doc.get("version") != FORMAT_VERSION:
        raise ValueError(f"unsupported network document version {doc.get('version')!r}")
    bank_rows = doc["banks"]
    ids = [b["id"] for b in bank_rows]
    index = {bid: i for i, bid in enumerate(ids)}
    n = len(ids)
    exposures = np.zeros((n, n))
    for t in doc["exposures"]:
        if t["from"] not in index or t["to"] not in index:
            raise ValueError(f"exposure references unknown bank {t['from']!r}->{t['to']!r}")
        exposures[index[t["from"]], index[t["to"]]] = float(t["amount"])
    return make_network(
        ids=ids,
        exposures=exposures,
        external_assets=[b["external_assets"] for b in bank_rows],
        capital_buffer=[b["capital_buffer"] for b in bank_rows],
        weight=[b["weight"] for b in bank_rows],
        stage_tag=doc.get("stage", "FN_o"),
    )


def dumps_network(net: FinancialNetwork) -> str:
    """Serialize to canonical UTF-8 JSON (stable field order, repr floats)."""
    return json.dumps(network_to_document(net), indent=2) + "\n"


def loads_network(text: str) -> FinancialNetwork:
    return network_from_document(json.loads(text))


def save_network(net: FinancialNetwork, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_network(net))


def load_network(path: str) -> FinancialNetwork:
    with open(path, "r", encoding="utf-8") as fh:
        return loads_network(fh.read())


def network_to_csv(net: FinancialNetwork) -> str:
    """Edge-list export with a ``from,to,amount`` header for spreadsheet use."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["from", "to", "amount"])
    ids = net.ids
    e = net.exposures
    for i in range(net.n):
        for j in range(net.n):
            if e[i, j] != 0.0:
                writer.writerow([ids[i], ids[j], repr(float(e[i, j]))])
    return buf.getvalue()
