"""Registry of runnable experiments."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

from . import deterministic, network_mc, orrw_mc


@dataclass(frozen=True)
class CatalogEntry:
    name: str
    run: Callable
    anchor: str
    statement: str
    params: tuple
    kind: str

    def as_dict(self) -> dict:
        return {"name": self.name, "anchor": self.anchor, "statement": self.statement,
                "params": list(self.params), "kind": self.kind}


_ENTRIES = (
    CatalogEntry("balance", deterministic.exp_balance, "exit-edge balance",
                 "|P(f1)-P(f2)| <= d_A(f1-, f2-)/(1+delta) for every pair of exit edges",
                 ("fiber", "delta", "samples", "seed"), "deterministic"),
    CatalogEntry("exit_oracle", deterministic.exp_exit_oracle, "exit-edge law",
                 "electrical exit-edge law equals the absorbing-chain law",
                 ("fiber", "delta", "samples", "seed"), "deterministic"),
    CatalogEntry("current_crossings", network_mc.exp_current_crossings, "current as crossings",
                 "unit current i(x,y) = E[N_xy - N_yx] before absorption",
                 ("fiber", "samples", "reps", "seed"), "monte-carlo"),
    CatalogEntry("commute", deterministic.exp_commute, "commute time identity",
                 "E_a[H_z] + E_z[H_a] = R(a<->z) * sum of pi",
                 ("fiber", "samples", "seed"), "deterministic"),
    CatalogEntry("rayleigh_thomson", deterministic.exp_rayleigh_thomson, "Rayleigh and Thomson principles",
                 "raising conductances never lowers C_eff; the current minimises energy",
                 ("fiber", "samples", "seed"), "deterministic"),
    CatalogEntry("flow_decomposition", deterministic.exp_flow_decomposition, "two-sink flow decomposition",
                 "an acyclic flow to {b,z} splits into flows to b and to z with properties (a)-(e)",
                 ("fiber", "samples", "seed"), "deterministic"),
    CatalogEntry("shunt", deterministic.exp_shunt, "shunted-level hitting bound",
                 "P(hit b before z) <= 2|G|^2/(eta d^2)",
                 ("fiber", "d", "eta"), "deterministic"),
    CatalogEntry("local_time", network_mc.exp_local_time, "diffusive local-time bound",
                 "P(L_S^r < k) <= |G| sqrt(8k)/d and <= 3 exp(-d/(16|G| sqrt k))",
                 ("fiber", "d", "r", "k", "reps", "seed"), "monte-carlo"),
    CatalogEntry("hitfront", orrw_mc.exp_hitfront, "same-level hitting lemma",
                 "P_a(H_b <= 4^6 |G|^6) >= 1/2 for a, b on one level",
                 ("fiber", "horizon", "reps", "seed"), "monte-carlo"),
    CatalogEntry("outbound", network_mc.exp_outbound, "outbound exit bound",
                 "P_a(H_r < sigma) <= 5 exp(-(d^2/(1+delta))^(1/3)/(4^4 |G|^3))",
                 ("fiber", "delta", "d", "reps", "seed"), "monte-carlo"),
    CatalogEntry("exit_direction", network_mc.exp_exit_direction, "exit direction and fresh level",
                 "P_a(sigma < H_0) >= c d^(3/2)/(|G|^6 delta); P(exit at level d+1) <= C' |G|^5/d^(3/4)",
                 ("fiber", "delta", "d", "reps", "seed"), "monte-carlo"),
    CatalogEntry("dwall", orrw_mc.exp_dwall, "D-wall probability",
                 "P(x begins a D-wall | H_x < inf) >= 1/2 for D large, D^(3/2) <= delta <= D^5",
                 ("fiber", "delta", "D", "x", "reps", "seed"), "monte-carlo"),
    CatalogEntry("gamblers_ruin", orrw_mc.exp_gamblers_ruin, "reinforced gambler's ruin",
                 "P(H_2x < H_{x,0} | F_{H_x}) <= 2^-10; refined (1+eps)x variant",
                 ("fiber", "delta", "x", "alpha", "beta", "epsilon", "reps", "seed"), "monte-carlo"),
    CatalogEntry("martingale", orrw_mc.exp_martingale, "level-plus-reinforcement martingale",
                 "M_n = level + delta * signed fresh horizontal crossings has constant mean",
                 ("fiber", "delta", "horizon", "reps", "seed"), "monte-carlo"),
    CatalogEntry("shape", orrw_mc.exp_shape, "range shape",
                 "range at t(n) is an interval of radius n up to a sublinear overhang",
                 ("fiber", "delta", "reps", "seed"), "campaign"),
    CatalogEntry("return_times", orrw_mc.exp_return_times, "return times after right excursions",
                 "tau_{i+1} - tau_i^+ has finite moments; max levels grow geometrically",
                 ("fiber", "delta", "reps", "horizon", "seed"), "campaign"),
)

CATALOG = {e.name: e for e in _ENTRIES}


def get(name: str) -> CatalogEntry:
    try:
        return CATALOG[name]
    except KeyError:
        raise KeyError(f"unknown experiment {name!r}; try one of {', '.join(CATALOG)}") from None
