"""Scenario files: JSON loading, validation, defaults and link-budget resolution.

The schema lives in ``airis/schema/scenario.schema.json``.  Positions are in
normalized scene units scaled by ``unit_m`` metres; powers are in dBm.
"""

from dataclasses import dataclass, field, fields, replace
import copy
import json
import math
from importlib import resources

import jsonschema
import numpy as np

from .analytic import BlockageModel, LinkBudget
from .geometry import (
    G2A_A2G,
    RIS_REFLECTED,
    Position3D,
    k2_from_calibration,
    path_loss_gain,
    rician_k_factor,
    to_spherical,
)
from .interference import Interferer, InterfererSet


class ScenarioError(ValueError):
    """Schema or physical-consistency violation in a scenario."""


DEFAULT_POSITIONS = {
    "S": [0.0, 0.0, 0.0],
    "U": [0.5, 0.5, 1.0],
    "D": [0.5, 0.5, 0.0],
    "R": [1.0, 1.0, 0.0],
    "aerial_interferers": [[0.2, 0.2, 0.6], [0.4, 0.8, 0.4]],
    "ground_interferers": [[0.4, 0.4, 0.0], [0.4, 0.8, 0.0]],
}

DEFAULTS = {
    "unit_m": 100.0,
    "M": 2,
    "N": 16,
    "p_s_dbm": 23.0,
    "p_u_dbm": 23.0,
    "p_aerial_dbm": 0.0,
    "p_ground_dbm": 0.0,
    "noise_density_dbm_hz": -174.0,
    "bandwidth_hz": 10e6,
    "carrier_hz": 3e9,
    "velocity": [0.0, 0.0, 0.0],
    "kappa": 1.0,
    "k1_db": 0.0,
    "k_pi_db": 5.0,
    "g_t_dbi": 0.0,
    "g_r_dbi": 0.0,
    "blockage": {"beta": 0.0},
    "psi_su": 4,
    "psi_a2g": 4,
    "a2g_fit_order": None,
    "a2g_mode": "conditioned",
    "strict_paper_alpha": False,
    "rate_se": 0.5,
}


def _schema():
    text = resources.files("airis").joinpath("schema/scenario.schema.json").read_text()
    return json.loads(text)


def db_to_linear(db):
    return 10.0 ** (np.asarray(db, dtype=float) / 10.0)


def _per_node(value, count, name):
    vals = np.broadcast_to(np.asarray(value, dtype=float), (count,)) if np.ndim(value) == 0 \
        else np.asarray(value, dtype=float)
    if vals.shape != (count,):
        raise ScenarioError(f"{name}: expected {count} values, got {vals.shape[0]}")
    return vals


@dataclass(frozen=True)
class ScenarioConfig:
    """Fully resolved scenario (all defaults applied)."""

    S: Position3D
    U: Position3D
    D: Position3D
    R: Position3D
    aerial_interferers: tuple
    ground_interferers: tuple
    unit_m: float
    M: int
    N: int
    p_s_dbm: float
    p_u_dbm: float
    p_aerial_dbm: tuple
    p_ground_dbm: tuple
    noise_density_dbm_hz: float
    bandwidth_hz: float
    carrier_hz: float
    velocity: tuple
    kappa: float
    k1_db: float
    k_pi_db: float
    g_t_dbi: float
    g_r_dbi: float
    blockage: dict
    psi_su: int
    psi_a2g: int
    a2g_fit_order: int
    a2g_mode: str
    strict_paper_alpha: bool
    rate_se: float
    sweep: dict = field(default_factory=dict)

    @property
    def noise_dbm(self):
        """Receiver noise power ``N0 + 10 log10(B)`` in dBm (same at U and D)."""
        return self.noise_density_dbm_hz + 10.0 * math.log10(self.bandwidth_hz)

    @property
    def k2(self):
        return k2_from_calibration(db_to_linear(self.k1_db), db_to_linear(self.k_pi_db))

    def k_factor(self, a, b):
        theta = to_spherical(a - b).theta
        return rician_k_factor(theta, float(db_to_linear(self.k1_db)), self.k2)

    def gain(self, a, b, kind=G2A_A2G):
        d = (a - b).norm() * self.unit_m
        return path_loss_gain(kind, d, self.carrier_hz, self.g_t_dbi, self.g_r_dbi)

    def with_updates(self, **changes):
        return replace(self, **changes)

    def to_dict(self):
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, Position3D):
                v = [v.x, v.y, v.z]
            elif f.name in ("aerial_interferers", "ground_interferers"):
                v = [[p.x, p.y, p.z] for p in v]
            elif isinstance(v, tuple):
                v = list(v)
            out[f.name] = v
        return out


def resolve_scenario(raw):
    """Validate a scenario mapping against the schema and apply defaults."""
    try:
        jsonschema.validate(raw, _schema())
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ScenarioError(f"invalid field {where}: {exc.message}") from None
    data = copy.deepcopy(DEFAULTS)
    data.update({k: copy.deepcopy(v) for k, v in raw.items() if k != "positions"})
    pos = copy.deepcopy(DEFAULT_POSITIONS)
    pos.update(raw.get("positions", {}))
    if "N_x" in raw or "N_y" in raw:
        n = raw.get("N_x", 1) * raw.get("N_y", 1)
        if "N" in raw and raw["N"] != n:
            raise ScenarioError(f"N={raw['N']} disagrees with N_x*N_y={n}")
        data["N"] = n
    data.pop("N_x", None)
    data.pop("N_y", None)
    if not 0.0 < data["kappa"] <= 1.0:
        raise ScenarioError(f"kappa must lie in (0, 1], got {data['kappa']}")
    blk = data["blockage"]
    if "transition" not in blk and "beta" in blk and "tau_norm" in blk:
        raise ScenarioError("blockage: give beta or tau_norm, not both")
    if "transition" in blk and not ("beta" in blk or "tau_norm" in blk):
        raise ScenarioError("blockage: a transition matrix needs beta or tau_norm for the threshold")
    if not blk:
        raise ScenarioError("blockage: empty specification")
    aerial = tuple(Position3D.of(p) for p in pos["aerial_interferers"])
    ground = tuple(Position3D.of(p) for p in pos["ground_interferers"])
    data["p_aerial_dbm"] = tuple(_per_node(data["p_aerial_dbm"], len(aerial), "p_aerial_dbm"))
    data["p_ground_dbm"] = tuple(_per_node(data["p_ground_dbm"], len(ground), "p_ground_dbm"))
    data["velocity"] = tuple(float(v) for v in data["velocity"])
    data.setdefault("sweep", {})
    return ScenarioConfig(
        S=Position3D.of(pos["S"]), U=Position3D.of(pos["U"]),
        D=Position3D.of(pos["D"]), R=Position3D.of(pos["R"]),
        aerial_interferers=aerial, ground_interferers=ground, **data,
    )


def load_scenario(path):
    """Read and resolve a JSON scenario file."""
    with open(path, encoding="utf-8") as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ScenarioError(f"{path}: not valid JSON ({exc})") from None
    if not isinstance(raw, dict):
        raise ScenarioError(f"{path}: top level must be an object")
    return resolve_scenario(raw)


def interferers_at(cfg, node):
    """Mean INRs and K-factors of all interferers at ``node`` (a Position3D)."""
    noise_mw = float(db_to_linear(cfg.noise_dbm))

    def build(points, powers):
        out = []
        for p, dbm in zip(points, powers):
            inr = float(db_to_linear(dbm)) * cfg.gain(p, node) / noise_mw
            out.append(Interferer(cfg.k_factor(p, node), inr))
        return tuple(out)

    return build(cfg.aerial_interferers, cfg.p_aerial_dbm), build(cfg.ground_interferers, cfg.p_ground_dbm)


def build_link_budget(cfg):
    """Resolve mean SNRs, K-factors and interferer sets of both hops."""
    noise_mw = float(db_to_linear(cfg.noise_dbm))
    p_s = float(db_to_linear(cfg.p_s_dbm))
    p_u = float(db_to_linear(cfg.p_u_dbm))
    l_su = cfg.gain(cfg.S, cfg.U)
    l_ur = cfg.gain(cfg.U, cfg.R)
    l_rd = cfg.gain(cfg.R, cfg.D, RIS_REFLECTED)
    l_ud = cfg.gain(cfg.U, cfg.D)
    au, gu = interferers_at(cfg, cfg.U)
    ad, gd = interferers_at(cfg, cfg.D)
    return LinkBudget(
        M=cfg.M, N=cfg.N,
        k_su=cfg.k_factor(cfg.S, cfg.U),
        g2a_mean_snr=p_s * l_su / noise_mw,
        k_ur=cfg.k_factor(cfg.U, cfg.R),
        k_rd=cfg.k_factor(cfg.R, cfg.D),
        k_ud=cfg.k_factor(cfg.U, cfg.D),
        cas_mean_snr=p_u * l_ur * l_rd * cfg.kappa ** 2 / noise_mw,
        dir_mean_snr=p_u * l_ud / noise_mw,
        gain_ud=l_ud,
        interferers_u=InterfererSet(au, gu, node="U"),
        interferers_d=InterfererSet(ad, gd, node="D"),
        psi_su=cfg.psi_su, psi_a2g=cfg.psi_a2g,
        a2g_fit_order=cfg.a2g_fit_order, a2g_mode=cfg.a2g_mode,
        strict_paper_alpha=cfg.strict_paper_alpha,
    )


def build_blockage(cfg, budget):
    """Blockage model from the scenario's ``beta``, ``tau_norm`` and/or ``transition``."""
    blk = cfg.blockage
    k, lam = budget.k_ud, budget.lambda_ud
    if "tau_norm" in blk:
        tau = blk["tau_norm"] * budget.gain_ud
    else:
        tau = BlockageModel.from_beta(blk["beta"], k, lam).tau
    if "transition" in blk:
        try:
            return BlockageModel.from_transition(blk["transition"], tau, k, lam)
        except ValueError as exc:
            raise ScenarioError(f"blockage.transition: {exc}") from None
    if "tau_norm" in blk:
        return BlockageModel.from_tau(tau, k, lam)
    return BlockageModel.from_beta(blk["beta"], k, lam)
