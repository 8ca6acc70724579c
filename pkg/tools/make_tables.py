"""Regenerate the bundled ``.thy`` tables in ``src/gptc/data``.

Run from the repository root: ``python tools/make_tables.py``.
"""
import json
from pathlib import Path

import numpy as np

OUT = Path(__file__).resolve().parent.parent / "src" / "gptc" / "data"


def _r(x):
    return np.round(np.asarray(x, dtype=float), 15).tolist()


def gbit_square():
    # coordinates (p_x+, p_z+, 1); pure states are the corners of the unit square
    corners = {f"c{x}{z}": [x, z, 1] for x in (0, 1) for z in (0, 1)}
    effects = {"x+": [1, 0, 0], "x-": [-1, 0, 1], "z+": [0, 1, 0], "z-": [0, -1, 1],
               "unit": [0, 0, 1]}
    msets = []
    for hi in (0, 1):
        for lo in (0, 1):
            msets.append({"states": [f"c1{hi}", f"c0{lo}"], "effects": ["x+", "x-"]})
            msets.append({"states": [f"c{hi}1", f"c{lo}0"], "effects": ["z+", "z-"]})
    transforms = {}
    # dihedral group of the square acting on (p_x, p_z) about (1/2, 1/2)
    for k in range(4):
        c, s = np.round(np.cos(k * np.pi / 2)), np.round(np.sin(k * np.pi / 2))
        for flip in (1, -1):
            L = np.array([[c, -s], [s, c]]) @ np.diag([1, flip])
            T = np.eye(3)
            T[:2, :2] = L
            T[:2, 2] = 0.5 - L @ [0.5, 0.5]
            transforms[f"r{k}{'f' if flip < 0 else ''}"] = _r(T)
    return {
        "name": "gbit-square",
        "types": [{"label": "a", "N": 2, "K": 3}],
        "states": {"a": corners},
        "effects": {"a": effects},
        "transforms": {"a": transforms},
        "maximal_sets": {"a": msets},
        "pure_states": {"a": sorted(corners)},
        "unit_effect": {"a": "unit"},
    }


def classical_bit():
    return {
        "name": "classical-bit",
        "types": [{"label": "a", "N": 2, "K": 2}],
        "states": {"a": {"0": [1, 0], "1": [0, 1]}},
        "effects": {"a": {"0": [1, 0], "1": [0, 1], "unit": [1, 1]}},
        "transforms": {"a": {"id": [[1, 0], [0, 1]], "flip": [[0, 1], [1, 0]]}},
        "maximal_sets": {"a": [{"states": ["0", "1"], "effects": ["0", "1"]},
                               {"states": ["1", "0"], "effects": ["1", "0"]}]},
        "unit_effect": {"a": "unit"},
    }


# -- rebit: real qubit density matrices, fiducials (x+, z+, z-) ---------------

X = np.array([[0, 1], [1, 0]], float)
Z = np.diag([1.0, -1.0])
I2 = np.eye(2)
REBIT_F = np.array([(I2 + X) / 2, (I2 + Z) / 2, (I2 - Z) / 2])


def _sym_basis(n):
    out = []
    for i in range(n):
        for j in range(i, n):
            m = np.zeros((n, n))
            m[i, j] = m[j, i] = 1
            out.append(m)
    return out


def _duals(ops):
    A = np.array([o.reshape(-1) for o in ops])
    # dual operators in the real symmetric span: D = pinv(A)^T rows
    D = np.linalg.pinv(A).T
    return [d.reshape(ops[0].shape) for d in D]


REBIT_D = _duals(list(REBIT_F))


def _rebit_state(theta):
    v = np.array([np.cos(theta / 2), np.sin(theta / 2)])
    rho = np.outer(v, v)
    return [float(np.trace(F @ rho)) for F in REBIT_F], rho


def rebit():
    states, effects, msets = {}, {}, []
    for k in range(8):
        theta = k * np.pi / 4
        vec, rho = _rebit_state(theta)
        states[f"s{k}"] = _r(vec)
        effects[f"e{k}"] = _r([np.trace(rho @ D) for D in REBIT_D])
    for k in range(4):
        msets.append({"states": [f"s{k}", f"s{k + 4}"], "effects": [f"e{k}", f"e{k + 4}"]})
    effects["unit"] = _r([np.trace(I2 @ D) for D in REBIT_D])
    transforms = {}
    for k in range(8):
        a = k * np.pi / 4
        R = np.array([[np.cos(a / 2), -np.sin(a / 2)], [np.sin(a / 2), np.cos(a / 2)]])
        T = [[np.trace(F @ R @ D @ R.T) for D in REBIT_D] for F in REBIT_F]
        transforms[f"rot{k}"] = _r(T)

    # two rebits: real symmetric 4x4 operators, fiducials are rank-one projectors
    vecs = []
    for i in range(4):
        for j in range(i, 4):
            v = np.zeros(4)
            v[i] += 1
            v[j] += 1
            vecs.append(v / np.linalg.norm(v))
    G = [np.outer(v, v) for v in vecs]
    GD = _duals(G)
    product_states = [[np.trace(g @ np.kron(Da, Db)) for Da in REBIT_D for Db in REBIT_D]
                      for g in G]
    product_effects = [[np.trace(np.kron(Fa, Fb) @ d) for d in GD]
                       for Fa in REBIT_F for Fb in REBIT_F]
    return {
        "name": "rebit",
        "types": [{"label": "a", "N": 2, "K": 3}],
        "states": {"a": states},
        "effects": {"a": effects},
        "transforms": {"a": transforms},
        "maximal_sets": {"a": msets},
        "unit_effect": {"a": "unit"},
        "composites": [{"a": "a", "b": "a", "label": "aa", "N": 4, "K": 10,
                        "product_states": _r(product_states),
                        "product_effects": _r(product_effects)}],
    }


if __name__ == "__main__":
    OUT.mkdir(parents=True, exist_ok=True)
    for name, build in [("gbit-square", gbit_square), ("classical-bit", classical_bit),
                        ("rebit", rebit)]:
        (OUT / f"{name}.thy").write_text(json.dumps(build(), indent=1) + "\n")
        print("wrote", OUT / f"{name}.thy")
