"""Built-in benchmark problems.

``peaks``                 Peaks function on [-3, 3]^2
``peaks-ann``             min of a 2-10-8-1 tanh surrogate on [-3, 3]^2
``peaks-ann-err``         min ANN(x) - peaks(x)
``alpine<d>``             min -prod_i sqrt(x_i) sin(x_i) on [3, 9]^d (Alpine02, maximised)
``alpine-ann-<d>``        max of a d-60-1 surrogate, posed as min -ANN(x)
``alpine-ann-err-<d>``    min alpine02(x) - ANN(x)
``stybtang<d>``           Styblinski-Tang, 1/2 sum x_i^4 - 16 x_i^2 + 5 x_i on [-5, 5]^d
``stybtang2-lin``         stybtang2 with x1 + x2 <= 0
``stybtang2-eq``          stybtang2 with x1*x2 - 1 == 0
``kinetic-ode``           not shipped (needs external data)

Surrogate weights default to the seeded random stand-ins under ``data/``;
any compatible weights file can be passed instead.
"""

from __future__ import annotations

import os
import re

from .dag import Problem
from .parser import parse_problem

DATA_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)), "data")

PEAKS = (
    "3*(1-x1)^2*exp(-x1^2-(x2+1)^2) - 10*(x1/5 - x1^3 - x2^5)*exp(-x1^2-x2^2)"
    " - exp(-(x1+1)^2-x2^2)/3"
)
ALPINE_DIMS = range(2, 7)
STYBTANG_DIMS = range(1, 11)


class UnknownProblem(ValueError):
    pass


def _vars(d: int, lo: float, hi: float) -> str:
    return "\n".join(f"var x{i} in [{lo}, {hi}]" for i in range(1, d + 1))


def _alpine(d: int) -> str:
    return "*".join(f"sqrt(x{i})*sin(x{i})" for i in range(1, d + 1))


def _stybtang(d: int) -> str:
    terms = " + ".join(f"(x{i}^4 - 16*x{i}^2 + 5*x{i})" for i in range(1, d + 1))
    return f"0.5*({terms})"


def _ann_call(path: str, d: int) -> str:
    args = ", ".join(f"x{i}" for i in range(1, d + 1))
    return f'ann net = mlp("{path}", {args})'


def default_weights(name: str) -> str:
    m = re.fullmatch(r"alpine-ann(?:-err)?-(\d+)", name)
    if m:
        return os.path.join(DATA_DIR, f"alpine{m.group(1)}_ann.json")
    return os.path.join(DATA_DIR, "peaks_ann.json")


def builtin_names() -> list[str]:
    names = ["peaks", "peaks-ann", "peaks-ann-err"]
    names += [f"alpine{d}" for d in ALPINE_DIMS]
    names += [f"alpine-ann-{d}" for d in ALPINE_DIMS]
    names += [f"alpine-ann-err-{d}" for d in ALPINE_DIMS]
    names += [f"stybtang{d}" for d in STYBTANG_DIMS]
    names += ["stybtang2-lin", "stybtang2-eq", "kinetic-ode"]
    return names


def builtin_source(name: str, weights: str | None = None) -> str:
    """Problem-language source of a built-in problem."""
    if name == "peaks":
        return f"{_vars(2, -3, 3)}\nobj: {PEAKS}\n"
    if name in ("peaks-ann", "peaks-ann-err"):
        path = _weights(name, weights)
        obj = "net" if name == "peaks-ann" else f"net - ({PEAKS})"
        return f"{_vars(2, -3, 3)}\n{_ann_call(path, 2)}\nobj: {obj}\n"
    m = re.fullmatch(r"alpine(\d+)", name)
    if m and int(m.group(1)) in ALPINE_DIMS:
        d = int(m.group(1))
        return f"{_vars(d, 3, 9)}\nobj: -({_alpine(d)})\n"
    m = re.fullmatch(r"alpine-ann(-err)?-(\d+)", name)
    if m and int(m.group(2)) in ALPINE_DIMS:
        d = int(m.group(2))
        path = _weights(name, weights)
        obj = f"({_alpine(d)}) - net" if m.group(1) else "-net"
        return f"{_vars(d, 3, 9)}\n{_ann_call(path, d)}\nobj: {obj}\n"
    m = re.fullmatch(r"stybtang-?(\d+)", name)
    if m and int(m.group(1)) >= 1:
        d = int(m.group(1))
        return f"{_vars(d, -5, 5)}\nobj: {_stybtang(d)}\n"
    if name == "stybtang2-lin":
        return f"{_vars(2, -5, 5)}\nobj: {_stybtang(2)}\ncon lin: x1 + x2 <= 0\n"
    if name == "stybtang2-eq":
        return f"{_vars(2, -5, 5)}\nobj: {_stybtang(2)}\ncon hyp: x1*x2 - 1 == 0\n"
    if name == "kinetic-ode":
        raise UnknownProblem(
            "kinetic-ode is not shipped: the kinetic ODE parameter-estimation problem needs "
            "measurement data and model details from Mitsos, Chachuat & Barton (2009), "
            "'McCormick-based relaxations of algorithms', SIAM J. Optim. 20(2)"
        )
    raise UnknownProblem(f"unknown built-in problem {name!r} (see 'subdiv list')")


def _weights(name: str, weights: str | None) -> str:
    path = weights or default_weights(name)
    if not os.path.exists(path):
        raise UnknownProblem(f"{name}: missing weights file {path}")
    return os.path.abspath(path).replace("\\", "/")


def builtin_problem(name: str, weights: str | None = None) -> Problem:
    return parse_problem(builtin_source(name, weights), name=name)


def write_standin_weights(directory: str = DATA_DIR) -> list[str]:
    """Regenerate the shipped stand-in surrogate weights."""
    from .mlp import save_ann_weights, standin_mlp

    os.makedirs(directory, exist_ok=True)
    out = []
    path = os.path.join(directory, "peaks_ann.json")
    save_ann_weights(path, standin_mlp([2, 10, 8, 1], seed=2024, box=[(-3, 3)] * 2))
    out.append(path)
    for d in ALPINE_DIMS:
        path = os.path.join(directory, f"alpine{d}_ann.json")
        save_ann_weights(path, standin_mlp([d, 60, 1], seed=2024 + d, box=[(3, 9)] * d))
        out.append(path)
    return out
