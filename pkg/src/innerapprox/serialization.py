"""Problem files, approximant/certificate JSON, canonical emission.

Floats are written with 17 significant digits so every double survives a
write/read cycle exactly; complex numbers are ``[re, im]`` pairs and
matrices are row-major lists of pairs.  Key order is fixed by the
builders, so serialize -> parse -> serialize is byte-identical.
"""

import json
import math
import os
import tempfile
from dataclasses import dataclass

import numpy as np

from ._linalg import TWO_PI, canonical_angle
from .approximants import (
    BoundedApproximation,
    Certificate,
    MatrixQuotient,
    QuotientApproximant,
    QuotientChain,
)
from .blaschke import FiniteBlaschke
from .errors import DomainError
from .potapov import ConjugatedDiagonalInner, to_potapov_form
from .synthesis import ScalarTarget, SynthesisConfig
from .unimodular import ArcPartition, ArcSet, StepFunction, StepUnimodular, quantize_range

FORMAT = "innerapprox/1"
KINDS = (
    "scalar_two_valued",
    "scalar_step",
    "matrix_two_valued",
    "matrix_step",
    "matrix_sampled",
    "bounded_step",
)


class ProblemError(DomainError):
    """A problem or artifact file is malformed."""


# canonical JSON


def _fmt_float(x):
    if not math.isfinite(x):
        raise ValueError(f"cannot serialize non-finite number {x}")
    s = format(x, ".17g")
    if s == "-0":
        s = "0"
    return s


def _is_leaf(x):
    return not isinstance(x, (dict, list, tuple))


def _emit(x, level, out):
    pad = "  " * level
    if isinstance(x, dict):
        if not x:
            out.append("{}")
            return
        out.append("{\n")
        items = list(x.items())
        for k, (key, val) in enumerate(items):
            out.append(f"{pad}  {json.dumps(str(key))}: ")
            _emit(val, level + 1, out)
            out.append(",\n" if k < len(items) - 1 else "\n")
        out.append(pad + "}")
    elif isinstance(x, (list, tuple)):
        pairs = all(isinstance(v, (list, tuple)) and all(map(_is_leaf, v)) for v in x)
        if all(map(_is_leaf, x)) or (pairs and len(x) <= 4):
            out.append(_inline(x))
            return
        out.append("[\n")
        for k, val in enumerate(x):
            out.append(pad + "  ")
            _emit(val, level + 1, out)
            out.append(",\n" if k < len(x) - 1 else "\n")
        out.append(pad + "]")
    else:
        out.append(_scalar(x))


def _inline(x):
    if isinstance(x, (list, tuple)):
        return "[" + ", ".join(_inline(v) for v in x) + "]"
    return _scalar(x)


def _scalar(x):
    if x is None or isinstance(x, (bool, np.bool_)):
        return json.dumps(None if x is None else bool(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return _fmt_float(float(x))
    if isinstance(x, str):
        return json.dumps(x)
    raise TypeError(f"cannot serialize {type(x).__name__}")


def dumps(obj):
    out = []
    _emit(obj, 0, out)
    out.append("\n")
    return "".join(out)


def atomic_write(path, text):
    """Write via a temporary file in the same directory and rename."""
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=".json")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_many(pairs):
    """Stage every file first; rename only when all writes succeeded."""
    staged = []
    try:
        for path, text in pairs:
            d = os.path.dirname(os.path.abspath(path))
            fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=".json")
            staged.append((tmp, path))
            with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
        for tmp, path in staged:
            os.replace(tmp, path)
    finally:
        for tmp, _ in staged:
            if os.path.exists(tmp):
                os.unlink(tmp)


# complex and matrix encodings


def complex_to_json(z):
    z = complex(z)
    return [float(z.real), float(z.imag)]


def complex_from_json(p):
    if isinstance(p, (int, float)):
        return complex(p)
    if not (isinstance(p, (list, tuple)) and len(p) == 2):
        raise ProblemError(f"expected [re, im], got {p!r}")
    return complex(float(p[0]), float(p[1]))


def matrix_to_json(M):
    M = np.asarray(M, dtype=complex)
    return [complex_to_json(v) for v in M.reshape(-1)]


def matrix_from_json(entries, n):
    if isinstance(entries, (int, float)) or (
        isinstance(entries, (list, tuple)) and len(entries) == 2 and n == 1
        and all(isinstance(v, (int, float)) for v in entries)
    ):
        return np.array([[complex_from_json(entries)]])
    flat = [complex_from_json(v) for v in entries]
    if len(flat) != n * n:
        raise ProblemError(f"matrix value has {len(flat)} entries, expected {n * n}")
    return np.array(flat, dtype=complex).reshape(n, n)


def arcs_to_json(S):
    return S.to_json()


def arcs_from_json(items):
    try:
        return ArcSet((float(a["start"]), float(a["end"])) for a in items)
    except (KeyError, TypeError) as exc:
        raise ProblemError(f"malformed arc list: {exc}") from exc


# problems


@dataclass(frozen=True, eq=False)
class Problem:
    kind: str
    dimension: int
    epsilon: float
    delta: float
    config: SynthesisConfig
    target: object
    samples: list | None = None
    epsilon_quant: float = 0.0
    E: ArcSet | None = None
    T: np.ndarray | None = None
    raw: dict | None = None

    def check_target(self):
        """Target the approximant is certified against."""
        if self.kind == "matrix_sampled":
            return quantize_range(self.samples, self.epsilon_quant)
        if isinstance(self.target, ScalarTarget):
            return self.target.as_step()
        return self.target


def _partition_from_arcs(items):
    arcs = [(float(a["start"]), float(a["end"])) for a in items]
    if not arcs:
        raise ProblemError("a step problem needs at least one arc")
    starts = canonical_angle(np.array([s for s, _ in arcs]))
    order = np.argsort(starts, kind="stable")
    total = sum(e - s for s, e in arcs)
    if abs(total - TWO_PI) > 1e-9:
        raise ProblemError(f"step arcs cover {total:.12g} rad, not a full circle")
    for k in range(len(arcs)):
        s, e = arcs[order[k]]
        nxt = arcs[order[(k + 1) % len(arcs)]][0]
        if abs(canonical_angle(e) - canonical_angle(nxt)) > 1e-9 and abs(
            abs(canonical_angle(e) - canonical_angle(nxt)) - TWO_PI
        ) > 1e-9:
            raise ProblemError("step arcs must be contiguous")
    return ArcPartition(starts[order]), order


def load_problem(path):
    with open(path, encoding="utf-8") as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ProblemError(f"invalid JSON ({exc})") from exc
    return parse_problem(raw)


def parse_problem(raw):
    if not isinstance(raw, dict):
        raise ProblemError("problem must be a JSON object")
    try:
        kind = raw["kind"]
        if kind not in KINDS:
            raise ProblemError(f"unknown problem kind {kind!r}")
        n = int(raw.get("dimension", 1))
        eps = float(raw["epsilon"])
        delta = float(raw["delta"])
        cfg_raw = dict(raw.get("config", {}))
        cfg_raw.update(epsilon=eps, delta=delta)
        cfg = SynthesisConfig.from_json(cfg_raw)
        values = raw.get("values", [])
        if kind.startswith("scalar") and n != 1:
            raise ProblemError("scalar problems have dimension 1")
        mats = [matrix_from_json(v, n) for v in values]
        if kind in ("scalar_two_valued", "matrix_two_valued"):
            if len(mats) != 1:
                raise ProblemError("two-valued problems give exactly one value (on the complement)")
            E = arcs_from_json(raw.get("arcs", []))
            if kind == "scalar_two_valued":
                target = ScalarTarget(E, complex(mats[0][0, 0]))
            else:
                target = StepUnimodular.two_valued(E, mats[0])
            return Problem(kind, n, eps, delta, cfg, target, E=E, T=mats[0], raw=raw)
        if kind in ("scalar_step", "matrix_step", "bounded_step"):
            part, order = _partition_from_arcs(raw.get("arcs", []))
            if len(mats) != len(order):
                raise ProblemError("one value per arc is required")
            vals = np.array([mats[k] for k in order])
            cls = StepFunction if kind == "bounded_step" else StepUnimodular
            return Problem(kind, n, eps, delta, cfg, cls(part, vals), raw=raw)
        thetas = [float(t) for t in raw["thetas"]]
        if len(thetas) != len(mats):
            raise ProblemError("one sample value per angle is required")
        samples = list(zip(thetas, mats))
        for U in mats:
            StepUnimodular.constant(U)
        eq = float(raw["epsilon_quant"])
        return Problem(kind, n, eps, delta, cfg, None, samples, eq, raw=raw)
    except ProblemError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ProblemError(f"malformed problem: {exc!r}") from exc


def solve(problem):
    from .pipeline import (
        approximate_bounded,
        approximate_sampled,
        approximate_step,
        approximate_two_valued,
    )
    from .synthesis import synthesize_step_scalar, synthesize_two_valued

    cfg = problem.config
    kind = problem.kind
    if kind == "scalar_two_valued":
        return synthesize_two_valued(problem.target, cfg)
    if kind == "scalar_step":
        return synthesize_step_scalar(problem.target, cfg)
    if kind == "matrix_two_valued":
        return approximate_two_valued(problem.E, problem.T, cfg)
    if kind == "matrix_step":
        return approximate_step(problem.target, cfg)
    if kind == "matrix_sampled":
        return approximate_sampled(problem.samples, problem.epsilon_quant, cfg)
    return approximate_bounded(problem.target, cfg)


# approximants


def blaschke_to_json(B):
    return {
        "constant": complex_to_json(B.constant),
        "zeros": [complex_to_json(z) for z in B.zeros],
    }


def blaschke_from_json(d):
    zeros = np.array([complex_from_json(z) for z in d["zeros"]], dtype=complex)
    c = complex_from_json(d["constant"])
    return FiniteBlaschke(zeros, c / abs(c))


def _potapov_to_json(phi):
    P = to_potapov_form(phi)
    return {
        "U": matrix_to_json(P.U),
        "factors": [{"alpha": complex_to_json(f.alpha), "P": matrix_to_json(f.P)} for f in P.factors],
    }


def _cdi_to_json(phi):
    return {
        "V": matrix_to_json(phi.V),
        "diagonal": [blaschke_to_json(b) for b in phi.diagonal],
    }


def _cdi_from_json(d, n):
    V = matrix_from_json(d["V"], n)
    return ConjugatedDiagonalInner(V, tuple(blaschke_from_json(b) for b in d["diagonal"]))


def _body(a, potapov=True):
    if isinstance(a, QuotientApproximant):
        return {
            "type": "quotient",
            "numerator": blaschke_to_json(a.numerator),
            "denominator": blaschke_to_json(a.denominator),
        }
    if isinstance(a, MatrixQuotient):
        out = {
            "type": "matrix_quotient",
            "dimension": a.dimension,
            "phi": _cdi_to_json(a.phi),
            "psi": _cdi_to_json(a.psi),
            "channel_errors": [float(c) for c in a.channels],
        }
        if potapov:
            out["potapov"] = {"phi": _potapov_to_json(a.phi), "psi": _potapov_to_json(a.psi)}
        return out
    if isinstance(a, QuotientChain):
        return {
            "type": "chain",
            "dimension": a.dimension,
            "quantization_budget": float(a.quantization_budget),
            "quotients": [_with_meta(q, potapov) for q in a.quotients],
        }
    if isinstance(a, BoundedApproximation):
        return {
            "type": "bounded",
            "dimension": a.dimension,
            "scale": float(a.scale),
            "coefficients": [float(c) for c in a.coefficients],
            "chains": [_with_meta(c, potapov) for c in a.chains],
        }
    raise TypeError(f"cannot serialize {type(a).__name__}")


def _with_meta(a, potapov):
    out = _body(a, potapov)
    out["exceptional"] = arcs_to_json(a.exceptional)
    out["certified_error"] = float(a.certified_error)
    out["certificate"] = a.certificate.to_json() if a.certificate is not None else None
    return out


def approximant_to_json(a, potapov=True):
    out = {"format": FORMAT}
    out.update(_with_meta(a, potapov))
    return out


def approximant_from_json(d):
    t = d["type"]
    exc = arcs_from_json(d["exceptional"])
    cert = Certificate.from_json(d["certificate"]) if d.get("certificate") else None
    err = float(d["certified_error"])
    if t == "quotient":
        return QuotientApproximant(
            blaschke_from_json(d["numerator"]), blaschke_from_json(d["denominator"]), exc, err, cert
        )
    n = int(d["dimension"])
    if t == "matrix_quotient":
        return MatrixQuotient(
            _cdi_from_json(d["phi"], n),
            _cdi_from_json(d["psi"], n),
            exc,
            err,
            cert,
            tuple(float(c) for c in d["channel_errors"]),
        )
    if t == "chain":
        return QuotientChain(
            tuple(approximant_from_json(q) for q in d["quotients"]),
            exc,
            err,
            cert,
            quantization_budget=float(d["quantization_budget"]),
        )
    if t == "bounded":
        return BoundedApproximation(
            tuple(float(c) for c in d["coefficients"]),
            tuple(approximant_from_json(c) for c in d["chains"]),
            float(d["scale"]),
            exc,
            err,
            cert,
        )
    raise ProblemError(f"unknown approximant type {t!r}")


def load_approximant(path):
    with open(path, encoding="utf-8") as fh:
        try:
            d = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ProblemError(f"invalid JSON ({exc})") from exc
    try:
        return approximant_from_json(d)
    except (KeyError, TypeError, ValueError) as exc:
        raise ProblemError(f"malformed approximant: {exc!r}") from exc


def degrees_summary(a):
    return json.dumps(a.degrees, separators=(",", ":")).replace(" ", "")
