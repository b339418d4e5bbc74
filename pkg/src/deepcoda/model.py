"""Log-bottleneck network with per-sample self-explanation.

Each of the B bottlenecks is a single hidden unit on the log-transformed
input, so its activation is a log-contrast once the unit's weights are
penalized toward zero sum. A small ReLU MLP maps the B contrast values to B
per-sample weights and the prediction logit is their dot product; the
linear head variant replaces the MLP with one global weight vector. The
training objective is squared error on the logistic output plus a squared
zero-sum penalty and an L1 penalty on the bottleneck weights, and the
gradients here are exact (hand-derived) rather than numeric.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

__all__ = [
    "HEADS",
    "PARAM_FIELDS",
    "DeepCodaParams",
    "ForwardTrace",
    "forward",
    "predict_proba",
    "loss",
    "gradients",
    "loss_and_gradients",
    "params_to_text",
    "params_from_text",
    "save_params",
    "load_params",
]

HEADS = ("self_explain", "linear")

# Canonical tensor order for initialization, optimizer state, serialization.
PARAM_FIELDS = (
    "beta",
    "beta0",
    "mlp_w1",
    "mlp_b1",
    "mlp_w2",
    "mlp_b2",
    "linear_v",
    "linear_v0",
)

_FORMAT_TAG = "deepcoda-params-v1"


@dataclass
class DeepCodaParams:
    """All network parameters plus the head-variant flag.

    Shapes: ``beta`` (D, B), ``beta0`` (B,), ``mlp_w1`` (B, H), ``mlp_b1``
    (H,), ``mlp_w2`` (H, B), ``mlp_b2`` (B,), ``linear_v`` (B,),
    ``linear_v0`` scalar. The MLP tensors drive the self_explain head and
    ``linear_v``/``linear_v0`` the linear head; both sets are always
    present so one container serves either head.
    """

    beta: np.ndarray
    beta0: np.ndarray
    mlp_w1: np.ndarray
    mlp_b1: np.ndarray
    mlp_w2: np.ndarray
    mlp_b2: np.ndarray
    head: str = "self_explain"
    linear_v: np.ndarray | None = None
    linear_v0: float = 0.0

    def __post_init__(self) -> None:
        for name in ("beta", "beta0", "mlp_w1", "mlp_b1", "mlp_w2", "mlp_b2"):
            setattr(self, name, np.array(getattr(self, name), dtype=float))
        if self.linear_v is None:
            self.linear_v = np.zeros(self.beta.shape[1])
        else:
            self.linear_v = np.array(self.linear_v, dtype=float)
        self.linear_v0 = float(self.linear_v0)
        self.validate()

    def validate(self) -> None:
        if self.head not in HEADS:
            raise ValueError(f"head must be one of {HEADS}, got {self.head!r}")
        if self.beta.ndim != 2:
            raise ValueError("beta must be a D x B matrix")
        d, b = self.beta.shape
        if self.mlp_w1.ndim != 2 or self.mlp_w1.shape[0] != b:
            raise ValueError("mlp_w1 must be a B x H matrix")
        h = self.mlp_w1.shape[1]
        expected = {
            "beta0": (b,),
            "mlp_b1": (h,),
            "mlp_w2": (h, b),
            "mlp_b2": (b,),
            "linear_v": (b,),
        }
        for name, shape in expected.items():
            if getattr(self, name).shape != shape:
                raise ValueError(f"{name} must have shape {shape}")
        for name in PARAM_FIELDS:
            if not np.all(np.isfinite(np.asarray(getattr(self, name)))):
                raise ValueError(f"{name} contains non-finite values")

    @property
    def dims(self) -> tuple[int, int, int]:
        """(n_features, n_bottlenecks, n_hidden)."""
        d, b = self.beta.shape
        return d, b, self.mlp_w1.shape[1]

    def copy(self) -> "DeepCodaParams":
        return DeepCodaParams(
            beta=self.beta.copy(),
            beta0=self.beta0.copy(),
            mlp_w1=self.mlp_w1.copy(),
            mlp_b1=self.mlp_b1.copy(),
            mlp_w2=self.mlp_w2.copy(),
            mlp_b2=self.mlp_b2.copy(),
            head=self.head,
            linear_v=self.linear_v.copy(),
            linear_v0=self.linear_v0,
        )


@dataclass(frozen=True)
class ForwardTrace:
    """Per-sample activations: contrasts z, weights w, logit s, probability yhat."""

    z: np.ndarray
    w: np.ndarray
    s: float
    yhat: float


def _as_positive_matrix(X, n_features: int, name: str = "X") -> np.ndarray:
    arr = np.asarray(X, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != n_features:
        raise ValueError(f"{name} must be 2-D with {n_features} columns")
    if not np.all(np.isfinite(arr)) or np.any(arr <= 0):
        raise ValueError(f"{name} must be strictly positive and finite")
    return arr


def _check_labels(y, n_samples: int) -> np.ndarray:
    arr = np.asarray(y)
    if arr.shape != (n_samples,):
        raise ValueError(f"labels must be a vector of length {n_samples}")
    if not np.all((arr == 0) | (arr == 1)):
        raise ValueError("labels must be 0 or 1")
    return arr.astype(float)


def _rowwise_matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    # einsum keeps one fixed accumulation order per row, so each output row
    # depends only on that row's content (BLAS kernels may round rows of the
    # same batch differently, breaking bit-level row independence).
    return np.einsum("nd,db->nb", a, b)


def _forward_batch(p: DeepCodaParams, X: np.ndarray):
    """Shared batched pass. Returns (logX, Z, A, H, W, S, yhat)."""
    logx = np.log(X)
    z = _rowwise_matmul(logx, p.beta) + p.beta0
    if p.head == "self_explain":
        a = _rowwise_matmul(z, p.mlp_w1) + p.mlp_b1
        hidden = np.maximum(a, 0.0)
        w = _rowwise_matmul(hidden, p.mlp_w2) + p.mlp_b2
        s = (w * z).sum(axis=1)
    else:
        a = hidden = None
        w = np.broadcast_to(p.linear_v, z.shape)
        s = p.linear_v0 + np.einsum("nb,b->n", z, p.linear_v)
    return logx, z, a, hidden, w, s, expit(s)


def forward(p: DeepCodaParams, x) -> ForwardTrace:
    """Run one strictly positive D-vector through the network.

    The trace satisfies ``yhat == expit(s)`` by construction, and for the
    self_explain head ``s`` is exactly the dot product of the returned
    weights and contrasts.
    """
    xv = np.asarray(x, dtype=float)
    if xv.ndim != 1 or xv.shape[0] != p.beta.shape[0]:
        raise ValueError(f"x must be a vector of length {p.beta.shape[0]}")
    if not np.all(np.isfinite(xv)) or np.any(xv <= 0):
        raise ValueError("x must be strictly positive and finite")
    _, z, _, _, w, s, yhat = _forward_batch(p, xv[None, :])
    if not (np.all(np.isfinite(z)) and np.isfinite(s[0])):
        raise FloatingPointError("non-finite value in forward pass")
    return ForwardTrace(z=z[0], w=np.array(w[0]), s=float(s[0]), yhat=float(yhat[0]))


def predict_proba(p: DeepCodaParams, X) -> np.ndarray:
    """Row-wise forward pass; returns one probability per sample."""
    xv = _as_positive_matrix(X, p.beta.shape[0])
    *_, s, yhat = _forward_batch(p, xv)
    if not np.all(np.isfinite(s)):
        raise FloatingPointError("non-finite value in forward pass")
    return yhat


def loss_and_gradients(
    p: DeepCodaParams, X, y, lambda_c: float = 1.0, lambda_s: float = 0.01
) -> tuple[float, dict[str, np.ndarray | float]]:
    """Total training loss and its exact gradient for every parameter tensor.

    The loss is ``sum_i (yhat_i - y_i)^2 + lambda_c * sum_b (sum_d
    beta[d,b])^2 + lambda_s * sum |beta|``; the intercepts and MLP
    parameters are unpenalized. Subgradient conventions at the kinks:
    d|b|/db = 0 at b = 0, and the ReLU derivative is 0 at a pre-activation
    of exactly 0.
    """
    if lambda_c < 0 or lambda_s < 0:
        raise ValueError("penalty weights must be nonnegative")
    xv = _as_positive_matrix(X, p.beta.shape[0])
    yv = _check_labels(y, xv.shape[0])
    logx, z, a, hidden, w, s, yhat = _forward_batch(p, xv)

    resid = yhat - yv
    col_sums = p.beta.sum(axis=0)
    total = float(
        resid @ resid + lambda_c * (col_sums @ col_sums) + lambda_s * np.abs(p.beta).sum()
    )
    if not np.isfinite(total):
        raise FloatingPointError("non-finite loss")

    # d(loss)/d(logit): squared error through the logistic output.
    gs = 2.0 * resid * yhat * (1.0 - yhat)
    grads: dict[str, np.ndarray | float] = {}
    if p.head == "self_explain":
        gw = gs[:, None] * z
        grads["mlp_b2"] = gw.sum(axis=0)
        grads["mlp_w2"] = hidden.T @ gw
        ga = (gw @ p.mlp_w2.T) * (a > 0)
        grads["mlp_b1"] = ga.sum(axis=0)
        grads["mlp_w1"] = z.T @ ga
        gz = gs[:, None] * w + ga @ p.mlp_w1.T
        grads["linear_v"] = np.zeros_like(p.linear_v)
        grads["linear_v0"] = 0.0
    else:
        grads["linear_v"] = z.T @ gs
        grads["linear_v0"] = float(gs.sum())
        gz = gs[:, None] * p.linear_v[None, :]
        grads["mlp_w1"] = np.zeros_like(p.mlp_w1)
        grads["mlp_b1"] = np.zeros_like(p.mlp_b1)
        grads["mlp_w2"] = np.zeros_like(p.mlp_w2)
        grads["mlp_b2"] = np.zeros_like(p.mlp_b2)
    grads["beta"] = (
        logx.T @ gz + 2.0 * lambda_c * col_sums[None, :] + lambda_s * np.sign(p.beta)
    )
    grads["beta0"] = gz.sum(axis=0)
    return total, grads


def loss(p: DeepCodaParams, X, y, lambda_c: float = 1.0, lambda_s: float = 0.01) -> float:
    """Penalized squared-error loss over a strictly positive batch."""
    return loss_and_gradients(p, X, y, lambda_c, lambda_s)[0]


def gradients(
    p: DeepCodaParams, X, y, lambda_c: float = 1.0, lambda_s: float = 0.01
) -> dict[str, np.ndarray | float]:
    """Exact analytic gradient of ``loss`` with respect to every parameter."""
    return loss_and_gradients(p, X, y, lambda_c, lambda_s)[1]


def params_to_text(p: DeepCodaParams) -> str:
    """Serialize to the flat text format: one ``key = values`` line per tensor.

    Values are written row-major with 17 significant digits, which
    round-trips IEEE doubles exactly.
    """
    d, b, h = p.dims
    lines = [
        f"format = {_FORMAT_TAG}",
        f"dims = {d} {b} {h}",
        f"head = {p.head}",
    ]
    for name in PARAM_FIELDS:
        flat = np.asarray(getattr(p, name), dtype=float).reshape(-1)
        lines.append(f"{name} = " + " ".join(f"{x:.17g}" for x in flat))
    return "\n".join(lines) + "\n"


def params_from_text(text: str) -> DeepCodaParams:
    """Parse the flat text format produced by ``params_to_text``."""
    entries: dict[str, str] = {}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"line {line_no}: expected 'key = values'")
        key, _, rest = line.partition("=")
        entries[key.strip()] = rest.strip()
    if entries.get("format") != _FORMAT_TAG:
        raise ValueError(f"not a {_FORMAT_TAG} file")
    try:
        d, b, h = (int(tok) for tok in entries["dims"].split())
    except (KeyError, ValueError) as exc:
        raise ValueError("missing or malformed dims header") from exc
    head = entries.get("head")
    shapes: dict[str, tuple[int, ...]] = {
        "beta": (d, b),
        "beta0": (b,),
        "mlp_w1": (b, h),
        "mlp_b1": (h,),
        "mlp_w2": (h, b),
        "mlp_b2": (b,),
        "linear_v": (b,),
        "linear_v0": (),
    }
    kwargs: dict[str, np.ndarray | float] = {}
    for name, shape in shapes.items():
        if name not in entries:
            raise ValueError(f"missing parameter {name}")
        tokens = entries[name].split()
        expected = int(np.prod(shape, dtype=int)) if shape else 1
        if len(tokens) != expected:
            raise ValueError(f"{name}: expected {expected} values, got {len(tokens)}")
        vals = np.array([float(tok) for tok in tokens])
        kwargs[name] = float(vals[0]) if shape == () else vals.reshape(shape)
    return DeepCodaParams(head=head, **kwargs)


def save_params(p: DeepCodaParams, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(params_to_text(p))


def load_params(path) -> DeepCodaParams:
    with open(path, "r", encoding="utf-8") as fh:
        return params_from_text(fh.read())
