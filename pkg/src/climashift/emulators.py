"""Lightweight emulators and the training loop.

Three kinds, all mapping one year of forcing inputs [12, 4, n_lat, n_lon]
to outputs [12, 2, n_lat, n_lon] with channel order (TAS, PR):

- climatology: predicts the per-month training-mean output field and
  ignores its inputs entirely; the no-skill reference.
- pattern_scaling: an independent least-squares fit per output cell of
  the local response onto an intercept, the four area-weighted global
  mean forcings, and eleven month indicators (January is the dropped
  level).
- mlp: one hidden tanh layer applied to the flattened, per-variable
  z-scored forcing fields of a single month, with shared parameters
  across the twelve months; trained by manual backpropagation.

Training minimizes the latitude-weighted MSE. The mlp trains with
minibatch sgd or adam under a warmup + exponential-decay schedule and
keeps the parameters from the best-validation-loss epoch. All training
is deterministic given the TrainConfig seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .datasetio import YearChunk
from .errors import ContractError, DivergenceError, SingularDesignError
from .grid import (FORCING_VARIABLES, OUTPUT_VARIABLES, GridSpec, LatWeights,
                   build_grid, lat_weights, weighted_mse)
from .rng import Pcg32, derive_seed
from .splits import SplitPlan, resolve_chunks
from .synth import Dataset

EMULATOR_KINDS = ("climatology", "pattern_scaling", "mlp")

N_MONTHS = 12
_PS_FEATURES = 1 + len(FORCING_VARIABLES) + (N_MONTHS - 1)


@dataclass(frozen=True)
class TrainConfig:
    """Optimization settings for one training run."""

    epochs: int = 50
    lr_init: float = 2e-4
    decay_gamma: float = 0.955
    warmup_epochs: int = 0
    warmup_lr: float = 1e-8
    post_warmup_lr: float = 5e-4
    batch_size: int = 32
    seed: int = 0
    optimizer: str = "adam"
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8

    def __post_init__(self):
        if self.epochs < 1:
            raise ContractError("epochs must be >= 1")
        for name in ("lr_init", "warmup_lr", "post_warmup_lr"):
            if getattr(self, name) <= 0.0:
                raise ContractError(f"{name} must be > 0")
        if not 0.0 < self.decay_gamma <= 1.0:
            raise ContractError("decay_gamma must lie in (0, 1]")
        if self.warmup_epochs < 0:
            raise ContractError("warmup_epochs must be >= 0")
        if self.batch_size < 1:
            raise ContractError("batch_size must be >= 1")
        if self.optimizer not in ("sgd", "adam"):
            raise ContractError(f"unknown optimizer {self.optimizer!r}")
        for name in ("adam_beta1", "adam_beta2"):
            if not 0.0 <= getattr(self, name) < 1.0:
                raise ContractError(f"{name} must lie in [0, 1)")
        if self.adam_eps <= 0.0:
            raise ContractError("adam_eps must be > 0")


def lr_schedule(config: TrainConfig, epoch: int) -> float:
    """Learning rate for one epoch index.

    With warmup: a linear ramp from warmup_lr to post_warmup_lr over the
    warmup epochs, then exponential decay starting at post_warmup_lr.
    Without: exponential decay starting at lr_init.
    """
    if not 0 <= epoch < config.epochs:
        raise ContractError(
            f"epoch {epoch} outside [0, {config.epochs})")
    w = config.warmup_epochs
    if w > 0:
        if epoch < w:
            return config.warmup_lr + (config.post_warmup_lr - config.warmup_lr) * (epoch / w)
        return config.post_warmup_lr * config.decay_gamma ** (epoch - w)
    return config.lr_init * config.decay_gamma ** epoch


def stack_chunks(chunks: Iterable[YearChunk]) -> tuple[np.ndarray, np.ndarray]:
    """(inputs [N,12,4,lat,lon], outputs [N,12,2,lat,lon]) as fresh arrays."""
    chunks = list(chunks)
    if not chunks:
        raise ContractError("need at least one chunk")
    inputs = np.stack([c.inputs for c in chunks])
    outputs = np.stack([c.outputs for c in chunks])
    return inputs, outputs


class Emulator:
    """Shared predict contract; subclasses implement _predict_stack."""

    kind = "?"

    def __init__(self, grid: GridSpec):
        self.grid = grid

    def _check_trained(self):
        raise NotImplementedError

    def _predict_stack(self, inputs: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def predict_many(self, inputs) -> np.ndarray:
        """Predict a stack of chunks: [N,12,4,lat,lon] -> [N,12,2,lat,lon]."""
        self._check_trained()
        inputs = np.asarray(inputs, dtype=np.float64)
        want = (N_MONTHS, len(FORCING_VARIABLES), self.grid.n_lat, self.grid.n_lon)
        if inputs.ndim != 5 or inputs.shape[1:] != want:
            raise ContractError(
                f"inputs must be [N]{list(want)}, got {inputs.shape}")
        out = self._predict_stack(inputs)
        if not np.all(np.isfinite(out)):
            raise DivergenceError("emulator produced non-finite predictions")
        return out

    def predict(self, chunk_inputs) -> np.ndarray:
        """Predict one chunk: [12,4,lat,lon] -> [12,2,lat,lon]."""
        chunk_inputs = np.asarray(chunk_inputs, dtype=np.float64)
        if chunk_inputs.ndim != 4:
            raise ContractError(
                f"chunk inputs must be [12,4,lat,lon], got {chunk_inputs.shape}")
        return self.predict_many(chunk_inputs[None])[0]


class ClimatologyEmulator(Emulator):
    """Per-(month, variable, cell) training mean; input-invariant."""

    kind = "climatology"

    def __init__(self, grid: GridSpec, monthly: np.ndarray | None = None):
        super().__init__(grid)
        self.monthly = None
        if monthly is not None:
            monthly = np.asarray(monthly, dtype=np.float64)
            want = (N_MONTHS, len(OUTPUT_VARIABLES), grid.n_lat, grid.n_lon)
            if monthly.shape != want:
                raise ContractError(f"monthly means must be {want}, got {monthly.shape}")
            self.monthly = monthly

    def _check_trained(self):
        if self.monthly is None:
            raise ContractError("climatology emulator is not fitted")

    def _predict_stack(self, inputs):
        return np.broadcast_to(self.monthly, (inputs.shape[0],) + self.monthly.shape).copy()


def fit_climatology(train_chunks: Iterable[YearChunk], grid: GridSpec) -> ClimatologyEmulator:
    _, outputs = stack_chunks(train_chunks)
    return ClimatologyEmulator(grid, monthly=outputs.mean(axis=0))


def _month_indicators(n_rows: int) -> np.ndarray:
    """[n_rows, 11] indicator columns for months 1..11 (January dropped)."""
    month = np.arange(n_rows) % N_MONTHS
    return (month[:, None] == np.arange(1, N_MONTHS)[None, :]).astype(np.float64)


def pattern_features(inputs: np.ndarray, weights: LatWeights) -> np.ndarray:
    """Design matrix rows for January-aligned monthly inputs.

    inputs is [..., 12, 4, n_lat, n_lon] flattened over leading axes;
    rows are [1, gm_CO2, gm_CH4, gm_BC, gm_SO2, month_2 .. month_12].
    """
    flat = inputs.reshape((-1,) + inputs.shape[-3:])
    n_rows = flat.shape[0]
    gm = np.einsum("tgij,i->tg", flat, weights.w) / (weights.n_lat * flat.shape[-1])
    x = np.empty((n_rows, _PS_FEATURES))
    x[:, 0] = 1.0
    x[:, 1:1 + len(FORCING_VARIABLES)] = gm
    x[:, 1 + len(FORCING_VARIABLES):] = _month_indicators(n_rows)
    return x


class PatternScalingEmulator(Emulator):
    """Independent linear model per (variable, cell) on shared features."""

    kind = "pattern_scaling"

    def __init__(self, grid: GridSpec, weights: LatWeights,
                 coef: np.ndarray | None = None, ridge: float = 0.0):
        super().__init__(grid)
        self.weights = weights
        self.ridge = float(ridge)
        self.coef = None
        if coef is not None:
            coef = np.asarray(coef, dtype=np.float64)
            want = (_PS_FEATURES, len(OUTPUT_VARIABLES) * grid.n_cells)
            if coef.shape != want:
                raise ContractError(f"coefficients must be {want}, got {coef.shape}")
            self.coef = coef

    def _check_trained(self):
        if self.coef is None:
            raise ContractError("pattern-scaling emulator is not fitted")

    def _predict_stack(self, inputs):
        x = pattern_features(inputs, self.weights)
        flat = x @ self.coef
        return flat.reshape(inputs.shape[0], N_MONTHS, len(OUTPUT_VARIABLES),
                            self.grid.n_lat, self.grid.n_lon)

    def coefficient_field(self, variable: str, feature: int) -> np.ndarray:
        """Fitted coefficient of one feature as a [n_lat, n_lon] field."""
        self._check_trained()
        vi = OUTPUT_VARIABLES.index(variable)
        block = self.coef[feature].reshape(len(OUTPUT_VARIABLES), self.grid.n_lat,
                                           self.grid.n_lon)
        return block[vi]


def fit_pattern_scaling(train_chunks: Iterable[YearChunk], grid: GridSpec,
                        ridge: float = 0.0) -> PatternScalingEmulator:
    """Solve per-cell least squares, optionally ridge-stabilized.

    ridge = 0 demands a full-column-rank design and solves by SVD; with
    ridge > 0 the normal equations (X'X + ridge*I) beta = X'Y are used.
    """
    if ridge < 0.0:
        raise ContractError("ridge strength must be >= 0")
    weights = lat_weights(grid)
    inputs, outputs = stack_chunks(train_chunks)
    x = pattern_features(inputs, weights)
    if x.shape[0] < _PS_FEATURES:
        raise ContractError(
            f"design matrix needs >= {_PS_FEATURES} rows, got {x.shape[0]}")
    y = outputs.reshape(x.shape[0], -1)
    if ridge == 0.0:
        rank = np.linalg.matrix_rank(x)
        if rank < _PS_FEATURES:
            raise SingularDesignError(
                f"design matrix rank {rank} < {_PS_FEATURES}; the forcing "
                "columns are collinear on this training set, fit with ridge > 0")
        coef, _, _, _ = np.linalg.lstsq(x, y, rcond=None)
    else:
        gram = x.T @ x + ridge * np.eye(_PS_FEATURES)
        coef = np.linalg.solve(gram, x.T @ y)
    return PatternScalingEmulator(grid, weights, coef=coef, ridge=ridge)


@dataclass(eq=False)
class MlpParams:
    """Network parameters plus the input normalization they were fit with."""

    in_mean: np.ndarray  # [4] per-variable mean over training inputs
    in_std: np.ndarray   # [4] strictly positive
    w1: np.ndarray       # [hidden, 4*cells]
    b1: np.ndarray       # [hidden]
    w2: np.ndarray       # [2*cells, hidden]
    b2: np.ndarray       # [2*cells]

    def __post_init__(self):
        for name in ("in_mean", "in_std", "w1", "b1", "w2", "b2"):
            setattr(self, name, np.asarray(getattr(self, name), dtype=np.float64))
        if np.any(self.in_std <= 0.0):
            raise ContractError("input normalization std must be strictly positive")
        for name in ("in_mean", "in_std", "w1", "b1", "w2", "b2"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise ContractError(f"non-finite values in {name}")

    @property
    def hidden(self) -> int:
        return self.w1.shape[0]

    def arrays(self) -> dict:
        return {"w1": self.w1, "b1": self.b1, "w2": self.w2, "b2": self.b2}

    def copy(self) -> "MlpParams":
        return MlpParams(in_mean=self.in_mean.copy(), in_std=self.in_std.copy(),
                         w1=self.w1.copy(), b1=self.b1.copy(),
                         w2=self.w2.copy(), b2=self.b2.copy())


class MlpEmulator(Emulator):
    """One shared per-month map: z-scored flat forcings -> output fields."""

    kind = "mlp"

    def __init__(self, grid: GridSpec, params: MlpParams | None = None):
        super().__init__(grid)
        if params is not None:
            d_in = len(FORCING_VARIABLES) * grid.n_cells
            d_out = len(OUTPUT_VARIABLES) * grid.n_cells
            if params.w1.shape[1] != d_in or params.w2.shape[0] != d_out:
                raise ContractError("parameter shapes do not match the grid")
        self.params = params

    def _check_trained(self):
        if self.params is None:
            raise ContractError("mlp emulator is not trained")

    def _flatten(self, inputs: np.ndarray) -> np.ndarray:
        z = (inputs - self.params.in_mean[:, None, None]) / self.params.in_std[:, None, None]
        return z.reshape(-1, len(FORCING_VARIABLES) * self.grid.n_cells)

    def _predict_stack(self, inputs):
        x = self._flatten(inputs)
        h = np.tanh(x @ self.params.w1.T + self.params.b1)
        flat = h @ self.params.w2.T + self.params.b2
        return flat.reshape(inputs.shape[0], N_MONTHS, len(OUTPUT_VARIABLES),
                            self.grid.n_lat, self.grid.n_lon)


def init_mlp(grid: GridSpec, hidden: int, in_mean, in_std,
             mean_output: np.ndarray, seed: int) -> MlpParams:
    """Seeded initial parameters.

    The output bias starts at the flattened training-mean output field,
    so early epochs fit anomalies instead of absolute levels.
    """
    if hidden < 1:
        raise ContractError("hidden width must be >= 1")
    d_in = len(FORCING_VARIABLES) * grid.n_cells
    d_out = len(OUTPUT_VARIABLES) * grid.n_cells
    rng = Pcg32(derive_seed(seed, "init"))
    w1 = rng.normals(hidden * d_in).reshape(hidden, d_in) / math.sqrt(d_in)
    w2 = rng.normals(d_out * hidden).reshape(d_out, hidden) / math.sqrt(hidden)
    return MlpParams(in_mean=in_mean, in_std=in_std, w1=w1,
                     b1=np.zeros(hidden), w2=w2,
                     b2=np.asarray(mean_output, dtype=np.float64).reshape(d_out))


def loss_and_gradient(params: MlpParams, batch_inputs, batch_outputs,
                      weights: LatWeights) -> tuple[float, dict]:
    """Latitude-weighted MSE over a batch and its exact gradient.

    batch_inputs is [B,12,4,lat,lon], batch_outputs [B,12,2,lat,lon].
    The gradient dict mirrors MlpParams.arrays(). Pure function.
    """
    batch_inputs = np.asarray(batch_inputs, dtype=np.float64)
    batch_outputs = np.asarray(batch_outputs, dtype=np.float64)
    if batch_inputs.ndim != 5 or batch_inputs.shape[0] == 0:
        raise ContractError("batch must be a non-empty [B,12,4,lat,lon] stack")
    n_lat, n_lon = batch_inputs.shape[-2:]
    z = (batch_inputs - params.in_mean[:, None, None]) / params.in_std[:, None, None]
    x = z.reshape(-1, len(FORCING_VARIABLES) * n_lat * n_lon)
    truth = batch_outputs.reshape(x.shape[0], -1)

    h = np.tanh(x @ params.w1.T + params.b1)
    pred = h @ params.w2.T + params.b2
    diff = pred - truth

    # one forecast per (chunk, month, variable); weights repeat per lon
    n_forecasts = diff.shape[0] * len(OUTPUT_VARIABLES)
    denom = n_forecasts * n_lat * n_lon
    w_flat = np.tile(np.repeat(weights.w, n_lon), len(OUTPUT_VARIABLES))
    loss = float(np.einsum("mk,k->", diff * diff, w_flat) / denom)
    if not math.isfinite(loss):
        raise DivergenceError("non-finite training loss")

    g_pred = diff * w_flat * (2.0 / denom)
    g_w2 = g_pred.T @ h
    g_b2 = g_pred.sum(axis=0)
    g_h = g_pred @ params.w2
    g_z = (1.0 - h * h) * g_h
    g_w1 = g_z.T @ x
    g_b1 = g_z.sum(axis=0)
    return loss, {"w1": g_w1, "b1": g_b1, "w2": g_w2, "b2": g_b2}


def _input_stats(inputs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-variable scalar mean/std over [N,12,4,lat,lon] training inputs."""
    axes = (0, 1, 3, 4)
    mean = inputs.mean(axis=axes)
    std = inputs.std(axis=axes)
    # a constant input channel carries no signal; leave it centered, unscaled
    std[std < 1e-12] = 1.0
    return mean, std


class _Optimizer:
    def __init__(self, config: TrainConfig, params: MlpParams):
        self.config = config
        self.adam = config.optimizer == "adam"
        self.step = 0
        if self.adam:
            self.m = {k: np.zeros_like(v) for k, v in params.arrays().items()}
            self.v = {k: np.zeros_like(v) for k, v in params.arrays().items()}

    def update(self, params: MlpParams, grads: dict, lr: float) -> None:
        if not self.adam:
            for k, g in grads.items():
                getattr(params, k)[...] -= lr * g
            return
        c = self.config
        self.step += 1
        t = self.step
        for k, g in grads.items():
            m = self.m[k]
            v = self.v[k]
            m *= c.adam_beta1
            m += (1.0 - c.adam_beta1) * g
            v *= c.adam_beta2
            v += (1.0 - c.adam_beta2) * (g * g)
            m_hat = m / (1.0 - c.adam_beta1 ** t)
            v_hat = v / (1.0 - c.adam_beta2 ** t)
            getattr(params, k)[...] -= lr * m_hat / (np.sqrt(v_hat) + c.adam_eps)


def _mlp_loss(params: MlpParams, inputs, outputs, weights) -> float:
    loss, _ = loss_and_gradient(params, inputs, outputs, weights)
    return loss


def train_mlp(train_inputs, train_outputs, val_inputs, val_outputs,
              grid: GridSpec, weights: LatWeights, config: TrainConfig,
              hidden: int = 64) -> tuple["MlpEmulator", list[dict]]:
    """Minibatch optimization; returns the best-validation-epoch model.

    Chunk order is reshuffled every epoch from a dedicated seeded stream;
    the epoch train loss is the forecast-weighted mean of the pre-update
    batch losses. Without validation chunks the final parameters win.
    """
    mean, std = _input_stats(train_inputs)
    params = init_mlp(grid, hidden, mean, std,
                      train_outputs.mean(axis=(0, 1)), config.seed)
    shuffle_rng = Pcg32(derive_seed(config.seed, "shuffle"))
    optimizer = _Optimizer(config, params)
    has_val = val_inputs is not None and val_inputs.shape[0] > 0

    n_chunks = train_inputs.shape[0]
    history = []
    best_val = math.inf
    best_params = None
    for epoch in range(config.epochs):
        lr = lr_schedule(config, epoch)
        order = np.arange(n_chunks)
        shuffle_rng.shuffle(order)
        loss_sum = 0.0
        for lo in range(0, n_chunks, config.batch_size):
            idx = order[lo:lo + config.batch_size]
            try:
                loss, grads = loss_and_gradient(
                    params, train_inputs[idx], train_outputs[idx], weights)
            except DivergenceError as exc:
                raise DivergenceError(str(exc), epoch=epoch) from exc
            loss_sum += loss * len(idx)
            optimizer.update(params, grads, lr)
        train_loss = loss_sum / n_chunks
        try:
            val_loss = (_mlp_loss(params, val_inputs, val_outputs, weights)
                        if has_val else None)
        except DivergenceError as exc:
            raise DivergenceError(str(exc), epoch=epoch) from exc
        history.append({"epoch": epoch, "lr": lr,
                        "train_loss": train_loss, "val_loss": val_loss})
        if has_val and val_loss < best_val:
            best_val = val_loss
            best_params = params.copy()
    if best_params is None:
        best_params = params
    return MlpEmulator(grid, params=best_params), history


def train(kind: str, plan: SplitPlan, dataset: Dataset, config: TrainConfig,
          hidden: int = 64, ridge: float = 0.0) -> tuple[Emulator, list[dict]]:
    """Fit one emulator on a plan's train set.

    Closed-form kinds produce a single-entry history; the mlp history has
    one entry per epoch. Validation loss is None when the plan has no
    validation chunks.
    """
    if kind not in EMULATOR_KINDS:
        raise ContractError(f"unknown emulator kind {kind!r}")
    grid = dataset.grid
    weights = lat_weights(grid)
    train_chunks = resolve_chunks(dataset, plan.train)
    if not train_chunks:
        raise ContractError(f"plan {plan.name} has no training chunks")
    val_chunks = resolve_chunks(dataset, plan.val)

    if kind == "mlp":
        train_in, train_out = stack_chunks(train_chunks)
        if val_chunks:
            val_in, val_out = stack_chunks(val_chunks)
        else:
            val_in = val_out = None
        return train_mlp(train_in, train_out, val_in, val_out, grid, weights,
                         config, hidden=hidden)

    if kind == "climatology":
        emulator = fit_climatology(train_chunks, grid)
    else:
        emulator = fit_pattern_scaling(train_chunks, grid, ridge=ridge)
    train_in, train_out = stack_chunks(train_chunks)
    train_loss = weighted_mse(emulator.predict_many(train_in), train_out, weights)
    if val_chunks:
        val_in, val_out = stack_chunks(val_chunks)
        val_loss = weighted_mse(emulator.predict_many(val_in), val_out, weights)
    else:
        val_loss = None
    history = [{"epoch": 0, "lr": None, "train_loss": train_loss,
                "val_loss": val_loss}]
    return emulator, history


# ---------------------------------------------------------------------------
# JSON persistence. Arrays serialize as nested lists of decimal numbers;
# Python's float repr round-trips, so reloads are bit-exact.

def emulator_to_dict(emulator: Emulator, plan_name: str,
                     config: TrainConfig | None = None,
                     history: list[dict] | None = None) -> dict:
    doc = {
        "kind": emulator.kind,
        "grid": {"n_lat": emulator.grid.n_lat, "n_lon": emulator.grid.n_lon},
        "plan": plan_name,
        "train_config": None if config is None else {
            k: getattr(config, k) for k in TrainConfig.__dataclass_fields__},
        "history": history or [],
    }
    if emulator.kind == "climatology":
        emulator._check_trained()
        doc["params"] = {"monthly": emulator.monthly.tolist()}
    elif emulator.kind == "pattern_scaling":
        emulator._check_trained()
        doc["params"] = {"coef": emulator.coef.tolist(), "ridge": emulator.ridge}
    elif emulator.kind == "mlp":
        emulator._check_trained()
        p = emulator.params
        doc["params"] = {
            "in_mean": p.in_mean.tolist(), "in_std": p.in_std.tolist(),
            "w1": p.w1.tolist(), "b1": p.b1.tolist(),
            "w2": p.w2.tolist(), "b2": p.b2.tolist(),
        }
    else:
        raise ContractError(f"cannot serialize emulator kind {emulator.kind!r}")
    return doc


def emulator_from_dict(doc: dict) -> Emulator:
    try:
        kind = doc["kind"]
        grid = build_grid(int(doc["grid"]["n_lat"]), int(doc["grid"]["n_lon"]))
        params = doc["params"]
        if kind == "climatology":
            return ClimatologyEmulator(grid, monthly=np.array(params["monthly"]))
        if kind == "pattern_scaling":
            return PatternScalingEmulator(
                grid, lat_weights(grid), coef=np.array(params["coef"]),
                ridge=float(params["ridge"]))
        if kind == "mlp":
            return MlpEmulator(grid, params=MlpParams(
                in_mean=np.array(params["in_mean"]),
                in_std=np.array(params["in_std"]),
                w1=np.array(params["w1"]), b1=np.array(params["b1"]),
                w2=np.array(params["w2"]), b2=np.array(params["b2"])))
    except (KeyError, TypeError, ValueError) as exc:
        raise ContractError(f"malformed emulator document: {exc}") from exc
    raise ContractError(f"unknown emulator kind {doc['kind']!r}")
