"""
The attentional encoder-decoder and its side-constraint methods.

Each MR position is the concatenation of a slot-type and a slot-value embedding.
A stacked bidirectional LSTM encodes the positions, a learned bridge maps the final
encoder states onto the decoder's initial state, and the decoder attends over the
encoder states with a bilinear score `q^T W h`.

A style constraint reaches the model in one of three ways:

- `Method.M1` adds pseudo-slots to the MR itself (token supervision),
- `Method.M2` appends the constraint vector to every encoder input,
- `Method.M3` appends it to every decoder input.

The constraint always enters an LSTM through its own projection `wc`, so a model
whose `wc` is zero computes exactly what the unconstrained model computes.
"""
from __future__ import annotations

from collections import OrderedDict
from dataclasses import dataclass, field, fields
from enum import Enum
from typing import (
    TYPE_CHECKING,
    Callable,
    Dict,
    Iterator,
    List,
    Optional,
    Sequence,
    Tuple,
)

import numpy as np

from ..errors import ConfigError, ConstraintModeMismatch
from ..mr import (
    FINE_PARAM_COUNT,
    ConstraintKind,
    Granularity,
    MeaningRepresentation,
    Personality,
    SlotValue,
    StyleConstraint,
    validate_constraint,
)
from ..numerics import (
    Array,
    Node,
    RngState,
    add,
    batched_matvec,
    batched_vecmat,
    concat,
    constant,
    cross_entropy,
    dropout,
    embedding_lookup,
    glorot_init,
    matmul,
    mul,
    parameter,
    scale,
    sigmoid,
    slice_,
    softmax,
    stack,
    sum_,
    take_rows,
    tanh,
)

if TYPE_CHECKING:
    from .data import Batch

SIDE_CONSTRAINT_SLOT = "side-constraint"
PERSONALITIES = tuple(Personality)


class Method(str, Enum):
    NOCON = "nocon"
    M1 = "m1"
    M2 = "m2"
    M3 = "m3"


class Task(str, Enum):
    PERSONALITY = "personality"
    CONTRAST = "contrast"


@dataclass(frozen=True)
class ModelConfig:
    rnn_layers: int = 1
    rnn_size: int = 200
    embed_size: int = 64
    method: Method = Method.NOCON
    granularity: Granularity = Granularity.COARSE
    task: Task = Task.PERSONALITY
    dropout_p: float = 0.1
    beam_width: int = 3
    batch_size: int = 128

    def __post_init__(self) -> None:
        # accept plain strings coming from JSON or the command line
        for name, enum in (
            ("method", Method),
            ("granularity", Granularity),
            ("task", Task),
        ):
            raw = getattr(self, name)
            try:
                object.__setattr__(self, name, enum(raw))
            except ValueError:
                raise ConfigError(f"invalid {name} {raw!r}") from None

        if self.rnn_layers not in (1, 2):
            raise ConfigError(f"rnn_layers must be 1 or 2, got {self.rnn_layers}")
        if self.rnn_size < 1 or self.embed_size < 1 or self.batch_size < 1:
            raise ConfigError("rnn_size, embed_size and batch_size must be positive")
        if self.beam_width < 1:
            raise ConfigError(f"beam_width must be >= 1, got {self.beam_width}")
        if not 0.0 <= self.dropout_p < 1.0:
            raise ConfigError(f"dropout_p must be in [0, 1), got {self.dropout_p}")
        if self.task is Task.CONTRAST and self.granularity is Granularity.FINE:
            raise ConfigError("the contrast task has no fine-grained parameters")

    @property
    def constraint_size(self) -> int:
        """Width of the encoded constraint vector."""
        if self.task is Task.CONTRAST:
            return 1
        extra = FINE_PARAM_COUNT if self.granularity is Granularity.FINE else 0
        return len(PERSONALITIES) + extra

    @property
    def encoder_input_size(self) -> int:
        base = 2 * self.embed_size
        return base + self.constraint_size if self.method is Method.M2 else base

    @property
    def decoder_input_size(self) -> int:
        base = self.embed_size + 2 * self.rnn_size
        return base + self.constraint_size if self.method is Method.M3 else base

    def as_dict(self) -> Dict[str, object]:
        return {
            f.name: getattr(self, f.name).value
            if isinstance(getattr(self, f.name), Enum)
            else getattr(self, f.name)
            for f in fields(self)
        }


def constraint_vector(c: StyleConstraint, config: ModelConfig) -> Array:
    """
    One-hot personality (optionally followed by the fine parameters) or a single
    contrast bit. An unconstrained record encodes as all zeros.
    """
    out = np.zeros(config.constraint_size)
    if c.kind is ConstraintKind.NONE:
        return out

    if config.task is Task.CONTRAST:
        if c.kind is not ConstraintKind.CONTRAST:
            raise ConstraintModeMismatch("the contrast task needs contrast constraints")
        out[0] = 1.0 if c.contrast else 0.0
        return out

    if c.kind is not ConstraintKind.PERSONALITY:
        raise ConstraintModeMismatch("the personality task needs personality labels")
    c = validate_constraint(c.for_mode(config.granularity), config.granularity)
    out[PERSONALITIES.index(c.personality)] = 1.0  # type: ignore[arg-type]
    if c.fine_params is not None:
        out[len(PERSONALITIES) :] = c.fine_params
    return out


def apply_method1(
    mr: MeaningRepresentation, c: StyleConstraint, granularity: Granularity
) -> MeaningRepresentation:
    """
    Token supervision: prepends `side-constraint[label]` to the MR, preceded under
    fine control by the 36 `param_k[0|1]` pseudo-slots.
    """
    if c.kind is ConstraintKind.NONE:
        return mr
    c = validate_constraint(c.for_mode(granularity), granularity)

    pseudo: List[SlotValue] = []
    if c.fine_params is not None:
        pseudo.extend(
            SlotValue(f"param_{k}", str(bit))
            for k, bit in enumerate(c.fine_params, start=1)
        )
    pseudo.append(SlotValue(SIDE_CONSTRAINT_SLOT, c.label))
    return MeaningRepresentation((*pseudo, *mr.slots))


class ModelParams:
    """
    Named trainable weights. Names follow `<part>.<layer>.<direction>.<matrix>`,
    e.g. `enc.0.fwd.wx`, `dec.1.wh`, `bridge.0.h.w`, `attn.w`, `out.b`.
    """

    def __init__(self, config: ModelConfig, nodes: "OrderedDict[str, Node]") -> None:
        self.config = config
        self._nodes = nodes

    @staticmethod
    def shapes(
        config: ModelConfig, vocab_sizes: Tuple[int, int, int]
    ) -> "OrderedDict[str, Tuple[int, ...]]":
        n_types, n_values, n_target = vocab_sizes
        e, h, k = config.embed_size, config.rnn_size, config.constraint_size
        out: "OrderedDict[str, Tuple[int, ...]]" = OrderedDict()
        out["emb.slot_type"] = (n_types, e)
        out["emb.slot_value"] = (n_values, e)
        out["emb.target"] = (n_target, e)

        for layer in range(config.rnn_layers):
            size_in = 2 * e if layer == 0 else 2 * h
            for direction in ("fwd", "bwd"):
                prefix = f"enc.{layer}.{direction}"
                out[f"{prefix}.wx"] = (size_in, 4 * h)
                if layer == 0 and config.method is Method.M2:
                    out[f"{prefix}.wc"] = (k, 4 * h)
                out[f"{prefix}.wh"] = (h, 4 * h)
                out[f"{prefix}.b"] = (4 * h,)

        for layer in range(config.rnn_layers):
            for part in ("h", "c"):
                out[f"bridge.{layer}.{part}.w"] = (2 * h, h)
                out[f"bridge.{layer}.{part}.b"] = (h,)

        for layer in range(config.rnn_layers):
            size_in = e + 2 * h if layer == 0 else h
            out[f"dec.{layer}.wx"] = (size_in, 4 * h)
            if layer == 0 and config.method is Method.M3:
                out[f"dec.{layer}.wc"] = (k, 4 * h)
            out[f"dec.{layer}.wh"] = (h, 4 * h)
            out[f"dec.{layer}.b"] = (4 * h,)

        out["attn.w"] = (h, 2 * h)
        out["out.w"] = (3 * h, n_target)
        out["out.b"] = (n_target,)
        return out

    @classmethod
    def initialize(
        cls, config: ModelConfig, vocab_sizes: Tuple[int, int, int], rng: RngState
    ) -> "ModelParams":
        """Glorot-uniform matrices and zero biases; each tensor has its own stream."""
        nodes: "OrderedDict[str, Node]" = OrderedDict()
        for k, (name, shape) in enumerate(cls.shapes(config, vocab_sizes).items()):
            if len(shape) == 1:
                value = np.zeros(shape)
            else:
                value = glorot_init(shape, rng.split(k))
            nodes[name] = parameter(value, name)
        return cls(config, nodes)

    @classmethod
    def zeros(
        cls, config: ModelConfig, vocab_sizes: Tuple[int, int, int]
    ) -> "ModelParams":
        return cls(
            config,
            OrderedDict(
                (name, parameter(np.zeros(shape), name))
                for name, shape in cls.shapes(config, vocab_sizes).items()
            ),
        )

    def __getitem__(self, name: str) -> Node:
        return self._nodes[name]

    def __contains__(self, name: object) -> bool:
        return name in self._nodes

    def __iter__(self) -> Iterator[str]:
        return iter(self._nodes)

    def __len__(self) -> int:
        return len(self._nodes)

    def items(self) -> Iterator[Tuple[str, Node]]:
        return iter(self._nodes.items())

    def nodes(self) -> List[Node]:
        return list(self._nodes.values())

    @property
    def vocab_sizes(self) -> Tuple[int, int, int]:
        return (
            self["emb.slot_type"].shape[0],
            self["emb.slot_value"].shape[0],
            self["emb.target"].shape[0],
        )

    def snapshot(self) -> Dict[str, Array]:
        return {name: node.value.copy() for name, node in self._nodes.items()}

    def restore(self, values: Dict[str, Array]) -> None:
        for name, node in self._nodes.items():
            node.value = values[name].copy()
            node.grad = None


@dataclass
class EncoderStates:
    states: Node  # (B, n, 2H)
    mask: Array  # (B, n), 1.0 on real positions
    final: List[Tuple[Node, Node, Node, Node]] = field(default_factory=list)

    def __len__(self) -> int:
        return int(self.states.shape[1])

    def repeat(self, rows: int) -> "EncoderStates":
        """The states of a single input, tiled for `rows` beam hypotheses."""
        index = np.zeros(rows, dtype=np.int64)
        return EncoderStates(
            take_rows(self.states, index),
            self.mask[index],
            [
                tuple(take_rows(n, index) for n in layer)  # type: ignore[misc]
                for layer in self.final
            ],
        )


@dataclass
class DecoderState:
    hidden: List[Tuple[Node, Node]]  # per layer (h, c)
    context: Node  # d_t, (B, 2H)
    prev_embedding: Optional[Node] = None  # w_{t-1} consumed by the last step


def encode_slot_value(
    params: ModelParams,
    type_ids: np.ndarray,
    value_ids: np.ndarray,
    c: Optional[Node] = None,
) -> Node:
    """`[type; value]`, with the constraint vector appended under M2."""
    base = concat(
        [
            embedding_lookup(params["emb.slot_type"], type_ids),
            embedding_lookup(params["emb.slot_value"], value_ids),
        ]
    )
    if params.config.method is Method.M2 and c is not None:
        return concat([base, c])
    return base


def _lstm_step(
    params: ModelParams,
    prefix: str,
    x: Node,
    h: Node,
    cell: Node,
    side: Optional[Node] = None,
) -> Tuple[Node, Node]:
    gates = matmul(x, params[f"{prefix}.wx"])
    if side is not None:
        gates = add(gates, matmul(side, params[f"{prefix}.wc"]))
    gates = add(add(gates, matmul(h, params[f"{prefix}.wh"])), params[f"{prefix}.b"])

    size = h.shape[1]
    i = sigmoid(slice_(gates, 0, size))
    f = sigmoid(slice_(gates, size, 2 * size))
    g = tanh(slice_(gates, 2 * size, 3 * size))
    o = sigmoid(slice_(gates, 3 * size, 4 * size))

    cell = add(mul(f, cell), mul(i, g))
    return mul(o, tanh(cell)), cell


def _keep(mask: Array, new: Node, old: Node) -> Node:
    """Carries `old` through padded positions."""
    if mask.all():
        return new
    m = mask[:, None]
    return add(mul(constant(m), new), mul(constant(1.0 - m), old))


def encode(
    params: ModelParams,
    inputs: Sequence[Node],
    mask: Optional[Array] = None,
    training: bool = False,
    rng: Optional[np.random.Generator] = None,
) -> EncoderStates:
    """
    Runs the stacked bidirectional LSTM over `inputs` (one `(B, d)` node per MR
    position) and returns `[fwd; bwd]` per position from the top layer.
    """
    config = params.config
    n = len(inputs)
    if n == 0:
        raise ValueError("cannot encode an empty input")
    batch = inputs[0].shape[0]
    size = config.rnn_size
    mask = np.ones((batch, n)) if mask is None else np.asarray(mask, dtype=np.float64)
    split = 2 * config.embed_size if config.method is Method.M2 else None

    layer_inputs = list(inputs)
    final: List[Tuple[Node, Node, Node, Node]] = []
    for layer in range(config.rnn_layers):
        if layer > 0:
            layer_inputs = [
                dropout(x, config.dropout_p, training, rng)  # type: ignore[arg-type]
                for x in layer_inputs
            ]

        outputs: Dict[str, List[Node]] = {}
        ends: List[Node] = []
        for direction, order in (("fwd", range(n)), ("bwd", range(n - 1, -1, -1))):
            prefix = f"enc.{layer}.{direction}"
            h = cell = constant(np.zeros((batch, size)))
            states: List[Optional[Node]] = [None] * n
            for t in order:
                x, side = layer_inputs[t], None
                if layer == 0 and split is not None:
                    side = slice_(x, split, x.shape[1])
                    x = slice_(x, 0, split)
                h_new, c_new = _lstm_step(params, prefix, x, h, cell, side)
                h, cell = _keep(mask[:, t], h_new, h), _keep(mask[:, t], c_new, cell)
                states[t] = h
            outputs[direction] = states  # type: ignore[assignment]
            ends.extend((h, cell))

        final.append((ends[0], ends[1], ends[2], ends[3]))
        layer_inputs = [concat([f, b]) for f, b in zip(outputs["fwd"], outputs["bwd"])]

    return EncoderStates(stack(layer_inputs, axis=1), mask, final)


def initial_state(params: ModelParams, enc: EncoderStates) -> DecoderState:
    """Learned bridge from the final encoder states, one per layer."""
    hidden: List[Tuple[Node, Node]] = []
    for layer, (fh, fc, bh, bc) in enumerate(enc.final):
        h0 = tanh(
            add(
                matmul(concat([fh, bh]), params[f"bridge.{layer}.h.w"]),
                params[f"bridge.{layer}.h.b"],
            )
        )
        c0 = add(
            matmul(concat([fc, bc]), params[f"bridge.{layer}.c.w"]),
            params[f"bridge.{layer}.c.b"],
        )
        hidden.append((h0, c0))
    batch, _, width = enc.states.shape
    return DecoderState(hidden, constant(np.zeros((batch, width))))


def attention(query: Node, enc: EncoderStates, w: Node) -> Tuple[Node, Node]:
    """
    Global bilinear attention: `s_i = query^T W h_i`, softmax over the real
    positions, context = weighted sum of the encoder states.
    """
    scores = batched_matvec(enc.states, matmul(query, w))
    if not enc.mask.all():
        scores = add(scores, constant(np.where(enc.mask > 0, 0.0, -np.inf)))
    weights = softmax(scores)
    return batched_vecmat(weights, enc.states), weights


def decode_step(
    params: ModelParams,
    state: DecoderState,
    prev_ids: np.ndarray,
    enc: EncoderStates,
    c: Optional[Node] = None,
    training: bool = False,
    rng: Optional[np.random.Generator] = None,
) -> Tuple[Node, DecoderState, Node]:
    """
    One decoder step. The LSTM input is `[w_{t-1}; d_{t-1}]`, plus the constraint
    under M3. Returns the next-token logits, the new state and attention weights.
    """
    config = params.config
    w = embedding_lookup(params["emb.target"], prev_ids)
    x = concat([w, state.context])
    side = c if config.method is Method.M3 else None

    hidden: List[Tuple[Node, Node]] = []
    for layer, (h, cell) in enumerate(state.hidden):
        if layer > 0:
            x = dropout(x, config.dropout_p, training, rng)  # type: ignore[arg-type]
        h, cell = _lstm_step(
            params, f"dec.{layer}", x, h, cell, side if layer == 0 else None
        )
        hidden.append((h, cell))
        x = h

    context, weights = attention(x, enc, params["attn.w"])
    logits = add(matmul(concat([x, context]), params["out.w"]), params["out.b"])
    return logits, DecoderState(hidden, context, w), weights


@dataclass(frozen=True)
class LossResult:
    loss: Node
    tokens: int

    @property
    def nll_sum(self) -> float:
        return float(self.loss.value) * self.tokens


DecoderInputHook = Callable[[int, np.ndarray], None]


def encode_batch(
    params: ModelParams,
    batch: Batch,
    c: Optional[Node] = None,
    training: bool = False,
    rng: Optional[np.random.Generator] = None,
) -> EncoderStates:
    return encode(
        params,
        [
            encode_slot_value(params, batch.type_ids[:, i], batch.value_ids[:, i], c)
            for i in range(batch.type_ids.shape[1])
        ],
        batch.mask,
        training,
        rng,
    )


def constraint_input(batch: Batch) -> Optional[Node]:
    return constant(batch.constraint) if batch.constraint.shape[1] else None


def loss(
    params: ModelParams,
    batch: Batch,
    training: bool = False,
    rng: Optional[np.random.Generator] = None,
    on_decoder_input: Optional[DecoderInputHook] = None,
) -> LossResult:
    """
    Mean per-token NLL of the batch targets under teacher forcing; every step is fed
    the ground-truth previous token. `on_decoder_input(t, ids)` observes those ids.
    """
    c = constraint_input(batch)
    enc = encode_batch(params, batch, c, training, rng)
    state = initial_state(params, enc)

    total: Optional[Node] = None
    for t in range(1, batch.targets.shape[1]):
        prev = batch.targets[:, t - 1]
        if on_decoder_input is not None:
            on_decoder_input(t, prev)
        logits, state, _ = decode_step(params, state, prev, enc, c, training, rng)
        nll = mul(
            cross_entropy(logits, batch.targets[:, t]),
            constant(batch.target_mask[:, t]),
        )
        step = sum_(nll)
        total = step if total is None else add(total, step)

    tokens = int(batch.target_mask[:, 1:].sum())
    if total is None or tokens == 0:
        raise ValueError("loss() needs targets with at least one token after BOS")
    return LossResult(scale(total, 1.0 / tokens), tokens)
