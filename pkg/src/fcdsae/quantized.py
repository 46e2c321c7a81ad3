"""Bit-exact fixed-point inference engine: Q-format quantization with
saturating arithmetic, model quantization, and the streaming-frame path that
mirrors the deployed accelerator word-for-word.

All raw words are Python ints, so every arithmetic step is exact regardless
of format width. Per-layer products accumulate in a double-width value and
are re-quantized (round half away from zero, then saturate) back to the
compute format after each layer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from fcdsae.errors import DomainError, FrameError, ParseError

QMODEL_MAGIC = "FCDSAE-Q 1"


@dataclass(frozen=True)
class QFormat:
    """Signed fixed-point format: total_bits words, integer_bits of range
    (sign included), the rest fractional."""

    total_bits: int = 16
    integer_bits: int = 8

    def __post_init__(self):
        if not 2 <= self.total_bits <= 32:
            raise DomainError(f"total_bits must be in [2,32], got {self.total_bits}")
        if not 1 <= self.integer_bits < self.total_bits:
            raise DomainError(
                f"integer_bits must be in [1, total_bits), got {self.integer_bits}"
            )

    @property
    def frac_bits(self) -> int:
        return self.total_bits - self.integer_bits

    @property
    def raw_min(self) -> int:
        return -(1 << (self.total_bits - 1))

    @property
    def raw_max(self) -> int:
        return (1 << (self.total_bits - 1)) - 1

    @property
    def min_value(self) -> float:
        return self.raw_min * 2.0 ** -self.frac_bits

    @property
    def max_value(self) -> float:
        return self.raw_max * 2.0 ** -self.frac_bits

    def __str__(self) -> str:
        return f"Q{self.integer_bits}.{self.frac_bits}"

    @classmethod
    def parse(cls, text: str) -> "QFormat":
        """Parse 'Qi.f' (e.g. 'Q8.8') into a format descriptor."""
        if not text.startswith("Q") or "." not in text:
            raise DomainError(f"bad Q-format string {text!r}, expected 'Qi.f'")
        try:
            i_str, f_str = text[1:].split(".", 1)
            i, f = int(i_str), int(f_str)
        except ValueError:
            raise DomainError(f"bad Q-format string {text!r}") from None
        return cls(total_bits=i + f, integer_bits=i)


# sensor words and standardization means ride a fixed wide input format so
# raw bench values (hundreds of volts/kPa, timestamps in the tens of
# thousands) never saturate regardless of the compute format under study
INPUT_FORMAT = QFormat(total_bits=32, integer_bits=18)
# inverse-std scale factors span ~1e-4 .. ~40, so they get more fraction
SCALE_FORMAT = QFormat(total_bits=32, integer_bits=8)


def quantize(x: float, fmt: QFormat) -> int:
    """Round half away from zero to the nearest representable raw word,
    saturating at the format's range bounds."""
    scaled = float(x) * (1 << fmt.frac_bits)
    raw = int(math.floor(abs(scaled) + 0.5))
    if scaled < 0:
        raw = -raw
    return min(max(raw, fmt.raw_min), fmt.raw_max)


def dequantize(raw: int, fmt: QFormat) -> float:
    return raw * 2.0 ** -fmt.frac_bits


def requantize(acc: int, shift: int, fmt: QFormat) -> int:
    """Scale an exact accumulator down by 2^shift (round half away from
    zero) and saturate into fmt's raw range."""
    if shift > 0:
        half = 1 << (shift - 1)
        if acc >= 0:
            acc = (acc + half) >> shift
        else:
            acc = -((-acc + half) >> shift)
    return min(max(acc, fmt.raw_min), fmt.raw_max)


@dataclass
class QuantizedModel:
    """Integer-word network plus quantized standardization constants."""

    fmt: QFormat
    weights: list[list[list[int]]]   # per layer: fan_out rows of fan_in words
    biases: list[list[int]]          # per layer: fan_out words
    std_mean: list[int]              # INPUT_FORMAT words
    std_invstd: list[int]            # SCALE_FORMAT words
    saturation_count: int = 0

    @property
    def input_width(self) -> int:
        return len(self.weights[0][0])

    @property
    def output_width(self) -> int:
        return len(self.biases[-1])


def quantize_model(params, std, fmt: QFormat = QFormat()) -> QuantizedModel:
    """Quantize every weight, bias, and standardizer constant; values beyond
    the representable range saturate and are tallied, never rejected."""
    saturated = 0

    def q(x: float, f: QFormat) -> int:
        nonlocal saturated
        if x > f.max_value or x < f.min_value:
            saturated += 1
        return quantize(x, f)

    weights, biases = [], []
    for layer in params.layers:
        weights.append([[q(w, fmt) for w in row] for row in layer.weights])
        biases.append([q(b, fmt) for b in layer.biases])
    std_mean = [q(m, INPUT_FORMAT) for m in std.mean]
    std_invstd = [q(1.0 / s, SCALE_FORMAT) for s in std.std]
    return QuantizedModel(fmt=fmt, weights=weights, biases=biases,
                          std_mean=std_mean, std_invstd=std_invstd,
                          saturation_count=saturated)


def frame_from_features(features) -> list[int]:
    """Quantize one row of raw sensor values into input-format words,
    canonical column order."""
    return [quantize(float(x), INPUT_FORMAT) for x in features]


def q_forward(qm: QuantizedModel, frame: list[int]) -> tuple[list[int], int]:
    """Fixed-point forward pass over one frame.

    Standardization, matrix-vector products, bias adds, and ReLU all run on
    raw integer words; each layer's double-width accumulator is re-quantized
    to the compute format before the next layer. Returns the three output
    words and the argmax class (lowest index on ties).
    """
    if len(frame) != qm.input_width:
        raise FrameError(
            f"frame has {len(frame)} words, model expects {qm.input_width}"
        )
    f = qm.fmt.frac_bits
    # z = (x - mean) * invstd, exact product at 2^-(in_f + scale_f), then
    # rounded into the compute format
    std_shift = INPUT_FORMAT.frac_bits + SCALE_FORMAT.frac_bits - f
    acts = [
        requantize((x - m) * s, std_shift, qm.fmt)
        for x, m, s in zip(frame, qm.std_mean, qm.std_invstd)
    ]
    for w_layer, b_layer in zip(qm.weights, qm.biases):
        nxt = []
        for row, b in zip(w_layer, b_layer):
            acc = b << f  # bias at the accumulator's 2^-2f scale
            for w, a in zip(row, acts):
                acc += w * a
            y = requantize(acc, f, qm.fmt)
            nxt.append(y if y > 0 else 0)
        acts = nxt
    pred = max(range(len(acts)), key=lambda i: (acts[i], -i))
    return acts, pred


@dataclass
class QuantEvalResult:
    metrics: "MetricBlock"
    predictions: list[int]
    accuracy_delta: float | None = None


def evaluate_quantized(qm: QuantizedModel, examples,
                       float_accuracy: float | None = None) -> QuantEvalResult:
    """Metric block of the fixed-point path over labeled examples, plus the
    accuracy delta against the float path when its accuracy is supplied."""
    from fcdsae.metrics import confusion, metric_block

    preds, trues = [], []
    for ex in examples:
        _, pred = q_forward(qm, frame_from_features(ex.features))
        preds.append(pred)
        trues.append(ex.class_label)
    block = metric_block(confusion(trues, preds))
    delta = None
    if float_accuracy is not None:
        delta = float_accuracy - block.accuracy
    return QuantEvalResult(metrics=block, predictions=preds,
                           accuracy_delta=delta)


def dump_frames(qm: QuantizedModel, frames: list[list[int]]) -> str:
    """One line per frame: 10 input words then 3 output words, decimal.
    Byte-comparable across implementations."""
    lines = []
    for frame in frames:
        outs, _ = q_forward(qm, frame)
        lines.append(" ".join(str(w) for w in list(frame) + outs))
    return "\n".join(lines) + "\n"


def save_qmodel(qm: QuantizedModel, path) -> None:
    lines = [QMODEL_MAGIC,
             f"Q {qm.fmt.total_bits} {qm.fmt.integer_bits}",
             f"QIN {INPUT_FORMAT.total_bits} {INPUT_FORMAT.integer_bits}",
             f"QSCALE {SCALE_FORMAT.total_bits} {SCALE_FORMAT.integer_bits}",
             "STDMEAN " + " ".join(str(v) for v in qm.std_mean),
             "STDINVSTD " + " ".join(str(v) for v in qm.std_invstd)]
    for w_layer, b_layer in zip(qm.weights, qm.biases):
        fan_out, fan_in = len(w_layer), len(w_layer[0])
        lines.append(f"LAYER {fan_in} {fan_out}")
        for row in w_layer:
            lines.append(" ".join(str(v) for v in row))
        lines.append("BIAS")
        lines.append(" ".join(str(v) for v in b_layer))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_qmodel(path) -> QuantizedModel:
    with open(path) as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    if not lines or lines[0] != QMODEL_MAGIC:
        raise ParseError(f"{path}: missing '{QMODEL_MAGIC}' header")
    head = lines[1].split()
    if head[0] != "Q" or len(head) != 3:
        raise ParseError(f"{path}: missing Q format line")
    fmt = QFormat(total_bits=int(head[1]), integer_bits=int(head[2]))
    idx = 2
    std_mean = std_invstd = None
    while idx < len(lines) and not lines[idx].startswith("LAYER"):
        tag, *vals = lines[idx].split()
        if tag == "STDMEAN":
            std_mean = [int(v) for v in vals]
        elif tag == "STDINVSTD":
            std_invstd = [int(v) for v in vals]
        elif tag not in ("QIN", "QSCALE"):
            raise ParseError(f"{path} line {idx + 1}: unexpected record {tag!r}")
        idx += 1
    if std_mean is None or std_invstd is None:
        raise ParseError(f"{path}: missing standardizer records")
    weights, biases = [], []
    while idx < len(lines):
        head = lines[idx].split()
        if head[0] != "LAYER" or len(head) != 3:
            raise ParseError(f"{path} line {idx + 1}: expected LAYER header")
        fan_in, fan_out = int(head[1]), int(head[2])
        idx += 1
        rows = []
        for _ in range(fan_out):
            vals = [int(v) for v in lines[idx].split()]
            if len(vals) != fan_in:
                raise ParseError(f"{path} line {idx + 1}: expected {fan_in} words")
            rows.append(vals)
            idx += 1
        if lines[idx] != "BIAS":
            raise ParseError(f"{path} line {idx + 1}: expected BIAS line")
        idx += 1
        b = [int(v) for v in lines[idx].split()]
        if len(b) != fan_out:
            raise ParseError(f"{path} line {idx + 1}: expected {fan_out} biases")
        idx += 1
        weights.append(rows)
        biases.append(b)
    return QuantizedModel(fmt=fmt, weights=weights, biases=biases,
                          std_mean=std_mean, std_invstd=std_invstd)
