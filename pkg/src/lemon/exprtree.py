"""Expression trees for differential operators and their prefix-token encoding.

A concrete operator such as ``u_t + 0.5*u_x`` is represented as an immutable
tree whose internal nodes are arithmetic ops and whose leaves are variables,
derivative symbols, or numeric constants.  Trees serialize to prefix (Polish)
token sequences; constants expand into a sign token, three mantissa digit
tokens, and a base-10 exponent token, so the token alphabet stays finite.

Canonical text form is one token per whitespace-separated field, e.g.

    + mul c+ 5 0 0 E-1 u_x u_t

for ``0.5*u_x + u_t``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ParseError, StructuralError, VocabularyError

BINARY_OPS = ("+", "-", "mul", "div", "pow")
UNARY_OPS = ("sin", "cos", "exp", "abs", "neg")
DERIVATIVE_SYMBOLS = ("u_t", "u_tt", "u_x", "u_xx", "u_xxx", "u_xxxx")
VARIABLE_SYMBOLS = ("x", "t", "u")
CONST = "const"

MANTISSA_DIGITS = 3  # significant digits kept by the constant encoding
EXPONENT_MIN = -10
EXPONENT_MAX = 10
SIGN_TOKENS = ("c+", "c-")
DIGIT_TOKENS = tuple(str(d) for d in range(10))
EXPONENT_TOKENS = tuple(f"E{e}" for e in range(EXPONENT_MIN, EXPONENT_MAX + 1))
CONSTANT_TOKEN_LEN = 5  # sign + 3 digits + exponent

_ARITY = {op: 2 for op in BINARY_OPS} | {op: 1 for op in UNARY_OPS}
# Tokens that may only appear inside a constant encoding.
CONSTANT_TOKENS = frozenset(SIGN_TOKENS) | set(DIGIT_TOKENS) | set(EXPONENT_TOKENS)
_CONSTANT_ONLY = CONSTANT_TOKENS


@dataclass(frozen=True)
class ExprNode:
    """One node of an operator expression tree.

    ``symbol`` is an operator name from ``BINARY_OPS``/``UNARY_OPS``, the
    literal ``"const"`` (with ``value`` set), or any other string, which is
    treated as a zero-arity leaf (variable or derivative symbol).
    """

    symbol: str
    value: float | None = None
    children: tuple["ExprNode", ...] = ()

    def __post_init__(self):
        arity = _ARITY.get(self.symbol, 0)
        if len(self.children) != arity:
            raise StructuralError(
                f"{self.symbol!r} takes {arity} children, got {len(self.children)}"
            )
        if self.symbol == CONST:
            if self.value is None or not math.isfinite(self.value):
                raise StructuralError(f"constant value must be finite, got {self.value!r}")
        elif self.value is not None:
            raise StructuralError(f"non-constant node {self.symbol!r} carries a value")
        if self.symbol != CONST and self.symbol in _CONSTANT_ONLY:
            raise StructuralError(f"{self.symbol!r} is reserved for constant encodings")

    @property
    def is_leaf(self) -> bool:
        return not self.children

    def node_count(self) -> int:
        return 1 + sum(c.node_count() for c in self.children)

    def __repr__(self):
        if self.symbol == CONST:
            return f"const({self.value:g})"
        if self.is_leaf:
            return self.symbol
        return f"({self.symbol} {' '.join(map(repr, self.children))})"


def const(v: float) -> ExprNode:
    return ExprNode(CONST, value=float(v))


def leaf(symbol: str) -> ExprNode:
    return ExprNode(symbol)


def add(a, b) -> ExprNode:
    return ExprNode("+", children=(_wrap(a), _wrap(b)))


def sub(a, b) -> ExprNode:
    return ExprNode("-", children=(_wrap(a), _wrap(b)))


def mul(a, b) -> ExprNode:
    return ExprNode("mul", children=(_wrap(a), _wrap(b)))


def div(a, b) -> ExprNode:
    return ExprNode("div", children=(_wrap(a), _wrap(b)))


def pow_(a, b) -> ExprNode:
    return ExprNode("pow", children=(_wrap(a), _wrap(b)))


def sin(a) -> ExprNode:
    return ExprNode("sin", children=(_wrap(a),))


def cos(a) -> ExprNode:
    return ExprNode("cos", children=(_wrap(a),))


def exp(a) -> ExprNode:
    return ExprNode("exp", children=(_wrap(a),))


def absval(a) -> ExprNode:
    return ExprNode("abs", children=(_wrap(a),))


def neg(a) -> ExprNode:
    return ExprNode("neg", children=(_wrap(a),))


def _wrap(x) -> ExprNode:
    if isinstance(x, ExprNode):
        return x
    return const(x)


_NUMPY_OPS = {
    "+": np.add,
    "-": np.subtract,
    "mul": np.multiply,
    "div": np.divide,
    "pow": np.power,
    "sin": np.sin,
    "cos": np.cos,
    "exp": np.exp,
    "abs": np.abs,
    "neg": np.negative,
}


def evaluate(tree: ExprNode, env: dict) -> np.ndarray:
    """Evaluate a tree numerically given arrays for every leaf symbol.

    ``env`` maps leaf symbols (``"x"``, ``"u"``, ``"u_xx"``, ...) to arrays of
    a common broadcastable shape.  Used by tests to check that an encoded
    operator's residual matches its mathematical definition.
    """
    if tree.symbol == CONST:
        return np.asarray(tree.value, dtype=float)
    if tree.is_leaf:
        if tree.symbol not in env:
            raise StructuralError(f"no value provided for leaf {tree.symbol!r}")
        return np.asarray(env[tree.symbol], dtype=float)
    args = [evaluate(c, env) for c in tree.children]
    return _NUMPY_OPS[tree.symbol](*args)


# ---------------------------------------------------------------------------
# Prefix (Polish) serialization
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SymbolSequence:
    """A flat prefix token sequence encoding one operator."""

    tokens: tuple[str, ...]

    def __len__(self):
        return len(self.tokens)

    def __iter__(self):
        return iter(self.tokens)

    def text(self) -> str:
        return " ".join(self.tokens)

    @classmethod
    def from_text(cls, line: str) -> "SymbolSequence":
        return cls(tuple(line.split()))


def encode_constant(v: float) -> list[str]:
    """Encode a float as [sign, d, d, d, E<e>] with 3 significant digits."""
    if not math.isfinite(v):
        raise StructuralError(f"cannot encode non-finite constant {v!r}")
    if v == 0.0:
        return ["c+", "0", "0", "0", "E0"]
    sign = "c+" if v > 0 else "c-"
    mantissa, exponent = f"{abs(v):.{MANTISSA_DIGITS - 1}e}".split("e")
    e = int(exponent)
    if not EXPONENT_MIN <= e <= EXPONENT_MAX:
        raise StructuralError(f"constant {v!r} exponent {e} outside [{EXPONENT_MIN}, {EXPONENT_MAX}]")
    digits = mantissa.replace(".", "")
    return [sign, digits[0], digits[1], digits[2], f"E{e}"]


def decode_constant(tokens: list[str] | tuple[str, ...]) -> float:
    sign, d0, d1, d2, etok = tokens
    s = -1.0 if sign == "c-" else 1.0
    return s * float(f"{d0}.{d1}{d2}e{int(etok[1:])}")


def to_polish(tree: ExprNode) -> SymbolSequence:
    """Serialize a tree to its preorder token sequence."""
    out: list[str] = []
    _emit(tree, out)
    return SymbolSequence(tuple(out))


def _emit(node: ExprNode, out: list[str]):
    if node.symbol == CONST:
        out.extend(encode_constant(node.value))
    else:
        out.append(node.symbol)
        for c in node.children:
            _emit(c, out)


def from_polish(seq: SymbolSequence) -> ExprNode:
    """Parse a prefix token sequence back into a tree.

    Raises :class:`ParseError` with the offending token index on underflow,
    leftover tokens, or tokens that can only occur inside a constant.
    """
    tokens = tuple(seq)
    if not tokens:
        raise ParseError("empty token sequence")
    node, pos = _parse(tokens, 0)
    if pos != len(tokens):
        raise ParseError(f"leftover tokens starting at index {pos}: {tokens[pos:pos + 4]!r}")
    return node


def _parse(tokens: tuple[str, ...], pos: int) -> tuple[ExprNode, int]:
    if pos >= len(tokens):
        raise ParseError(f"unexpected end of sequence at token {pos} (missing operand)")
    tok = tokens[pos]
    if tok in SIGN_TOKENS:
        end = pos + CONSTANT_TOKEN_LEN
        if end > len(tokens):
            raise ParseError(f"truncated constant at token {pos}")
        chunk = tokens[pos:end]
        if any(d not in DIGIT_TOKENS for d in chunk[1:4]) or chunk[4] not in EXPONENT_TOKENS:
            raise ParseError(f"malformed constant encoding at token {pos}: {chunk!r}")
        return const(decode_constant(chunk)), end
    arity = _ARITY.get(tok, 0)
    if arity:
        children = []
        cur = pos + 1
        for _ in range(arity):
            child, cur = _parse(tokens, cur)
            children.append(child)
        return ExprNode(tok, children=tuple(children)), cur
    if tok in _CONSTANT_ONLY:
        raise ParseError(f"token {tok!r} at index {pos} is only valid inside a constant")
    return leaf(tok), pos + 1


# ---------------------------------------------------------------------------
# Vocabulary
# ---------------------------------------------------------------------------

PAD, BOS, EOS = "<pad>", "<bos>", "<eos>"


@dataclass(frozen=True)
class Vocabulary:
    """Bijective token <-> id map with dense ids starting at 0."""

    ids: dict[str, int]
    tokens: tuple[str, ...] = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(sorted(self.ids, key=self.ids.get)))
        if sorted(self.ids.values()) != list(range(len(self.ids))):
            raise VocabularyError("vocabulary ids must be dense from 0")

    @classmethod
    def build(cls, symbols) -> "Vocabulary":
        """Specials first, then the sorted union of symbols and constant tokens."""
        pool = set(symbols)
        pool.update(DIGIT_TOKENS)
        pool.update(SIGN_TOKENS)
        pool.update(EXPONENT_TOKENS)
        ordered = [PAD, BOS, EOS] + sorted(pool)
        return cls(ids={tok: i for i, tok in enumerate(ordered)})

    def __len__(self):
        return len(self.ids)

    @property
    def pad_id(self) -> int:
        return self.ids[PAD]

    @property
    def bos_id(self) -> int:
        return self.ids[BOS]

    @property
    def eos_id(self) -> int:
        return self.ids[EOS]

    def __contains__(self, token: str) -> bool:
        return token in self.ids


def tokenize(seq: SymbolSequence, vocab: Vocabulary) -> list[int]:
    """Map a token sequence to integer ids wrapped in BOS/EOS."""
    out = [vocab.bos_id]
    for tok in seq:
        if tok not in vocab.ids:
            raise VocabularyError(f"token {tok!r} not in vocabulary")
        out.append(vocab.ids[tok])
    out.append(vocab.eos_id)
    return out


def detokenize(ids, vocab: Vocabulary) -> SymbolSequence:
    """Invert :func:`tokenize`; strips BOS/EOS/PAD."""
    specials = {vocab.pad_id, vocab.bos_id, vocab.eos_id}
    toks = []
    for i in ids:
        i = int(i)
        if i in specials:
            continue
        if not 0 <= i < len(vocab.tokens):
            raise VocabularyError(f"id {i} outside vocabulary of size {len(vocab.tokens)}")
        toks.append(vocab.tokens[i])
    return SymbolSequence(tuple(toks))
