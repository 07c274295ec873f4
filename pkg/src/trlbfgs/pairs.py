"""Limited-memory storage of curvature pairs with cached Gram blocks.

A :class:`PairBuffer` holds the ``m`` most recent accepted pairs ``(s, y)``
(oldest first) together with the small cross-product blocks ``S^T S``,
``S^T Y`` and ``Y^T Y``.  The blocks are maintained incrementally, one
appended row/column per accepted pair, so the n-dimensional work per push
stays O(m n).
"""

from dataclasses import dataclass

import numpy as np

from .errors import EmptyHistoryError

__all__ = ["CurvaturePair", "PairBuffer"]


@dataclass(frozen=True)
class CurvaturePair:
    """One accepted pair: step ``s``, gradient difference ``y``, cached scalars."""

    s: np.ndarray
    y: np.ndarray
    sy: float
    ss: float
    yy: float


class PairBuffer:
    """FIFO buffer of at most ``m`` accepted curvature pairs.

    Attributes:
        S, Y: n-by-m' column matrices of the stored pairs, oldest first.
        gram_SS, gram_SY, gram_YY: cached m'-by-m' blocks ``S^T S``,
            ``S^T Y`` and ``Y^T Y``.
        rejected: number of pairs turned away by the acceptance test.
    """

    def __init__(self, n: int, m: int, recompute_grams: bool = False):
        if n < 1 or m < 1:
            raise ValueError(f"need n >= 1 and m >= 1, got n={n}, m={m}")
        self.n = int(n)
        self.m = int(m)
        self.pairs: list[CurvaturePair] = []
        self.S = np.empty((self.n, 0))
        self.Y = np.empty((self.n, 0))
        self.gram_SS = np.empty((0, 0))
        self.gram_SY = np.empty((0, 0))
        self.gram_YY = np.empty((0, 0))
        self.rejected = 0
        # Debug-only path: rebuild every Gram block from the stored columns
        # instead of appending rows/columns. Used by the oracle tests.
        self._recompute_grams = bool(recompute_grams)

    def __len__(self) -> int:
        return len(self.pairs)

    @property
    def count(self) -> int:
        return len(self.pairs)

    def try_push(self, s, y, c3: float) -> bool:
        """Append ``(s, y)`` if it passes ``s^T y > c3 ||s|| ||y||``.

        The oldest pair is evicted when the buffer is full.  Returns True
        when the pair was stored; a rejected pair leaves the buffer
        untouched and is only counted in ``rejected``.
        """
        s = np.asarray(s, dtype=float)
        y = np.asarray(y, dtype=float)
        if s.shape != (self.n,) or y.shape != (self.n,):
            raise ValueError(
                f"pair has shape {s.shape}/{y.shape}, buffer expects ({self.n},)"
            )
        ss = float(s @ s)
        yy = float(y @ y)
        sy = float(s @ y)
        if not sy > c3 * np.sqrt(ss) * np.sqrt(yy) or ss == 0.0 or yy == 0.0:
            self.rejected += 1
            return False

        if len(self.pairs) == self.m:
            self._evict_oldest()

        # Cross products against the surviving columns, then grow each block.
        Ss = self.S.T @ s
        Sy = self.S.T @ y
        Ys = self.Y.T @ s
        Yy = self.Y.T @ y
        self.gram_SS = _grow(self.gram_SS, Ss, Ss, ss)
        self.gram_SY = _grow(self.gram_SY, Sy, Ys, sy)
        self.gram_YY = _grow(self.gram_YY, Yy, Yy, yy)

        self.pairs.append(CurvaturePair(s=s.copy(), y=y.copy(), sy=sy, ss=ss, yy=yy))
        self.S = np.column_stack([p.s for p in self.pairs])
        self.Y = np.column_stack([p.y for p in self.pairs])

        if self._recompute_grams:
            self.gram_SS = self.S.T @ self.S
            self.gram_SY = self.S.T @ self.Y
            self.gram_YY = self.Y.T @ self.Y
        return True

    def _evict_oldest(self):
        self.pairs.pop(0)
        self.gram_SS = self.gram_SS[1:, 1:].copy()
        self.gram_SY = self.gram_SY[1:, 1:].copy()
        self.gram_YY = self.gram_YY[1:, 1:].copy()
        if self.pairs:
            self.S = np.column_stack([p.s for p in self.pairs])
            self.Y = np.column_stack([p.y for p in self.pairs])
        else:
            self.S = np.empty((self.n, 0))
            self.Y = np.empty((self.n, 0))

    def triangular_views(self):
        """Split ``S^T Y`` into (L, D, T): strictly lower, diagonal, upper with diagonal."""
        if not self.pairs:
            raise EmptyHistoryError("triangular views need at least one stored pair")
        L = np.tril(self.gram_SY, -1)
        T = np.triu(self.gram_SY)
        D = np.diag(np.diag(self.gram_SY))
        return L, D, T

    def violations(self, c3: float) -> int:
        """Count stored pairs that fail the strict acceptance inequality."""
        return sum(
            1
            for p in self.pairs
            if not p.sy > c3 * np.sqrt(p.ss) * np.sqrt(p.yy)
        )


def _grow(block: np.ndarray, col: np.ndarray, row: np.ndarray, corner: float) -> np.ndarray:
    k = block.shape[0]
    out = np.empty((k + 1, k + 1))
    out[:k, :k] = block
    out[:k, k] = col
    out[k, :k] = row
    out[k, k] = corner
    return out
