"""Binary-word combinatorics: orders, numbering, pairing, true-path estimates.

Words over {0,1} are plain Python strings of ``'0'``/``'1'`` characters; the
empty word (written lambda in the human-readable output) is ``""``.  The
strict "lexicographically smaller" order used throughout is the tree order:
``sigma <_L tau`` iff some common prefix continues with 0 in ``sigma`` and
with 1 in ``tau``.  Two distinct words are incomparable under it exactly
when one is a proper prefix of the other.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import isqrt

__all__ = [
    "BinStr",
    "TruePathEstimate",
    "is_prefix",
    "is_proper_prefix",
    "lex_less",
    "nu",
    "nu_inv",
    "cantor_pair",
    "cantor_unpair",
    "pair",
    "unpair",
    "true_path_estimate",
]

BinStr = str


def is_prefix(sigma: BinStr, tau: BinStr) -> bool:
    """True iff sigma is a (not necessarily proper) prefix of tau."""
    return tau.startswith(sigma)


def is_proper_prefix(sigma: BinStr, tau: BinStr) -> bool:
    return len(sigma) < len(tau) and tau.startswith(sigma)


def lex_less(sigma: BinStr, tau: BinStr) -> bool:
    """The tree order: true iff some rho has rho0 a prefix of sigma and rho1 of tau."""
    n = min(len(sigma), len(tau))
    for i in range(n):
        if sigma[i] != tau[i]:
            return sigma[i] == "0"
    return False


def nu(sigma: BinStr) -> int:
    """Position of sigma in the length-lexicographic enumeration of all words.

    The enumeration starts "", "0", "1", "00", "01", ...; so
    nu(sigma) = 2**len(sigma) - 1 + <binary value of sigma>.
    """
    return (1 << len(sigma)) - 1 + (int(sigma, 2) if sigma else 0)


def nu_inv(n: int) -> BinStr:
    """Inverse of :func:`nu`."""
    if n < 0:
        raise ValueError("nu_inv needs a natural number")
    length = (n + 1).bit_length() - 1
    if length == 0:
        return ""
    return format(n - ((1 << length) - 1), f"0{length}b")


def cantor_pair(m: int, n: int) -> int:
    """Cantor's pairing (m + n)(m + n + 1)/2 + n."""
    return (m + n) * (m + n + 1) // 2 + n


def cantor_unpair(z: int) -> tuple[int, int]:
    """Inverse of :func:`cantor_pair`."""
    if z < 0:
        raise ValueError("cantor_unpair needs a natural number")
    w = (isqrt(8 * z + 1) - 1) // 2
    n = z - w * (w + 1) // 2
    return w - n, n


def pair(sigma: BinStr, n: int) -> int:
    """The word/number pairing cantor_pair(nu(sigma), n)."""
    return cantor_pair(nu(sigma), n)


def unpair(code: int) -> tuple[BinStr, int]:
    """Inverse of :func:`pair`."""
    m, n = cantor_unpair(code)
    return nu_inv(m), n


@dataclass(frozen=True)
class TruePathEstimate:
    """Finite-horizon surrogate for the limsup path of a settlement sequence.

    ``path`` is the estimated prefix, never longer than the longest
    settlement observed in the window.  ``stable_upto`` is the length of the
    longest initial segment along which the chosen bit beat the other bit's
    count by at least the threshold; bits past that point are best guesses.
    """

    path: BinStr
    stable_upto: int
    window: tuple[int, int]


def true_path_estimate(
    settlements: list[BinStr],
    window: tuple[int, int] | None = None,
    threshold: int = 3,
) -> TruePathEstimate:
    """Estimate the true path of a settlement sequence by windowed counting.

    Bit e+1 of the estimate is 0 iff the current prefix extended by 0
    prefixes at least ``threshold`` of the settlements in the half-open
    window, else 1 (matching the limsup convention that starves bits
    default to 1).  ``window`` defaults to the second half of the run.
    """
    if threshold < 1:
        raise ValueError("threshold must be >= 1")
    if window is None:
        window = (len(settlements) // 2, len(settlements))
    lo, hi = window
    if not (0 <= lo < hi <= len(settlements)):
        raise ValueError(f"empty or out-of-range window {window}")

    observed = settlements[lo:hi]
    max_len = max(len(s) for s in observed)
    path = ""
    stable = 0
    stable_run = True
    # candidates: settlements still extending the current prefix
    candidates = observed
    for depth in range(max_len):
        zeros = [s for s in candidates if len(s) > depth and s[depth] == "0"]
        ones = [s for s in candidates if len(s) > depth and s[depth] == "1"]
        if len(zeros) >= threshold:
            bit, chosen, other = "0", zeros, ones
        else:
            bit, chosen, other = "1", ones, zeros
        path += bit
        if stable_run and len(chosen) - len(other) >= threshold:
            stable = len(path)
        else:
            stable_run = False
        candidates = chosen
    return TruePathEstimate(path=path, stable_upto=stable, window=window)
