"""Cusp-form coefficient providers.

The built-in generator produces the weight-12 level-1 discriminant form with
normalized eigenvalues lambda(n) = tau(n) / n^(11/2), where tau comes from
the eta-product q prod (1-q^n)^24 computed exactly in integer arithmetic
(via the eighth power of Jacobi's theta identity for the cube). Other forms
are ingested from text files and validated against the Hecke relations

    lambda(m n) = lambda(m) lambda(n)                        gcd(m, n) = 1,
    lambda(p) lambda(p^k) = lambda(p^(k+1)) + chi(p) lambda(p^(k-1)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .errors import (
    CoefficientRangeError,
    FormFileError,
    HeckeViolationError,
    PreconditionError,
)
from .specialfn import GammaFactorKind, holomorphic_kind, maass_kind

MAX_TAU_RANGE = 10**6


def ramanujan_tau(n_max: int) -> List[int]:
    """tau(1), ..., tau(n_max), exact.

    Computed as the coefficients of q prod (1-q^n)^24 = q * (J(q))^8 where
    J(q) = sum_{j>=0} (-1)^j (2j+1) q^(j(j+1)/2) is sparse, so each of the 8
    multiplications costs O(n_max sqrt(n_max)) big-int operations.
    """
    if n_max < 1:
        raise PreconditionError("n_max must be >= 1")
    if n_max > MAX_TAU_RANGE:
        raise PreconditionError(f"exact tau generation capped at n_max = {MAX_TAU_RANGE}")
    length = n_max
    sparse = []
    j = 0
    while j * (j + 1) // 2 < length:
        sparse.append((j * (j + 1) // 2, (-1) ** j * (2 * j + 1)))
        j += 1
    acc = np.zeros(length, dtype=object)
    acc[0] = 1
    for _ in range(8):
        out = np.zeros(length, dtype=object)
        for expo, coef in sparse:
            out[expo:] += coef * acc[: length - expo]
        acc = out
    return [int(v) for v in acc]


def ramanujan_tau_naive(n_max: int) -> List[int]:
    """Independent oracle: multiply out q prod_{n<=n_max} (1-q^n)^24 termwise."""
    length = n_max
    poly = [0] * length
    poly[0] = 1
    for n in range(1, length):
        for _ in range(24):
            for i in range(length - 1, n - 1, -1):
                poly[i] -= poly[i - n]
    return poly


@dataclass
class HeckeReport:
    max_violation: float
    pairs_checked: int
    prime_power_checked: int
    first_violation: Optional[Tuple[int, int, float]] = None  # (m, n, violation)

    @property
    def ok(self) -> bool:
        return self.first_violation is None


@dataclass
class CuspForm:
    """Hecke eigendata in the normalized (analytic) coefficient convention.

    lam[i] is lambda(i+1). The nebentypus is stored as the full value table
    chi(0), ..., chi(M-1) with chi(a) = 0 whenever gcd(a, M) > 1. eta is the
    modulus-one constant of the dual summation formula; it is measured by
    calibration, not assumed, so fresh forms carry None.
    """

    kind: GammaFactorKind
    level: int
    chi: np.ndarray
    lam: np.ndarray
    epsilon_f: Optional[complex] = None
    eta: Optional[complex] = None
    epsilon_g: Optional[float] = None
    tol: float = 1e-9
    label: str = ""
    _tau: Optional[List[int]] = field(default=None, repr=False)

    @property
    def n_max(self) -> int:
        return len(self.lam)

    def lam_at(self, n: int) -> complex:
        if n < 1 or n > self.n_max:
            raise CoefficientRangeError(f"lambda({n}) outside stored range 1..{self.n_max}")
        return self.lam[n - 1]

    def lam_slice(self, n_hi: int) -> np.ndarray:
        if n_hi > self.n_max:
            raise CoefficientRangeError(f"need coefficients to {n_hi}, have {self.n_max}")
        return self.lam[:n_hi]

    def chi_at(self, a: int) -> complex:
        return self.chi[a % self.level]

    def tau_at(self, n: int) -> int:
        if self._tau is None:
            raise PreconditionError("exact tau values only available on the generated form")
        return self._tau[n - 1]


def trivial_character(level: int) -> np.ndarray:
    chi = np.array(
        [1.0 + 0.0j if math.gcd(a, level) == 1 else 0.0j for a in range(level)]
    )
    return chi


def delta_form(n_max: int = 10000) -> CuspForm:
    """The discriminant cusp form: weight 12, level 1, trivial character.

    epsilon_f = +1 (the completed L-function of the discriminant form is
    invariant under s -> 1-s).
    """
    tau = ramanujan_tau(n_max)
    n = np.arange(1, n_max + 1, dtype=float)
    lam = np.array([float(t) for t in tau]) / (n**5 * np.sqrt(n))
    return CuspForm(
        kind=holomorphic_kind(12),
        level=1,
        chi=trivial_character(1),
        lam=lam.astype(complex),
        epsilon_f=1.0 + 0.0j,
        epsilon_g=None,
        label="delta",
        _tau=tau,
    )


def constant_form(n_max: int, value: complex = 1.0) -> CuspForm:
    """Synthetic coefficient stream lambda(n) = value; not a Hecke form.

    Used as an arithmetic control in identity tests (set value = 0 for the
    zero stream).
    """
    lam = np.full(n_max, complex(value))
    return CuspForm(
        kind=holomorphic_kind(12),
        level=1,
        chi=trivial_character(1),
        lam=lam,
        epsilon_f=1.0 + 0.0j,
        label=f"constant-{value}",
    )


def hecke_verify(form: CuspForm, n_max: Optional[int] = None) -> HeckeReport:
    """Check multiplicativity and the p-power recursion up to n_max.

    Report-only: the worst absolute violation is returned, never raised.
    """
    n_hi = min(n_max or form.n_max, form.n_max)
    lam = form.lam
    worst = 0.0
    first = None
    pairs = 0
    # coprime multiplicativity over all m <= n <= n_hi with m*n <= n_hi
    for m in range(2, int(math.isqrt(n_hi)) + 1):
        for n in range(m, n_hi // m + 1):
            if math.gcd(m, n) != 1:
                continue
            pairs += 1
            diff = abs(lam[m * n - 1] - lam[m - 1] * lam[n - 1])
            if diff > worst:
                worst = diff
                if diff > form.tol and first is None:
                    first = (m, n, diff)
    # p-power recursion
    ppow = 0
    for p in _primes_upto(n_hi):
        chi_p = form.chi_at(p)
        k = 1
        while p ** (k + 1) <= n_hi:
            ppow += 1
            lhs = lam[p - 1] * lam[p**k - 1]
            rhs = lam[p ** (k + 1) - 1] + chi_p * (lam[p ** (k - 1) - 1] if k >= 1 else 0)
            diff = abs(lhs - rhs)
            if diff > worst:
                worst = diff
                if diff > form.tol and first is None:
                    first = (p, p**k, diff)
            k += 1
    return HeckeReport(
        max_violation=float(worst),
        pairs_checked=pairs,
        prime_power_checked=ppow,
        first_violation=first,
    )


def _primes_upto(n: int):
    if n < 2:
        return []
    sieve = bytearray([1]) * (n + 1)
    sieve[0:2] = b"\x00\x00"
    for p in range(2, int(n**0.5) + 1):
        if sieve[p]:
            sieve[p * p :: p] = b"\x00" * len(sieve[p * p :: p])
    return [i for i, v in enumerate(sieve) if v]


def rankin_average(form: CuspForm, x_values: Sequence[int]):
    """[(x, mean of |lambda(n)|^2 over n <= x)] for each requested x."""
    out = []
    sq = np.abs(form.lam) ** 2
    for x in x_values:
        x = int(x)
        if x > form.n_max:
            raise CoefficientRangeError(f"x = {x} beyond stored range {form.n_max}")
        out.append((x, float(np.sum(sq[:x]) / x)))
    return out


# ---------------------------------------------------------------------------
# coefficient files
# ---------------------------------------------------------------------------
#
# UTF-8 text; header lines  #key value  for kind, k or (ell, delta, eps_g),
# M, chi (M comma-separated values), eps_f, n_max, tol, optionally eta; then
# lines  n lambda_re [lambda_im]  with n strictly increasing from 1.


def _format_complex(z: complex) -> str:
    z = complex(z)
    if z.imag == 0:
        return repr(z.real)
    return repr(z)  # parenthesized python literal, e.g. (1+2j)


def _parse_complex(text: str, line_no: int) -> complex:
    try:
        return complex(text)
    except ValueError as exc:
        raise FormFileError(f"bad complex literal {text!r}", line=line_no) from exc


def export_form(form: CuspForm, path: str) -> None:
    lines = []
    if form.kind.family == "holomorphic":
        lines.append("#kind holomorphic")
        lines.append(f"#k {form.kind.weight}")
    else:
        lines.append("#kind maass")
        ell = complex(form.kind.ell)
        lines.append(f"#ell {_format_complex(ell)}")
        lines.append(f"#delta {form.kind.parity}")
        lines.append(f"#eps_g {form.epsilon_g if form.epsilon_g is not None else 1}")
    lines.append(f"#M {form.level}")
    lines.append("#chi " + ",".join(_format_complex(v) for v in form.chi))
    if form.epsilon_f is not None:
        lines.append(f"#eps_f {_format_complex(form.epsilon_f)}")
    if form.eta is not None:
        lines.append(f"#eta {_format_complex(form.eta)}")
    lines.append(f"#n_max {form.n_max}")
    lines.append(f"#tol {form.tol!r}")
    for i, lam in enumerate(form.lam):
        lam = complex(lam)
        if lam.imag == 0:
            lines.append(f"{i + 1} {lam.real!r}")
        else:
            lines.append(f"{i + 1} {lam.real!r} {lam.imag!r}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_form(path: str) -> CuspForm:
    """Parse a coefficient file; Hecke relations are validated on load.

    Raises :class:`FormFileError` (with the line number) on malformed input
    and :class:`HeckeViolationError` naming the first offending index if the
    stored eigenvalues break multiplicativity beyond the header tolerance.
    """
    header = {}
    coeffs = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                try:
                    key, value = line[1:].split(None, 1)
                except ValueError as exc:
                    raise FormFileError("header line needs a key and a value", line=line_no) from exc
                header[key] = (value.strip(), line_no)
                continue
            parts = line.split()
            if len(parts) not in (2, 3):
                raise FormFileError("coefficient lines are `n re [im]`", line=line_no)
            try:
                n = int(parts[0])
                re_v = float(parts[1])
                im_v = float(parts[2]) if len(parts) == 3 else 0.0
            except ValueError as exc:
                raise FormFileError(f"bad coefficient line {line!r}", line=line_no) from exc
            expected = len(coeffs) + 1
            if n != expected:
                raise FormFileError(
                    f"coefficient index {n} out of order (expected {expected})", line=line_no
                )
            coeffs.append(complex(re_v, im_v))

    def need(key):
        if key not in header:
            raise FormFileError(f"missing header #{key}")
        return header[key][0]

    kind_name = need("kind")
    level = int(need("M"))
    if kind_name == "holomorphic":
        kind = holomorphic_kind(int(need("k")))
        eps_g = None
    elif kind_name == "maass":
        ell_text, ell_line = header.get("ell", (None, 0))
        if ell_text is None:
            raise FormFileError("maass forms need #ell")
        kind = maass_kind(_parse_complex(ell_text, ell_line), int(need("delta")))
        eps_g = float(need("eps_g"))
    else:
        raise FormFileError(f"unknown kind {kind_name!r}", line=header["kind"][1])

    chi_text, chi_line = header["chi"] if "chi" in header else (None, 0)
    if chi_text is None:
        raise FormFileError("missing header #chi")
    chi_vals = [_parse_complex(v, chi_line) for v in chi_text.split(",")]
    if len(chi_vals) != level:
        raise FormFileError(
            f"chi table has {len(chi_vals)} entries, level M = {level}", line=chi_line
        )
    chi = np.array(chi_vals, dtype=complex)
    for a in range(level):
        if math.gcd(a, level) > 1 and abs(chi[a]) > 0:
            raise FormFileError(f"chi({a}) must vanish for gcd(a, M) > 1", line=chi_line)

    n_max = int(need("n_max"))
    if n_max != len(coeffs):
        raise FormFileError(f"n_max = {n_max} but {len(coeffs)} coefficients present")
    tol = float(need("tol"))
    eps_f = None
    if "eps_f" in header:
        eps_f = _parse_complex(*header["eps_f"])
    eta = None
    if "eta" in header:
        eta = _parse_complex(*header["eta"])

    form = CuspForm(
        kind=kind,
        level=level,
        chi=chi,
        lam=np.array(coeffs, dtype=complex),
        epsilon_f=eps_f,
        eta=eta,
        epsilon_g=eps_g,
        tol=tol,
        label=path,
    )
    report = hecke_verify(form)
    if report.first_violation is not None:
        m, n, viol = report.first_violation
        raise HeckeViolationError(
            f"Hecke relation fails at ({m}, {n}): violation {viol:.3e} > tol {tol:.1e}",
            n=m * n,
            violation=viol,
        )
    return form


def multiplicative_extension(prime_values: dict, chi: np.ndarray, level: int, n_max: int):
    """Extend lambda(p) data to all n <= n_max through the Hecke recursion.

    Produces a Hecke-multiplicative sequence (useful for synthetic
    fixtures); it does not certify that the values come from a cusp form.
    """
    lam = np.zeros(n_max, dtype=complex)
    lam[0] = 1.0
    spf = np.zeros(n_max + 1, dtype=int)
    for p in _primes_upto(n_max):
        spf[p::p][spf[p::p] == 0] = p
    for n in range(2, n_max + 1):
        p = int(spf[n])
        m, k = n, 0
        while m % p == 0:
            m //= p
            k += 1
        if m > 1:
            lam[n - 1] = lam[m - 1] * lam[p**k - 1]
            continue
        if k == 1:
            lam[n - 1] = prime_values.get(p, 0.0)
        else:
            chi_p = chi[p % level]
            lam[n - 1] = lam[p - 1] * lam[p ** (k - 1) - 1] - chi_p * lam[p ** (k - 2) - 1]
    return lam
