"""Closed-form concentrating sequences and their norms and lower bounds.

The n-th element is the log-cone

    u_n = A_n b_n            on [0, e^-b_n]
    u_n = A_n log(1/r)       on [e^-b_n, 1]
    u_n = 0                  beyond 1

with A_n = sphere_area^(-1/N) (n/(N-beta))^(-1/N) and b_n = n/(N-beta), chosen
so that (A_n b_n)^(N/(N-1)) = n / critical_alpha_beta and the gradient norm
power is exactly 1.  The weighted L^N norm power has the closed form I + II
with an incomplete-gamma tail, which the quadrature route must reproduce; the
plateau piece of the exponential functional gives a rigorous lower bound that
diverges above the critical coefficient and powers the near-critical scan.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .core import (LogValue, ProblemParams, critical_alpha_beta, log_phi,
                   lower_incomplete_gamma, phi)
from .errors import DomainError
from .profiles import RadialProfile
from .report import ScanTable


@dataclass(frozen=True)
class MoserElement:
    """One member of the concentrating family, with its defining constants."""

    index: int
    amplitude: float      # A_n
    log_depth: float      # b_n
    lam: float            # normalization factor lambda_n
    profile: RadialProfile
    normalized: bool = False


def _constants(n: int, params: ProblemParams):
    if n < 1 or not isinstance(n, int):
        raise DomainError(f"index must be a positive integer, got {n!r}")
    nb = params.dim - params.beta
    b_n = n / nb
    a_n = (1.0 / params.sphere_area) ** (1.0 / params.dim) * b_n ** (-1.0 / params.dim)
    return a_n, b_n


def build(n: int, params: ProblemParams) -> MoserElement:
    """The n-th element, un-normalized: plateau A_n b_n down to zero at r = 1."""
    a_n, b_n = _constants(n, params)
    profile = RadialProfile([math.exp(-b_n), 1.0], [a_n * b_n, 0.0])
    return MoserElement(index=n, amplitude=a_n, log_depth=b_n,
                        lam=lam(n, params), profile=profile, normalized=False)


def weight_norm_closed_form(n: int, params: ProblemParams) -> float:
    """Exact weighted L^N norm power of the n-th element.

    Plateau piece plus the log-cone piece, the latter reduced by rho = log(1/r)
    to an incomplete-gamma integral:

        I  = omega (A_n b_n)^N e^(-(N-gamma) b_n) / (N - gamma)
        II = ((N-beta)/n) (N-gamma)^-(N+1) gamma_inc(N+1, (N-gamma) b_n)
    """
    a_n, b_n = _constants(n, params)
    nd, g = params.dim, params.gamma
    omega = params.sphere_area
    c = nd - g
    term_i = omega * (a_n * b_n) ** nd * math.exp(-c * b_n) / c
    term_ii = ((nd - params.beta) / n) * c ** (-(nd + 1.0)) \
        * lower_incomplete_gamma(nd + 1.0, c * b_n)
    return term_i + term_ii


def weight_norm_limit(params: ProblemParams) -> float:
    """Limit of n * weight_norm_closed_form(n) as n grows."""
    nd = params.dim
    return (nd - params.beta) * math.gamma(nd + 1.0) / (nd - params.gamma) ** (nd + 1.0)


def lam(n: int, params: ProblemParams) -> float:
    """Normalization lambda_n with lambda^N (1 + weight_norm) = 1."""
    w = weight_norm_closed_form(n, params)
    return (1.0 + w) ** (-1.0 / params.dim)


def normalized(n: int, params: ProblemParams) -> MoserElement:
    """The n-th element scaled by lambda_n: full norm power exactly 1."""
    elem = build(n, params)
    return replace(elem, profile=elem.profile.scaled(elem.lam), normalized=True)


def plateau_lower_bound(n: int, params: ProblemParams) -> LogValue:
    """Exact plateau piece of the functional of the normalized element.

    (omega/(N-beta)) e^-n Phi_N((n alpha / alpha_crit) lambda_n^(N/(N-1))):
    a rigorous lower bound for the whole functional, valid for every alpha
    including the supercritical range where it diverges with n.
    """
    nd = params.dim
    crit = critical_alpha_beta(params)
    lam_n = lam(n, params)
    arg = (n * params.alpha / crit) * lam_n ** params.exponent
    log_val = (math.log(params.sphere_area / (nd - params.beta)) - n
               + log_phi(nd, arg))
    return LogValue(log_val)


def select_index(alpha: float, crit: float) -> int:
    """Index selection for the near-critical scan: ceil(1/(1 - alpha/crit)).

    Lands inside the window [1/(1-ratio), 2/(1-ratio)], i.e. the selected n
    satisfies 1 <= n (1 - ratio) <= 2.
    """
    ratio = alpha / crit
    if not 0.0 < ratio < 1.0:
        raise DomainError(f"alpha must lie strictly below critical, got ratio {ratio}")
    return math.ceil(1.0 / (1.0 - ratio))


def half_exponential_threshold(params: ProblemParams, n_cap: int = 100000) -> int:
    """Smallest n with Phi_N((alpha/crit) n) >= e^((alpha/crit) n) / 2."""
    ratio = params.alpha / critical_alpha_beta(params)
    for n in range(1, n_cap + 1):
        x = ratio * n
        if x < 690.0:
            if phi(params.dim, x) >= 0.5 * math.exp(x):
                return n
        else:
            return n  # the subtracted polynomial is negligible out here
    raise DomainError("no half-exponential threshold found below the cap")


def weight_decay_threshold(params: ProblemParams, n_cap: int = 100000) -> int:
    """Smallest n with n * weight_norm <= twice its large-n limit."""
    bound = 2.0 * weight_norm_limit(params)
    for n in range(1, n_cap + 1):
        if n * weight_norm_closed_form(n, params) <= bound:
            return n
    raise DomainError("no weight-decay threshold found below the cap")


def asymptotic_lower_scan(params: ProblemParams, alpha_grid) -> ScanTable:
    """Near-critical lower-bound products over a grid of subcritical alphas.

    For each alpha the scan picks n = ceil(1/(1 - alpha/crit)), forms the
    ratio plateau_lower_bound(n) / weight_norm^((N-beta)/(N-gamma)) and
    multiplies by (1 - (alpha/crit)^(N-1))^((N-beta)/(N-gamma)).  The products
    stay bounded below by a positive constant as alpha approaches critical;
    rows with n below the validity thresholds are flagged, not rejected.
    ``params.alpha`` is ignored in favor of the grid.
    """
    crit = critical_alpha_beta(params)
    nd, b, g = params.dim, params.beta, params.gamma
    theta = (nd - b) / (nd - g)
    table = ScanTable(
        columns=("alpha", "n", "ratio", "product", "flags"),
        comments=[
            "near-critical lower-bound scan over the concentrating family",
            f"dim={nd} beta={b} gamma={g} critical={crit!r}",
            "ratio: plateau lower bound / weight_norm^((N-beta)/(N-gamma))",
            "product: ratio * (1 - (alpha/crit)^(N-1))^((N-beta)/(N-gamma))",
            "flags: below-window when n < max(half-exp, weight-decay thresholds)",
        ])
    for alpha in sorted(alpha_grid):
        if not alpha < crit:
            raise DomainError(f"grid alpha {alpha} is not strictly below critical {crit}")
        point = replace(params, alpha=float(alpha))
        n = select_index(alpha, crit)
        w = weight_norm_closed_form(n, point)
        log_ratio = plateau_lower_bound(n, point).log - theta * math.log(w)
        ratio_val = LogValue(log_ratio).value
        product = LogValue(
            log_ratio + theta * math.log1p(-(alpha / crit) ** (nd - 1))).value
        window_lo = max(half_exponential_threshold(point),
                        weight_decay_threshold(point))
        flags = "" if n >= window_lo else "below-window"
        table.append(float(alpha), n, ratio_val, product, flags)
    return table
