"""
Complete elliptic integrals and Jacobi elliptic functions.

Everything here uses the parameter convention m = k^2. The parameter is
carried together with its complement 1 - m so that strongly localized
solitons (1 - m far below the double spacing at 1) keep full accuracy.
"""

import logging
import math
from dataclasses import dataclass
from typing import List, Tuple, Union

import numpy as np
from scipy.optimize import brentq

from ringlab.exceptions import EllipticDomainError, InfeasibleTargetError

logger = logging.getLogger(__name__)

AGM_RTOL = np.finfo(float).eps
AGM_MAX_ITER = 64

# E(0) * K(0)
MIN_PRODUCT = (math.pi / 2) ** 2

# log10 of the smallest complement searched by invert_product
_LOG10_COMPLEMENT_FLOOR = -300.0


@dataclass(frozen=True)
class EllipticParameter:
    """Parameter m of the elliptic functions together with its complement 1 - m"""

    m: float
    complement: float

    @classmethod
    def from_m(cls, m: float) -> "EllipticParameter":
        m = float(m)
        if not 0.0 <= m <= 1.0:
            raise EllipticDomainError(f"elliptic parameter must lie in [0, 1], got m={m}")
        return cls(m=m, complement=1.0 - m)

    @classmethod
    def from_complement(cls, complement: float) -> "EllipticParameter":
        complement = float(complement)
        if not 0.0 <= complement <= 1.0:
            raise EllipticDomainError(f"complementary parameter must lie in [0, 1], got {complement}")
        return cls(m=1.0 - complement, complement=complement)

    def __float__(self) -> float:
        return self.m


ParameterLike = Union[float, EllipticParameter]


def as_parameter(m: ParameterLike) -> EllipticParameter:
    if isinstance(m, EllipticParameter):
        return m
    return EllipticParameter.from_m(m)


def _require_below_one(param: EllipticParameter) -> None:
    if param.complement <= 0.0:
        raise EllipticDomainError("m = 1 is only available through the explicit limit forms")


def _agm_sequence(param: EllipticParameter) -> Tuple[List[float], List[float]]:
    """
    Run the arithmetic-geometric mean from (1, sqrt(1 - m)).

    Returns the a_n and c_n sequences, where c_0 = sqrt(m) and
    c_{n+1} = c_n^2 / (4 a_{n+1}) = (a_n - b_n) / 2.
    """
    a = 1.0
    b = math.sqrt(param.complement)
    c = math.sqrt(param.m)
    a_seq = [a]
    c_seq = [c]
    while c > AGM_RTOL * a and len(a_seq) <= AGM_MAX_ITER:
        a_next = 0.5 * (a + b)
        b = math.sqrt(a * b)
        c = c * c / (4.0 * a_next)
        a = a_next
        a_seq.append(a)
        c_seq.append(c)
    return a_seq, c_seq


def complete_K(m: ParameterLike) -> float:
    """Complete elliptic integral of the first kind K(m) by the AGM, 0 <= m < 1"""
    param = as_parameter(m)
    _require_below_one(param)
    a_seq, _ = _agm_sequence(param)
    return math.pi / (2.0 * a_seq[-1])


def complete_E(m: ParameterLike) -> float:
    """Complete elliptic integral of the second kind E(m), 0 <= m <= 1"""
    param = as_parameter(m)
    if param.complement == 0.0:
        return 1.0
    a_seq, c_seq = _agm_sequence(param)
    # 1 - sum 2^(n-1) c_n^2, with the n = 0 term written as (1 + m1)/2
    tail = math.fsum(2.0 ** (n - 1) * c * c for n, c in enumerate(c_seq) if n > 0)
    return math.pi / (2.0 * a_seq[-1]) * (0.5 * (1.0 + param.complement) - tail)


def _as_output(values: np.ndarray, scalar: bool):
    return float(values) if scalar else values


def jacobi_sn_cn_dn(u, m: ParameterLike):
    """
    Jacobi elliptic functions sn, cn, dn by descending Landen transformation.

    The amplitude is recovered from the AGM sequence; dn is then formed from
    cn and the complement.

    Args:
        u: real argument, scalar or array
        m: parameter in [0, 1)

    Returns:
        Tuple (sn, cn, dn) shaped like u
    """
    param = as_parameter(m)
    _require_below_one(param)
    scalar = np.ndim(u) == 0
    u = np.asarray(u, dtype=float)

    a_seq, c_seq = _agm_sequence(param)
    depth = len(a_seq) - 1
    if depth == 0:
        return (
            _as_output(np.sin(u), scalar),
            _as_output(np.cos(u), scalar),
            _as_output(np.ones_like(u), scalar),
        )

    phi = 2.0 ** depth * a_seq[depth] * u
    for n in range(depth, 0, -1):
        ratio = np.clip(c_seq[n] / a_seq[n] * np.sin(phi), -1.0, 1.0)
        phi = 0.5 * (phi + np.arcsin(ratio))

    sn = np.sin(phi)
    cn = np.cos(phi)
    # dn^2 = 1 - m sn^2 = (1 - m) + m cn^2, positive for real u
    dn = np.sqrt(param.complement + param.m * cn * cn)
    return _as_output(sn, scalar), _as_output(cn, scalar), _as_output(dn, scalar)


def jacobi_sn(u, m: ParameterLike):
    return jacobi_sn_cn_dn(u, m)[0]


def jacobi_cn(u, m: ParameterLike):
    return jacobi_sn_cn_dn(u, m)[1]


def jacobi_dn(u, m: ParameterLike):
    return jacobi_sn_cn_dn(u, m)[2]


def jacobi_limit(u):
    """The m = 1 forms: sn -> tanh u, cn = dn -> sech u"""
    scalar = np.ndim(u) == 0
    u = np.asarray(u, dtype=float)
    sech = 1.0 / np.cosh(u)
    return _as_output(np.tanh(u), scalar), _as_output(sech, scalar), _as_output(sech, scalar)


def elliptic_product(m: ParameterLike) -> float:
    """E(m) K(m)"""
    param = as_parameter(m)
    return complete_E(param) * complete_K(param)


def invert_product(target: float) -> EllipticParameter:
    """
    Solve E(m) K(m) = target for m.

    The product increases monotonically from pi^2/4 at m = 0, so the root is
    bracketed on the complement 1 - m in [1e-300, 1]. Brent's method runs
    on log10(1 - m), which keeps the search well conditioned as m -> 1.

    Raises:
        InfeasibleTargetError: target below pi^2/4 or beyond what a double
            precision complement can reach
    """
    target = float(target)
    if not math.isfinite(target):
        raise InfeasibleTargetError(f"target must be finite, got {target}")
    slack = 4.0 * AGM_RTOL * MIN_PRODUCT
    if target < MIN_PRODUCT - slack:
        raise InfeasibleTargetError(
            f"E(m)K(m) = {target} is below its minimum pi^2/4 = {MIN_PRODUCT}: "
            f"coupling is below critical"
        )
    if target <= MIN_PRODUCT + slack:
        return EllipticParameter.from_m(0.0)

    def residual(log_complement: float) -> float:
        return elliptic_product(EllipticParameter.from_complement(10.0 ** log_complement)) - target

    if residual(_LOG10_COMPLEMENT_FLOOR) < 0.0:
        raise InfeasibleTargetError(f"E(m)K(m) = {target} needs 1 - m below 1e-300")

    log_complement = brentq(
        residual,
        _LOG10_COMPLEMENT_FLOOR,
        0.0,
        xtol=1e-15,
        rtol=4 * AGM_RTOL,
        maxiter=500,
    )
    param = EllipticParameter.from_complement(10.0 ** log_complement)
    logger.debug(f"invert_product({target}) -> m={param.m!r}, 1-m={param.complement!r}")
    return param
