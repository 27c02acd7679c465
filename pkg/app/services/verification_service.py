"""
Seeded property suite over the engine: decomposition identities, divergence
axioms, transport optimality, Bregman geometry and scale functions.
"""
import math
from typing import Callable, List, Optional

import numpy as np

from app.core.config import settings
from app.core.exceptions import FGPError
from app.engine.divergence import (
    DivergenceKind,
    OrderBehaviour,
    SignConvention,
    bregman,
    l_alpha,
    l_divergence,
    quadratic_order_ratio,
)
from app.engine.genfun import CrossEntropy, Diversity, GeneratingFunction, NegHalfSqNorm, check_alpha_exp_concavity
from app.engine.geomtrans import (
    InnerProductCost,
    LogDotCost,
    brute_force_assignment,
    check_cyclical_monotonicity,
    multiplicative_transport_map,
    pythagorean_check,
    scale_ode_residual,
    transport_samples,
)
from app.engine.market import MarketPath, check_self_financing, value_multiplicative, weights_from_strategy
from app.engine.scale import ExpScale, LinearScale, PowerScale, ShiftedLogScale
from app.engine.strategy import (
    GenerationScheme,
    additive_shares,
    alpha_c_shares,
    decompose,
    multiplicative_portfolio_map,
    multiplicative_weight_path,
    run_strategy,
)
from app.utils.dto.report import CheckResult, VerificationSummary
from app.utils.logger import get_logger, log_verification_check
from app.utils.metrics import verification_checks_total
from app.utils.numerics import random_market_path, random_simplex_points, random_tangent_vectors

logger = get_logger("services.verification")

LIMIT_ALPHAS = (1e-1, 1e-2, 1e-3)
COINCIDENCE_ALPHAS = (1e-2, 1e-4, 1e-6)


def builtin_functions(n: int) -> List[GeneratingFunction]:
    return [CrossEntropy.equal_weight(n), NegHalfSqNorm(), Diversity(0.5)]


class VerificationService:

    def __init__(self, paths: int = settings.VERIFY_PATHS, steps: int = settings.VERIFY_STEPS,
                 pairs: int = settings.VERIFY_PAIRS, order_samples: int = settings.VERIFY_ORDER_SAMPLES,
                 transport_trials: int = settings.VERIFY_TRANSPORT_TRIALS, triplets: int = settings.VERIFY_TRIPLETS,
                 concavity_samples: int = settings.VERIFY_CONCAVITY_SAMPLES):
        self.paths = paths
        self.steps = steps
        self.pairs = pairs
        self.order_samples = order_samples
        self.transport_trials = transport_trials
        self.triplets = triplets
        self.concavity_samples = concavity_samples

    def verify_suite(self, seed: int = settings.DEFAULT_SEED, flip_l_alpha_sign: bool = False,
                     concavity_alpha: Optional[float] = None) -> VerificationSummary:
        """Run every check with generators derived from `seed`; `flip_l_alpha_sign` evaluates the printed sign."""
        convention = SignConvention.PRINTED if flip_l_alpha_sign else SignConvention.CORRECTED
        checks: List[Callable[[np.random.Generator], CheckResult]] = [
            lambda rng: self.check_decomposition(rng, convention),
            self.check_self_financing,
            lambda rng: self.check_divergence_axioms(rng, convention),
            lambda rng: self.check_l_alpha_scaling(rng, convention),
            lambda rng: self.check_bregman_limit(rng, convention),
            self.check_quadratic_order,
            self.check_scheme_coincidence,
            self.check_transport,
            self.check_pythagorean,
            lambda rng: self.check_scale_functions(),
            lambda rng: self.check_concavity(rng, concavity_alpha),
        ]
        summary = VerificationSummary(seed=seed)
        for index, check in enumerate(checks):
            result = check(np.random.default_rng([seed, index]))
            self._record(result)
            summary.checks.append(result)
        return summary

    def _record(self, result: CheckResult) -> None:
        status = "pass" if result.passed else "fail"
        verification_checks_total.labels(check=result.name, status=status).inc()
        log_verification_check(logger, result.name, result.passed, result.count, result.worst_margin)

    # identities along paths

    def check_decomposition(self, rng: np.random.Generator, convention: SignConvention) -> CheckResult:
        worst, count, failures = math.inf, 0, []
        for _ in range(self.paths):
            n = int(rng.integers(2, 11))
            path = MarketPath(random_market_path(rng, n, self.steps))
            phi = CrossEntropy.equal_weight(n)
            schemes = [
                GenerationScheme.multiplicative(phi),
                GenerationScheme.additive(phi),
                GenerationScheme.alpha_c(phi, 0.5, 2.0, convention=convention),
            ]
            for scheme in schemes:
                count += 1
                try:
                    report = decompose(scheme, path)
                except FGPError as e:
                    failures.append(f"{scheme.label}: {e}")
                    continue
                margin = settings.DECOMPOSITION_TOL - report.relative_residual
                if report.truncated:
                    failures.append(f"{scheme.label}: truncated at {report.truncated_at}")
                worst = min(worst, margin)
        passed = not failures and worst >= 0
        return CheckResult(name="decomposition", passed=passed, count=count, worst_margin=worst,
                           detail="; ".join(failures) or None)

    def check_self_financing(self, rng: np.random.Generator) -> CheckResult:
        n = 4
        path = MarketPath(random_market_path(rng, n, self.steps))
        phi = CrossEntropy.equal_weight(n)
        worst = 0.0
        for scheme in (GenerationScheme.additive(phi), GenerationScheme.alpha_c(phi, 0.5, 2.0),
                       GenerationScheme.multiplicative(phi)):
            states = run_strategy(scheme, path).states
            worst = max(worst, check_self_financing([s.eta for s in states], path))
        margin = settings.SELF_FINANCING_TOL - worst
        return CheckResult(name="self_financing", passed=margin >= 0, count=3, worst_margin=margin)

    # divergences

    def check_divergence_axioms(self, rng: np.random.Generator, convention: SignConvention) -> CheckResult:
        n = 3
        ps = random_simplex_points(rng, n, self.pairs)
        qs = random_simplex_points(rng, n, self.pairs)
        worst, count = math.inf, 0
        for phi in builtin_functions(n):
            kinds = [DivergenceKind.bregman(phi), DivergenceKind.l(phi), DivergenceKind.l_alpha(phi, 0.5, convention)]
            for kind in kinds:
                for p, q in zip(ps, qs):
                    try:
                        value = kind.evaluate(q, p)
                        identity = kind.evaluate(p, p)
                    except FGPError:
                        value, identity = -math.inf, 0.0
                    worst = min(worst, value + settings.NONNEG_TOL, -abs(identity))
                    count += 1
        return CheckResult(name="divergence_axioms", passed=worst >= 0, count=count, worst_margin=worst)

    def check_l_alpha_scaling(self, rng: np.random.Generator, convention: SignConvention) -> CheckResult:
        n = 3
        ps = random_simplex_points(rng, n, 200, floor=0.01)
        qs = random_simplex_points(rng, n, 200, floor=0.01)
        worst, count = math.inf, 0
        for phi in builtin_functions(n):
            for alpha in (0.25, 0.5, 1.0):
                scaled = phi.scaled(alpha)
                for p, q in zip(ps, qs):
                    direct = l_alpha(phi, alpha, q, p, convention)
                    via_scaled = l_divergence(scaled, q, p) / alpha
                    worst = min(worst, 1e-12 * max(1.0, abs(direct)) - abs(direct - via_scaled))
                    count += 1
        return CheckResult(name="l_alpha_scaling", passed=worst >= 0, count=count, worst_margin=worst)

    def check_bregman_limit(self, rng: np.random.Generator, convention: SignConvention) -> CheckResult:
        n = 3
        grid = random_simplex_points(rng, n, 20, floor=0.05)
        others = random_simplex_points(rng, n, 20, floor=0.05)
        worst, count, detail = math.inf, 0, []
        for phi in builtin_functions(n):
            gaps = []
            for alpha in LIMIT_ALPHAS:
                gaps.append(max(abs(l_alpha(phi, alpha, q, p, convention) - bregman(phi, q, p))
                                for p in grid for q in others))
                count += len(grid) * len(others)
            ratios = [a / b if b > 0 else math.inf for a, b in zip(gaps, gaps[1:])]
            detail.append(f"{phi.name}: " + ", ".join(f"{r:.3g}" for r in ratios))
            # linear rate: each tenfold decrease of alpha shrinks the gap roughly tenfold
            worst = min(worst, *(min(r - 5.0, 20.0 - r) for r in ratios))
        return CheckResult(name="bregman_limit", passed=worst >= 0, count=count, worst_margin=worst,
                           detail="; ".join(detail))

    def check_quadratic_order(self, rng: np.random.Generator) -> CheckResult:
        n = 3
        ps = random_simplex_points(rng, n, self.order_samples, floor=0.1)
        vs = random_tangent_vectors(rng, n, self.order_samples)
        worst, count, failures, detail = math.inf, 0, [], []
        for phi in builtin_functions(n):
            for kind in (DivergenceKind.bregman(phi), DivergenceKind.l(phi), DivergenceKind.l_alpha(phi, 0.5)):
                results = [quadratic_order_ratio(kind, p, v) for p, v in zip(ps, vs)]
                for p, result in zip(ps, results):
                    if result.excluded:
                        logger.info(f"Quadratic order sample of {kind} at {np.round(p, 4).tolist()} excluded: "
                                    f"{result.reason}")
                    elif not result.passed:
                        failures.append(f"{kind} at {np.round(p, 4).tolist()}: {result.reason}")
                    if result.behaviour is OrderBehaviour.CUBIC:
                        worst = min(worst, result.ratios[-1] - 6.0, 10.0 - result.ratios[-1])
                    elif result.behaviour is OrderBehaviour.MISMATCH:
                        worst = min(worst, -1.0)
                cubic = [r for r in results if r.behaviour is OrderBehaviour.CUBIC]
                exact = sum(r.behaviour is OrderBehaviour.EXACT for r in results)
                excluded = sum(r.excluded for r in results)
                detail.append(f"{kind}: {sum(r.in_band for r in cubic)}/{len(cubic)} cubic in [6, 10], "
                              f"{exact} exact, {excluded} excluded")
                count += len(results)
        worst = 0.0 if worst == math.inf else worst
        return CheckResult(name="quadratic_order", passed=not failures, count=count, worst_margin=worst,
                           detail="; ".join(failures[:3] + detail))

    def check_scheme_coincidence(self, rng: np.random.Generator) -> CheckResult:
        n = 4
        path = MarketPath(random_market_path(rng, n, 200))
        worst, detail = math.inf, []
        for phi in builtin_functions(n):
            run = run_strategy(GenerationScheme.alpha_c(phi, 1.0, 0.0), path)
            gap = max(
                float(np.max(np.abs(weights_from_strategy(s.eta, path.points[s.time], s.value)
                                    - multiplicative_portfolio_map(phi, path.points[s.time]))))
                for s in run.states
            )
            worst = min(worst, 1e-12 - gap)

            via_weights = value_multiplicative(path, multiplicative_weight_path(phi, path), 1.0).values
            via_shares = run_strategy(GenerationScheme.multiplicative(phi), path).values.values
            worst = min(worst, 1e-10 - float(np.max(np.abs(via_weights - via_shares) / np.abs(via_shares))))

            mu, v = path.points[-1], float(run.values.final_value)
            errors = [float(np.max(np.abs(np.asarray(alpha_c_shares(phi, a, 1.0 / a, mu, v))
                                          - np.asarray(additive_shares(phi, mu, v)))))
                      for a in COINCIDENCE_ALPHAS]
            ratios = [a / b for a, b in zip(errors, errors[1:]) if b > 0]
            detail.append(f"{phi.name}: limit ratios " + ", ".join(f"{r:.3g}" for r in ratios))
            worst = min(worst, *(min(r - 50.0, 200.0 - r) for r in ratios)) if ratios else worst
        return CheckResult(name="scheme_coincidence", passed=worst >= 0, count=3 * len(builtin_functions(n)),
                           worst_margin=worst, detail="; ".join(detail))

    # transport and geometry

    def check_transport(self, rng: np.random.Generator) -> CheckResult:
        n = 3
        worst, count = math.inf, 0
        log_dot, inner = LogDotCost(), InnerProductCost()
        for phi in builtin_functions(n):
            for trial in range(self.transport_trials):
                size = 5 if trial % 2 == 0 else 6
                sources = random_simplex_points(rng, n, size, floor=0.01)
                by_map = brute_force_assignment(
                    log_dot, sources, [multiplicative_transport_map(phi, x) for x in sources])
                by_gradient = brute_force_assignment(inner, sources, [phi.gradient(x) for x in sources])
                worst = min(worst, by_map.cost - by_map.identity_cost, by_gradient.cost - by_gradient.identity_cost)
                count += 2

            sources = random_simplex_points(rng, n, 8, floor=0.01)
            for cost, sample in zip((log_dot, inner), transport_samples(phi, sources)):
                report = check_cyclical_monotonicity(cost, sample, max_cycle=5)
                worst = min(worst, report.worst_slack)
                count += report.cycles_checked
        passed = worst >= -settings.MONOTONICITY_SLACK
        return CheckResult(name="transport", passed=passed, count=count, worst_margin=worst)

    def check_pythagorean(self, rng: np.random.Generator) -> CheckResult:
        phi = NegHalfSqNorm()
        q = np.full(3, 1.0 / 3.0)
        equality = pythagorean_check(phi, q + [0.1, -0.1, 0.0], q, q + [0.05, 0.05, -0.1])
        worst = 1e-12 - abs(equality.delta)
        inconsistent = 0

        points = random_simplex_points(rng, 3, 3 * self.triplets, floor=0.01).reshape(self.triplets, 3, 3)
        for p, q, r in points:
            result = pythagorean_check(phi, p, q, r)
            if not result.consistent:
                inconsistent += 1
            worst = min(worst, settings.PYTHAGOREAN_TOL - abs(result.delta - result.inner_product))
        passed = inconsistent == 0 and worst >= 0
        return CheckResult(name="pythagorean", passed=passed, count=self.triplets + 1, worst_margin=worst,
                           detail=f"{inconsistent} sign mismatches" if inconsistent else None)

    def check_scale_functions(self) -> CheckResult:
        xs = (0.1, 0.5, 1.0, 2.0, 10.0)
        admitted = [LinearScale(c1, c2) for c1 in (0.5, 1.0, 2.0, 5.0) for c2 in (-1.0, 0.0, 3.0)]
        admitted += [ShiftedLogScale(c1, c2, c3) for c1 in (0.0, 0.5, 2.0) for c2 in (0.5, 1.0, 3.0)
                     for c3 in (-1.0, 0.0, 2.0)]
        worst = min(1e-8 - abs(scale_ode_residual(g, x)) for g in admitted for x in xs)

        foils = [PowerScale(2.0), ExpScale(), PowerScale(0.5)]
        smallest_foil = min(abs(scale_ode_residual(g, 1.0)) for g in foils)
        passed = worst >= 0 and smallest_foil > 1e-3
        return CheckResult(name="scale_ode", passed=passed, count=len(admitted) * len(xs) + len(foils),
                           worst_margin=worst, detail=f"smallest foil residual {smallest_foil:.4g}")

    def check_concavity(self, rng: np.random.Generator, alpha: Optional[float]) -> CheckResult:
        seed = int(rng.integers(2 ** 31))
        cases = [(CrossEntropy.equal_weight(2), 1.0), (CrossEntropy.equal_weight(3), 1.0), (NegHalfSqNorm(), 1.0)]
        cases += [(Diversity(lam), 1.0) for lam in (0.25, 0.5, 0.75)]
        if alpha is not None:
            cases.append((CrossEntropy.equal_weight(2), alpha))

        worst, failed = 0.0, None
        for phi, a in cases:
            report = check_alpha_exp_concavity(phi, a, self.concavity_samples, seed=seed)
            if not report.passed and failed is None:
                failed = report
            worst = min(worst, report.margin)
        if failed is None:
            return CheckResult(name="concavity", passed=True, count=len(cases), worst_margin=worst)
        return CheckResult(name="concavity", passed=False, count=len(cases), worst_margin=worst,
                           detail=f"exp({failed.alpha:g} phi) fails the {failed.kind} test",
                           witness=failed.witness)


verification_service = VerificationService()


def verify_suite(seed: int = settings.DEFAULT_SEED, flip_l_alpha_sign: bool = False,
                 concavity_alpha: Optional[float] = None) -> VerificationSummary:
    return verification_service.verify_suite(seed, flip_l_alpha_sign, concavity_alpha)
