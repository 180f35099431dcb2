"""
Solution path of near-isotonic regression by the modified pool adjacent
violators algorithm.

Starting from the saturated fit (lambda = 0, one bin per tie group) every bin
estimate moves linearly in lambda until two neighbours meet; they fuse and
never split again. Candidate merges sit in a heap keyed by the lambda at which
the pair meets. An entry goes stale when either bin changes and is skipped on
pop, so each breakpoint costs O(log N) and the whole path O(N log N).
"""
import heapq
import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, List, Optional, Tuple, Union

import numpy as np

from .core import TieGroup, TieGroups
from .errors import EmptyDatasetError, InvalidInputError
from .isotonic import BinningModel, bin_model_from_starts

logger = logging.getLogger("ENIR.near_iso_path")

MERGE_TOLERANCE = 1e-12
SLOPE_TOLERANCE = 1e-12
ESTIMATE_TOLERANCE = 1e-9


@dataclass(frozen=True)
class PathBin:
    """State of one bin on the path: members, estimate and its rate of change."""
    first: int
    last: int
    weight: int
    pos_sum: int
    estimate: float
    slope: float
    viol_next: bool


class SolutionPath:
    """
    Every breakpoint of the near-isotonic path over a tie-group sequence.

    The path is stored as the merge step at which each group boundary
    disappeared plus the breakpoint lambdas; models are rebuilt on demand.
    Step 0 is the saturated fit, step k the state right after the k-th
    breakpoint.
    """

    def __init__(self, groups: TieGroups, violations: np.ndarray, removed_at: np.ndarray,
                 lambdas: List[float]):
        self.groups = groups
        self.violations = np.asarray(violations, dtype=bool)
        self.removed_at = np.asarray(removed_at, dtype=np.int64)
        self.lambdas = tuple(float(lam) for lam in lambdas)
        # Boundary flags padded so index j is the boundary in front of group j
        self._nu = np.r_[False, self.violations, False].astype(np.int64)

        captured = tuple(k for k in range(1, len(self.lambdas) + 1) if self.lambdas[k - 1] > 0.0)
        # The saturated fit stays only when nothing else exists (input already monotone)
        self.includes_saturated = not captured
        self.steps: Tuple[int, ...] = captured or (0,)

    @property
    def n_breakpoints(self) -> int:
        return len(self.lambdas)

    def lambda_at(self, step: int) -> float:
        self._check_step(step)
        return 0.0 if step == 0 else self.lambdas[step - 1]

    def _check_step(self, step: int) -> None:
        if not 0 <= step <= self.n_breakpoints:
            raise InvalidInputError(f"step {step} outside 0..{self.n_breakpoints}")

    def bin_starts(self, step: int) -> np.ndarray:
        """First group index of every bin alive at the given step."""
        self._check_step(step)
        return np.r_[0, np.flatnonzero(self.removed_at > step) + 1].astype(np.int64)

    def _bin_state(self, step: int):
        starts = self.bin_starts(step)
        ends = np.r_[starts[1:] - 1, len(self.groups) - 1]
        weight = np.add.reduceat(self.groups.counts, starts)
        pos_sum = np.add.reduceat(self.groups.positives, starts)
        nu_left = self._nu[starts]
        nu_right = self._nu[ends + 1]
        lam = self.lambda_at(step)
        estimates = (pos_sum - lam * nu_right + lam * nu_left) / weight
        slopes = (nu_left - nu_right) / weight
        return starts, ends, weight, pos_sum, estimates, slopes, nu_right

    def estimates(self, step: int) -> np.ndarray:
        """Unclamped bin estimates at a step."""
        return self._bin_state(step)[4]

    def group_estimates(self, step: int) -> np.ndarray:
        """Unclamped estimate of every tie group at a step."""
        starts, ends, _, _, estimates, _, _ = self._bin_state(step)
        return np.repeat(estimates, ends - starts + 1)

    def path_bins(self, step: int) -> Tuple[PathBin, ...]:
        starts, ends, weight, pos_sum, estimates, slopes, nu_right = self._bin_state(step)
        return tuple(
            PathBin(int(f), int(l), int(wt), int(ps), float(e), float(a), bool(v))
            for f, l, wt, ps, e, a, v in zip(starts, ends, weight, pos_sum, estimates, slopes, nu_right)
        )

    def model_at(self, step: int) -> BinningModel:
        """
        Binning model at a step.

        Probabilities are clamped to [0, 1] and neighbouring path bins with the
        same probability are fused, so every model bin is maximal.
        """
        starts, _, weight, _, estimates, _, _ = self._bin_state(step)
        starts, probs = _fuse_equal(starts, weight, np.clip(estimates, 0.0, 1.0))
        return bin_model_from_starts(self.groups, starts, probs, self.lambda_at(step))

    def saturated_model(self) -> BinningModel:
        return self.model_at(0)

    def final_model(self) -> BinningModel:
        """The isotonic endpoint of the path."""
        return self.model_at(self.n_breakpoints)

    @cached_property
    def models(self) -> Tuple[BinningModel, ...]:
        """Captured ensemble candidates, in increasing lambda."""
        return tuple(self.model_at(step) for step in self.steps)

    def __len__(self) -> int:
        return len(self.steps)

    def __repr__(self) -> str:
        return (f"SolutionPath(groups={len(self.groups)}, breakpoints={self.n_breakpoints}, "
                f"models={len(self.steps)})")


def _fuse_equal(starts: np.ndarray, weight: np.ndarray, probs: np.ndarray):
    # Equal neighbours can sit on the path without converging (equal slopes)
    keep = np.r_[True, np.abs(np.diff(probs)) > ESTIMATE_TOLERANCE]
    if keep.all():
        return starts, probs
    run = np.cumsum(keep) - 1
    fused = np.bincount(run, weights=weight * probs) / np.bincount(run, weights=weight)
    return starts[keep], fused


def solve_path(groups: Union[TieGroups, Iterable[TieGroup]],
               tolerance: float = MERGE_TOLERANCE) -> SolutionPath:
    """
    Trace the near-isotonic solution path from lambda = 0 to the isotonic fit.

    Args:
        groups: Tie groups in increasing score order
        tolerance: Merge events within tolerance * max(1, lambda*) of the next
            breakpoint fuse in the same step

    Returns:
        The solution path
    """
    groups = TieGroups.coerce(groups)
    size = len(groups)
    if size == 0:
        raise EmptyDatasetError("cannot solve a path over no data")

    # A boundary violates iff the left frequency exceeds the right one; fixed for its lifetime
    violations = (groups.positives[:-1] * groups.counts[1:]) > (groups.positives[1:] * groups.counts[:-1])
    viol = violations.tolist()

    pos = groups.positives.tolist()
    weight = groups.counts.tolist()
    nu_left = [0] + [int(v) for v in viol]
    nu_right = [int(v) for v in viol] + [0]
    nxt = list(range(1, size)) + [-1]
    prv = [-1] + list(range(size - 1))
    version = [0] * size
    alive = [True] * size
    never = size
    removed_at = [never] * (size - 1)

    def event(left: int, right: int, lam: float) -> Optional[tuple]:
        gap = (nu_left[right] - nu_right[right]) / weight[right] - (nu_left[left] - nu_right[left]) / weight[left]
        # Only converging pairs ever meet
        if viol[right - 1]:
            if gap <= SLOPE_TOLERANCE:
                return None
        elif gap >= -SLOPE_TOLERANCE:
            return None
        meet = (pos[left] / weight[left] - pos[right] / weight[right]) / gap
        return (meet if meet > lam else lam, left, right, version[left], version[right])

    def current(entry: tuple) -> bool:
        _, left, right, v_left, v_right = entry
        return alive[left] and alive[right] and version[left] == v_left and version[right] == v_right

    heap = [e for e in (event(j, j + 1, 0.0) for j in range(size - 1)) if e is not None]
    heapq.heapify(heap)

    lambdas: List[float] = []
    step = 0
    while heap:
        if not current(heap[0]):
            heapq.heappop(heap)
            continue

        lam_star = heap[0][0]
        limit = lam_star + tolerance * max(1.0, abs(lam_star))
        step += 1
        fused = 0
        while heap and heap[0][0] <= limit:
            entry = heapq.heappop(heap)
            if not current(entry):
                continue
            _, left, right, _, _ = entry

            removed_at[right - 1] = step
            pos[left] += pos[right]
            weight[left] += weight[right]
            nu_right[left] = nu_right[right]
            after = nxt[right]
            nxt[left] = after
            if after != -1:
                prv[after] = left
            alive[right] = False
            version[left] += 1
            fused += 1

            # Cascades landing on this breakpoint are consumed by the inner loop
            before = prv[left]
            for pair in ((before, left), (left, after)):
                if pair[0] != -1 and pair[1] != -1:
                    e = event(pair[0], pair[1], lam_star)
                    if e is not None:
                        heapq.heappush(heap, e)

        lambdas.append(lam_star)
        logger.debug(f"Breakpoint {step} at lambda={lam_star:.6g}: {fused} merge(s)")

    path = SolutionPath(groups, violations, np.asarray(removed_at, dtype=np.int64), lambdas)
    remaining = size - sum(1 for r in removed_at if r != never)
    logger.info(f"Solved near-isotonic path over {size} groups: {path.n_breakpoints} breakpoints, "
                f"{remaining} final bins, {len(path)} captured models")
    return path


def objective(groups: Union[TieGroups, Iterable[TieGroup]], estimates, lam: float) -> float:
    """
    Near-isotonic loss of per-group estimates.

    Squared error is summed over every member of every group; each adjacent
    order violation costs lam times its size.

    Args:
        groups: Tie groups
        estimates: One estimate per group
        lam: Penalty weight, non-negative

    Returns:
        Loss value
    """
    groups = TieGroups.coerce(groups)
    p = np.asarray(estimates, dtype=float)
    if p.shape != (len(groups),):
        raise InvalidInputError(f"expected {len(groups)} estimates, got shape {p.shape}")
    if lam < 0:
        raise InvalidInputError("lambda must be non-negative")
    negatives = groups.counts - groups.positives
    fit = 0.5 * float(np.sum(groups.positives * (p - 1.0) ** 2 + negatives * p ** 2))
    penalty = float(np.sum(np.maximum(p[:-1] - p[1:], 0.0)))
    return fit + lam * penalty
