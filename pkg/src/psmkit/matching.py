"""Greedy 1:1 nearest-neighbor matching on the propensity score.

Each treated unit in turn takes the closest still-unmatched control by
absolute log-odds distance, without replacement. Processing order is the
classic descending-score sweep by default (hardest-to-match treated units
pick first) but can be switched to ascending or raw row order.

The control pool is kept as a score-sorted array with two path-compressed
union-find skip structures, one per direction, so each "nearest alive
control" query is near O(1) amortized and the whole match runs in
O((n + m) log(n + m)) including the sorts. All ties resolve by lowest row
id, which makes the output fully deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import pandas as pd

from .data import Dataset
from .errors import DataError
from .propensity import PropensityScores

ORDERS = ("desc", "asc", "row")


@dataclass(frozen=True)
class MatchOptions:
    """Knobs for the matcher.

    Only the sweep order is variable. Ratio and replacement are part of the
    type so configurations are explicit, but this matcher implements exactly
    1:1 without replacement and rejects anything else. Ties always break
    toward the lowest row id.
    """

    order: str = "desc"
    ratio: int = 1
    replacement: bool = False

    def __post_init__(self):
        if self.order not in ORDERS:
            raise DataError(f"order must be one of {ORDERS}, got {self.order!r}")
        if self.ratio != 1:
            raise DataError("only 1:1 matching is supported")
        if self.replacement:
            raise DataError("matching with replacement is not supported")


@dataclass(frozen=True)
class MatchedPairs:
    """The outcome of a match: pair lists plus who was left out.

    ``distances`` is the absolute log-odds gap per pair, parallel to
    ``treated_ids`` / ``control_ids``. Pair order is the processing order of
    the treated units.
    """

    treated_ids: np.ndarray
    control_ids: np.ndarray
    distances: np.ndarray
    unmatched_treated_ids: np.ndarray
    unmatched_control_ids: np.ndarray

    def __post_init__(self):
        k = self.treated_ids.size
        if self.control_ids.size != k or self.distances.size != k:
            raise DataError("pair arrays must have equal length")
        if np.unique(self.control_ids).size != k:
            raise DataError("a control was used more than once")
        if np.unique(self.treated_ids).size != k:
            raise DataError("a treated unit appears in more than one pair")

    @property
    def n_pairs(self) -> int:
        return int(self.treated_ids.size)

    @property
    def n_unmatched_treated(self) -> int:
        return int(self.unmatched_treated_ids.size)

    @property
    def n_unmatched_controls(self) -> int:
        return int(self.unmatched_control_ids.size)

    def matched_row_ids(self) -> np.ndarray:
        """All row ids in the matched sample, ascending."""
        return np.sort(np.concatenate([self.treated_ids, self.control_ids]))

    def to_dataframe(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "treated_id": self.treated_ids,
                "control_id": self.control_ids,
                "distance": self.distances,
            }
        )

    def to_csv(self, path) -> None:
        self.to_dataframe().to_csv(path, index=False)


class _AlivePool:
    """Score-sorted control pool supporting nearest-alive queries.

    Two union-find arrays track, for every slot, the nearest alive slot to
    the right and to the left. Removal links a slot past itself in both.
    """

    def __init__(self, scores: np.ndarray, ids: np.ndarray):
        order = np.lexsort((ids, scores))
        self.scores = scores[order]
        self.ids = ids[order]
        m = self.scores.size
        self.m = m
        self.alive = m
        # nxt[i]: next alive slot >= i; slot m is the "nothing right" sentinel.
        self.nxt = list(range(m + 1))
        # prv is slot-shifted by one so that slot 0 can mean "nothing left".
        self.prv = list(range(m + 1))
        # First slot of each equal-score run, for lowest-id tie-breaking.
        self.run_start = np.searchsorted(self.scores, self.scores, side="left")

    def find_right(self, i: int) -> int:
        nxt = self.nxt
        root = i
        while nxt[root] != root:
            root = nxt[root]
        while nxt[i] != root:
            nxt[i], i = root, nxt[i]
        return root

    def find_left(self, i: int) -> int:
        prv = self.prv
        j = i + 1
        root = j
        while prv[root] != root:
            root = prv[root]
        while prv[j] != root:
            prv[j], j = root, prv[j]
        return root - 1

    def remove(self, k: int) -> None:
        self.nxt[k] = k + 1
        self.prv[k + 1] = k
        self.alive -= 1

    def take_nearest(self, score: float) -> tuple[int, float]:
        """Pop the alive control nearest to ``score``; returns (row id, distance).

        Distance ties between the left and right neighbor resolve to the
        lower row id. Within an equal-score run the candidate is always the
        lowest alive row id of that run.
        """
        pos = int(np.searchsorted(self.scores, score, side="left"))
        right = self.find_right(pos) if pos < self.m else self.m
        left = self.find_left(pos - 1) if pos > 0 else -1

        if right == self.m and left == -1:
            raise DataError("control pool is empty")
        if left == -1:
            choice = right
        else:
            # The slot found walking left is the highest alive id of its
            # equal-score run; hop to the run start for the lowest.
            left_low = self.find_right(int(self.run_start[left]))
            if right == self.m:
                choice = left_low
            else:
                d_left = score - self.scores[left]
                d_right = self.scores[right] - score
                if d_left < d_right:
                    choice = left_low
                elif d_right < d_left:
                    choice = right
                else:
                    choice = left_low if self.ids[left_low] < self.ids[right] else right
        dist = abs(score - float(self.scores[choice]))
        rid = int(self.ids[choice])
        self.remove(choice)
        return rid, dist

    def remaining_ids(self) -> np.ndarray:
        out = []
        i = self.find_right(0) if self.m else self.m
        while i < self.m:
            out.append(self.ids[i])
            i = self.find_right(i + 1)
        return np.asarray(out, dtype=np.int64)


def _treated_order(ids: np.ndarray, scores: np.ndarray, order: str) -> np.ndarray:
    if order == "desc":
        return np.lexsort((ids, -scores))
    if order == "asc":
        return np.lexsort((ids, scores))
    return np.argsort(ids, kind="stable")


def match_nearest(scores: PropensityScores, options: MatchOptions = MatchOptions()) -> MatchedPairs:
    """Run the greedy match on log-odds scores.

    Every treated unit is matched while controls remain; if treated units
    outnumber controls, the leftovers are reported in
    ``unmatched_treated_ids`` rather than raising.
    """
    treated = scores.treated_mask()
    t_ids = scores.row_ids[treated]
    t_scores = scores.logodds[treated]
    if t_ids.size == 0:
        raise DataError("no treated rows to match")
    if t_ids.size == scores.n_rows:
        raise DataError("no control rows to match")
    pool = _AlivePool(scores.logodds[~treated], scores.row_ids[~treated])

    sweep = _treated_order(t_ids, t_scores, options.order)
    pairs_t: list[int] = []
    pairs_c: list[int] = []
    dists: list[float] = []
    unmatched_t: list[int] = []
    for k, i in enumerate(sweep):
        if pool.alive == 0:
            unmatched_t = [int(t_ids[j]) for j in sweep[k:]]
            break
        cid, dist = pool.take_nearest(float(t_scores[i]))
        pairs_t.append(int(t_ids[i]))
        pairs_c.append(cid)
        dists.append(dist)

    return MatchedPairs(
        treated_ids=np.asarray(pairs_t, dtype=np.int64),
        control_ids=np.asarray(pairs_c, dtype=np.int64),
        distances=np.asarray(dists, dtype=np.float64),
        unmatched_treated_ids=np.sort(np.asarray(unmatched_t, dtype=np.int64)),
        unmatched_control_ids=pool.remaining_ids(),
    )


def matched_dataset(d: Dataset, pairs: MatchedPairs) -> Dataset:
    """Row subset of the matched sample (treated and their controls)."""
    return d.subset(pairs.matched_row_ids())


def jitter_table(scores: PropensityScores, pairs: MatchedPairs) -> pd.DataFrame:
    """Long-form score table for strip plots, on the probability scale.

    Every row appears once, labeled with one of four groups:
    matched-treated, unmatched-treated, matched-control, unmatched-control.
    """
    matched_t = np.isin(scores.row_ids, pairs.treated_ids)
    matched_c = np.isin(scores.row_ids, pairs.control_ids)
    treated = scores.treated_mask()
    group = np.where(
        treated,
        np.where(matched_t, "matched-treated", "unmatched-treated"),
        np.where(matched_c, "matched-control", "unmatched-control"),
    )
    return pd.DataFrame(
        {"row_id": scores.row_ids, "group": group, "score": scores.prob}
    )


def read_pairs_csv(path) -> MatchedPairs:
    """Load a pairs file written by :meth:`MatchedPairs.to_csv`.

    The unmatched sides cannot be reconstructed from the file alone and come
    back empty; use the scores table to recover them if needed.
    """
    df = pd.read_csv(path)
    needed = {"treated_id", "control_id", "distance"}
    missing = needed - set(df.columns)
    if missing:
        raise DataError(f"pairs file missing column(s): {sorted(missing)}")
    return MatchedPairs(
        treated_ids=df["treated_id"].to_numpy(dtype=np.int64),
        control_ids=df["control_id"].to_numpy(dtype=np.int64),
        distances=df["distance"].to_numpy(dtype=np.float64),
        unmatched_treated_ids=np.empty(0, dtype=np.int64),
        unmatched_control_ids=np.empty(0, dtype=np.int64),
    )
