"""Pools of aligned patch-pair samples: CSV I/O, synthesis, and splitting.

Each sample is a d-dimensional feature vector with an optional {-1, +1}
label (+1 = change) and optional before/after thumbnail references. The
loader consumes features as-is; any preprocessing is the caller's job.
"""

import csv
import io
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import IntegrityError, InvalidStateError, ParseError

TRAIN = "TRAIN"
EVAL = "EVAL"

LABEL_CHANGE = 1
LABEL_NO_CHANGE = -1

# Sentinel used in the packed label array for samples without ground truth.
_NO_LABEL = 0


@dataclass(frozen=True)
class Sample:
    """One aligned patch pair, viewed row-wise out of a Pool."""

    id: int
    features: np.ndarray
    label: Optional[int] = None
    thumbnail_before: Optional[str] = None
    thumbnail_after: Optional[str] = None


@dataclass
class LabelAudit:
    """Counts ground-truth label reads per split, so tests can assert that
    training code paths never touch EVAL labels."""

    reads: dict = field(default_factory=lambda: {TRAIN: 0, EVAL: 0, None: 0})

    def record(self, split_tag):
        self.reads[split_tag] = self.reads.get(split_tag, 0) + 1


class Pool:
    """An immutable, ordered collection of samples.

    Feature and label arrays are frozen after construction, so a pool can be
    shared read-only across concurrent sessions. Ground-truth labels are only
    reachable through :meth:`label_of` / :meth:`labels_of`, which feed the
    audit counter.
    """

    def __init__(self, ids, features, labels=None, thumbs_before=None,
                 thumbs_after=None, split=None):
        features = np.asarray(features, dtype=np.float64)
        if features.ndim != 2:
            raise ValueError("features must be a 2-d array (n samples x d)")
        n = features.shape[0]
        ids = np.asarray(ids, dtype=np.int64)
        if ids.shape != (n,):
            raise ValueError("ids length must match the number of samples")
        if n and ids.min() < 0:
            raise IntegrityError("sample ids must be non-negative")
        if len(np.unique(ids)) != n:
            raise IntegrityError("sample ids must be unique within a pool")
        if labels is None:
            packed = np.zeros(n, dtype=np.int8)
        else:
            packed = np.array(
                [_NO_LABEL if v is None else int(v) for v in labels],
                dtype=np.int8,
            )
            bad = set(np.unique(packed)) - {_NO_LABEL, -1, 1}
            if bad:
                raise ValueError(f"labels must be -1 or +1, got {sorted(bad)}")
        if split is not None:
            split = list(split)
            if len(split) != n:
                raise ValueError("split tags length must match sample count")
            if any(tag not in (TRAIN, EVAL) for tag in split):
                raise ValueError("split tags must be TRAIN or EVAL")

        self._ids = ids
        self._features = features
        self._labels = packed
        self._thumbs_before = list(thumbs_before) if thumbs_before else None
        self._thumbs_after = list(thumbs_after) if thumbs_after else None
        self._split = split
        self._index = {int(i): pos for pos, i in enumerate(ids)}
        self.audit = LabelAudit()
        for arr in (self._ids, self._features, self._labels):
            arr.setflags(write=False)

    # -- basic shape -----------------------------------------------------

    def __len__(self):
        return self._features.shape[0]

    @property
    def n(self) -> int:
        return self._features.shape[0]

    @property
    def d(self) -> int:
        return self._features.shape[1]

    @property
    def ids(self) -> np.ndarray:
        return self._ids

    @property
    def features(self) -> np.ndarray:
        return self._features

    @property
    def split(self):
        return self._split

    def position_of(self, sample_id: int) -> int:
        try:
            return self._index[int(sample_id)]
        except KeyError:
            raise KeyError(f"unknown sample id {sample_id}") from None

    def sample(self, sample_id: int) -> Sample:
        pos = self.position_of(sample_id)
        return Sample(
            id=int(self._ids[pos]),
            features=self._features[pos],
            label=self._peek_label(pos),
            thumbnail_before=self._thumbs_before[pos] if self._thumbs_before else None,
            thumbnail_after=self._thumbs_after[pos] if self._thumbs_after else None,
        )

    def _peek_label(self, pos: int) -> Optional[int]:
        raw = int(self._labels[pos])
        return None if raw == _NO_LABEL else raw

    # -- audited label access --------------------------------------------

    def label_of(self, sample_id: int) -> Optional[int]:
        """Ground-truth label for one sample (None if unknown). Audited."""
        pos = self.position_of(sample_id)
        tag = self._split[pos] if self._split is not None else None
        self.audit.record(tag)
        return self._peek_label(pos)

    def labels_of(self, sample_ids: Sequence[int]) -> list:
        return [self.label_of(i) for i in sample_ids]

    def has_any_label(self) -> bool:
        return bool(np.any(self._labels != _NO_LABEL))

    # -- split helpers ----------------------------------------------------

    def _tagged_positions(self, tag) -> np.ndarray:
        if self._split is None:
            raise InvalidStateError("pool has no TRAIN/EVAL split yet")
        return np.array([p for p, t in enumerate(self._split) if t == tag],
                        dtype=np.int64)

    def train_ids(self) -> np.ndarray:
        return self._ids[self._tagged_positions(TRAIN)]

    def eval_ids(self) -> np.ndarray:
        return self._ids[self._tagged_positions(EVAL)]

    def features_of(self, sample_ids: Sequence[int]) -> np.ndarray:
        rows = [self.position_of(i) for i in sample_ids]
        return self._features[rows]

    def eval_scored_truth(self):
        """(features, labels) of the EVAL half, for metric computation.

        Counts as an EVAL label read for every evaluated sample. Samples
        without ground truth are dropped.
        """
        pos = self._tagged_positions(EVAL)
        keep = [p for p in pos if self._labels[p] != _NO_LABEL]
        for _ in keep:
            self.audit.record(EVAL)
        labels = self._labels[keep].astype(np.int64)
        return self._features[keep], labels


# -- CSV ------------------------------------------------------------------

def _parse_header(header):
    cols = [c.strip() for c in header]
    if not cols or cols[0] != "id":
        raise ParseError("header must start with 'id'", line_number=1)
    d = 0
    while 1 + d < len(cols) and cols[1 + d] == f"f{d}":
        d += 1
    if d == 0:
        raise ParseError("header declares no feature columns f0..", line_number=1)
    rest = cols[1 + d:]
    if not rest or rest[0] != "label":
        raise ParseError("header must carry a 'label' column after features",
                         line_number=1)
    has_thumbs = rest[1:] == ["thumb_before", "thumb_after"]
    if rest[1:] and not has_thumbs:
        raise ParseError(
            "trailing columns must be exactly 'thumb_before,thumb_after'",
            line_number=1)
    return d, has_thumbs


def load_csv(path) -> Pool:
    """Load a pool from CSV with header ``id,f0,...,f{d-1},label[,thumb_before,thumb_after]``.

    The label cell may be empty (unknown label). Raises :class:`ParseError`
    naming the offending line for malformed rows and :class:`IntegrityError`
    for duplicate ids.
    """
    with open(path, "r", encoding="utf-8", newline="") as fh:
        return _read_csv(fh)


def _read_csv(fh) -> Pool:
    reader = csv.reader(fh)
    try:
        header = next(reader)
    except StopIteration:
        raise ParseError("file is empty (no header row)", line_number=1) from None
    d, has_thumbs = _parse_header(header)
    expected = 1 + d + 1 + (2 if has_thumbs else 0)

    ids, rows, labels = [], [], []
    thumbs_b, thumbs_a = [], []
    seen = set()
    for line_no, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != expected:
            raise ParseError(
                f"expected {expected} columns, found {len(row)}",
                line_number=line_no)
        try:
            sid = int(row[0])
        except ValueError:
            raise ParseError(f"non-integer id {row[0]!r}", line_number=line_no) from None
        if sid < 0:
            raise ParseError(f"negative id {sid}", line_number=line_no)
        if sid in seen:
            raise IntegrityError(f"duplicate sample id {sid} at line {line_no}")
        seen.add(sid)
        try:
            feats = [float(v) for v in row[1:1 + d]]
        except ValueError:
            raise ParseError("non-numeric feature value", line_number=line_no) from None
        raw_label = row[1 + d].strip()
        if raw_label == "":
            label = None
        else:
            try:
                label = int(raw_label)
            except ValueError:
                raise ParseError(f"non-integer label {raw_label!r}",
                                 line_number=line_no) from None
            if label not in (-1, 1):
                raise ParseError(f"label must be -1 or +1, got {label}",
                                 line_number=line_no)
        ids.append(sid)
        rows.append(feats)
        labels.append(label)
        if has_thumbs:
            thumbs_b.append(row[1 + d + 1] or None)
            thumbs_a.append(row[1 + d + 2] or None)

    features = np.array(rows, dtype=np.float64) if rows else np.empty((0, d))
    return Pool(
        ids, features, labels,
        thumbs_before=thumbs_b if has_thumbs else None,
        thumbs_after=thumbs_a if has_thumbs else None,
    )


def save_csv(pool: Pool, path) -> None:
    """Write a pool back to CSV with full round-trip float precision."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        _write_csv(pool, fh)


def _write_csv(pool: Pool, fh) -> None:
    writer = csv.writer(fh)
    has_thumbs = pool._thumbs_before is not None or pool._thumbs_after is not None
    header = ["id"] + [f"f{j}" for j in range(pool.d)] + ["label"]
    if has_thumbs:
        header += ["thumb_before", "thumb_after"]
    writer.writerow(header)
    for pos in range(pool.n):
        label = pool._peek_label(pos)
        row = [str(int(pool.ids[pos]))]
        row += [repr(float(v)) for v in pool.features[pos]]
        row.append("" if label is None else str(label))
        if has_thumbs:
            row.append((pool._thumbs_before or [None] * pool.n)[pos] or "")
            row.append((pool._thumbs_after or [None] * pool.n)[pos] or "")
        writer.writerow(row)


def dumps_csv(pool: Pool) -> str:
    buf = io.StringIO()
    _write_csv(pool, buf)
    return buf.getvalue()


# -- synthesis -------------------------------------------------------------

def synthesize(n: int, d: int, positive_fraction: float, seed: int) -> Pool:
    """Generate a labeled pool with a rare, compact positive mode.

    Negatives are drawn from four (three when d < 4) separated Gaussian
    modes of unequal spread; positives form one tight satellite mode
    standing off the flank of the first negative mode, closer to it than
    to any other mode but outside its bulk. The sample order is shuffled
    so ids carry no class information. Deterministic per seed.
    """
    if n < 2:
        raise ValueError("n must be at least 2")
    if d < 2:
        raise ValueError("d must be at least 2")
    if not 0.0 < positive_fraction < 1.0:
        raise ValueError("positive_fraction must lie in (0, 1)")
    n_pos = int(round(n * positive_fraction))
    if n_pos <= 0 or n_pos >= n:
        raise ValueError(
            f"positive count rounds to {n_pos} of {n}; nothing to detect")
    n_neg = n - n_pos

    rng = np.random.default_rng(seed)
    n_modes = 4 if d >= 4 else 3
    centers = _mode_centers(rng, d, n_modes, radius=8.0)

    # Uneven mode occupancy; axis-wise spreads in [0.7, 1.6] so few-shot
    # hyperplanes cannot rely on isotropy.
    weights = np.array([0.34, 0.28, 0.22, 0.16][:n_modes])
    weights = weights / weights.sum()
    counts = np.floor(weights * n_neg).astype(int)
    counts[0] += n_neg - counts.sum()

    neg_blocks = []
    for m in range(n_modes):
        scales = rng.uniform(0.7, 1.6, size=d)
        neg_blocks.append(centers[m] + rng.standard_normal((counts[m], d)) * scales)
    negatives = np.vstack(neg_blocks)

    # The positive mode stands off the flank of mode 0, displaced along
    # that mode's widest axis so the approach direction is also the
    # noisiest one. The offset clears the host's bulk; a tight satellite
    # is what makes the rare class findable at all under a small budget.
    host_scales = rng.uniform(0.7, 1.6, size=d)
    direction = np.zeros(d)
    direction[int(np.argmax(host_scales))] = 1.0
    mix = rng.standard_normal(d)
    direction = direction + 0.25 * mix / np.linalg.norm(mix)
    direction /= np.linalg.norm(direction)
    pos_center = centers[0] + 7.5 * direction
    positives = pos_center + rng.standard_normal((n_pos, d)) * 0.35

    features = np.vstack([negatives, positives])
    labels = np.concatenate([
        np.full(n_neg, LABEL_NO_CHANGE, dtype=np.int64),
        np.full(n_pos, LABEL_CHANGE, dtype=np.int64),
    ])
    order = rng.permutation(n)
    features = features[order]
    labels = labels[order]
    return Pool(np.arange(n), features, labels.tolist())


def _mode_centers(rng, d, n_modes, radius):
    if n_modes <= d:
        raw = rng.standard_normal((d, n_modes))
        q, _ = np.linalg.qr(raw)
        return radius * q[:, :n_modes].T
    # d too small for orthonormal directions: spread centers on a ring in
    # the first two coordinates.
    angles = 2.0 * np.pi * np.arange(n_modes) / n_modes
    centers = np.zeros((n_modes, d))
    centers[:, 0] = radius * np.cos(angles)
    centers[:, 1] = radius * np.sin(angles)
    return centers


def split_half(pool: Pool, seed: int, stratified: bool = False) -> Pool:
    """Tag samples TRAIN/EVAL by a seeded permutation: first ``n // 2``
    positions of the permutation become TRAIN, the rest EVAL.

    The split is unstratified by default; ``stratified=True`` balances the
    labeled classes proportionally across the halves.
    """
    n = pool.n
    if n < 2:
        raise ValueError("cannot split a pool with fewer than 2 samples")
    rng = np.random.default_rng(seed)
    if not stratified:
        perm = rng.permutation(n)
        train_pos = set(perm[: n // 2].tolist())
    else:
        train_pos = set()
        groups = {}
        for pos in range(n):
            groups.setdefault(int(pool._labels[pos]), []).append(pos)
        want = n // 2
        for _, members in sorted(groups.items()):
            members = np.array(members)
            members = members[rng.permutation(len(members))]
            take = int(round(len(members) * want / n))
            train_pos.update(members[:take].tolist())
        # Rounding drift: trim or top up to exactly n // 2.
        flat = rng.permutation(n)
        for pos in flat:
            if len(train_pos) >= want:
                break
            train_pos.add(int(pos))
        while len(train_pos) > want:
            train_pos.pop()
    tags = [TRAIN if pos in train_pos else EVAL for pos in range(n)]
    new = Pool(
        pool.ids.copy(), pool.features.copy(),
        [pool._peek_label(p) for p in range(n)],
        thumbs_before=pool._thumbs_before, thumbs_after=pool._thumbs_after,
        split=tags,
    )
    return new
