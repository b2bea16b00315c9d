"""Discussion data model: parsing, user filtering, comment windows, labels."""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field


class CorpusError(Exception):
    pass


@dataclass(frozen=True)
class Post:
    id: str
    author: str
    title: str
    body: str
    timestamp: int


@dataclass(frozen=True)
class Comment:
    id: str
    author: str
    parent_id: str
    discussion_id: str
    timestamp: int
    text: str
    depth: int


@dataclass(frozen=True)
class Discussion:
    post: Post
    comments: tuple  # Comment, sorted ascending by timestamp

    @property
    def t_start(self):
        return self.post.timestamp

    @property
    def t_end(self):
        if not self.comments:
            return self.post.timestamp
        return self.comments[-1].timestamp

    @property
    def id(self):
        return self.post.id


@dataclass(frozen=True)
class Window:
    index: int            # 1-based window index
    comments: tuple
    valid: bool
    actual_count: int


@dataclass(frozen=True)
class WindowedDiscussion:
    discussion: Discussion
    w: int
    N: int
    windows: tuple  # length N
    dropped: int    # comments beyond N*w


@dataclass
class CorpusManifest:
    discussions: int = 0
    users: int = 0
    comments: int = 0
    removed_by_tag: int = 0
    orphans_reattached: int = 0
    single_activity_users: int = 0
    malformed_lines: int = 0


@dataclass
class FilterConfig:
    excluded_author_tags: list = field(default_factory=lambda: ["deleted", "DeltaBot"])
    min_user_discussions: int = 2

    @classmethod
    def from_json(cls, path):
        with open(path) as fh:
            raw = json.load(fh)
        return cls(
            excluded_author_tags=list(raw.get("excluded_author_tags", ["deleted", "DeltaBot"])),
            min_user_discussions=int(raw.get("min_user_discussions", 2)),
        )


def _build_discussion(raw, manifest, excluded_tags):
    post_raw = raw["post"]
    title = post_raw["title"]
    if not title.strip():
        raise CorpusError("post %r has empty title" % post_raw["id"])
    post = Post(
        id=str(post_raw["id"]),
        author=str(post_raw["author"]),
        title=title,
        body=str(post_raw.get("body", "")),
        timestamp=int(post_raw["timestamp"]),
    )
    kept = []
    for c in raw.get("comments", []):
        if str(c["author"]) in excluded_tags:
            manifest.removed_by_tag += 1
            continue
        kept.append(c)

    known = {post.id}
    for c in kept:
        known.add(str(c["id"]))
    comments = []
    depth_of = {post.id: 0}
    # two passes: fix orphans first, then resolve depths along parent chains
    fixed = []
    for c in kept:
        parent = str(c["parent_id"])
        if parent not in known:
            parent = post.id
            manifest.orphans_reattached += 1
        fixed.append((c, parent))
    parent_of = {str(c["id"]): parent for c, parent in fixed}

    def depth(cid):
        if cid in depth_of:
            return depth_of[cid]
        d = depth(parent_of[cid]) + 1
        depth_of[cid] = d
        return d

    for c, parent in fixed:
        comments.append(Comment(
            id=str(c["id"]),
            author=str(c["author"]),
            parent_id=parent,
            discussion_id=post.id,
            timestamp=max(int(c["timestamp"]), post.timestamp),
            text=str(c.get("body", "")),
            depth=depth(str(c["id"])),
        ))
    comments.sort(key=lambda c: (c.timestamp, c.id))
    return Discussion(post=post, comments=tuple(comments))


def parse_corpus(path, filter_rules=None):
    """Read a JSON-lines corpus; returns (discussions, manifest).

    Comments by excluded author tags are removed. Users below the
    min-discussion activity threshold stay in the discussions but are
    flagged in the manifest (callers exclude them from embedding,
    labels and user features).
    """
    if filter_rules is None:
        filter_rules = FilterConfig()
    excluded = set(filter_rules.excluded_author_tags)
    manifest = CorpusManifest()
    discussions = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                raw = json.loads(line)
                disc = _build_discussion(raw, manifest, excluded)
            except CorpusError:
                raise
            except Exception as exc:
                raise CorpusError("malformed corpus line %d: %s" % (lineno, exc)) from exc
            discussions.append(disc)

    activity = _activity(discussions)
    single = {u for u, k in activity.items() if k < filter_rules.min_user_discussions}

    manifest.discussions = len(discussions)
    manifest.comments = sum(len(d.comments) for d in discussions)
    manifest.users = len(activity)
    manifest.single_activity_users = len(single)
    return discussions, manifest


def _activity(discussions):
    """Discussions each user posted or commented in."""
    activity = Counter()
    for d in discussions:
        for author in {c.author for c in d.comments} | {d.post.author}:
            activity[author] += 1
    return activity


def embedded_users(discussions, filter_rules=None):
    """Users eligible for embedding: active in >= min_user_discussions discussions."""
    if filter_rules is None:
        filter_rules = FilterConfig()
    activity = _activity(discussions)
    return {u for u, k in activity.items() if k >= filter_rules.min_user_discussions}


def serialize_corpus(discussions, path):
    """Write discussions back to the JSON-lines layout (round-trip safe)."""
    with open(path, "w") as fh:
        for d in discussions:
            fh.write(json.dumps(discussion_to_json(d), sort_keys=True) + "\n")


def discussion_to_json(d):
    return {
        "post": {
            "id": d.post.id, "author": d.post.author, "title": d.post.title,
            "body": d.post.body, "timestamp": d.post.timestamp,
        },
        "comments": [
            {"id": c.id, "author": c.author, "parent_id": c.parent_id,
             "timestamp": c.timestamp, "body": c.text}
            for c in d.comments
        ],
    }


def windowize(d, w, N):
    """Slice a discussion into N fixed-size comment windows with padding flags."""
    if w < 1 or N < 1:
        raise ValueError("w and N must be >= 1")
    windows = []
    for i in range(1, N + 1):
        chunk = d.comments[(i - 1) * w: i * w]
        windows.append(Window(index=i, comments=tuple(chunk),
                              valid=len(chunk) > 0, actual_count=len(chunk)))
    dropped = max(0, len(d.comments) - N * w)
    return WindowedDiscussion(discussion=d, w=w, N=N, windows=tuple(windows),
                              dropped=dropped)


def window_labels(wd, assignments, n):
    """Per valid window, the binary engaged-cluster vector of length n.

    Comments by users without a cluster assignment (filtered users) are
    ignored. Cluster indices are 0-based.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    labels = []
    for win in wd.windows:
        if not win.valid:
            labels.append(None)
            continue
        y = [0] * n
        for c in win.comments:
            cl = assignments.get(c.author)
            if cl is not None:
                y[cl] = 1
        labels.append(y)
    return labels


def growth_target(win):
    """Growth of a window: (raw_v, shifted) with raw_v = log(m/dt).

    dt is clamped below at 1 second. The shifted target log(1 + m/dt) is
    non-negative and is what the regression head trains against; raw_v
    feeds the percentage-error report.
    """
    if not win.valid or win.actual_count < 1:
        raise ValueError("growth_target needs a valid non-empty window")
    m = win.actual_count
    dt = max(1, win.comments[-1].timestamp - win.comments[0].timestamp)
    raw_v = math.log(m / dt)
    shifted = math.log(1.0 + m / dt)
    return raw_v, shifted
