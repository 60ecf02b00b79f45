"""Crop batch samplers.

ShuffleSampler covers single-dataset training; BalancedSampler draws every
batch slot as dataset ~ Uniform, class ~ Uniform, then a crop uniformly
with replacement inside that bucket, which keeps gradient exposure flat
across (dataset, class) cells no matter how skewed the corpus is.
"""

from __future__ import annotations

import numpy as np

from ..errors import EmptyBucket


class ShuffleSampler:
    def __init__(self, n_crops, batch_size, seed):
        self.n = n_crops
        self.batch_size = batch_size
        self.seed = seed

    @property
    def steps_per_epoch(self):
        return max(1, int(np.ceil(self.n / self.batch_size)))

    def epoch_batches(self, epoch):
        rng = np.random.default_rng(np.random.SeedSequence([self.seed, 17, epoch]))
        order = rng.permutation(self.n)
        for start in range(0, self.n, self.batch_size):
            yield order[start: start + self.batch_size]


class BalancedSampler:
    def __init__(self, crops, batch_size, seed):
        self.batch_size = batch_size
        self.seed = seed
        self.n = len(crops)
        buckets = {}
        for i, crop in enumerate(crops):
            buckets.setdefault((crop.dataset_tag, crop.label), []).append(i)
        self.keys = sorted(buckets)
        self.buckets = [np.array(buckets[k]) for k in self.keys]
        tags = sorted({k[0] for k in self.keys})
        labels = sorted({k[1] for k in self.keys})
        for tag in tags:
            for label in labels:
                if (tag, label) not in buckets:
                    raise EmptyBucket(f"no crops for dataset {tag!r} class {label}")
        self.tags = tags
        self.labels = labels

    @property
    def steps_per_epoch(self):
        return max(1, int(np.ceil(self.n / self.batch_size)))

    def epoch_batches(self, epoch):
        rng = np.random.default_rng(np.random.SeedSequence([self.seed, 23, epoch]))
        index = {k: i for i, k in enumerate(self.keys)}
        for _ in range(self.steps_per_epoch):
            tags = rng.integers(0, len(self.tags), size=self.batch_size)
            labels = rng.integers(0, len(self.labels), size=self.batch_size)
            batch = np.empty(self.batch_size, dtype=np.int64)
            for slot in range(self.batch_size):
                bucket = self.buckets[index[(self.tags[tags[slot]],
                                             self.labels[labels[slot]])]]
                batch[slot] = bucket[rng.integers(0, len(bucket))]
            yield batch
