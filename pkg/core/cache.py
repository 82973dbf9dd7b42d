"""On-disk certificate cache: <cache_dir>/<n>-<lambda>-<method>-<seed>.json.

Writes go to a temporary file in the same directory and are renamed into place,
so readers never see a torn file. Loads are re-verified against a coverage
graph; entries that fail are moved aside with a `.corrupt` suffix.
"""

import json
import os
import tempfile
import warnings
from pathlib import Path

from core.construct import CoverCertificate, verify_cover
from core.errors import InvalidInputError


class CacheWarning(UserWarning):
    pass


def cache_key(n, lam, method, seed=None):
    return f"{n}-{lam}-{method}-{'none' if seed is None else seed}"


def cache_path(cache_dir, key):
    return Path(cache_dir) / f"{key}.json"


def cache_store(cert, cache_dir, key=None):
    key = key or cache_key(cert.n, cert.lam, cert.method, cert.seed)
    cache_dir = Path(cache_dir)
    cache_dir.mkdir(parents=True, exist_ok=True)
    target = cache_path(cache_dir, key)
    fd, tmp = tempfile.mkstemp(prefix=f".{key}.", suffix=".tmp", dir=cache_dir)
    try:
        with os.fdopen(fd, "w") as f:
            json.dump(cert.to_dict(), f, indent=2)
            f.flush()
            os.fsync(f.fileno())
        os.replace(tmp, target)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return target


def _quarantine(path, reason):
    bad = path.with_suffix(".corrupt")
    os.replace(path, bad)
    warnings.warn(f"cache entry {path.name} rejected ({reason}); moved to {bad.name}",
                  CacheWarning, stacklevel=3)


def cache_load(key, g, cache_dir):
    path = cache_path(cache_dir, key)
    if not path.exists():
        return None
    try:
        with open(path) as f:
            cert = CoverCertificate.from_dict(json.load(f))
    except (OSError, ValueError, InvalidInputError) as e:
        _quarantine(path, f"unreadable: {e}")
        return None
    if cert.n != g.n:
        _quarantine(path, f"certificate is for n={cert.n}, expected n={g.n}")
        return None
    if cert.status in ("optimal", "feasible"):
        result = verify_cover(g, cert.selected, cert.lam)
        if not result.ok:
            _quarantine(path, f"{len(result.deficient)} patterns under-covered")
            return None
    return cert


def cached_entries(cache_dir, n, lam):
    """Keys of cache files for (n, lambda), any method and seed."""
    cache_dir = Path(cache_dir)
    if not cache_dir.exists():
        return []
    return sorted(p.stem for p in cache_dir.glob(f"{n}-{lam}-*.json"))


def best_known(g, lam, cache_dir):
    best = None
    for key in cached_entries(cache_dir, g.n, lam):
        cert = cache_load(key, g, cache_dir)
        if cert and cert.status in ("optimal", "feasible"):
            if best is None or (cert.size, cert.status != "optimal") < (
                best.size, best.status != "optimal"
            ):
                best = cert
    return best
