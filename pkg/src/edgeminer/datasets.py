"""Registry of the public event logs used in the experiments.

Logs are not shipped. Place them in ``$EDGEMINER_DATA`` (default ``./data``)
under the file names below, or let :func:`fetch` download them from a direct
URL. The first verified copy pins its SHA-256 in ``checksums.json`` next to the
files; later copies must match it.
"""

from __future__ import annotations

import hashlib
import json
import os
import shutil
import urllib.request
from dataclasses import dataclass
from pathlib import Path

__all__ = ["Dataset", "DATASETS", "data_dir", "find", "fetch", "verify"]


@dataclass(frozen=True)
class Dataset:
    key: str
    title: str
    filenames: tuple[str, ...]
    doi: str | None
    events: int
    activities: int
    cases: int


DATASETS = {
    d.key: d
    for d in (
        Dataset(
            "sepsis",
            "Sepsis Cases - Event Log",
            ("Sepsis Cases - Event Log.xes.gz", "Sepsis Cases - Event Log.xes", "sepsis.xes.gz", "sepsis.xes"),
            "10.4121/uuid:915d2bfb-7e84-49ad-a286-dc35f063a460",
            15_214,
            16,
            1_050,
        ),
        Dataset(
            "hospital",
            "Real-life event logs - Hospital log (BPI Challenge 2011)",
            ("Hospital_log.xes.gz", "Hospital_log.xes", "hospital.xes.gz", "hospital.xes"),
            "10.4121/uuid:d9769f3d-0ab0-4fb8-803b-0d1120ffcf54",
            150_291,
            624,
            1_143,
        ),
        Dataset(
            "bpic2017",
            "BPI Challenge 2017",
            ("BPI Challenge 2017.xes.gz", "BPI Challenge 2017.xes", "bpic2017.xes.gz", "bpic2017.xes"),
            "10.4121/uuid:5f3067df-f10b-45da-b98b-86ae4c7a310b",
            1_202_267,
            26,
            31_509,
        ),
        Dataset(
            "traffic_fine",
            "Road Traffic Fine Management Process",
            (
                "Road_Traffic_Fine_Management_Process.xes.gz",
                "Road_Traffic_Fine_Management_Process.xes",
                "traffic_fine.xes.gz",
                "traffic_fine.xes",
            ),
            "10.4121/uuid:270fd440-1057-4fb9-89a9-b699b47990f5",
            561_470,
            11,
            150_370,
        ),
        Dataset(
            "smart_factories",
            "IoT event log for process mining in smart factories (MainProcess.xes, non-cleaned)",
            ("MainProcess.xes.gz", "MainProcess.xes", "smart_factories.xes.gz", "smart_factories.xes"),
            None,
            8_607,
            21,
            271,
        ),
    )
}


def data_dir() -> Path:
    return Path(os.environ.get("EDGEMINER_DATA", "data"))


def find(key: str) -> Path | None:
    """Path of the local copy of dataset ``key``, or None when absent."""
    ds = DATASETS[key]
    root = data_dir()
    for name in ds.filenames:
        p = root / name
        if p.is_file():
            return p
    return None


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with path.open("rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def verify(key: str) -> str:
    """Check the local copy against the pinned checksum, pinning it if new."""
    path = find(key)
    if path is None:
        raise FileNotFoundError(f"dataset {key!r} not found in {data_dir()}")
    lock = data_dir() / "checksums.json"
    pins = json.loads(lock.read_text()) if lock.is_file() else {}
    digest = _sha256(path)
    pinned = pins.get(path.name)
    if pinned is None:
        pins[path.name] = digest
        lock.write_text(json.dumps(pins, indent=2, sort_keys=True) + "\n")
    elif pinned != digest:
        raise ValueError(f"{path.name}: checksum {digest} does not match pinned {pinned}")
    return digest


def fetch(key: str, url: str | None = None) -> Path:
    """Download dataset ``key`` from ``url`` into the data directory and verify it.

    The DOI landing pages do not serve files directly, so a direct file URL is
    needed; without one this only reports where to obtain the log.
    """
    ds = DATASETS[key]
    existing = find(key)
    if existing is not None:
        verify(key)
        return existing
    if url is None:
        where = f"https://doi.org/{ds.doi}" if ds.doi else "the publisher's page"
        raise FileNotFoundError(
            f"{ds.title}: download it from {where} and save it as {data_dir() / ds.filenames[0]}"
        )
    root = data_dir()
    root.mkdir(parents=True, exist_ok=True)
    target = root / ds.filenames[0]
    tmp = target.with_suffix(target.suffix + ".part")
    with urllib.request.urlopen(url) as resp, tmp.open("wb") as out:
        shutil.copyfileobj(resp, out)
    tmp.replace(target)
    verify(key)
    return target
