from importlib.resources import files
from pathlib import Path

import pytest

from ontodrift.stream import Stream

GOLDEN = Path(__file__).parent / "golden"


def data_text(name: str) -> str:
    return files("ontodrift").joinpath("data", name).read_text(encoding="utf-8")


def data_path(name: str) -> str:
    return str(files("ontodrift").joinpath("data", name))


@pytest.fixture
def qr():
    """Traffic fixture: bus-road stream over four snapshots."""
    return Stream.from_text(data_text("traffic_qr.stream"))


@pytest.fixture
def pqr():
    return Stream.from_text(data_text("traffic_pqr.stream"))


def random_stream(rng, max_snapshots: int = 6, max_individuals: int = 4) -> Stream:
    """Small random stream over the traffic TBox (roads r0.., bus b0)."""
    roads = [f"r{k}" for k in range(rng.randint(1, max_individuals - 1))]
    lines = [ln for ln in data_text("traffic_qr.stream").splitlines() if ln.startswith("GCI")]
    lines += ["CLASS Bus (b0)"] + [f"CLASS Road ({r})" for r in roads]
    for t in range(rng.randint(2, max_snapshots)):
        lines.append(f"SNAPSHOT {t}")
        for r in roads:
            roll = rng.random()
            if roll < 0.35:
                continue
            status = "OK" if roll < 0.7 else "Long"
            lines.append(f"CLASS (and Road (some travel {status})) ({r})")
            if rng.random() < 0.7:
                lines.append(f"ROLE with ({r}, b0)")
    return Stream.from_text("\n".join(lines) + "\n")
