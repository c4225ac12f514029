"""Shared fixtures: synthetic NSL-KDD-format files with learnable structure."""

import random

import pytest

PROTOCOLS = ["tcp", "udp", "icmp"]
SERVICES = ["http", "smtp", "ftp", "domain_u", "private", "telnet"]
FLAGS = ["SF", "S0", "REJ", "RSTR"]
ATTACKS = ["neptune", "smurf", "portsweep", "satan", "teardrop"]

N_FEATURES = 41
CATEGORICAL = {1, 2, 3}


def synth_rows(n_rows, seed, anomaly_fraction=0.4):
    """Deterministic synthetic records shaped like NSL-KDD lines.

    Normal rows scale one per-column profile by a shared per-row factor, so
    columns are individually wide but jointly coherent; column shuffling
    (and uniform attack rows) destroy that coherence, giving a one-class
    model something to learn.
    """
    rng = random.Random(seed)
    profile = [0.3 + 0.7 * rng.random() for _ in range(N_FEATURES)]
    rows = []
    for _ in range(n_rows):
        anomalous = rng.random() < anomaly_fraction
        scale = 0.3 + 0.7 * rng.random()
        fields = []
        for i in range(N_FEATURES):
            if i in CATEGORICAL:
                pool = {1: PROTOCOLS, 2: SERVICES, 3: FLAGS}[i]
                if anomalous:
                    fields.append(rng.choice(pool))
                else:
                    fields.append(pool[0] if rng.random() < 0.85 else pool[1])
            else:
                if anomalous:
                    v = rng.random()
                else:
                    v = min(max(profile[i] * scale + rng.gauss(0.0, 0.02), 0.0), 1.0)
                fields.append(f"{v:.4f}")
        label = rng.choice(ATTACKS) if anomalous else "normal"
        difficulty = rng.randint(1, 21)
        rows.append(",".join([*fields, label, str(difficulty)]))
    return rows


def write_nslkdd(path, n_rows, seed, anomaly_fraction=0.4):
    path.write_text("\n".join(synth_rows(n_rows, seed, anomaly_fraction)) + "\n")
    return path


@pytest.fixture
def make_dataset_file(tmp_path):
    """Factory writing synthetic NSL-KDD files into the test's tmp dir."""

    def _make(name="data.txt", n_rows=200, seed=1, anomaly_fraction=0.4):
        return write_nslkdd(tmp_path / name, n_rows, seed, anomaly_fraction)

    return _make
