"""Shared fixtures and independent linear-algebra oracles.

The kron helpers rebuild full 2^n operators from scratch so gate and
channel application code is checked against plain dense matrix algebra
rather than against itself.
"""

import numpy as np
import pytest

from toniq.qubo import QuboInstance, brute_force_solve

_RESULTS: list[tuple[int, str, bool, str]] = []


def record_criterion(index: int, label: str, ok: bool, detail: str) -> None:
    _RESULTS.append((index, label, ok, detail))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for index, label, ok, detail in sorted(_RESULTS):
        status = "PASS" if ok else "FAIL"
        terminalreporter.write_line(
            f"criterion {index:2d} {label}: {status} ({detail})"
        )


def kron_op(n: int, mat: np.ndarray, targets: tuple[int, ...]) -> np.ndarray:
    """Embed `mat` acting on `targets` into the full 2^n operator.

    Statevector index bit i is qubit i, so basis index k maps qubit q to
    bit (k >> q) & 1. Built entry by entry; slow but assumption-free.
    """
    d = 1 << n
    m = len(targets)
    full = np.zeros((d, d), dtype=complex)
    for col in range(d):
        tgt_in = sum(((col >> q) & 1) << j for j, q in enumerate(targets))
        for tgt_out in range(1 << m):
            amp = mat[tgt_out, tgt_in]
            if amp == 0:
                continue
            row = col
            for j, q in enumerate(targets):
                bit = (tgt_out >> j) & 1
                row = (row & ~(1 << q)) | (bit << q)
            full[row, col] += amp
    return full


def kraus_apply(rho: np.ndarray, ops, n: int, targets: tuple[int, ...]) -> np.ndarray:
    """sum_k K rho K^dagger with each Kraus operator embedded via kron_op."""
    out = np.zeros_like(rho)
    for k in ops:
        full = kron_op(n, np.asarray(k, dtype=complex), targets)
        out += full @ rho @ full.conj().T
    return out


def random_state(n: int, rng: np.random.Generator) -> np.ndarray:
    amp = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
    return amp / np.linalg.norm(amp)


def random_density(n: int, rng: np.random.Generator) -> np.ndarray:
    a = rng.normal(size=(1 << n, 1 << n)) + 1j * rng.normal(size=(1 << n, 1 << n))
    rho = a @ a.conj().T
    return rho / np.trace(rho).real


def make_instance(n: int, seed: int, id_: str | None = None) -> QuboInstance:
    rng = np.random.default_rng(seed)
    m = rng.uniform(-1.0, 1.0, size=(n, n))
    q = np.triu(m) + np.triu(m, 1).T
    energy, states, decs = brute_force_solve(q)
    return QuboInstance(
        id=id_ or f"test_n{n}_s{seed}",
        n=n,
        q=q,
        ground_energy=energy,
        ground_states=tuple(states),
        dec_states=tuple(decs),
        seed=seed,
    )


@pytest.fixture
def inst3() -> QuboInstance:
    return make_instance(3, 5)


@pytest.fixture
def inst4() -> QuboInstance:
    return make_instance(4, 9)
