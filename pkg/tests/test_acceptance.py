"""Acceptance criteria 1-9; each test records a PASS/FAIL line for the summary."""
import hashlib
import subprocess
import sys
import time
import warnings

import numpy as np
import pytest

from afree import catalog
from afree import exterior as ex
from afree import grid_measure as gm
from afree import multiplier as mp
from afree.errors import ConeDegenerate
from afree.operator_core import PdeOperator, principal_symbol
from afree.wavecone import constant_rank_check, in_wave_cone, kernel_basis

TWO_PI = 2 * np.pi


def well_conditioned(rng, rows, cols, ratio=0.1):
    while True:
        M = rng.standard_normal((rows, cols))
        s = np.linalg.svd(M, compute_uv=False)
        if s[-1] / s[0] > ratio:
            return M


# 1 -------------------------------------------------------------------------


def test_criterion_1_cone_closed_forms(criterion):
    start = time.perf_counter()
    worst_member, worst_non = 0.0, np.inf
    for d in (2, 3):
        op = catalog.curl_annihilator(d, 2).operator
        rng = np.random.default_rng(100 + d)
        for _ in range(500):
            v = np.outer(rng.standard_normal(2), rng.standard_normal(d)).ravel()
            worst_member = max(worst_member, in_wave_cone(op, v, tol=1e-8).residual)
        for _ in range(500):
            worst_non = min(worst_non, in_wave_cone(op, well_conditioned(rng, 2, d).ravel()).residual)
    div_res = [in_wave_cone(catalog.divergence_operator(d).operator, np.eye(d).ravel()).residual for d in (2, 3)]
    sv_ok = True
    for d in (2, 3):
        op = catalog.saint_venant(d).operator
        rng = np.random.default_rng(200 + d)
        for _ in range(20):
            a, xi = rng.standard_normal(d), rng.standard_normal(d)
            M = (np.outer(a, xi) + np.outer(xi, a)) / 2
            sv_ok &= in_wave_cone(op, catalog.sym_to_flat(M)).member
        sv_ok &= not in_wave_cone(op, catalog.sym_to_flat(np.eye(d))).member
    elapsed = time.perf_counter() - start
    ok = (
        worst_member <= 1e-8
        and worst_non >= 0.1
        and abs(div_res[0] - TWO_PI) <= 1e-4
        and sv_ok
        and elapsed <= 60
    )
    criterion(1, ok, f"member max {worst_member:.2e}, non-member min {worst_non:.3f}, "
                     f"div(I) {div_res[0]:.6f}/{div_res[1]:.6f}, saint-venant {sv_ok}, {elapsed:.1f}s")
    assert ok


# 2 -------------------------------------------------------------------------


def test_criterion_2_kernel_dimensions(criterion):
    rng = np.random.default_rng(2)
    bad = []
    for d in (2, 3):
        expected = {
            catalog.curl_annihilator(d, 2).operator: 2,
            catalog.saint_venant(d).operator: d,
            catalog.divergence_operator(d).operator: d * (d - 1),
        }
        for _ in range(100):
            xi = rng.standard_normal(d)
            xi /= np.linalg.norm(xi)
            for op, want in expected.items():
                got = len(kernel_basis(op, xi))
                if got != want:
                    bad.append((op.label, got, want))
    criterion(2, not bad, f"{len(bad)} mismatches over 100 unit xi per operator, d = 2, 3")
    assert not bad


# 3 -------------------------------------------------------------------------


def test_criterion_3_constant_rank(criterion):
    start = time.perf_counter()
    passes = [constant_rank_check(e.operator).constant for e in
              (catalog.curl_annihilator(2, 2), catalog.curl_annihilator(3, 2),
               catalog.divergence_operator(2), catalog.divergence_operator(3))]
    d1 = PdeOperator.from_terms(2, 1, 1, {(1, 0): [[1.0]]}, label="d1")
    prof = constant_rank_check(d1)
    witness = prof.violation_pair is not None and (
        abs(principal_symbol(d1, prof.violation_pair[0])[0, 0]) < 1e-8
        and abs(principal_symbol(d1, prof.violation_pair[1])[0, 0]) > 1.0
    )
    elapsed = time.perf_counter() - start
    ok = all(passes) and not prof.constant and witness and elapsed <= 10
    criterion(3, ok, f"curl/div constant {passes}, d1 ranks {prof.min_rank}..{prof.max_rank}, "
                     f"witness {witness}, {elapsed:.2f}s")
    assert ok


# 4 -------------------------------------------------------------------------


def test_criterion_4_non_simple_current(criterion):
    v = ex.KVector.basis_element(5, (0, 1)) + ex.KVector.basis_element(5, (2, 3))
    w = ex.annihilator_covector([v])
    err = float(np.abs(np.abs(w.coeffs) - [0, 0, 0, 0, 1]).max())
    simple = ex.is_simple(v)
    e = ex.KVector.exact(5, 2, v.coeffs.tolist())
    square = ex.wedge(e, e)
    exact_ok = square.is_exact and square == ex.KVector.basis_element(5, (0, 1, 2, 3), exact=True) * 2
    ok = err <= 1e-10 and not simple and exact_ok
    criterion(4, ok, f"annihilator error {err:.1e}, simple {simple}, exact square {ex.format_kvector(square).strip()}")
    assert ok


# 5 -------------------------------------------------------------------------


def scenarios():
    curl = catalog.curl_annihilator(2, 2).operator
    sv = catalog.saint_venant(2).operator
    div = catalog.divergence_operator(2).operator
    tau = [0.6, 0.8]
    return [
        ("bv-jump/curl", curl, gm.make_bv_jump(2, 2, [1.0, -2.0], tau, 0.1, cells=128), True),
        ("bd-jump/saint-venant", sv, gm.make_bd_jump(2, [-0.8, 0.6], tau, 0.1, cells=128), True),
        ("line/divergence", div,
         gm.make_flat_measure(2, np.outer([1.0, 2.0], tau).ravel(), [0.1, 0.0], [tau], cells=128), True),
        ("adversarial/divergence", div, gm.make_flat_measure(2, np.eye(2).ravel(), [0.1, 0.0], [tau], cells=128), False),
    ]


def test_criterion_5_structure_surrogate(criterion):
    start = time.perf_counter()
    ok = True
    parts = []
    for name, op, mu, free in scenarios():
        rep = gm.verify_polar_in_cone(op, mu, cone_tol=1e-4)
        frac = rep.mass_fraction_in_cone
        if free:
            ok &= frac >= 0.99 and rep.afree_residual <= rep.afree_gate
        else:
            ok &= frac <= 0.01
        parts.append(f"{name} frac {frac:.3f} res {rep.afree_residual:.1e}")
    elapsed = time.perf_counter() - start
    ok &= elapsed <= 300
    criterion(5, ok, "; ".join(parts) + f"; gate 10h = {gm.GATE_FACTOR * 2 / 128:.3f}; {elapsed:.1f}s")
    assert ok


# 6 -------------------------------------------------------------------------


def test_criterion_6_trace_free_polar(criterion):
    shares = []
    for a, n in [([0.0, 1.0], [1.0, 0.0]), ([-2.0, 0.0], [0.0, 1.0])]:
        tr, mass = gm.trace_profile(gm.make_bd_jump(2, a, n, 0.1, cells=128))
        shares.append(float(mass[tr <= 1e-6].sum() / mass.sum()))
    ok = min(shares) >= 0.99
    criterion(6, ok, f"trace-free singular mass share {[round(s, 6) for s in shares]}")
    assert ok


# 7 -------------------------------------------------------------------------


def test_criterion_7_proof_mechanics(criterion):
    curl = catalog.curl_annihilator(2, 2).operator
    eye = np.eye(2).ravel()
    out = mp.regularization_experiment(curl, eye, mp.Scenario(N=64))
    ident = max(r["identity_error"] for r in out["rows"])
    reg = mp.build_regularizer(curl, eye)
    rows = mp.spike_weak11_sequence(reg, eye, js=(0, 1, 2, 3), N=64)
    ratios = [r[3] for r in rows]
    stable = max(ratios) <= 2 * min(ratios)
    # d = 2, s = 1: bounded for p < 2
    below = mp.bessel_lp_sweep(2, 1.0, 1.5, Ns=(32, 64, 128, 256))
    incs = np.diff(below)
    bounded = bool(np.all(incs > 0) and np.all(incs[1:] <= 0.9 * incs[:-1]))
    above = mp.bessel_lp_sweep(2, 1.0, 2.5, Ns=(32, 64, 128, 256))
    ok = ident <= 1e-8 and stable and bounded
    criterion(7, ok, f"identity {ident:.1e}, weak-(1,1) C {min(ratios):.3f}..{max(ratios):.3f}, "
                     f"L^1.5 {[round(x, 3) for x in below]}, control L^2.5 {[round(x, 2) for x in above]}")
    assert ok


# 8 -------------------------------------------------------------------------


def dft2(values, sym, period):
    N = values.shape[0]
    n = np.arange(N)
    W = np.exp(-2j * np.pi * np.outer(n, n) / N)
    spec = np.einsum("ak,bl,klc->abc", W, W, values)
    f = np.where(n < (N + 1) // 2, n, n - N) / period
    xi = np.stack(np.meshgrid(f, f, indexing="ij"), axis=-1)
    spec = np.einsum("abij,abj->abi", sym(xi), spec)
    return np.einsum("ka,lb,abc->klc", W.conj() / N, W.conj() / N, spec)


def circle_sweep(op, v, count=1_000_000, chunk=100_000):
    """Minimum of the residual on an equispaced circle and a Lipschitz bound."""
    v = np.asarray(v, float) / np.abs(v).max()
    best, lip = np.inf, 0.0
    step = TWO_PI / count
    for s in range(0, count, chunk):
        t = step * np.arange(s, min(s + chunk, count) + 1)
        xi = np.stack([np.cos(t), np.sin(t)], axis=1)
        r = np.linalg.norm(principal_symbol(op, xi) @ v, axis=-1)
        best = min(best, float(r.min()))
        lip = max(lip, float(np.abs(np.diff(r)).max() / step))
    return best, lip * step / 2


def test_criterion_8_oracle_equivalence(criterion):
    curl = catalog.curl_annihilator(2, 2).operator
    eye = np.eye(2).ravel()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConeDegenerate)
        reg = mp.build_regularizer(curl, eye)
    specs = [mp.bessel_multiplier(0.8, 4), mp.operator_multiplier(curl), reg.T0, reg.T1, reg.T2, reg.m1, reg.m2]
    rng = np.random.default_rng(8)
    spec_err = 0.0
    for m in specs:
        f = mp.PeriodicField(2, m.c_in, 16, rng.standard_normal((16, 16, m.c_in)))
        spec_err = max(spec_err, float(np.abs(mp.apply_multiplier(f, m).values - dft2(f.values, m, f.period)).max()))
    # periodic convolution with the mollifier as a direct sum
    f = mp.PeriodicField(2, 1, 16, rng.standard_normal((16, 16, 1)))
    kern = mp.mollifier_kernel(mp.MollifierSpec("bump", 0.6), 2, 16)
    vals = f.values[..., 0]
    direct = np.zeros((16, 16), complex)
    for i in range(16):
        for j in range(16):
            direct[i, j] = np.sum(vals * kern[np.ix_((i - np.arange(16)) % 16, (j - np.arange(16)) % 16)])
    direct *= f.cell_volume
    got = mp.mollify(f, mp.MollifierSpec("bump", 0.6)).values[..., 0]
    spec_err = max(spec_err, float(np.abs(got - direct).max()))

    disagreements = 0
    checked = 0
    for entry in (catalog.curl_annihilator(2, 2), catalog.higher_gradient_annihilator(2, 1, 2),
                  catalog.saint_venant(2), catalog.divergence_operator(2), catalog.current_boundary_operator(2, [1])):
        vrng = np.random.default_rng(81)
        vectors = [entry.cone.sample_member(vrng) for _ in range(2)] + [vrng.standard_normal(entry.operator.m)]
        for v in vectors:
            sweep_min, slack = circle_sweep(entry.operator, v)
            verdict = in_wave_cone(entry.operator, v, tol=1e-6)
            oracle_member = sweep_min <= 1e-6 + slack
            checked += 1
            if oracle_member != verdict.member or verdict.residual > sweep_min + 1e-12:
                disagreements += 1
    ok = spec_err <= 1e-8 and disagreements == 0
    criterion(8, ok, f"spectral vs direct DFT max error {spec_err:.1e}; "
                     f"circle sweep disagreements {disagreements}/{checked}")
    assert ok


# 9 -------------------------------------------------------------------------


CLI_RUNS = [
    ["cone", "--op", "divergence:d=2", "--vector", "1,0,0,1", "--json"],
    ["constant-rank", "--op", "curl:d=3,l=2"],
    ["kvector", "annihilator", "5 2 1 0 0 0 0 0 0 1 0 0"],
    ["verify", "--op", "saint_venant:d=2", "--generator", "bd-jump:a=0,1;n=1,0", "--cells", "64", "--json"],
    ["blowup", "--generator", "bv-jump:a=1;n=0.6,0.8", "--cells", "64", "--x0", "0,0", "--r", "0.5"],
    ["multiplier", "demo", "--op", "curl:d=2,l=2", "--p0", "1,0,0,1", "--scenario", '{"N": 32, "js": [1, 2]}'],
]


@pytest.mark.slow
def test_criterion_9_cli_determinism(criterion, tmp_path):
    mismatched = []
    for args in CLI_RUNS:
        digests = set()
        for _ in range(2):
            proc = subprocess.run([sys.executable, "-m", "afree", *args], capture_output=True, cwd=tmp_path)
            digests.add((proc.returncode, hashlib.sha256(proc.stdout).hexdigest()))
        if len(digests) != 1:
            mismatched.append(args[0])
    ok = not mismatched
    criterion(9, ok, f"{len(CLI_RUNS)} subcommands run twice, mismatches {mismatched}")
    assert ok
